#include "crgan/models.hpp"

#include <cmath>

namespace crgan {
namespace {

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) {
    throw DimensionError("vstack: " + shape_str(top) + " over " +
                         shape_str(bottom));
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace

Scaler::Scaler(Vector minimum, Vector maximum)
    : min_(std::move(minimum)), max_(std::move(maximum)) {
  if (min_.size() != max_.size() || !((max_ - min_).array() > 0).all()) {
    throw ConfigError("Scaler: need max > min per dimension");
  }
}

Scaler Scaler::fit(const Matrix& series) {
  if (series.cols() < 2) throw ConfigError("Scaler::fit: series too short");
  Vector lo = series.rowwise().minCoeff();
  Vector hi = series.rowwise().maxCoeff();
  for (Index i = 0; i < lo.size(); ++i) {
    if (!(hi[i] > lo[i])) {
      throw ConfigError("Scaler::fit: dimension " + std::to_string(i) +
                        " is degenerate (min == max == " +
                        std::to_string(lo[i]) + ")");
    }
  }
  return Scaler(std::move(lo), std::move(hi));
}

Matrix Scaler::scale(const Matrix& x) const {
  if (x.rows() != dim()) {
    throw DimensionError("Scaler::scale: input " + shape_str(x) +
                         " for dimension " + std::to_string(dim()));
  }
  return ((x.colwise() - min_).array().colwise() / (max_ - min_).array())
      .matrix();
}

Matrix Scaler::unscale(const Matrix& x) const {
  if (x.rows() != dim()) {
    throw DimensionError("Scaler::unscale: input " + shape_str(x) +
                         " for dimension " + std::to_string(dim()));
  }
  return ((x.array().colwise() * (max_ - min_).array()).matrix().colwise() +
          min_);
}

Generator::Generator(const ModelConfig& cfg)
    : x_dim_(cfg.x_dim),
      psi_("gen.psi", cfg.x_dim, cfg.hidden_dim),
      head_("gen.head",
            {cfg.x_dim + cfg.hidden_dim, cfg.hidden_dim, cfg.hidden_dim,
             cfg.x_dim},
            {Activation::Tanh, Activation::Tanh, Activation::Sigmoid}) {}

void Generator::init_params(RngStream& rng) {
  psi_.init_params(rng);
  head_.init_params(rng);
}

Matrix Generator::sample(const GruState& state, RngStream& rng, bool cache) {
  return sample_with_z(state, rng.normal_matrix(x_dim_, state.h2.cols()), cache);
}

Matrix Generator::sample_with_z(const GruState& state, const Matrix& z,
                                bool cache) {
  if (z.rows() != x_dim_ || z.cols() != state.h2.cols()) {
    throw DimensionError("Generator::sample: z " + shape_str(z) +
                         " against state " + shape_str(state.h2));
  }
  return head_.forward(vstack(z, state.h2), cache);
}

std::vector<Param*> Generator::params() {
  std::vector<Param*> out = psi_.params();
  for (Param* p : head_.params()) out.push_back(p);
  return out;
}

Discriminator::Discriminator(const ModelConfig& cfg)
    : x_dim_(cfg.x_dim),
      psi_("dis.psi", cfg.x_dim, cfg.hidden_dim),
      head_("dis.head",
            {cfg.x_dim + cfg.hidden_dim, cfg.hidden_dim, cfg.hidden_dim, 1},
            {Activation::Tanh, Activation::Tanh, Activation::Identity}) {}

void Discriminator::init_params(RngStream& rng) {
  psi_.init_params(rng);
  head_.init_params(rng);
}

Matrix Discriminator::score_logit(const GruState& state,
                                  const Matrix& x_candidate, bool cache) {
  if (x_candidate.rows() != x_dim_ || x_candidate.cols() != state.h2.cols()) {
    throw DimensionError("Discriminator::score: candidate " +
                         shape_str(x_candidate) + " against state " +
                         shape_str(state.h2));
  }
  return head_.forward(vstack(x_candidate, state.h2), cache);
}

Matrix Discriminator::score(const GruState& state, const Matrix& x_candidate) {
  return sigmoid(score_logit(state, x_candidate, false));
}

std::vector<Param*> Discriminator::params() {
  std::vector<Param*> out = psi_.params();
  for (Param* p : head_.params()) out.push_back(p);
  return out;
}

MarginalDiscriminator::MarginalDiscriminator(Index x_dim, Index hidden_dim)
    : x_dim_(x_dim),
      head_("marg.head", {x_dim, hidden_dim, hidden_dim, 1},
            {Activation::Tanh, Activation::Tanh, Activation::Identity}) {}

void MarginalDiscriminator::init_params(RngStream& rng) {
  head_.init_params(rng);
}

Matrix MarginalDiscriminator::score_logit(const Matrix& dx, bool cache) {
  if (dx.rows() != x_dim_) {
    throw DimensionError("MarginalDiscriminator: input " + shape_str(dx) +
                         " for dimension " + std::to_string(x_dim_));
  }
  return head_.forward(dx, cache);
}

Matrix MarginalDiscriminator::score(const Matrix& dx) {
  return sigmoid(score_logit(dx, false));
}

std::vector<Param*> MarginalDiscriminator::params() { return head_.params(); }

GaussianRnn::GaussianRnn(const ModelConfig& cfg)
    : x_dim_(cfg.x_dim),
      psi_("rnn.psi", cfg.x_dim, cfg.hidden_dim),
      mean_head_("rnn.mean", cfg.hidden_dim, cfg.x_dim),
      log_var_head_("rnn.log_var", cfg.hidden_dim, cfg.x_dim) {}

void GaussianRnn::init_params(RngStream& rng) {
  psi_.init_params(rng);
  mean_head_.init_params(rng);
  log_var_head_.init_params(rng);
}

Matrix GaussianRnn::mean(const GruState& state, bool cache) {
  return mean_head_.forward(state.h2, cache);
}

Matrix GaussianRnn::log_var(const GruState& state, bool cache) {
  return log_var_head_.forward(state.h2, cache);
}

Matrix GaussianRnn::sample(const GruState& state, RngStream& rng) {
  const Matrix mu = mean(state, false);
  const Matrix lv = log_var(state, false);
  Matrix zeta = rng.normal_matrix(mu.rows(), mu.cols());
  return mu.array() + (lv.array() / 2.0).exp() * zeta.array();
}

double GaussianRnn::nll(const Matrix& sequence, bool backprop) {
  if (sequence.rows() != x_dim_ || sequence.cols() < 2) {
    throw DimensionError("GaussianRnn::nll: sequence " + shape_str(sequence));
  }
  const Index steps = sequence.cols() - 1;
  GruState state;
  state.reset(hidden_dim(), 1, backprop);

  constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
  double total = 0.0;
  std::vector<Matrix> d_mu, d_lv;
  const double denom = static_cast<double>(steps) * static_cast<double>(x_dim_);

  for (Index t = 1; t <= steps; ++t) {
    psi_.forward(state, sequence.col(t - 1));
    const Matrix mu = mean(state, backprop);
    const Matrix lv = log_var(state, backprop);
    const auto residual = sequence.col(t).array() - mu.array();
    const auto inv_var = (-lv.array()).exp();
    total += 0.5 * (kLog2Pi + lv.array() + residual.square() * inv_var).sum();
    if (backprop) {
      d_mu.push_back((-residual * inv_var / denom).matrix());
      d_lv.push_back((0.5 * (1.0 - residual.square() * inv_var) / denom).matrix());
    }
  }
  const double loss = total / denom;
  if (!std::isfinite(loss)) {
    throw NumericError("GaussianRnn::nll: non-finite loss");
  }
  if (backprop) {
    std::vector<Matrix> dh(steps);
    for (Index t = steps; t-- > 0;) {
      Matrix g = mean_head_.backward(d_mu[t]);
      g += log_var_head_.backward(d_lv[t]);
      dh[t] = std::move(g);
    }
    psi_.bptt(state, dh);
  }
  return loss;
}

std::vector<Param*> GaussianRnn::params() {
  std::vector<Param*> out = psi_.params();
  out.push_back(&mean_head_.param());
  out.push_back(&log_var_head_.param());
  return out;
}

}  // namespace crgan
