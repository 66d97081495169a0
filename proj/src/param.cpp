#include "crgan/param.hpp"

#include <cmath>

namespace crgan {

Param::Param(std::string name_, Index rows, Index cols)
    : name(std::move(name_)),
      value(Matrix::Zero(rows, cols)),
      grad(Matrix::Zero(rows, cols)),
      adam_m(Matrix::Zero(rows, cols)),
      adam_v(Matrix::Zero(rows, cols)) {
  if (rows <= 0 || cols <= 0) {
    throw ConfigError("Param " + name + ": dimensions must be positive");
  }
}

void init_uniform(Eigen::Ref<Matrix> weights, RngStream& rng, Index fan_in,
                  Index fan_out) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Index c = 0; c < weights.cols(); ++c) {
    for (Index r = 0; r < weights.rows(); ++r) {
      weights(r, c) = s * (2.0 * rng.uniform() - 1.0);
    }
  }
}

double cosine_lr(long k, long k_max, double lr_max, double lr_min) {
  if (k_max <= 0) throw ConfigError("cosine_lr: k_max must be positive");
  if (k < 0 || k > k_max) {
    throw ConfigError("cosine_lr: k=" + std::to_string(k) + " outside [0, " +
                      std::to_string(k_max) + "]");
  }
  if (!(lr_max >= lr_min) || !(lr_min > 0)) {
    throw ConfigError("cosine_lr: need lr_max >= lr_min > 0");
  }
  const double phase = M_PI * static_cast<double>(k) / static_cast<double>(k_max);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

void adam_step(Param& p, double lr, double beta1, double beta2, double eps) {
  if (!p.grad.allFinite()) {
    throw NumericError("adam_step: non-finite gradient in parameter " + p.name);
  }
  p.step_count += 1;
  const double t = static_cast<double>(p.step_count);
  const double corr1 = 1.0 - std::pow(beta1, t);
  const double corr2 = 1.0 - std::pow(beta2, t);

  p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * p.grad;
  p.adam_v.array() =
      beta2 * p.adam_v.array() + (1.0 - beta2) * p.grad.array().square();
  p.value.array() -= lr * (p.adam_m.array() / corr1) /
                     ((p.adam_v.array() / corr2).sqrt() + eps);
  p.grad.setZero();
}

AdamOptimizer::AdamOptimizer(std::vector<Param*> params, double clip_norm_)
    : clip_norm(clip_norm_), params_(std::move(params)) {}

double AdamOptimizer::grad_norm() const {
  double sq = 0.0;
  for (const Param* p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

bool AdamOptimizer::step(double lr) {
  bool clipped = false;
  if (clip_norm > 0) {
    const double norm = grad_norm();
    if (norm > clip_norm) {
      const double scale = clip_norm / norm;
      for (Param* p : params_) p->grad *= scale;
      clipped = true;
    }
  }
  for (Param* p : params_) adam_step(*p, lr, beta1, beta2, eps);
  return clipped;
}

}  // namespace crgan
