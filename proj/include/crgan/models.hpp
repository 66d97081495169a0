#pragma once

#include "crgan/gru.hpp"

namespace crgan {

// Per-dimension min/max mapping of a series onto the unit hypercube.
class Scaler {
 public:
  Scaler() = default;
  Scaler(Vector minimum, Vector maximum);

  // series is (d, T); every dimension must have a nonzero range.
  static Scaler fit(const Matrix& series);

  Matrix scale(const Matrix& x) const;
  Matrix unscale(const Matrix& x) const;

  bool fitted() const { return min_.size() > 0; }
  Index dim() const { return min_.size(); }
  const Vector& minimum() const { return min_; }
  const Vector& maximum() const { return max_; }

 private:
  Vector min_, max_;
};

struct ModelConfig {
  Index x_dim = 1;
  Index hidden_dim = 128;
};

// Recurrent sampler: the stack tracks the conditioning prefix, the head maps
// (z, h) to a sample in the open unit hypercube. Advancing the state is the
// caller's move, so conditioning on data or on own samples stays explicit.
class Generator {
 public:
  explicit Generator(const ModelConfig& cfg);

  void init_params(RngStream& rng);
  void advance(GruState& state, const Matrix& x) const { psi_.forward(state, x); }
  // Draws z ~ N(0, I) from rng, one column per state column.
  Matrix sample(const GruState& state, RngStream& rng, bool cache = false);
  Matrix sample_with_z(const GruState& state, const Matrix& z, bool cache = false);

  GruStack& psi() { return psi_; }
  const GruStack& psi() const { return psi_; }
  Mlp& head() { return head_; }
  std::vector<Param*> params();

  Index x_dim() const { return x_dim_; }
  Index z_dim() const { return x_dim_; }  // random input matches the state dim
  Index hidden_dim() const { return psi_.hidden_dim(); }

 private:
  Index x_dim_;
  GruStack psi_;
  Mlp head_;
};

// Recurrent critic: the state advances only on data via advance(); scoring a
// candidate never mutates the state, so data and sample are judged against
// the same conditioning.
class Discriminator {
 public:
  explicit Discriminator(const ModelConfig& cfg);

  void init_params(RngStream& rng);
  void advance(GruState& state, const Matrix& x) const { psi_.forward(state, x); }
  // Raw head output; score = sigmoid(logit). Losses evaluate log-terms from
  // the logit so they stay finite even in saturation.
  Matrix score_logit(const GruState& state, const Matrix& x_candidate,
                     bool cache = false);
  Matrix score(const GruState& state, const Matrix& x_candidate);

  GruStack& psi() { return psi_; }
  Mlp& head() { return head_; }
  std::vector<Param*> params();
  Index x_dim() const { return x_dim_; }
  Index hidden_dim() const { return psi_.hidden_dim(); }

 private:
  Index x_dim_;
  GruStack psi_;
  Mlp head_;
};

// Stateless feed-forward critic for temporal-difference marginals.
class MarginalDiscriminator {
 public:
  MarginalDiscriminator(Index x_dim, Index hidden_dim);

  void init_params(RngStream& rng);
  Matrix score_logit(const Matrix& dx, bool cache = false);
  Matrix score(const Matrix& dx);

  Mlp& head() { return head_; }
  std::vector<Param*> params();
  Index x_dim() const { return x_dim_; }

 private:
  Index x_dim_;
  Mlp head_;
};

// Recurrent per-step Gaussian with diagonal covariance: linear heads emit the
// mean and log-variance of x_t given the state.
class GaussianRnn {
 public:
  explicit GaussianRnn(const ModelConfig& cfg);

  void init_params(RngStream& rng);
  void advance(GruState& state, const Matrix& x) const { psi_.forward(state, x); }
  Matrix mean(const GruState& state, bool cache = false);
  Matrix log_var(const GruState& state, bool cache = false);
  // Draws x* = mean + exp(log_var / 2) .* zeta, zeta ~ N(0, I).
  Matrix sample(const GruState& state, RngStream& rng);

  // Mean Gaussian negative log-likelihood of a scaled sequence (d, T) under
  // teacher forcing from a zero state. Optionally backpropagates.
  double nll(const Matrix& sequence, bool backprop = false);

  GruStack& psi() { return psi_; }
  LinearLayer& mean_head() { return mean_head_; }
  LinearLayer& log_var_head() { return log_var_head_; }
  std::vector<Param*> params();
  Index x_dim() const { return x_dim_; }
  Index hidden_dim() const { return psi_.hidden_dim(); }

 private:
  Index x_dim_;
  GruStack psi_;
  LinearLayer mean_head_;
  LinearLayer log_var_head_;
};

}  // namespace crgan
