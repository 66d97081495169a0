#pragma once

#include <string>
#include <vector>

#include "crgan/rng.hpp"
#include "crgan/types.hpp"

namespace crgan {

// A trainable matrix together with its gradient and Adam accumulators.
// All four matrices share one shape; the accumulators start at zero.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
  long step_count = 0;

  Param(std::string name_, Index rows, Index cols);

  Index rows() const { return value.rows(); }
  Index cols() const { return value.cols(); }
  void zero_grad() { grad.setZero(); }
};

// In-place uniform(-s, s) fill with s = sqrt(6 / (fan_in + fan_out)).
void init_uniform(Eigen::Ref<Matrix> weights, RngStream& rng, Index fan_in,
                  Index fan_out);

// lr_min + (lr_max - lr_min) * (1 + cos(pi k / k_max)) / 2 for 0 <= k <= k_max.
double cosine_lr(long k, long k_max, double lr_max, double lr_min);

// Bias-corrected Adam update in place; zeroes the gradient and bumps
// step_count. Throws NumericError naming the parameter on non-finite grads.
void adam_step(Param& p, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Updates one parameter group, clipping the group's global gradient norm
// before the per-parameter Adam updates.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(std::vector<Param*> params, double clip_norm = 5.0);

  // Returns true when the clip threshold was hit this step.
  bool step(double lr);

  double grad_norm() const;
  std::vector<Param*>& params() { return params_; }

  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;

 private:
  std::vector<Param*> params_;
};

}  // namespace crgan
