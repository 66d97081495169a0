#pragma once

#include <functional>
#include <string>
#include <vector>

#include "crgan/param.hpp"

namespace crgan {

struct GradCheckEntry {
  std::string param;
  double max_rel = 0.0;
  double max_abs = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error() const;
  double max_abs_error() const;
  std::string worst_param() const;
};

// Compares the analytic gradients produced by loss_fwd_bwd (a deterministic
// closure that zeroes nothing itself, computes the loss, and accumulates into
// the params' grads) against central finite differences of the loss value.
// Relative error uses max(|analytic|, |numeric|, rel_floor) as denominator.
GradCheckReport grad_check(const std::function<double()>& loss_fwd_bwd,
                           const std::vector<Param*>& params,
                           double fd_step = 1e-5, double rel_floor = 1e-3);

}  // namespace crgan
