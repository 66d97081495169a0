#include "crgan/gradcheck.hpp"

#include <cmath>

namespace crgan {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel);
  return worst;
}

double GradCheckReport::max_abs_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_abs);
  return worst;
}

std::string GradCheckReport::worst_param() const {
  double worst = -1.0;
  std::string name;
  for (const auto& e : entries) {
    if (e.max_rel > worst) {
      worst = e.max_rel;
      name = e.param;
    }
  }
  return name;
}

GradCheckReport grad_check(const std::function<double()>& loss_fwd_bwd,
                           const std::vector<Param*>& params, double fd_step,
                           double rel_floor) {
  for (Param* p : params) p->zero_grad();
  loss_fwd_bwd();
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    GradCheckEntry entry;
    entry.param = p.name;
    for (Index idx = 0; idx < p.value.size(); ++idx) {
      const double saved = p.value.data()[idx];

      p.value.data()[idx] = saved + fd_step;
      for (Param* q : params) q->zero_grad();
      const double up = loss_fwd_bwd();

      p.value.data()[idx] = saved - fd_step;
      for (Param* q : params) q->zero_grad();
      const double down = loss_fwd_bwd();

      p.value.data()[idx] = saved;
      const double numeric = (up - down) / (2.0 * fd_step);
      const double a = analytic[pi].data()[idx];
      const double abs_err = std::abs(a - numeric);
      const double rel =
          abs_err / std::max({std::abs(a), std::abs(numeric), rel_floor});
      entry.max_abs = std::max(entry.max_abs, abs_err);
      entry.max_rel = std::max(entry.max_rel, rel);
    }
    report.entries.push_back(std::move(entry));
  }
  for (Param* p : params) p->zero_grad();
  return report;
}

}  // namespace crgan
