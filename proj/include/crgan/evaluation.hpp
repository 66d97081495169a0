#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crgan/mmd.hpp"
#include "crgan/rng.hpp"
#include "crgan/simulate.hpp"
#include "crgan/types.hpp"

namespace crgan {

// Fixed-edge histogram; out-of-range values clamp into the end bins and the
// clamp count is kept for reporting.
class Histogram {
 public:
  Histogram(std::vector<double> edges);
  static Histogram uniform(double lo, double hi, double bin_width);

  void add(double x);
  void add_all(const std::vector<double>& xs);
  std::vector<double> probabilities() const;  // P_i, sums to 1
  const std::vector<double>& counts() const { return counts_; }
  const std::vector<double>& edges() const { return edges_; }
  std::size_t bins() const { return counts_.size(); }
  long clamped() const { return clamped_; }
  double total() const { return total_; }
  // Index of the bin (lo, hi] containing x after clamping.
  std::size_t bin_index(double x) const;

 private:
  std::vector<double> edges_;
  std::vector<double> counts_;
  long clamped_ = 0;
  double total_ = 0.0;
};

// Closed-form one-shot discriminator on a shared partition:
// D_i = 1 / (1 + Q_i / P_i). Bins with no mass on either side are undefined;
// generated mass outside the data support is flagged.
struct DiscriminatorOracle {
  std::vector<double> score;        // D_i; 0 where undefined
  std::vector<bool> defined;        // P_i + Q_i > 0
  std::vector<std::size_t> support_violations;  // Q_i > 0 with P_i == 0
};
DiscriminatorOracle discrete_discriminator_oracle(const Histogram& P,
                                                  const Histogram& Q);

// sum_i Q_i ln(Q_i / P_i); Q_i = 0 contributes zero, Q_i > 0 with P_i = 0 is
// flagged instead of thrown.
struct KlResult {
  double value = 0.0;
  bool infinite = false;
};
KlResult histogram_kl(const Histogram& Q, const Histogram& P);

// e*_t = x_{t+1} - coeff * x_t pooled over every trajectory of the ensemble.
std::vector<double> recover_ar1_noise(const ForecastEnsemble& ensemble,
                                      double coeff = 0.8);
std::vector<double> series_ar1_noise(const Matrix& series, double coeff = 0.8);

// Delta_n x_t = x_{t+n} - x_t over the columns of a (d, T) series.
Matrix temporal_diff(const Matrix& series, Index n);

// Fraction of ground-truth points inside the per-trajectory intervals, for
// one dimension; intervals[i] pairs with truths[i] (d, horizon).
double ecp(const std::vector<PredictionInterval>& intervals,
           const std::vector<Matrix>& truths, Index dim);

// ECP at several levels plus the summary statistics reported with it.
struct CoverageTable {
  std::vector<double> levels;
  Matrix ecp_per_dim;          // (levels, d)
  std::vector<double> aecp;    // ECP averaged over dimensions, per level
  double sad(Index dim) const;
  double sad_aecp() const;
};
CoverageTable coverage_table(
    const std::vector<std::vector<PredictionInterval>>& per_level_intervals,
    const std::vector<Matrix>& truths, const std::vector<double>& levels);

// Lambda = MMD(model vs data) / MMD(reference vs data); sets must already be
// equal-size column samples of the same dimension.
struct MmdRatio {
  double value = 0.0;
  double model_mmd = 0.0;
  double reference_mmd = 0.0;
  bool degenerate = false;  // reference MMD is zero
};
MmdRatio mmd_ratio(const KernelSpec& kernel, const Matrix& model_samples,
                   const Matrix& reference_samples, const Matrix& data_samples);

// k columns drawn without replacement.
Matrix subsample_columns(const Matrix& samples, Index k, RngStream& rng);

// Product-Gaussian kernel density estimate on a uniform grid; bandwidths
// follow Scott's rule n^(-1/6) * sd per dimension.
struct Kde2d {
  Vector grid_x, grid_y;
  Matrix density;  // (ny, nx), density(iy, ix) at (grid_x[ix], grid_y[iy])
  double bandwidth_x = 0.0, bandwidth_y = 0.0;
};
Kde2d kde2d(const Matrix& samples2d, Index nx, Index ny, double pad_factor = 3.0);

// Experiment drivers shared by the CLI and the acceptance suite. A forecast
// callback hides which model produces the ensembles.
using ForecastFn =
    std::function<ForecastEnsemble(const Matrix& prefix, std::uint64_t seed)>;

// Evenly spaced forecast anchors s such that [s - prefix_len + 1, s] and
// [s + 1, s + horizon] both stay inside [region_begin, region_end).
std::vector<Index> protocol_starts(Index region_begin, Index region_end,
                                   Index starts, Index prefix_len,
                                   Index horizon);

// Coverage of the ground-truth continuation by per-anchor Monte Carlo
// prediction intervals at each requested level.
CoverageTable ecp_protocol(const ForecastFn& forecast, const Matrix& values,
                           Index region_begin, Index region_end, Index starts,
                           Index prefix_len, Index horizon,
                           const std::vector<double>& levels,
                           std::uint64_t seed);

// Pools Delta_order columns of one free-run trajectory per anchor.
Matrix diff_pool_protocol(const ForecastFn& forecast, const Matrix& values,
                          Index region_begin, Index region_end, Index starts,
                          Index prefix_len, Index horizon, Index order,
                          std::uint64_t seed);

}  // namespace crgan
