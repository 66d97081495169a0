#include "crgan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crgan {

Histogram::Histogram(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) throw ConfigError("Histogram: need at least 2 edges");
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) {
      throw ConfigError("Histogram: edges must be strictly increasing");
    }
  }
  counts_.assign(edges_.size() - 1, 0.0);
}

Histogram Histogram::uniform(double lo, double hi, double bin_width) {
  if (!(hi > lo) || !(bin_width > 0)) {
    throw ConfigError("Histogram::uniform: bad range");
  }
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / bin_width));
  if (n < 1 || std::abs(lo + static_cast<double>(n) * bin_width - hi) > 1e-9) {
    throw ConfigError("Histogram::uniform: width must divide the range");
  }
  std::vector<double> edges(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    edges[i] = lo + static_cast<double>(i) * bin_width;
  }
  edges.back() = hi;
  return Histogram(std::move(edges));
}

std::size_t Histogram::bin_index(double x) const {
  // Bins are (lo, hi]; values at or below the first edge clamp into bin 0.
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), x);
  if (it == edges_.begin()) return 0;
  if (it == edges_.end()) return counts_.size() - 1;
  return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

void Histogram::add(double x) {
  if (x <= edges_.front() || x > edges_.back()) ++clamped_;
  counts_[bin_index(x)] += 1.0;
  total_ += 1.0;
}

void Histogram::add_all(const std::vector<double>& xs) {
  for (double x : xs) add(x);
}

std::vector<double> Histogram::probabilities() const {
  std::vector<double> p(counts_.size(), 0.0);
  if (total_ <= 0) return p;
  for (std::size_t i = 0; i < counts_.size(); ++i) p[i] = counts_[i] / total_;
  return p;
}

DiscriminatorOracle discrete_discriminator_oracle(const Histogram& P,
                                                  const Histogram& Q) {
  if (P.edges() != Q.edges()) {
    throw ConfigError("discrete_discriminator_oracle: partitions differ");
  }
  const std::vector<double> p = P.probabilities();
  const std::vector<double> q = Q.probabilities();
  DiscriminatorOracle out;
  out.score.assign(p.size(), 0.0);
  out.defined.assign(p.size(), false);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0 && q[i] == 0.0) continue;
    out.defined[i] = true;
    if (p[i] == 0.0) {
      out.support_violations.push_back(i);
      out.score[i] = 0.0;  // limit of 1 / (1 + Q/P) as P -> 0+
    } else {
      out.score[i] = 1.0 / (1.0 + q[i] / p[i]);
    }
  }
  return out;
}

KlResult histogram_kl(const Histogram& Q, const Histogram& P) {
  if (P.edges() != Q.edges()) {
    throw ConfigError("histogram_kl: partitions differ");
  }
  const std::vector<double> p = P.probabilities();
  const std::vector<double> q = Q.probabilities();
  KlResult out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) continue;
    if (p[i] == 0.0) {
      out.infinite = true;
      continue;
    }
    out.value += q[i] * std::log(q[i] / p[i]);
  }
  if (out.infinite) out.value = std::numeric_limits<double>::infinity();
  return out;
}

std::vector<double> recover_ar1_noise(const ForecastEnsemble& ensemble,
                                      double coeff) {
  if (ensemble.horizon < 2) {
    throw ConfigError("recover_ar1_noise: horizon must be >= 2");
  }
  if (ensemble.x_dim != 1) {
    throw ConfigError("recover_ar1_noise: expects a scalar process");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(ensemble.size() * (ensemble.horizon - 1)));
  for (const Matrix& traj : ensemble.trajectories) {
    for (Index t = 0; t + 1 < ensemble.horizon; ++t) {
      out.push_back(traj(0, t + 1) - coeff * traj(0, t));
    }
  }
  return out;
}

std::vector<double> series_ar1_noise(const Matrix& series, double coeff) {
  if (series.rows() != 1 || series.cols() < 2) {
    throw ConfigError("series_ar1_noise: expects a scalar series");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(series.cols() - 1));
  for (Index t = 0; t + 1 < series.cols(); ++t) {
    out.push_back(series(0, t + 1) - coeff * series(0, t));
  }
  return out;
}

Matrix temporal_diff(const Matrix& series, Index n) {
  if (n < 1 || n >= series.cols()) {
    throw ConfigError("temporal_diff: order " + std::to_string(n) +
                      " for series length " + std::to_string(series.cols()));
  }
  return series.rightCols(series.cols() - n) - series.leftCols(series.cols() - n);
}

double ecp(const std::vector<PredictionInterval>& intervals,
           const std::vector<Matrix>& truths, Index dim) {
  if (intervals.size() != truths.size() || intervals.empty()) {
    throw ConfigError("ecp: intervals and truths must pair up");
  }
  double covered = 0.0, total = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& pi = intervals[i];
    const auto& truth = truths[i];
    if (truth.rows() != pi.lower.rows() || truth.cols() != pi.lower.cols()) {
      throw DimensionError("ecp: truth " + shape_str(truth) +
                           " against intervals " + shape_str(pi.lower));
    }
    for (Index t = 0; t < truth.cols(); ++t) {
      const double v = truth(dim, t);
      covered += (v >= pi.lower(dim, t) && v <= pi.upper(dim, t)) ? 1.0 : 0.0;
      total += 1.0;
    }
  }
  return covered / total;
}

double CoverageTable::sad(Index dim) const {
  double s = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    s += std::abs(ecp_per_dim(static_cast<Index>(i), dim) - levels[i]);
  }
  return s;
}

double CoverageTable::sad_aecp() const {
  double s = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    s += std::abs(aecp[i] - levels[i]);
  }
  return s;
}

CoverageTable coverage_table(
    const std::vector<std::vector<PredictionInterval>>& per_level_intervals,
    const std::vector<Matrix>& truths, const std::vector<double>& levels) {
  if (per_level_intervals.size() != levels.size() || levels.empty()) {
    throw ConfigError("coverage_table: one interval set per level required");
  }
  const Index d = truths.at(0).rows();
  CoverageTable table;
  table.levels = levels;
  table.ecp_per_dim.resize(static_cast<Index>(levels.size()), d);
  table.aecp.assign(levels.size(), 0.0);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (Index i = 0; i < d; ++i) {
      const double e = ecp(per_level_intervals[l], truths, i);
      table.ecp_per_dim(static_cast<Index>(l), i) = e;
      table.aecp[l] += e / static_cast<double>(d);
    }
  }
  return table;
}

MmdRatio mmd_ratio(const KernelSpec& kernel, const Matrix& model_samples,
                   const Matrix& reference_samples, const Matrix& data_samples) {
  if (model_samples.cols() != data_samples.cols() ||
      reference_samples.cols() != data_samples.cols()) {
    throw ConfigError("mmd_ratio: subsample sizes must match");
  }
  MmdRatio out;
  out.model_mmd = mmd_biased(kernel, data_samples, model_samples);
  out.reference_mmd = mmd_biased(kernel, data_samples, reference_samples);
  if (out.reference_mmd == 0.0) {
    out.degenerate = true;
    out.value = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.value = out.model_mmd / out.reference_mmd;
  }
  return out;
}

Matrix subsample_columns(const Matrix& samples, Index k, RngStream& rng) {
  const Index n = samples.cols();
  if (k > n) {
    throw ConfigError("subsample_columns: requested " + std::to_string(k) +
                      " of " + std::to_string(n));
  }
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < k; ++i) {
    const auto j =
        i + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  Matrix out(samples.rows(), k);
  for (Index i = 0; i < k; ++i) {
    out.col(i) = samples.col(idx[static_cast<std::size_t>(i)]);
  }
  return out;
}

Kde2d kde2d(const Matrix& samples2d, Index nx, Index ny, double pad_factor) {
  if (samples2d.rows() != 2) {
    throw ConfigError("kde2d: expects 2 x N samples, got " +
                      shape_str(samples2d));
  }
  const Index n = samples2d.cols();
  if (n < 100) throw ConfigError("kde2d: need at least 100 samples");
  if (nx < 2 || ny < 2) throw ConfigError("kde2d: grid too small");

  const Vector mean = samples2d.rowwise().mean();
  const Vector sd =
      ((samples2d.colwise() - mean).array().square().rowwise().sum() /
       static_cast<double>(n - 1))
          .sqrt();
  for (Index i = 0; i < 2; ++i) {
    if (!(sd[i] > 0)) {
      throw ConfigError("kde2d: dimension " + std::to_string(i) +
                        " is degenerate");
    }
  }
  const double scott = std::pow(static_cast<double>(n), -1.0 / 6.0);

  Kde2d out;
  out.bandwidth_x = scott * sd[0];
  out.bandwidth_y = scott * sd[1];

  const double lo_x = samples2d.row(0).minCoeff() - pad_factor * out.bandwidth_x;
  const double hi_x = samples2d.row(0).maxCoeff() + pad_factor * out.bandwidth_x;
  const double lo_y = samples2d.row(1).minCoeff() - pad_factor * out.bandwidth_y;
  const double hi_y = samples2d.row(1).maxCoeff() + pad_factor * out.bandwidth_y;
  out.grid_x = Vector::LinSpaced(nx, lo_x, hi_x);
  out.grid_y = Vector::LinSpaced(ny, lo_y, hi_y);

  // Separable product kernel: accumulate K_y * K_x^T over the samples in one
  // pair of (grid, sample) kernel matrices.
  Matrix kx(nx, n), ky(ny, n);
  const double inv_hx2 = 1.0 / (2.0 * out.bandwidth_x * out.bandwidth_x);
  const double inv_hy2 = 1.0 / (2.0 * out.bandwidth_y * out.bandwidth_y);
  for (Index j = 0; j < n; ++j) {
    kx.col(j) =
        (-(out.grid_x.array() - samples2d(0, j)).square() * inv_hx2).exp();
    ky.col(j) =
        (-(out.grid_y.array() - samples2d(1, j)).square() * inv_hy2).exp();
  }
  const double norm = 1.0 / (2.0 * M_PI * out.bandwidth_x * out.bandwidth_y *
                             static_cast<double>(n));
  out.density = ky * kx.transpose();
  out.density *= norm;
  return out;
}

std::vector<Index> protocol_starts(Index region_begin, Index region_end,
                                   Index starts, Index prefix_len,
                                   Index horizon) {
  const Index first = region_begin + prefix_len - 1;
  const Index last = region_end - 1 - horizon;
  if (starts < 1 || last < first) {
    throw ConfigError("protocol_starts: region [" +
                      std::to_string(region_begin) + ", " +
                      std::to_string(region_end) +
                      ") cannot host prefix+horizon " +
                      std::to_string(prefix_len + horizon));
  }
  std::vector<Index> anchors(static_cast<std::size_t>(starts));
  if (starts == 1) {
    anchors[0] = first;
    return anchors;
  }
  const double step = static_cast<double>(last - first) /
                      static_cast<double>(starts - 1);
  for (Index i = 0; i < starts; ++i) {
    anchors[static_cast<std::size_t>(i)] =
        first + static_cast<Index>(std::llround(step * static_cast<double>(i)));
  }
  return anchors;
}

CoverageTable ecp_protocol(const ForecastFn& forecast, const Matrix& values,
                           Index region_begin, Index region_end, Index starts,
                           Index prefix_len, Index horizon,
                           const std::vector<double>& levels,
                           std::uint64_t seed) {
  const std::vector<Index> anchors =
      protocol_starts(region_begin, region_end, starts, prefix_len, horizon);
  RngStream root(seed);
  std::vector<std::vector<PredictionInterval>> per_level(
      levels.size(), std::vector<PredictionInterval>());
  std::vector<Matrix> truths;
  truths.reserve(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Index s = anchors[i];
    const Matrix prefix = values.middleCols(s - prefix_len + 1, prefix_len);
    const ForecastEnsemble ens =
        forecast(prefix, root.child(static_cast<std::uint64_t>(i)).next_u64());
    for (std::size_t l = 0; l < levels.size(); ++l) {
      per_level[l].push_back(prediction_interval(ens, levels[l]));
    }
    truths.push_back(values.middleCols(s + 1, horizon));
  }
  return coverage_table(per_level, truths, levels);
}

Matrix diff_pool_protocol(const ForecastFn& forecast, const Matrix& values,
                          Index region_begin, Index region_end, Index starts,
                          Index prefix_len, Index horizon, Index order,
                          std::uint64_t seed) {
  if (order >= horizon) {
    throw ConfigError("diff_pool_protocol: order must be below the horizon");
  }
  const std::vector<Index> anchors =
      protocol_starts(region_begin, region_end, starts, prefix_len, horizon);
  RngStream root(seed);
  const Index per_traj = horizon - order;
  Matrix pool(values.rows(), static_cast<Index>(anchors.size()) * per_traj);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Index s = anchors[i];
    const Matrix prefix = values.middleCols(s - prefix_len + 1, prefix_len);
    const ForecastEnsemble ens =
        forecast(prefix, root.child(static_cast<std::uint64_t>(i)).next_u64());
    if (ens.size() != 1) {
      throw ConfigError("diff_pool_protocol: expected single-trajectory "
                        "ensembles");
    }
    pool.middleCols(static_cast<Index>(i) * per_traj, per_traj) =
        temporal_diff(ens.trajectories[0], order);
  }
  return pool;
}

}  // namespace crgan
