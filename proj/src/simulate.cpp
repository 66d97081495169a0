#include "crgan/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace crgan {
namespace {

constexpr Index kTrajectoryBlock = 64;

// Rollout body shared by both model kinds; Sampler draws the next scaled
// sample from the state and per-trajectory streams.
template <typename Advance, typename Sampler>
ForecastEnsemble run_forecast(Index hidden_dim, Index x_dim,
                              const Scaler& scaler, const Matrix& prefix,
                              Index n_samples, Index horizon,
                              std::uint64_t seed, int num_threads,
                              const Advance& advance, const Sampler& draw) {
  if (prefix.cols() < 1) throw ConfigError("forecast: empty prefix");
  if (prefix.rows() != x_dim) {
    throw DimensionError("forecast: prefix " + shape_str(prefix) +
                         " for model dimension " + std::to_string(x_dim));
  }
  if (n_samples < 1 || horizon < 1) {
    throw ConfigError("forecast: need n_samples >= 1 and horizon >= 1");
  }

  const Matrix scaled_prefix = scaler.scale(prefix);

  // Warm-up is done once on a single column; trajectory count cannot touch it.
  GruState warm;
  warm.reset(hidden_dim, 1, false);
  for (Index t = 0; t < scaled_prefix.cols(); ++t) {
    advance(warm, scaled_prefix.col(t));
  }

  ForecastEnsemble out;
  out.trajectories.resize(static_cast<std::size_t>(n_samples));
  out.horizon = horizon;
  out.x_dim = x_dim;
  out.seed = seed;

  RngStream root(seed);
  const auto run_block = [&](Index j0, Index width) {
    GruState state;
    state.reset(hidden_dim, width, false);
    state.h1 = warm.h1.replicate(1, width);
    state.h2 = warm.h2.replicate(1, width);
    std::vector<RngStream> streams;
    streams.reserve(static_cast<std::size_t>(width));
    for (Index j = 0; j < width; ++j) {
      streams.push_back(root.child(static_cast<std::uint64_t>(j0 + j)));
    }
    for (Index j = 0; j < width; ++j) {
      out.trajectories[static_cast<std::size_t>(j0 + j)].resize(x_dim, horizon);
    }
    Matrix z(x_dim, width);
    for (Index i = 0; i < horizon; ++i) {
      for (Index j = 0; j < width; ++j) {
        for (Index r = 0; r < x_dim; ++r) z(r, j) = streams[j].normal();
      }
      const Matrix sample = draw(state, z);
      const Matrix unscaled = scaler.unscale(sample);
      for (Index j = 0; j < width; ++j) {
        out.trajectories[static_cast<std::size_t>(j0 + j)].col(i) =
            unscaled.col(j);
      }
      advance(state, sample);
    }
  };

  std::vector<std::pair<Index, Index>> blocks;
  for (Index j0 = 0; j0 < n_samples; j0 += kTrajectoryBlock) {
    blocks.emplace_back(j0, std::min(kTrajectoryBlock, n_samples - j0));
  }
  if (num_threads <= 1 || blocks.size() <= 1) {
    for (const auto& [j0, width] : blocks) run_block(j0, width);
  } else {
    std::vector<std::thread> pool;
    const auto worker = [&](std::size_t first, std::size_t stride) {
      for (std::size_t b = first; b < blocks.size(); b += stride) {
        run_block(blocks[b].first, blocks[b].second);
      }
    };
    const auto n_workers = std::min<std::size_t>(
        static_cast<std::size_t>(num_threads), blocks.size());
    for (std::size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back(worker, w, n_workers);
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace

ForecastEnsemble monte_carlo_forecast(const Generator& gen, const Scaler& scaler,
                                      const Matrix& prefix, Index n_samples,
                                      Index horizon, std::uint64_t seed,
                                      int num_threads) {
  // Forwards with caching off never mutate the networks, so concurrent
  // blocks may share them; the cast only bridges the non-const signature.
  Generator& g = const_cast<Generator&>(gen);
  return run_forecast(
      gen.hidden_dim(), gen.x_dim(), scaler, prefix, n_samples, horizon, seed,
      num_threads,
      [&](GruState& s, const auto& x) { gen.advance(s, x); },
      [&](const GruState& s, const Matrix& z) {
        return g.sample_with_z(s, z, false);
      });
}

ForecastEnsemble monte_carlo_forecast(const GaussianRnn& model,
                                      const Scaler& scaler, const Matrix& prefix,
                                      Index n_samples, Index horizon,
                                      std::uint64_t seed, int num_threads) {
  GaussianRnn& m = const_cast<GaussianRnn&>(model);
  return run_forecast(
      model.hidden_dim(), model.x_dim(), scaler, prefix, n_samples, horizon,
      seed, num_threads,
      [&](GruState& s, const auto& x) { model.advance(s, x); },
      [&](const GruState& s, const Matrix& z) {
        const Matrix mu = m.mean_head().forward(s.h2, false);
        const Matrix lv = m.log_var_head().forward(s.h2, false);
        return Matrix(mu.array() + (lv.array() / 2.0).exp() * z.array());
      });
}

PredictionInterval prediction_interval(const ForecastEnsemble& ensemble,
                                       double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("prediction_interval: p must lie in (0, 1)");
  }
  const Index n = ensemble.size();
  if (n < 40) {
    throw ConfigError("prediction_interval: need at least 40 trajectories, got " +
                      std::to_string(n));
  }
  const Index d = ensemble.x_dim;
  const Index h = ensemble.horizon;

  PredictionInterval pi;
  pi.p = p;
  pi.lower.resize(d, h);
  pi.upper.resize(d, h);
  pi.mean.resize(d, h);

  const auto quantile = [](std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * sorted[lo] + w * sorted[hi];
  };

  std::vector<double> values(static_cast<std::size_t>(n));
  for (Index t = 0; t < h; ++t) {
    for (Index i = 0; i < d; ++i) {
      double sum = 0.0;
      for (Index j = 0; j < n; ++j) {
        values[static_cast<std::size_t>(j)] =
            ensemble.trajectories[static_cast<std::size_t>(j)](i, t);
        sum += values[static_cast<std::size_t>(j)];
      }
      std::sort(values.begin(), values.end());
      pi.lower(i, t) = quantile(values, (1.0 - p) / 2.0);
      pi.upper(i, t) = quantile(values, (1.0 + p) / 2.0);
      pi.mean(i, t) = sum / static_cast<double>(n);
    }
  }
  return pi;
}

void write_ensemble_csv(const std::string& path, const ForecastEnsemble& e) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "trajectory,step,dim,value\n";
  char buf[96];
  for (Index j = 0; j < e.size(); ++j) {
    const Matrix& traj = e.trajectories[static_cast<std::size_t>(j)];
    for (Index t = 0; t < e.horizon; ++t) {
      for (Index i = 0; i < e.x_dim; ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%lld,%lld,%.17g\n",
                      static_cast<long long>(j), static_cast<long long>(t),
                      static_cast<long long>(i), traj(i, t));
        os << buf;
      }
    }
  }
  if (!os) throw IoError("write failed for " + path);
}

ForecastEnsemble read_ensemble_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError(path + ": empty file");

  long long traj = 0, step = 0, dim = 0;
  double value = 0.0;
  long long max_traj = -1, max_step = -1, max_dim = -1;
  std::vector<std::tuple<long long, long long, long long, double>> rows;
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lg", &traj, &step, &dim,
                    &value) != 4) {
      throw IoError(path + ":" + std::to_string(line_no) + ": bad record");
    }
    rows.emplace_back(traj, step, dim, value);
    max_traj = std::max(max_traj, traj);
    max_step = std::max(max_step, step);
    max_dim = std::max(max_dim, dim);
  }
  if (rows.empty()) throw IoError(path + ": no data rows");

  ForecastEnsemble e;
  e.horizon = static_cast<Index>(max_step + 1);
  e.x_dim = static_cast<Index>(max_dim + 1);
  e.trajectories.assign(static_cast<std::size_t>(max_traj + 1),
                        Matrix::Zero(e.x_dim, e.horizon));
  for (const auto& [j, t, i, v] : rows) {
    e.trajectories[static_cast<std::size_t>(j)](static_cast<Index>(i),
                                                static_cast<Index>(t)) = v;
  }
  return e;
}

void write_intervals_csv(const std::string& path,
                         const std::vector<PredictionInterval>& intervals) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "step,dim,p,lower,upper,mean\n";
  char buf[160];
  for (const auto& pi : intervals) {
    for (Index t = 0; t < pi.lower.cols(); ++t) {
      for (Index i = 0; i < pi.lower.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%lld,%lld,%g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(t), static_cast<long long>(i),
                      pi.p, pi.lower(i, t), pi.upper(i, t), pi.mean(i, t));
        os << buf;
      }
    }
  }
  if (!os) throw IoError("write failed for " + path);
}

}  // namespace crgan
