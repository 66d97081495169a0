#pragma once

#include <string>
#include <vector>

#include "crgan/models.hpp"

namespace crgan {

// N_s Monte Carlo trajectories over a fixed horizon, stored unscaled.
// Trajectory j is driven by RNG substream j, so its path is independent of
// how trajectories were grouped for execution.
struct ForecastEnsemble {
  std::vector<Matrix> trajectories;  // each (d, horizon)
  Index horizon = 0;
  Index x_dim = 0;
  std::uint64_t seed = 0;
  double dt = 1.0;

  Index size() const { return static_cast<Index>(trajectories.size()); }
};

// Warm the generator state over the unscaled prefix (scaled internally),
// duplicate it across trajectories, then free-run: draw z, sample, advance on
// the sample. Trajectories are processed in fixed-width column blocks, so a
// serial run and a multi-threaded run produce identical ensembles.
ForecastEnsemble monte_carlo_forecast(const Generator& gen, const Scaler& scaler,
                                      const Matrix& prefix, Index n_samples,
                                      Index horizon, std::uint64_t seed,
                                      int num_threads = 1);

// Same protocol for the Gaussian recurrent reference model.
ForecastEnsemble monte_carlo_forecast(const GaussianRnn& model,
                                      const Scaler& scaler, const Matrix& prefix,
                                      Index n_samples, Index horizon,
                                      std::uint64_t seed, int num_threads = 1);

// Central empirical interval per step and dimension at coverage level p,
// with the ensemble mean; quantiles interpolate between order statistics.
struct PredictionInterval {
  double p = 0.0;
  Matrix lower, upper, mean;  // each (d, horizon)
};

PredictionInterval prediction_interval(const ForecastEnsemble& ensemble,
                                       double p);

void write_ensemble_csv(const std::string& path, const ForecastEnsemble& e);
void write_intervals_csv(const std::string& path,
                         const std::vector<PredictionInterval>& intervals);
ForecastEnsemble read_ensemble_csv(const std::string& path);

}  // namespace crgan
