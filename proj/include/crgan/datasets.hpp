#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "crgan/rng.hpp"
#include "crgan/types.hpp"

namespace crgan {

// A sampled multivariate series: values(:, t) is the state at sample t, taken
// at interval dt, plus the provenance needed to regenerate it.
struct SeriesDataset {
  Matrix values;  // (d, T)
  double dt = 1.0;
  std::string generator;
  std::map<std::string, std::string> params;
  std::uint64_t seed = 0;

  Index dim() const { return values.rows(); }
  Index length() const { return values.cols(); }
};

// x_{t+1} = 0.8 x_t + e_t with e_t ~ 0.5 N(-2s, s^2) + 0.5 N(2s, s^2),
// started from a 1000-step burn-in at x = 0.
SeriesDataset gen_ar1(Index length, double sigma, std::uint64_t seed);

struct MackeyGlassOptions {
  double a = 0.2;
  double b = 10.0;
  double c = 0.1;
  double tau = 17.0;
  double step = 0.1;          // internal RK4 step; tau/step must be integral
  Index sample_every = 10;    // dt = step * sample_every
  Index discard = 10000;      // internal steps dropped before sampling
  double history = 1.2;       // constant pre-history
  double sigma_factor = 0.05; // sigma = sd(phi) * sigma_factor
};

struct MackeyGlassSeries {
  SeriesDataset noisy;
  SeriesDataset noiseless;
  double sigma = 0.0;
};

// Delay equation d(phi)/dt = a phi(t-tau) / (1 + phi(t-tau)^b) - c phi(t),
// integrated by fixed-step RK4 with the delayed value taken from the stored
// grid, then observed through bi-Gaussian noise
// e_t ~ 0.5 N(3s, s^2) + 0.5 N(-3s, 13 s^2).
MackeyGlassSeries gen_mackey_glass(Index length, double sigma_factor,
                                   std::uint64_t seed);
MackeyGlassSeries gen_mackey_glass(Index length, const MackeyGlassOptions& opt,
                                   std::uint64_t seed);

struct LorenzOptions {
  double step = 0.0025;     // Euler-Maruyama step; dt = step * sample_every
  Index sample_every = 4;
  Index discard = 10000;
  Eigen::Vector3d init{1.0, 1.0, 1.0};
  double noise_scale = 1.0;  // scales the diffusion matrix B
  double drift_scale = 1.0;  // test hook: 0 isolates the noise increments
};

// Stochastic Lorenz system: drift (10(y-x), x(28-z)-y, xy-8z/3) plus additive
// noise B dW with B = [[4,5,3],[5,5,6],[3,6,10]].
SeriesDataset gen_lorenz(Index length, std::uint64_t seed);
SeriesDataset gen_lorenz(Index length, const LorenzOptions& opt,
                         std::uint64_t seed);

// CSV with header (t, x1..xd) plus a key=value metadata sidecar at
// path + ".meta"; read(write(s)) == s to full printed precision.
void write_series_csv(const std::string& path, const SeriesDataset& series);
SeriesDataset read_series_csv(const std::string& path);

// Contiguous 80/10/10 split boundaries: [0, train), [train, val), [val, T).
struct SplitIndices {
  Index train_end = 0;
  Index val_end = 0;
};
SplitIndices split_80_10_10(Index length);

}  // namespace crgan
