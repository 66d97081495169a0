#include "crgan/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace crgan {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double bi_gaussian(RngStream& rng, double mean_a, double sd_a, double mean_b,
                   double sd_b) {
  const bool pick_a = rng.uniform() <= 0.5;
  const double z = rng.normal();
  return pick_a ? mean_a + sd_a * z : mean_b + sd_b * z;
}

}  // namespace

SeriesDataset gen_ar1(Index length, double sigma, std::uint64_t seed) {
  if (length < 2) throw ConfigError("gen_ar1: length must be >= 2");
  RngStream noise = RngStream(seed).child(1);

  SeriesDataset out;
  out.values.resize(1, length);
  out.dt = 1.0;
  out.generator = "ar1";
  out.seed = seed;
  out.params = {{"sigma", fmt_double(sigma)}, {"coeff", "0.8"}};

  double x = 0.0;
  const Index burn_in = 1000;
  for (Index t = 0; t < burn_in + length; ++t) {
    if (t >= burn_in) out.values(0, t - burn_in) = x;
    const double eps =
        sigma > 0 ? bi_gaussian(noise, -2.0 * sigma, sigma, 2.0 * sigma, sigma)
                  : 0.0;
    x = 0.8 * x + eps;
  }
  return out;
}

MackeyGlassSeries gen_mackey_glass(Index length, double sigma_factor,
                                   std::uint64_t seed) {
  MackeyGlassOptions opt;
  opt.sigma_factor = sigma_factor;
  return gen_mackey_glass(length, opt, seed);
}

MackeyGlassSeries gen_mackey_glass(Index length, const MackeyGlassOptions& opt,
                                   std::uint64_t seed) {
  if (length < 2) throw ConfigError("gen_mackey_glass: length must be >= 2");
  const double ratio = opt.tau / opt.step;
  const auto delay_steps = static_cast<Index>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(delay_steps)) > 1e-9 ||
      delay_steps <= 0) {
    throw ConfigError("gen_mackey_glass: tau must be an integer multiple of "
                      "the internal step");
  }

  const Index total = opt.discard + (length - 1) * opt.sample_every + 1;
  std::vector<double> phi(static_cast<std::size_t>(total + delay_steps));
  std::vector<double> dphi(phi.size(), 0.0);  // pre-history is constant
  for (Index i = 0; i < delay_steps; ++i) phi[i] = opt.history;
  phi[delay_steps] = opt.history;

  const auto f = [&](double x, double x_delay) {
    return opt.a * x_delay / (1.0 + std::pow(x_delay, opt.b)) - opt.c * x;
  };

  // Classical RK4; the delayed argument comes from the stored grid (tau/h is
  // integral, so the step endpoints hit grid points exactly) and the
  // half-stage uses a cubic Hermite value so the delay term keeps the
  // integrator's order.
  const double h = opt.step;
  for (Index i = delay_steps; i + 1 < total + delay_steps; ++i) {
    const double d0 = phi[i - delay_steps];
    const double d1 = phi[i + 1 - delay_steps];
    // Midpoint of the delayed interval: exact inside the constant history,
    // cubic Hermite once both ends are integrated points.
    const double dm =
        (i + 1 - delay_steps <= delay_steps)
            ? opt.history
            : 0.5 * (d0 + d1) + 0.125 * h * (dphi[i - delay_steps] -
                                             dphi[i + 1 - delay_steps]);
    const double x = phi[i];
    const double k1 = f(x, d0);
    const double k2 = f(x + 0.5 * h * k1, dm);
    const double k3 = f(x + 0.5 * h * k2, dm);
    const double k4 = f(x + h * k3, d1);
    dphi[i] = k1;
    phi[i + 1] = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  MackeyGlassSeries out;
  out.noiseless.values.resize(1, length);
  for (Index t = 0; t < length; ++t) {
    out.noiseless.values(0, t) =
        phi[static_cast<std::size_t>(delay_steps + opt.discard +
                                     t * opt.sample_every)];
  }
  const double mean = out.noiseless.values.mean();
  const double sd = std::sqrt(
      (out.noiseless.values.array() - mean).square().sum() / (length - 1));
  out.sigma = sd * opt.sigma_factor;

  out.noisy.values.resize(1, length);
  RngStream noise = RngStream(seed).child(1);
  for (Index t = 0; t < length; ++t) {
    const double eps =
        out.sigma > 0
            ? bi_gaussian(noise, 3.0 * out.sigma, out.sigma, -3.0 * out.sigma,
                          std::sqrt(13.0) * out.sigma)
            : 0.0;
    out.noisy.values(0, t) = out.noiseless.values(0, t) + eps;
  }

  const double dt = opt.step * static_cast<double>(opt.sample_every);
  for (SeriesDataset* s : {&out.noisy, &out.noiseless}) {
    s->dt = dt;
    s->generator = "mackey-glass";
    s->seed = seed;
    s->params = {{"a", fmt_double(opt.a)},       {"b", fmt_double(opt.b)},
                 {"c", fmt_double(opt.c)},       {"tau", fmt_double(opt.tau)},
                 {"step", fmt_double(opt.step)}, {"sigma", fmt_double(out.sigma)},
                 {"sigma_factor", fmt_double(opt.sigma_factor)}};
  }
  out.noiseless.params["noiseless"] = "1";
  return out;
}

SeriesDataset gen_lorenz(Index length, std::uint64_t seed) {
  return gen_lorenz(length, LorenzOptions{}, seed);
}

SeriesDataset gen_lorenz(Index length, const LorenzOptions& opt,
                         std::uint64_t seed) {
  if (length < 2) throw ConfigError("gen_lorenz: length must be >= 2");
  Eigen::Matrix3d diffusion;
  diffusion << 4, 5, 3, 5, 5, 6, 3, 6, 10;
  diffusion *= opt.noise_scale;

  RngStream noise = RngStream(seed).child(1);
  const double h = opt.step;
  const double sqrt_h = std::sqrt(h);

  SeriesDataset out;
  out.values.resize(3, length);
  out.dt = h * static_cast<double>(opt.sample_every);
  out.generator = "lorenz";
  out.seed = seed;
  out.params = {{"step", fmt_double(h)},
                {"noise_scale", fmt_double(opt.noise_scale)}};

  Eigen::Vector3d x = opt.init;
  const Index total = opt.discard + (length - 1) * opt.sample_every + 1;
  Index emitted = 0;
  for (Index i = 0; i < total; ++i) {
    if (i >= opt.discard && (i - opt.discard) % opt.sample_every == 0) {
      out.values.col(emitted++) = x;
    }
    Eigen::Vector3d drift(10.0 * (x[1] - x[0]),
                          x[0] * (28.0 - x[2]) - x[1],
                          x[0] * x[1] - 8.0 / 3.0 * x[2]);
    Eigen::Vector3d xi(noise.normal(), noise.normal(), noise.normal());
    x += h * opt.drift_scale * drift + sqrt_h * (diffusion * xi);
  }
  return out;
}

void write_series_csv(const std::string& path, const SeriesDataset& series) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "t";
  for (Index i = 0; i < series.dim(); ++i) os << ",x" << (i + 1);
  os << "\n";
  for (Index t = 0; t < series.length(); ++t) {
    os << fmt_double(static_cast<double>(t) * series.dt);
    for (Index i = 0; i < series.dim(); ++i) {
      os << "," << fmt_double(series.values(i, t));
    }
    os << "\n";
  }
  if (!os) throw IoError("write failed for " + path);

  std::ofstream meta(path + ".meta", std::ios::trunc);
  if (!meta) throw IoError("cannot open " + path + ".meta for writing");
  meta << "generator=" << series.generator << "\n";
  meta << "seed=" << series.seed << "\n";
  meta << "dt=" << fmt_double(series.dt) << "\n";
  meta << "length=" << series.length() << "\n";
  meta << "dim=" << series.dim() << "\n";
  for (const auto& [key, value] : series.params) {
    meta << "param." << key << "=" << value << "\n";
  }
}

SeriesDataset read_series_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);

  std::string line;
  if (!std::getline(is, line)) throw IoError(path + ": empty file");
  Index dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(header, cell, ',')) cols.push_back(cell);
    if (cols.empty() || cols[0] != "t") {
      throw IoError(path + ":1: expected header starting with 't'");
    }
    dim = static_cast<Index>(cols.size()) - 1;
    if (dim < 1) throw IoError(path + ":1: missing value columns");
  }

  std::vector<std::vector<double>> rows;
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) +
                      ": cannot parse '" + cell + "'");
      }
    }
    if (static_cast<Index>(row.size()) != dim + 1) {
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(dim + 1) + " columns, got " +
                    std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 1) throw IoError(path + ": no data rows");

  SeriesDataset out;
  out.values.resize(dim, static_cast<Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (Index i = 0; i < dim; ++i) {
      out.values(i, static_cast<Index>(t)) = rows[t][static_cast<std::size_t>(i) + 1];
    }
  }
  out.dt = rows.size() > 1 ? rows[1][0] - rows[0][0] : 1.0;

  std::ifstream meta(path + ".meta");
  if (meta) {
    while (std::getline(meta, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "generator") {
        out.generator = value;
      } else if (key == "seed") {
        out.seed = std::stoull(value);
      } else if (key == "dt") {
        out.dt = std::stod(value);
      } else if (key.rfind("param.", 0) == 0) {
        out.params[key.substr(6)] = value;
      }
    }
  }
  return out;
}

SplitIndices split_80_10_10(Index length) {
  SplitIndices s;
  s.train_end = length * 8 / 10;
  s.val_end = length * 9 / 10;
  if (s.train_end < 2) throw ConfigError("split_80_10_10: series too short");
  return s;
}

}  // namespace crgan
