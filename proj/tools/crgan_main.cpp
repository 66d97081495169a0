// Batch front door: dataset generation, pretraining, adversarial training,
// Monte Carlo forecasting, and metric reports.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "crgan/checkpoint.hpp"
#include "crgan/datasets.hpp"
#include "crgan/evaluation.hpp"
#include "crgan/gradcheck.hpp"
#include "crgan/simulate.hpp"
#include "crgan/training.hpp"

namespace fs = std::filesystem;
using namespace crgan;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("CRGAN_OUTPUT_DIR");
  return env && *env ? std::string(env) : std::string(".");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_echo(const std::string& path,
                const std::map<std::string, std::string>& kv) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (const auto& [key, value] : kv) os << key << "=" << value << "\n";
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) out.push_back(std::stod(cell));
  }
  if (out.empty()) throw ConfigError("empty list '" + csv + "'");
  return out;
}

std::vector<Index> parse_index_list(const std::string& csv) {
  std::vector<Index> out;
  for (double v : parse_double_list(csv)) out.push_back(static_cast<Index>(v));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RegionBounds {
  Index begin = 0, end = 0;
};

RegionBounds resolve_region(const std::string& name, Index length) {
  const SplitIndices split = split_80_10_10(length);
  if (name == "train") return {0, split.train_end};
  if (name == "val") return {split.train_end, split.val_end};
  if (name == "test") return {split.val_end, length};
  if (name == "all") return {0, length};
  throw ConfigError("unknown region '" + name +
                    "' (expected train, val, test, or all)");
}

ForecastFn forecast_fn_for(const Checkpoint& ck, Index n_samples, Index horizon,
                           int threads, const CrGanModel* crgan_model,
                           const GaussianRnn* rnn_model, const Scaler* scaler) {
  if (ck.kind == "crgan") {
    return [=](const Matrix& prefix, std::uint64_t seed) {
      return monte_carlo_forecast(crgan_model->gen, crgan_model->scaler, prefix,
                                  n_samples, horizon, seed, threads);
    };
  }
  return [=](const Matrix& prefix, std::uint64_t seed) {
    return monte_carlo_forecast(*rnn_model, *scaler, prefix, n_samples, horizon,
                                seed, threads);
  };
}

// ---------------------------------------------------------------- datagen --

struct DatagenArgs {
  std::string preset;
  Index length = 50000;
  std::uint64_t seed = 0;
  double sigma = 0.2;
  double sigma_factor = 0.05;
  std::string out;
};

int run_datagen(const DatagenArgs& a) {
  std::string out = a.out;
  if (out.empty()) out = default_out_dir() + "/" + a.preset + ".csv";
  if (fs::path(out).has_parent_path()) {
    ensure_dir(fs::path(out).parent_path().string());
  }

  std::map<std::string, std::string> echo = {
      {"command", "datagen"},
      {"preset", a.preset},
      {"length", std::to_string(a.length)},
      {"seed", std::to_string(a.seed)},
      {"out", out}};

  if (a.preset == "ar1") {
    echo["sigma"] = fmt(a.sigma);
    write_series_csv(out, gen_ar1(a.length, a.sigma, a.seed));
  } else if (a.preset == "mackey-glass") {
    echo["sigma_factor"] = fmt(a.sigma_factor);
    const MackeyGlassSeries mg =
        gen_mackey_glass(a.length, a.sigma_factor, a.seed);
    write_series_csv(out, mg.noisy);
    fs::path twin(out);
    twin.replace_filename(twin.stem().string() + "_noiseless" +
                          twin.extension().string());
    write_series_csv(twin.string(), mg.noiseless);
    echo["noiseless_out"] = twin.string();
  } else if (a.preset == "lorenz") {
    write_series_csv(out, gen_lorenz(a.length, a.seed));
  } else {
    throw ConfigError("unknown preset '" + a.preset + "'");
  }
  write_echo(out + ".echo", echo);
  std::cout << "wrote " << out << "\n";
  return 0;
}

// --------------------------------------------------------------- pretrain --

struct PretrainArgs {
  std::string data;
  long iters = 2000;
  Index hidden = 128;
  Index t_s = 100;
  Index n_b = 100;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string out;
};

int run_pretrain(const PretrainArgs& a) {
  const SeriesDataset series = read_series_csv(a.data);
  const SplitIndices split = split_80_10_10(series.length());
  const Matrix train_region = series.values.leftCols(split.train_end);
  const Scaler scaler = Scaler::fit(train_region);
  const Matrix scaled = scaler.scale(train_region);

  ModelConfig mc{series.dim(), a.hidden};
  CrGanModel model = make_crgan(mc, a.seed);
  RngStream root(a.seed);
  RngStream pg = root.child(10), pd = root.child(11);
  pretrain_rnn(model.gen.psi(), scaled, a.iters, a.t_s, a.n_b, a.lr, pg);
  pretrain_rnn(model.dis.psi(), scaled, a.iters, a.t_s, a.n_b, a.lr, pd);

  Checkpoint ck;
  ck.kind = "stacks";
  ck.config["x_dim"] = std::to_string(series.dim());
  ck.config["hidden_dim"] = std::to_string(a.hidden);
  ck.config["seed"] = std::to_string(a.seed);
  ck.scaler_min = scaler.minimum();
  ck.scaler_max = scaler.maximum();
  ck.dt = series.dt;
  store_params(ck, model.gen.psi().params());
  store_params(ck, model.dis.psi().params());
  if (fs::path(a.out).has_parent_path()) {
    ensure_dir(fs::path(a.out).parent_path().string());
  }
  save_checkpoint(a.out, ck);
  write_echo(a.out + ".echo", {{"command", "pretrain"},
                               {"data", a.data},
                               {"iters", std::to_string(a.iters)},
                               {"hidden", std::to_string(a.hidden)},
                               {"t_s", std::to_string(a.t_s)},
                               {"n_b", std::to_string(a.n_b)},
                               {"lr", fmt(a.lr)},
                               {"seed", std::to_string(a.seed)},
                               {"out", a.out}});
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ train --

struct TrainArgs {
  std::string data;
  std::string preset;
  std::string variant = "cr-gan";
  TrainConfig cfg;
  bool no_pretrain = false;
  std::string init_from;
  std::string out;
};

int run_train(TrainArgs& a) {
  const SeriesDataset series = read_series_csv(a.data);
  const std::string out = a.out.empty() ? default_out_dir() : a.out;
  ensure_dir(out);

  std::map<std::string, std::string> echo = {
      {"command", "train"},     {"data", a.data},
      {"variant", a.variant},   {"preset", a.preset},
      {"out", out},             {"n", std::to_string(a.cfg.n)},
      {"lambda1", fmt(a.cfg.lambda1)}, {"lambda2", fmt(a.cfg.lambda2)},
      {"gamma", fmt(a.cfg.gamma)},     {"t_s", std::to_string(a.cfg.t_s)},
      {"t_f", std::to_string(a.cfg.t_f)}, {"n_b", std::to_string(a.cfg.n_b)},
      {"n_g", std::to_string(a.cfg.n_g)}, {"k_max", std::to_string(a.cfg.k_max)},
      {"hidden_dim", std::to_string(a.cfg.hidden_dim)},
      {"lr_d", fmt(a.cfg.lr_d)},  {"lr_g", fmt(a.cfg.lr_g)},
      {"lr_delta", fmt(a.cfg.lr_delta)}, {"lr_min", fmt(a.cfg.lr_min)},
      {"pretrain_iters", std::to_string(a.cfg.pretrain_iters)},
      {"no_pretrain", a.no_pretrain ? "1" : "0"},
      {"init_from", a.init_from},
      {"seed", std::to_string(a.cfg.seed)}};
  write_echo(out + "/config_echo.txt", echo);

  TrainResult result;
  if (a.variant == "gaussian-rnn") {
    ModelConfig mc{series.dim(), a.cfg.hidden_dim};
    GaussianRnn model = make_gaussian_rnn(mc, a.cfg.seed);
    Scaler scaler;
    result = train_gaussian_rnn(model, scaler, a.cfg, series);
    save_checkpoint(out + "/checkpoint.bin",
                    to_checkpoint(model, scaler, a.cfg, series.dt));
  } else {
    a.cfg.variant = variant_from_name(a.variant);
    ModelConfig mc{series.dim(), a.cfg.hidden_dim};
    CrGanModel model = make_crgan(mc, a.cfg.seed);

    bool pretrain = !a.no_pretrain;
    if (!a.init_from.empty()) {
      const Checkpoint init = load_checkpoint(a.init_from);
      if (init.kind != "stacks") {
        throw ConfigError("--init-from expects a pretrained-stacks checkpoint");
      }
      load_params(init, model.gen.psi().params());
      load_params(init, model.dis.psi().params());
      pretrain = false;
    }
    result = train(model, a.cfg, series, pretrain);
    save_checkpoint(out + "/checkpoint.bin",
                    to_checkpoint(model, a.cfg, series.dt));
  }

  result.trace.write_csv(out + "/trace.csv");
  std::ofstream summary(out + "/summary.txt", std::ios::trunc);
  summary << "iterations=" << result.trace.records.size() << "\n";
  if (!result.trace.records.empty()) {
    const auto& last = result.trace.records.back();
    summary << "final_d_loss=" << fmt(last.d_loss) << "\n";
    summary << "final_g_loss=" << fmt(last.g_loss) << "\n";
    summary << "final_reg1=" << fmt(last.reg1) << "\n";
    summary << "final_reg2=" << fmt(last.reg2) << "\n";
    const auto tail = std::max<std::size_t>(1, result.trace.records.size() / 5);
    summary << "loss_ratio_tail20=" << fmt(loss_ratio(result.trace, tail))
            << "\n";
  }
  std::cout << "wrote " << out << "/checkpoint.bin\n";
  return 0;
}

// --------------------------------------------------------------- forecast --

struct ForecastArgs {
  std::string checkpoint;
  std::string data;
  Index start_index = -1;
  Index prefix_len = 100;
  Index n_s = 1000;
  Index horizon = 500;
  std::string levels = "0.6,0.7,0.8,0.9,0.95";
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

int run_forecast(const ForecastArgs& a) {
  const SeriesDataset series = read_series_csv(a.data);
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const std::string out = a.out.empty() ? default_out_dir() : a.out;
  ensure_dir(out);

  const Index start = a.start_index >= 0 ? a.start_index : series.length() - 1;
  if (start - a.prefix_len + 1 < 0 || start >= series.length()) {
    throw ConfigError("forecast: prefix [" +
                      std::to_string(start - a.prefix_len + 1) + ", " +
                      std::to_string(start) + "] outside the series");
  }
  const Matrix prefix =
      series.values.middleCols(start - a.prefix_len + 1, a.prefix_len);

  ForecastEnsemble ens;
  if (ck.kind == "crgan") {
    const CrGanModel model = crgan_from_checkpoint(ck);
    ens = monte_carlo_forecast(model.gen, model.scaler, prefix, a.n_s,
                               a.horizon, a.seed, a.threads);
  } else if (ck.kind == "gaussian-rnn") {
    Scaler scaler;
    const GaussianRnn model = gaussian_rnn_from_checkpoint(ck, &scaler);
    ens = monte_carlo_forecast(model, scaler, prefix, a.n_s, a.horizon, a.seed,
                               a.threads);
  } else {
    throw ConfigError("forecast: checkpoint kind '" + ck.kind +
                      "' is not a runnable model");
  }
  ens.dt = series.dt;

  write_ensemble_csv(out + "/ensemble.csv", ens);
  std::vector<PredictionInterval> intervals;
  for (double p : parse_double_list(a.levels)) {
    intervals.push_back(prediction_interval(ens, p));
  }
  write_intervals_csv(out + "/intervals.csv", intervals);
  write_echo(out + "/config_echo.txt",
             {{"command", "forecast"},
              {"checkpoint", a.checkpoint},
              {"data", a.data},
              {"start_index", std::to_string(start)},
              {"prefix_len", std::to_string(a.prefix_len)},
              {"ns", std::to_string(a.n_s)},
              {"horizon", std::to_string(a.horizon)},
              {"levels", a.levels},
              {"seed", std::to_string(a.seed)},
              {"threads", std::to_string(a.threads)},
              {"out", out}});
  std::cout << "wrote " << out << "/ensemble.csv\n";
  return 0;
}

// --------------------------------------------------------------- evaluate --

int run_eval_kl_noise(const std::string& ensemble_path,
                      const std::string& data_path, double coeff, double lo,
                      double hi, double bin, const std::string& out_dir) {
  const std::string out = out_dir.empty() ? default_out_dir() : out_dir;
  ensure_dir(out);
  const ForecastEnsemble ens = read_ensemble_csv(ensemble_path);
  const SeriesDataset series = read_series_csv(data_path);

  Histogram q = Histogram::uniform(lo, hi, bin);
  q.add_all(recover_ar1_noise(ens, coeff));
  Histogram p = Histogram::uniform(lo, hi, bin);
  p.add_all(series_ar1_noise(series.values, coeff));
  const KlResult kl = histogram_kl(q, p);

  std::ofstream hist(out + "/noise_histograms.csv", std::ios::trunc);
  hist << "bin_lo,bin_hi,p_data,q_model\n";
  const auto pp = p.probabilities();
  const auto qp = q.probabilities();
  for (std::size_t i = 0; i < p.bins(); ++i) {
    hist << fmt(p.edges()[i]) << "," << fmt(p.edges()[i + 1]) << ","
         << fmt(pp[i]) << "," << fmt(qp[i]) << "\n";
  }
  std::ofstream summary(out + "/summary.txt", std::ios::trunc);
  summary << "kl_divergence=" << fmt(kl.value) << "\n";
  summary << "support_violation=" << (kl.infinite ? "1" : "0") << "\n";
  summary << "model_samples=" << fmt(q.total()) << "\n";
  summary << "model_clamped=" << q.clamped() << "\n";
  summary << "data_clamped=" << p.clamped() << "\n";
  write_echo(out + "/config_echo.txt",
             {{"command", "evaluate kl-noise"},
              {"ensemble", ensemble_path},
              {"data", data_path},
              {"coeff", fmt(coeff)},
              {"grid", fmt(lo) + ":" + fmt(hi) + ":" + fmt(bin)}});
  std::cout << "kl_divergence=" << fmt(kl.value) << "\n";
  return 0;
}

struct EcpArgs {
  std::string checkpoint, data, region = "test", out;
  Index starts = 50, n_s = 200, horizon = 200, prefix_len = 100;
  std::string levels = "0.6,0.7,0.8,0.9,0.95";
  std::uint64_t seed = 0;
  int threads = 1;
};

int run_eval_ecp(const EcpArgs& a) {
  const std::string out = a.out.empty() ? default_out_dir() : a.out;
  ensure_dir(out);
  const SeriesDataset series = read_series_csv(a.data);
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const RegionBounds region = resolve_region(a.region, series.length());
  const std::vector<double> levels = parse_double_list(a.levels);

  CrGanModel crgan_model{ModelConfig{1, 1}};
  GaussianRnn rnn_model{ModelConfig{1, 1}};
  Scaler scaler;
  if (ck.kind == "crgan") {
    crgan_model = crgan_from_checkpoint(ck);
  } else if (ck.kind == "gaussian-rnn") {
    rnn_model = gaussian_rnn_from_checkpoint(ck, &scaler);
  } else {
    throw ConfigError("evaluate ecp: unsupported checkpoint kind " + ck.kind);
  }
  const ForecastFn forecast = forecast_fn_for(ck, a.n_s, a.horizon, a.threads,
                                              &crgan_model, &rnn_model, &scaler);

  const CoverageTable table =
      ecp_protocol(forecast, series.values, region.begin, region.end, a.starts,
                   a.prefix_len, a.horizon, levels, a.seed);

  std::ofstream csv(out + "/ecp.csv", std::ios::trunc);
  csv << "p";
  for (Index i = 0; i < table.ecp_per_dim.cols(); ++i) csv << ",ecp_x" << (i + 1);
  csv << ",aecp\n";
  for (std::size_t l = 0; l < levels.size(); ++l) {
    csv << fmt(levels[l]);
    for (Index i = 0; i < table.ecp_per_dim.cols(); ++i) {
      csv << "," << fmt(table.ecp_per_dim(static_cast<Index>(l), i));
    }
    csv << "," << fmt(table.aecp[l]) << "\n";
  }
  std::ofstream summary(out + "/summary.txt", std::ios::trunc);
  for (Index i = 0; i < table.ecp_per_dim.cols(); ++i) {
    summary << "sad_x" << (i + 1) << "=" << fmt(table.sad(i)) << "\n";
  }
  summary << "sad_aecp=" << fmt(table.sad_aecp()) << "\n";
  write_echo(out + "/config_echo.txt",
             {{"command", "evaluate ecp"},
              {"checkpoint", a.checkpoint},
              {"data", a.data},
              {"region", a.region},
              {"starts", std::to_string(a.starts)},
              {"ns", std::to_string(a.n_s)},
              {"horizon", std::to_string(a.horizon)},
              {"prefix_len", std::to_string(a.prefix_len)},
              {"levels", a.levels},
              {"seed", std::to_string(a.seed)}});
  std::cout << "sad_aecp=" << fmt(table.sad_aecp()) << "\n";
  return 0;
}

struct MmdRatioArgs {
  std::string model, reference, data, region = "test", out;
  std::string orders = "1,2,4,8,16,32,64";
  Index starts = 50, horizon = 200, prefix_len = 100, subsamples = 5000;
  std::uint64_t seed = 0;
  int threads = 1;
};

int run_eval_mmd_ratio(const MmdRatioArgs& a) {
  const std::string out = a.out.empty() ? default_out_dir() : a.out;
  ensure_dir(out);
  const SeriesDataset series = read_series_csv(a.data);
  const RegionBounds region = resolve_region(a.region, series.length());
  const std::vector<Index> orders = parse_index_list(a.orders);

  const Checkpoint model_ck = load_checkpoint(a.model);
  const Checkpoint ref_ck = load_checkpoint(a.reference);
  if (model_ck.kind != "crgan") {
    throw ConfigError("evaluate mmd-ratio: --model must be a crgan checkpoint");
  }
  const CrGanModel model = crgan_from_checkpoint(model_ck);
  CrGanModel ref_crgan{ModelConfig{1, 1}};
  GaussianRnn ref_rnn{ModelConfig{1, 1}};
  Scaler ref_scaler;
  if (ref_ck.kind == "crgan") {
    ref_crgan = crgan_from_checkpoint(ref_ck);
  } else if (ref_ck.kind == "gaussian-rnn") {
    ref_rnn = gaussian_rnn_from_checkpoint(ref_ck, &ref_scaler);
  } else {
    throw ConfigError("evaluate mmd-ratio: unsupported reference kind " +
                      ref_ck.kind);
  }

  const ForecastFn model_fn = [&](const Matrix& prefix, std::uint64_t seed) {
    return monte_carlo_forecast(model.gen, model.scaler, prefix, 1, a.horizon,
                                seed, a.threads);
  };
  const ForecastFn ref_fn = forecast_fn_for(ref_ck, 1, a.horizon, a.threads,
                                            &ref_crgan, &ref_rnn, &ref_scaler);

  // Per-dimension kernel scales from the data itself.
  const Matrix& values = series.values;
  const Vector mean = values.rowwise().mean();
  const Vector sd = ((values.colwise() - mean).array().square().rowwise().sum() /
                     static_cast<double>(values.cols() - 1))
                        .sqrt();
  const KernelSpec kernel = KernelSpec::per_dimension(sd);

  std::ofstream csv(out + "/mmd_ratio.csv", std::ios::trunc);
  csv << "order,lambda,model_mmd,reference_mmd\n";
  RngStream sub_rng(a.seed);
  for (std::size_t oi = 0; oi < orders.size(); ++oi) {
    const Index n = orders[oi];
    const Matrix model_pool =
        diff_pool_protocol(model_fn, values, region.begin, region.end, a.starts,
                           a.prefix_len, a.horizon, n, a.seed + 1);
    const Matrix ref_pool =
        diff_pool_protocol(ref_fn, values, region.begin, region.end, a.starts,
                           a.prefix_len, a.horizon, n, a.seed + 2);
    const Matrix data_pool = temporal_diff(values, n);

    const Index k = std::min({a.subsamples, model_pool.cols(), ref_pool.cols(),
                              data_pool.cols()});
    RngStream r1 = sub_rng.child(3 * oi), r2 = sub_rng.child(3 * oi + 1),
              r3 = sub_rng.child(3 * oi + 2);
    const MmdRatio ratio =
        mmd_ratio(kernel, subsample_columns(model_pool, k, r1),
                  subsample_columns(ref_pool, k, r2),
                  subsample_columns(data_pool, k, r3));
    if (ratio.degenerate) {
      std::cout << "order " << n << ": reference MMD is zero, ratio undefined\n";
    }
    csv << n << "," << fmt(ratio.value) << "," << fmt(ratio.model_mmd) << ","
        << fmt(ratio.reference_mmd) << "\n";
    std::cout << "order " << n << ": lambda=" << fmt(ratio.value) << "\n";
  }
  write_echo(out + "/config_echo.txt",
             {{"command", "evaluate mmd-ratio"},
              {"model", a.model},
              {"reference", a.reference},
              {"data", a.data},
              {"orders", a.orders},
              {"starts", std::to_string(a.starts)},
              {"horizon", std::to_string(a.horizon)},
              {"subsamples", std::to_string(a.subsamples)},
              {"seed", std::to_string(a.seed)}});
  return 0;
}

int run_eval_kde(const std::string& input, Index order, const std::string& dims,
                 Index nx, Index ny, const std::string& out_dir) {
  const std::string out = out_dir.empty() ? default_out_dir() : out_dir;
  ensure_dir(out);
  const SeriesDataset series = read_series_csv(input);
  const std::vector<Index> dim_list = parse_index_list(dims);
  if (dim_list.size() != 2) {
    throw ConfigError("evaluate kde: --dims needs exactly two entries");
  }
  const Matrix samples =
      order > 0 ? temporal_diff(series.values, order) : series.values;
  Matrix pair(2, samples.cols());
  for (int i = 0; i < 2; ++i) {
    const Index d = dim_list[static_cast<std::size_t>(i)] - 1;
    if (d < 0 || d >= samples.rows()) {
      throw ConfigError("evaluate kde: dimension index out of range");
    }
    pair.row(i) = samples.row(d);
  }
  const Kde2d kde = kde2d(pair, nx, ny);

  std::ofstream csv(out + "/kde.csv", std::ios::trunc);
  csv << "x,y,density\n";
  for (Index iy = 0; iy < kde.grid_y.size(); ++iy) {
    for (Index ix = 0; ix < kde.grid_x.size(); ++ix) {
      csv << fmt(kde.grid_x[ix]) << "," << fmt(kde.grid_y[iy]) << ","
          << fmt(kde.density(iy, ix)) << "\n";
    }
  }
  write_echo(out + "/config_echo.txt", {{"command", "evaluate kde"},
                                        {"input", input},
                                        {"order", std::to_string(order)},
                                        {"dims", dims}});
  std::cout << "wrote " << out << "/kde.csv\n";
  return 0;
}

int run_eval_loss_ratio(const std::string& trace_path, long tail,
                        double tail_frac, const std::string& out_dir) {
  const std::string out = out_dir.empty() ? default_out_dir() : out_dir;
  ensure_dir(out);
  const LossTrace trace = LossTrace::read_csv(trace_path);
  const std::size_t window =
      tail > 0 ? static_cast<std::size_t>(tail)
               : static_cast<std::size_t>(
                     tail_frac * static_cast<double>(trace.records.size()));
  const double ratio = loss_ratio(trace, window);
  std::ofstream summary(out + "/summary.txt", std::ios::trunc);
  summary << "loss_ratio=" << fmt(ratio) << "\n";
  summary << "tail_window=" << window << "\n";
  write_echo(out + "/config_echo.txt", {{"command", "evaluate loss-ratio"},
                                        {"trace", trace_path},
                                        {"tail", std::to_string(window)}});
  std::cout << "loss_ratio=" << fmt(ratio) << "\n";
  return 0;
}

void apply_train_preset(TrainArgs& a, const CLI::App* cmd) {
  if (a.preset.empty()) return;
  const auto pinned = [&](const std::string& flag) {
    return cmd->count(flag) > 0;
  };
  TrainConfig& c = a.cfg;
  if (a.preset == "ar1") {
    if (!pinned("--t-s")) c.t_s = 100;
    if (!pinned("--lambda1")) c.lambda1 = 100;
  } else if (a.preset == "mackey-glass") {
    if (!pinned("--t-s")) c.t_s = 120;
    if (!pinned("--lambda1")) c.lambda1 = 500;
    if (!pinned("--n")) c.n = 5;
    if (!pinned("--lambda2")) c.lambda2 = (c.n == 1) ? 500 : 200;
  } else if (a.preset == "lorenz") {
    if (!pinned("--t-s")) c.t_s = 130;
    if (!pinned("--lambda1")) c.lambda1 = 500;
    if (!pinned("--n")) c.n = 5;
    if (!pinned("--lambda2")) c.lambda2 = 50;
  } else {
    throw ConfigError("unknown preset '" + a.preset + "'");
  }
  if (!pinned("--t-f")) c.t_f = c.t_s / 2;
  if (!pinned("--n-g")) {
    c.n_g = (a.variant == "cr-gan" || a.variant == "gaussian-rnn") ? 1 : 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consistency-regularized GAN for data-driven simulation of "
               "random dynamical systems"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");

  DatagenArgs dg;
  auto* datagen = app.add_subcommand("datagen", "Generate a benchmark series");
  datagen->add_option("preset", dg.preset, "ar1 | mackey-glass | lorenz")
      ->required();
  datagen->add_option("--length", dg.length, "Number of samples");
  datagen->add_option("--seed", dg.seed, "RNG seed");
  datagen->add_option("--sigma", dg.sigma, "AR(1) noise scale");
  datagen->add_option("--sigma-factor", dg.sigma_factor,
                      "Mackey-Glass noise scale relative to sd(phi)");
  datagen->add_option("--out", dg.out, "Output CSV path");

  PretrainArgs pt;
  auto* pretrain = app.add_subcommand(
      "pretrain", "Regression warm start for the recurrent stacks");
  pretrain->add_option("--data", pt.data, "Series CSV")->required();
  pretrain->add_option("--iters", pt.iters, "Adam iterations");
  pretrain->add_option("--hidden", pt.hidden, "Hidden dimension");
  pretrain->add_option("--t-s", pt.t_s, "Window length");
  pretrain->add_option("--n-b", pt.n_b, "Minibatch size");
  pretrain->add_option("--lr", pt.lr, "Learning rate");
  pretrain->add_option("--seed", pt.seed, "RNG seed");
  pretrain->add_option("--out", pt.out, "Checkpoint path")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Adversarial training");
  train_cmd->add_option("--data", tr.data, "Series CSV")->required();
  train_cmd->add_option("--preset", tr.preset,
                        "Hyperparameter preset: ar1 | mackey-glass | lorenz");
  train_cmd->add_option("--variant", tr.variant,
                        "cr-gan | cr-gan-m | cr-gan-g | gaussian-rnn");
  train_cmd->add_option("--n", tr.cfg.n, "Temporal-difference order");
  train_cmd->add_option("--lambda1", tr.cfg.lambda1, "Marginal MMD weight");
  train_cmd->add_option("--lambda2", tr.cfg.lambda2,
                        "Difference MMD weight (cr-gan-m)");
  train_cmd->add_option("--gamma", tr.cfg.gamma, "MMD kernel scale");
  train_cmd->add_option("--t-s", tr.cfg.t_s, "Window length");
  train_cmd->add_option("--t-f", tr.cfg.t_f, "Free-run start inside window");
  train_cmd->add_option("--n-b", tr.cfg.n_b, "Minibatch size");
  train_cmd->add_option("--n-g", tr.cfg.n_g, "Generator sub-iterations");
  train_cmd->add_option("--k-max", tr.cfg.k_max, "SGD iterations");
  train_cmd->add_option("--hidden", tr.cfg.hidden_dim, "Hidden dimension");
  train_cmd->add_option("--lr-d", tr.cfg.lr_d, "Discriminator rate");
  train_cmd->add_option("--lr-g", tr.cfg.lr_g, "Generator rate");
  train_cmd->add_option("--lr-delta", tr.cfg.lr_delta, "Marginal critic rate");
  train_cmd->add_option("--lr-min", tr.cfg.lr_min, "Cosine floor");
  train_cmd->add_option("--pretrain-iters", tr.cfg.pretrain_iters,
                        "Warm-start iterations");
  train_cmd->add_flag("--no-pretrain", tr.no_pretrain, "Skip the warm start");
  train_cmd->add_option("--init-from", tr.init_from,
                        "Pretrained-stacks checkpoint");
  train_cmd->add_option("--seed", tr.cfg.seed, "RNG seed");
  train_cmd->add_option("--out", tr.out, "Output directory");

  ForecastArgs fc;
  auto* forecast = app.add_subcommand("forecast", "Monte Carlo forecast");
  forecast->add_option("--checkpoint", fc.checkpoint, "Model checkpoint")
      ->required();
  forecast->add_option("--data", fc.data, "Series CSV")->required();
  forecast->add_option("--start-index", fc.start_index,
                       "Last prefix index (default: series end)");
  forecast->add_option("--prefix-len", fc.prefix_len, "Conditioning length");
  forecast->add_option("--ns", fc.n_s, "Trajectories");
  forecast->add_option("--horizon", fc.horizon, "Steps ahead");
  forecast->add_option("--levels", fc.levels, "Interval coverage levels");
  forecast->add_option("--seed", fc.seed, "RNG seed");
  forecast->add_option("--threads", fc.threads, "Worker threads");
  forecast->add_option("--out", fc.out, "Output directory");

  auto* evaluate = app.add_subcommand("evaluate", "Metric reports");
  evaluate->require_subcommand(1);

  std::string ek_ensemble, ek_data, ek_out;
  double ek_coeff = 0.8, ek_lo = -1.3, ek_hi = 1.3, ek_bin = 0.05;
  auto* ev_kl =
      evaluate->add_subcommand("kl-noise", "Recovered-noise KL divergence");
  ev_kl->add_option("--ensemble", ek_ensemble, "Forecast ensemble CSV")
      ->required();
  ev_kl->add_option("--data", ek_data, "Series CSV")->required();
  ev_kl->add_option("--coeff", ek_coeff, "Autoregressive coefficient");
  ev_kl->add_option("--lo", ek_lo, "Grid lower edge");
  ev_kl->add_option("--hi", ek_hi, "Grid upper edge");
  ev_kl->add_option("--bin", ek_bin, "Bin width");
  ev_kl->add_option("--out", ek_out, "Output directory");

  EcpArgs ec;
  auto* ev_ecp = evaluate->add_subcommand("ecp", "Empirical coverage");
  ev_ecp->add_option("--checkpoint", ec.checkpoint, "Model checkpoint")
      ->required();
  ev_ecp->add_option("--data", ec.data, "Series CSV")->required();
  ev_ecp->add_option("--region", ec.region, "train | val | test | all");
  ev_ecp->add_option("--starts", ec.starts, "Forecast anchors");
  ev_ecp->add_option("--ns", ec.n_s, "Trajectories per anchor");
  ev_ecp->add_option("--horizon", ec.horizon, "Steps ahead");
  ev_ecp->add_option("--prefix-len", ec.prefix_len, "Conditioning length");
  ev_ecp->add_option("--levels", ec.levels, "Coverage levels");
  ev_ecp->add_option("--seed", ec.seed, "RNG seed");
  ev_ecp->add_option("--threads", ec.threads, "Worker threads");
  ev_ecp->add_option("--out", ec.out, "Output directory");

  MmdRatioArgs mr;
  auto* ev_mmd =
      evaluate->add_subcommand("mmd-ratio", "Temporal-difference MMD ratio");
  ev_mmd->add_option("--model", mr.model, "Model checkpoint")->required();
  ev_mmd->add_option("--reference", mr.reference, "Reference checkpoint")
      ->required();
  ev_mmd->add_option("--data", mr.data, "Series CSV")->required();
  ev_mmd->add_option("--region", mr.region, "train | val | test | all");
  ev_mmd->add_option("--orders", mr.orders, "Difference orders");
  ev_mmd->add_option("--starts", mr.starts, "Forecast anchors");
  ev_mmd->add_option("--horizon", mr.horizon, "Steps per rollout");
  ev_mmd->add_option("--prefix-len", mr.prefix_len, "Conditioning length");
  ev_mmd->add_option("--subsamples", mr.subsamples, "Subsample size");
  ev_mmd->add_option("--seed", mr.seed, "RNG seed");
  ev_mmd->add_option("--threads", mr.threads, "Worker threads");
  ev_mmd->add_option("--out", mr.out, "Output directory");

  std::string kd_input, kd_dims = "1,2", kd_out;
  Index kd_order = 0, kd_nx = 60, kd_ny = 60;
  auto* ev_kde = evaluate->add_subcommand("kde", "2-D kernel density surface");
  ev_kde->add_option("--input", kd_input, "Series CSV")->required();
  ev_kde->add_option("--order", kd_order, "Temporal-difference order (0: raw)");
  ev_kde->add_option("--dims", kd_dims, "Two 1-based dimension indices");
  ev_kde->add_option("--nx", kd_nx, "Grid columns");
  ev_kde->add_option("--ny", kd_ny, "Grid rows");
  ev_kde->add_option("--out", kd_out, "Output directory");

  std::string lr_trace, lr_out;
  long lr_tail = 0;
  double lr_tail_frac = 0.2;
  auto* ev_lr =
      evaluate->add_subcommand("loss-ratio", "Regularizer-to-loss ratio");
  ev_lr->add_option("--trace", lr_trace, "Training trace CSV")->required();
  ev_lr->add_option("--tail", lr_tail, "Tail window (records)");
  ev_lr->add_option("--tail-frac", lr_tail_frac, "Tail fraction when --tail=0");
  ev_lr->add_option("--out", lr_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*datagen) return run_datagen(dg);
    if (*pretrain) return run_pretrain(pt);
    if (*train_cmd) {
      apply_train_preset(tr, train_cmd);
      return run_train(tr);
    }
    if (*forecast) return run_forecast(fc);
    if (*evaluate) {
      if (*ev_kl) {
        return run_eval_kl_noise(ek_ensemble, ek_data, ek_coeff, ek_lo, ek_hi,
                                 ek_bin, ek_out);
      }
      if (*ev_ecp) return run_eval_ecp(ec);
      if (*ev_mmd) return run_eval_mmd_ratio(mr);
      if (*ev_kde) {
        return run_eval_kde(kd_input, kd_order, kd_dims, kd_nx, kd_ny, kd_out);
      }
      if (*ev_lr) {
        return run_eval_loss_ratio(lr_trace, lr_tail, lr_tail_frac, lr_out);
      }
    }
    throw ConfigError("no subcommand selected");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const StateError& e) {
    std::cerr << "state error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
