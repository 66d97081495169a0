#include "crgan/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace crgan {
namespace {

// Batched teacher-forced Gaussian NLL over a window batch.
double gaussian_nll_window(GaussianRnn& model, const WindowBatch& batch,
                           bool backprop) {
  const Index T = static_cast<Index>(batch.size()) - 1;
  const Index n_b = batch[0].cols();
  GruState state;
  state.reset(model.hidden_dim(), n_b, backprop);

  constexpr double kLog2Pi = 1.8378770664093453;
  const double denom = static_cast<double>(T) * model.x_dim() * n_b;
  double total = 0.0;
  std::vector<Matrix> d_mu, d_lv;

  for (Index t = 1; t <= T; ++t) {
    model.advance(state, batch[t - 1]);
    const Matrix mu = model.mean(state, backprop);
    const Matrix lv = model.log_var(state, backprop);
    const auto residual = batch[t].array() - mu.array();
    const auto inv_var = (-lv.array()).exp();
    total += 0.5 * (kLog2Pi + lv.array() + residual.square() * inv_var).sum();
    if (backprop) {
      d_mu.push_back((-residual * inv_var / denom).matrix());
      d_lv.push_back(
          (0.5 * (1.0 - residual.square() * inv_var) / denom).matrix());
    }
  }
  const double loss = total / denom;
  if (!std::isfinite(loss)) {
    throw NumericError("gaussian_nll_window: non-finite loss");
  }
  if (backprop) {
    std::vector<Matrix> dh(static_cast<std::size_t>(T));
    for (Index t = T; t-- > 0;) {
      Matrix g = model.mean_head().backward(d_mu[t]);
      g += model.log_var_head().backward(d_lv[t]);
      dh[t] = std::move(g);
    }
    model.psi().bptt(state, dh);
  }
  return loss;
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::CrGan: return "cr-gan";
    case Variant::CrGanM: return "cr-gan-m";
    case Variant::CrGanG: return "cr-gan-g";
  }
  throw ConfigError("variant_name: unknown variant");
}

Variant variant_from_name(const std::string& name) {
  if (name == "cr-gan") return Variant::CrGan;
  if (name == "cr-gan-m") return Variant::CrGanM;
  if (name == "cr-gan-g" || name == "cr-gan-d") return Variant::CrGanG;
  throw ConfigError("unknown variant '" + name +
                    "' (expected cr-gan, cr-gan-m, or cr-gan-g)");
}

void TrainConfig::validate() const {
  if (t_s < 2) throw ConfigError("TrainConfig: t_s must be >= 2");
  if (t_f < 1 || t_f >= t_s) throw ConfigError("TrainConfig: need 1 <= t_f < t_s");
  if (n_b < 1) throw ConfigError("TrainConfig: n_b must be >= 1");
  if (n_g < 1) throw ConfigError("TrainConfig: n_g must be >= 1");
  if (k_max < 0) throw ConfigError("TrainConfig: k_max must be >= 0");
  if (lambda1 < 0 || lambda2 < 0) {
    throw ConfigError("TrainConfig: regularization coefficients must be >= 0");
  }
  if (!(gamma > 0)) throw ConfigError("TrainConfig: gamma must be > 0");
  if (!(lr_d > 0) || !(lr_g > 0) || !(lr_delta > 0) || !(lr_min > 0)) {
    throw ConfigError("TrainConfig: learning rates must be > 0");
  }
  if (lr_min > lr_d || lr_min > lr_g || lr_min > lr_delta) {
    throw ConfigError("TrainConfig: lr_min must not exceed the initial rates");
  }
  if (hidden_dim < 1) throw ConfigError("TrainConfig: hidden_dim must be >= 1");
  if (variant != Variant::CrGan) {
    if (n < 1) throw ConfigError("TrainConfig: temporal-difference order n "
                                 "must be >= 1");
    if (static_cast<Index>(n) > t_s - t_f) {
      throw ConfigError("TrainConfig: need n <= t_s - t_f");
    }
    if (diff_set_size() < 2) {
      throw ConfigError("TrainConfig: difference set size m = t_s - t_f - n + 1 "
                        "must be >= 2");
    }
  }
}

void LossTrace::write_csv(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "iteration,d_loss,g_loss,mmd1,mmd2_or_marginal_loss,lr,clipped\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                  r.iteration, r.d_loss, r.g_loss, r.reg1, r.reg2, r.lr,
                  r.clip_events);
    os << buf;
  }
}

LossTrace LossTrace::read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  LossTrace trace;
  std::string line;
  if (!std::getline(is, line)) throw IoError(path + ": empty trace");
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    TraceRecord r;
    if (std::sscanf(line.c_str(), "%ld,%lg,%lg,%lg,%lg,%lg,%d", &r.iteration,
                    &r.d_loss, &r.g_loss, &r.reg1, &r.reg2, &r.lr,
                    &r.clip_events) != 7) {
      throw IoError(path + ":" + std::to_string(line_no) + ": bad record");
    }
    trace.records.push_back(r);
  }
  return trace;
}

double loss_ratio(const LossTrace& trace, std::size_t tail_window) {
  if (tail_window == 0) throw ConfigError("loss_ratio: empty tail window");
  if (tail_window > trace.records.size()) {
    throw ConfigError("loss_ratio: tail window " + std::to_string(tail_window) +
                      " exceeds trace length " +
                      std::to_string(trace.records.size()));
  }
  double sum = 0.0;
  for (std::size_t i = trace.records.size() - tail_window;
       i < trace.records.size(); ++i) {
    sum += trace.records[i].reg1 / trace.records[i].g_loss;
  }
  return sum / static_cast<double>(tail_window);
}

CrGanModel::CrGanModel(const ModelConfig& cfg)
    : gen(cfg), dis(cfg), marg(cfg.x_dim, cfg.hidden_dim) {}

CrGanModel make_crgan(const ModelConfig& cfg, std::uint64_t seed) {
  CrGanModel model(cfg);
  RngStream root(seed);
  RngStream g = root.child(0), d = root.child(1), m = root.child(2);
  model.gen.init_params(g);
  model.dis.init_params(d);
  model.marg.init_params(m);
  return model;
}

GaussianRnn make_gaussian_rnn(const ModelConfig& cfg, std::uint64_t seed) {
  GaussianRnn model(cfg);
  RngStream root(seed);
  RngStream r = root.child(0);
  model.init_params(r);
  return model;
}

WindowBatch sample_windows(const Matrix& series, Index t_s, Index n_b,
                           RngStream& rng) {
  const Index T = series.cols();
  if (T < t_s + 1) {
    throw ConfigError("sample_windows: series length " + std::to_string(T) +
                      " too short for window " + std::to_string(t_s + 1));
  }
  std::vector<Index> starts(static_cast<std::size_t>(n_b));
  const auto span = static_cast<std::uint64_t>(T - t_s);
  for (Index b = 0; b < n_b; ++b) {
    starts[static_cast<std::size_t>(b)] =
        static_cast<Index>(rng.uniform_index(span));
  }
  WindowBatch batch(static_cast<std::size_t>(t_s + 1));
  for (Index t = 0; t <= t_s; ++t) {
    Matrix& slab = batch[static_cast<std::size_t>(t)];
    slab.resize(series.rows(), n_b);
    for (Index b = 0; b < n_b; ++b) {
      slab.col(b) = series.col(starts[static_cast<std::size_t>(b)] + t);
    }
  }
  return batch;
}

double pretrain_rnn(GruStack& stack, const Matrix& scaled_series,
                    long iterations, Index t_s, Index n_b, double lr,
                    RngStream& rng) {
  if (iterations <= 0) return 0.0;
  const Index d = scaled_series.rows();
  LinearLayer head("pretrain.head", stack.hidden_dim(), d);
  {
    RngStream init = rng.child(0);
    head.init_params(init);
  }
  std::vector<Param*> params = stack.params();
  params.push_back(&head.param());
  AdamOptimizer opt(params);

  double last_loss = 0.0;
  for (long k = 0; k < iterations; ++k) {
    RngStream it = rng.child(static_cast<std::uint64_t>(1 + k));
    WindowBatch batch = sample_windows(scaled_series, t_s, n_b, it);
    const Index T = t_s;

    GruState state;
    state.reset(stack.hidden_dim(), n_b, true);
    const double denom = static_cast<double>(T) * n_b * d;
    double loss = 0.0;
    std::vector<Matrix> d_pred(static_cast<std::size_t>(T));
    for (Index t = 1; t <= T; ++t) {
      const Matrix& h = stack.forward(state, batch[t - 1]);
      Matrix pred = head.forward(h, true);
      Matrix err = pred - batch[t];
      loss += err.squaredNorm();
      d_pred[t - 1] = (2.0 / denom) * err;
    }
    loss /= denom;
    if (!std::isfinite(loss)) {
      throw NumericError("pretrain_rnn: loss diverged at iteration " +
                         std::to_string(k));
    }
    std::vector<Matrix> dh(static_cast<std::size_t>(T));
    for (Index t = T; t-- > 0;) dh[t] = head.backward(d_pred[t]);
    stack.bptt(state, dh);
    opt.step(lr);
    last_loss = loss;
  }
  return last_loss;
}

double d_objective(CrGanModel& model, const WindowBatch& batch,
                   const std::vector<Matrix>& zs) {
  const Index T = static_cast<Index>(batch.size()) - 1;
  const Index n_b = batch[0].cols();
  const Index d = batch[0].rows();
  const Index nh = model.dis.hidden_dim();
  const double denom = static_cast<double>(T) * n_b;

  GruState gs, ds;
  gs.reset(model.gen.hidden_dim(), n_b, false);
  ds.reset(nh, n_b, true);

  double loss = 0.0;
  std::vector<Matrix> dh(static_cast<std::size_t>(T));
  Matrix head_in(d + nh, 2 * n_b);
  for (Index t = 1; t <= T; ++t) {
    model.gen.advance(gs, batch[t - 1]);
    model.dis.advance(ds, batch[t - 1]);
    const Matrix x_star =
        model.gen.sample_with_z(gs, zs[static_cast<std::size_t>(t)], false);

    // data and sample are judged against the same conditioning state in one
    // batched head evaluation: columns [0, n_b) data, [n_b, 2 n_b) sample
    head_in.topLeftCorner(d, n_b) = batch[t];
    head_in.topRightCorner(d, n_b) = x_star;
    head_in.bottomLeftCorner(nh, n_b) = ds.h2;
    head_in.bottomRightCorner(nh, n_b) = ds.h2;
    const Matrix u = model.dis.head().forward(head_in, true);
    const auto u_data = u.leftCols(n_b);
    const auto u_fake = u.rightCols(n_b);
    // minimize softplus(-u_data) + softplus(u_fake), the negated step gain
    loss += softplus(-u_data).sum() + softplus(u_fake).sum();

    Matrix du(1, 2 * n_b);
    du.leftCols(n_b) = (sigmoid(u_data).array() - 1.0).matrix() / denom;
    du.rightCols(n_b) = sigmoid(u_fake) / denom;
    const Matrix gin = model.dis.head().backward(du);
    dh[t - 1] = gin.bottomLeftCorner(nh, n_b) + gin.bottomRightCorner(nh, n_b);
  }
  model.dis.psi().bptt(ds, dh);
  return loss / denom;
}

double d_step(CrGanModel& model, const WindowBatch& batch, double lr,
              AdamOptimizer& opt_d, RngStream& rng, int* clipped) {
  const Index T = static_cast<Index>(batch.size()) - 1;
  std::vector<Matrix> zs(static_cast<std::size_t>(T + 1));
  for (Index t = 1; t <= T; ++t) {
    zs[static_cast<std::size_t>(t)] =
        rng.normal_matrix(batch[0].rows(), batch[0].cols());
  }
  const double loss = d_objective(model, batch, zs);
  const bool was_clipped = opt_d.step(lr);
  if (clipped) *clipped = was_clipped ? 1 : 0;
  return loss;
}

StepStats g_objective(CrGanModel& model, const WindowBatch& batch,
                      double lambda1, double gamma,
                      const std::vector<Matrix>& zs) {
  const Index T = static_cast<Index>(batch.size()) - 1;
  const Index n_b = batch[0].cols();
  const Index d = batch[0].rows();
  const double denom = static_cast<double>(T) * n_b;

  GruState gs, ds;
  gs.reset(model.gen.hidden_dim(), n_b, true);
  ds.reset(model.dis.hidden_dim(), n_b, false);

  std::vector<Matrix> x_star(static_cast<std::size_t>(T + 1));
  std::vector<Matrix> u_fake(static_cast<std::size_t>(T + 1));
  double adv = 0.0;
  for (Index t = 1; t <= T; ++t) {
    model.gen.advance(gs, batch[t - 1]);
    model.dis.advance(ds, batch[t - 1]);
    x_star[t] = model.gen.sample_with_z(gs, zs[static_cast<std::size_t>(t)], true);
    u_fake[t] = model.dis.score_logit(ds, x_star[t], true);
    adv += softplus(-u_fake[t]).sum();
  }
  adv /= denom;

  // Per-sequence marginal constraint: MMD over the window's time steps,
  // averaged across the minibatch.
  StepStats stats;
  const KernelSpec kernel = KernelSpec::isotropic(gamma);
  std::vector<Matrix> mmd_grads;
  if (lambda1 > 0) {
    mmd_grads.resize(static_cast<std::size_t>(n_b));
    double mmd_sum = 0.0;
    Matrix xb(d, T), yb(d, T);
    for (Index b = 0; b < n_b; ++b) {
      for (Index t = 1; t <= T; ++t) {
        xb.col(t - 1) = batch[t].col(b);
        yb.col(t - 1) = x_star[t].col(b);
      }
      mmd_sum += mmd_biased(kernel, xb, yb);
      mmd_grads[static_cast<std::size_t>(b)] =
          mmd_backward(kernel, xb, yb, lambda1 / n_b);
    }
    stats.mmd_raw = mmd_sum / n_b;
  }

  std::vector<Matrix> dh(static_cast<std::size_t>(T));
  for (Index t = T; t >= 1; --t) {
    const Matrix du = (sigmoid(u_fake[t]).array() - 1.0).matrix() / denom;
    Matrix dx = model.dis.head()
                    .backward(du, /*accumulate_params=*/false)
                    .topRows(d);
    if (lambda1 > 0) {
      for (Index b = 0; b < n_b; ++b) {
        dx.col(b) += mmd_grads[static_cast<std::size_t>(b)].col(t - 1);
      }
    }
    dh[t - 1] = model.gen.head().backward(dx).bottomRows(model.gen.hidden_dim());
  }
  model.gen.psi().bptt(gs, dh);
  stats.g_adv = adv;
  return stats;
}

StepStats g_step(CrGanModel& model, const WindowBatch& batch, double lr,
                 double lambda1, double gamma, AdamOptimizer& opt_g,
                 RngStream& rng) {
  const Index T = static_cast<Index>(batch.size()) - 1;
  std::vector<Matrix> zs(static_cast<std::size_t>(T + 1));
  for (Index t = 1; t <= T; ++t) {
    zs[static_cast<std::size_t>(t)] =
        rng.normal_matrix(batch[0].rows(), batch[0].cols());
  }
  StepStats stats = g_objective(model, batch, lambda1, gamma, zs);
  stats.clip_events = opt_g.step(lr) ? 1 : 0;
  return stats;
}

namespace {

// Draws for the free-run sampling positions t = t_f..t_s.
std::vector<Matrix> draw_free_run_noise(const TrainConfig& cfg, Index d,
                                        Index n_b, RngStream& rng) {
  std::vector<Matrix> zs(static_cast<std::size_t>(cfg.t_s + 1));
  for (Index t = cfg.t_f; t <= cfg.t_s; ++t) {
    zs[static_cast<std::size_t>(t)] = rng.normal_matrix(d, n_b);
  }
  return zs;
}

// Free run of the generator: warm up on data through t_f, then feed its own
// samples; returns x*_t for t = t_f..T.
std::vector<Matrix> free_run(CrGanModel& model, const WindowBatch& batch,
                             const TrainConfig& cfg, GruState& gs,
                             const std::vector<Matrix>& zs, bool caching) {
  const Index T = cfg.t_s;
  const Index n_b = batch[0].cols();
  gs.reset(model.gen.hidden_dim(), n_b, caching);
  for (Index t = 1; t <= cfg.t_f; ++t) model.gen.advance(gs, batch[t - 1]);
  std::vector<Matrix> samples(static_cast<std::size_t>(T + 1));
  for (Index t = cfg.t_f; t <= T; ++t) {
    if (t > cfg.t_f) model.gen.advance(gs, samples[t - 1]);
    samples[t] = model.gen.sample_with_z(gs, zs[static_cast<std::size_t>(t)],
                                         caching);
  }
  return samples;
}

// Data and sample temporal-difference sets, flattened as (d, m * n_b) with
// diff index major: column i * n_b + b holds Delta_n at t_f + i for element b.
void build_diff_sets(const WindowBatch& batch, const std::vector<Matrix>& samples,
                     const TrainConfig& cfg, Matrix& data_diffs,
                     Matrix& sample_diffs) {
  const Index m = cfg.diff_set_size();
  const Index n_b = batch[0].cols();
  const Index d = batch[0].rows();
  data_diffs.resize(d, m * n_b);
  sample_diffs.resize(d, m * n_b);
  for (Index i = 0; i < m; ++i) {
    const Index t = cfg.t_f + i;
    data_diffs.middleCols(i * n_b, n_b) = batch[t + cfg.n] - batch[t];
    sample_diffs.middleCols(i * n_b, n_b) = samples[t + cfg.n] - samples[t];
  }
}

}  // namespace

double multistep_delta_step(CrGanModel& model, const WindowBatch& batch,
                            const TrainConfig& cfg, double lr,
                            AdamOptimizer& opt_delta, RngStream& rng,
                            int* clipped) {
  GruState gs;
  const std::vector<Matrix> zs =
      draw_free_run_noise(cfg, batch[0].rows(), batch[0].cols(), rng);
  const std::vector<Matrix> samples = free_run(model, batch, cfg, gs, zs, false);
  Matrix data_diffs, sample_diffs;
  build_diff_sets(batch, samples, cfg, data_diffs, sample_diffs);
  const double denom = static_cast<double>(data_diffs.cols());

  const Matrix u_data = model.marg.score_logit(data_diffs, true);
  const Matrix u_fake = model.marg.score_logit(sample_diffs, true);
  const double loss =
      (softplus(-u_data).sum() + softplus(u_fake).sum()) / denom;

  const Matrix du_fake = sigmoid(u_fake) / denom;
  const Matrix du_data = (sigmoid(u_data).array() - 1.0).matrix() / denom;
  model.marg.head().backward(du_fake);
  model.marg.head().backward(du_data);
  const bool was_clipped = opt_delta.step(lr);
  if (clipped) *clipped = was_clipped ? 1 : 0;
  return loss;
}

double multistep_g_objective(CrGanModel& model, const WindowBatch& batch,
                             const TrainConfig& cfg,
                             const std::vector<Matrix>& zs) {
  const Index T = cfg.t_s;
  const Index n_b = batch[0].cols();
  const Index d = batch[0].rows();
  const Index m = cfg.diff_set_size();

  GruState gs;
  const std::vector<Matrix> samples = free_run(model, batch, cfg, gs, zs, true);
  Matrix data_diffs, sample_diffs;
  build_diff_sets(batch, samples, cfg, data_diffs, sample_diffs);

  // Loss gradient with respect to each sample difference column.
  double reg_value = 0.0;
  Matrix d_diffs(d, m * n_b);
  if (cfg.variant == Variant::CrGanG) {
    const double denom = static_cast<double>(m) * n_b;
    const Matrix u = model.marg.score_logit(sample_diffs, true);
    reg_value = softplus(-u).sum() / denom;
    const Matrix du = (sigmoid(u).array() - 1.0).matrix() / denom;
    d_diffs = model.marg.head().backward(du, /*accumulate_params=*/false);
  } else if (cfg.variant == Variant::CrGanM) {
    const KernelSpec kernel = KernelSpec::isotropic(cfg.gamma);
    double mmd_sum = 0.0;
    Matrix xb(d, m), yb(d, m);
    for (Index b = 0; b < n_b; ++b) {
      for (Index i = 0; i < m; ++i) {
        xb.col(i) = data_diffs.col(i * n_b + b);
        yb.col(i) = sample_diffs.col(i * n_b + b);
      }
      mmd_sum += mmd_biased(kernel, xb, yb);
      const Matrix dyb = mmd_backward(kernel, xb, yb, cfg.lambda2 / n_b);
      for (Index i = 0; i < m; ++i) d_diffs.col(i * n_b + b) = dyb.col(i);
    }
    reg_value = cfg.lambda2 * mmd_sum / n_b;
  } else {
    throw ConfigError("multistep_g_step: variant has no multiple-step term");
  }

  // Scatter difference gradients onto the samples: Delta_n x*_t touches
  // x*_{t+n} with +1 and x*_t with -1.
  std::vector<Matrix> d_samples(static_cast<std::size_t>(T + 1));
  for (Index t = cfg.t_f; t <= T; ++t) {
    d_samples[t] = Matrix::Zero(d, n_b);
  }
  for (Index i = 0; i < m; ++i) {
    const Index t = cfg.t_f + i;
    d_samples[t + cfg.n] += d_diffs.middleCols(i * n_b, n_b);
    d_samples[t] -= d_diffs.middleCols(i * n_b, n_b);
  }

  // Reverse sweep through the free run; the input gradient of each advance on
  // x*_{t-1} feeds that sample's total gradient.
  const Matrix zero_inject = Matrix::Zero(model.gen.hidden_dim(), n_b);
  Matrix input_carry;
  for (Index t = T; t >= 1; --t) {
    Matrix inject = zero_inject;
    if (t >= cfg.t_f) {
      Matrix dxs = d_samples[t];
      if (t < T) dxs += input_carry;
      inject = model.gen.head().backward(dxs).bottomRows(model.gen.hidden_dim());
    }
    Matrix dx_input = model.gen.psi().backward_step(gs, inject);
    if (t - 1 >= cfg.t_f) input_carry = std::move(dx_input);
  }
  return reg_value;
}

double multistep_g_step(CrGanModel& model, const WindowBatch& batch,
                        const TrainConfig& cfg, double lr,
                        AdamOptimizer& opt_g, RngStream& rng, int* clipped) {
  const std::vector<Matrix> zs =
      draw_free_run_noise(cfg, batch[0].rows(), batch[0].cols(), rng);
  const double reg_value = multistep_g_objective(model, batch, cfg, zs);
  const bool was_clipped = opt_g.step(lr);
  if (clipped) *clipped = was_clipped ? 1 : 0;
  return reg_value;
}

TrainResult train(CrGanModel& model, const TrainConfig& cfg,
                  const SeriesDataset& dataset, bool pretrain) {
  cfg.validate();
  if (dataset.dim() != model.x_dim()) {
    throw ConfigError("train: dataset dimension " +
                      std::to_string(dataset.dim()) + " does not match model " +
                      std::to_string(model.x_dim()));
  }
  const SplitIndices split = split_80_10_10(dataset.length());
  const Matrix train_region = dataset.values.leftCols(split.train_end);
  model.scaler = Scaler::fit(train_region);
  const Matrix scaled = model.scaler.scale(train_region);
  if (scaled.cols() < cfg.t_s + 1) {
    throw ConfigError("train: training split shorter than one window");
  }

  RngStream root(cfg.seed);
  if (pretrain && cfg.pretrain_iters > 0) {
    RngStream pg = root.child(10), pd = root.child(11);
    pretrain_rnn(model.gen.psi(), scaled, cfg.pretrain_iters, cfg.t_s, cfg.n_b,
                 cfg.pretrain_lr, pg);
    pretrain_rnn(model.dis.psi(), scaled, cfg.pretrain_iters, cfg.t_s, cfg.n_b,
                 cfg.pretrain_lr, pd);
  }

  AdamOptimizer opt_d(model.dis.params(), cfg.clip_norm);
  AdamOptimizer opt_g(model.gen.params(), cfg.clip_norm);
  AdamOptimizer opt_delta(model.marg.params(), cfg.clip_norm);

  TrainResult result;
  result.trace.records.reserve(static_cast<std::size_t>(cfg.k_max));
  for (long k = 0; k < cfg.k_max; ++k) {
    TraceRecord rec;
    rec.iteration = k;
    const double lr_d = cosine_lr(k, cfg.k_max, cfg.lr_d, cfg.lr_min);
    const double lr_g = cosine_lr(k, cfg.k_max, cfg.lr_g, cfg.lr_min);
    const double lr_delta = cosine_lr(k, cfg.k_max, cfg.lr_delta, cfg.lr_min);
    rec.lr = lr_g;

    RngStream it = root.child(static_cast<std::uint64_t>(100 + k));
    RngStream batch_rng = it.child(0);
    const WindowBatch batch = sample_windows(scaled, cfg.t_s, cfg.n_b, batch_rng);

    int clipped = 0;
    RngStream d_rng = it.child(1);
    rec.d_loss = d_step(model, batch, lr_d, opt_d, d_rng, &clipped);
    rec.clip_events += clipped;

    if (cfg.variant == Variant::CrGanG) {
      RngStream delta_rng = it.child(2);
      multistep_delta_step(model, batch, cfg, lr_delta, opt_delta, delta_rng,
                           &clipped);
      rec.clip_events += clipped;
    }

    for (int j = 0; j < cfg.n_g; ++j) {
      RngStream g_rng = it.child(static_cast<std::uint64_t>(3 + 2 * j));
      const StepStats stats =
          g_step(model, batch, lr_g, cfg.lambda1, cfg.gamma, opt_g, g_rng);
      rec.g_loss = stats.g_adv;
      rec.reg1 = cfg.lambda1 * stats.mmd_raw;
      rec.clip_events += stats.clip_events;

      if (cfg.variant != Variant::CrGan) {
        RngStream ms_rng = it.child(static_cast<std::uint64_t>(4 + 2 * j));
        rec.reg2 = multistep_g_step(model, batch, cfg, lr_g, opt_g, ms_rng,
                                    &clipped);
        rec.clip_events += clipped;
      }
    }
    result.trace.records.push_back(rec);
  }
  return result;
}

TrainResult train_gaussian_rnn(GaussianRnn& model, Scaler& scaler,
                               const TrainConfig& cfg,
                               const SeriesDataset& dataset) {
  cfg.validate();
  const SplitIndices split = split_80_10_10(dataset.length());
  const Matrix train_region = dataset.values.leftCols(split.train_end);
  scaler = Scaler::fit(train_region);
  const Matrix scaled = scaler.scale(train_region);

  RngStream root(cfg.seed);
  AdamOptimizer opt(model.params(), cfg.clip_norm);
  TrainResult result;
  result.trace.records.reserve(static_cast<std::size_t>(cfg.k_max));
  for (long k = 0; k < cfg.k_max; ++k) {
    TraceRecord rec;
    rec.iteration = k;
    rec.lr = cosine_lr(k, cfg.k_max, cfg.lr_g, cfg.lr_min);
    RngStream it = root.child(static_cast<std::uint64_t>(100 + k));
    RngStream batch_rng = it.child(0);
    const WindowBatch batch = sample_windows(scaled, cfg.t_s, cfg.n_b, batch_rng);
    rec.g_loss = gaussian_nll_window(model, batch, true);
    rec.clip_events = opt.step(rec.lr) ? 1 : 0;
    result.trace.records.push_back(rec);
  }
  return result;
}

namespace {

void pack_common_config(Checkpoint& ck, const TrainConfig& cfg, Index x_dim) {
  ck.config["x_dim"] = std::to_string(x_dim);
  ck.config["hidden_dim"] = std::to_string(cfg.hidden_dim);
  ck.config["variant"] = variant_name(cfg.variant);
  ck.config["n"] = std::to_string(cfg.n);
  char buf[64];
  const auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    ck.config[key] = buf;
  };
  put("lambda1", cfg.lambda1);
  put("lambda2", cfg.lambda2);
  put("gamma", cfg.gamma);
  put("lr_d", cfg.lr_d);
  put("lr_g", cfg.lr_g);
  put("lr_delta", cfg.lr_delta);
  put("lr_min", cfg.lr_min);
  ck.config["t_s"] = std::to_string(cfg.t_s);
  ck.config["t_f"] = std::to_string(cfg.t_f);
  ck.config["n_b"] = std::to_string(cfg.n_b);
  ck.config["n_g"] = std::to_string(cfg.n_g);
  ck.config["k_max"] = std::to_string(cfg.k_max);
  ck.config["seed"] = std::to_string(cfg.seed);
}

}  // namespace

Checkpoint to_checkpoint(CrGanModel& model, const TrainConfig& cfg, double dt) {
  Checkpoint ck;
  ck.kind = "crgan";
  pack_common_config(ck, cfg, model.x_dim());
  ck.scaler_min = model.scaler.minimum();
  ck.scaler_max = model.scaler.maximum();
  ck.dt = dt;
  store_params(ck, model.gen.params());
  store_params(ck, model.dis.params());
  store_params(ck, model.marg.params());
  return ck;
}

Checkpoint to_checkpoint(GaussianRnn& model, const Scaler& scaler,
                         const TrainConfig& cfg, double dt) {
  Checkpoint ck;
  ck.kind = "gaussian-rnn";
  pack_common_config(ck, cfg, model.x_dim());
  ck.scaler_min = scaler.minimum();
  ck.scaler_max = scaler.maximum();
  ck.dt = dt;
  store_params(ck, model.params());
  return ck;
}

CrGanModel crgan_from_checkpoint(const Checkpoint& ck) {
  if (ck.kind != "crgan") {
    throw IoError("expected a crgan checkpoint, got kind '" + ck.kind + "'");
  }
  ModelConfig mc;
  mc.x_dim = ck.config_long("x_dim");
  mc.hidden_dim = ck.config_long("hidden_dim");
  CrGanModel model(mc);
  load_params(ck, model.gen.params());
  load_params(ck, model.dis.params());
  load_params(ck, model.marg.params());
  model.scaler = ck.scaler();
  return model;
}

GaussianRnn gaussian_rnn_from_checkpoint(const Checkpoint& ck, Scaler* scaler) {
  if (ck.kind != "gaussian-rnn") {
    throw IoError("expected a gaussian-rnn checkpoint, got kind '" + ck.kind +
                  "'");
  }
  ModelConfig mc;
  mc.x_dim = ck.config_long("x_dim");
  mc.hidden_dim = ck.config_long("hidden_dim");
  GaussianRnn model(mc);
  load_params(ck, model.params());
  if (scaler) *scaler = ck.scaler();
  return model;
}

}  // namespace crgan
