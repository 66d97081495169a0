#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crgan/checkpoint.hpp"
#include "crgan/datasets.hpp"
#include "crgan/mmd.hpp"
#include "crgan/models.hpp"

namespace crgan {

enum class Variant { CrGan, CrGanM, CrGanG };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct TrainConfig {
  Variant variant = Variant::CrGan;
  int n = 1;             // temporal-difference order (M/G variants)
  double lambda1 = 100.0;
  double lambda2 = 0.0;  // M variant only
  double gamma = 0.2;
  Index t_s = 100;       // training window length (windows span t_s + 1 points)
  Index t_f = 50;        // forecast start inside the window
  Index n_b = 100;       // minibatch size
  int n_g = 1;           // generator sub-iterations
  long k_max = 40000;
  double lr_d = 5e-5, lr_g = 5e-5, lr_delta = 5e-5;
  double lr_min = 1e-5;
  Index hidden_dim = 128;
  long pretrain_iters = 2000;
  double pretrain_lr = 1e-3;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
  Index diff_set_size() const { return t_s - t_f - n + 1; }  // m
};

struct TraceRecord {
  long iteration = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;   // adversarial part, (1/T) sum -log F_D(x*)
  double reg1 = 0.0;     // lambda1 * MMD(x_{1:T}, x*_{1:T}), batch mean
  double reg2 = 0.0;     // lambda2 * MMD(X, X*) or marginal generator loss
  double lr = 0.0;
  int clip_events = 0;
};

// Append-only per-iteration log; the loss-ratio diagnostic reads reg1/g_loss.
struct LossTrace {
  std::vector<TraceRecord> records;

  void write_csv(const std::string& path) const;
  static LossTrace read_csv(const std::string& path);
};

// Mean over the final tail_window records of reg1 / g_loss.
double loss_ratio(const LossTrace& trace, std::size_t tail_window);

// The three adversarial networks plus the scaler they were trained with.
struct CrGanModel {
  Generator gen;
  Discriminator dis;
  MarginalDiscriminator marg;
  Scaler scaler;

  CrGanModel(const ModelConfig& cfg);
  Index x_dim() const { return gen.x_dim(); }
  Index hidden_dim() const { return gen.hidden_dim(); }
};

CrGanModel make_crgan(const ModelConfig& cfg, std::uint64_t seed);
GaussianRnn make_gaussian_rnn(const ModelConfig& cfg, std::uint64_t seed);

// A minibatch of windows: batch[t] is (d, n_b), t = 0..t_s.
using WindowBatch = std::vector<Matrix>;
WindowBatch sample_windows(const Matrix& series, Index t_s, Index n_b,
                           RngStream& rng);

// One-step-ahead regression warm start: a temporary linear head is attached,
// mean-square error is minimized with Adam, then the head is discarded.
// Returns the final-iteration loss (0 when iterations == 0).
double pretrain_rnn(GruStack& stack, const Matrix& scaled_series,
                    long iterations, Index t_s, Index n_b, double lr,
                    RngStream& rng);

struct StepStats {
  double d_loss = 0.0;
  double g_adv = 0.0;
  double mmd_raw = 0.0;
  double reg2 = 0.0;
  int clip_events = 0;
};

// Discriminator update: states advance on data, the generator only supplies
// samples, and only the discriminator parameters move.
double d_step(CrGanModel& model, const WindowBatch& batch, double lr,
              AdamOptimizer& opt_d, RngStream& rng, int* clipped = nullptr);

// Objective-only form with pinned draws; accumulates discriminator grads.
double d_objective(CrGanModel& model, const WindowBatch& batch,
                   const std::vector<Matrix>& zs);

// Generator update: adversarial term plus lambda1-weighted per-sequence MMD;
// gradients flow through the samples into the generator only.
StepStats g_step(CrGanModel& model, const WindowBatch& batch, double lr,
                 double lambda1, double gamma, AdamOptimizer& opt_g,
                 RngStream& rng);

// Forward and backward of the generator objective with the noise draws
// pinned (zs[t] pairs with window step t, zs[0] unused); no optimizer step.
StepStats g_objective(CrGanModel& model, const WindowBatch& batch,
                      double lambda1, double gamma,
                      const std::vector<Matrix>& zs);

// Free-running rollout diagnostics shared by the regularization updates.
struct MultistepSets {
  std::vector<Matrix> samples;  // x*_t for t = t_f..t_s, each (d, n_b)
  Matrix data_diffs;            // (d, m * n_b)
  Matrix sample_diffs;          // (d, m * n_b)
};

// Marginal-critic update of the G variant (ascent on its GAN objective).
double multistep_delta_step(CrGanModel& model, const WindowBatch& batch,
                            const TrainConfig& cfg, double lr,
                            AdamOptimizer& opt_delta, RngStream& rng,
                            int* clipped = nullptr);

// Generator-side multiple-step regularization: free-run from t_f, build the
// temporal-difference sets, then descend the variant's objective on the
// generator parameters. Returns the regularizer value (reg2 of the trace).
double multistep_g_step(CrGanModel& model, const WindowBatch& batch,
                        const TrainConfig& cfg, double lr,
                        AdamOptimizer& opt_g, RngStream& rng,
                        int* clipped = nullptr);

// Objective-only form with pinned draws (zs[t] for t = t_f..t_s).
double multistep_g_objective(CrGanModel& model, const WindowBatch& batch,
                             const TrainConfig& cfg,
                             const std::vector<Matrix>& zs);

struct TrainResult {
  LossTrace trace;
};

// Full adversarial loop over k_max iterations with the cosine schedule on all
// learning rates. The model must be built for the dataset's dimension; its
// scaler is fitted here on the training split.
TrainResult train(CrGanModel& model, const TrainConfig& cfg,
                  const SeriesDataset& dataset, bool pretrain = true);

// Gaussian-RNN reference model trained on the same windows by likelihood.
TrainResult train_gaussian_rnn(GaussianRnn& model, Scaler& scaler,
                               const TrainConfig& cfg,
                               const SeriesDataset& dataset);

// Checkpoint packing for trained models.
Checkpoint to_checkpoint(CrGanModel& model, const TrainConfig& cfg, double dt);
Checkpoint to_checkpoint(GaussianRnn& model, const Scaler& scaler,
                         const TrainConfig& cfg, double dt);
CrGanModel crgan_from_checkpoint(const Checkpoint& ck);
GaussianRnn gaussian_rnn_from_checkpoint(const Checkpoint& ck, Scaler* scaler);

}  // namespace crgan
