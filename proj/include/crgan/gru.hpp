#pragma once

#include <vector>

#include "crgan/layers.hpp"

namespace crgan {

// Gated recurrent cell:
//   p = sigmoid(W_px x + W_ph h + B_p)      update gate
//   q = sigmoid(W_qx x + W_qh h + B_q)      state-mix gate
//   r = tanh(W_rx x + W_rh (q .* h) + B_r)  bounded candidate
//   h' = (1 - p) .* h + p .* r
// Gate biases ride along as the last column of the x-side blocks.
struct GruCell {
  Param w_px, w_ph, w_qx, w_qh, w_rx, w_rh;
  Index input_dim = 0;
  Index hidden_dim = 0;

  GruCell(const std::string& name, Index input_dim_, Index hidden_dim_);
  void init_params(RngStream& rng);
  std::vector<Param*> params();
};

// Activations saved by one forward step, consumed by one backward step.
struct GruStepCache {
  Matrix x, h, p, q, r, qh;
};

// Returns h_{t+1}; fills *cache when given.
Matrix gru_cell_forward(const GruCell& cell, const Matrix& x, const Matrix& h,
                        GruStepCache* cache = nullptr);

struct GruCellGrads {
  Matrix dx, dh;
};

// Accumulates into the cell's param grads; returns input and state gradients.
GruCellGrads gru_cell_backward(GruCell& cell, const GruStepCache& step,
                               const Matrix& grad_h_next);

// Mutable per-rollout state of a two-level stack: hidden vectors, the step
// caches for BPTT, and the reverse-sweep carry gradients. One state is
// confined to one worker; the stack itself stays read-only during forwards.
struct GruState {
  Matrix h1, h2;
  bool caching = false;
  std::vector<GruStepCache> cache1, cache2;
  Matrix dh1, dh2;
  bool in_backward = false;

  Index steps() const { return static_cast<Index>(cache2.size()); }
  void reset(Index hidden_dim, Index batch, bool caching_on);
  void drop_caches();
};

class GruStack {
 public:
  GruStack(const std::string& name, Index input_dim, Index hidden_dim);

  void init_params(RngStream& rng);

  // Advances both levels on x; returns the level-2 hidden vector.
  Matrix forward(GruState& state, const Matrix& x) const;

  // Pops one cached step; grad_h2 is the loss gradient injected at this
  // step's level-2 output. Returns dL/dx for the popped step.
  Matrix backward_step(GruState& state, const Matrix& grad_h2);

  // Reverse sweep over every cached step. per_step_h2_grads[t] matches the
  // t-th forward call since reset.
  void bptt(GruState& state, const std::vector<Matrix>& per_step_h2_grads);

  GruCell& level1() { return cell1_; }
  GruCell& level2() { return cell2_; }
  const GruCell& level1() const { return cell1_; }
  const GruCell& level2() const { return cell2_; }
  std::vector<Param*> params();
  Index input_dim() const { return cell1_.input_dim; }
  Index hidden_dim() const { return cell2_.hidden_dim; }

 private:
  GruCell cell1_, cell2_;
};

}  // namespace crgan
