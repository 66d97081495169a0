#include "crgan/gru.hpp"

namespace crgan {

GruCell::GruCell(const std::string& name, Index input_dim_, Index hidden_dim_)
    : w_px(name + ".w_px", hidden_dim_, input_dim_ + 1),
      w_ph(name + ".w_ph", hidden_dim_, hidden_dim_),
      w_qx(name + ".w_qx", hidden_dim_, input_dim_ + 1),
      w_qh(name + ".w_qh", hidden_dim_, hidden_dim_),
      w_rx(name + ".w_rx", hidden_dim_, input_dim_ + 1),
      w_rh(name + ".w_rh", hidden_dim_, hidden_dim_),
      input_dim(input_dim_),
      hidden_dim(hidden_dim_) {}

void GruCell::init_params(RngStream& rng) {
  for (Param* p : {&w_px, &w_qx, &w_rx}) {
    init_uniform(p->value.leftCols(input_dim), rng, input_dim, hidden_dim);
    p->value.col(input_dim).setZero();
  }
  for (Param* p : {&w_ph, &w_qh, &w_rh}) {
    init_uniform(p->value, rng, hidden_dim, hidden_dim);
  }
}

std::vector<Param*> GruCell::params() {
  return {&w_px, &w_ph, &w_qx, &w_qh, &w_rx, &w_rh};
}

Matrix gru_cell_forward(const GruCell& cell, const Matrix& x, const Matrix& h,
                        GruStepCache* cache) {
  if (x.rows() != cell.input_dim || h.rows() != cell.hidden_dim ||
      x.cols() != h.cols()) {
    throw DimensionError("gru_cell_forward: input " + shape_str(x) +
                         ", state " + shape_str(h) + " for cell dims (" +
                         std::to_string(cell.input_dim) + ", " +
                         std::to_string(cell.hidden_dim) + ")");
  }
  const Index n = x.cols();
  const Index in = cell.input_dim;

  Matrix ap(cell.hidden_dim, n);
  ap.noalias() = cell.w_px.value.leftCols(in) * x;
  ap.noalias() += cell.w_ph.value * h;
  ap.colwise() += cell.w_px.value.col(in);
  Matrix p = sigmoid(ap);

  Matrix aq(cell.hidden_dim, n);
  aq.noalias() = cell.w_qx.value.leftCols(in) * x;
  aq.noalias() += cell.w_qh.value * h;
  aq.colwise() += cell.w_qx.value.col(in);
  Matrix q = sigmoid(aq);

  Matrix qh = q.cwiseProduct(h);
  Matrix ar(cell.hidden_dim, n);
  ar.noalias() = cell.w_rx.value.leftCols(in) * x;
  ar.noalias() += cell.w_rh.value * qh;
  ar.colwise() += cell.w_rx.value.col(in);
  Matrix r = tanh_act(ar);

  Matrix h_next =
      ((1.0 - p.array()) * h.array() + p.array() * r.array()).matrix();
  CRGAN_CHECK_FINITE(h_next, "gru_cell_forward");

  if (cache) {
    cache->x = x;
    cache->h = h;
    cache->p = std::move(p);
    cache->q = std::move(q);
    cache->r = std::move(r);
    cache->qh = std::move(qh);
  }
  return h_next;
}

GruCellGrads gru_cell_backward(GruCell& cell, const GruStepCache& step,
                               const Matrix& grad_h_next) {
  require_same_shape(grad_h_next, step.h, "gru_cell_backward");
  const Index in = cell.input_dim;
  const auto& g = grad_h_next.array();

  // h' = (1 - p) h + p r
  Matrix dp = (g * (step.r.array() - step.h.array())).matrix();
  Matrix dr = (g * step.p.array()).matrix();
  Matrix dh = (g * (1.0 - step.p.array())).matrix();

  // r = tanh(ar), ar = W_rx x + W_rh (q h) + B_r
  Matrix dar = tanh_backward(dr, step.r);
  cell.w_rx.grad.leftCols(in).noalias() += dar * step.x.transpose();
  cell.w_rx.grad.col(in) += dar.rowwise().sum();
  cell.w_rh.grad.noalias() += dar * step.qh.transpose();
  Matrix dx(in, step.x.cols());
  dx.noalias() = cell.w_rx.value.leftCols(in).transpose() * dar;
  Matrix dqh(cell.hidden_dim, step.x.cols());
  dqh.noalias() = cell.w_rh.value.transpose() * dar;
  Matrix dq = dqh.cwiseProduct(step.h);
  dh.array() += dqh.array() * step.q.array();

  // q = sigmoid(aq)
  Matrix daq = sigmoid_backward(dq, step.q);
  cell.w_qx.grad.leftCols(in).noalias() += daq * step.x.transpose();
  cell.w_qx.grad.col(in) += daq.rowwise().sum();
  cell.w_qh.grad.noalias() += daq * step.h.transpose();
  dx.noalias() += cell.w_qx.value.leftCols(in).transpose() * daq;
  dh.noalias() += cell.w_qh.value.transpose() * daq;

  // p = sigmoid(ap)
  Matrix dap = sigmoid_backward(dp, step.p);
  cell.w_px.grad.leftCols(in).noalias() += dap * step.x.transpose();
  cell.w_px.grad.col(in) += dap.rowwise().sum();
  cell.w_ph.grad.noalias() += dap * step.h.transpose();
  dx.noalias() += cell.w_px.value.leftCols(in).transpose() * dap;
  dh.noalias() += cell.w_ph.value.transpose() * dap;

  return {std::move(dx), std::move(dh)};
}

void GruState::reset(Index hidden_dim, Index batch, bool caching_on) {
  h1 = Matrix::Zero(hidden_dim, batch);
  h2 = Matrix::Zero(hidden_dim, batch);
  caching = caching_on;
  cache1.clear();
  cache2.clear();
  in_backward = false;
}

void GruState::drop_caches() {
  cache1.clear();
  cache2.clear();
  in_backward = false;
}

GruStack::GruStack(const std::string& name, Index input_dim, Index hidden_dim)
    : cell1_(name + ".gru1", input_dim, hidden_dim),
      cell2_(name + ".gru2", hidden_dim, hidden_dim) {}

void GruStack::init_params(RngStream& rng) {
  cell1_.init_params(rng);
  cell2_.init_params(rng);
}

std::vector<Param*> GruStack::params() {
  std::vector<Param*> out = cell1_.params();
  for (Param* p : cell2_.params()) out.push_back(p);
  return out;
}

Matrix GruStack::forward(GruState& state, const Matrix& x) const {
  if (state.caching) {
    state.cache1.emplace_back();
    state.cache2.emplace_back();
    state.h1 = gru_cell_forward(cell1_, x, state.h1, &state.cache1.back());
    state.h2 =
        gru_cell_forward(cell2_, state.h1, state.h2, &state.cache2.back());
  } else {
    state.h1 = gru_cell_forward(cell1_, x, state.h1);
    state.h2 = gru_cell_forward(cell2_, state.h1, state.h2);
  }
  return state.h2;
}

Matrix GruStack::backward_step(GruState& state, const Matrix& grad_h2) {
  if (state.cache1.empty() || state.cache2.empty()) {
    throw StateError("GruStack::backward_step: no cached steps");
  }
  if (!state.in_backward) {
    state.dh1 = Matrix::Zero(state.h1.rows(), state.h1.cols());
    state.dh2 = Matrix::Zero(state.h2.rows(), state.h2.cols());
    state.in_backward = true;
  }
  state.dh2 += grad_h2;
  GruCellGrads g2 = gru_cell_backward(cell2_, state.cache2.back(), state.dh2);
  state.cache2.pop_back();
  state.dh2 = std::move(g2.dh);

  state.dh1 += g2.dx;
  GruCellGrads g1 = gru_cell_backward(cell1_, state.cache1.back(), state.dh1);
  state.cache1.pop_back();
  state.dh1 = std::move(g1.dh);
  return std::move(g1.dx);
}

void GruStack::bptt(GruState& state,
                    const std::vector<Matrix>& per_step_h2_grads) {
  if (static_cast<Index>(per_step_h2_grads.size()) != state.steps()) {
    throw StateError("GruStack::bptt: " +
                     std::to_string(per_step_h2_grads.size()) +
                     " grads for " + std::to_string(state.steps()) +
                     " cached steps");
  }
  for (std::size_t t = per_step_h2_grads.size(); t-- > 0;) {
    backward_step(state, per_step_h2_grads[t]);
  }
}

}  // namespace crgan
