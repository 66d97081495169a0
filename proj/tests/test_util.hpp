#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "crgan/gru.hpp"

namespace testutil {

using crgan::GruCell;
using crgan::Index;
using crgan::Matrix;

inline double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Independent scalar re-implementation of one cell step, loops only.
inline Matrix scalar_gru_step(const GruCell& cell, const Matrix& x,
                              const Matrix& h) {
  const Index nh = cell.hidden_dim;
  const Index nx = cell.input_dim;
  const Index n = x.cols();
  Matrix h_next(nh, n);
  for (Index col = 0; col < n; ++col) {
    for (Index i = 0; i < nh; ++i) {
      double ap = cell.w_px.value(i, nx);
      double aq = cell.w_qx.value(i, nx);
      double ar = cell.w_rx.value(i, nx);
      for (Index j = 0; j < nx; ++j) {
        ap += cell.w_px.value(i, j) * x(j, col);
        aq += cell.w_qx.value(i, j) * x(j, col);
        ar += cell.w_rx.value(i, j) * x(j, col);
      }
      for (Index j = 0; j < nh; ++j) {
        ap += cell.w_ph.value(i, j) * h(j, col);
        aq += cell.w_qh.value(i, j) * h(j, col);
      }
      const double p = sigmoid_ref(ap);
      double q_gate_mix = 0.0;
      for (Index j = 0; j < nh; ++j) {
        double aq_j = cell.w_qx.value(j, nx);
        for (Index k = 0; k < nx; ++k) aq_j += cell.w_qx.value(j, k) * x(k, col);
        for (Index k = 0; k < nh; ++k) aq_j += cell.w_qh.value(j, k) * h(k, col);
        q_gate_mix += cell.w_rh.value(i, j) * sigmoid_ref(aq_j) * h(j, col);
      }
      ar += q_gate_mix;
      const double r = std::tanh(ar);
      h_next(i, col) = (1.0 - p) * h(i, col) + p * r;
      (void)aq;
    }
  }
  return h_next;
}

// Central finite difference of a scalar function of one matrix entry.
inline double fd_entry(Matrix& m, Index r, Index c,
                       const std::function<double()>& f, double h = 1e-5) {
  const double saved = m(r, c);
  m(r, c) = saved + h;
  const double up = f();
  m(r, c) = saved - h;
  const double down = f();
  m(r, c) = saved;
  return (up - down) / (2.0 * h);
}

inline Matrix random_matrix(Index rows, Index cols, crgan::RngStream& rng,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
  }
  return m;
}

}  // namespace testutil
