#pragma once

#include <vector>

#include "crgan/param.hpp"

namespace crgan {

// Entrywise activations. Backward rules take the cached forward output y.
Matrix sigmoid(const Matrix& x);
Matrix tanh_act(const Matrix& x);
Matrix sigmoid_backward(const Matrix& grad_out, const Matrix& y);
Matrix tanh_backward(const Matrix& grad_out, const Matrix& y);
// log(1 + e^x), overflow-safe; evaluates GAN log terms from logits.
Matrix softplus(const Matrix& x);

// o = W x + c with W (out x in) and c (out x 1) packed into one
// (out, in + 1) parameter block, bias last.
Matrix linear_forward(const Param& p, const Matrix& x);
// Accumulates dW = g x^T and dc = rowsum(g) into p.grad (unless accumulate is
// false) and returns dL/dx = W^T g. x must be the matching forward input.
Matrix linear_backward(Param& p, const Matrix& x, const Matrix& grad_out,
                       bool accumulate = true);

// Linear layer owning its parameter block and a LIFO cache of forward inputs,
// so a rollout of forwards can be unwound by backwards in reverse order.
class LinearLayer {
 public:
  LinearLayer(const std::string& name, Index in_dim, Index out_dim);

  void init_params(RngStream& rng);
  // Takes x by value so rvalue inputs move straight into the cache.
  Matrix forward(Matrix x, bool cache);
  Matrix backward(const Matrix& grad_out, bool accumulate = true);

  Param& param() { return p_; }
  const Param& param() const { return p_; }
  Index in_dim() const { return p_.cols() - 1; }
  Index out_dim() const { return p_.rows(); }
  void clear_cache() { cached_.clear(); }

 private:
  Param p_;
  std::vector<Matrix> cached_;
};

enum class Activation { Identity, Tanh, Sigmoid };

Matrix apply_activation(Activation a, const Matrix& x);
Matrix activation_backward(Activation a, const Matrix& grad_out,
                           const Matrix& y);

// Feed-forward head: alternating linear layers and entrywise activations.
class Mlp {
 public:
  // dims has one entry per interface (input, hidden..., output); acts has one
  // entry per layer.
  Mlp(const std::string& name, const std::vector<Index>& dims,
      const std::vector<Activation>& acts);

  void init_params(RngStream& rng);
  Matrix forward(const Matrix& x, bool cache);
  // Pops one cached forward; param grads accumulate unless accumulate_params
  // is false (input gradient is always produced).
  Matrix backward(const Matrix& grad_out, bool accumulate_params = true);
  void clear_cache();

  std::vector<Param*> params();
  Index in_dim() const { return layers_.front().in_dim(); }
  Index out_dim() const { return layers_.back().out_dim(); }

 private:
  std::vector<LinearLayer> layers_;
  std::vector<Activation> acts_;
  std::vector<std::vector<Matrix>> cached_act_;  // per layer, LIFO of outputs
};

}  // namespace crgan
