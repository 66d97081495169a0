#include "crgan/layers.hpp"

namespace crgan {

Matrix sigmoid(const Matrix& x) {
  // Clamp only the exponent so extreme logits cannot overflow.
  Matrix y = (1.0 + (-x.array()).min(700.0).max(-700.0).exp()).inverse();
  CRGAN_CHECK_FINITE(y, "sigmoid");
  return y;
}

Matrix tanh_act(const Matrix& x) {
  // 1 - 2 / (e^{2x} + 1); exp saturates to +inf and the limit is exact.
  Matrix y = 1.0 - 2.0 * ((2.0 * x.array()).exp() + 1.0).inverse();
  CRGAN_CHECK_FINITE(y, "tanh_act");
  return y;
}

Matrix sigmoid_backward(const Matrix& grad_out, const Matrix& y) {
  require_same_shape(grad_out, y, "sigmoid_backward");
  return grad_out.array() * y.array() * (1.0 - y.array());
}

Matrix tanh_backward(const Matrix& grad_out, const Matrix& y) {
  require_same_shape(grad_out, y, "tanh_backward");
  return grad_out.array() * (1.0 - y.array().square());
}

Matrix softplus(const Matrix& x) {
  // max(x, 0) + log1p(e^{-|x|})
  return x.array().max(0.0) +
         (1.0 + (-x.array().abs()).exp()).log();
}

Matrix linear_forward(const Param& p, const Matrix& x) {
  const Index in = p.cols() - 1;
  if (x.rows() != in) {
    throw DimensionError("linear_forward(" + p.name + "): weight " +
                         shape_str(p.value) + " incompatible with input " +
                         shape_str(x));
  }
  Matrix o(p.rows(), x.cols());
  o.noalias() = p.value.leftCols(in) * x;
  o.colwise() += p.value.col(in);
  CRGAN_CHECK_FINITE(o, "linear_forward");
  return o;
}

Matrix linear_backward(Param& p, const Matrix& x, const Matrix& grad_out,
                       bool accumulate) {
  const Index in = p.cols() - 1;
  if (x.rows() != in || grad_out.rows() != p.rows() ||
      grad_out.cols() != x.cols()) {
    throw DimensionError("linear_backward(" + p.name + "): weight " +
                         shape_str(p.value) + ", input " + shape_str(x) +
                         ", grad " + shape_str(grad_out));
  }
  if (accumulate) {
    p.grad.leftCols(in).noalias() += grad_out * x.transpose();
    p.grad.col(in) += grad_out.rowwise().sum();
  }
  Matrix dx(in, x.cols());
  dx.noalias() = p.value.leftCols(in).transpose() * grad_out;
  return dx;
}

LinearLayer::LinearLayer(const std::string& name, Index in_dim, Index out_dim)
    : p_(name, out_dim, in_dim + 1) {}

void LinearLayer::init_params(RngStream& rng) {
  init_uniform(p_.value.leftCols(in_dim()), rng, in_dim(), out_dim());
  p_.value.col(in_dim()).setZero();
}

Matrix LinearLayer::forward(Matrix x, bool cache) {
  Matrix o = linear_forward(p_, x);
  if (cache) cached_.push_back(std::move(x));
  return o;
}

Matrix LinearLayer::backward(const Matrix& grad_out, bool accumulate) {
  if (cached_.empty()) {
    throw StateError("LinearLayer " + p_.name +
                     ": backward without cached forward");
  }
  Matrix dx = linear_backward(p_, cached_.back(), grad_out, accumulate);
  cached_.pop_back();
  return dx;
}

Matrix apply_activation(Activation a, const Matrix& x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return tanh_act(x);
    case Activation::Sigmoid: return sigmoid(x);
  }
  throw StateError("apply_activation: unknown activation");
}

Matrix activation_backward(Activation a, const Matrix& grad_out,
                           const Matrix& y) {
  switch (a) {
    case Activation::Identity: return grad_out;
    case Activation::Tanh: return tanh_backward(grad_out, y);
    case Activation::Sigmoid: return sigmoid_backward(grad_out, y);
  }
  throw StateError("activation_backward: unknown activation");
}

Mlp::Mlp(const std::string& name, const std::vector<Index>& dims,
         const std::vector<Activation>& acts)
    : acts_(acts) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) {
    throw ConfigError("Mlp " + name + ": need dims.size() == acts.size() + 1");
  }
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(name + ".linear" + std::to_string(i), dims[i],
                         dims[i + 1]);
  }
  cached_act_.resize(layers_.size());
}

void Mlp::init_params(RngStream& rng) {
  for (auto& l : layers_) l.init_params(rng);
}

Matrix Mlp::forward(const Matrix& x, bool cache) {
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(std::move(h), cache);
    h = apply_activation(acts_[i], h);
    if (cache && acts_[i] != Activation::Identity) {
      cached_act_[i].push_back(h);
    }
  }
  return h;
}

Matrix Mlp::backward(const Matrix& grad_out, bool accumulate_params) {
  Matrix g = grad_out;
  for (std::size_t ri = layers_.size(); ri-- > 0;) {
    if (acts_[ri] != Activation::Identity) {
      if (cached_act_[ri].empty()) {
        throw StateError("Mlp: backward without cached forward");
      }
      g = activation_backward(acts_[ri], g, cached_act_[ri].back());
      cached_act_[ri].pop_back();
    }
    g = layers_[ri].backward(g, accumulate_params);
  }
  return g;
}

void Mlp::clear_cache() {
  for (auto& l : layers_) l.clear_cache();
  for (auto& c : cached_act_) c.clear();
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  out.reserve(layers_.size());
  for (auto& l : layers_) out.push_back(&l.param());
  return out;
}

}  // namespace crgan
