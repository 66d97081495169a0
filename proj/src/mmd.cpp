#include "crgan/mmd.hpp"

#include <cmath>

namespace crgan {
namespace {

void validate(const KernelSpec& spec, Index dim) {
  if (spec.is_isotropic) {
    if (!(spec.gamma > 0)) throw ConfigError("KernelSpec: gamma must be > 0");
  } else {
    if (spec.sigmas.size() != dim) {
      throw DimensionError("KernelSpec: " + std::to_string(spec.sigmas.size()) +
                           " sigmas for dimension " + std::to_string(dim));
    }
    if (!(spec.sigmas.array() > 0).all()) {
      throw ConfigError("KernelSpec: sigmas must be > 0");
    }
  }
}

// Rows scaled so that k(u, v) = exp(-||u' - v'||^2).
Matrix scaled_columns(const KernelSpec& spec, const Matrix& m) {
  if (spec.is_isotropic) return m / std::sqrt(spec.gamma);
  return (m.array().colwise() / (spec.sigmas.array() * std::sqrt(2.0))).matrix();
}

// Pairwise squared distances ||a_i - b_j||^2 via the Gram expansion
// a2_i + b2_j - 2 a_i . b_j, clamped at zero against cancellation.
Matrix pairwise_sqdist(const Matrix& a, const Matrix& b) {
  const Vector a2 = a.colwise().squaredNorm().transpose();
  const Vector b2 = b.colwise().squaredNorm().transpose();
  Matrix sq(a.cols(), b.cols());
  sq.noalias() = -2.0 * (a.transpose() * b);
  sq.colwise() += a2;
  sq.rowwise() += b2.transpose();
  return sq.cwiseMax(0.0);
}

// Sum of exp(-||a_i - b_j||^2) over all column pairs, streamed in column
// blocks so large sample sets never materialize a full T x T matrix.
double kernel_sum(const Matrix& a, const Matrix& b) {
  constexpr Index kBlock = 512;
  double total = 0.0;
  for (Index j0 = 0; j0 < b.cols(); j0 += kBlock) {
    const Index nb = std::min(kBlock, b.cols() - j0);
    total += (-pairwise_sqdist(a, b.middleCols(j0, nb)).array()).exp().sum();
  }
  return total;
}

// Full kernel matrix K(i, j) = exp(-||a_i - b_j||^2).
Matrix kernel_matrix(const Matrix& a, const Matrix& b) {
  return (-pairwise_sqdist(a, b).array()).exp();
}

}  // namespace

KernelSpec KernelSpec::isotropic(double gamma) {
  KernelSpec s;
  s.is_isotropic = true;
  s.gamma = gamma;
  validate(s, 0);
  return s;
}

KernelSpec KernelSpec::per_dimension(Vector sigmas) {
  KernelSpec s;
  s.is_isotropic = false;
  s.sigmas = std::move(sigmas);
  validate(s, s.sigmas.size());
  return s;
}

double gaussian_kernel(const KernelSpec& spec, const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw DimensionError("gaussian_kernel: dim " + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()));
  }
  validate(spec, u.size());
  if (spec.is_isotropic) {
    return std::exp(-(u - v).squaredNorm() / spec.gamma);
  }
  return std::exp(-((u - v).array() / spec.sigmas.array()).square().sum() / 2.0);
}

double mmd_biased(const KernelSpec& spec, const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
    throw ConfigError("mmd_biased: sample sets must match, got " +
                      shape_str(X) + " vs " + shape_str(Y));
  }
  if (X.cols() == 0) throw ConfigError("mmd_biased: empty sample sets");
  validate(spec, X.rows());

  const Matrix xs = scaled_columns(spec, X);
  const Matrix ys = scaled_columns(spec, Y);
  const double t2 = static_cast<double>(X.cols()) * static_cast<double>(X.cols());
  const double value =
      (kernel_sum(xs, xs) + kernel_sum(ys, ys) - 2.0 * kernel_sum(xs, ys)) / t2;
  // Exact cancellation can land a hair below zero.
  return (value < 0.0 && value > -1e-12) ? 0.0 : value;
}

Matrix mmd_backward(const KernelSpec& spec, const Matrix& X, const Matrix& Y,
                    double upstream) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
    throw ConfigError("mmd_backward: sample sets must match, got " +
                      shape_str(X) + " vs " + shape_str(Y));
  }
  validate(spec, X.rows());
  const Index T = X.cols();

  const Matrix xs = scaled_columns(spec, X);
  const Matrix ys = scaled_columns(spec, Y);
  const Matrix k_yy = kernel_matrix(ys, ys);
  const Matrix k_xy = kernel_matrix(xs, ys);
  const Eigen::RowVectorXd csum_yy = k_yy.colwise().sum();
  const Eigen::RowVectorXd csum_xy = k_xy.colwise().sum();

  // d/dy_j of the pairwise sums: sum_i k(u_i, y_j) s .* (u_i - y_j), with the
  // component scale s = 2/gamma (isotropic) or 1/sigma_l^2 (per dimension).
  // Grouped so coincident sets cancel exactly.
  Matrix term = Y * k_yy;
  term.noalias() -= X * k_xy;
  term -= (Y.array().rowwise() * (csum_yy - csum_xy).array()).matrix();

  const double c = 2.0 * upstream / (static_cast<double>(T) * T);
  if (spec.is_isotropic) {
    return term * (c * 2.0 / spec.gamma);
  }
  return (term.array().colwise() * (c / spec.sigmas.array().square())).matrix();
}

}  // namespace crgan
