#pragma once

#include "crgan/types.hpp"

namespace crgan {

// Gaussian kernel, either exp(-||u-v||^2 / gamma) or the per-dimension form
// exp(-sum_i (u_i-v_i)^2 / (2 sigma_i^2)).
struct KernelSpec {
  static KernelSpec isotropic(double gamma);
  static KernelSpec per_dimension(Vector sigmas);

  bool is_isotropic = true;
  double gamma = 1.0;
  Vector sigmas;
};

double gaussian_kernel(const KernelSpec& spec, const Vector& u, const Vector& v);

// Biased two-sample statistic over equal-size column sets X, Y (d x T each):
//   (1/T^2) [ sum k(x_i,x_j) + sum k(y_i,y_j) - 2 sum k(x_i,y_j) ]
// with the diagonal terms included.
double mmd_biased(const KernelSpec& spec, const Matrix& X, const Matrix& Y);

// Gradient of upstream * mmd_biased(X, Y) with respect to the columns of Y.
Matrix mmd_backward(const KernelSpec& spec, const Matrix& X, const Matrix& Y,
                    double upstream = 1.0);

}  // namespace crgan
