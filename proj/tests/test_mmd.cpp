#include <doctest.h>

#include <cmath>

#include "crgan/mmd.hpp"
#include "crgan/rng.hpp"
#include "test_util.hpp"

using namespace crgan;

namespace {

// O(T^2) reference: three explicit double loops over kernel evaluations.
double mmd_brute(const KernelSpec& spec, const Matrix& X, const Matrix& Y) {
  const Index T = X.cols();
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (Index i = 0; i < T; ++i) {
    for (Index j = 0; j < T; ++j) {
      sxx += gaussian_kernel(spec, X.col(i), X.col(j));
      syy += gaussian_kernel(spec, Y.col(i), Y.col(j));
      sxy += gaussian_kernel(spec, X.col(i), Y.col(j));
    }
  }
  return (sxx + syy - 2.0 * sxy) / (static_cast<double>(T) * T);
}

}  // namespace

TEST_CASE("kernel: unit at coincidence, bounded, hand values") {
  const KernelSpec iso = KernelSpec::isotropic(1.0);
  Vector u = Vector::Zero(1), v = Vector::Ones(1);
  CHECK(gaussian_kernel(iso, u, u) == 1.0);
  CHECK(gaussian_kernel(iso, u, v) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  Vector sig(2);
  sig << 1.0, 2.0;
  const KernelSpec pd = KernelSpec::per_dimension(sig);
  Vector a = Vector::Zero(2), b(2);
  b << 1.0, 2.0;
  CHECK(gaussian_kernel(pd, a, b) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  RngStream rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vector x = testutil::random_matrix(3, 1, rng, 2.0);
    const Vector y = testutil::random_matrix(3, 1, rng, 2.0);
    const double k = gaussian_kernel(KernelSpec::isotropic(0.7), x, y);
    CHECK(k > 0.0);
    CHECK(k <= 1.0);
  }

  CHECK_THROWS_AS(gaussian_kernel(iso, Vector::Zero(2), Vector::Zero(3)),
                  DimensionError);
  CHECK_THROWS_AS(KernelSpec::isotropic(0.0), ConfigError);
}

TEST_CASE("mmd_biased: identical sets, singleton hand case") {
  RngStream rng(2);
  const Matrix x = testutil::random_matrix(2, 10, rng);
  CHECK(mmd_biased(KernelSpec::isotropic(0.5), x, x) == 0.0);

  Matrix a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.0;
  const double v = mmd_biased(KernelSpec::isotropic(1.0), a, b);
  CHECK(std::abs(v - (2.0 - 2.0 * std::exp(-1.0))) < 1e-12);
}

TEST_CASE("mmd_biased equals the brute-force double loop") {
  RngStream rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const Index d = 1 + static_cast<Index>(rng.uniform_index(5));
    const Index T = 1 + static_cast<Index>(rng.uniform_index(64));
    const Matrix x = testutil::random_matrix(d, T, rng);
    const Matrix y = testutil::random_matrix(d, T, rng);
    KernelSpec spec = KernelSpec::isotropic(0.2 + rng.uniform());
    if (trial % 3 == 0) {
      Vector sig(d);
      for (Index i = 0; i < d; ++i) sig[i] = 0.5 + rng.uniform();
      spec = KernelSpec::per_dimension(sig);
    }
    CHECK(std::abs(mmd_biased(spec, x, y) - mmd_brute(spec, x, y)) < 1e-12);
  }
}

TEST_CASE("mmd_biased: symmetry and permutation invariance") {
  RngStream rng(4);
  const KernelSpec spec = KernelSpec::isotropic(0.5);
  const Matrix x = testutil::random_matrix(3, 20, rng);
  const Matrix y = testutil::random_matrix(3, 20, rng);
  CHECK(std::abs(mmd_biased(spec, x, y) - mmd_biased(spec, y, x)) < 1e-12);

  Matrix perm(3, 20);
  for (Index i = 0; i < 20; ++i) perm.col(i) = x.col(19 - i);
  CHECK(std::abs(mmd_biased(spec, x, perm)) < 1e-12);
  CHECK(mmd_biased(spec, x, y) >= 0.0);

  CHECK_THROWS_AS(mmd_biased(spec, x, y.leftCols(10)), ConfigError);
}

TEST_CASE("mmd_backward: zero at coincidence, finite differences, linearity") {
  RngStream rng(5);
  const KernelSpec spec = KernelSpec::isotropic(0.7);
  const Matrix x = testutil::random_matrix(2, 8, rng);
  CHECK(mmd_backward(spec, x, x).norm() == 0.0);

  const Matrix y = testutil::random_matrix(2, 5, rng);
  const Matrix x5 = testutil::random_matrix(2, 5, rng);
  Matrix y_var = y;
  const Matrix grad = mmd_backward(spec, x5, y_var);
  for (Index c = 0; c < 5; ++c) {
    for (Index r = 0; r < 2; ++r) {
      const double fd = testutil::fd_entry(
          y_var, r, c, [&] { return mmd_biased(spec, x5, y_var); }, 1e-6);
      CHECK(grad(r, c) == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  const Matrix g1 = mmd_backward(spec, x5, y_var, 1.0);
  const Matrix g3 = mmd_backward(spec, x5, y_var, 3.0);
  CHECK((g3 - 3.0 * g1).cwiseAbs().maxCoeff() < 1e-12);

  // per-dimension variant against finite differences as well
  Vector sig(2);
  sig << 0.8, 1.7;
  const KernelSpec pd = KernelSpec::per_dimension(sig);
  const Matrix gpd = mmd_backward(pd, x5, y_var);
  for (Index c = 0; c < 5; ++c) {
    const double fd = testutil::fd_entry(
        y_var, 0, c, [&] { return mmd_biased(pd, x5, y_var); }, 1e-6);
    CHECK(gpd(0, c) == doctest::Approx(fd).epsilon(1e-6));
  }
}
