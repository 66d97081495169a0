#include <doctest.h>

#include <cmath>

#include "crgan/gradcheck.hpp"
#include "crgan/layers.hpp"
#include "crgan/param.hpp"
#include "crgan/rng.hpp"
#include "test_util.hpp"

using namespace crgan;

TEST_CASE("rng streams are deterministic and splittable") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream parent(42);
  RngStream c0 = parent.child(0), c1 = parent.child(1);
  CHECK(c0.next_u64() != c1.next_u64());

  RngStream n(7);
  double sum = 0.0, sq = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double z = n.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / draws;
  const double var = sq / draws - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));

  RngStream u(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("linear_forward identity, hand case, zero weights") {
  Param ident("ident", 2, 3);
  ident.value << 1, 0, 0, 0, 1, 0;
  Matrix x(2, 1);
  x << 1, 2;
  CHECK((linear_forward(ident, x) - x).norm() == 0.0);

  Param row("row", 1, 3);
  row.value << 1, 1, 3;
  Matrix x2(2, 1);
  x2 << 2, 2;
  CHECK(linear_forward(row, x2)(0, 0) == doctest::Approx(7.0));

  Param bias_only("bias", 2, 3);
  bias_only.value.setZero();
  bias_only.value.col(2) << 5, 5;
  RngStream rng(3);
  for (int i = 0; i < 2; ++i) {
    const Matrix any = testutil::random_matrix(2, 4, rng);
    const Matrix o = linear_forward(bias_only, any);
    CHECK((o.array() == 5.0).all());
  }

  Matrix bad(3, 1);
  CHECK_THROWS_AS(linear_forward(ident, bad), DimensionError);
}

TEST_CASE("linear_backward identity jacobian and outer product") {
  Param ident("ident", 2, 3);
  ident.value << 1, 0, 0, 0, 1, 0;
  Matrix x(2, 1);
  x << 0.3, -0.7;
  Matrix g(2, 1);
  g << 1.5, -2.5;
  CHECK((linear_backward(ident, x, g) - g).norm() == 0.0);

  Param w("w", 1, 3);
  w.value << 0.2, -0.4, 0.0;
  w.zero_grad();
  Matrix x2(2, 1);
  x2 << 1, 0;
  Matrix g2(1, 1);
  g2 << 2;
  linear_backward(w, x2, g2);
  CHECK(w.grad(0, 0) == doctest::Approx(2.0));
  CHECK(w.grad(0, 1) == doctest::Approx(0.0));
  CHECK(w.grad(0, 2) == doctest::Approx(2.0));
}

TEST_CASE("linear layer matches finite differences") {
  RngStream rng(11);
  LinearLayer layer("fd", 3, 2);
  layer.init_params(rng);
  const Matrix x = testutil::random_matrix(3, 4, rng);
  const Matrix probe = testutil::random_matrix(2, 4, rng);

  const auto loss = [&]() {
    const Matrix y = layer.forward(x, true);
    const double value = (y.array() * probe.array()).sum();
    layer.backward(probe);
    return value;
  };
  const GradCheckReport report = grad_check(loss, {&layer.param()});
  CHECK(report.max_rel_error() < 1e-6);
}

TEST_CASE("layer backward requires a cached forward") {
  LinearLayer layer("state", 2, 2);
  Matrix g = Matrix::Zero(2, 1);
  CHECK_THROWS_AS(layer.backward(g), StateError);
}

TEST_CASE("activation values and gradients") {
  Matrix zero = Matrix::Zero(1, 1);
  CHECK(sigmoid(zero)(0, 0) == doctest::Approx(0.5));
  CHECK(tanh_act(zero)(0, 0) == doctest::Approx(0.0));

  Matrix ln3(1, 1);
  ln3 << std::log(3.0);
  CHECK(sigmoid(ln3)(0, 0) == doctest::Approx(0.75).epsilon(1e-12));

  RngStream rng(5);
  Matrix x = testutil::random_matrix(4, 3, rng, 2.0);
  const Matrix sy = sigmoid(x);
  const Matrix ty = tanh_act(x);
  CHECK((sy.array() > 0.0).all());
  CHECK((sy.array() < 1.0).all());
  CHECK((ty.array() > -1.0).all());
  CHECK((ty.array() < 1.0).all());
  for (Index i = 0; i < x.size(); ++i) {
    CHECK(ty.data()[i] == doctest::Approx(std::tanh(x.data()[i])).epsilon(1e-12));
  }

  // entrywise derivative vs finite differences
  Matrix probe = testutil::random_matrix(4, 3, rng);
  const Matrix ds = sigmoid_backward(probe, sy);
  const Matrix dt = tanh_backward(probe, ty);
  for (Index i = 0; i < 5; ++i) {
    const Index r = i % x.rows(), c = i % x.cols();
    const double fd_s = testutil::fd_entry(
        x, r, c, [&] { return (sigmoid(x).array() * probe.array()).sum(); });
    const double fd_t = testutil::fd_entry(
        x, r, c, [&] { return (tanh_act(x).array() * probe.array()).sum(); });
    CHECK(ds(r, c) == doctest::Approx(fd_s).epsilon(1e-6));
    CHECK(dt(r, c) == doctest::Approx(fd_t).epsilon(1e-6));
  }

  // saturation stays finite
  Matrix extreme(1, 2);
  extreme << -1000.0, 1000.0;
  CHECK(all_finite(sigmoid(extreme)));
  CHECK(all_finite(tanh_act(extreme)));
  CHECK(sigmoid(extreme)(0, 0) > 0.0);
}

TEST_CASE("softplus agrees with log(1+exp) and saturates safely") {
  Matrix x(1, 4);
  x << -800.0, -1.0, 1.0, 800.0;
  const Matrix y = softplus(x);
  CHECK(y(0, 0) == doctest::Approx(0.0));
  CHECK(y(0, 1) == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-12));
  CHECK(y(0, 2) == doctest::Approx(std::log1p(std::exp(1.0))).epsilon(1e-12));
  CHECK(y(0, 3) == doctest::Approx(800.0));
}

TEST_CASE("adam_step zero gradient is the identity on value") {
  Param p("p", 2, 2);
  p.value << 1, 2, 3, 4;
  const Matrix before = p.value;
  adam_step(p, 0.1);
  CHECK((p.value - before).norm() == 0.0);
  CHECK(p.step_count == 1);
}

TEST_CASE("adam_step first update approximates -lr for unit gradient") {
  Param p("p", 1, 1);
  p.grad << 1.0;
  adam_step(p, 0.01);
  const double delta1 = std::abs(p.value(0, 0));
  CHECK(std::abs(p.value(0, 0) + 0.01) < 1e-6 * 0.01);
  CHECK(p.grad(0, 0) == 0.0);

  // a second identical step must not grow the update beyond 1%
  const double before = p.value(0, 0);
  p.grad << 1.0;
  adam_step(p, 0.01);
  const double delta2 = std::abs(p.value(0, 0) - before);
  CHECK(delta2 <= delta1 * 1.01);
}

TEST_CASE("adam_step aborts on non-finite gradients naming the parameter") {
  Param p("theta_g.head", 1, 1);
  p.grad << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(adam_step(p, 0.1),
                       doctest::Contains("theta_g.head"), NumericError);
}

TEST_CASE("optimizer clips the global gradient norm") {
  Param a("a", 1, 1), b("b", 1, 1);
  a.grad << 30.0;
  b.grad << 40.0;  // joint norm 50
  AdamOptimizer opt({&a, &b}, 5.0);
  CHECK(opt.step(0.0));  // lr 0 isolates the clip path
  a.grad << 0.3;
  b.grad << 0.4;
  CHECK_FALSE(opt.step(0.0));
}

TEST_CASE("cosine_lr endpoints, midpoint, monotonicity, range") {
  CHECK(cosine_lr(0, 100, 5e-5, 1e-5) == doctest::Approx(5e-5));
  CHECK(cosine_lr(100, 100, 5e-5, 1e-5) == doctest::Approx(1e-5));
  CHECK(cosine_lr(50, 100, 5e-5, 1e-5) == doctest::Approx(3e-5));
  double prev = cosine_lr(0, 1000, 5e-5, 1e-5);
  for (long k = 1; k <= 1000; ++k) {
    const double lr = cosine_lr(k, 1000, 5e-5, 1e-5);
    CHECK(lr <= prev + 1e-18);
    prev = lr;
  }
  CHECK_THROWS_AS(cosine_lr(101, 100, 5e-5, 1e-5), ConfigError);
  CHECK_THROWS_AS(cosine_lr(-1, 100, 5e-5, 1e-5), ConfigError);
}

TEST_CASE("random small linear layers match finite differences (property)") {
  RngStream rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Index in = 1 + static_cast<Index>(rng.uniform_index(5));
    const Index out = 1 + static_cast<Index>(rng.uniform_index(4));
    const Index n = 1 + static_cast<Index>(rng.uniform_index(3));
    LinearLayer layer("prop", in, out);
    layer.init_params(rng);
    const Matrix x = testutil::random_matrix(in, n, rng);
    const Matrix probe = testutil::random_matrix(out, n, rng);
    const auto loss = [&]() {
      const Matrix y = layer.forward(x, true);
      const double v = (y.array() * probe.array()).sum();
      layer.backward(probe);
      return v;
    };
    CHECK(grad_check(loss, {&layer.param()}).max_rel_error() < 1e-4);
  }
}
