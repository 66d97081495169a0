#include <doctest.h>

#include <cmath>

#include "crgan/checkpoint.hpp"
#include "crgan/gradcheck.hpp"
#include "crgan/models.hpp"
#include "crgan/training.hpp"
#include "test_util.hpp"

using namespace crgan;

TEST_CASE("scaler maps the fitted range onto the unit cube") {
  RngStream rng(1);
  Matrix series = testutil::random_matrix(2, 60, rng, 3.0);
  const Scaler s = Scaler::fit(series);

  Matrix lo(2, 1), hi(2, 1);
  lo << s.minimum()(0), s.minimum()(1);
  hi << s.maximum()(0), s.maximum()(1);
  CHECK(s.scale(lo).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((s.scale(hi).array() - 1.0).abs().maxCoeff() < 1e-14);

  const Matrix x = testutil::random_matrix(2, 20, rng);
  CHECK((s.unscale(s.scale(x)) - x).cwiseAbs().maxCoeff() < 1e-12);

  Matrix degenerate = Matrix::Ones(2, 10);
  degenerate.row(0) = series.row(0).leftCols(10);
  CHECK_THROWS_AS(Scaler::fit(degenerate), ConfigError);
}

TEST_CASE("generator samples live in the open unit cube and are repeatable") {
  ModelConfig mc{2, 16};
  CrGanModel model = make_crgan(mc, 5);
  GruState state;
  state.reset(16, 8, false);
  RngStream rng(6);
  model.gen.advance(state, testutil::random_matrix(2, 8, rng, 0.3));

  const Matrix z = testutil::random_matrix(2, 8, rng);
  const Matrix a = model.gen.sample_with_z(state, z);
  const Matrix b = model.gen.sample_with_z(state, z);
  CHECK((a - b).norm() == 0.0);
  CHECK((a.array() > 0.0).all());
  CHECK((a.array() < 1.0).all());
}

TEST_CASE("zero-weight generator head ignores the noise") {
  ModelConfig mc{2, 16};
  CrGanModel model(mc);  // all parameters zero
  GruState state;
  state.reset(16, 4, false);
  RngStream rng(7);
  const Matrix a = model.gen.sample_with_z(state, testutil::random_matrix(2, 4, rng));
  const Matrix b = model.gen.sample_with_z(state, testutil::random_matrix(2, 4, rng));
  CHECK((a - b).norm() == 0.0);
  CHECK((a.array() == 0.5).all());  // sigmoid of the zero bias
}

TEST_CASE("discriminator scores: range, determinism, untrained mean near 1/2") {
  ModelConfig mc{1, 32};
  CrGanModel model = make_crgan(mc, 8);
  GruState state;
  state.reset(32, 1, false);
  RngStream rng(9);
  model.dis.advance(state, Matrix::Constant(1, 1, 0.4));

  double sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Matrix cand(1, 1);
    cand << rng.uniform();
    const double s = model.dis.score(state, cand)(0, 0);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    sum += s;
  }
  CHECK(std::abs(sum / 1000.0 - 0.5) < 0.1);

  Matrix cand(1, 1);
  cand << 0.3;
  const double s1 = model.dis.score(state, cand)(0, 0);
  const double s2 = model.dis.score(state, cand)(0, 0);
  CHECK(s1 == s2);
}

TEST_CASE("scoring a candidate never advances the conditioning state") {
  ModelConfig mc{1, 8};
  CrGanModel model = make_crgan(mc, 10);
  GruState state;
  state.reset(8, 2, false);
  RngStream rng(11);
  model.dis.advance(state, testutil::random_matrix(1, 2, rng, 0.2));
  const Matrix h_before = state.h2;
  model.dis.score(state, Matrix::Constant(1, 2, 0.7));
  model.dis.score(state, Matrix::Constant(1, 2, 0.1));
  CHECK((state.h2 - h_before).norm() == 0.0);
  CHECK(state.steps() == 0);
}

TEST_CASE("marginal discriminator: range, determinism, zero-weight case") {
  MarginalDiscriminator marg(2, 16);
  RngStream rng(12);
  marg.init_params(rng);
  const Matrix dx = testutil::random_matrix(2, 6, rng, 0.5);
  const Matrix s1 = marg.score(dx);
  const Matrix s2 = marg.score(dx);
  CHECK((s1 - s2).norm() == 0.0);
  CHECK((s1.array() > 0.0).all());
  CHECK((s1.array() < 1.0).all());

  MarginalDiscriminator zero(2, 16);
  CHECK((zero.score(dx).array() == 0.5).all());
}

TEST_CASE("gaussian rnn nll: exact value at unit variance and zero residual") {
  ModelConfig mc{2, 8};
  GaussianRnn model(mc);  // zero weights: mean 0, log-variance 0
  const Matrix seq = Matrix::Zero(2, 11);
  const double nll = model.nll(seq);
  CHECK(nll == doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("gaussian rnn nll decreases as variance shrinks on zero residual") {
  ModelConfig mc{1, 8};
  double prev = std::numeric_limits<double>::infinity();
  for (double lv : {0.0, -1.0, -2.0, -4.0}) {
    GaussianRnn model(mc);
    model.log_var_head().param().value.col(8).setConstant(lv);
    const double nll = model.nll(Matrix::Zero(1, 9));
    CHECK(nll < prev);
    prev = nll;
  }
}

TEST_CASE("gaussian rnn nll gradient matches finite differences") {
  ModelConfig mc{2, 6};
  GaussianRnn model = make_gaussian_rnn(mc, 13);
  RngStream rng(14);
  Matrix seq = testutil::random_matrix(2, 7, rng, 0.4).array() + 0.5;
  const auto loss = [&]() { return model.nll(seq, true); };
  CHECK(grad_check(loss, model.params()).max_rel_error() < 1e-5);
}

TEST_CASE("checkpoint round trip reproduces forward results bit for bit") {
  ModelConfig mc{2, 16};
  CrGanModel model = make_crgan(mc, 21);
  model.scaler = Scaler(Vector::Constant(2, -1.5), Vector::Constant(2, 2.5));

  TrainConfig cfg;
  cfg.hidden_dim = 16;
  Checkpoint ck = to_checkpoint(model, cfg, 0.5);
  const std::string path = "roundtrip_test.ckpt";
  save_checkpoint(path, ck);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.kind == "crgan");
  CHECK(loaded.dt == 0.5);
  CrGanModel restored = crgan_from_checkpoint(loaded);

  RngStream rng(22);
  const Matrix x = testutil::random_matrix(2, 3, rng, 0.2);
  const Matrix z = testutil::random_matrix(2, 3, rng);
  GruState s1, s2;
  s1.reset(16, 3, false);
  s2.reset(16, 3, false);
  model.gen.advance(s1, x);
  restored.gen.advance(s2, x);
  CHECK((s1.h2 - s2.h2).norm() == 0.0);
  const Matrix out1 = model.gen.sample_with_z(s1, z);
  const Matrix out2 = restored.gen.sample_with_z(s2, z);
  CHECK((out1 - out2).norm() == 0.0);
  const Matrix sc1 = model.dis.score(s1, out1);
  const Matrix sc2 = restored.dis.score(s2, out2);
  CHECK((sc1 - sc2).norm() == 0.0);
  CHECK((model.scaler.minimum() - restored.scaler.minimum()).norm() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loading validates block shapes") {
  ModelConfig mc{2, 16};
  CrGanModel model = make_crgan(mc, 23);
  model.scaler = Scaler(Vector::Constant(2, 0.0), Vector::Constant(2, 1.0));
  TrainConfig cfg;
  cfg.hidden_dim = 16;
  Checkpoint ck = to_checkpoint(model, cfg, 1.0);
  ck.config["hidden_dim"] = "8";  // shape mismatch against stored blocks
  CHECK_THROWS_AS(crgan_from_checkpoint(ck), IoError);
}
