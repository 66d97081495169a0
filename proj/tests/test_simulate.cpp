#include <doctest.h>

#include <cmath>

#include "crgan/simulate.hpp"
#include "crgan/training.hpp"
#include "test_util.hpp"

using namespace crgan;

namespace {

CrGanModel tiny_model(std::uint64_t seed) {
  ModelConfig mc{1, 8};
  CrGanModel model = make_crgan(mc, seed);
  model.scaler = Scaler(Vector::Constant(1, -2.0), Vector::Constant(1, 2.0));
  return model;
}

ForecastEnsemble manual_ensemble(const std::vector<std::vector<double>>& values) {
  ForecastEnsemble e;
  e.x_dim = 1;
  e.horizon = static_cast<Index>(values[0].size());
  for (const auto& traj : values) {
    Matrix m(1, e.horizon);
    for (Index t = 0; t < e.horizon; ++t) m(0, t) = traj[static_cast<std::size_t>(t)];
    e.trajectories.push_back(m);
  }
  return e;
}

}  // namespace

TEST_CASE("single-sample single-step forecast equals one manual draw") {
  CrGanModel model = tiny_model(1);
  Matrix prefix(1, 5);
  prefix << -0.5, 0.2, 0.8, -1.0, 0.3;

  const ForecastEnsemble e = monte_carlo_forecast(model.gen, model.scaler,
                                                  prefix, 1, 1, 42);
  REQUIRE(e.size() == 1);

  GruState state;
  state.reset(8, 1, false);
  const Matrix scaled = model.scaler.scale(prefix);
  for (Index t = 0; t < scaled.cols(); ++t) {
    model.gen.advance(state, scaled.col(t));
  }
  RngStream traj_stream = RngStream(42).child(0);
  Matrix z(1, 1);
  z << traj_stream.normal();
  const Matrix manual = model.scaler.unscale(model.gen.sample_with_z(state, z));
  CHECK((e.trajectories[0] - manual).norm() == 0.0);
}

TEST_CASE("forecasts are seed-deterministic with distinct substreams") {
  CrGanModel model = tiny_model(2);
  Matrix prefix(1, 4);
  prefix << 0.0, 0.5, -0.5, 0.1;

  const ForecastEnsemble a =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 8, 5, 7);
  const ForecastEnsemble b =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 8, 5, 7);
  REQUIRE(a.size() == 8);
  for (Index j = 0; j < 8; ++j) {
    CHECK((a.trajectories[static_cast<std::size_t>(j)] -
           b.trajectories[static_cast<std::size_t>(j)]).norm() == 0.0);
  }
  CHECK((a.trajectories[0] - a.trajectories[1]).norm() > 0.0);

  const ForecastEnsemble c =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 8, 5, 8);
  CHECK((a.trajectories[0] - c.trajectories[0]).norm() > 0.0);
}

TEST_CASE("serial and parallel forecasts agree bitwise") {
  CrGanModel model = tiny_model(3);
  Matrix prefix(1, 6);
  prefix << 0.0, 0.5, -0.5, 0.1, 0.9, -0.2;
  const ForecastEnsemble serial =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 150, 7, 11, 1);
  const ForecastEnsemble parallel =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 150, 7, 11, 4);
  REQUIRE(serial.size() == parallel.size());
  for (Index j = 0; j < serial.size(); ++j) {
    CHECK((serial.trajectories[static_cast<std::size_t>(j)] -
           parallel.trajectories[static_cast<std::size_t>(j)]).norm() == 0.0);
  }
}

TEST_CASE("trajectory paths do not depend on the ensemble size") {
  // Warm-up happens before duplication and each trajectory owns its noise
  // substream, so path j only sees batching through float summation order.
  CrGanModel model = tiny_model(4);
  Matrix prefix(1, 3);
  prefix << 0.2, -0.1, 0.4;
  const ForecastEnsemble small =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 1, 6, 5);
  const ForecastEnsemble big =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 50, 6, 5);
  CHECK((small.trajectories[0] - big.trajectories[0]).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("gaussian rnn forecasting runs with the same contract") {
  ModelConfig mc{1, 8};
  GaussianRnn model = make_gaussian_rnn(mc, 6);
  const Scaler scaler(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  Matrix prefix(1, 4);
  prefix << 0.0, 0.2, -0.2, 0.1;
  const ForecastEnsemble a = monte_carlo_forecast(model, scaler, prefix, 64, 5, 9, 1);
  const ForecastEnsemble b = monte_carlo_forecast(model, scaler, prefix, 64, 5, 9, 2);
  for (Index j = 0; j < a.size(); ++j) {
    CHECK((a.trajectories[static_cast<std::size_t>(j)] -
           b.trajectories[static_cast<std::size_t>(j)]).norm() == 0.0);
  }
}

TEST_CASE("prediction intervals: degenerate ensemble and validation") {
  std::vector<std::vector<double>> rows(50, {1.5, -0.5});
  const ForecastEnsemble e = manual_ensemble(rows);
  const PredictionInterval pi = prediction_interval(e, 0.9);
  CHECK(pi.lower(0, 0) == 1.5);
  CHECK(pi.upper(0, 0) == 1.5);
  CHECK(pi.mean(0, 1) == -0.5);

  CHECK_THROWS_AS(prediction_interval(e, 0.0), ConfigError);
  CHECK_THROWS_AS(prediction_interval(e, 1.0), ConfigError);
  std::vector<std::vector<double>> few(10, {0.0});
  CHECK_THROWS_AS(prediction_interval(manual_ensemble(few), 0.9), ConfigError);
}

TEST_CASE("95% interval of a standard normal ensemble brackets +-1.96") {
  RngStream rng(10);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 1000; ++i) rows.push_back({rng.normal()});
  const PredictionInterval pi = prediction_interval(manual_ensemble(rows), 0.95);
  CHECK(std::abs(pi.lower(0, 0) + 1.96) < 0.15);
  CHECK(std::abs(pi.upper(0, 0) - 1.96) < 0.15);
}

TEST_CASE("intervals are nested across coverage levels") {
  CrGanModel model = tiny_model(11);
  Matrix prefix(1, 4);
  prefix << 0.1, -0.4, 0.2, 0.0;
  const ForecastEnsemble e =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 200, 10, 13);
  const PredictionInterval narrow = prediction_interval(e, 0.6);
  const PredictionInterval wide = prediction_interval(e, 0.9);
  for (Index t = 0; t < e.horizon; ++t) {
    CHECK(narrow.lower(0, t) >= wide.lower(0, t));
    CHECK(narrow.upper(0, t) <= wide.upper(0, t));
    CHECK(narrow.lower(0, t) <= narrow.upper(0, t));
  }
}

TEST_CASE("quantiles are monotone in the coverage level") {
  RngStream rng(12);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({rng.normal()});
  const ForecastEnsemble e = manual_ensemble(rows);
  PredictionInterval prev = prediction_interval(e, 0.5);
  for (double p : {0.6, 0.7, 0.8, 0.9, 0.95, 0.99}) {
    const PredictionInterval pi = prediction_interval(e, p);
    CHECK(pi.lower(0, 0) <= prev.lower(0, 0));
    CHECK(pi.upper(0, 0) >= prev.upper(0, 0));
    prev = pi;
  }
}

TEST_CASE("empty prefix is rejected") {
  CrGanModel model = tiny_model(13);
  CHECK_THROWS_AS(monte_carlo_forecast(model.gen, model.scaler, Matrix(1, 0),
                                       10, 5, 1),
                  ConfigError);
}

TEST_CASE("ensemble csv round trip") {
  CrGanModel model = tiny_model(14);
  Matrix prefix(1, 3);
  prefix << 0.3, 0.1, -0.6;
  const ForecastEnsemble e =
      monte_carlo_forecast(model.gen, model.scaler, prefix, 5, 4, 21);
  write_ensemble_csv("ensemble_test.csv", e);
  const ForecastEnsemble back = read_ensemble_csv("ensemble_test.csv");
  REQUIRE(back.size() == e.size());
  REQUIRE(back.horizon == e.horizon);
  for (Index j = 0; j < e.size(); ++j) {
    CHECK((back.trajectories[static_cast<std::size_t>(j)] -
           e.trajectories[static_cast<std::size_t>(j)]).norm() == 0.0);
  }
  std::remove("ensemble_test.csv");
}
