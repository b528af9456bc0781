#include "qrlma/fixtures.hpp"
#include "qrlma/forecast.hpp"
#include "qrlma/gillespie.hpp"
#include "qrlma/infer.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace qrlma;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

ReactionSystem death() { return make_system({"X"}, {{"death", {{"X", 1}}, {}}}); }

ObservationSet single(const std::vector<std::string>& species, const std::vector<double>& times,
                      const Matrix& states) {
  ObservationSet d;
  d.species = species;
  d.replicates.push_back({"0", times, states});
  return d;
}

// Observations that follow the linear mean exactly from several starting states.
ObservationSet noise_free_unitary(const Preset& p) {
  ObservationSet d;
  d.species = p.system.species_names();
  const std::vector<Vector> starts = {p.y0, vec({0, 0, 0}), vec({80, 5, 60}), vec({10, 90, 0})};
  const std::vector<double> times = {0.0, 0.3, 0.9, 2.0, 3.5};
  for (std::size_t c = 0; c < starts.size(); ++c) {
    Matrix states(3, times.size());
    states.col(0) = starts[c];
    for (std::size_t k = 1; k < times.size(); ++k) {
      states.col(k) = lma_predict(p.system, p.theta_true, states.col(k - 1), times[k] - times[k - 1]);
    }
    d.replicates.push_back({std::to_string(c), times, states});
  }
  return d;
}

ObservationSet ssa_cyclic(std::uint64_t seed, std::size_t reps = 1) {
  const Preset p = load_preset("cyclic3");
  return simulate_dataset(p.system, p.theta_true, p.y0, reps, 100, 20, seed);
}

}  // namespace

TEST_CASE("LLA on a single death transition") {
  Matrix states(1, 2);
  states << 100, 90;
  const ObservationSet d = single({"X"}, {0.0, 0.1}, states);
  CHECK(lla_estimate(d, death())(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("LLA on constant trajectories") {
  Matrix states(3, 4);
  for (Index k = 0; k < 4; ++k) states.col(k) = vec({30, 40, 50});
  const ObservationSet d = single({"A", "B", "C"}, {0, 1, 2, 3}, states);
  CHECK(lla_estimate(d, cyclic3_system()).isZero(1e-12));
}

TEST_CASE("LLA needs at least one active reaction") {
  Matrix states(3, 2);
  states << 0, 0, 0, 0, 1, 1;
  const ObservationSet d = single({"A", "B", "C"}, {0, 1}, states);
  CHECK_THROWS_AS(lla_estimate(d, cyclic3_system()), ValidationError);
}

TEST_CASE("LLA is close to the truth at small spacing") {
  const Preset p = load_preset("cyclic3");
  const ObservationSet d = simulate_dataset(p.system, p.theta_true, p.y0, 20, 10, 20, 5);
  const RateVector est = lla_estimate(d, p.system);
  for (Index j = 0; j < 3; ++j) CHECK(est(j) == doctest::Approx(p.theta_true(j)).epsilon(0.1));
}

TEST_CASE("objective values") {
  const Preset p = load_preset("unitary3");
  const ObservationSet d = noise_free_unitary(p);
  CHECK(lma_objective(p.theta_true, d, p.system) < 1e-18);
  for (Index j = 0; j < p.theta_true.size(); ++j) {
    for (double bump : {0.99, 1.01}) {
      RateVector t = p.theta_true;
      t(j) *= bump;
      CHECK(lma_objective(t, d, p.system) > 1e-10);
    }
  }
  const ObservationSet ssa = ssa_cyclic(3);
  CHECK(lma_objective(vec({0.2, 0.1, 0.2}), ssa, cyclic3_system()) > 0);
}

TEST_CASE("scalar gradient by hand") {
  Matrix states(1, 2);
  states << 100, 40;
  const ObservationSet d = single({"X"}, {0.0, 2.0}, states);
  const double theta = 0.5, m = 100 * std::exp(-1.0);
  const double f = (40 - m) * (40 - m);
  const double df = 2 * (40 - m) * 2.0 * 100 * std::exp(-1.0);
  CHECK(lma_objective(vec({theta}), d, death()) == doctest::Approx(f).epsilon(1e-13));
  CHECK(lma_gradient(vec({theta}), d, death())(0) == doctest::Approx(df).epsilon(1e-12));
}

TEST_CASE("gradient against central differences") {
  const ReactionSystem sys = cyclic3_system();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> rate(0.05, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const ObservationSet d = ssa_cyclic(derive_seed(99, trial));
    const RateVector theta = vec({rate(rng), rate(rng), rate(rng)});
    const LmaProblem problem(sys, d);
    Vector g;
    problem.objective(theta, &g);
    const Vector fd = finite_difference_gradient(problem, theta);
    CHECK((g - fd).norm() <= 1e-5 * fd.norm());
    CHECK(g.isApprox(lma_gradient(theta, d, sys), 1e-12));
  }
}

TEST_CASE("species are matched by name") {
  const ObservationSet d = ssa_cyclic(4);
  ObservationSet shuffled = d;
  shuffled.species = {"C", "A", "B"};
  for (auto& rep : shuffled.replicates) {
    Matrix s = rep.states;
    rep.states.row(0) = s.row(2);
    rep.states.row(1) = s.row(0);
    rep.states.row(2) = s.row(1);
  }
  const RateVector t = vec({0.2, 0.1, 0.2});
  CHECK(lma_objective(t, shuffled, cyclic3_system()) == doctest::Approx(lma_objective(t, d, cyclic3_system())));
  shuffled.species = {"C", "A", "Z"};
  CHECK_THROWS_AS(lma_objective(t, shuffled, cyclic3_system()), ValidationError);
}

TEST_CASE("noise-free unitary data is recovered") {
  const Preset p = load_preset("unitary3");
  const ObservationSet d = noise_free_unitary(p);
  const FitResult res = lma_fit(d, p.system);
  CHECK(res.converged);
  CHECK((res.theta_hat - p.theta_true).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(lma_gradient(p.theta_true, d, p.system).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(res.residuals.cols() == d.num_transitions());
  CHECK(res.objective_history.front() >= res.objective_history.back());
}

TEST_CASE("fit on SSA data") {
  const Preset p = load_preset("cyclic3");
  const ObservationSet d = simulate_dataset(p.system, p.theta_true, p.y0, 10, 100, 20, 12);
  FitConfig cfg;
  cfg.compute_stderr = true;
  const FitResult res = lma_fit(d, p.system, cfg);
  CHECK(res.converged);
  for (Index j = 0; j < 3; ++j) CHECK(res.theta_hat(j) == doctest::Approx(p.theta_true(j)).epsilon(0.1));
  REQUIRE(res.standard_errors);
  CHECK((res.standard_errors->array() > 0).all());
  CHECK(res.bic == doctest::Approx(bic_value(res.objective, d.num_residuals(), 3)));

  FitConfig fd = cfg;
  fd.gradient_mode = GradientMode::finite_difference;
  CHECK(lma_fit(d, p.system, fd).theta_hat.isApprox(res.theta_hat, 1e-4));

  FitConfig user;
  user.initializer = Initializer::user_supplied;
  user.initial_theta = vec({1.0, 1.0, 1.0});
  const FitResult from_user = lma_fit(d, p.system, user);
  CHECK(from_user.theta_init == vec({1.0, 1.0, 1.0}));
  CHECK(from_user.theta_hat.isApprox(res.theta_hat, 1e-4));
}

TEST_CASE("BIC arithmetic") {
  const double n = 60;
  CHECK(bic_value(100.0, 60, 3) - bic_value(50.0, 60, 3) == doctest::Approx(n * std::log(2.0)));
  CHECK(bic_value(100.0, 60, 4) - bic_value(100.0, 60, 3) == doctest::Approx(std::log(n)));
  CHECK(bic_value(60.0, 60, 0) == doctest::Approx(0.0));
}

TEST_CASE("fit configuration validation") {
  FitConfig cfg;
  cfg.gradient_tolerance = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = FitConfig{};
  cfg.initializer = Initializer::user_supplied;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(parse_initializer("values") == Initializer::user_supplied);
  CHECK(parse_gradient_mode("finite_difference") == GradientMode::finite_difference);
  CHECK_THROWS_AS(parse_gradient_mode("adjoint"), ValidationError);
}
