#include "qrlma/fixtures.hpp"
#include "qrlma/forecast.hpp"
#include "qrlma/gillespie.hpp"
#include "qrlma/uncertainty.hpp"

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

Matrix fd_sensitivity(const ReactionSystem& sys, const RateVector& theta, const StateVector& y0, double s) {
  Matrix out(y0.size(), theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    const double h = 1e-6 * std::max(theta(j), 1.0);
    RateVector tp = theta, tm = theta;
    tp(j) += h;
    tm(j) -= h;
    out.col(j) = (lma_predict(sys, tp, y0, s) - lma_predict(sys, tm, y0, s)) / (2 * h);
  }
  return out;
}

// Linear-mean observations of unitary3 plus Gaussian noise of scale sigma (common draws).
ObservationSet noisy_unitary(double sigma) {
  const Preset p = load_preset("unitary3");
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  ObservationSet d;
  d.species = p.system.species_names();
  const std::vector<double> times = {0.0, 0.5, 1.0, 2.0};
  for (int c = 0; c < 30; ++c) {
    Matrix states(3, times.size());
    states.col(0) = p.y0;
    for (std::size_t k = 1; k < times.size(); ++k) {
      states.col(k) = lma_predict(p.system, p.theta_true, states.col(k - 1), times[k] - times[k - 1]);
      for (Index i = 0; i < 3; ++i) states(i, k) = std::max(0.0, states(i, k) + sigma * g(rng));
    }
    d.replicates.push_back({std::to_string(c), times, states});
  }
  return d;
}

}  // namespace

TEST_CASE("sensitivity special values") {
  const ReactionSystem sys = cyclic3_system();
  CHECK(predict_sensitivity(sys, vec({0.2, 0.1, 0.2}), vec({10, 20, 10}), 0.0).isZero());
  for (auto method : {SensitivityMethod::automatic, SensitivityMethod::inverse, SensitivityMethod::phi1}) {
    const Matrix s = predict_sensitivity(death(), vec({0.5}), vec({100}), 2.0, method);
    CHECK(s(0, 0) == doctest::Approx(-200 * std::exp(-1.0)).epsilon(1e-12));
  }
}

TEST_CASE("sensitivity against central differences") {
  const ReactionSystem sys = cyclic3_system();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> rate(0.01, 0.5), count(5, 120), horizon(0.001, 0.05);
  for (int trial = 0; trial < 30; ++trial) {
    const RateVector theta = vec({rate(rng), rate(rng), rate(rng)});
    const StateVector y0 = vec({std::round(count(rng)), std::round(count(rng)), std::round(count(rng))});
    const double s = horizon(rng);
    const Matrix fd = fd_sensitivity(sys, theta, y0, s);
    const Matrix phi = predict_sensitivity(sys, theta, y0, s, SensitivityMethod::phi1);
    const Matrix inv = predict_sensitivity(sys, theta, y0, s, SensitivityMethod::inverse);
    CHECK((phi - fd).norm() <= 1e-5 * fd.norm());
    CHECK((inv - phi).norm() <= 1e-7 * phi.norm());
  }
}

TEST_CASE("singular P falls back to the phi1 route") {
  // source-only system: P = 0
  const ReactionSystem sys = make_system({"X"}, {{"birth", {}, {{"X", 1}}}});
  const Matrix s = predict_sensitivity(sys, vec({3}), vec({0}), 2.0);
  CHECK(s(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("information from scores") {
  // zero residuals everywhere
  const Preset p = load_preset("unitary3");
  const ObservationSet exact = noisy_unitary(0.0);
  CHECK(fisher_information(p.theta_true, exact, p.system).isZero(1e-12));
  const StandardErrors none = standard_errors(p.theta_true, exact, p.system);
  CHECK_FALSE(none.identifiable);
  CHECK_FALSE(none.warning.empty());
  CHECK(std::isinf(none.values(0)));

  // one observation, one rate: (xi^T r)^2 = (f'/2)^2
  Matrix states(1, 2);
  states << 100, 40;
  ObservationSet one;
  one.species = {"X"};
  one.replicates.push_back({"0", {0.0, 2.0}, states});
  const double g = lma_gradient(vec({0.5}), one, death())(0);
  CHECK(fisher_information(vec({0.5}), one, death())(0, 0) == doctest::Approx(g * g / 4).epsilon(1e-12));

  // symmetric and positive semidefinite on fitted SSA data
  for (int seed = 0; seed < 5; ++seed) {
    const Preset c = load_preset("cyclic3");
    const ObservationSet d = simulate_dataset(c.system, c.theta_true, c.y0, 3, 100, 20, derive_seed(3, seed));
    const FitResult fit = lma_fit(d, c.system);
    const Matrix f = fisher_information(fit.theta_hat, d, c.system);
    CHECK((f - f.transpose()).norm() <= 1e-12 * f.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(f).eigenvalues().minCoeff() >= -1e-10 * f.norm());
  }
}

TEST_CASE("standard errors and the noise level") {
  // The outer-product information scales with the squared residuals, so its
  // inverse shrinks as the noise grows; the sandwich form grows with it.
  const Preset p = load_preset("unitary3");
  FitConfig cfg;
  cfg.compute_stderr = true;
  const FitResult low = lma_fit(noisy_unitary(0.5), p.system, cfg);
  const FitResult high = lma_fit(noisy_unitary(1.0), p.system, cfg);
  REQUIRE(low.standard_errors);
  REQUIRE(high.standard_errors);
  CHECK((high.standard_errors->array() < low.standard_errors->array()).all());

  cfg.stderr_method = CovarianceMethod::sandwich;
  const FitResult low_s = lma_fit(noisy_unitary(0.5), p.system, cfg);
  const FitResult high_s = lma_fit(noisy_unitary(1.0), p.system, cfg);
  const Vector ratio = high_s.standard_errors->cwiseQuotient(*low_s.standard_errors);
  CHECK((ratio.array() > 1.5).all());
  CHECK((ratio.array() < 2.5).all());
}

TEST_CASE("Gauss-Newton matrix and gradient consistency") {
  const Preset c = load_preset("cyclic3");
  const ObservationSet d = simulate_dataset(c.system, c.theta_true, c.y0, 2, 100, 10, 31);
  const LmaProblem problem(c.system, d);
  const RateVector theta = vec({0.25, 0.08, 0.15});
  Matrix b = Matrix::Zero(3, 3);
  Vector grad = Vector::Zero(3);
  const Matrix res = problem.residuals(theta);
  Index k = 0;
  for (const auto& tr : problem.transitions()) {
    const Matrix xi = predict_sensitivity(c.system, theta, tr.y_prev, tr.dt);
    b += xi.transpose() * xi;
    grad -= 2 * xi.transpose() * res.col(k++);
  }
  CHECK(gauss_newton_matrix(problem, theta).isApprox(b, 1e-12));
  Vector g;
  problem.objective(theta, &g);
  CHECK((g - grad).norm() <= 1e-10 * grad.norm());
}

TEST_CASE("singular information") {
  Matrix f = Matrix::Zero(3, 3);
  f(0, 0) = 4.0;
  f(1, 1) = 1.0;
  f(1, 2) = 1.0;
  f(2, 1) = 1.0;
  f(2, 2) = 1.0;
  const StandardErrors se = standard_errors_from_information(f, {"a", "b", "c"});
  CHECK_FALSE(se.identifiable);
  CHECK(se.values(0) == doctest::Approx(0.5));
  CHECK(std::isinf(se.values(1)));
  CHECK(std::isinf(se.values(2)));
  CHECK(se.null_support == std::vector<Index>{1, 2});
  CHECK(se.warning.find("b") != std::string::npos);

  Matrix full = Matrix::Identity(2, 2) * 4.0;
  full(0, 1) = full(1, 0) = 1.0;
  const StandardErrors ok = standard_errors_from_information(full);
  CHECK(ok.identifiable);
  CHECK(ok.values(0) == doctest::Approx(std::sqrt(full.inverse()(0, 0))));

  const StandardErrors sw = sandwich_standard_errors(full, 2.0 * full);
  CHECK(sw.values(1) == doctest::Approx(std::sqrt(2.0 * full.inverse()(1, 1))));
  CHECK_FALSE(sandwich_standard_errors(f, f).identifiable);
}
