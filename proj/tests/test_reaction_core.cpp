#include "qrlma/fixtures.hpp"
#include "qrlma/hazard.hpp"
#include "qrlma/reaction_system.hpp"

#include <doctest.h>

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

}  // namespace

TEST_CASE("cyclic network stoichiometry") {
  const ReactionSystem sys = cyclic3_system();
  IntMatrix k(3, 3), v(3, 3);
  k << 2, 1, 0, 0, 1, 0, 0, 0, 2;
  v << -2, -1, 2, 2, -1, 0, 0, 3, -2;
  CHECK(sys.reactants() == k);
  CHECK(sys.net_effect() == v);
  CHECK(sys.net_effect_real() == v.cast<double>());
  CHECK_FALSE(sys.is_unitary());
  CHECK(sys.describe_reaction(1) == "A + B -> 3C");
}

TEST_CASE("binomial and digamma") {
  CHECK(binomial(10.0, 2) == 45.0);
  CHECK(binomial(1.0, 2) == 0.0);
  CHECK(binomial(0.5, 2) == 0.0);
  CHECK(binomial(7.0, 0) == 1.0);
  CHECK(binomial(30.0, 12) == doctest::Approx(86493225.0).epsilon(1e-12));
  CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-14));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-14));
  CHECK(std::isnan(digamma(-2.0)));
  // derivative of y(y-1)/2 is y - 0.5
  CHECK(binomial_derivative(10.0, 2) == doctest::Approx(9.5));
  CHECK(binomial_derivative(1.0, 2) == doctest::Approx(0.5));
  CHECK(binomial_derivative(0.5, 2) == 0.0);
  // large k goes through lgamma and digamma
  const double y = 40.3, h = 1e-5;
  CHECK(binomial_derivative(y, 15) ==
        doctest::Approx((binomial(y + h, 15) - binomial(y - h, 15)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("kappa and hazard") {
  const ReactionSystem sys = cyclic3_system();
  const Vector y = vec({10, 20, 10});
  CHECK(kappa(sys, y) == vec({45, 200, 45}));
  CHECK(hazard(sys, y, vec({0.2, 0.1, 0.2})).isApprox(vec({9, 20, 9}), 1e-14));
  CHECK(hazard(sys, y, Vector::Zero(3)).isZero());
  CHECK(kappa(sys, vec({1, 0, 5}))(0) == 0.0);
  CHECK(kappa(sys, vec({1, 0, 5}))(1) == 0.0);

  const ReactionSystem source = make_system({"X"}, {{"birth", {}, {{"X", 1}}}});
  CHECK(kappa(source, vec({123}))(0) == 1.0);

  IntMatrix k = IntMatrix::Identity(3, 3);
  const ReactionSystem unit({"A", "B", "C"}, k, IntMatrix::Zero(3, 3));
  CHECK(unit.is_unitary());
  CHECK(hazard(unit, vec({4, 5, 6}), vec({1, 1, 1})) == vec({4, 5, 6}));
}

TEST_CASE("hazard jacobian") {
  const ReactionSystem sys = cyclic3_system();
  const Vector theta = vec({0.2, 0.1, 0.2});
  const auto jac = hazard_jacobian(sys, vec({10, 20, 10}), theta);
  Matrix expected(3, 3);
  expected << 1.9, 0, 0, 2.0, 1.0, 0, 0, 0, 1.9;
  CHECK(jac.jacobian.isApprox(expected, 1e-14));

  // central differences at non-integer states, inside the support
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(2.0, 60.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y = vec({u(rng), u(rng), u(rng)});
    const Matrix h = kappa_jacobian(sys, y);
    for (Index l = 0; l < 3; ++l) {
      Vector yp = y, ym = y;
      yp(l) += 1e-6;
      ym(l) -= 1e-6;
      const Vector fd = (kappa(sys, yp) - kappa(sys, ym)) / 2e-6;
      CHECK((h.col(l) - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("lma coefficients of the cyclic network") {
  const ReactionSystem sys = cyclic3_system();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> count(0, 200);
  std::uniform_real_distribution<double> rate(0.01, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector y = vec({double(count(rng)), double(count(rng)), double(count(rng))});
    const Vector t = vec({rate(rng), rate(rng), rate(rng)});
    const LmaOperator op = lma_coefficients(sys, y, t);
    const Vector b = vec({t(0) * y(0) * y(0) + t(1) * y(0) * y(1) - t(2) * y(2) * y(2),
                          -t(0) * y(0) * y(0) + t(1) * y(0) * y(1), -3 * t(1) * y(0) * y(1) + t(2) * y(2) * y(2)});
    // the closed form for b holds once every binomial is in its support
    if ((y.array() >= 2).all()) CHECK((op.b - b).norm() <= 1e-10 * std::max(1.0, b.norm()));
    const Vector drift = sys.net_effect_real() * hazard(sys, y, t);
    CHECK((op.P * y + op.b - drift).norm() <= 1e-10 * std::max(1.0, drift.norm()));
  }

  // det P = 4 t1 t2 t3 (y1 - 1/2) y1 (y3 - 1/2), checked against a direct determinant
  const LmaOperator op = lma_coefficients(sys, vec({10, 20, 10}), vec({0.2, 0.1, 0.2}));
  CHECK(op.P.determinant() == doctest::Approx(14.44).epsilon(1e-12));
  for (int trial = 0; trial < 20; ++trial) {
    const Vector y = vec({double(count(rng) + 1), double(count(rng) + 1), double(count(rng) + 1)});
    const Vector t = vec({rate(rng), rate(rng), rate(rng)});
    const double formula = 4 * t.prod() * (y(0) - 0.5) * y(0) * (y(2) - 0.5);
    CHECK(lma_coefficients(sys, y, t).P.determinant() == doctest::Approx(formula).epsilon(1e-10));
  }
}

TEST_CASE("stiff fixture eigenvalues") {
  const Preset p = load_preset("cyclic3-stiff");
  const LmaOperator op = lma_coefficients(p.system, p.y0, p.theta_true);
  Eigen::VectorXcd ev = Eigen::EigenSolver<Matrix>(op.P).eigenvalues();
  std::vector<double> re;
  for (Index i = 0; i < 3; ++i) {
    CHECK(ev(i).imag() == 0.0);
    re.push_back(ev(i).real());
  }
  std::sort(re.begin(), re.end());
  // Frozen from an independent numpy evaluation of V diag(theta) H.
  CHECK(re[0] == doctest::Approx(-3.80000600).epsilon(1e-7));
  CHECK(re[1] == doctest::Approx(-3.60539492e-05).epsilon(1e-7));
  CHECK(re[2] == doctest::Approx(1.05397442e-06).epsilon(1e-7));
}

TEST_CASE("system construction errors") {
  CHECK_THROWS_AS(make_system({"A"}, {{"R", {{"B", 1}}, {}}}), ValidationError);
  CHECK_THROWS_AS(make_system({"A", "A"}, {{"R", {{"A", 1}}, {}}}), ValidationError);
  CHECK_THROWS_AS(make_system({"A"}, {{"R", {{"A", -1}}, {}}}), ValidationError);
  CHECK_THROWS_AS(hazard(death(), vec({1, 2}), vec({1})), DimensionError);
  CHECK_THROWS_AS(hazard(death(), vec({1}), vec({-1})), ValidationError);
  CHECK_THROWS_AS(cyclic3_system().species_index("D"), ValidationError);
}

TEST_CASE("subsystem and block union") {
  const ReactionSystem sys = cyclic3_system();
  const std::vector<Index> keep = {2, 0};
  const ReactionSystem sub = sys.subsystem(keep);
  CHECK(sub.num_reactions() == 2);
  CHECK(sub.reaction_labels()[0] == "R3");
  CHECK(sub.net_effect().col(1) == sys.net_effect().col(0));

  const ReactionSystem two = block_union(cyclic3_system("1"), cyclic3_system("2"));
  CHECK(two.num_species() == 6);
  CHECK(two.num_reactions() == 6);
  CHECK(two.reactants().topRightCorner(3, 3).isZero());
  CHECK(two.species_names()[3] == "A2");
}
