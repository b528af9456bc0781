#include "qrlma/matfun.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

using namespace qrlma;

namespace {

// Taylor series in long double after scaling into the unit ball, then squaring.
Matrix taylor_expm(const Matrix& a) {
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  const int sq = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  const LMat x = a.cast<long double>() / std::ldexp(1.0L, sq);
  LMat term = LMat::Identity(a.rows(), a.cols());
  LMat sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * x / static_cast<long double>(k);
    sum += term;
  }
  for (int i = 0; i < sq; ++i) sum = sum * sum;
  return sum.cast<double>();
}

// 64-point Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(std::vector<double>& nodes, std::vector<double>& weights) {
  const int n = 64;
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    long double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    long double dp = 0;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) break;
    }
    nodes[i] = static_cast<double>((x + 1) / 2);
    weights[i] = static_cast<double>(1 / ((1 - x * x) * dp * dp));  // 2/((1-x^2)p'^2), halved for [0,1]
  }
}

Matrix random_matrix(std::mt19937_64& rng, Index n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix a(n, n);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a;
}

}  // namespace

TEST_CASE("expm special cases") {
  CHECK(expm(Matrix::Zero(3, 3)) == Matrix::Identity(3, 3));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.5;
  d(1, 1) = -7.0;
  const Matrix e = expm(d);
  CHECK(e(0, 0) == doctest::Approx(std::exp(1.5)).epsilon(1e-15));
  CHECK(e(1, 1) == doctest::Approx(std::exp(-7.0)).epsilon(1e-15));
  CHECK(e(0, 1) == 0.0);
  Matrix nil = Matrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  CHECK(expm(nil).isApprox(Matrix::Identity(2, 2) + nil, 1e-15));
  CHECK(expm(Matrix(0, 0)).size() == 0);
}

TEST_CASE("expm against independent oracles") {
  std::mt19937_64 rng(1);
  for (double scale : {1e-3, 0.1, 1.0, 5.0, 20.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix a = random_matrix(rng, 4, scale);
      const Matrix ours = expm(a);
      const Matrix eig = a.exp();
      const Matrix tay = taylor_expm(a);
      CHECK((ours - tay).norm() <= 1e-12 * tay.norm());
      CHECK((ours - eig).norm() <= 1e-12 * eig.norm());
    }
  }
}

TEST_CASE("expm errors") {
  CHECK_THROWS_AS(expm(Matrix::Zero(2, 3)), DimensionError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(expm(bad), NumericalError);
  CHECK_THROWS_AS(expm(Matrix::Constant(2, 2, 1e300)), OverflowError);
}

TEST_CASE("phi1") {
  CHECK(phi1(Matrix::Zero(3, 3), 2.5).isApprox(2.5 * Matrix::Identity(3, 3), 1e-15));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.7;
  d(1, 1) = -2.0;
  const Matrix f = phi1(d, 1.0);
  CHECK(f(0, 0) == doctest::Approx((std::exp(0.7) - 1) / 0.7).epsilon(1e-14));
  CHECK(f(1, 1) == doctest::Approx((std::exp(-2.0) - 1) / -2.0).epsilon(1e-14));

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 3, 1.0);
    if (condition_estimate(a) > 1e4) continue;
    const Matrix direct = a.inverse() * (a.exp() - Matrix::Identity(3, 3));
    CHECK((phi1(a, 1.0) - direct).norm() <= 1e-10 * direct.norm());
  }
}

TEST_CASE("Frechet derivative") {
  CHECK(expm_frechet(Matrix::Identity(3, 3), Matrix::Zero(3, 3)).isZero());
  std::mt19937_64 rng(3);
  const Matrix e0 = random_matrix(rng, 3, 1.0);
  CHECK(expm_frechet(Matrix::Zero(3, 3), e0).isApprox(e0, 1e-14));

  std::vector<double> nodes, weights;
  gauss_legendre(nodes, weights);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 3, 1.0);
    const Matrix e = random_matrix(rng, 3, 1.0);
    const ExpmFrechet<double> both = expm_and_frechet(a, e);
    CHECK(both.expm.isApprox(a.exp(), 1e-12));

    const double h = 1e-6;
    const Matrix fd = (expm(Matrix(a + h * e)) - expm(Matrix(a - h * e))) / (2 * h);
    CHECK((both.frechet - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));

    Matrix quad = Matrix::Zero(3, 3);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double u = nodes[k];
      quad += weights[k] * (Matrix((1 - u) * a).exp() * e * Matrix(u * a).exp());
    }
    CHECK((both.frechet - quad).norm() <= 1e-12 * quad.norm());
  }
}

TEST_CASE("inverse, condition and eigenvalues") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 4;
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 0.5;
  expected(1, 1) = 0.25;
  CHECK(inverse(d).isApprox(expected, 1e-15));
  CHECK_THROWS_AS(inverse(Matrix::Zero(2, 2)), SingularMatrixError);
  CHECK(std::isinf(condition_estimate(Matrix::Zero(2, 2))));
  const auto ev = eigenvalues(Matrix::Identity(3, 3));
  for (Index i = 0; i < 3; ++i) CHECK(ev(i) == std::complex<double>(1.0, 0.0));
}
