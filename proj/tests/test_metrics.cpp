#include "qrlma/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace qrlma;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Midpoint-rule integral of |F_a(x) - F_b(x)| on a uniform grid.
double cdf_grid_w1(std::vector<double> a, std::vector<double> b, int cells) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double lo = std::min(a.front(), b.front()), hi = std::max(a.back(), b.back());
  const double h = (hi - lo) / cells;
  auto cdf = [](const std::vector<double>& s, double x) {
    return double(std::upper_bound(s.begin(), s.end(), x) - s.begin()) / double(s.size());
  };
  double total = 0.0;
  for (int k = 0; k < cells; ++k) {
    const double x = lo + (k + 0.5) * h;
    total += std::abs(cdf(a, x) - cdf(b, x)) * h;
  }
  return total;
}

}  // namespace

TEST_CASE("W1 against a point mass") {
  EstimateEnsemble e;
  e.truth = vec({0.2, 0.1, 0.2});
  e.estimates = {e.truth, e.truth};
  CHECK(wasserstein1(e) == 0.0);
  e.estimates = {vec({0.3, 0.1, 0.2})};
  CHECK(wasserstein1(e) == doctest::Approx(0.1).epsilon(1e-14));
  e.estimates.push_back(vec({0.2, 0.0, 0.2}));
  const Vector by = wasserstein1_by_coordinate(e);
  CHECK(by(0) == doctest::Approx(0.05));
  CHECK(by(1) == doctest::Approx(0.05));
  CHECK(wasserstein1(e) == doctest::Approx(by.sum()));
}

TEST_CASE("W1 against a fine-grid CDF integral") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    EstimateEnsemble e;
    e.truth = vec({0.2, 0.1});
    for (int i = 0; i < 25; ++i) e.estimates.push_back(vec({0.2 + 0.05 * g(rng), 0.1 + 0.02 * g(rng)}));
    double oracle = 0.0;
    for (Index j = 0; j < 2; ++j) {
      std::vector<double> xs;
      for (const auto& v : e.estimates) xs.push_back(v(j));
      oracle += cdf_grid_w1(xs, {e.truth(j)}, 400000);
    }
    CHECK(std::abs(wasserstein1(e) - oracle) < 1e-6);
  }
}

TEST_CASE("two-sample W1") {
  CHECK(wasserstein1_two_sample({0.0, 1.0}, {0.0, 1.0}) == 0.0);
  CHECK(wasserstein1_two_sample({0.0}, {2.5}) == doctest::Approx(2.5));
  CHECK(wasserstein1_two_sample({0.0, 1.0, 2.0}, {1.0}) == doctest::Approx(2.0 / 3.0));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 3);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> a(17), b(9);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng) * 0.5;
    CHECK(std::abs(wasserstein1_two_sample(a, b) - cdf_grid_w1(a, b, 4000000)) < 1e-6);
  }
  CHECK_THROWS_AS(wasserstein1_two_sample({}, {1.0}), ValidationError);
}

TEST_CASE("bootstrap band") {
  EstimateEnsemble flat;
  flat.truth = vec({1.0});
  flat.estimates.assign(20, vec({1.5}));
  const Band b = bootstrap_band(flat, 200, 3);
  CHECK(b.q25 == doctest::Approx(0.5));
  CHECK(b.q75 == doctest::Approx(0.5));
  CHECK(b.median == doctest::Approx(0.5));

  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  int inside = 0;
  for (int trial = 0; trial < 20; ++trial) {
    EstimateEnsemble e;
    e.truth = vec({0.0});
    for (int i = 0; i < 50; ++i) e.estimates.push_back(vec({g(rng)}));
    const Band band = bootstrap_band(e, 500, trial);
    CHECK(band.q25 <= band.median);
    CHECK(band.median <= band.q75);
    inside += band.q25 <= wasserstein1(e) && wasserstein1(e) <= band.q75;
  }
  CHECK(inside >= 14);  // interquartile band holds the point estimate most of the time

  EstimateEnsemble e;
  e.truth = vec({0.0});
  for (int i = 0; i < 30; ++i) e.estimates.push_back(vec({g(rng)}));
  const Band x = bootstrap_band(e, 300, 99), y = bootstrap_band(e, 300, 99);
  CHECK(x.median == y.median);
}

TEST_CASE("summaries") {
  CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({7}, 0.9) == 7.0);
  CHECK(sample_variance({1, 2, 3, 4}) == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS_AS(quantile({1.0}, 1.5), ValidationError);

  EstimateEnsemble e;
  e.truth = vec({2.0, 0.0});
  e.estimates = {vec({1.0, 1.0}), vec({3.0, 2.0}), vec({5.0, 3.0})};
  const auto s = bias_summary(e);
  CHECK(s[0].mean_bias == doctest::Approx(1.0));
  CHECK(s[0].relative_bias == doctest::Approx(0.5));
  CHECK(s[0].median == doctest::Approx(3.0));
  CHECK(s[0].sd == doctest::Approx(2.0));
  CHECK(std::isnan(s[1].relative_bias));

  std::ostringstream os;
  write_bias_csv(os, e, {"a", "b"});
  CHECK(os.str().rfind("coordinate,truth,mean_bias,sd,relative_bias,median,w1\na,", 0) == 0);

  EstimateEnsemble bad;
  bad.truth = vec({1.0});
  bad.estimates = {vec({1.0, 2.0})};
  CHECK_THROWS_AS(wasserstein1(bad), DimensionError);
}

TEST_CASE("W1 invariances") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 1.0);
  EstimateEnsemble e;
  e.truth = vec({0.2, 0.1, 0.2});
  for (int i = 0; i < 40; ++i) e.estimates.push_back(e.truth + 0.05 * vec({g(rng), g(rng), g(rng)}) + vec({0.01, 0, 0}));
  const double w = wasserstein1(e);

  EstimateEnsemble shifted = e, scaled = e;
  const Vector shift = vec({3.0, -1.0, 0.5});
  shifted.truth += shift;
  scaled.truth *= 4.0;
  for (auto& v : shifted.estimates) v += shift;
  for (auto& v : scaled.estimates) v *= 4.0;
  CHECK(wasserstein1(shifted) == doctest::Approx(w).epsilon(1e-12));
  CHECK(wasserstein1(scaled) == doctest::Approx(4.0 * w).epsilon(1e-12));

  Vector mean = Vector::Zero(3);
  for (const auto& v : e.estimates) mean += v;
  mean /= double(e.estimates.size());
  CHECK(w >= (mean - e.truth).cwiseAbs().sum());
}
