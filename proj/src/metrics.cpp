#include "qrlma/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

namespace qrlma {

void EstimateEnsemble::validate() const {
  if (estimates.empty()) throw ValidationError("ensemble has no estimates");
  for (const auto& e : estimates) {
    if (e.size() != truth.size()) {
      throw DimensionError("ensemble estimate has " + std::to_string(e.size()) + " entries, truth has " +
                           std::to_string(truth.size()));
    }
  }
}

Vector wasserstein1_by_coordinate(const EstimateEnsemble& ensemble) {
  ensemble.validate();
  Vector out = Vector::Zero(ensemble.truth.size());
  for (const auto& e : ensemble.estimates) out += (e - ensemble.truth).cwiseAbs();
  return out / static_cast<double>(ensemble.estimates.size());
}

double wasserstein1(const EstimateEnsemble& ensemble) { return wasserstein1_by_coordinate(ensemble).sum(); }

double wasserstein1_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ValidationError("two-sample W1 needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integrate |F_a - F_b| over the merged breakpoints.
  std::vector<double> points;
  points.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(points));
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    while (ia < a.size() && a[ia] <= points[k]) ++ia;
    while (ib < b.size() && b[ib] <= points[k]) ++ib;
    total += std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) * (points[k + 1] - points[k]);
  }
  return total;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double sample_variance(const std::vector<double>& values) {
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(values.size() - 1);
}

Band bootstrap_band(const EstimateEnsemble& ensemble, int n_boot, std::uint64_t seed) {
  ensemble.validate();
  if (n_boot < 1) throw ValidationError("bootstrap needs at least one resample");
  const std::size_t n = ensemble.estimates.size();
  // Absolute deviations are all W1 needs; resample those.
  std::vector<double> dev(n);
  for (std::size_t s = 0; s < n; ++s) dev[s] = (ensemble.estimates[s] - ensemble.truth).cwiseAbs().sum();
  std::mt19937_64 rng(seed);
  std::vector<double> stats(static_cast<std::size_t>(n_boot));
  for (auto& stat : stats) {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) total += dev[static_cast<std::size_t>(rng() % n)];
    stat = total / static_cast<double>(n);
  }
  return {quantile(stats, 0.5), quantile(stats, 0.25), quantile(stats, 0.75)};
}

std::vector<CoordinateBias> bias_summary(const EstimateEnsemble& ensemble) {
  ensemble.validate();
  std::vector<CoordinateBias> out(static_cast<std::size_t>(ensemble.truth.size()));
  for (Index j = 0; j < ensemble.truth.size(); ++j) {
    std::vector<double> xs;
    for (const auto& e : ensemble.estimates) xs.push_back(e(j));
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    CoordinateBias& b = out[static_cast<std::size_t>(j)];
    b.mean_bias = mean - ensemble.truth(j);
    b.sd = xs.size() > 1 ? std::sqrt(sample_variance(xs)) : 0.0;
    b.relative_bias = ensemble.truth(j) != 0 ? b.mean_bias / ensemble.truth(j) : std::numeric_limits<double>::quiet_NaN();
    b.median = quantile(xs, 0.5);
  }
  return out;
}

void write_bias_csv(std::ostream& os, const EstimateEnsemble& ensemble, const std::vector<std::string>& labels) {
  const std::vector<CoordinateBias> bias = bias_summary(ensemble);
  const Vector w1 = wasserstein1_by_coordinate(ensemble);
  os << "coordinate,truth,mean_bias,sd,relative_bias,median,w1\n" << std::setprecision(17);
  for (std::size_t j = 0; j < bias.size(); ++j) {
    const auto jj = static_cast<Index>(j);
    os << (j < labels.size() ? labels[j] : std::to_string(j)) << ',' << ensemble.truth(jj) << ',' << bias[j].mean_bias
       << ',' << bias[j].sd << ',' << bias[j].relative_bias << ',' << bias[j].median << ',' << w1(jj) << '\n';
  }
}

}  // namespace qrlma
