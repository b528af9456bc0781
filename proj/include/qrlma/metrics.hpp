#pragma once

// Ensemble statistics for the simulation studies.

#include "qrlma/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qrlma {

/// One estimate per simulated dataset, against a known truth.
struct EstimateEnsemble {
  std::vector<RateVector> estimates;
  RateVector truth;

  void validate() const;
};

/// Wasserstein-1 distance between the per-coordinate empirical distribution
/// of the estimates and a point mass at the truth, summed over coordinates.
/// Against a point mass this is the mean absolute deviation.
double wasserstein1(const EstimateEnsemble& ensemble);
Vector wasserstein1_by_coordinate(const EstimateEnsemble& ensemble);

/// W1 between two empirical samples of possibly different sizes (integral of |F_a - F_b|).
double wasserstein1_two_sample(std::vector<double> a, std::vector<double> b);

struct Band {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

/// Resamples the estimates with replacement and reports quantiles of W1.
Band bootstrap_band(const EstimateEnsemble& ensemble, int n_boot = 1000, std::uint64_t seed = 0);

struct CoordinateBias {
  double mean_bias = 0.0;
  double sd = 0.0;             // sample standard deviation (n - 1)
  double relative_bias = 0.0;  // mean_bias / truth, NaN when truth is 0
  double median = 0.0;
};

std::vector<CoordinateBias> bias_summary(const EstimateEnsemble& ensemble);

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);

/// Sample variance (n - 1).
double sample_variance(const std::vector<double>& values);

// CSV with columns coordinate,truth,mean_bias,sd,relative_bias,median,w1.
void write_bias_csv(std::ostream& os, const EstimateEnsemble& ensemble, const std::vector<std::string>& labels = {});

}  // namespace qrlma
