#pragma once

// Rate estimation: the local linear approximation (generalized least squares
// on Euler-discretized moments) and the LMA least-squares fit.

#include "qrlma/lbfgsb.hpp"
#include "qrlma/observation_set.hpp"
#include "qrlma/reaction_system.hpp"
#include "qrlma/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qrlma {

enum class Initializer { lla, user_supplied };
enum class GradientMode { analytic, finite_difference };

// How standard errors are formed from the per-transition scores xi^T r.
enum class CovarianceMethod {
  outer_product,  // inverse of sum xi^T r r^T xi
  sandwich,       // B^-1 (sum xi^T r r^T xi) B^-1 with B = sum xi^T xi
};

std::string to_string(Initializer initializer);
std::string to_string(GradientMode mode);
Initializer parse_initializer(const std::string& name);
GradientMode parse_gradient_mode(const std::string& name);
std::string to_string(CovarianceMethod method);
CovarianceMethod parse_covariance_method(const std::string& name);

struct FitConfig {
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
  double objective_tolerance = 1e-12;
  double theta_lower_bound = 1e-12;
  Initializer initializer = Initializer::lla;
  std::optional<RateVector> initial_theta;  // required for user_supplied
  GradientMode gradient_mode = GradientMode::analytic;
  int memory_size = 10;
  bool compute_stderr = false;
  CovarianceMethod stderr_method = CovarianceMethod::outer_product;
  unsigned threads = 1;  // objective evaluation; 0 means default_thread_count()

  void validate() const;
};

// Rates below this are reported as sitting on the lower bound.
inline constexpr double kBoundaryActiveThreshold = 1e-10;

struct FitResult {
  RateVector theta_hat;
  RateVector theta_init;
  double objective = 0.0;
  int n_iterations = 0;
  int n_evaluations = 0;
  bool converged = false;
  Termination termination = Termination::max_iterations;
  std::string message;
  std::optional<Vector> standard_errors;
  std::string stderr_warning;
  Matrix residuals;  // p x transitions, in replicate then time order
  double bic = 0.0;
  std::vector<bool> boundary_active;
  std::vector<double> objective_history;
};

/// Least-squares problem over all (previous, next) observation pairs. The
/// theta-free parts of every linearization (kappa, H) are computed once.
/// Data species are matched to system species by name, so their order may differ.
class LmaProblem {
 public:
  struct Transition {
    Index replicate;
    Index point;  // index of the predicted observation within its replicate
    double dt;
    Vector y_prev;
    Vector y_next;
    Matrix h;       // r x p
    Vector offset;  // kappa - H y_prev
  };

  LmaProblem(const ReactionSystem& system, const ObservationSet& data, unsigned threads = 1);

  const ReactionSystem& system() const noexcept { return system_; }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  Index num_residuals() const noexcept { return static_cast<Index>(transitions_.size()) * system_.num_species(); }

  /// f(theta) = sum ||Y_next - m||^2. Fills the exact gradient (factor 2
  /// included) when requested. Returns +inf when a prediction overflows.
  double objective(const RateVector& theta, Vector* gradient = nullptr) const;

  /// Predictions m, p x transitions.
  Matrix predictions(const RateVector& theta) const;
  Matrix residuals(const RateVector& theta) const;

  /// Per-transition scores xi^T (Y - m), r x transitions.
  Matrix scores(const RateVector& theta) const;

 private:
  double transition_terms(const Transition& tr, const RateVector& theta, Vector* residual, Vector* score) const;

  ReactionSystem system_;
  std::vector<Transition> transitions_;
  unsigned threads_;
};

/// LLA estimate by alternating nonnegative GLS (theta given Omega) and
/// dispersion updates (Omega given theta).
RateVector lla_estimate(const ObservationSet& data, const ReactionSystem& system);

double lma_objective(const RateVector& theta, const ObservationSet& data, const ReactionSystem& system);
Vector lma_gradient(const RateVector& theta, const ObservationSet& data, const ReactionSystem& system);

/// Central differences with h = 1e-6 max(theta_j, 1); one-sided at the lower bound.
Vector finite_difference_gradient(const LmaProblem& problem, const RateVector& theta, double lower_bound = 0.0);

// N ln(RSS / N) + k ln N, the Gaussian least-squares convention.
double bic_value(double rss, Index n_residuals, Index n_parameters);

FitResult lma_fit(const ObservationSet& data, const ReactionSystem& system, const FitConfig& config = {});

}  // namespace qrlma
