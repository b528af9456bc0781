#pragma once

// Sensitivities of the LMA predictor with respect to the rates, and
// observed-information standard errors.

#include "qrlma/infer.hpp"
#include "qrlma/observation_set.hpp"
#include "qrlma/reaction_system.hpp"
#include "qrlma/types.hpp"

#include <string>
#include <vector>

namespace qrlma {

enum class SensitivityMethod {
  automatic,  // inverse form when cond(P) <= kInverseRouteConditionLimit, phi1 form otherwise
  inverse,    // m = e^{sP} y0 + P^{-1}(e^{sP} - I) b, differentiated term by term
  phi1,       // Frechet derivative of the augmented generator [[sP, sb], [0, 0]]
};

std::string to_string(SensitivityMethod method);

inline constexpr double kInverseRouteConditionLimit = 1e6;

/// p x r matrix, column j = d m(t+s | t) / d theta_j with the anchor y0 held fixed.
Matrix predict_sensitivity(const ReactionSystem& system, const RateVector& theta, const StateVector& y0, double s,
                           SensitivityMethod method = SensitivityMethod::automatic);

/// Sum over transitions of xi^T r r^T xi, r = Y - m.
Matrix fisher_information(const LmaProblem& problem, const RateVector& theta_hat);
Matrix fisher_information(const RateVector& theta_hat, const ObservationSet& data, const ReactionSystem& system);

struct StandardErrors {
  Vector values;                   // +inf on coordinates touched by the null space
  bool identifiable = true;
  std::vector<Index> null_support;  // rates involved in a null direction of the information
  std::string warning;
};

// Relative eigenvalue cutoff below which the information is treated as singular.
inline constexpr double kInformationRankTolerance = 1e-12;

/// Sum over transitions of xi^T xi, the Gauss-Newton approximation of half the Hessian of f.
Matrix gauss_newton_matrix(const LmaProblem& problem, const RateVector& theta_hat);

/// outer_product: sqrt(diag(F^{-1})), inverting the full matrix before taking
/// the diagonal. sandwich: sqrt(diag(B^{-1} F B^{-1})), B = gauss_newton_matrix.
StandardErrors standard_errors(const LmaProblem& problem, const RateVector& theta_hat,
                               CovarianceMethod method = CovarianceMethod::outer_product);
StandardErrors standard_errors(const RateVector& theta_hat, const ObservationSet& data, const ReactionSystem& system,
                               CovarianceMethod method = CovarianceMethod::outer_product);
StandardErrors standard_errors_from_information(const Matrix& information,
                                                const std::vector<std::string>& labels = {});
StandardErrors sandwich_standard_errors(const Matrix& bread, const Matrix& information,
                                        const std::vector<std::string>& labels = {});

}  // namespace qrlma
