#pragma once

#include "qrlma/hazard.hpp"
#include "qrlma/reaction_system.hpp"
#include "qrlma/types.hpp"

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace qrlma {

enum class PredictionMethod { closed_form, euler, rk4 };

std::string to_string(PredictionMethod method);
PredictionMethod parse_prediction_method(const std::string& name);

/// Conditional mean m(t+s | t) of the linearized dynamics anchored at y0:
///   m = e^{sP} y0 + s phi1(sP) b.
/// Not clamped at zero.
StateVector lma_predict(const ReactionSystem& system, const RateVector& theta, const StateVector& y0, double s);

/// Same, from precomputed coefficients.
StateVector lma_predict(const LmaOperator& op, double s);

/// Fixed-step explicit integration of the linearized field m' = P m + b,
/// anchored at y0; the last step is shortened to land on s.
/// Throws DivergenceError (with the step index) on a non-finite state.
StateVector ode_solve(const ReactionSystem& system, const RateVector& theta, const StateVector& y0, double s,
                      double dt, PredictionMethod method);

struct PredictionRequest {
  ReactionSystem system;
  RateVector theta;
  StateVector y0;
  double horizon = 0.0;
  PredictionMethod method = PredictionMethod::closed_form;
  double dt = 0.0;  // numerical methods only
};

StateVector predict(const PredictionRequest& request);

struct StiffnessRow {
  PredictionMethod method;
  double dt;
  double mae;     // +inf when diverged
  bool diverged;
};

struct StiffnessReport {
  std::vector<double> horizons;
  std::vector<StiffnessRow> rows;
  VectorX<std::complex<double>> eigenvalues;
  double stiffness_ratio = 0.0;  // max |Re lambda| / min |Re lambda|
  bool stiff = false;
};

// Equally spaced evaluation times k * horizon / count, k = 1..count.
std::vector<double> evaluation_times(double horizon, int count = 5);

inline constexpr double kStiffRatio = 1e6;

/// Mean absolute error of Euler and RK4 against the closed form over the
/// evaluation times, for each step size, plus the eigenvalues of P.
StiffnessReport stiffness_report(const ReactionSystem& system, const RateVector& theta, const StateVector& y0,
                                 const std::vector<double>& dt_grid, const std::vector<double>& horizons);

// CSV with columns method,dt,mae,diverged.
void write_stiffness_csv(std::ostream& os, const StiffnessReport& report);

}  // namespace qrlma
