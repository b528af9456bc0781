#include "qrlma/forecast.hpp"

#include "qrlma/matfun.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace qrlma {

std::string to_string(PredictionMethod method) {
  switch (method) {
    case PredictionMethod::closed_form: return "closed_form";
    case PredictionMethod::euler: return "euler";
    case PredictionMethod::rk4: return "rk4";
  }
  return "unknown";
}

PredictionMethod parse_prediction_method(const std::string& name) {
  if (name == "closed_form" || name == "lma") return PredictionMethod::closed_form;
  if (name == "euler") return PredictionMethod::euler;
  if (name == "rk4") return PredictionMethod::rk4;
  throw ValidationError("unknown prediction method '" + name + "' (expected closed_form, euler or rk4)");
}

namespace {

void check_initial_state(const ReactionSystem& system, const StateVector& y0) {
  detail::check_state_dim(system, y0.size());
  if (!y0.allFinite() || (y0.array() < 0).any()) {
    throw ValidationError("initial state must be finite and nonnegative");
  }
}

void check_horizon(double s) {
  if (!(s >= 0) || !std::isfinite(s)) throw ValidationError("prediction horizon must be finite and nonnegative");
}

}  // namespace

StateVector lma_predict(const LmaOperator& op, double s) {
  check_horizon(s);
  const Index p = op.P.rows();
  if (s == 0.0) return op.anchor_state;
  // expm([[sP, sb], [0, 0]]) = [[e^{sP}, s phi1(sP) b], [0, 1]].
  Matrix block = Matrix::Zero(p + 1, p + 1);
  block.topLeftCorner(p, p) = s * op.P;
  block.topRightCorner(p, 1) = s * op.b;
  Matrix e;
  try {
    e = expm(block);
  } catch (const OverflowError&) {
    std::ostringstream os;
    os << "prediction overflow: ||sP||_1 = " << (s * op.P).cwiseAbs().colwise().sum().maxCoeff() << " at s = " << s;
    throw OverflowError(os.str());
  }
  StateVector m = e.topLeftCorner(p, p) * op.anchor_state + e.topRightCorner(p, 1);
  if (!m.allFinite()) throw OverflowError("prediction overflow: non-finite mean");
  return m;
}

StateVector lma_predict(const ReactionSystem& system, const RateVector& theta, const StateVector& y0, double s) {
  check_initial_state(system, y0);
  check_horizon(s);
  if (s == 0.0) return y0;
  return lma_predict(lma_coefficients(system, y0, theta), s);
}

StateVector ode_solve(const ReactionSystem& system, const RateVector& theta, const StateVector& y0, double s,
                      double dt, PredictionMethod method) {
  check_initial_state(system, y0);
  check_horizon(s);
  if (!(dt > 0) || !std::isfinite(dt)) throw ValidationError("integration step must be positive");
  if (method == PredictionMethod::closed_form) return lma_predict(system, theta, y0, s);

  const LmaOperator op = lma_coefficients(system, y0, theta);
  const auto field = [&op](const StateVector& m) -> StateVector { return op.P * m + op.b; };

  StateVector m = y0;
  double t = 0.0;
  std::size_t step = 0;
  while (t < s) {
    const double h = std::min(dt, s - t);
    if (method == PredictionMethod::euler) {
      m += h * field(m);
    } else {
      const StateVector k1 = field(m);
      const StateVector k2 = field(m + 0.5 * h * k1);
      const StateVector k3 = field(m + 0.5 * h * k2);
      const StateVector k4 = field(m + h * k3);
      m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    ++step;
    if (!m.allFinite()) {
      throw DivergenceError(to_string(method) + " diverged at step " + std::to_string(step) + " (dt = " +
                                std::to_string(dt) + ")",
                            step);
    }
    // Guard against a final sliver step from floating-point accumulation.
    t = (s - (t + h) <= 1e-12 * s) ? s : t + h;
  }
  return m;
}

StateVector predict(const PredictionRequest& request) {
  if (request.method == PredictionMethod::closed_form) {
    return lma_predict(request.system, request.theta, request.y0, request.horizon);
  }
  return ode_solve(request.system, request.theta, request.y0, request.horizon, request.dt, request.method);
}

std::vector<double> evaluation_times(double horizon, int count) {
  if (!(horizon > 0) || count < 1) throw ValidationError("evaluation grid needs a positive horizon and count");
  std::vector<double> times;
  for (int k = 1; k <= count; ++k) times.push_back(horizon * k / count);
  return times;
}

StiffnessReport stiffness_report(const ReactionSystem& system, const RateVector& theta, const StateVector& y0,
                                 const std::vector<double>& dt_grid, const std::vector<double>& horizons) {
  if (dt_grid.empty() || horizons.empty()) throw ValidationError("stiffness report needs non-empty grids");
  StiffnessReport report;
  report.horizons = horizons;

  std::vector<StateVector> reference;
  reference.reserve(horizons.size());
  for (double h : horizons) reference.push_back(lma_predict(system, theta, y0, h));

  for (PredictionMethod method : {PredictionMethod::euler, PredictionMethod::rk4}) {
    for (double dt : dt_grid) {
      StiffnessRow row{method, dt, 0.0, false};
      try {
        double total = 0.0;
        for (std::size_t k = 0; k < horizons.size(); ++k) {
          const StateVector m = ode_solve(system, theta, y0, horizons[k], dt, method);
          total += (m - reference[k]).cwiseAbs().sum();
        }
        row.mae = total / static_cast<double>(horizons.size() * static_cast<std::size_t>(y0.size()));
        if (!std::isfinite(row.mae)) {
          row.mae = std::numeric_limits<double>::infinity();
          row.diverged = true;
        }
      } catch (const DivergenceError&) {
        row.mae = std::numeric_limits<double>::infinity();
        row.diverged = true;
      }
      report.rows.push_back(row);
    }
  }

  const LmaOperator op = lma_coefficients(system, y0, theta);
  report.eigenvalues = eigenvalues(op.P);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Index i = 0; i < report.eigenvalues.size(); ++i) {
    const double re = std::abs(report.eigenvalues(i).real());
    lo = std::min(lo, re);
    hi = std::max(hi, re);
  }
  report.stiffness_ratio = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
  report.stiff = report.stiffness_ratio >= kStiffRatio;
  return report;
}

void write_stiffness_csv(std::ostream& os, const StiffnessReport& report) {
  os << "method,dt,mae,diverged\n";
  os << std::setprecision(17);
  for (const auto& row : report.rows) {
    os << to_string(row.method) << ',' << row.dt << ',';
    if (std::isinf(row.mae)) {
      os << "inf";
    } else {
      os << row.mae;
    }
    os << ',' << (row.diverged ? "true" : "false") << '\n';
  }
}

}  // namespace qrlma
