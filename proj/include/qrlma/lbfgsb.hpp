#pragma once

// Limited-memory BFGS with simple bounds (generalized Cauchy point, primal
// subspace minimization, strong Wolfe line search).

#include "qrlma/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qrlma {

/// Returns f(x); fills *gradient when it is non-null. May return +inf to
/// reject a point (the line search then shortens the step).
using BoundedObjective = std::function<double(const Vector& x, Vector* gradient)>;

struct LbfgsbOptions {
  int max_iterations = 500;
  // Infinity norm of the projected gradient.
  double gradient_tolerance = 1e-8;
  // Relative reduction (f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1).
  double objective_tolerance = 1e-12;
  int memory_size = 10;
  int max_line_search_steps = 20;
  double armijo = 1e-4;     // c1
  double curvature = 0.9;   // c2
  bool record_iterates = false;
  // When the caller optimizes x = theta / scale, the gradient test is applied
  // to theta = scale * x and its gradient g / scale instead of x and g.
  Vector variable_scale;
};

enum class Termination { gradient_tolerance, objective_tolerance, max_iterations, line_search_failure };

std::string to_string(Termination termination);

struct LbfgsbResult {
  Vector x;
  double objective = 0.0;
  Vector gradient;
  int iterations = 0;
  int evaluations = 0;
  Termination termination = Termination::max_iterations;
  std::string message;
  std::vector<double> objective_history;  // f at the start and after every accepted step
  std::vector<Vector> iterates;           // only when record_iterates

  bool converged() const noexcept {
    return termination == Termination::gradient_tolerance || termination == Termination::objective_tolerance;
  }
};

// Infinity norm of P(x - g) - x, with P the projection onto [lower, upper].
double projected_gradient_norm(const Vector& x, const Vector& gradient, const Vector& lower, const Vector& upper);

/// Minimizes f over the box lower <= x <= upper (entries may be +-inf).
/// x0 is projected into the box first.
LbfgsbResult minimize_lbfgsb(const BoundedObjective& f, const Vector& x0, const Vector& lower, const Vector& upper,
                             const LbfgsbOptions& options = {});

}  // namespace qrlma
