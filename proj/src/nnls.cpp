#include "qrlma/nnls.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <vector>

namespace qrlma {

namespace {

Vector solve_passive(const Matrix& a, const Vector& b, const std::vector<bool>& passive) {
  std::vector<Index> cols;
  for (std::size_t j = 0; j < passive.size(); ++j) {
    if (passive[j]) cols.push_back(static_cast<Index>(j));
  }
  Matrix sub(a.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Index>(c)) = a.col(cols[c]);
  const Vector z = sub.completeOrthogonalDecomposition().solve(b);
  Vector out = Vector::Zero(a.cols());
  for (std::size_t c = 0; c < cols.size(); ++c) out(cols[c]) = z(static_cast<Index>(c));
  return out;
}

}  // namespace

Vector nnls(const Matrix& a_in, const Vector& b, int max_iterations) {
  if (a_in.rows() != b.size()) {
    throw DimensionError("nnls: matrix has " + std::to_string(a_in.rows()) + " rows, rhs has " +
                         std::to_string(b.size()));
  }
  if (!a_in.allFinite() || !b.allFinite()) throw NumericalError("nnls: non-finite input");
  const Index n = a_in.cols();
  Vector scale = a_in.colwise().norm().transpose();
  Matrix a = a_in;
  std::vector<bool> usable(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    usable[static_cast<std::size_t>(j)] = scale(j) > 0;
    if (scale(j) > 0) a.col(j) /= scale(j);
  }
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 30);

  const double tol = 10 * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(a.rows(), n)) *
                     std::max(1.0, b.norm());
  Vector x = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Vector w = a.transpose() * (b - a * x);

  for (int outer = 0; outer < max_iterations; ++outer) {
    Index best = -1;
    double best_w = tol;
    for (Index j = 0; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (!passive[uj] && usable[uj] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner <= n; ++inner) {
      const Vector s = solve_passive(a, b, passive);
      bool feasible = true;
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0) feasible = false;
      }
      if (feasible) {
        x = s;
        break;
      }
      double alpha = 1.0;
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0) alpha = std::min(alpha, x(j) / (x(j) - s(j)));
      }
      x += alpha * (s - x);
      for (Index j = 0; j < n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (passive[uj] && x(j) <= tol) {
          passive[uj] = false;
          x(j) = 0.0;
        }
      }
    }
    w = a.transpose() * (b - a * x);
  }

  for (Index j = 0; j < n; ++j) x(j) = scale(j) > 0 ? std::max(0.0, x(j)) / scale(j) : 0.0;
  return x;
}

}  // namespace qrlma
