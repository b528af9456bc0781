#pragma once

// Combinatorial hazard of a quasi-reaction system, its Jacobian in the state,
// and the coefficients of the locally linearized mean ODE  m' = P m + b.

#include "qrlma/reaction_system.hpp"
#include "qrlma/types.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace qrlma {

/// Digamma function psi(x) = d/dx log Gamma(x).
///
/// Shifts the argument up with psi(x) = psi(x + 1) - 1/x until x >= 10 and then
/// applies the asymptotic series. Negative non-integer arguments use the
/// reflection formula; poles (x = 0, -1, -2, ...) return NaN.
template <typename Scalar>
Scalar digamma(Scalar x) {
  using std::log;
  using std::tan;
  if (!(x == x)) return x;
  if (x <= Scalar(0)) {
    if (x == std::floor(x)) return std::numeric_limits<Scalar>::quiet_NaN();
    const Scalar pi = std::numbers::pi_v<Scalar>;
    return digamma(Scalar(1) - x) - pi / tan(pi * x);
  }
  Scalar acc = 0;
  while (x < Scalar(10)) {
    acc -= Scalar(1) / x;
    x += Scalar(1);
  }
  const Scalar inv2 = Scalar(1) / (x * x);
  // Bernoulli terms B_2n / (2n x^2n), n = 1..7.
  const Scalar series =
      inv2 * (Scalar(1) / 12 -
              inv2 * (Scalar(1) / 120 -
                      inv2 * (Scalar(1) / 252 -
                              inv2 * (Scalar(1) / 240 -
                                      inv2 * (Scalar(1) / 132 -
                                              inv2 * (Scalar(691) / 32760 - inv2 * (Scalar(1) / 12)))))));
  return acc + log(x) - Scalar(0.5) / x - series;
}

namespace detail {
inline constexpr int kExactBinomialMaxK = 8;
}

/// Generalized binomial coefficient C(y, k) for integer k >= 0 and real y.
///
/// Equals Gamma(y+1) / (Gamma(k+1) Gamma(y-k+1)) for y > k - 1 and zero for
/// y <= k - 1, so it coincides with the ordinary binomial on integer counts.
/// Small k use the falling factorial; large k go through lgamma.
template <typename Scalar>
Scalar binomial(Scalar y, int k) {
  if (k == 0) return Scalar(1);
  if (y <= Scalar(k - 1)) return Scalar(0);
  if (k <= detail::kExactBinomialMaxK) {
    Scalar value = 1;
    for (int i = 0; i < k; ++i) value *= (y - Scalar(i)) / Scalar(i + 1);
    return value;
  }
  using std::exp;
  using std::lgamma;
  return exp(lgamma(y + Scalar(1)) - lgamma(Scalar(k) + Scalar(1)) - lgamma(y - Scalar(k) + Scalar(1)));
}

/// d/dy C(y, k), the one-sided (right) derivative at the support edge y = k - 1.
///
/// Mathematically C(y, k) (psi(y+1) - psi(y-k+1)); the falling-factorial product
/// rule is used for small k since it has no pole at the edge.
template <typename Scalar>
Scalar binomial_derivative(Scalar y, int k) {
  if (k == 0) return Scalar(0);
  if (y < Scalar(k - 1)) return Scalar(0);
  if (k <= detail::kExactBinomialMaxK) {
    Scalar factorial = 1;
    for (int i = 2; i <= k; ++i) factorial *= Scalar(i);
    Scalar total = 0;
    for (int skip = 0; skip < k; ++skip) {
      Scalar term = 1;
      for (int i = 0; i < k; ++i) {
        if (i != skip) term *= (y - Scalar(i));
      }
      total += term;
    }
    return total / factorial;
  }
  if (y == Scalar(k - 1)) {
    // Limit of C(y,k) * psi-difference at the edge: (k-1)! / k!.
    return Scalar(1) / Scalar(k);
  }
  return binomial(y, k) * (digamma(y + Scalar(1)) - digamma(y - Scalar(k) + Scalar(1)));
}

namespace detail {

inline void check_state_dim(const ReactionSystem& system, Index n) {
  if (n != system.num_species()) {
    throw DimensionError("state has " + std::to_string(n) + " entries, system has " +
                         std::to_string(system.num_species()) + " species");
  }
}

template <typename Derived>
void check_rates(const ReactionSystem& system, const Eigen::MatrixBase<Derived>& theta) {
  if (theta.size() != system.num_reactions()) {
    throw DimensionError("rate vector has " + std::to_string(theta.size()) + " entries, system has " +
                         std::to_string(system.num_reactions()) + " reactions");
  }
  for (Index j = 0; j < theta.size(); ++j) {
    if (!(theta(j) >= 0) || !std::isfinite(static_cast<double>(theta(j)))) {
      throw ValidationError("rate of reaction '" + system.reaction_labels()[static_cast<std::size_t>(j)] +
                            "' must be finite and nonnegative");
    }
  }
}

}  // namespace detail

/// kappa_j(y) = prod_l C(y_l, k_lj), the number of reactant combinations of reaction j.
template <typename Derived>
VectorX<typename Derived::Scalar> kappa(const ReactionSystem& system, const Eigen::MatrixBase<Derived>& y) {
  using Scalar = typename Derived::Scalar;
  detail::check_state_dim(system, y.size());
  const IntMatrix& k = system.reactants();
  VectorX<Scalar> out(system.num_reactions());
  for (Index j = 0; j < k.cols(); ++j) {
    Scalar value = 1;
    for (Index l = 0; l < k.rows() && value != Scalar(0); ++l) {
      if (k(l, j) != 0) value *= binomial(y(l), k(l, j));
    }
    out(j) = value;
  }
  return out;
}

/// Hazard lambda = Theta kappa(y).
template <typename DerivedY, typename DerivedT>
VectorX<typename DerivedY::Scalar> hazard(const ReactionSystem& system, const Eigen::MatrixBase<DerivedY>& y,
                                          const Eigen::MatrixBase<DerivedT>& theta) {
  detail::check_rates(system, theta);
  return theta.cwiseProduct(kappa(system, y));
}

/// Jacobian of the hazard in the state, Lambda = Theta H.
template <typename Scalar>
struct BasicHazardJacobian {
  MatrixX<Scalar> jacobian;  // Lambda, r x p
  MatrixX<Scalar> h;         // H, r x p, free of theta
};
using HazardJacobian = BasicHazardJacobian<double>;

/// H_jl = [prod_{i != l} C(y_i, k_ij)] * dC(y_l, k_lj)/dy_l, the theta-free factor of Lambda.
template <typename Derived>
MatrixX<typename Derived::Scalar> kappa_jacobian(const ReactionSystem& system, const Eigen::MatrixBase<Derived>& y) {
  using Scalar = typename Derived::Scalar;
  detail::check_state_dim(system, y.size());
  const IntMatrix& k = system.reactants();
  const Index p = system.num_species();
  const Index r = system.num_reactions();
  MatrixX<Scalar> h = MatrixX<Scalar>::Zero(r, p);
  VectorX<Scalar> factors(p);
  for (Index j = 0; j < r; ++j) {
    for (Index l = 0; l < p; ++l) factors(l) = binomial(y(l), k(l, j));
    for (Index l = 0; l < p; ++l) {
      if (k(l, j) == 0) continue;
      Scalar value = binomial_derivative(y(l), k(l, j));
      for (Index i = 0; i < p && value != Scalar(0); ++i) {
        if (i != l) value *= factors(i);
      }
      h(j, l) = value;
    }
  }
  return h;
}

template <typename DerivedY, typename DerivedT>
BasicHazardJacobian<typename DerivedY::Scalar> hazard_jacobian(const ReactionSystem& system,
                                                               const Eigen::MatrixBase<DerivedY>& y,
                                                               const Eigen::MatrixBase<DerivedT>& theta) {
  detail::check_rates(system, theta);
  BasicHazardJacobian<typename DerivedY::Scalar> out;
  out.h = kappa_jacobian(system, y);
  out.jacobian = theta.asDiagonal() * out.h;
  return out;
}

/// Linearized mean dynamics m' = P m + b anchored at a state.
///
/// P = V Theta H and b = V Theta (kappa(anchor) - H anchor), so that
/// P anchor + b = V lambda(anchor).
template <typename Scalar>
struct BasicLmaOperator {
  MatrixX<Scalar> P;
  VectorX<Scalar> b;
  VectorX<Scalar> anchor_state;
  VectorX<Scalar> anchor_theta;
};
using LmaOperator = BasicLmaOperator<double>;

template <typename DerivedY, typename DerivedT>
BasicLmaOperator<typename DerivedY::Scalar> lma_coefficients(const ReactionSystem& system,
                                                             const Eigen::MatrixBase<DerivedY>& y,
                                                             const Eigen::MatrixBase<DerivedT>& theta) {
  using Scalar = typename DerivedY::Scalar;
  detail::check_rates(system, theta);
  const MatrixX<Scalar> v = system.net_effect_real().template cast<Scalar>();
  const VectorX<Scalar> kap = kappa(system, y);
  const MatrixX<Scalar> h = kappa_jacobian(system, y);
  BasicLmaOperator<Scalar> op;
  op.anchor_state = y;
  op.anchor_theta = theta.template cast<Scalar>();
  const MatrixX<Scalar> v_theta = v * op.anchor_theta.asDiagonal();
  op.P = v_theta * h;
  op.b = v_theta * (kap - h * op.anchor_state);
  return op;
}

}  // namespace qrlma
