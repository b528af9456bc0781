#pragma once

// Dense matrix functions: exponential, phi1, Frechet derivative of the
// exponential, guarded inverse and eigenvalues.

#include "qrlma/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>

namespace qrlma {

namespace detail {

template <typename Derived>
void require_square_finite(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(what) + ": matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
  }
  if (!a.allFinite()) throw NumericalError(std::string(what) + ": non-finite matrix entry");
}

template <typename Scalar>
Scalar norm1(const MatrixX<Scalar>& a) {
  if (a.size() == 0) return Scalar(0);
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

// Pade coefficients b_0..b_m of the diagonal [m/m] approximant to exp.
template <typename Scalar, int M>
constexpr auto pade_coefficients() {
  if constexpr (M == 3) {
    return std::array<Scalar, 4>{120, 60, 12, 1};
  } else if constexpr (M == 5) {
    return std::array<Scalar, 6>{30240, 15120, 3360, 420, 30, 1};
  } else if constexpr (M == 7) {
    return std::array<Scalar, 8>{17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
  } else if constexpr (M == 9) {
    return std::array<Scalar, 10>{17643225600.0L, 8821612800.0L, 2075673600.0L, 302702400.0L, 30270240.0L,
                                  2162160.0L,     110880.0L,     3960.0L,       90.0L,        1.0L};
  } else {
    static_assert(M == 13);
    return std::array<Scalar, 14>{64764752532480000.0L, 32382376266240000.0L, 7771770303897600.0L,
                                  1187353796428800.0L,  129060195264000.0L,   10559470521600.0L,
                                  670442572800.0L,      33522128640.0L,       1323241920.0L,
                                  40840800.0L,          960960.0L,            16380.0L,
                                  182.0L,               1.0L};
  }
}

// [m/m] Pade approximant for m in {3,5,7,9}: sums of even powers form V, odd powers U.
template <typename Scalar, int M>
MatrixX<Scalar> pade_low(const MatrixX<Scalar>& a) {
  constexpr auto b = pade_coefficients<Scalar, M>();
  const Index n = a.rows();
  const MatrixX<Scalar> a2 = a * a;
  MatrixX<Scalar> power = MatrixX<Scalar>::Identity(n, n);
  MatrixX<Scalar> u_inner = b[1] * power;
  MatrixX<Scalar> v = b[0] * power;
  for (int k = 2; k <= M; k += 2) {
    power = power * a2;
    v += b[k] * power;
    u_inner += b[k + 1] * power;
  }
  const MatrixX<Scalar> u = a * u_inner;
  return (v - u).partialPivLu().solve(v + u);
}

template <typename Scalar>
MatrixX<Scalar> pade13(const MatrixX<Scalar>& a) {
  constexpr auto b = pade_coefficients<Scalar, 13>();
  const Index n = a.rows();
  const MatrixX<Scalar> ident = MatrixX<Scalar>::Identity(n, n);
  const MatrixX<Scalar> a2 = a * a;
  const MatrixX<Scalar> a4 = a2 * a2;
  const MatrixX<Scalar> a6 = a4 * a2;
  const MatrixX<Scalar> u_inner =
      a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  const MatrixX<Scalar> u = a * u_inner;
  const MatrixX<Scalar> v =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
///
/// The scaling parameter comes from the 1-norm (Higham 2005). When the 1-norm is
/// already below the error threshold of a lower-degree approximant (3, 5, 7, 9)
/// that approximant is used unscaled; all degrees meet the same unit-roundoff bound.
template <typename Derived>
MatrixX<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& a_in) {
  using Scalar = typename Derived::Scalar;
  detail::require_square_finite(a_in, "expm");
  MatrixX<Scalar> a = a_in;
  const Index n = a.rows();
  if (n == 0) return a;
  const Scalar norm = detail::norm1(a);
  if (norm == Scalar(0)) return MatrixX<Scalar>::Identity(n, n);

  MatrixX<Scalar> result;
  if (norm <= Scalar(1.495585217958292e-2)) {
    result = detail::pade_low<Scalar, 3>(a);
  } else if (norm <= Scalar(2.539398330063230e-1)) {
    result = detail::pade_low<Scalar, 5>(a);
  } else if (norm <= Scalar(9.504178996162932e-1)) {
    result = detail::pade_low<Scalar, 7>(a);
  } else if (norm <= Scalar(2.097847961257068e0)) {
    result = detail::pade_low<Scalar, 9>(a);
  } else {
    constexpr double theta13 = 5.371920351148152;
    int squarings = 0;
    if (static_cast<double>(norm) > theta13) {
      squarings = static_cast<int>(std::ceil(std::log2(static_cast<double>(norm) / theta13)));
      a /= std::ldexp(Scalar(1), squarings);
    }
    result = detail::pade13(a);
    for (int i = 0; i < squarings; ++i) result = result * result;
  }
  if (!result.allFinite()) {
    std::ostringstream os;
    os << "expm overflow: argument 1-norm " << static_cast<double>(norm);
    throw OverflowError(os.str());
  }
  return result;
}

/// s * phi1(s A) with phi1(z) = (e^z - 1) / z, phi1(0) = 1.
///
/// Read off the upper-right block of expm([[sA, sI], [0, 0]]). Equals
/// A^{-1} (e^{sA} - I) whenever A is invertible, and stays defined when it is not.
template <typename Derived>
MatrixX<typename Derived::Scalar> phi1(const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar s) {
  using Scalar = typename Derived::Scalar;
  detail::require_square_finite(a, "phi1");
  if (!std::isfinite(static_cast<double>(s))) throw NumericalError("phi1: non-finite time scale");
  const Index n = a.rows();
  MatrixX<Scalar> block = MatrixX<Scalar>::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = s * a;
  block.topRightCorner(n, n) = s * MatrixX<Scalar>::Identity(n, n);
  return expm(block).topRightCorner(n, n);
}

template <typename Scalar>
struct ExpmFrechet {
  MatrixX<Scalar> expm;     // e^A
  MatrixX<Scalar> frechet;  // L(A, E)
};

/// e^A together with the Frechet derivative L(A, E) = int_0^1 e^{(1-u)A} E e^{uA} du,
/// both read off expm([[A, E], [0, A]]).
template <typename DerivedA, typename DerivedE>
ExpmFrechet<typename DerivedA::Scalar> expm_and_frechet(const Eigen::MatrixBase<DerivedA>& a,
                                                       const Eigen::MatrixBase<DerivedE>& e) {
  using Scalar = typename DerivedA::Scalar;
  detail::require_square_finite(a, "expm_frechet");
  if (e.rows() != a.rows() || e.cols() != a.cols()) {
    throw DimensionError("expm_frechet: direction is " + std::to_string(e.rows()) + "x" +
                         std::to_string(e.cols()) + ", matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  if (!e.allFinite()) throw NumericalError("expm_frechet: non-finite direction entry");
  const Index n = a.rows();
  MatrixX<Scalar> block(2 * n, 2 * n);
  block.topLeftCorner(n, n) = a;
  block.topRightCorner(n, n) = e;
  block.bottomLeftCorner(n, n).setZero();
  block.bottomRightCorner(n, n) = a;
  const MatrixX<Scalar> full = expm(block);
  return {full.topLeftCorner(n, n), full.topRightCorner(n, n)};
}

template <typename DerivedA, typename DerivedE>
MatrixX<typename DerivedA::Scalar> expm_frechet(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedE>& e) {
  return expm_and_frechet(a, e).frechet;
}

/// 1-norm condition number estimate; +inf for exactly singular input.
template <typename Derived>
double condition_estimate(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  detail::require_square_finite(a, "condition_estimate");
  if (a.rows() == 0) return 1.0;
  const Eigen::PartialPivLU<MatrixX<Scalar>> lu(a);
  const double rcond = static_cast<double>(lu.rcond());
  return rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
}

inline constexpr double kSingularConditionLimit = 1e12;

/// Inverse of a numerically nonsingular matrix; throws SingularMatrixError
/// carrying the condition estimate when it exceeds 1e12.
template <typename Derived>
MatrixX<typename Derived::Scalar> inverse(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  detail::require_square_finite(a, "inverse");
  const Eigen::PartialPivLU<MatrixX<Scalar>> lu(a);
  const double rcond = static_cast<double>(lu.rcond());
  const double cond = rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond < kSingularConditionLimit)) {
    std::ostringstream os;
    os << "matrix is numerically singular (condition estimate " << cond << ")";
    throw SingularMatrixError(os.str(), cond);
  }
  return lu.inverse();
}

/// Eigenvalues of a general real matrix, unordered.
template <typename Derived>
VectorX<std::complex<typename Derived::Scalar>> eigenvalues(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  detail::require_square_finite(a, "eigenvalues");
  const Eigen::EigenSolver<MatrixX<Scalar>> solver(a.eval(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalues: QR iteration did not converge");
  return solver.eigenvalues();
}

}  // namespace qrlma
