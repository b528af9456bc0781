#include "qrlma/uncertainty.hpp"

#include "qrlma/hazard.hpp"
#include "qrlma/matfun.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace qrlma {

std::string to_string(SensitivityMethod method) {
  switch (method) {
    case SensitivityMethod::automatic: return "automatic";
    case SensitivityMethod::inverse: return "inverse";
    case SensitivityMethod::phi1: return "phi1";
  }
  return "unknown";
}

namespace {

Matrix sensitivity_inverse(const Matrix& v, const Matrix& h, const Vector& offset, const StateVector& y0, double s,
                           const Matrix& p_mat, const Vector& b) {
  const Index p = v.rows();
  const Index r = v.cols();
  const Matrix p_inv = inverse(p_mat);
  const Matrix sp = s * p_mat;
  const Matrix e_minus_i = expm(sp) - Matrix::Identity(p, p);
  const Vector flow_b = e_minus_i * b;  // (e^{sP} - I) b
  Matrix out(p, r);
  for (Index j = 0; j < r; ++j) {
    const Matrix dp = v.col(j) * h.row(j);
    const Vector db = v.col(j) * offset(j);
    const Matrix frechet = expm_frechet(sp, Matrix(s * dp));
    out.col(j) = frechet * y0 - p_inv * (dp * (p_inv * flow_b)) + p_inv * (frechet * b) + p_inv * (e_minus_i * db);
  }
  return out;
}

Matrix sensitivity_phi1(const Matrix& v, const Matrix& h, const Vector& offset, const RateVector& theta,
                        const StateVector& y0, double s) {
  const Index p = v.rows();
  const Index r = v.cols();
  const Matrix v_theta = v * theta.asDiagonal();
  Matrix a = Matrix::Zero(p + 1, p + 1);
  a.topLeftCorner(p, p) = s * (v_theta * h);
  a.topRightCorner(p, 1) = s * (v_theta * offset);
  Vector z(p + 1);
  z << y0, 1.0;
  Matrix out(p, r);
  Matrix direction = Matrix::Zero(p + 1, p + 1);
  for (Index j = 0; j < r; ++j) {
    direction.topLeftCorner(p, p) = s * (v.col(j) * h.row(j));
    direction.topRightCorner(p, 1) = s * offset(j) * v.col(j);
    out.col(j) = (expm_frechet(a, direction) * z).head(p);
  }
  return out;
}

}  // namespace

Matrix predict_sensitivity(const ReactionSystem& system, const RateVector& theta, const StateVector& y0, double s,
                           SensitivityMethod method) {
  detail::check_state_dim(system, y0.size());
  detail::check_rates(system, theta);
  if (!(s >= 0) || !std::isfinite(s)) throw ValidationError("sensitivity horizon must be finite and nonnegative");
  const Index p = system.num_species();
  const Index r = system.num_reactions();
  if (s == 0.0) return Matrix::Zero(p, r);

  const Matrix& v = system.net_effect_real();
  const Matrix h = kappa_jacobian(system, y0);
  const Vector offset = kappa(system, y0) - h * y0;
  const Matrix v_theta = v * theta.asDiagonal();
  const Matrix p_mat = v_theta * h;
  const Vector b = v_theta * offset;

  if (method == SensitivityMethod::automatic) {
    method = condition_estimate(p_mat) <= kInverseRouteConditionLimit ? SensitivityMethod::inverse
                                                                      : SensitivityMethod::phi1;
  }
  Matrix out = method == SensitivityMethod::inverse ? sensitivity_inverse(v, h, offset, y0, s, p_mat, b)
                                                    : sensitivity_phi1(v, h, offset, theta, y0, s);
  if (!out.allFinite()) throw OverflowError("predict_sensitivity: non-finite sensitivity");
  return out;
}

Matrix fisher_information(const LmaProblem& problem, const RateVector& theta_hat) {
  const Matrix scores = problem.scores(theta_hat);
  if (!scores.allFinite()) throw OverflowError("fisher_information: non-finite scores");
  Matrix info = scores * scores.transpose();
  return 0.5 * (info + info.transpose());
}

Matrix fisher_information(const RateVector& theta_hat, const ObservationSet& data, const ReactionSystem& system) {
  return fisher_information(LmaProblem(system, data), theta_hat);
}

namespace {

// Pseudo-inverse of a symmetric PSD matrix; flags every coordinate touched by
// an eigenvector whose eigenvalue is below the relative rank tolerance.
struct SymmetricPseudoInverse {
  Matrix inverse;
  std::vector<bool> in_null;
};

SymmetricPseudoInverse pseudo_inverse(const Matrix& a) {
  const Index r = a.rows();
  if (a.cols() != r) throw DimensionError("information matrix must be square");
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()));
  const Vector lambda = eig.eigenvalues();
  const Matrix& q = eig.eigenvectors();
  const double top = r > 0 ? std::max(0.0, lambda.maxCoeff()) : 0.0;
  const double cutoff = kInformationRankTolerance * top;
  SymmetricPseudoInverse out;
  out.in_null.assign(static_cast<std::size_t>(r), false);
  Vector inv_lambda = Vector::Zero(r);
  for (Index k = 0; k < r; ++k) {
    if (top > 0 && lambda(k) > cutoff) {
      inv_lambda(k) = 1.0 / lambda(k);
      continue;
    }
    for (Index j = 0; j < r; ++j) {
      if (std::abs(q(j, k)) > 1e-8) out.in_null[static_cast<std::size_t>(j)] = true;
    }
  }
  out.inverse = q * inv_lambda.asDiagonal() * q.transpose();
  return out;
}

StandardErrors from_covariance(const Matrix& cov, const std::vector<bool>& in_null,
                               const std::vector<std::string>& labels, const char* what) {
  const Index r = cov.rows();
  StandardErrors out;
  out.values.resize(r);
  for (Index j = 0; j < r; ++j) {
    if (in_null[static_cast<std::size_t>(j)]) {
      out.values(j) = std::numeric_limits<double>::infinity();
      out.null_support.push_back(j);
    } else {
      out.values(j) = std::sqrt(std::max(0.0, cov(j, j)));
    }
  }
  if (!out.null_support.empty()) {
    out.identifiable = false;
    std::ostringstream os;
    os << what << " is singular; rates not identifiable:";
    for (Index j : out.null_support) {
      os << ' ' << (static_cast<std::size_t>(j) < labels.size() ? labels[static_cast<std::size_t>(j)] : std::to_string(j));
    }
    out.warning = os.str();
  }
  return out;
}

}  // namespace

StandardErrors standard_errors_from_information(const Matrix& information, const std::vector<std::string>& labels) {
  const SymmetricPseudoInverse pinv = pseudo_inverse(information);
  return from_covariance(pinv.inverse, pinv.in_null, labels, "information matrix");
}

StandardErrors sandwich_standard_errors(const Matrix& bread, const Matrix& information,
                                        const std::vector<std::string>& labels) {
  if (information.rows() != bread.rows() || information.cols() != bread.cols()) {
    throw DimensionError("sandwich: bread and information differ in size");
  }
  const SymmetricPseudoInverse pinv = pseudo_inverse(bread);
  return from_covariance(pinv.inverse * information * pinv.inverse, pinv.in_null, labels, "Gauss-Newton matrix");
}

Matrix gauss_newton_matrix(const LmaProblem& problem, const RateVector& theta_hat) {
  const Index r = problem.system().num_reactions();
  Matrix out = Matrix::Zero(r, r);
  for (const auto& tr : problem.transitions()) {
    const Matrix xi = predict_sensitivity(problem.system(), theta_hat, tr.y_prev, tr.dt);
    out.noalias() += xi.transpose() * xi;
  }
  if (!out.allFinite()) throw OverflowError("gauss_newton_matrix: non-finite sensitivities");
  return 0.5 * (out + out.transpose());
}

StandardErrors standard_errors(const LmaProblem& problem, const RateVector& theta_hat, CovarianceMethod method) {
  const Matrix info = fisher_information(problem, theta_hat);
  const auto& labels = problem.system().reaction_labels();
  if (method == CovarianceMethod::sandwich) {
    return sandwich_standard_errors(gauss_newton_matrix(problem, theta_hat), info, labels);
  }
  return standard_errors_from_information(info, labels);
}

StandardErrors standard_errors(const RateVector& theta_hat, const ObservationSet& data, const ReactionSystem& system,
                               CovarianceMethod method) {
  return standard_errors(LmaProblem(system, data), theta_hat, method);
}

}  // namespace qrlma
