#include "qrlma/infer.hpp"

#include "qrlma/hazard.hpp"
#include "qrlma/matfun.hpp"
#include "qrlma/nnls.hpp"
#include "qrlma/parallel.hpp"
#include "qrlma/uncertainty.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qrlma {

std::string to_string(Initializer initializer) {
  return initializer == Initializer::lla ? "lla" : "user_supplied";
}

std::string to_string(GradientMode mode) {
  return mode == GradientMode::analytic ? "analytic" : "finite_difference";
}

Initializer parse_initializer(const std::string& name) {
  if (name == "lla") return Initializer::lla;
  if (name == "user_supplied" || name == "values") return Initializer::user_supplied;
  throw ValidationError("unknown initializer '" + name + "' (expected lla or user_supplied)");
}

GradientMode parse_gradient_mode(const std::string& name) {
  if (name == "analytic") return GradientMode::analytic;
  if (name == "finite_difference" || name == "fd") return GradientMode::finite_difference;
  throw ValidationError("unknown gradient mode '" + name + "' (expected analytic or finite_difference)");
}

std::string to_string(CovarianceMethod method) {
  return method == CovarianceMethod::outer_product ? "outer_product" : "sandwich";
}

CovarianceMethod parse_covariance_method(const std::string& name) {
  if (name == "outer_product") return CovarianceMethod::outer_product;
  if (name == "sandwich") return CovarianceMethod::sandwich;
  throw ValidationError("unknown covariance method '" + name + "' (expected outer_product or sandwich)");
}

void FitConfig::validate() const {
  if (max_iterations < 0) throw ValidationError("max_iterations must be nonnegative");
  if (!(gradient_tolerance > 0) || !(objective_tolerance > 0)) throw ValidationError("tolerances must be positive");
  if (!(theta_lower_bound >= 0) || !std::isfinite(theta_lower_bound)) {
    throw ValidationError("theta_lower_bound must be finite and nonnegative");
  }
  if (memory_size < 1) throw ValidationError("memory_size must be at least 1");
  if (initializer == Initializer::user_supplied && !initial_theta) {
    throw ValidationError("user_supplied initializer needs initial_theta");
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Row permutation taking data species order to system species order.
std::vector<Index> species_map(const ReactionSystem& system, const ObservationSet& data) {
  if (data.num_species() != system.num_species()) {
    throw DimensionError("data has " + std::to_string(data.num_species()) + " species, system has " +
                         std::to_string(system.num_species()));
  }
  std::vector<Index> map(static_cast<std::size_t>(system.num_species()));
  std::vector<bool> seen(map.size(), false);
  for (std::size_t i = 0; i < data.species.size(); ++i) {
    const Index l = system.species_index(data.species[i]);
    if (seen[static_cast<std::size_t>(l)]) throw ValidationError("species '" + data.species[i] + "' appears twice");
    seen[static_cast<std::size_t>(l)] = true;
    map[static_cast<std::size_t>(l)] = static_cast<Index>(i);
  }
  return map;
}

Vector column_in_system_order(const Matrix& states, Index col, const std::vector<Index>& map) {
  Vector y(static_cast<Index>(map.size()));
  for (std::size_t l = 0; l < map.size(); ++l) y(static_cast<Index>(l)) = states(map[l], col);
  return y;
}

// Augmented generator s [[P, b], [0, 0]] of the affine flow.
Matrix augmented_generator(const Matrix& v, const Matrix& h, const Vector& offset, const RateVector& theta, double s) {
  const Index p = v.rows();
  const Matrix v_theta = v * theta.asDiagonal();
  Matrix a = Matrix::Zero(p + 1, p + 1);
  a.topLeftCorner(p, p) = s * (v_theta * h);
  a.topRightCorner(p, 1) = s * (v_theta * offset);
  return a;
}

}  // namespace

LmaProblem::LmaProblem(const ReactionSystem& system, const ObservationSet& data, unsigned threads)
    : system_(system), threads_(threads == 0 ? default_thread_count() : threads) {
  data.validate();
  const std::vector<Index> map = species_map(system, data);
  for (std::size_t c = 0; c < data.replicates.size(); ++c) {
    const Replicate& rep = data.replicates[c];
    for (Index i = 1; i < rep.num_points(); ++i) {
      Transition tr;
      tr.replicate = static_cast<Index>(c);
      tr.point = i;
      tr.dt = rep.times[static_cast<std::size_t>(i)] - rep.times[static_cast<std::size_t>(i - 1)];
      tr.y_prev = column_in_system_order(rep.states, i - 1, map);
      tr.y_next = column_in_system_order(rep.states, i, map);
      tr.h = kappa_jacobian(system_, tr.y_prev);
      tr.offset = kappa(system_, tr.y_prev) - tr.h * tr.y_prev;
      transitions_.push_back(std::move(tr));
    }
  }
  if (transitions_.empty()) throw ValidationError("data contain no transitions");
}

double LmaProblem::transition_terms(const Transition& tr, const RateVector& theta, Vector* residual,
                                    Vector* score) const {
  const Index p = system_.num_species();
  const Matrix& v = system_.net_effect_real();
  const Matrix a = augmented_generator(v, tr.h, tr.offset, theta, tr.dt);
  const Matrix e = expm(a);
  const Vector m = e.topLeftCorner(p, p) * tr.y_prev + e.topRightCorner(p, 1);
  const Vector r = tr.y_next - m;
  if (residual) *residual = r;
  if (score) {
    // xi_j^T r = s [v_j; 0]^T L(A^T, [r; 0] z^T) [h_j; offset_j], z = [y_prev; 1],
    // by the adjoint identity <W, L(A, E)> = <L(A^T, W), E>.
    Matrix w = Matrix::Zero(p + 1, p + 1);
    Vector z(p + 1);
    z << tr.y_prev, 1.0;
    w.topRows(p) = r * z.transpose();
    const Matrix g = expm_frechet(Matrix(a.transpose()), w);
    Matrix right(p + 1, theta.size());
    right.topRows(p) = tr.h.transpose();
    right.bottomRows(1) = tr.offset.transpose();
    *score = tr.dt * (g.topRows(p) * right).cwiseProduct(v).colwise().sum().transpose();
  }
  return r.squaredNorm();
}

double LmaProblem::objective(const RateVector& theta, Vector* gradient) const {
  detail::check_rates(system_, theta);
  const auto n = transitions_.size();
  const std::size_t chunks = std::min<std::size_t>(std::max(1u, threads_), n);
  std::vector<double> partial(chunks, 0.0);
  std::vector<Vector> partial_grad(chunks, Vector::Zero(theta.size()));
  bool overflow = false;
  try {
    parallel_for(
        chunks,
        [&](std::size_t k) {
          Vector score;
          for (std::size_t t = k * n / chunks; t < (k + 1) * n / chunks; ++t) {
            partial[k] += transition_terms(transitions_[t], theta, nullptr, gradient ? &score : nullptr);
            if (gradient) partial_grad[k] -= 2.0 * score;
          }
        },
        static_cast<unsigned>(chunks));
  } catch (const NumericalError&) {
    overflow = true;
  }
  double total = 0.0;
  for (double x : partial) total += x;
  if (overflow || !std::isfinite(total)) {
    if (gradient) gradient->setConstant(theta.size(), std::numeric_limits<double>::quiet_NaN());
    return kInf;
  }
  if (gradient) {
    gradient->setZero(theta.size());
    for (const auto& g : partial_grad) *gradient += g;
  }
  return total;
}

Matrix LmaProblem::predictions(const RateVector& theta) const {
  Matrix out = residuals(theta);
  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    out.col(static_cast<Index>(t)) = transitions_[t].y_next - out.col(static_cast<Index>(t));
  }
  return out;
}

Matrix LmaProblem::residuals(const RateVector& theta) const {
  detail::check_rates(system_, theta);
  Matrix out(system_.num_species(), static_cast<Index>(transitions_.size()));
  Vector r;
  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    transition_terms(transitions_[t], theta, &r, nullptr);
    out.col(static_cast<Index>(t)) = r;
  }
  return out;
}

Matrix LmaProblem::scores(const RateVector& theta) const {
  detail::check_rates(system_, theta);
  Matrix out(theta.size(), static_cast<Index>(transitions_.size()));
  Vector s;
  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    transition_terms(transitions_[t], theta, nullptr, &s);
    out.col(static_cast<Index>(t)) = s;
  }
  return out;
}

RateVector lla_estimate(const ObservationSet& data, const ReactionSystem& system) {
  data.validate();
  const std::vector<Index> map = species_map(system, data);
  const Index p = system.num_species();
  const Index r = system.num_reactions();
  const Matrix& v = system.net_effect_real();

  struct Step {
    Vector dy;
    Vector kappa_dt;  // kappa(Y_prev) dt
    Matrix design;    // V diag(kappa) dt
  };
  std::vector<Step> steps;
  Vector activity = Vector::Zero(r);
  for (const auto& rep : data.replicates) {
    for (Index i = 1; i < rep.num_points(); ++i) {
      const double dt = rep.times[static_cast<std::size_t>(i)] - rep.times[static_cast<std::size_t>(i - 1)];
      const Vector prev = column_in_system_order(rep.states, i - 1, map);
      Step st;
      st.dy = column_in_system_order(rep.states, i, map) - prev;
      st.kappa_dt = kappa(system, prev) * dt;
      st.design = v * st.kappa_dt.asDiagonal();
      activity += st.design.colwise().norm().transpose();
      steps.push_back(std::move(st));
    }
  }
  if (steps.empty()) throw ValidationError("lla_estimate: data contain no transitions");
  if ((activity.array() == 0).all()) {
    std::string names;
    for (Index j = 0; j < r; ++j) names += (j ? ", " : "") + system.reaction_labels()[static_cast<std::size_t>(j)];
    throw ValidationError("lla_estimate: no reaction is ever active in the data (inactive: " + names + ")");
  }

  const auto n_steps = static_cast<Index>(steps.size());
  Matrix a(n_steps * p, r);
  Vector rhs(n_steps * p);
  RateVector theta = RateVector::Zero(r);
  bool identity_weights = true;
  for (int outer = 0; outer < 5; ++outer) {
    for (Index k = 0; k < n_steps; ++k) {
      const Step& st = steps[static_cast<std::size_t>(k)];
      if (identity_weights) {
        a.middleRows(k * p, p) = st.design;
        rhs.segment(k * p, p) = st.dy;
        continue;
      }
      // Whitening by Omega^{+1/2}, Omega = V diag(theta kappa dt) V^T.
      const Matrix omega = v * theta.cwiseProduct(st.kappa_dt).asDiagonal() * v.transpose();
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(omega);
      const Vector lambda = eig.eigenvalues();
      const double cutoff = 1e-10 * std::max(0.0, lambda.maxCoeff());
      Vector inv_sqrt = Vector::Zero(p);
      for (Index l = 0; l < p; ++l) {
        if (lambda(l) > cutoff && lambda(l) > 0) inv_sqrt(l) = 1.0 / std::sqrt(lambda(l));
      }
      const Matrix whiten = inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
      a.middleRows(k * p, p) = whiten * st.design;
      rhs.segment(k * p, p) = whiten * st.dy;
    }
    const RateVector next = nnls(a, rhs);
    const double change = (next - theta).norm() / std::max(next.norm(), std::numeric_limits<double>::min());
    theta = next;
    identity_weights = false;
    if (outer > 0 && change < 1e-6) break;
    if (theta.isZero(0.0)) break;
  }
  return theta;
}

double lma_objective(const RateVector& theta, const ObservationSet& data, const ReactionSystem& system) {
  return LmaProblem(system, data).objective(theta);
}

Vector lma_gradient(const RateVector& theta, const ObservationSet& data, const ReactionSystem& system) {
  Vector g(theta.size());
  const double f = LmaProblem(system, data).objective(theta, &g);
  if (!std::isfinite(f)) throw OverflowError("lma_gradient: prediction overflow at the requested rates");
  return g;
}

Vector finite_difference_gradient(const LmaProblem& problem, const RateVector& theta, double lower_bound) {
  Vector g(theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    const double h = 1e-6 * std::max(theta(j), 1.0);
    RateVector up = theta;
    RateVector down = theta;
    up(j) += h;
    if (theta(j) - h >= lower_bound) {
      down(j) -= h;
      g(j) = (problem.objective(up) - problem.objective(down)) / (2.0 * h);
    } else {
      g(j) = (problem.objective(up) - problem.objective(theta)) / h;
    }
  }
  return g;
}

FitResult lma_fit(const ObservationSet& data, const ReactionSystem& system, const FitConfig& config) {
  config.validate();
  const LmaProblem problem(system, data, config.threads);
  const Index r = system.num_reactions();
  const double lb = config.theta_lower_bound;

  FitResult out;
  if (config.initializer == Initializer::user_supplied) {
    out.theta_init = *config.initial_theta;
    if (out.theta_init.size() != r) {
      throw DimensionError("initial theta has " + std::to_string(out.theta_init.size()) + " entries, system has " +
                           std::to_string(r) + " reactions");
    }
    if (!out.theta_init.allFinite() || (out.theta_init.array() < 0).any()) {
      throw ValidationError("initial theta must be finite and nonnegative");
    }
  } else {
    out.theta_init = lla_estimate(data, system);
    for (Index j = 0; j < r; ++j) {
      if (!(out.theta_init(j) > 0)) out.theta_init(j) = 1e-6;
    }
  }
  out.theta_init = out.theta_init.cwiseMax(lb);

  // Optimize over x = theta / scale so that rates of very different magnitude
  // are comparably conditioned; the stopping test still uses theta.
  const double largest = out.theta_init.cwiseAbs().maxCoeff();
  Vector scale = out.theta_init.cwiseMax(1e-3 * largest);
  if (!(largest > 0)) scale.setOnes();
  BoundedObjective f = [&](const Vector& x, Vector* gradient) {
    const RateVector theta = x.cwiseProduct(scale);
    double value = 0.0;
    if (!gradient || config.gradient_mode == GradientMode::analytic) {
      value = problem.objective(theta, gradient);
    } else {
      value = problem.objective(theta);
      if (std::isfinite(value)) *gradient = finite_difference_gradient(problem, theta, lb);
    }
    if (gradient) *gradient = gradient->cwiseProduct(scale);
    return value;
  };
  LbfgsbOptions options;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;
  options.objective_tolerance = config.objective_tolerance;
  options.memory_size = config.memory_size;
  options.variable_scale = scale;
  const Vector lower = Vector::Constant(r, lb).cwiseQuotient(scale);
  const Vector upper = Vector::Constant(r, kInf);
  const LbfgsbResult opt = minimize_lbfgsb(f, out.theta_init.cwiseQuotient(scale), lower, upper, options);

  out.theta_hat = opt.x.cwiseProduct(scale).cwiseMax(lb);
  out.objective = opt.objective;
  out.n_iterations = opt.iterations;
  out.n_evaluations = opt.evaluations;
  out.termination = opt.termination;
  out.converged = opt.converged();
  out.message = opt.message;
  out.objective_history = opt.objective_history;
  out.residuals = problem.residuals(out.theta_hat);
  out.bic = bic_value(out.objective, problem.num_residuals(), r);
  out.boundary_active.resize(static_cast<std::size_t>(r));
  for (Index j = 0; j < r; ++j) out.boundary_active[static_cast<std::size_t>(j)] = out.theta_hat(j) < kBoundaryActiveThreshold;
  if (config.compute_stderr) {
    const StandardErrors se = standard_errors(problem, out.theta_hat, config.stderr_method);
    out.standard_errors = se.values;
    out.stderr_warning = se.warning;
  }
  return out;
}

double bic_value(double rss, Index n_residuals, Index n_parameters) {
  if (n_residuals <= 0) throw ValidationError("BIC needs at least one residual");
  if (!(rss >= 0)) return kInf;
  const auto n = static_cast<double>(n_residuals);
  return n * std::log(rss / n) + static_cast<double>(n_parameters) * std::log(n);
}

}  // namespace qrlma
