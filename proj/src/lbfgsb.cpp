#include "qrlma/lbfgsb.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace qrlma {

std::string to_string(Termination termination) {
  switch (termination) {
    case Termination::gradient_tolerance: return "gradient_tolerance";
    case Termination::objective_tolerance: return "objective_tolerance";
    case Termination::max_iterations: return "max_iterations";
    case Termination::line_search_failure: return "line_search_failure";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
// Relative decrease over the last kStallWindow steps below which a failed
// steepest-descent search counts as convergence.
constexpr std::size_t kStallWindow = 3;
constexpr double kStallTolerance = 1e-8;

Vector clamp_to_box(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Compact limited-memory representation B = theta I - W M W^T.
class Memory {
 public:
  Memory(Index n, int capacity) : n_(n), capacity_(std::max(1, capacity)) { clear(); }

  bool empty() const { return s_.empty(); }
  double theta() const { return theta_; }
  const Matrix& w() const { return w_; }
  const Matrix& m() const { return m_; }

  void clear() {
    s_.clear();
    y_.clear();
    theta_ = 1.0;
    w_.resize(n_, 0);
    m_.resize(0, 0);
  }

  void push(const Vector& s, const Vector& y) {
    if (static_cast<int>(s_.size()) == capacity_) {
      s_.pop_front();
      y_.pop_front();
    }
    s_.push_back(s);
    y_.push_back(y);
    theta_ = y.squaredNorm() / y.dot(s);
    rebuild();
  }

 private:
  void rebuild() {
    const auto k = static_cast<Index>(s_.size());
    Matrix s(n_, k);
    Matrix y(n_, k);
    for (Index i = 0; i < k; ++i) {
      s.col(i) = s_[static_cast<std::size_t>(i)];
      y.col(i) = y_[static_cast<std::size_t>(i)];
    }
    w_.resize(n_, 2 * k);
    w_ << y, theta_ * s;
    const Matrix sy = s.transpose() * y;
    Matrix middle(2 * k, 2 * k);
    middle.topLeftCorner(k, k) = -Matrix(sy.diagonal().asDiagonal());
    const Matrix lower = sy.triangularView<Eigen::StrictlyLower>();
    middle.topRightCorner(k, k) = lower.transpose();
    middle.bottomLeftCorner(k, k) = lower;
    middle.bottomRightCorner(k, k) = theta_ * (s.transpose() * s);
    const Eigen::FullPivLU<Matrix> lu(middle);
    if (!lu.isInvertible()) {
      clear();
      return;
    }
    m_ = lu.inverse();
  }

  Index n_;
  int capacity_;
  std::deque<Vector> s_;
  std::deque<Vector> y_;
  double theta_ = 1.0;
  Matrix w_;
  Matrix m_;
};

struct CauchyPoint {
  Vector x;
  Vector c;
};

// Generalized Cauchy point along the projected steepest-descent path.
CauchyPoint generalized_cauchy_point(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper,
                                     const Memory& mem) {
  const Index n = x.size();
  const double theta = mem.theta();
  const Matrix& w = mem.w();
  const Matrix& m = mem.m();

  Vector breakpoint(n);
  Vector d(n);
  for (Index i = 0; i < n; ++i) {
    if (g(i) < 0 && std::isfinite(upper(i))) {
      breakpoint(i) = (x(i) - upper(i)) / g(i);
    } else if (g(i) > 0 && std::isfinite(lower(i))) {
      breakpoint(i) = (x(i) - lower(i)) / g(i);
    } else {
      breakpoint(i) = kInf;
    }
    d(i) = breakpoint(i) <= 0 ? 0.0 : -g(i);
  }
  std::vector<Index> order;
  for (Index i = 0; i < n; ++i) {
    if (breakpoint(i) > 0 && std::isfinite(breakpoint(i))) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return breakpoint(a) < breakpoint(b); });

  CauchyPoint cp{x, Vector::Zero(w.cols())};
  Vector p = w.transpose() * d;
  double fp = -d.squaredNorm();
  if (fp >= 0) return cp;
  const double fpp0 = -theta * fp;
  double fpp = fpp0 - (w.cols() > 0 ? p.dot(m * p) : 0.0);
  fpp = std::max(kEps * fpp0, fpp);
  double dt_min = -fp / fpp;
  double t_old = 0.0;

  std::size_t next = 0;
  while (next < order.size()) {
    const Index b = order[next];
    const double dt = breakpoint(b) - t_old;
    if (dt_min < dt) break;
    cp.x(b) = d(b) > 0 ? upper(b) : lower(b);
    const double zb = cp.x(b) - x(b);
    cp.c += dt * p;
    const double gb = g(b);
    if (w.cols() > 0) {
      const Vector wb = w.row(b).transpose();
      fp += dt * fpp + gb * gb + theta * gb * zb - gb * wb.dot(m * cp.c);
      fpp += -theta * gb * gb - 2.0 * gb * wb.dot(m * p) - gb * gb * wb.dot(m * wb);
      p += gb * wb;
    } else {
      fp += dt * fpp + gb * gb + theta * gb * zb;
      fpp += -theta * gb * gb;
    }
    fpp = std::max(kEps * fpp0, fpp);
    d(b) = 0.0;
    dt_min = -fp / fpp;
    t_old = breakpoint(b);
    ++next;
  }
  dt_min = std::max(dt_min, 0.0);
  t_old += dt_min;
  for (Index i = 0; i < n; ++i) {
    if (d(i) != 0.0) cp.x(i) = x(i) + t_old * d(i);
  }
  cp.x = clamp_to_box(cp.x, lower, upper);
  cp.c += dt_min * p;
  return cp;
}

// Direct primal minimization of the quadratic model over the free variables at the Cauchy point.
Vector subspace_minimum(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper,
                        const Memory& mem, const CauchyPoint& cp) {
  const Index n = x.size();
  std::vector<Index> free;
  for (Index i = 0; i < n; ++i) {
    if (cp.x(i) > lower(i) && cp.x(i) < upper(i)) free.push_back(i);
  }
  if (free.empty()) return cp.x;
  const double theta = mem.theta();
  const Matrix& w = mem.w();
  const Matrix& m = mem.m();

  Vector full_r = g + theta * (cp.x - x);
  if (w.cols() > 0) full_r -= w * (m * cp.c);
  const auto nf = static_cast<Index>(free.size());
  Vector r(nf);
  for (Index i = 0; i < nf; ++i) r(i) = full_r(free[static_cast<std::size_t>(i)]);

  Vector du = -r / theta;
  if (w.cols() > 0) {
    Matrix wz(w.cols(), nf);
    for (Index i = 0; i < nf; ++i) wz.col(i) = w.row(free[static_cast<std::size_t>(i)]).transpose();
    Vector v = m * (wz * r);
    const Matrix nmat = Matrix::Identity(w.cols(), w.cols()) - (m * (wz * wz.transpose())) / theta;
    v = nmat.partialPivLu().solve(v);
    du -= wz.transpose() * v / (theta * theta);
  }

  // Projected step first; fall back to truncating the step at the box when it is not a descent direction.
  Vector projected = cp.x;
  for (Index i = 0; i < nf; ++i) {
    const Index k = free[static_cast<std::size_t>(i)];
    projected(k) = std::clamp(cp.x(k) + du(i), lower(k), upper(k));
  }
  if ((projected - x).dot(g) < 0) return projected;

  double alpha = 1.0;
  for (Index i = 0; i < nf; ++i) {
    const Index k = free[static_cast<std::size_t>(i)];
    if (du(i) > 0) alpha = std::min(alpha, (upper(k) - cp.x(k)) / du(i));
    if (du(i) < 0) alpha = std::min(alpha, (lower(k) - cp.x(k)) / du(i));
  }
  Vector out = cp.x;
  for (Index i = 0; i < nf; ++i) out(free[static_cast<std::size_t>(i)]) += alpha * du(i);
  return clamp_to_box(out, lower, upper);
}

struct Trial {
  double step = 0.0;
  double f = kInf;
  double slope = std::numeric_limits<double>::quiet_NaN();
  Vector x;
  Vector g;
  bool has_gradient = false;
};

struct LineSearchOutcome {
  bool ok = false;
  Trial point;
};

class LineSearch {
 public:
  LineSearch(const BoundedObjective& f, const Vector& x, double fx, const Vector& g, const Vector& d,
             const Vector& lower, const Vector& upper, const LbfgsbOptions& opts, int& evaluations)
      : f_(f), x_(x), fx_(fx), d_(d), lower_(lower), upper_(upper), opts_(opts), evals_(evaluations) {
    slope0_ = g.dot(d);
    origin_.step = 0.0;
    origin_.f = fx;
    origin_.slope = slope0_;
    origin_.x = x;
    origin_.g = g;
    origin_.has_gradient = true;
  }

  LineSearchOutcome run(double initial_step, double max_step) {
    Trial prev = origin_;
    double step = std::min(initial_step, max_step);
    for (int i = 0; i < opts_.max_line_search_steps; ++i) {
      Trial t = value_at(step);
      if (!sufficient_decrease(t) || (i > 0 && t.f >= prev.f)) return zoom(prev, t);
      add_gradient(t);
      if (!std::isfinite(t.slope)) return zoom(prev, t);
      if (std::abs(t.slope) <= -opts_.curvature * slope0_) return {true, t};
      if (t.slope >= 0) return zoom(t, prev);
      if (step >= max_step) return {true, t};
      prev = t;
      step = std::min(4.0 * step, max_step);
    }
    if (prev.step > 0) return {true, prev};
    return {};
  }

 private:
  Trial value_at(double step) {
    Trial t;
    t.step = step;
    t.x = clamp_to_box(x_ + step * d_, lower_, upper_);
    t.f = f_(t.x, nullptr);
    ++evals_;
    if (!std::isfinite(t.f)) t.f = kInf;
    return t;
  }

  void add_gradient(Trial& t) {
    Vector g(x_.size());
    const double f = f_(t.x, &g);
    ++evals_;
    if (!std::isfinite(f) || !g.allFinite()) {
      t.f = kInf;
      t.slope = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    t.f = f;
    t.g = std::move(g);
    t.slope = t.g.dot(d_);
    t.has_gradient = true;
  }

  bool sufficient_decrease(const Trial& t) const {
    return std::isfinite(t.f) && t.f <= fx_ + opts_.armijo * t.step * slope0_;
  }

  static double interpolate(const Trial& lo, const Trial& hi) {
    const double a = lo.step;
    const double b = hi.step;
    const double width = b - a;
    double candidate = std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(hi.f) && hi.has_gradient && std::isfinite(hi.slope)) {
      const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
      const double disc = d1 * d1 - lo.slope * hi.slope;
      if (disc >= 0) {
        const double d2 = std::copysign(std::sqrt(disc), width);
        const double denom = hi.slope - lo.slope + 2.0 * d2;
        if (denom != 0) candidate = b - width * (hi.slope + d2 - d1) / denom;
      }
    } else if (std::isfinite(hi.f)) {
      const double curvature = hi.f - lo.f - lo.slope * width;
      if (curvature > 0) candidate = a - lo.slope * width * width / (2.0 * curvature);
    }
    const double lo_edge = std::min(a, b) + 0.1 * std::abs(width);
    const double hi_edge = std::max(a, b) - 0.1 * std::abs(width);
    if (!std::isfinite(candidate) || candidate < lo_edge || candidate > hi_edge) candidate = 0.5 * (a + b);
    return candidate;
  }

  LineSearchOutcome zoom(Trial lo, Trial hi) {
    for (int j = 0; j < opts_.max_line_search_steps; ++j) {
      const double step = interpolate(lo, hi);
      if (step == lo.step || step == hi.step) break;
      Trial t = value_at(step);
      if (!sufficient_decrease(t) || t.f >= lo.f) {
        hi = std::move(t);
        continue;
      }
      add_gradient(t);
      if (!std::isfinite(t.slope)) {
        hi = std::move(t);
        continue;
      }
      if (std::abs(t.slope) <= -opts_.curvature * slope0_) return {true, t};
      if (t.slope * (hi.step - lo.step) >= 0) hi = lo;
      lo = std::move(t);
    }
    // Sufficient decrease without the curvature condition still makes progress.
    if (lo.step > 0 && lo.has_gradient) return {true, lo};
    return {};
  }

  const BoundedObjective& f_;
  const Vector& x_;
  double fx_;
  const Vector& d_;
  const Vector& lower_;
  const Vector& upper_;
  const LbfgsbOptions& opts_;
  int& evals_;
  double slope0_ = 0.0;
  Trial origin_;
};

}  // namespace

double projected_gradient_norm(const Vector& x, const Vector& gradient, const Vector& lower, const Vector& upper) {
  return (clamp_to_box(x - gradient, lower, upper) - x).cwiseAbs().maxCoeff();
}

LbfgsbResult minimize_lbfgsb(const BoundedObjective& f, const Vector& x0, const Vector& lower, const Vector& upper,
                             const LbfgsbOptions& options) {
  const Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw DimensionError("lbfgsb: bound vectors do not match x0");
  if ((lower.array() > upper.array()).any()) throw ValidationError("lbfgsb: lower bound exceeds upper bound");
  if (options.gradient_tolerance <= 0 || options.objective_tolerance <= 0) {
    throw ValidationError("lbfgsb: tolerances must be positive");
  }

  LbfgsbResult result;
  Vector x = clamp_to_box(x0, lower, upper);
  Vector g(n);
  double fx = f(x, &g);
  result.evaluations = 1;
  if (!std::isfinite(fx) || !g.allFinite()) throw NumericalError("lbfgsb: objective is not finite at the start point");
  result.objective_history.push_back(fx);
  if (options.record_iterates) result.iterates.push_back(x);

  const bool scaled = options.variable_scale.size() > 0;
  if (scaled && (options.variable_scale.size() != n || !(options.variable_scale.array() > 0).all())) {
    throw ValidationError("lbfgsb: variable_scale must be positive with one entry per variable");
  }
  auto stationarity = [&](const Vector& xk, const Vector& gk) {
    if (!scaled) return projected_gradient_norm(xk, gk, lower, upper);
    const Vector& s = options.variable_scale;
    return projected_gradient_norm(xk.cwiseProduct(s), gk.cwiseQuotient(s), lower.cwiseProduct(s),
                                   upper.cwiseProduct(s));
  };

  Memory mem(n, options.memory_size);
  for (;;) {
    if (stationarity(x, g) <= options.gradient_tolerance) {
      result.termination = Termination::gradient_tolerance;
      break;
    }
    if (result.iterations >= options.max_iterations) {
      result.termination = Termination::max_iterations;
      break;
    }

    const CauchyPoint cp = generalized_cauchy_point(x, g, lower, upper, mem);
    const Vector d = subspace_minimum(x, g, lower, upper, mem, cp) - x;
    if ((x + d).cwiseEqual(x).all()) {
      result.termination = Termination::objective_tolerance;
      result.message = "step below floating-point resolution";
      break;
    }
    if (!(g.dot(d) < 0)) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      result.termination = Termination::line_search_failure;
      result.message = "no descent direction at a point with nonzero projected gradient";
      break;
    }

    double max_step = kInf;
    for (Index i = 0; i < n; ++i) {
      if (d(i) > 0) max_step = std::min(max_step, (upper(i) - x(i)) / d(i));
      if (d(i) < 0) max_step = std::min(max_step, (lower(i) - x(i)) / d(i));
    }
    double initial_step = 1.0;
    if (mem.empty()) {
      max_step = std::min(max_step, 1e10);
      initial_step = std::min(1.0 / d.norm(), max_step);
    } else {
      max_step = 1.0;
    }

    LineSearch search(f, x, fx, g, d, lower, upper, options, result.evaluations);
    const LineSearchOutcome ls = search.run(initial_step, max_step);
    if (!ls.ok && !mem.empty() && -g.dot(d) <= options.objective_tolerance * std::max(std::abs(fx), 1.0)) {
      // The quasi-Newton step predicts a reduction below the objective
      // tolerance, so f cannot resolve further progress.
      result.termination = Termination::objective_tolerance;
      result.message = "predicted reduction below objective tolerance";
      break;
    }
    if (!ls.ok) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      // Steepest descent cannot decrease f either. If the last few steps had
      // already stalled, the gradient is at the noise floor of f.
      const auto& h = result.objective_history;
      if (h.size() > kStallWindow) {
        const double before = h[h.size() - 1 - kStallWindow];
        if (before - fx <= kStallTolerance * std::max(std::abs(fx), 1.0)) {
          result.termination = Termination::objective_tolerance;
          result.message = "objective stalled at its noise floor";
          break;
        }
      }
      result.termination = Termination::line_search_failure;
      result.message = "line search found no decrease after " + std::to_string(options.max_line_search_steps) +
                       " trial steps";
      break;
    }

    const Vector s = ls.point.x - x;
    const Vector y = ls.point.g - g;
    const double f_old = fx;
    x = ls.point.x;
    fx = ls.point.f;
    g = ls.point.g;
    ++result.iterations;
    result.objective_history.push_back(fx);
    if (options.record_iterates) result.iterates.push_back(x);

    if (s.dot(y) > kEps * y.squaredNorm()) mem.push(s, y);

    const double scale = std::max({std::abs(f_old), std::abs(fx), 1.0});
    if (f_old - fx <= options.objective_tolerance * scale) {
      result.termination = Termination::objective_tolerance;
      break;
    }
  }
  result.x = x;
  result.objective = fx;
  result.gradient = g;
  return result;
}

}  // namespace qrlma
