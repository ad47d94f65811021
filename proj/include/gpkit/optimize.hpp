#pragma once

// Hyperparameter estimation by limited-memory BFGS.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <vector>
#include <string>

#include "gpkit/core.hpp"

namespace gpkit {

/// Objective value at x; writes the gradient into `grad`. Non-finite
/// values are treated as infeasible by the line search.
using ObjectiveFn = std::function<double(const VectorXd& x, VectorXd& grad)>;

struct LbfgsOptions {
  int max_iterations = 200;
  double grad_tol = 1e-8;  ///< on the infinity norm of the (projected) gradient
  int memory = 10;
  std::optional<VectorXd> lower;
  std::optional<VectorXd> upper;
};

struct OptimResult {
  VectorXd minimizer;
  double minimum = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

namespace detail {

struct LinePoint {
  double a = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  VectorXd g;
};

// Minimizer of the cubic interpolating (a0, f0, d0), (a1, f1, d1), kept
// inside the bracket away from its ends; falls back to bisection.
inline double cubic_step(const LinePoint& lo, const LinePoint& hi) {
  const double lo_a = std::min(lo.a, hi.a), hi_a = std::max(lo.a, hi.a);
  const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.d * hi.d;
  double a = 0.5 * (lo.a + hi.a);
  if (disc >= 0.0 && std::isfinite(hi.f)) {
    const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
    const double denom = hi.d - lo.d + 2.0 * d2;
    if (denom != 0.0) {
      const double c = hi.a - (hi.a - lo.a) * (hi.d + d2 - d1) / denom;
      if (std::isfinite(c)) a = c;
    }
  }
  const double margin = 0.1 * (hi_a - lo_a);
  return std::clamp(a, lo_a + margin, hi_a - margin);
}

// Strong-Wolfe line search along p from x (f0, g0). Returns the accepted
// point or nullopt when no acceptable step was found.
inline std::optional<LinePoint> strong_wolfe(const ObjectiveFn& fn, const VectorXd& x, double f0, const VectorXd& g0,
                                             const VectorXd& p, double a_init, int& evals) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  constexpr int kMaxEvals = 40;
  const double d0 = g0.dot(p);
  auto eval = [&](double a) {
    LinePoint pt;
    pt.a = a;
    pt.g.resize(x.size());
    pt.f = fn(x + a * p, pt.g);
    ++evals;
    if (!std::isfinite(pt.f) || !pt.g.allFinite()) {
      pt.f = std::numeric_limits<double>::infinity();
      pt.d = std::numeric_limits<double>::quiet_NaN();
    } else {
      pt.d = pt.g.dot(p);
    }
    return pt;
  };
  auto armijo_fails = [&](const LinePoint& pt) { return !(pt.f <= f0 + c1 * pt.a * d0); };
  auto curvature_ok = [&](const LinePoint& pt) { return std::abs(pt.d) <= -c2 * d0; };

  auto zoom = [&](LinePoint lo, LinePoint hi) -> std::optional<LinePoint> {
    LinePoint best = lo;
    for (int k = 0; k < kMaxEvals; ++k) {
      double a;
      if (std::isfinite(hi.f) && std::isfinite(hi.d)) {
        a = cubic_step(lo, hi);
      } else {
        a = 0.5 * (lo.a + hi.a);
      }
      if (std::abs(hi.a - lo.a) < 1e-16 * std::max(1.0, std::abs(lo.a))) break;
      LinePoint pt = eval(a);
      if (armijo_fails(pt) || pt.f >= lo.f) {
        hi = pt;
      } else {
        if (curvature_ok(pt)) return pt;
        if (pt.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = pt;
        best = lo;
      }
    }
    // Accept a sufficient-decrease point even if curvature was not met.
    if (best.a > 0.0) return best;
    return std::nullopt;
  };

  LinePoint prev{0.0, f0, d0, g0};
  double a = a_init;
  for (int i = 0; i < kMaxEvals; ++i) {
    LinePoint pt = eval(a);
    if (armijo_fails(pt) || (i > 0 && pt.f >= prev.f)) return zoom(prev, pt);
    if (curvature_ok(pt)) return pt;
    if (pt.d >= 0.0) return zoom(pt, prev);
    prev = pt;
    a *= 2.0;
  }
  return std::nullopt;
}

inline VectorXd project(const VectorXd& x, const LbfgsOptions& o) {
  VectorXd y = x;
  if (o.lower) y = y.cwiseMax(*o.lower);
  if (o.upper) y = y.cwiseMin(*o.upper);
  return y;
}

// Gradient components that could still move the point inside the box.
inline VectorXd projected_gradient(const VectorXd& x, const VectorXd& g, const LbfgsOptions& o) {
  VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (o.lower && x[i] <= (*o.lower)[i] && g[i] > 0.0) pg[i] = 0.0;
    if (o.upper && x[i] >= (*o.upper)[i] && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace detail

/// Minimizes fn from x0. Without bounds the step satisfies the strong Wolfe
/// conditions; with bounds, steps are projected onto the box and accepted by
/// backtracking on sufficient decrease. Stops when the infinity norm of the
/// (projected) gradient drops below grad_tol or after max_iterations.
inline OptimResult lbfgs_minimize(const ObjectiveFn& fn, const VectorXd& x0, const LbfgsOptions& opts = {}) {
  const Eigen::Index n = x0.size();
  const bool bounded = opts.lower.has_value() || opts.upper.has_value();
  if (opts.lower && opts.lower->size() != n) throw ConfigError("lbfgs: lower bound has the wrong length");
  if (opts.upper && opts.upper->size() != n) throw ConfigError("lbfgs: upper bound has the wrong length");
  if (opts.lower && opts.upper && ((*opts.upper - *opts.lower).array() < 0.0).any())
    throw ConfigError("lbfgs: lower bound exceeds upper bound");

  OptimResult res;
  VectorXd x = bounded ? detail::project(x0, opts) : x0;
  VectorXd g(n);
  double f = fn(x, g);
  if (!std::isfinite(f) || !g.allFinite()) throw InputError("optimize: objective is not finite at the starting point");

  std::deque<VectorXd> S, Y;
  std::deque<double> rho;
  int evals = 1;
  auto grad_norm = [&]() {
    return (bounded ? detail::projected_gradient(x, g, opts) : g).lpNorm<Eigen::Infinity>();
  };

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    if (n == 0 || grad_norm() < opts.grad_tol) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    VectorXd q = bounded ? detail::projected_gradient(x, g, opts) : g;
    std::vector<double> al(S.size());
    for (std::size_t i = S.size(); i-- > 0;) {
      al[i] = rho[i] * S[i].dot(q);
      q.noalias() -= al[i] * Y[i];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double b = rho[i] * Y[i].dot(q);
      q.noalias() += (al[i] - b) * S[i];
    }
    VectorXd p = -q;
    if (bounded) {
      // Do not push against active bounds.
      const VectorXd pg = detail::projected_gradient(x, g, opts);
      for (Eigen::Index i = 0; i < n; ++i)
        if (pg[i] == 0.0 && g[i] != 0.0) p[i] = 0.0;
    }
    if (!(g.dot(p) < 0.0)) {
      // Not a descent direction: reset the memory and use steepest descent.
      S.clear();
      Y.clear();
      rho.clear();
      p = -(bounded ? detail::projected_gradient(x, g, opts) : g);
    }
    const double a0 = S.empty() ? std::min(1.0, 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;

    VectorXd xn, gn(n);
    double fnew;
    if (!bounded) {
      auto pt = detail::strong_wolfe(fn, x, f, g, p, a0, evals);
      if (!pt) {
        res.message = "line search failed";
        break;
      }
      xn = x + pt->a * p;
      gn = pt->g;
      fnew = pt->f;
    } else {
      double a = a0;
      bool ok = false;
      for (int k = 0; k < 40; ++k, a *= 0.5) {
        xn = detail::project(x + a * p, opts);
        fnew = fn(xn, gn);
        ++evals;
        if (std::isfinite(fnew) && gn.allFinite() && fnew <= f + 1e-4 * g.dot(xn - x)) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        res.message = "line search failed";
        break;
      }
    }
    const VectorXd s = xn - x;
    const VectorXd yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      S.push_back(s);
      Y.push_back(yv);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    const bool stalled = !(fnew < f) && s.lpNorm<Eigen::Infinity>() == 0.0;
    x = xn;
    g = gn;
    f = fnew;
    if (stalled) {
      res.message = "no progress";
      break;
    }
  }
  if (!res.converged && res.message.empty() && grad_norm() < opts.grad_tol) res.converged = true;
  if (res.message.empty()) res.message = res.converged ? "gradient tolerance reached" : "iteration limit reached";
  res.minimizer = x;
  res.minimum = f;
  return res;
}

/// Which parameter groups the optimizer may move, plus solver settings.
/// Bounds, when given, cover the model's full params() vector.
struct OptimizeOptions {
  bool noise = true;
  bool mean = true;
  bool kern = true;
  bool lik = true;
  int max_iterations = 200;
  double grad_tol = 1e-8;
  std::optional<VectorXd> lower;
  std::optional<VectorXd> upper;
};

namespace detail {

template <class Model>
std::vector<Eigen::Index> free_indices(const Model& gp, const OptimizeOptions& o) {
  const auto g = gp.groups();
  std::vector<Eigen::Index> idx;
  Eigen::Index off = 0;
  auto add = [&](bool on, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i)
      if (on) idx.push_back(off + i);
    off += count;
  };
  add(o.noise, g.noise);
  add(o.lik, g.lik);
  add(o.mean, g.mean);
  add(o.kern, g.kernel);
  return idx;
}

template <class Model>
OptimResult optimize_impl(Model& gp, const OptimizeOptions& o, bool with_prior) {
  const std::vector<Eigen::Index> idx = free_indices(gp, o);
  if (idx.empty()) throw ConfigError("optimize: no parameter group is free");
  const VectorXd start = gp.params();
  const auto k = static_cast<Eigen::Index>(idx.size());
  auto gather = [&](const VectorXd& full) {
    VectorXd s(k);
    for (Eigen::Index i = 0; i < k; ++i) s[i] = full[idx[static_cast<std::size_t>(i)]];
    return s;
  };
  auto scatter = [&](const VectorXd& sub) {
    VectorXd full = start;
    for (Eigen::Index i = 0; i < k; ++i) full[idx[static_cast<std::size_t>(i)]] = sub[i];
    return full;
  };

  ObjectiveFn fn = [&](const VectorXd& x, VectorXd& grad) {
    try {
      gp.set_params(scatter(x));
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
    VectorXd gfull = -gp.grad_log_marginal();
    double v = -gp.log_marginal();
    if (with_prior) {
      gfull -= gp.grad_log_prior();
      v -= gp.log_prior();
    }
    grad = gather(gfull);
    return v;
  };

  LbfgsOptions lo;
  lo.max_iterations = o.max_iterations;
  lo.grad_tol = o.grad_tol;
  if (o.lower) {
    if (o.lower->size() != start.size()) throw ConfigError("optimize: lower bound has the wrong length");
    lo.lower = gather(*o.lower);
  }
  if (o.upper) {
    if (o.upper->size() != start.size()) throw ConfigError("optimize: upper bound has the wrong length");
    lo.upper = gather(*o.upper);
  }
  OptimResult r = lbfgs_minimize(fn, gather(start), lo);
  r.minimizer = scatter(r.minimizer);
  gp.set_params(r.minimizer);
  return r;
}

}  // namespace detail

/// Type-II maximum likelihood: minimizes the negative log marginal
/// likelihood over the free groups and leaves the model at the minimizer.
template <class Model>
OptimResult optimize(Model& gp, const OptimizeOptions& opts = {}) {
  return detail::optimize_impl(gp, opts, false);
}

/// Maximum a posteriori: as optimize, with the attached log priors added.
template <class Model>
OptimResult map_optimize(Model& gp, const OptimizeOptions& opts = {}) {
  return detail::optimize_impl(gp, opts, true);
}

}  // namespace gpkit
