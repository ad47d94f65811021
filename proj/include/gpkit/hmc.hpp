#pragma once

// Hamiltonian Monte Carlo with an identity mass matrix.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gpkit/core.hpp"
#include "gpkit/gp_exact.hpp"
#include "gpkit/gp_mc.hpp"
#include "gpkit/random.hpp"

namespace gpkit {

struct HMCConfig {
  double epsilon = 0.01;
  int Lmin = 5;
  int Lmax = 15;
  int n_iter = 1000;
  int burn = 0;
  int thin = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("mcmc: epsilon must be > 0");
    if (Lmin < 1 || Lmax < Lmin) throw ConfigError("mcmc: need 1 <= Lmin <= Lmax");
    if (n_iter < 1) throw ConfigError("mcmc: n_iter must be >= 1");
    if (thin < 1) throw ConfigError("mcmc: thin must be >= 1");
    if (burn < 0 || burn >= n_iter) throw ConfigError("mcmc: need 0 <= burn < n_iter");
  }

  /// Number of retained samples: ceil((n_iter - burn) / thin).
  int kept() const { return (n_iter - burn + thin - 1) / thin; }
};

/// Which parameter groups are sampled; unsampled groups stay fixed.
struct SampleGroups {
  bool noise = true;
  bool mean = true;
  bool kernel = true;
  bool lik = true;
  bool latent = true;  ///< whitened v (GPMC only)
};

/// Chain output: one column per kept sample, rows follow the model's
/// params() order (frozen rows are constant).
struct McmcChain {
  MatrixXd samples;
  std::vector<std::string> names;
  double acceptance_rate = 0.0;
};

/// Log density and gradient at a point. Returning -inf (or any non-finite
/// value) marks the point as outside the support.
using LogDensityFn = std::function<double(const VectorXd& x, VectorXd& grad)>;

/// Samples `fn` starting at x0. Returns a dim x kept matrix.
inline MatrixXd hmc_sample(const LogDensityFn& fn, const VectorXd& x0, const HMCConfig& cfg,
                           double* acceptance_rate = nullptr) {
  cfg.validate();
  const Eigen::Index d = x0.size();
  CounterRng rng(cfg.seed);
  std::uniform_int_distribution<int> steps(cfg.Lmin, cfg.Lmax);

  VectorXd x = x0;
  VectorXd g(d);
  double lp = fn(x, g);
  if (!std::isfinite(lp) || !g.allFinite())
    throw InputError("mcmc: log target is not finite at the initial state");

  MatrixXd out(d, cfg.kept());
  Eigen::Index kept = 0;
  int accepted = 0;
  VectorXd xn(d), gn(d), p(d);
  for (int it = 1; it <= cfg.n_iter; ++it) {
    p = rng.normal_vector(d);
    const double h0 = -lp + 0.5 * p.squaredNorm();
    xn = x;
    gn = g;
    double lpn = lp;
    const int L = steps(rng);
    bool ok = true;
    p.noalias() += 0.5 * cfg.epsilon * gn;
    for (int l = 0; l < L && ok; ++l) {
      xn.noalias() += cfg.epsilon * p;
      lpn = fn(xn, gn);
      ok = std::isfinite(lpn) && gn.allFinite();
      if (ok) p.noalias() += (l + 1 < L ? cfg.epsilon : 0.5 * cfg.epsilon) * gn;
    }
    if (ok) {
      const double h1 = -lpn + 0.5 * p.squaredNorm();
      if (std::isfinite(h1) && std::log(rng.uniform()) < h0 - h1) {
        x = xn;
        g = gn;
        lp = lpn;
        ++accepted;
      }
    }
    if (it > cfg.burn && (it - cfg.burn - 1) % cfg.thin == 0) out.col(kept++) = x;
  }
  if (acceptance_rate) *acceptance_rate = static_cast<double>(accepted) / cfg.n_iter;
  return out;
}

namespace detail {

// Embeds a sub-vector of free coordinates into a full parameter vector.
struct FreeIndex {
  std::vector<Eigen::Index> idx;

  VectorXd gather(const VectorXd& full) const {
    VectorXd s(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) s[static_cast<Eigen::Index>(i)] = full[idx[i]];
    return s;
  }
  void scatter(const VectorXd& sub, VectorXd& full) const {
    for (std::size_t i = 0; i < idx.size(); ++i) full[idx[i]] = sub[static_cast<Eigen::Index>(i)];
  }
  void add_range(Eigen::Index start, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) idx.push_back(start + i);
  }
};

template <class Model, class Eval>
McmcChain run_chain(Model& gp, const FreeIndex& free, const HMCConfig& cfg, Eval eval) {
  if (free.idx.empty()) throw ConfigError("mcmc: no parameter group selected for sampling");
  const VectorXd start = gp.params();
  VectorXd full = start;
  LogDensityFn fn = [&](const VectorXd& x, VectorXd& grad) {
    free.scatter(x, full);
    try {
      gp.set_params(full);
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
    VectorXd gfull;
    const double lp = eval(gp, gfull);
    grad = free.gather(gfull);
    return lp;
  };
  McmcChain chain;
  const MatrixXd sub = hmc_sample(fn, free.gather(start), cfg, &chain.acceptance_rate);
  chain.samples.resize(start.size(), sub.cols());
  for (Eigen::Index s = 0; s < sub.cols(); ++s) {
    full = start;
    free.scatter(sub.col(s), full);
    chain.samples.col(s) = full;
  }
  chain.names = gp.param_names();
  gp.set_params(start);
  return chain;
}

}  // namespace detail

/// Samples the hyperparameters of an exact GP under log marginal + log
/// prior. The model is restored to its starting parameters afterwards.
inline McmcChain mcmc(GPExact& gp, const HMCConfig& cfg = {}, const SampleGroups& groups = {}) {
  const auto g = gp.groups();
  detail::FreeIndex free;
  if (groups.noise) free.add_range(0, 1);
  if (groups.mean) free.add_range(1, g.mean);
  if (groups.kernel) free.add_range(1 + g.mean, g.kernel);
  return detail::run_chain(gp, free, cfg, [](GPExact& m, VectorXd& grad) {
    grad = m.grad_log_marginal() + m.grad_log_prior();
    return m.log_marginal() + m.log_prior();
  });
}

/// Samples (v, theta) of a GPMC jointly. The model is restored to its
/// starting state afterwards.
inline McmcChain mcmc(GPMC& gp, const HMCConfig& cfg = {}, const SampleGroups& groups = {}) {
  const auto g = gp.groups();
  const Eigen::Index n = gp.num_obs();
  detail::FreeIndex free;
  if (groups.latent) free.add_range(0, n);
  if (groups.lik) free.add_range(n, g.lik);
  if (groups.mean) free.add_range(n + g.lik, g.mean);
  if (groups.kernel) free.add_range(n + g.lik + g.mean, g.kernel);
  return detail::run_chain(gp, free, cfg, [](GPMC& m, VectorXd& grad) {
    grad = m.grad_log_posterior();
    return m.log_posterior();
  });
}

}  // namespace gpkit
