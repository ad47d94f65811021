#pragma once

// The fit / predict / mcmc / sparse / bench workflows behind the gpkit
// executable. Each command validates its whole configuration before any
// numerical work, writes its results under RunConfig::out, and reports
// failures through the library's error categories (see run()).

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gpkit/cli/data.hpp"
#include "gpkit/cli/expr.hpp"
#include "gpkit/gpkit.hpp"

namespace gpkit::cli {

/// Heap allocations seen so far. The gpkit executable replaces the global
/// operator new to increment it; elsewhere it stays at zero.
inline std::atomic<std::uint64_t> allocation_count{0};

struct RunConfig {
  std::string command;  ///< fit | predict | mcmc | sparse | bench

  std::string data;
  std::vector<std::string> x_cols;  ///< names or 1-based indices; empty = all but y
  std::string y_col;                ///< empty = last column

  std::string kernel = "SE(0.0,0.0)";
  std::string mean = "MeanZero()";
  std::string lik;  ///< empty = Gaussian noise with log_noise
  double log_noise = -2.0;
  bool optimize = false;
  std::string params;  ///< key-value file written by fit, applied before predicting
  bool kernel_given = false;  ///< --kernel set explicitly; otherwise a params file's kernel is used
  bool mean_given = false;    ///< likewise for --mean

  std::string scheme;    ///< sor | dtc | fitc | fsa
  std::string inducing;  ///< CSV of inducing inputs, or a count m for data quantiles
  std::string blocks;    ///< FSA: "nearest" (default) or a block count k

  std::string grid;  ///< "lo:hi:n" (1-D inputs)
  std::string test;  ///< CSV of test inputs (same x columns as the data)

  std::uint64_t seed = 0;
  std::string out = ".";

  HMCConfig hmc{};

  std::vector<std::string> bench_kernels;  ///< empty = the standard benchmark list
  int bench_n = 3000;
  int bench_dims = 10;
  int bench_repeats = 10;
  bool bench_sparse = true;
  int bench_sparse_n = 5000;
  int bench_sparse_repeats = 3;
};

/// Kernels timed by `bench` unless the configuration names others.
inline const std::vector<std::string>& default_bench_kernels() {
  static const std::vector<std::string> k{
      "fix(SE(0.0,0.0), σ)",
      "SE(0.0,0.0)",
      "Matern(1/2,0.0,0.0)",
      "Masked(SE(0.0,0.0), [1])",
      "RQ(0.0,0.0,0.0)",
      "SE(0.0,0.0) + RQ(0.0,0.0,0.0)",
      "Masked(SE(0.0,0.0), [1]) + Masked(RQ(0.0,0.0,0.0), collect(2:10))",
      "(SE(0.0,0.0) + SE(0.5,0.5)) * RQ(0.0,0.0,0.0)",
      "SE(0.0,0.0) * RQ(0.0,0.0,0.0)",
  };
  return k;
}

// ---------------------------------------------------------------------------
// Shared helpers.

/// Sample quantile with linear interpolation between order statistics
/// (position (n - 1) p in the sorted sample).
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw InputError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// The sparse-fitting demonstration problem: x = 10 * Beta(7, 7),
/// y = |x - 5| cos(2x) + noise_sd * N(0, 1).
struct DemoData {
  MatrixXd X;
  VectorXd y;
};

inline double demo_truth(double x) { return std::abs(x - 5.0) * std::cos(2.0 * x); }

inline DemoData sparse_demo_data(Eigen::Index n, std::uint64_t seed, double noise_sd = 10.0) {
  CounterRng rng(seed);
  DemoData d{MatrixXd(1, n), VectorXd(n)};
  std::array<double, 13> u{};
  for (Eigen::Index i = 0; i < n; ++i) {
    // Beta(a, b) with integer a, b is the a-th smallest of a + b - 1 uniforms.
    for (double& v : u) v = rng.uniform();
    std::nth_element(u.begin(), u.begin() + 6, u.end());
    d.X(0, i) = 10.0 * u[6];
  }
  for (Eigen::Index i = 0; i < n; ++i) d.y[i] = demo_truth(d.X(0, i)) + noise_sd * rng.normal();
  return d;
}

/// Inducing inputs at the demonstration's fixed sample quantiles of x.
inline MatrixXd demo_inducing(const MatrixXd& X) {
  static constexpr std::array<double, 12> probs{0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.98};
  std::vector<double> x(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.cols(); ++i) x[static_cast<std::size_t>(i)] = X(0, i);
  MatrixXd Xu(1, static_cast<Eigen::Index>(probs.size()));
  for (std::size_t j = 0; j < probs.size(); ++j) Xu(0, static_cast<Eigen::Index>(j)) = quantile(x, probs[j]);
  return Xu;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

struct Timing {
  double min_ms = std::numeric_limits<double>::infinity();
  std::uint64_t allocs = 0;  ///< allocations during the fastest run
};

/// Runs `fn` `repeats` times and keeps the fastest run.
inline Timing time_min(int repeats, const std::function<void()>& fn) {
  Timing t;
  for (int r = 0; r < repeats; ++r) {
    const std::uint64_t a0 = allocation_count.load(std::memory_order_relaxed);
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double ms = elapsed_ms(t0);
    if (ms < t.min_ms) {
      t.min_ms = ms;
      t.allocs = allocation_count.load(std::memory_order_relaxed) - a0;
    }
  }
  return t;
}

namespace detail {

struct ModelSpec {
  Kernel kernel;
  MeanFunction mean;
  std::optional<Likelihood> lik;  ///< set only for non-Gaussian likelihoods
  double log_noise;
};

/// The kernel and mean come from the flags, or from the params file when
/// one is given and the flag was left at its default.
inline ModelSpec parse_model(const RunConfig& c) {
  std::string kernel = c.kernel, mean = c.mean;
  if (!c.params.empty() && !(c.kernel_given && c.mean_given)) {
    for (const auto& [k, v] : read_key_values(c.params)) {
      if (k == "kernel" && !c.kernel_given) kernel = v;
      if (k == "mean" && !c.mean_given) mean = v;
    }
  }
  ModelSpec m{parse_kernel(kernel), parse_mean(mean), std::nullopt, c.log_noise};
  if (!c.lik.empty()) {
    Likelihood l = parse_likelihood(c.lik);
    if (l.model().gaussian_noise_variance() > 0.0) {
      m.log_noise = l.params()[0];
    } else {
      m.lik = std::move(l);
    }
  }
  return m;
}

struct Grid {
  double lo, hi;
  Eigen::Index n;
};

inline Grid parse_grid(const std::string& text) {
  const auto parts = split_list(text, ':');
  Grid g{};
  double n = 0;
  if (parts.size() != 3 || !parse_cell(parts[0], g.lo) || !parse_cell(parts[1], g.hi) || !parse_cell(parts[2], n) ||
      n < 1 || n != std::floor(n) || !(g.lo <= g.hi))
    throw ConfigError("--grid expects lo:hi:n with lo <= hi and integer n >= 1, got '" + text + "'");
  g.n = static_cast<Eigen::Index>(n);
  return g;
}

inline bool is_count(const std::string& s, long& value) {
  if (!is_index(s)) return false;
  value = std::stol(s);
  return value >= 1;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

/// Everything that can be checked without reading data or computing.
inline void validate(const RunConfig& c) {
  static const std::vector<std::string> commands{"fit", "predict", "mcmc", "sparse", "bench"};
  require(std::find(commands.begin(), commands.end(), c.command) != commands.end(),
          "unknown command '" + c.command + "' (expected fit, predict, mcmc, sparse or bench)");
  require(!c.out.empty(), "--out must name a directory");
  if (c.command == "bench") {
    require(c.bench_n >= 1 && c.bench_dims >= 1 && c.bench_repeats >= 1, "bench sizes must be >= 1");
    require(c.bench_sparse_n >= 12 && c.bench_sparse_repeats >= 1, "bench sparse suite needs n >= 12");
    const auto& ks = c.bench_kernels.empty() ? default_bench_kernels() : c.bench_kernels;
    for (const auto& k : ks) parse_kernel(k);
    return;
  }
  require(!c.data.empty(), c.command + " requires --data");
  const ModelSpec m = parse_model(c);
  require(std::isfinite(m.log_noise), "--log-noise must be finite");
  require(c.grid.empty() || c.test.empty(), "give either --grid or --test, not both");
  if (!c.grid.empty()) parse_grid(c.grid);
  if (c.command == "fit" || c.command == "predict" || c.command == "sparse")
    require(!m.lik, c.command + " needs a Gaussian likelihood; use mcmc for " + c.lik);
  if (c.command == "mcmc") c.hmc.validate();
  if (c.command == "sparse") {
    require(!c.scheme.empty(), "sparse requires --scheme (sor, dtc, fitc or fsa)");
    const SparseScheme s = parse_scheme(c.scheme);
    require(!c.inducing.empty(), "sparse requires --inducing (a CSV file or a point count)");
    long k = 0;
    require(c.blocks.empty() || c.blocks == "nearest" || is_count(c.blocks, k),
            "--blocks expects 'nearest' or a positive block count, got '" + c.blocks + "'");
    require(c.blocks.empty() || s == SparseScheme::FSA, "--blocks is only used by the fsa scheme");
  } else {
    require(c.scheme.empty() && c.inducing.empty() && c.blocks.empty(),
            "--scheme, --inducing and --blocks belong to the sparse command");
  }
}

inline Dataset load_training(const RunConfig& c) {
  std::string y = c.y_col;
  if (y.empty()) {
    // Default response: the last column.
    const Dataset all = load_csv(c.data, {}, "");
    y = std::to_string(all.X.rows());
    if (all.X.rows() < 2 && c.x_cols.empty()) throw InputError("data needs at least one input and one response column");
  }
  return load_csv(c.data, c.x_cols, y);
}

inline MatrixXd test_inputs(const RunConfig& c, const Dataset& d) {
  if (!c.grid.empty()) {
    if (d.X.rows() != 1) throw ConfigError("--grid needs 1-D inputs; use --test for " + std::to_string(d.X.rows()) + "-D data");
    const Grid g = parse_grid(c.grid);
    MatrixXd Xs(1, g.n);
    for (Eigen::Index i = 0; i < g.n; ++i)
      Xs(0, i) = g.n == 1 ? g.lo : g.lo + (g.hi - g.lo) * static_cast<double>(i) / static_cast<double>(g.n - 1);
    return Xs;
  }
  if (!c.test.empty()) {
    const Dataset t = load_csv(c.test, c.x_cols.empty() ? d.x_names : c.x_cols, "");
    if (t.X.rows() != d.X.rows())
      throw InputError("test inputs have " + std::to_string(t.X.rows()) + " columns, data has " +
                       std::to_string(d.X.rows()));
    return t.X;
  }
  return d.X;
}

inline std::filesystem::path out_path(const RunConfig& c, const std::string& file) {
  std::filesystem::create_directories(c.out);
  return std::filesystem::path(c.out) / file;
}

inline void write_predictions(const RunConfig& c, const Dataset& d, const MatrixXd& Xs, const VectorXd& mean,
                              const VectorXd& var, std::ostream& log) {
  constexpr double z = 1.95996;  // two-sided 95% normal quantile
  MatrixXd rows(Xs.cols(), Xs.rows() + 4);
  rows.leftCols(Xs.rows()) = Xs.transpose();
  rows.col(Xs.rows()) = mean;
  rows.col(Xs.rows() + 1) = var;
  const VectorXd sd = var.cwiseMax(0.0).cwiseSqrt();
  rows.col(Xs.rows() + 2) = mean - z * sd;
  rows.col(Xs.rows() + 3) = mean + z * sd;
  std::vector<std::string> header = d.x_names;
  for (const char* h : {"mean", "variance", "lower95", "upper95"}) header.emplace_back(h);
  const auto path = out_path(c, "predictions.csv");
  write_csv(path.string(), header, rows);
  log << "wrote " << path.string() << " (" << Xs.cols() << " rows)\n";
}

template <class Model>
KeyValues params_record(const Model& gp) {
  KeyValues kv{{"kernel", gp.kernel().render()}, {"mean", gp.mean().render()}};
  const auto names = gp.param_names();
  const VectorXd p = gp.params();
  for (std::size_t i = 0; i < names.size(); ++i) kv.emplace_back(names[i], format_17(p[static_cast<Eigen::Index>(i)]));
  kv.emplace_back("mll", format_17(gp.log_marginal()));
  return kv;
}

/// Applies a file written by fit or sparse. Parameter names must match the
/// model's, in order; the kernel, mean and mll entries are informational here.
template <class Model>
void apply_params(Model& gp, const std::string& path) {
  const KeyValues kv = read_key_values(path);
  const auto names = gp.param_names();
  VectorXd p(static_cast<Eigen::Index>(names.size()));
  std::size_t i = 0;
  for (const auto& [k, v] : kv) {
    if (k == "mll" || k == "kernel" || k == "mean") continue;
    if (i >= names.size() || k != names[i])
      throw ConfigError(path + ": parameter '" + k + "' does not match the model (expected '" +
                        (i < names.size() ? names[i] : std::string("end of list")) + "')");
    double x;
    if (!parse_cell(v, x)) throw ConfigError(path + ": value for '" + k + "' is not a number");
    p[static_cast<Eigen::Index>(i++)] = x;
  }
  if (i != names.size())
    throw ConfigError(path + ": has " + std::to_string(i) + " parameters, model has " + std::to_string(names.size()));
  gp.set_params(p);
}

template <class Model>
void maybe_optimize(Model& gp, const RunConfig& c, std::ostream& log) {
  if (!c.optimize) return;
  const double before = gp.log_marginal();
  const OptimResult r = optimize(gp);
  log << "optimize: mll " << format_double(before) << " -> " << format_double(gp.log_marginal()) << " in "
      << r.iterations << " iterations" << (r.converged ? "" : " (" + r.message + ")") << "\n";
}

inline GPExact exact_model(const RunConfig& c, const Dataset& d) {
  ModelSpec m = parse_model(c);
  return GPExact(d.X, d.y, std::move(m.mean), std::move(m.kernel), m.log_noise);
}

inline MatrixXd choose_inducing(const RunConfig& c, const Dataset& d) {
  long m = 0;
  if (!std::filesystem::exists(c.inducing) && is_count(c.inducing, m)) {
    if (m > d.X.cols()) throw ConfigError("--inducing " + c.inducing + " exceeds the number of observations");
    // Points at evenly spaced ranks along the first input coordinate, so
    // 1-D data gets its sample quantiles.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d.X.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d.X(0, a) < d.X(0, b); });
    MatrixXd Xu(d.X.rows(), m);
    for (long j = 0; j < m; ++j) {
      const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
      Xu.col(j) = d.X.col(order[static_cast<std::size_t>(p * static_cast<double>(order.size()))]);
    }
    return Xu;
  }
  const Dataset u = load_csv(c.inducing, {}, "");
  if (u.X.rows() != d.X.rows())
    throw InputError("inducing points have " + std::to_string(u.X.rows()) + " columns, data has " +
                     std::to_string(d.X.rows()));
  return u.X;
}

inline BlockIndices choose_blocks(const RunConfig& c, const Dataset& d, const MatrixXd& Xu) {
  long k = 0;
  if (c.blocks.empty() || c.blocks == "nearest") return nearest_inducing_blocks(d.X, Xu);
  is_count(c.blocks, k);
  if (k > d.X.cols()) throw ConfigError("--blocks " + c.blocks + " exceeds the number of observations");
  // Contiguous groups of equal size along the first input coordinate.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d.X.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return d.X(0, a) < d.X(0, b); });
  BlockIndices blocks(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < order.size(); ++i) blocks[i * static_cast<std::size_t>(k) / order.size()].push_back(order[i]);
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  return blocks;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands.

inline void cmd_fit(const RunConfig& c, std::ostream& log) {
  const Dataset d = detail::load_training(c);
  GPExact gp = detail::exact_model(c, d);
  detail::maybe_optimize(gp, c, log);
  const auto params = detail::out_path(c, "params.txt");
  write_key_values(params.string(), detail::params_record(gp));
  const auto summary = detail::out_path(c, "summary.txt");
  std::ofstream(summary) << gp.summary();
  log << gp.summary() << "wrote " << params.string() << " and " << summary.string() << "\n";
}

inline void cmd_predict(const RunConfig& c, std::ostream& log) {
  const Dataset d = detail::load_training(c);
  GPExact gp = detail::exact_model(c, d);
  if (!c.params.empty()) detail::apply_params(gp, c.params);
  detail::maybe_optimize(gp, c, log);
  const MatrixXd Xs = detail::test_inputs(c, d);
  const Prediction p = gp.predict_y(Xs);
  detail::write_predictions(c, d, Xs, p.mean, p.variance, log);
}

inline void cmd_mcmc(const RunConfig& c, std::ostream& log) {
  const Dataset d = detail::load_training(c);
  detail::ModelSpec m = detail::parse_model(c);
  HMCConfig h = c.hmc;
  h.seed = c.seed;
  McmcChain chain;
  VectorXd mean, var;
  const bool predict = !c.grid.empty() || !c.test.empty();
  const MatrixXd Xs = predict ? detail::test_inputs(c, d) : MatrixXd();
  // Predictive moments of the sample mixture: E[mean] and E[var] + Var[mean].
  auto mixture = [&](const MatrixXd& means, const MatrixXd& vars) {
    mean = means.colwise().mean().transpose();
    var = vars.colwise().mean().transpose() +
          (means.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() / static_cast<double>(means.rows());
  };
  if (m.lik) {
    GPMC gp(d.X, d.y, std::move(m.mean), std::move(m.kernel), std::move(*m.lik));
    chain = mcmc(gp, h);
    if (predict) {
      const McPrediction p = mc_predict_y(gp, chain.samples, Xs);
      mixture(p.mean, p.variance);
    }
  } else {
    GPExact gp(d.X, d.y, std::move(m.mean), std::move(m.kernel), m.log_noise);
    if (!c.params.empty()) detail::apply_params(gp, c.params);
    detail::maybe_optimize(gp, c, log);
    chain = mcmc(gp, h);
    if (predict) {
      MatrixXd means(chain.samples.cols(), Xs.cols()), vars(chain.samples.cols(), Xs.cols());
      GPExact work = gp;
      for (Eigen::Index s = 0; s < chain.samples.cols(); ++s) {
        work.set_params(chain.samples.col(s));
        const Prediction p = work.predict_y(Xs);
        means.row(s) = p.mean.transpose();
        vars.row(s) = p.variance.transpose();
      }
      mixture(means, vars);
    }
  }
  const auto path = detail::out_path(c, "samples.csv");
  write_csv(path.string(), chain.names, chain.samples.transpose());
  log << "wrote " << path.string() << " (" << chain.samples.cols() << " samples, acceptance rate "
      << format_double(chain.acceptance_rate) << ")\n";
  if (predict) detail::write_predictions(c, d, Xs, mean, var, log);
}

inline void cmd_sparse(const RunConfig& c, std::ostream& log) {
  const Dataset d = detail::load_training(c);
  detail::ModelSpec m = detail::parse_model(c);
  const SparseScheme scheme = parse_scheme(c.scheme);
  const MatrixXd Xu = detail::choose_inducing(c, d);
  BlockIndices blocks = scheme == SparseScheme::FSA ? detail::choose_blocks(c, d, Xu) : BlockIndices{};
  SparseGP gp(scheme, d.X, Xu, d.y, std::move(m.mean), std::move(m.kernel), m.log_noise, std::move(blocks));
  if (!c.params.empty()) detail::apply_params(gp, c.params);
  detail::maybe_optimize(gp, c, log);
  log << to_string(scheme) << ": " << d.X.cols() << " observations, " << Xu.cols()
      << " inducing points, mll = " << format_double(gp.log_marginal()) << "\n";
  write_key_values(detail::out_path(c, "params.txt").string(), detail::params_record(gp));
  const MatrixXd Xs = detail::test_inputs(c, d);
  const Prediction p = gp.predict_y(Xs);
  detail::write_predictions(c, d, Xs, p.mean, p.variance, log);
}

inline void cmd_bench(const RunConfig& c, std::ostream& log) {
  const auto& kernels = c.bench_kernels.empty() ? default_bench_kernels() : c.bench_kernels;
  CounterRng rng(c.seed);
  MatrixXd X(c.bench_dims, c.bench_n);
  VectorXd y(c.bench_n);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.normal();

  std::ofstream out(detail::out_path(c, "bench.csv"));
  out << "kernel,min_ms,allocs\n";
  for (const auto& text : kernels) {
    GPExact gp(X, y, mean::zero(), parse_kernel(text), c.log_noise);
    const VectorXd p = gp.params();
    double sink = 0.0;
    const Timing t = time_min(c.bench_repeats, [&] {
      gp.set_params(p);  // refactorizes
      sink += gp.log_marginal() + gp.grad_log_marginal().sum();
    });
    if (!std::isfinite(sink)) throw NumericalError("bench: non-finite objective for " + text);
    out << '"' << text << "\"," << format_17(t.min_ms) << ',' << t.allocs << '\n';
    log << text << ": " << format_double(t.min_ms) << " ms\n";
  }
  if (!c.bench_sparse) return;

  const DemoData demo = sparse_demo_data(c.bench_sparse_n, c.seed);
  const MatrixXd Xu = demo_inducing(demo.X);
  const Kernel k = kern::se_iso(0.0, 0.0);
  const MeanFunction mu = mean::constant(demo.y.mean());
  const double ln = std::log(10.0);
  std::ofstream sp(detail::out_path(c, "bench_sparse.csv"));
  sp << "method,min_ms,allocs\n";
  auto row = [&](const std::string& name, const std::function<void()>& fit) {
    const Timing t = time_min(c.bench_sparse_repeats, fit);
    sp << name << ',' << format_17(t.min_ms) << ',' << t.allocs << '\n';
    log << name << ": " << format_double(t.min_ms) << " ms\n";
  };
  row("Exact", [&] { GPExact gp(demo.X, demo.y, mu, k, ln); });
  for (SparseScheme s : {SparseScheme::SoR, SparseScheme::DTC, SparseScheme::FITC})
    row(to_string(s), [&] { SparseGP gp(s, demo.X, Xu, demo.y, mu, k, ln); });
  const BlockIndices blocks = nearest_inducing_blocks(demo.X, Xu);
  row("FSA", [&] { SparseGP gp(SparseScheme::FSA, demo.X, Xu, demo.y, mu, k, ln, blocks); });
}

/// Exit codes by error category.
enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumerical = 4 };

/// Validates and runs one command. Failures print a single line
/// "<category> error: <message>" to `err` and return the category's code.
inline int run(const RunConfig& c, std::ostream& log, std::ostream& err) {
  auto fail = [&](const char* category, const std::exception& e, int code) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << category << " error: " << msg << "\n";
    return code;
  };
  try {
    detail::validate(c);
    if (c.command == "fit") cmd_fit(c, log);
    if (c.command == "predict") cmd_predict(c, log);
    if (c.command == "mcmc") cmd_mcmc(c, log);
    if (c.command == "sparse") cmd_sparse(c, log);
    if (c.command == "bench") cmd_bench(c, log);
    return kOk;
  } catch (const ConfigError& e) {
    return fail("config", e, kConfig);
  } catch (const InputError& e) {
    return fail("data", e, kData);
  } catch (const NumericalError& e) {
    std::string msg = e.what();
    if (e.attempted_jitter() > 0.0 && msg.find("jitter") == std::string::npos)
      msg += " (attempted jitter " + format_double(e.attempted_jitter()) + ")";
    return fail("numerical", std::runtime_error(msg), kNumerical);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("data", e, kData);
  } catch (const std::exception& e) {
    return fail("internal", e, kInternal);
  }
}

}  // namespace gpkit::cli
