#pragma once

// Argument handling for the gpkit executable.
//
// A --config file holds flat "key = value" lines whose keys are the long
// flag names (x-cols or x_cols). Its entries are inserted ahead of the
// command-line arguments and every option keeps its last value, so flags
// given on the command line win.

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpkit/cli/commands.hpp"

namespace gpkit::cli {

namespace detail {

/// Finds --config PATH / --config=PATH and returns the file's entries as
/// "--key=value" arguments.
inline std::vector<std::string> config_arguments(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return {};
  std::vector<std::string> out;
  for (auto [key, value] : read_key_values(path)) {
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") throw ConfigError(path + ": a config file cannot include another");
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

}  // namespace detail

/// Parses arguments (without the program name) and runs the command.
/// Returns the process exit code.
inline int main_entry(const std::vector<std::string>& args, std::ostream& log, std::ostream& err) {
  RunConfig c;
  std::string x_cols, bench_kernels, config;
  bool no_sparse_suite = false;

  CLI::App app{"Gaussian-process fitting, prediction, sampling and benchmarking", "gpkit"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.add_subcommand("fit", "fit an exact GP and write its parameters and summary");
  app.add_subcommand("predict", "write predictive mean, variance and 95% band");
  app.add_subcommand("mcmc", "sample parameters with HMC and write the chain");
  app.add_subcommand("sparse", "fit a sparse approximation and write predictions");
  app.add_subcommand("bench", "time log-likelihood and gradient evaluations");

  app.add_option("--config", config, "flat key = value file; flags on the command line win");
  app.add_option("--data", c.data, "training CSV");
  app.add_option("--x-cols", x_cols, "input columns: names or 1-based indices, comma separated (default: all but y)");
  app.add_option("--y-col", c.y_col, "response column name or 1-based index (default: last)");
  app.add_option("--kernel", c.kernel, "kernel expression, e.g. \"SE(0.0,0.0) + Periodic(0.5,0.0,1.0)\"")
      ->capture_default_str();
  app.add_option("--mean", c.mean, "mean expression, e.g. MeanConst(0.0)")->capture_default_str();
  app.add_option("--lik", c.lik, "likelihood, e.g. Bernoulli() or Poisson() (default: Gaussian noise)");
  app.add_option("--log-noise", c.log_noise, "log standard deviation of the Gaussian noise")->capture_default_str();
  app.add_flag("--optimize", c.optimize, "maximize the marginal likelihood before use");
  app.add_option("--params", c.params, "parameter file written by fit");
  app.add_option("--scheme", c.scheme, "sparse scheme: sor, dtc, fitc or fsa");
  app.add_option("--inducing", c.inducing, "CSV of inducing inputs, or a point count");
  app.add_option("--blocks", c.blocks, "FSA blocks: nearest (default) or a block count");
  app.add_option("--grid", c.grid, "prediction grid lo:hi:n for 1-D inputs");
  app.add_option("--test", c.test, "CSV of test inputs");
  app.add_option("--seed", c.seed, "random seed")->capture_default_str();
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--iterations", c.hmc.n_iter, "HMC iterations")->capture_default_str();
  app.add_option("--burn", c.hmc.burn, "HMC burn-in iterations")->capture_default_str();
  app.add_option("--thin", c.hmc.thin, "HMC thinning interval")->capture_default_str();
  app.add_option("--epsilon", c.hmc.epsilon, "HMC leapfrog step size")->capture_default_str();
  app.add_option("--lmin", c.hmc.Lmin, "HMC minimum leapfrog steps")->capture_default_str();
  app.add_option("--lmax", c.hmc.Lmax, "HMC maximum leapfrog steps")->capture_default_str();
  app.add_option("--bench-kernels", bench_kernels, "kernel expressions to time, separated by ';'");
  app.add_option("--bench-n", c.bench_n, "bench observations")->capture_default_str();
  app.add_option("--bench-dims", c.bench_dims, "bench covariates")->capture_default_str();
  app.add_option("--bench-repeats", c.bench_repeats, "bench runs per kernel (minimum reported)")
      ->capture_default_str();
  app.add_option("--bench-sparse-n", c.bench_sparse_n, "observations in the sparse timing suite")
      ->capture_default_str();
  app.add_option("--bench-sparse-repeats", c.bench_sparse_repeats, "runs per sparse suite row")
      ->capture_default_str();
  app.add_flag("--no-sparse-suite", no_sparse_suite, "skip the sparse timing suite");

  try {
    std::vector<std::string> all = detail::config_arguments(args);
    all.insert(all.end(), args.begin(), args.end());
    std::reverse(all.begin(), all.end());  // CLI11 consumes from the back
    app.parse(all);
  } catch (const CLI::CallForHelp&) {
    log << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    log << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  }

  c.command = app.get_subcommands().front()->get_name();
  c.kernel_given = app.count("--kernel") > 0;
  c.mean_given = app.count("--mean") > 0;
  c.x_cols = split_list(x_cols);
  for (auto& k : split_list(bench_kernels, ';')) c.bench_kernels.push_back(k);
  c.bench_sparse = !no_sparse_suite;
  return run(c, log, err);
}

}  // namespace gpkit::cli
