#pragma once

#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "gpkit/core.hpp"

namespace gpkit {

/// Improper flat prior on the real line; contributes nothing.
struct FlatPrior {};

struct NormalPrior {
  double mean = 0.0;
  double sd = 1.0;
};

/// Uniform on [lower, upper]; -inf outside the support.
struct UniformPrior {
  double lower = 0.0;
  double upper = 1.0;
};

using Prior = std::variant<FlatPrior, NormalPrior, UniformPrior>;

inline double log_density(const Prior& p, double x) {
  struct V {
    double x;
    double operator()(const FlatPrior&) const { return 0.0; }
    double operator()(const NormalPrior& n) const {
      const double z = (x - n.mean) / n.sd;
      return -0.5 * z * z - std::log(n.sd) - 0.5 * kLog2Pi;
    }
    double operator()(const UniformPrior& u) const {
      if (x < u.lower || x > u.upper) return -std::numeric_limits<double>::infinity();
      return -std::log(u.upper - u.lower);
    }
  };
  return std::visit(V{x}, p);
}

inline double dlog_density(const Prior& p, double x) {
  if (const auto* n = std::get_if<NormalPrior>(&p)) return -(x - n->mean) / (n->sd * n->sd);
  return 0.0;
}

inline std::string to_string(const Prior& p) {
  struct V {
    std::string operator()(const FlatPrior&) const { return "Flat()"; }
    std::string operator()(const NormalPrior& n) const {
      return "Normal(" + std::to_string(n.mean) + "," + std::to_string(n.sd) + ")";
    }
    std::string operator()(const UniformPrior& u) const {
      return "Uniform(" + std::to_string(u.lower) + "," + std::to_string(u.upper) + ")";
    }
  };
  return std::visit(V{}, p);
}

/// Per-parameter priors aligned with a component's flattened parameter
/// vector. An empty set means flat priors everywhere.
class PriorSet {
 public:
  PriorSet() = default;
  PriorSet(std::vector<Prior> priors) : priors_(std::move(priors)) {}  // NOLINT

  bool empty() const { return priors_.empty(); }
  std::size_t size() const { return priors_.size(); }
  const Prior& operator[](std::size_t i) const { return priors_[i]; }

  /// Validates that the set is either empty or matches `n` parameters.
  void check_size(std::size_t n, const std::string& owner) const {
    if (!priors_.empty() && priors_.size() != n) {
      throw ConfigError(owner + ": expected " + std::to_string(n) + " priors, got " +
                        std::to_string(priors_.size()));
    }
  }

  double log_density(const VectorXd& theta) const {
    double s = 0.0;
    for (std::size_t i = 0; i < priors_.size(); ++i)
      s += gpkit::log_density(priors_[i], theta[static_cast<Eigen::Index>(i)]);
    return s;
  }

  VectorXd grad(const VectorXd& theta) const {
    VectorXd g = VectorXd::Zero(theta.size());
    for (std::size_t i = 0; i < priors_.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      g[k] = dlog_density(priors_[i], theta[k]);
    }
    return g;
  }

 private:
  std::vector<Prior> priors_;
};

}  // namespace gpkit
