#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gpkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A single input location. Columns of a column-major d x n matrix are
/// contiguous, so a point is a view into that storage.
using Point = std::span<const double>;

inline Point column(const MatrixXd& X, Eigen::Index j) {
  return Point(X.col(j).data(), static_cast<std::size_t>(X.rows()));
}

inline Point as_point(const VectorXd& x) {
  return Point(x.data(), static_cast<std::size_t>(x.size()));
}

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

// Error categories. The CLI maps these onto exit codes.

/// Malformed or inconsistent user-supplied data (shapes, response values).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent model construction (parameter counts, masks, blocks).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization failures and other numerical breakdowns.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double attempted_jitter = 0.0)
      : std::runtime_error(what), jitter_(attempted_jitter) {}
  double attempted_jitter() const { return jitter_; }

 private:
  double jitter_;
};

}  // namespace gpkit
