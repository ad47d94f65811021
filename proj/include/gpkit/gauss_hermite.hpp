#pragma once

#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "gpkit/core.hpp"

namespace gpkit {

/// Quadrature rule against the standard normal density:
///   E[g(Z)] ~= sum_i weights[i] * g(nodes[i]),  Z ~ N(0, 1).
/// Exact for polynomials of degree <= 2n - 1.
struct GaussHermiteRule {
  VectorXd nodes;
  VectorXd weights;
};

namespace detail {

// Orthonormal probabilists' Hermite polynomials h_0..h_n at x:
//   sqrt(k+1) h_{k+1} = x h_k - sqrt(k) h_{k-1}.
// Returns h_n, writes h_{n-1} and sum_{k<n} h_k^2.
inline double hermite_orthonormal(int n, double x, double& prev, double& sumsq) {
  double hkm1 = 0.0;
  double hk = 1.0;
  sumsq = 0.0;
  for (int k = 0; k < n; ++k) {
    sumsq += hk * hk;
    const double next = (x * hk - std::sqrt(static_cast<double>(k)) * hkm1) / std::sqrt(k + 1.0);
    hkm1 = hk;
    hk = next;
  }
  prev = hkm1;
  return hk;
}

inline GaussHermiteRule compute_gauss_hermite(int n) {
  // Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix.
  MatrixXd J = MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(J, Eigen::EigenvaluesOnly);
  GaussHermiteRule rule{es.eigenvalues(), VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[i];
    double prev = 0.0, sumsq = 0.0;
    // Newton polish on h_n; h_n' = sqrt(n) h_{n-1}.
    for (int it = 0; it < 3; ++it) {
      const double hn = hermite_orthonormal(n, x, prev, sumsq);
      x -= hn / (std::sqrt(static_cast<double>(n)) * prev);
    }
    hermite_orthonormal(n, x, prev, sumsq);
    rule.nodes[i] = x;
    // Christoffel numbers give the weights directly and keep the tiny tail
    // weights accurate to full relative precision.
    rule.weights[i] = 1.0 / sumsq;
  }
  return rule;
}

}  // namespace detail

/// Rule of the given order, computed once and cached. Thread-safe.
inline const GaussHermiteRule& gauss_hermite(int order) {
  if (order < 1) throw ConfigError("gauss_hermite: order must be >= 1");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(detail::compute_gauss_hermite(order));
  return *slot;
}

}  // namespace gpkit
