#pragma once

// Shared helpers for the test suites: finite differences, dense-algebra
// oracles and a gallery of kernels and means covering every node type.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gpkit/gpkit.hpp"

namespace gpkit::testing {

inline MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  MatrixXd M(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) M(i, j) = lo + (hi - lo) * rng.uniform();
  return M;
}

inline VectorXd random_vector(Eigen::Index n, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  return random_matrix(n, 1, rng, lo, hi).col(0);
}

/// Central finite differences of a scalar function.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x, double h = 1e-5) {
  VectorXd g(x.size());
  VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Largest componentwise relative error |a - b| / max(|b_i|, 1e-3 |b|_inf, floor).
/// The scale-relative floor keeps components that are tiny next to their
/// siblings from being judged on finite-difference roundoff alone.
inline double max_rel_error(const VectorXd& a, const VectorXd& b, double floor = 1e-6) {
  const double scale = b.size() ? 1e-3 * b.lpNorm<Eigen::Infinity>() : 0.0;
  double e = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    e = std::max(e, std::abs(a[i] - b[i]) / std::max({std::abs(b[i]), scale, floor}));
  return e;
}

struct NamedKernel {
  std::string label;
  Kernel kernel;
};

/// One instance of every kernel node for d-dimensional inputs, with
/// log-parameters drawn from [lo, hi].
inline std::vector<NamedKernel> kernel_gallery(std::size_t d, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  auto u = [&] { return lo + (hi - lo) * rng.uniform(); };
  auto uv = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = u();
    return v;
  };
  std::vector<NamedKernel> g;
  g.push_back({"SEIso", kern::se_iso(u(), u())});
  g.push_back({"SEArd", kern::se_ard(uv(d), u())});
  g.push_back({"Mat12Iso", kern::matern_iso(MaternOrder::Half, u(), u())});
  g.push_back({"Mat32Iso", kern::matern_iso(MaternOrder::ThreeHalves, u(), u())});
  g.push_back({"Mat52Iso", kern::matern_iso(MaternOrder::FiveHalves, u(), u())});
  g.push_back({"Mat12Ard", kern::matern_ard(MaternOrder::Half, uv(d), u())});
  g.push_back({"Mat32Ard", kern::matern_ard(MaternOrder::ThreeHalves, uv(d), u())});
  g.push_back({"Mat52Ard", kern::matern_ard(MaternOrder::FiveHalves, uv(d), u())});
  g.push_back({"RQIso", kern::rq_iso(u(), u(), u())});
  g.push_back({"RQArd", kern::rq_ard(uv(d), u(), u())});
  g.push_back({"Periodic", kern::periodic(u(), u(), u())});
  g.push_back({"Poly2", kern::poly(u(), u(), 2)});
  g.push_back({"Poly3", kern::poly(u(), u(), 3)});
  g.push_back({"LinIso", kern::lin_iso(u())});
  g.push_back({"LinArd", kern::lin_ard(uv(d))});
  g.push_back({"Const", kern::constant(u())});
  g.push_back({"Noise", kern::noise(u())});
  g.push_back({"Fixed", kern::fix(kern::se_iso(u(), u()), {true, false})});
  std::vector<std::size_t> dims{0};
  if (d > 1) dims.push_back(d - 1);
  g.push_back({"Masked", kern::masked(kern::rq_iso(u(), u(), u()), dims)});
  g.push_back({"Sum", kern::se_iso(u(), u()) + kern::rq_iso(u(), u(), u())});
  g.push_back({"Product", kern::se_iso(u(), u()) * kern::periodic(u(), u(), u())});
  g.push_back({"Nested", (kern::se_iso(u(), u()) + kern::se_ard(uv(d), u())) * kern::matern_iso(MaternOrder::ThreeHalves, u(), u())});
  return g;
}

struct NamedMean {
  std::string label;
  MeanFunction mean;
};

inline std::vector<NamedMean> mean_gallery(std::size_t d, CounterRng& rng) {
  auto u = [&] { return -1.0 + 2.0 * rng.uniform(); };
  auto uv = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = u();
    return v;
  };
  MatrixXd th(static_cast<Eigen::Index>(d), 2);
  for (Eigen::Index i = 0; i < th.size(); ++i) th.data()[i] = 0.5 * u();
  std::vector<NamedMean> g;
  g.push_back({"Zero", mean::zero()});
  g.push_back({"Const", mean::constant(u())});
  g.push_back({"Lin", mean::linear(uv(d))});
  g.push_back({"Poly", mean::poly(th)});
  g.push_back({"Sum", mean::constant(u()) + mean::linear(uv(d))});
  g.push_back({"Product", mean::constant(u()) * mean::linear(uv(d))});
  return g;
}

/// Dense reference for exact GP quantities using explicit inverses.
struct DenseOracle {
  double mll;
  VectorXd mean_f, var_f, mean_y, var_y;
};

inline DenseOracle dense_oracle(const MatrixXd& X, const VectorXd& y, const MeanFunction& m, const Kernel& k,
                                double log_noise, const MatrixXd& Xs) {
  const Eigen::Index n = X.cols();
  const double s2 = std::exp(2.0 * log_noise);
  MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k(column(X, i), column(X, j));
  K.diagonal().array() += s2;
  const MatrixXd Kinv = K.inverse();
  VectorXd mx(n);
  for (Eigen::Index i = 0; i < n; ++i) mx[i] = m.node().eval(column(X, i));
  const VectorXd yc = y - mx;
  DenseOracle o;
  o.mll = -0.5 * yc.dot(Kinv * yc) - 0.5 * std::log(K.determinant()) - 0.5 * n * std::log(2.0 * M_PI);
  const Eigen::Index m_ = Xs.cols();
  o.mean_f.resize(m_);
  o.var_f.resize(m_);
  for (Eigen::Index j = 0; j < m_; ++j) {
    VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks[i] = k(column(X, i), column(Xs, j));
    o.mean_f[j] = m.node().eval(column(Xs, j)) + ks.dot(Kinv * yc);
    o.var_f[j] = std::max(k(column(Xs, j), column(Xs, j)) - ks.dot(Kinv * ks), 0.0);
  }
  o.mean_y = o.mean_f;
  o.var_y = o.var_f.array() + s2;
  return o;
}

/// Likelihood contributing nothing: log p(y | f) = 0 for every y and f.
class FlatLikelihood final : public LikelihoodModel {
 public:
  std::unique_ptr<LikelihoodModel> clone() const override { return std::make_unique<FlatLikelihood>(*this); }
  std::string type_name() const override { return "FlatLik"; }
  std::string render() const override { return "Flat()"; }
  void check_response(double) const override {}
  double log_density(double, double) const override { return 0.0; }
  double dlog_df(double, double) const override { return 0.0; }
  std::pair<double, double> conditional_moments(double f) const override { return {f, 0.0}; }
};

/// Mean and standard error of a correlated series via batch means.
inline std::pair<double, double> batch_mean_se(const VectorXd& x, Eigen::Index batches = 50) {
  const Eigen::Index n = x.size();
  const Eigen::Index b = n / batches;
  VectorXd bm(batches);
  for (Eigen::Index i = 0; i < batches; ++i) bm[i] = x.segment(i * b, b).mean();
  const double mu = x.mean();
  const double var = (bm.array() - bm.mean()).square().sum() / static_cast<double>(batches - 1);
  return {mu, std::sqrt(var / static_cast<double>(batches))};
}

}  // namespace gpkit::testing
