#pragma once

// Observation models p(y | f, theta). Likelihood parameters are log-scale.

#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gpkit/core.hpp"
#include "gpkit/gauss_hermite.hpp"
#include "gpkit/priors.hpp"

namespace gpkit {

namespace math {

inline double log_normal_pdf(double z) { return -0.5 * z * z - 0.5 * kLog2Pi; }

/// log Phi(z), accurate in both tails.
inline double log_normal_cdf(double z) {
  if (z > 0.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Asymptotic (Mills ratio) series; the next term is below 1e-15 here.
  const double iz2 = 1.0 / (z * z);
  const double series = 1.0 - iz2 * (1.0 - 3.0 * iz2 * (1.0 - 5.0 * iz2 * (1.0 - 7.0 * iz2)));
  return log_normal_pdf(z) - std::log(-z) + std::log(series);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// phi(z) / Phi(z)
inline double inv_mills(double z) { return std::exp(log_normal_pdf(z) - log_normal_cdf(z)); }

/// log(1 + e^f)
inline double softplus(double f) { return f > 0.0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f)); }

inline double logistic(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

inline bool is_integer(double y) { return std::isfinite(y) && std::floor(y) == y; }

}  // namespace math

class LikelihoodModel {
 public:
  virtual ~LikelihoodModel() = default;
  virtual std::unique_ptr<LikelihoodModel> clone() const = 0;
  virtual std::string type_name() const = 0;
  virtual std::string render() const = 0;

  virtual std::size_t num_params() const { return 0; }
  virtual void get_params(double*) const {}
  virtual void set_params(const double*) {}
  virtual std::vector<std::string> param_names() const { return {}; }

  /// Throws InputError if y is outside the response support.
  virtual void check_response(double y) const = 0;

  virtual double log_density(double y, double f) const = 0;
  virtual double dlog_df(double y, double f) const = 0;
  virtual void dlog_dtheta(double, double, double*) const {}

  /// E[y | f] and Var[y | f].
  virtual std::pair<double, double> conditional_moments(double f) const = 0;

  /// Observation noise variance when the model is Gaussian, else negative.
  virtual double gaussian_noise_variance() const { return -1.0; }
};

/// y in {0,1}, probit link g = Phi(f).
class BernoulliLikelihood final : public LikelihoodModel {
 public:
  std::unique_ptr<LikelihoodModel> clone() const override { return std::make_unique<BernoulliLikelihood>(*this); }
  std::string type_name() const override { return "BernLik"; }
  std::string render() const override { return "Bernoulli()"; }
  void check_response(double y) const override {
    if (y != 0.0 && y != 1.0) throw InputError("Bernoulli: response must be 0 or 1, got " + format_double(y));
  }
  double log_density(double y, double f) const override {
    return math::log_normal_cdf(y == 1.0 ? f : -f);
  }
  double dlog_df(double y, double f) const override {
    return y == 1.0 ? math::inv_mills(f) : -math::inv_mills(-f);
  }
  std::pair<double, double> conditional_moments(double f) const override {
    const double p = math::normal_cdf(f);
    return {p, p * (1.0 - p)};
  }
};

/// y in {0..n}, logit link.
class BinomialLikelihood final : public LikelihoodModel {
 public:
  explicit BinomialLikelihood(int trials) : n_(trials) {
    if (trials < 1) throw ConfigError("Binomial: number of trials must be >= 1");
  }
  std::unique_ptr<LikelihoodModel> clone() const override { return std::make_unique<BinomialLikelihood>(*this); }
  std::string type_name() const override { return "BinLik"; }
  std::string render() const override { return "Binomial(" + std::to_string(n_) + ")"; }
  int trials() const { return n_; }
  void check_response(double y) const override {
    if (!math::is_integer(y) || y < 0.0 || y > n_)
      throw InputError("Binomial: response must be an integer in [0," + std::to_string(n_) + "], got " +
                       format_double(y));
  }
  double log_density(double y, double f) const override {
    const double logc = std::lgamma(n_ + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n_ - y + 1.0);
    return logc + y * f - n_ * math::softplus(f);
  }
  double dlog_df(double y, double f) const override { return y - n_ * math::logistic(f); }
  std::pair<double, double> conditional_moments(double f) const override {
    const double g = math::logistic(f);
    return {n_ * g, n_ * g * (1.0 - g)};
  }

 private:
  int n_;
};

/// y > 0, rate g = exp(-f): p = g exp(-g y).
class ExponentialLikelihood final : public LikelihoodModel {
 public:
  std::unique_ptr<LikelihoodModel> clone() const override { return std::make_unique<ExponentialLikelihood>(*this); }
  std::string type_name() const override { return "ExpLik"; }
  std::string render() const override { return "Exponential()"; }
  void check_response(double y) const override {
    if (!(y > 0.0) || !std::isfinite(y)) throw InputError("Exponential: response must be > 0, got " + format_double(y));
  }
  double log_density(double y, double f) const override { return -f - y * std::exp(-f); }
  double dlog_df(double y, double f) const override { return -1.0 + y * std::exp(-f); }
  std::pair<double, double> conditional_moments(double f) const override {
    const double m = std::exp(f);
    return {m, m * m};
  }
};

/// y real, params (log sigma).
class GaussianLikelihood final : public LikelihoodModel {
 public:
  explicit GaussianLikelihood(double log_sigma) : log_sigma_(log_sigma) {}
  std::unique_ptr<LikelihoodModel> clone() const override { return std::make_unique<GaussianLikelihood>(*this); }
  std::string type_name() const override { return "GaussLik"; }
  std::string render() const override { return "Gaussian(" + format_double(log_sigma_) + ")"; }
  std::size_t num_params() const override { return 1; }
  void get_params(double* out) const override { out[0] = log_sigma_; }
  void set_params(const double* in) override { log_sigma_ = in[0]; }
  std::vector<std::string> param_names() const override { return {"Gaussian log sigma"}; }
  void check_response(double y) const override {
    if (!std::isfinite(y)) throw InputError("Gaussian: response must be finite");
  }
  double log_density(double y, double f) const override {
    const double z = (y - f) * std::exp(-log_sigma_);
    return -0.5 * kLog2Pi - log_sigma_ - 0.5 * z * z;
  }
  double dlog_df(double y, double f) const override { return (y - f) * std::exp(-2.0 * log_sigma_); }
  void dlog_dtheta(double y, double f, double* out) const override {
    const double z = (y - f) * std::exp(-log_sigma_);
    out[0] = z * z - 1.0;
  }
  std::pair<double, double> conditional_moments(double f) const override {
    return {f, std::exp(2.0 * log_sigma_)};
  }
  double gaussian_noise_variance() const override { return std::exp(2.0 * log_sigma_); }

 private:
  double log_sigma_;
};

/// y in N0, rate g = exp(f).
class PoissonLikelihood final : public LikelihoodModel {
 public:
  std::unique_ptr<LikelihoodModel> clone() const override { return std::make_unique<PoissonLikelihood>(*this); }
  std::string type_name() const override { return "PoisLik"; }
  std::string render() const override { return "Poisson()"; }
  void check_response(double y) const override {
    if (!math::is_integer(y) || y < 0.0)
      throw InputError("Poisson: response must be a non-negative integer, got " + format_double(y));
  }
  double log_density(double y, double f) const override { return y * f - std::exp(f) - std::lgamma(y + 1.0); }
  double dlog_df(double y, double f) const override { return y - std::exp(f); }
  std::pair<double, double> conditional_moments(double f) const override {
    const double m = std::exp(f);
    return {m, m};
  }
};

/// Student-t with fixed degrees of freedom nu; params (log sigma).
class StudentTLikelihood final : public LikelihoodModel {
 public:
  StudentTLikelihood(double nu, double log_sigma) : nu_(nu), log_sigma_(log_sigma) {
    if (!(nu > 0.0)) throw ConfigError("StudentT: degrees of freedom must be > 0");
  }
  std::unique_ptr<LikelihoodModel> clone() const override { return std::make_unique<StudentTLikelihood>(*this); }
  std::string type_name() const override { return "StuTLik"; }
  std::string render() const override {
    return "StudentT(" + format_double(nu_) + "," + format_double(log_sigma_) + ")";
  }
  double nu() const { return nu_; }
  std::size_t num_params() const override { return 1; }
  void get_params(double* out) const override { out[0] = log_sigma_; }
  void set_params(const double* in) override { log_sigma_ = in[0]; }
  std::vector<std::string> param_names() const override { return {"StudentT log sigma"}; }
  void check_response(double y) const override {
    if (!std::isfinite(y)) throw InputError("StudentT: response must be finite");
  }
  double log_density(double y, double f) const override {
    const double r = (y - f) * std::exp(-log_sigma_);
    return std::lgamma(0.5 * (nu_ + 1.0)) - std::lgamma(0.5 * nu_) - 0.5 * std::log(std::numbers::pi * nu_) -
           log_sigma_ - 0.5 * (nu_ + 1.0) * std::log1p(r * r / nu_);
  }
  double dlog_df(double y, double f) const override {
    const double s = std::exp(log_sigma_);
    const double r = (y - f) / s;
    return (nu_ + 1.0) * r / (s * (nu_ + r * r));
  }
  void dlog_dtheta(double y, double f, double* out) const override {
    const double r = (y - f) * std::exp(-log_sigma_);
    out[0] = -1.0 + (nu_ + 1.0) * r * r / (nu_ + r * r);
  }
  std::pair<double, double> conditional_moments(double f) const override {
    const double var = nu_ > 2.0 ? std::exp(2.0 * log_sigma_) * nu_ / (nu_ - 2.0)
                                 : std::numeric_limits<double>::infinity();
    return {f, var};
  }

 private:
  double nu_;
  double log_sigma_;
};

/// Value-semantic likelihood handle with optional priors.
class Likelihood {
 public:
  explicit Likelihood(std::unique_ptr<LikelihoodModel> m) : model_(std::move(m)) {}
  Likelihood(const Likelihood& o) : model_(o.model_->clone()), priors_(o.priors_) {}
  Likelihood(Likelihood&&) noexcept = default;
  Likelihood& operator=(const Likelihood& o) {
    if (this != &o) {
      model_ = o.model_->clone();
      priors_ = o.priors_;
    }
    return *this;
  }
  Likelihood& operator=(Likelihood&&) noexcept = default;

  const LikelihoodModel& model() const { return *model_; }
  std::size_t num_params() const { return model_->num_params(); }
  std::string type_name() const { return model_->type_name(); }
  std::string render() const { return model_->render(); }
  std::vector<std::string> param_names() const { return model_->param_names(); }

  VectorXd params() const {
    VectorXd p(static_cast<Eigen::Index>(num_params()));
    if (p.size()) model_->get_params(p.data());
    return p;
  }
  void set_params(const VectorXd& p) {
    if (static_cast<std::size_t>(p.size()) != num_params())
      throw ConfigError("likelihood set_params: expected " + std::to_string(num_params()) + " values, got " +
                        std::to_string(p.size()));
    if (p.size()) model_->set_params(p.data());
  }

  void set_priors(PriorSet p) {
    p.check_size(num_params(), "likelihood priors");
    priors_ = std::move(p);
  }
  const PriorSet& priors() const { return priors_; }

 private:
  std::unique_ptr<LikelihoodModel> model_;
  PriorSet priors_;
};

namespace lik {
inline Likelihood bernoulli() { return Likelihood(std::make_unique<BernoulliLikelihood>()); }
inline Likelihood binomial(int n) { return Likelihood(std::make_unique<BinomialLikelihood>(n)); }
inline Likelihood exponential() { return Likelihood(std::make_unique<ExponentialLikelihood>()); }
inline Likelihood gaussian(double log_sigma) { return Likelihood(std::make_unique<GaussianLikelihood>(log_sigma)); }
inline Likelihood poisson() { return Likelihood(std::make_unique<PoissonLikelihood>()); }
inline Likelihood student_t(double nu, double log_sigma) {
  return Likelihood(std::make_unique<StudentTLikelihood>(nu, log_sigma));
}
}  // namespace lik

inline double log_density(const Likelihood& l, double y, double f) {
  l.model().check_response(y);
  return l.model().log_density(y, f);
}

inline double dlog_density_df(const Likelihood& l, double y, double f) {
  l.model().check_response(y);
  return l.model().dlog_df(y, f);
}

inline VectorXd dlog_density_dtheta(const Likelihood& l, double y, double f) {
  l.model().check_response(y);
  VectorXd g(static_cast<Eigen::Index>(l.num_params()));
  if (g.size()) l.model().dlog_dtheta(y, f, g.data());
  return g;
}

inline constexpr int kDefaultQuadOrder = 20;

/// Mean and variance of y* under  int p(y*|f) N(f; mu, var) df.
/// Gaussian models are handled in closed form; others by Gauss-Hermite.
inline std::pair<double, double> predictive_moments(const Likelihood& l, double mu, double var,
                                                    int quad_order = kDefaultQuadOrder) {
  const double noise = l.model().gaussian_noise_variance();
  if (noise >= 0.0) return {mu, var + noise};
  const auto& rule = gauss_hermite(quad_order);
  const double sd = std::sqrt(std::max(var, 0.0));
  double m1 = 0.0, m2 = 0.0, ev = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const auto [cm, cv] = l.model().conditional_moments(mu + sd * rule.nodes[i]);
    m1 += rule.weights[i] * cm;
    m2 += rule.weights[i] * cm * cm;
    ev += rule.weights[i] * cv;
  }
  return {m1, ev + std::max(m2 - m1 * m1, 0.0)};
}

}  // namespace gpkit
