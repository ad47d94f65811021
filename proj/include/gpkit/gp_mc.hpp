#pragma once

// GP with an arbitrary likelihood, parameterized for MCMC.
//
// The latent function is whitened: f = m(X) + L v with L L' = K + jitter I
// and v ~ N(0, I). The joint state is (v, theta) with
//   theta = (likelihood params..., mean params..., kernel params...).

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gpkit/cholesky.hpp"
#include "gpkit/core.hpp"
#include "gpkit/gp_exact.hpp"
#include "gpkit/kernels.hpp"
#include "gpkit/likelihoods.hpp"
#include "gpkit/means.hpp"
#include "gpkit/priors.hpp"

namespace gpkit {

class GPMC {
 public:
  GPMC(MatrixXd X, VectorXd y, MeanFunction mean, Kernel kernel, Likelihood lik)
      : X_(std::move(X)), y_(std::move(y)), mean_(std::move(mean)), kernel_(std::move(kernel)), lik_(std::move(lik)) {
    detail::check_training(X_, y_);
    if (X_.cols() < 1) throw InputError("GPMC: need at least one observation");
    if (!kernel_) throw ConfigError("GPMC: kernel is required");
    kernel_.check_dim(static_cast<std::size_t>(X_.rows()));
    mean_.check_dim(static_cast<std::size_t>(X_.rows()));
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      try {
        lik_.model().check_response(y_[i]);
      } catch (const InputError& e) {
        throw InputError("observation " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    v_ = VectorXd::Zero(num_obs());
    update_target();
  }

  Eigen::Index dim() const { return X_.rows(); }
  Eigen::Index num_obs() const { return X_.cols(); }
  const MatrixXd& X() const { return X_; }
  const VectorXd& y() const { return y_; }
  const MeanFunction& mean() const { return mean_; }
  const Kernel& kernel() const { return kernel_; }
  const Likelihood& likelihood() const { return lik_; }

  /// Whitened latent variables.
  const VectorXd& v() const { return v_; }
  /// Latent function values m(X) + L v.
  const VectorXd& latent() const { return f_; }
  /// Lower Cholesky factor of K + jitter I.
  const MatrixXd& chol() const { return L_; }
  double jitter() const { return jitter_; }

  // -- parameters -----------------------------------------------------------

  ParamGroups groups() const {
    return {0, static_cast<Eigen::Index>(mean_.num_params()), static_cast<Eigen::Index>(kernel_.num_params()),
            static_cast<Eigen::Index>(lik_.num_params())};
  }
  Eigen::Index num_theta() const {
    const auto g = groups();
    return g.lik + g.mean + g.kernel;
  }
  Eigen::Index num_params() const { return num_obs() + num_theta(); }

  VectorXd theta() const {
    const auto g = groups();
    VectorXd t(num_theta());
    t.head(g.lik) = lik_.params();
    t.segment(g.lik, g.mean) = mean_.params();
    t.tail(g.kernel) = kernel_.params();
    return t;
  }

  /// Full state (v, theta).
  VectorXd params() const {
    VectorXd p(num_params());
    p.head(num_obs()) = v_;
    p.tail(num_theta()) = theta();
    return p;
  }

  /// Installs a full state (v, theta) and refreshes the cached target.
  void set_params(const VectorXd& p) {
    if (p.size() != num_params())
      throw ConfigError("GPMC set_params: expected " + std::to_string(num_params()) + " values, got " +
                        std::to_string(p.size()));
    v_ = p.head(num_obs());
    install_theta(p.tail(num_theta()));
    update_target();
  }

  void set_v(const VectorXd& v) {
    if (v.size() != num_obs()) throw ConfigError("GPMC set_v: length mismatch");
    v_ = v;
    update_target();
  }

  void set_theta(const VectorXd& t) {
    if (t.size() != num_theta()) throw ConfigError("GPMC set_theta: length mismatch");
    install_theta(t);
    update_target();
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> n;
    for (Eigen::Index i = 0; i < num_obs(); ++i) n.push_back("v" + std::to_string(i + 1));
    for (auto& s : lik_.param_names()) n.push_back(s);
    for (auto& s : mean_.param_names()) n.push_back(s);
    for (auto& s : kernel_.param_names()) n.push_back(s);
    return n;
  }

  void set_lik_priors(PriorSet p) {
    lik_.set_priors(std::move(p));
    update_target();
  }
  void set_mean_priors(PriorSet p) {
    mean_.set_priors(std::move(p));
    update_target();
  }
  void set_kernel_priors(PriorSet p) {
    kernel_.set_priors(std::move(p));
    update_target();
  }

  // -- target ---------------------------------------------------------------

  /// Recomputes L, f and the cached log posterior from the current state.
  void update_target() {
    const MatrixXd K = gram_matrix(kernel_, X_);
    CholeskyFactor c = jittered_cholesky(K, kLatentJitter);
    L_ = std::move(c.L);
    jitter_ = c.jitter;
    jitter_rel_ = c.jitter_rel;
    f_ = mean_eval(mean_, X_);
    f_.noalias() += L_.triangularView<Eigen::Lower>() * v_;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < num_obs(); ++i) ll += lik_.model().log_density(y_[i], f_[i]);
    target_ = ll + log_prior() - 0.5 * v_.squaredNorm() - 0.5 * static_cast<double>(num_obs()) * kLog2Pi;
    if (std::isnan(target_)) target_ = -std::numeric_limits<double>::infinity();
  }

  /// log p(y | f) + log N(v; 0, I) + log p(theta), cached.
  double log_posterior() const { return target_; }

  double log_prior() const {
    return lik_.priors().log_density(lik_.params()) + mean_.priors().log_density(mean_.params()) +
           kernel_.priors().log_density(kernel_.params());
  }

  /// Gradient of log_posterior() w.r.t. params() = (v, theta). Kernel terms
  /// differentiate the Cholesky factor in forward mode, one direction per
  /// kernel parameter; the relative jitter is held fixed so the jitter
  /// contributes rel * mean(diag dK) to each direction.
  VectorXd grad_log_posterior() const {
    const Eigen::Index n = num_obs();
    const auto g = groups();
    VectorXd dldf(n);
    for (Eigen::Index i = 0; i < n; ++i) dldf[i] = lik_.model().dlog_df(y_[i], f_[i]);

    VectorXd out(num_params());
    out.head(n) = L_.triangularView<Eigen::Lower>().transpose() * dldf - v_;

    Eigen::Index off = n;
    if (g.lik > 0) {
      VectorXd acc = VectorXd::Zero(g.lik);
      VectorXd tmp(g.lik);
      for (Eigen::Index i = 0; i < n; ++i) {
        lik_.model().dlog_dtheta(y_[i], f_[i], tmp.data());
        acc += tmp;
      }
      out.segment(off, g.lik) = acc + lik_.priors().grad(lik_.params());
      off += g.lik;
    }
    if (g.mean > 0) {
      out.segment(off, g.mean) = mean_grad_params(mean_, X_) * dldf + mean_.priors().grad(mean_.params());
      off += g.mean;
    }
    if (g.kernel > 0) {
      const std::vector<MatrixXd> dK = grad_gram(kernel_, X_);
      VectorXd kg(g.kernel);
      for (Eigen::Index p = 0; p < g.kernel; ++p) {
        MatrixXd dA = dK[static_cast<std::size_t>(p)];
        if (jitter_rel_ > 0.0) dA.diagonal().array() += jitter_rel_ * dA.diagonal().mean();
        const MatrixXd dL = cholesky_forward(L_, dA);
        kg[p] = dldf.dot(dL * v_);
      }
      out.segment(off, g.kernel) = kg + kernel_.priors().grad(kernel_.params());
    }
    return out;
  }

  // -- prediction -----------------------------------------------------------

  /// Latent predictive distribution at Xs, conditioning noise-free on the
  /// current latent values f.
  Prediction predict_f(const MatrixXd& Xs, bool full_cov = false) const {
    if (Xs.rows() != dim())
      throw InputError("predict: test inputs have dimension " + std::to_string(Xs.rows()) + ", GP has " +
                       std::to_string(dim()));
    Prediction out;
    const MatrixXd Kfs = cross_gram(kernel_, X_, Xs);
    const MatrixXd V = L_.triangularView<Eigen::Lower>().solve(Kfs);
    // K^-1 (f - m) = L^-T v
    out.mean = mean_eval(mean_, Xs) + V.transpose() * v_;
    if (full_cov) {
      out.covariance = cross_gram(kernel_, Xs, Xs);
      out.covariance.noalias() -= V.transpose() * V;
      out.variance = out.covariance.diagonal().cwiseMax(0.0);
      for (Eigen::Index i = 0; i < Xs.cols(); ++i) out.covariance(i, i) = out.variance[i];
    } else {
      out.variance = (gram_diag(kernel_, Xs) - V.colwise().squaredNorm().transpose()).cwiseMax(0.0);
    }
    return out;
  }

  /// count x m draws of the latent function at Xs given the current state.
  MatrixXd sample_latent(const MatrixXd& Xs, Eigen::Index count, std::uint64_t seed) const {
    const Prediction p = predict_f(Xs, true);
    return sample_gaussian(p.mean, p.covariance, count, seed);
  }

  std::string summary() const {
    std::ostringstream os;
    os << "GP Monte Carlo object:\n";
    os << "Dim = " << dim() << "\n";
    os << "Number of observations = " << num_obs() << "\n";
    os << "Mean function:\n";
    os << "Type: " << mean_.type_name() << ", Params: " << detail::format_params(mean_.params()) << "\n";
    os << "Kernel:\n";
    os << "Type: " << kernel_.type_name() << ", Params: " << detail::format_params(kernel_.params()) << "\n";
    os << "Likelihood:\n";
    os << "Type: " << lik_.type_name() << ", Params: " << detail::format_params(lik_.params()) << "\n";
    os << "Log-posterior = " << format_double(target_) << "\n";
    return os.str();
  }

 private:
  void install_theta(const VectorXd& t) {
    const auto g = groups();
    lik_.set_params(t.head(g.lik));
    mean_.set_params(t.segment(g.lik, g.mean));
    kernel_.set_params(t.tail(g.kernel));
  }

  MatrixXd X_;
  VectorXd y_;
  MeanFunction mean_;
  Kernel kernel_;
  Likelihood lik_;

  VectorXd v_;
  MatrixXd L_;
  VectorXd f_;
  double jitter_ = 0.0;
  double jitter_rel_ = 0.0;
  double target_ = 0.0;
};

/// Per-sample predictive moments; row s holds sample s.
struct McPrediction {
  MatrixXd mean;
  MatrixXd variance;

  /// Monte Carlo average over samples of the predictive mean.
  VectorXd average_mean() const { return mean.colwise().mean().transpose(); }
};

/// For each column of `samples` (a full GPMC state), conditions the latent
/// GP on the sampled f, then integrates the likelihood against the latent
/// predictive by Gauss-Hermite quadrature.
inline McPrediction mc_predict_y(const GPMC& gp, const MatrixXd& samples, const MatrixXd& Xs,
                                 int quad_order = kDefaultQuadOrder) {
  if (samples.rows() != gp.num_params())
    throw InputError("mc_predict_y: samples have " + std::to_string(samples.rows()) + " rows, model has " +
                     std::to_string(gp.num_params()) + " parameters");
  GPMC work = gp;
  McPrediction out{MatrixXd(samples.cols(), Xs.cols()), MatrixXd(samples.cols(), Xs.cols())};
  for (Eigen::Index s = 0; s < samples.cols(); ++s) {
    work.set_params(samples.col(s));
    const Prediction p = work.predict_f(Xs);
    for (Eigen::Index j = 0; j < Xs.cols(); ++j) {
      const auto [m, v] = predictive_moments(work.likelihood(), p.mean[j], p.variance[j], quad_order);
      out.mean(s, j) = m;
      out.variance(s, j) = v;
    }
  }
  return out;
}

}  // namespace gpkit
