#pragma once

// Exact GP regression with Gaussian observation noise.
//
// The flattened hyperparameter vector is always ordered
//   (log_noise, mean params..., kernel params...)
// with log_noise the log standard deviation of the observation noise.

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gpkit/cholesky.hpp"
#include "gpkit/core.hpp"
#include "gpkit/kernels.hpp"
#include "gpkit/means.hpp"
#include "gpkit/priors.hpp"
#include "gpkit/random.hpp"

namespace gpkit {

/// Predictive moments. `covariance` is filled only for full_cov requests.
struct Prediction {
  VectorXd mean;
  VectorXd variance;
  MatrixXd covariance;
};

/// Sizes of the (noise, mean, kernel[, likelihood]) parameter groups.
struct ParamGroups {
  Eigen::Index noise = 0;
  Eigen::Index mean = 0;
  Eigen::Index kernel = 0;
  Eigen::Index lik = 0;
};

namespace detail {

inline std::string format_row(const Eigen::Ref<const VectorXd>& v, Eigen::Index max_items = 6) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < v.size() && i < max_items; ++i) os << (i ? ", " : "") << v[i];
  if (v.size() > max_items) os << ", ...";
  os << "]";
  return os.str();
}

inline std::string format_params(const VectorXd& p) {
  std::ostringstream os;
  os << "[";
  for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << "]";
  return os.str();
}

inline void check_training(const MatrixXd& X, const VectorXd& y) {
  if (X.cols() != y.size())
    throw InputError("training data: " + std::to_string(X.cols()) + " inputs but " + std::to_string(y.size()) +
                     " responses");
  if (X.rows() < 1) throw InputError("training data: input dimension must be >= 1");
}

}  // namespace detail

class GPExact {
 public:
  /// Fits a GP to X (d x n) and y (n).
  GPExact(MatrixXd X, VectorXd y, MeanFunction mean, Kernel kernel, double log_noise)
      : mean_(std::move(mean)), kernel_(std::move(kernel)), log_noise_(log_noise) {
    detail::check_training(X, y);
    if (X.cols() < 1) throw InputError("GPExact: need at least one observation");
    dim_ = X.rows();
    validate_components();
    n_ = X.cols();
    capacity_ = n_;
    X_ = std::move(X);
    y_ = std::move(y);
    refit();
  }

  /// Elastic GP with no observations yet; storage grows by `stepsize`
  /// whenever `capacity` is exhausted.
  static GPExact elastic(Eigen::Index dim, MeanFunction mean, Kernel kernel, double log_noise,
                         Eigen::Index capacity = 3000, Eigen::Index stepsize = 1000) {
    if (dim < 1) throw InputError("elastic GP: dimension must be >= 1");
    if (capacity < 1 || stepsize < 1) throw ConfigError("elastic GP: capacity and stepsize must be >= 1");
    return GPExact(dim, std::move(mean), std::move(kernel), log_noise, capacity, stepsize);
  }

  Eigen::Index dim() const { return dim_; }
  Eigen::Index num_obs() const { return n_; }
  Eigen::Index capacity() const { return capacity_; }
  Eigen::Index stepsize() const { return stepsize_; }
  bool is_elastic() const { return stepsize_ > 0; }

  MatrixXd X() const { return X_.leftCols(n_); }
  VectorXd y() const { return y_.head(n_); }
  const MeanFunction& mean() const { return mean_; }
  const Kernel& kernel() const { return kernel_; }
  double log_noise() const { return log_noise_; }
  double noise_variance() const { return std::exp(2.0 * log_noise_); }

  /// Lower Cholesky factor of K + (sigma^2 + jitter) I.
  MatrixXd chol() const { return L_.topLeftCorner(n_, n_); }
  const VectorXd& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }

  double log_marginal() const {
    if (n_ == 0) throw InputError("GPExact: no observation data");
    return mll_;
  }

  std::optional<double> try_log_marginal() const {
    return n_ > 0 ? std::optional<double>(mll_) : std::nullopt;
  }

  // -- parameters -----------------------------------------------------------

  ParamGroups groups() const {
    return {1, static_cast<Eigen::Index>(mean_.num_params()), static_cast<Eigen::Index>(kernel_.num_params()), 0};
  }
  Eigen::Index num_params() const { return 1 + groups().mean + groups().kernel; }

  VectorXd params() const {
    const auto g = groups();
    VectorXd p(num_params());
    p[0] = log_noise_;
    p.segment(1, g.mean) = mean_.params();
    p.segment(1 + g.mean, g.kernel) = kernel_.params();
    return p;
  }

  /// Installs new hyperparameters and refits.
  void set_params(const VectorXd& p) {
    if (p.size() != num_params())
      throw ConfigError("GPExact set_params: expected " + std::to_string(num_params()) + " values, got " +
                        std::to_string(p.size()));
    const auto g = groups();
    log_noise_ = p[0];
    mean_.set_params(p.segment(1, g.mean));
    kernel_.set_params(p.segment(1 + g.mean, g.kernel));
    if (n_ > 0) refit();
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> n{"Noise"};
    for (auto& s : mean_.param_names()) n.push_back(s);
    for (auto& s : kernel_.param_names()) n.push_back(s);
    return n;
  }

  /// Prior on log_noise; flat (improper) unless set.
  void set_noise_prior(Prior p) { noise_prior_ = p; }
  void set_mean_priors(PriorSet p) { mean_.set_priors(std::move(p)); }
  void set_kernel_priors(PriorSet p) { kernel_.set_priors(std::move(p)); }

  double log_prior() const {
    return gpkit::log_density(noise_prior_, log_noise_) + mean_.priors().log_density(mean_.params()) +
           kernel_.priors().log_density(kernel_.params());
  }

  VectorXd grad_log_prior() const {
    const auto g = groups();
    VectorXd out(num_params());
    out[0] = dlog_density(noise_prior_, log_noise_);
    out.segment(1, g.mean) = mean_.priors().grad(mean_.params());
    out.segment(1 + g.mean, g.kernel) = kernel_.priors().grad(kernel_.params());
    return out;
  }

  /// Gradient of the log marginal likelihood w.r.t. params():
  ///   covariance params: 1/2 tr((a a' - K^-1) dK)
  ///   mean params:       a' dm
  ///   log noise:         sigma^2 tr(a a' - K^-1)
  VectorXd grad_log_marginal() const {
    if (n_ == 0) throw InputError("GPExact: no observation data");
    const auto g = groups();
    const auto L = L_.topLeftCorner(n_, n_);
    MatrixXd Linv = MatrixXd::Identity(n_, n_);
    L.triangularView<Eigen::Lower>().solveInPlace(Linv);
    MatrixXd W = -Linv.transpose() * Linv;
    W.noalias() += alpha_ * alpha_.transpose();

    VectorXd out(num_params());
    out[0] = noise_variance() * W.trace();
    if (g.mean > 0) out.segment(1, g.mean) = mean_grad_params(mean_, X()) * alpha_;
    if (g.kernel > 0) out.segment(1 + g.mean, g.kernel) = 0.5 * grad_contract(kernel_, X(), W);
    return out;
  }

  // -- prediction -----------------------------------------------------------

  /// Latent predictive distribution at the columns of Xs.
  Prediction predict_f(const MatrixXd& Xs, bool full_cov = false) const {
    check_test_inputs(Xs);
    Prediction out;
    const Eigen::Index m = Xs.cols();
    out.mean = mean_eval(mean_, Xs);
    if (n_ == 0) {
      if (full_cov) {
        out.covariance = cross_gram(kernel_, Xs, Xs);
        out.variance = out.covariance.diagonal();
      } else {
        out.variance = gram_diag(kernel_, Xs);
      }
      return out;
    }
    const MatrixXd Kfs = cross_gram(kernel_, X(), Xs);
    out.mean.noalias() += Kfs.transpose() * alpha_;
    const MatrixXd V = L_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solve(Kfs);
    if (full_cov) {
      out.covariance = cross_gram(kernel_, Xs, Xs);
      out.covariance.noalias() -= V.transpose() * V;
      out.variance = out.covariance.diagonal().cwiseMax(0.0);
      for (Eigen::Index i = 0; i < m; ++i) out.covariance(i, i) = out.variance[i];
    } else {
      out.variance = (gram_diag(kernel_, Xs) - V.colwise().squaredNorm().transpose()).cwiseMax(0.0);
    }
    return out;
  }

  /// Observation predictive distribution: predict_f plus sigma^2 on the diagonal.
  Prediction predict_y(const MatrixXd& Xs, bool full_cov = false) const {
    Prediction p = predict_f(Xs, full_cov);
    p.variance.array() += noise_variance();
    if (full_cov) p.covariance.diagonal().array() += noise_variance();
    return p;
  }

  /// count x m matrix of draws from the latent posterior at Xs.
  MatrixXd sample_posterior(const MatrixXd& Xs, Eigen::Index count, std::uint64_t seed) const;

  // -- elastic updates ------------------------------------------------------

  /// Appends one observation. The Cholesky factor grows by one row via a
  /// single triangular solve.
  void append(const VectorXd& x, double y) {
    if (x.size() != dim_)
      throw InputError("append: point has dimension " + std::to_string(x.size()) + ", GP has " +
                       std::to_string(dim_));
    ensure_capacity(n_ + 1);
    X_.col(n_) = x;
    y_[n_] = y;
    extend_factor();
    update_weights();
  }

  /// Appends the columns of Xn with responses yn.
  void append(const MatrixXd& Xn, const VectorXd& yn) {
    detail::check_training(Xn, yn);
    if (Xn.rows() != dim_)
      throw InputError("append: points have dimension " + std::to_string(Xn.rows()) + ", GP has " +
                       std::to_string(dim_));
    ensure_capacity(n_ + Xn.cols());
    for (Eigen::Index j = 0; j < Xn.cols(); ++j) {
      X_.col(n_) = Xn.col(j);
      y_[n_] = yn[j];
      extend_factor();
    }
    update_weights();
  }

  /// Bytes held by the fitted factors (Cholesky factor and weights).
  std::size_t factor_memory_bytes() const {
    return sizeof(double) * static_cast<std::size_t>(L_.size() + alpha_.size());
  }

  /// Multi-line description in the style of a REPL object summary.
  std::string summary() const {
    std::ostringstream os;
    os << "GP Exact object:\n";
    os << "Dim = " << dim_ << "\n";
    os << "Number of observations = " << n_ << "\n";
    os << "Mean function:\n";
    os << "Type: " << mean_.type_name() << ", Params: " << detail::format_params(mean_.params()) << "\n";
    os << "Kernel:\n";
    os << "Type: " << kernel_.type_name() << ", Params: " << detail::format_params(kernel_.params()) << "\n";
    if (n_ == 0) {
      os << "  No observation data\n";
      return os.str();
    }
    os << "Input observations = \n[";
    for (Eigen::Index r = 0; r < dim_; ++r) {
      if (r) os << "; ";
      for (Eigen::Index j = 0; j < n_ && j < 4; ++j) os << (j ? " " : "") << X_(r, j);
      if (n_ > 4) os << " ...";
    }
    os << "]\n";
    os << "Output observations = " << detail::format_row(y_.head(n_)) << "\n";
    os << "Variance of observation noise = " << format_double(noise_variance()) << "\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", mll_);
    os << "Marginal Log-Likelihood = " << buf << "\n";
    return os.str();
  }

 private:
  GPExact(Eigen::Index dim, MeanFunction mean, Kernel kernel, double log_noise, Eigen::Index capacity,
          Eigen::Index stepsize)
      : mean_(std::move(mean)),
        kernel_(std::move(kernel)),
        log_noise_(log_noise),
        dim_(dim),
        capacity_(capacity),
        stepsize_(stepsize) {
    validate_components();
    X_.resize(dim_, capacity_);
    y_.resize(capacity_);
    L_.resize(capacity_, capacity_);
  }

  void validate_components() const {
    if (!kernel_) throw ConfigError("GPExact: kernel is required");
    kernel_.check_dim(static_cast<std::size_t>(dim_));
    mean_.check_dim(static_cast<std::size_t>(dim_));
  }

  void check_test_inputs(const MatrixXd& Xs) const {
    if (Xs.rows() != dim_)
      throw InputError("predict: test inputs have dimension " + std::to_string(Xs.rows()) + ", GP has " +
                       std::to_string(dim_));
  }

  // Full refactorization of the current data, with the jitter policy.
  void refit() {
    MatrixXd K = gram_matrix(kernel_, X());
    K.diagonal().array() += noise_variance();
    CholeskyFactor f = jittered_cholesky(K, kExactJitter);
    if (L_.rows() != capacity_) L_.resize(capacity_, capacity_);
    L_.topLeftCorner(n_, n_) = f.L;
    jitter_ = f.jitter;
    update_weights();
  }

  void update_weights() {
    const auto L = L_.topLeftCorner(n_, n_);
    const VectorXd yc = y_.head(n_) - mean_eval(mean_, X());
    alpha_ = L.triangularView<Eigen::Lower>().solve(yc);
    const double quad = alpha_.squaredNorm();
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
    mll_ = -0.5 * quad - log_diag_sum(L) - 0.5 * static_cast<double>(n_) * kLog2Pi;
  }

  void ensure_capacity(Eigen::Index needed) {
    if (needed <= capacity_) return;
    Eigen::Index cap = capacity_;
    const Eigen::Index step = stepsize_ > 0 ? stepsize_ : std::max<Eigen::Index>(capacity_, 1);
    while (cap < needed) cap += step;
    MatrixXd X2(dim_, cap);
    VectorXd y2(cap);
    MatrixXd L2(cap, cap);
    X2.leftCols(n_) = X_.leftCols(n_);
    y2.head(n_) = y_.head(n_);
    L2.topLeftCorner(n_, n_) = L_.topLeftCorner(n_, n_);
    X_.swap(X2);
    y_.swap(y2);
    L_.swap(L2);
    capacity_ = cap;
  }

  // Adds row n_ to the factor for the point already stored at column n_.
  void extend_factor() {
    const Point xn = column(X_, n_);
    const double kss = kernel_.node().eval(xn, xn) + noise_variance() + jitter_;
    if (n_ == 0) {
      if (!(kss > 0.0)) throw NumericalError("append: non-positive prior variance", jitter_);
      L_(0, 0) = std::sqrt(kss);
      ++n_;
      return;
    }
    VectorXd k(n_);
    for (Eigen::Index i = 0; i < n_; ++i) k[i] = kernel_.node().eval(column(X_, i), xn);
    L_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solveInPlace(k);
    const double d2 = kss - k.squaredNorm();
    if (d2 > 0.0) {
      L_.block(n_, 0, 1, n_) = k.transpose();
      L_(n_, n_) = std::sqrt(d2);
      ++n_;
      return;
    }
    // Rank-one extension broke down; refactor everything with jitter.
    ++n_;
    refit();
  }

  MeanFunction mean_;
  Kernel kernel_;
  double log_noise_ = 0.0;
  Prior noise_prior_ = FlatPrior{};

  Eigen::Index dim_ = 0;
  Eigen::Index n_ = 0;
  Eigen::Index capacity_ = 0;
  Eigen::Index stepsize_ = 0;

  MatrixXd X_;
  VectorXd y_;
  MatrixXd L_;
  VectorXd alpha_;
  double jitter_ = 0.0;
  double mll_ = 0.0;
};

/// Draws from N(mu, cov): mu + L z with L the jittered Cholesky factor.
inline MatrixXd sample_gaussian(const VectorXd& mu, const MatrixXd& cov, Eigen::Index count, std::uint64_t seed) {
  const CholeskyFactor f = jittered_cholesky(cov, JitterPolicy{0.0, 1e-10, 1e-4});
  CounterRng rng(seed);
  MatrixXd out(count, mu.size());
  for (Eigen::Index s = 0; s < count; ++s) out.row(s) = (mu + f.L * rng.normal_vector(mu.size())).transpose();
  return out;
}

/// count x m draws from the GP prior at the columns of Xs.
inline MatrixXd sample_prior(const MeanFunction& mean, const Kernel& kernel, const MatrixXd& Xs, Eigen::Index count,
                             std::uint64_t seed) {
  if (Xs.cols() < 1) throw InputError("sample_prior: need at least one point");
  return sample_gaussian(mean_eval(mean, Xs), gram_matrix(kernel, Xs), count, seed);
}

inline MatrixXd GPExact::sample_posterior(const MatrixXd& Xs, Eigen::Index count, std::uint64_t seed) const {
  const Prediction p = predict_f(Xs, true);
  return sample_gaussian(p.mean, p.covariance, count, seed);
}

}  // namespace gpkit
