#pragma once

// Inducing-point approximations sharing one low-rank core.
//
// Every scheme approximates the training covariance as
//   Sigma = Q_ff + Lambda,   Q_ff = K_fu K_uu^-1 K_uf,
// where Lambda is sigma^2 I (SoR, DTC), diag(K_ff - Q_ff) + sigma^2 I (FITC)
// or blockdiag(K_ff - Q_ff) + sigma^2 I (FSA). With V = L_uu^-1 K_uf and
// A = I + V Lambda^-1 V', Woodbury gives all solves and determinants in
// O(n m^2) plus the cost of the Lambda blocks.

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "gpkit/cholesky.hpp"
#include "gpkit/core.hpp"
#include "gpkit/gp_exact.hpp"
#include "gpkit/kernels.hpp"
#include "gpkit/means.hpp"
#include "gpkit/priors.hpp"

namespace gpkit {

enum class SparseScheme { SoR, DTC, FITC, FSA };

inline std::string to_string(SparseScheme s) {
  switch (s) {
    case SparseScheme::SoR: return "SoR";
    case SparseScheme::DTC: return "DTC";
    case SparseScheme::FITC: return "FITC";
    case SparseScheme::FSA: return "FSA";
  }
  return "?";
}

/// Case-insensitive scheme name: sor, dtc, fitc or fsa.
inline SparseScheme parse_scheme(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  if (name == "sor") return SparseScheme::SoR;
  if (name == "dtc") return SparseScheme::DTC;
  if (name == "fitc") return SparseScheme::FITC;
  if (name == "fsa") return SparseScheme::FSA;
  throw ConfigError("unknown sparse scheme '" + name + "' (expected sor, dtc, fitc or fsa)");
}

/// Partition of observation indices (0-based) into blocks.
using BlockIndices = std::vector<std::vector<Eigen::Index>>;

/// Assigns each column of X to its nearest inducing point (Euclidean, ties
/// to the lower index) and returns one block per inducing point. Inducing
/// points that attract no observations yield no block.
inline BlockIndices nearest_inducing_blocks(const MatrixXd& X, const MatrixXd& Xu) {
  if (X.rows() != Xu.rows()) throw InputError("nearest_inducing_blocks: dimension mismatch");
  if (Xu.cols() < 1) throw InputError("nearest_inducing_blocks: need at least one inducing point");
  BlockIndices blocks(static_cast<std::size_t>(Xu.cols()));
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    Eigen::Index best = 0;
    double bd = (X.col(i) - Xu.col(0)).squaredNorm();
    for (Eigen::Index u = 1; u < Xu.cols(); ++u) {
      const double d = (X.col(i) - Xu.col(u)).squaredNorm();
      if (d < bd) {
        bd = d;
        best = u;
      }
    }
    blocks[static_cast<std::size_t>(best)].push_back(i);
  }
  std::erase_if(blocks, [](const auto& b) { return b.empty(); });
  return blocks;
}

class SparseGP {
 public:
  SparseGP(SparseScheme scheme, MatrixXd X, MatrixXd Xu, VectorXd y, MeanFunction mean, Kernel kernel,
           double log_noise, BlockIndices blocks = {})
      : scheme_(scheme),
        X_(std::move(X)),
        Xu_(std::move(Xu)),
        y_(std::move(y)),
        mean_(std::move(mean)),
        kernel_(std::move(kernel)),
        log_noise_(log_noise),
        blocks_(std::move(blocks)) {
    detail::check_training(X_, y_);
    if (X_.cols() < 1) throw InputError("sparse GP: need at least one observation");
    if (Xu_.rows() != X_.rows())
      throw InputError("sparse GP: inducing points have dimension " + std::to_string(Xu_.rows()) + ", data has " +
                       std::to_string(X_.rows()));
    if (Xu_.cols() < 1) throw ConfigError("sparse GP: need at least one inducing point");
    if (Xu_.cols() > X_.cols()) throw ConfigError("sparse GP: more inducing points than observations");
    if (!kernel_) throw ConfigError("sparse GP: kernel is required");
    kernel_.check_dim(static_cast<std::size_t>(X_.rows()));
    mean_.check_dim(static_cast<std::size_t>(X_.rows()));
    if (scheme_ == SparseScheme::FSA) {
      validate_blocks();
    } else if (!blocks_.empty()) {
      throw ConfigError("sparse GP: block indices are only used by the FSA scheme");
    }
    fit();
  }

  SparseScheme scheme() const { return scheme_; }
  Eigen::Index dim() const { return X_.rows(); }
  Eigen::Index num_obs() const { return X_.cols(); }
  Eigen::Index num_inducing() const { return Xu_.cols(); }
  const MatrixXd& X() const { return X_; }
  const MatrixXd& inducing() const { return Xu_; }
  const VectorXd& y() const { return y_; }
  const MeanFunction& mean() const { return mean_; }
  const Kernel& kernel() const { return kernel_; }
  const BlockIndices& blocks() const { return blocks_; }
  double log_noise() const { return log_noise_; }
  double noise_variance() const { return std::exp(2.0 * log_noise_); }

  /// Approximate log marginal likelihood log N(y - m(X); 0, Q_ff + Lambda).
  double log_marginal() const { return mll_; }

  /// Sigma^-1 (y - m(X)).
  const VectorXd& alpha() const { return alpha_; }

  // -- parameters (same layout as GPExact) ----------------------------------

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

  void set_params(const VectorXd& p) {
    if (p.size() != num_params())
      throw ConfigError("sparse GP set_params: expected " + std::to_string(num_params()) + " values, got " +
                        std::to_string(p.size()));
    const auto g = groups();
    log_noise_ = p[0];
    mean_.set_params(p.segment(1, g.mean));
    kernel_.set_params(p.segment(1 + g.mean, g.kernel));
    fit();
  }

  std::vector<std::string> param_names() const {
    std::vector<std::string> n{"Noise"};
    for (auto& s : mean_.param_names()) n.push_back(s);
    for (auto& s : kernel_.param_names()) n.push_back(s);
    return n;
  }

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

  /// Gradient of log_marginal() w.r.t. params(). With W = a a' - Sigma^-1
  /// and Wm = K_uu^-1 K_uf, each kernel direction contributes
  ///   tr(Wm W~ dK_fu) - 1/2 tr(Wm W~ Wm' dK_uu) + 1/2 tr(blk(W) dK_blk)
  /// where W~ is W minus its diagonal/block part for FITC/FSA (the
  /// correction cancels Q on those entries) and W itself for SoR/DTC.
  VectorXd grad_log_marginal() const {
    const auto g = groups();
    const Eigen::Index n = num_obs();
    const auto Luu = Luu_.triangularView<Eigen::Lower>();
    const auto LA = LA_.triangularView<Eigen::Lower>();

    MatrixXd AinvPt = P_.transpose();  // m x n
    LA.solveInPlace(AinvPt);
    LA.transpose().solveInPlace(AinvPt);

    VectorXd out(num_params());
    // tr(Sigma^-1) = tr(Lambda^-1) - tr(P A^-1 P')
    const double tr_sinv = lambda_inv_trace() - (P_.transpose().array() * AinvPt.array()).sum();
    out[0] = noise_variance() * (alpha_.squaredNorm() - tr_sinv);
    if (g.mean > 0) out.segment(1, g.mean) = mean_grad_params(mean_, X_) * alpha_;
    if (g.kernel == 0) return out;

    MatrixXd Wm = V_;  // K_uu^-1 K_uf
    Luu.transpose().solveInPlace(Wm);
    // M1 = Wm (a a' - Sigma^-1) = (Wm a) a' - L_uu^-T A^-1 P'
    MatrixXd M1 = (Wm * alpha_) * alpha_.transpose();
    MatrixXd T = AinvPt;
    Luu.transpose().solveInPlace(T);
    M1 -= T;

    VectorXd kg = VectorXd::Zero(g.kernel);
    if (scheme_ == SparseScheme::FITC) {
      // diag(Sigma^-1)_i = 1/lambda_i - P_i . (A^-1 P')_i
      VectorXd wd(n);
      for (Eigen::Index i = 0; i < n; ++i)
        wd[i] = alpha_[i] * alpha_[i] - (1.0 / lam_[i] - P_.row(i).dot(AinvPt.col(i)));
      M1 -= Wm * wd.asDiagonal();
      kg += 0.5 * grad_diag(kernel_, X_) * wd;
    } else if (scheme_ == SparseScheme::FSA) {
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto& idx = blocks_[b];
        const auto nb = static_cast<Eigen::Index>(idx.size());
        MatrixXd Sb = MatrixXd::Identity(nb, nb);  // Lambda_b^-1
        block_chol_[b].triangularView<Eigen::Lower>().solveInPlace(Sb);
        block_chol_[b].triangularView<Eigen::Lower>().transpose().solveInPlace(Sb);
        MatrixXd Pb(nb, P_.cols()), AinvPbt(P_.cols(), nb), Wmb(Wm.rows(), nb);
        VectorXd ab(nb);
        for (Eigen::Index i = 0; i < nb; ++i) {
          Pb.row(i) = P_.row(idx[i]);
          AinvPbt.col(i) = AinvPt.col(idx[i]);
          Wmb.col(i) = Wm.col(idx[i]);
          ab[i] = alpha_[idx[i]];
        }
        MatrixXd Wb = ab * ab.transpose() - Sb;
        Wb.noalias() += Pb * AinvPbt;
        const MatrixXd C = Wmb * Wb;
        for (Eigen::Index i = 0; i < nb; ++i) M1.col(idx[i]) -= C.col(i);
        kg += 0.5 * grad_contract(kernel_, gather_cols(X_, idx), Wb);
      }
    }
    MatrixXd M2 = M1 * Wm.transpose();
    M2 = 0.5 * (M2 + M2.transpose()).eval();
    kg += grad_contract_cross(kernel_, Xu_, X_, M1);
    kg -= 0.5 * grad_contract(kernel_, Xu_, M2);
    out.segment(1 + g.mean, g.kernel) = kg;
    return out;
  }

  // -- prediction -----------------------------------------------------------

  /// Latent predictive mean and variance at the columns of Xs. For FSA,
  /// each test point borrows the block correction of the block in
  /// `test_blocks` (block position per column) or, when omitted, the block
  /// of its nearest training point.
  Prediction predict_f(const MatrixXd& Xs, const std::vector<Eigen::Index>& test_blocks = {}) const {
    if (Xs.rows() != dim())
      throw InputError("predict: test inputs have dimension " + std::to_string(Xs.rows()) + ", GP has " +
                       std::to_string(dim()));
    const Eigen::Index k = Xs.cols();
    MatrixXd w = cross_gram(kernel_, Xu_, Xs);  // m x k
    Luu_.triangularView<Eigen::Lower>().solveInPlace(w);
    MatrixXd z = w;
    LA_.triangularView<Eigen::Lower>().solveInPlace(z);

    Prediction out;
    out.mean = mean_eval(mean_, Xs);
    out.mean.noalias() += w.transpose() * Valpha_;
    const VectorXd wA = z.colwise().squaredNorm().transpose();
    switch (scheme_) {
      case SparseScheme::SoR:
        out.variance = wA;
        break;
      case SparseScheme::DTC:
      case SparseScheme::FITC:
        out.variance = (gram_diag(kernel_, Xs) - w.colwise().squaredNorm().transpose() + wA).cwiseMax(0.0);
        break;
      case SparseScheme::FSA: {
        if (!test_blocks.empty() && static_cast<Eigen::Index>(test_blocks.size()) != k)
          throw InputError("predict: test block list has the wrong length");
        out.variance.resize(k);
        const MatrixXd Am = A_ - MatrixXd::Identity(A_.rows(), A_.cols());
        for (Eigen::Index j = 0; j < k; ++j) {
          const Eigen::Index b = test_blocks.empty() ? block_of_[nearest_training(Xs.col(j))] : test_blocks[j];
          if (b < 0 || b >= static_cast<Eigen::Index>(blocks_.size()))
            throw InputError("predict: test block index out of range");
          fsa_point(Xs.col(j), w.col(j), Am, static_cast<std::size_t>(b), out.mean[j], out.variance[j]);
        }
        break;
      }
    }
    return out;
  }

  Prediction predict_y(const MatrixXd& Xs, const std::vector<Eigen::Index>& test_blocks = {}) const {
    Prediction p = predict_f(Xs, test_blocks);
    p.variance.array() += noise_variance();
    return p;
  }

  /// Bytes held by the cached factors.
  std::size_t factor_memory_bytes() const {
    std::size_t s = static_cast<std::size_t>(Luu_.size() + V_.size() + P_.size() + LA_.size() + A_.size() +
                                             alpha_.size() + Valpha_.size() + lam_.size());
    for (const auto& L : block_chol_) s += static_cast<std::size_t>(L.size());
    return sizeof(double) * s + sizeof(Eigen::Index) * static_cast<std::size_t>(block_of_.size());
  }

 private:
  void validate_blocks() {
    if (blocks_.empty()) throw ConfigError("FSA: block indices are required");
    const Eigen::Index n = num_obs();
    block_of_.assign(static_cast<std::size_t>(n), -1);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (blocks_[b].empty()) throw ConfigError("FSA: block " + std::to_string(b + 1) + " is empty");
      for (Eigen::Index i : blocks_[b]) {
        if (i < 0 || i >= n) throw ConfigError("FSA: block index " + std::to_string(i) + " out of range");
        if (block_of_[static_cast<std::size_t>(i)] >= 0)
          throw ConfigError("FSA: observation " + std::to_string(i + 1) + " appears in more than one block");
        block_of_[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(b);
      }
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if (block_of_[static_cast<std::size_t>(i)] < 0)
        throw ConfigError("FSA: observation " + std::to_string(i + 1) + " is not in any block");
  }

  static MatrixXd gather_cols(const MatrixXd& X, const std::vector<Eigen::Index>& idx) {
    MatrixXd out(X.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = X.col(idx[i]);
    return out;
  }

  Eigen::Index nearest_training(const Eigen::Ref<const VectorXd>& x) const {
    Eigen::Index best = 0;
    double bd = (X_.col(0) - x).squaredNorm();
    for (Eigen::Index i = 1; i < num_obs(); ++i) {
      const double d = (X_.col(i) - x).squaredNorm();
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  double lambda_inv_trace() const {
    if (scheme_ != SparseScheme::FSA) return lam_.cwiseInverse().sum();
    double t = 0.0;
    for (const auto& L : block_chol_) {
      MatrixXd Li = MatrixXd::Identity(L.rows(), L.cols());
      L.triangularView<Eigen::Lower>().solveInPlace(Li);
      t += Li.squaredNorm();
    }
    return t;
  }

  // Lambda^-1 applied to the rows of R (n x c), in place.
  void lambda_solve(MatrixXd& R) const {
    if (scheme_ != SparseScheme::FSA) {
      R = lam_.cwiseInverse().asDiagonal() * R;
      return;
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& idx = blocks_[b];
      MatrixXd Rb(static_cast<Eigen::Index>(idx.size()), R.cols());
      for (std::size_t i = 0; i < idx.size(); ++i) Rb.row(static_cast<Eigen::Index>(i)) = R.row(idx[i]);
      const auto L = block_chol_[b].triangularView<Eigen::Lower>();
      L.solveInPlace(Rb);
      L.transpose().solveInPlace(Rb);
      for (std::size_t i = 0; i < idx.size(); ++i) R.row(idx[i]) = Rb.row(static_cast<Eigen::Index>(i));
    }
  }

  void fit() {
    const Eigen::Index n = num_obs();
    const Eigen::Index m = num_inducing();
    const double s2 = noise_variance();

    CholeskyFactor cu = jittered_cholesky(gram_matrix(kernel_, Xu_), kExactJitter);
    Luu_ = std::move(cu.L);
    V_ = cross_gram(kernel_, Xu_, X_);
    Luu_.triangularView<Eigen::Lower>().solveInPlace(V_);

    double logdet_lambda = 0.0;
    block_chol_.clear();
    if (scheme_ == SparseScheme::FSA) {
      lam_.resize(0);
      for (const auto& idx : blocks_) {
        const MatrixXd Xb = gather_cols(X_, idx);
        MatrixXd Vb(m, Xb.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) Vb.col(static_cast<Eigen::Index>(i)) = V_.col(idx[i]);
        MatrixXd Kb = gram_matrix(kernel_, Xb);
        Kb.noalias() -= Vb.transpose() * Vb;
        Kb.diagonal().array() += s2;
        CholeskyFactor cb = jittered_cholesky(Kb, kExactJitter);
        logdet_lambda += 2.0 * log_diag_sum(cb.L);
        block_chol_.push_back(std::move(cb.L));
      }
    } else {
      lam_ = VectorXd::Constant(n, s2);
      if (scheme_ == SparseScheme::FITC)
        lam_ += (gram_diag(kernel_, X_) - V_.colwise().squaredNorm().transpose()).cwiseMax(0.0);
      logdet_lambda = lam_.array().log().sum();
    }

    P_ = V_.transpose();
    lambda_solve(P_);
    A_ = MatrixXd::Identity(m, m);
    A_.noalias() += V_ * P_;
    CholeskyFactor ca = jittered_cholesky(A_, kExactJitter);
    LA_ = std::move(ca.L);

    const VectorXd yc = y_ - mean_eval(mean_, X_);
    MatrixXd r = yc;
    lambda_solve(r);
    const VectorXd beta = V_ * r.col(0);
    const VectorXd gamma = LA_.triangularView<Eigen::Lower>().solve(beta);
    VectorXd ainv_beta = LA_.triangularView<Eigen::Lower>().transpose().solve(gamma);
    alpha_ = r.col(0) - P_ * ainv_beta;
    Valpha_ = V_ * alpha_;

    const double quad = yc.dot(r.col(0)) - gamma.squaredNorm();
    const double logdet = logdet_lambda + 2.0 * log_diag_sum(LA_);
    mll_ = -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
  }

  // FSA test point: the cross-covariance with the training set is
  // c = V'w + corr, where corr = k(x*, X_b) - V_b'w on block b only.
  void fsa_point(const Eigen::Ref<const VectorXd>& xs, const Eigen::Ref<const VectorXd>& w, const MatrixXd& Am,
                 std::size_t b, double& mean, double& var) const {
    const auto& idx = blocks_[b];
    const auto nb = static_cast<Eigen::Index>(idx.size());
    const Point xp(xs.data(), static_cast<std::size_t>(xs.size()));
    VectorXd corr(nb);
    MatrixXd Pb(nb, P_.cols());
    for (Eigen::Index i = 0; i < nb; ++i) {
      corr[i] = kernel_.node().eval(xp, column(X_, idx[i])) - V_.col(idx[i]).dot(w);
      Pb.row(i) = P_.row(idx[i]);
      mean += corr[i] * alpha_[idx[i]];
    }
    const auto L = block_chol_[b].triangularView<Eigen::Lower>();
    const VectorXd h = L.solve(corr);
    // c' Lambda^-1 c = w'(A - I)w + 2 corr' P_b w + corr' Lambda_b^-1 corr
    const double quad = w.dot(Am * w) + 2.0 * corr.dot(Pb * w) + h.squaredNorm();
    // P'c = (A - I) w + P_b' corr
    VectorXd t = Am * w + Pb.transpose() * corr;
    LA_.triangularView<Eigen::Lower>().solveInPlace(t);
    var = std::max(kernel_.node().eval(xp, xp) - quad + t.squaredNorm(), 0.0);
  }

  SparseScheme scheme_;
  MatrixXd X_;
  MatrixXd Xu_;
  VectorXd y_;
  MeanFunction mean_;
  Kernel kernel_;
  double log_noise_;
  Prior noise_prior_ = FlatPrior{};
  BlockIndices blocks_;
  std::vector<Eigen::Index> block_of_;

  MatrixXd Luu_;   // chol(K_uu)
  MatrixXd V_;     // L_uu^-1 K_uf, m x n
  VectorXd lam_;   // diagonal Lambda (SoR/DTC/FITC)
  std::vector<MatrixXd> block_chol_;  // chol(Lambda_b) (FSA)
  MatrixXd P_;     // Lambda^-1 V', n x m
  MatrixXd A_;     // I + V Lambda^-1 V'
  MatrixXd LA_;    // chol(A)
  VectorXd alpha_;
  VectorXd Valpha_;
  double mll_ = 0.0;
};

}  // namespace gpkit
