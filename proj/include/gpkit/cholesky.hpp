#pragma once

#include <algorithm>
#include <string>

#include "gpkit/core.hpp"

namespace gpkit {

/// Diagonal inflation schedule for factorizing near-singular covariances.
/// Amounts are relative to the mean diagonal of the matrix.
struct JitterPolicy {
  double initial = 0.0;  ///< first attempt (0 = try the bare matrix)
  double start = 1e-10;  ///< first non-zero jitter when escalating
  double max = 1e-4;     ///< give up beyond this
};

inline constexpr JitterPolicy kExactJitter{0.0, 1e-10, 1e-4};
inline constexpr JitterPolicy kLatentJitter{1e-8, 1e-8, 1e-4};

struct CholeskyFactor {
  MatrixXd L;                 ///< lower triangular, L L' = A + jitter I
  double jitter = 0.0;        ///< absolute amount added to the diagonal
  double jitter_rel = 0.0;    ///< jitter / mean diagonal
};

/// Factors A + jitter I, doubling the jitter until it succeeds or the cap
/// in `policy` is exceeded (NumericalError carries the last attempt).
inline CholeskyFactor jittered_cholesky(const MatrixXd& A, const JitterPolicy& policy = kExactJitter) {
  const Eigen::Index n = A.rows();
  if (!A.allFinite()) throw NumericalError("Cholesky factorization: matrix has non-finite entries");
  const double scale = n > 0 ? std::max(A.diagonal().mean(), 0.0) : 0.0;
  const double unit = scale > 0.0 ? scale : 1.0;
  double rel = policy.initial;
  for (;;) {
    Eigen::LLT<MatrixXd> llt;
    if (rel > 0.0) {
      MatrixXd B = A;
      B.diagonal().array() += rel * unit;
      llt.compute(B);
    } else {
      llt.compute(A);
    }
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) {
      MatrixXd L = llt.matrixL();
      return {std::move(L), rel * unit, rel};
    }
    const double next = rel > 0.0 ? 2.0 * rel : policy.start;
    if (next > policy.max * (1.0 + 1e-12))
      throw NumericalError("Cholesky factorization failed after jitter " + format_double(rel * unit), rel * unit);
    rel = next;
  }
}

namespace detail {

// dL for a single block: dL = L Phi(L^-1 dA L^-T), Phi keeps the lower
// triangle and halves the diagonal.
inline MatrixXd cholesky_forward_unblocked(const MatrixXd& L, const MatrixXd& dA) {
  auto Lt = L.triangularView<Eigen::Lower>();
  MatrixXd T = Lt.solve(dA);
  T = Lt.solve(T.transpose()).transpose();
  T.triangularView<Eigen::StrictlyUpper>().setZero();
  T.diagonal() *= 0.5;
  return L * T;
}

}  // namespace detail

/// Forward-mode derivative of the Cholesky factor: given A = L L' and a
/// symmetric direction dA, returns dL (lower triangular). Blocked over
/// columns so the bulk of the work is matrix-matrix products.
inline MatrixXd cholesky_forward(const MatrixXd& L, const MatrixXd& dA, Eigen::Index block = 64) {
  const Eigen::Index n = L.rows();
  if (dA.rows() != n || dA.cols() != n) throw InputError("cholesky_forward: shape mismatch");
  block = std::max<Eigen::Index>(block, 1);
  MatrixXd dL = MatrixXd::Zero(n, n);
  for (Eigen::Index j0 = 0; j0 < n; j0 += block) {
    const Eigen::Index nb = std::min(block, n - j0);
    const Eigen::Index j1 = j0 + nb;
    const Eigen::Index nk = n - j1;

    const auto R = L.block(j0, 0, nb, j0);
    const auto dR = dL.block(j0, 0, nb, j0);
    const MatrixXd D = L.block(j0, j0, nb, nb);

    MatrixXd S = dA.block(j0, j0, nb, nb);
    if (j0 > 0) {
      const MatrixXd RdR = dR * R.transpose();
      S -= RdR + RdR.transpose();
    }
    const MatrixXd dD = detail::cholesky_forward_unblocked(D, S);
    dL.block(j0, j0, nb, nb) = dD;

    if (nk > 0) {
      MatrixXd M = dA.block(j1, j0, nk, nb);
      if (j0 > 0) {
        M.noalias() -= dL.block(j1, 0, nk, j0) * R.transpose();
        M.noalias() -= L.block(j1, 0, nk, j0) * dR.transpose();
      }
      M.noalias() -= L.block(j1, j0, nk, nb) * dD.transpose();
      D.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(M);
      dL.block(j1, j0, nk, nb) = M;
    }
  }
  return dL;
}

/// sum_i log L_ii
inline double log_diag_sum(const Eigen::Ref<const MatrixXd>& L) { return L.diagonal().array().log().sum(); }

}  // namespace gpkit
