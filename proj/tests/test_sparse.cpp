#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace gpkit;
using namespace gpkit::testing;

namespace {

constexpr SparseScheme kAllSchemes[] = {SparseScheme::SoR, SparseScheme::DTC, SparseScheme::FITC, SparseScheme::FSA};

struct Data {
  MatrixXd X, Xu;
  VectorXd y;
};

Data sparse_problem(Eigen::Index d, Eigen::Index n, Eigen::Index m, CounterRng& rng) {
  Data D{random_matrix(d, n, rng, -3.0, 3.0), MatrixXd(), VectorXd(n)};
  D.Xu = random_matrix(d, m, rng, -3.0, 3.0);
  for (Eigen::Index i = 0; i < n; ++i) D.y[i] = std::sin(D.X.col(i).sum()) + 0.1 * rng.normal();
  return D;
}

// Dense evaluation of each scheme's Gaussian: the low-rank prior Q is
// formed explicitly, and the training covariance is inverted directly.
struct SparseOracle {
  double mll;
  VectorXd mean, var;
};

SparseOracle sparse_oracle(SparseScheme s, const Data& D, const MeanFunction& mf, const Kernel& k, double ln,
                           const BlockIndices& blocks, const MatrixXd& Xs, const std::vector<Eigen::Index>& tb) {
  const Eigen::Index n = D.X.cols(), ns = Xs.cols();
  const double s2 = std::exp(2 * ln);
  const MatrixXd Kuu = gram_matrix(k, D.Xu);
  const MatrixXd Kuu_inv = Kuu.inverse();
  const MatrixXd Kfu = cross_gram(k, D.X, D.Xu), Ksu = cross_gram(k, Xs, D.Xu);
  const MatrixXd Kff = gram_matrix(k, D.X), Ksf = cross_gram(k, Xs, D.X);
  const MatrixXd Q = Kfu * Kuu_inv * Kfu.transpose();
  const MatrixXd Qsf = Ksu * Kuu_inv * Kfu.transpose();
  MatrixXd C = Q + s2 * MatrixXd::Identity(n, n);
  MatrixXd cross = Qsf;  // covariance between test and training latents
  std::vector<Eigen::Index> block_of(static_cast<std::size_t>(n), 0);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (Eigen::Index i : blocks[b]) block_of[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(b);
  if (s == SparseScheme::FITC) C.diagonal() += (Kff - Q).diagonal();
  if (s == SparseScheme::FSA) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (block_of[i] == block_of[j]) C(i, j) += Kff(i, j) - Q(i, j);
    for (Eigen::Index t = 0; t < ns; ++t)
      for (Eigen::Index i = 0; i < n; ++i)
        if (block_of[i] == tb[t]) cross(t, i) = Ksf(t, i);
  }
  const MatrixXd Cinv = C.inverse();
  VectorXd yc = D.y - mean_eval(mf, D.X);
  SparseOracle o;
  o.mll = -0.5 * yc.dot(Cinv * yc) - 0.5 * std::log(C.determinant()) - 0.5 * n * std::log(2 * M_PI);
  o.mean = mean_eval(mf, Xs) + cross * Cinv * yc;
  const VectorXd prior =
      s == SparseScheme::SoR ? VectorXd((Ksu * Kuu_inv * Ksu.transpose()).diagonal()) : gram_diag(k, Xs);
  o.var = prior - (cross * Cinv * cross.transpose()).diagonal();
  return o;
}

MatrixXd grid(double lo, double hi, Eigen::Index n) {
  MatrixXd X(1, n);
  for (Eigen::Index i = 0; i < n; ++i) X(0, i) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return X;
}

}  // namespace

TEST(SparseSchemes, NamesRoundTrip) {
  for (SparseScheme s : kAllSchemes) EXPECT_EQ(parse_scheme(to_string(s)), s);
  EXPECT_EQ(parse_scheme("fitc"), SparseScheme::FITC);
  EXPECT_THROW(parse_scheme("vfe"), ConfigError);
}

TEST(SparseBlocks, NearestInducingPartition) {
  MatrixXd X(1, 6), Xu(1, 3);
  X << 0.0, 0.9, 1.0, 1.1, 2.0, 3.5;
  Xu << 0.0, 2.0, 10.0;
  const BlockIndices b = nearest_inducing_blocks(X, Xu);
  // x = 1.0 is equidistant from 0 and 2 and goes to the lower index; the
  // inducing point at 10 owns nothing and its block is dropped.
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0], (std::vector<Eigen::Index>{0, 1, 2}));
  EXPECT_EQ(b[1], (std::vector<Eigen::Index>{3, 4, 5}));
}

TEST(SparseFit, ConfigurationErrors) {
  CounterRng rng(301);
  const Data D = sparse_problem(1, 10, 3, rng);
  const Kernel k = kern::se_iso(0, 0);
  EXPECT_THROW(SparseGP(SparseScheme::FSA, D.X, D.Xu, D.y, mean::zero(), k, -1.0), ConfigError);
  EXPECT_THROW(SparseGP(SparseScheme::FSA, D.X, D.Xu, D.y, mean::zero(), k, -1.0, {{0, 1, 2, 3, 4}, {5, 6, 7, 8}}),
               ConfigError);
  EXPECT_THROW(
      SparseGP(SparseScheme::FSA, D.X, D.Xu, D.y, mean::zero(), k, -1.0, {{0, 1, 2, 3, 4}, {4, 5, 6, 7, 8, 9}}),
      ConfigError);
  EXPECT_THROW(SparseGP(SparseScheme::FSA, D.X, D.Xu, D.y, mean::zero(), k, -1.0, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {}}),
               ConfigError);
  EXPECT_THROW(SparseGP(SparseScheme::DTC, D.X, D.Xu, D.y, mean::zero(), k, -1.0, {{0}}), ConfigError);
  EXPECT_THROW(SparseGP(SparseScheme::DTC, D.X, random_matrix(1, 11, rng), D.y, mean::zero(), k, -1.0), ConfigError);
  EXPECT_THROW(SparseGP(SparseScheme::DTC, D.X, random_matrix(2, 3, rng), D.y, mean::zero(), k, -1.0), InputError);
}

TEST(SparseFit, MatchesDenseOracle) {
  CounterRng rng(302);
  for (int rep = 0; rep < 8; ++rep) {
    const Eigen::Index d = 1 + rep % 2, n = 15 + 5 * rep, m = 3 + rep;
    const Data D = sparse_problem(d, n, m, rng);
    const Kernel k = rep % 2 ? kern::se_ard(std::vector<double>(static_cast<std::size_t>(d), 0.2), 0.1)
                             : kern::matern_iso(MaternOrder::FiveHalves, 0.3, -0.2) + kern::rq_iso(0.5, -1.0, 0.0);
    const MeanFunction mf = mean::constant(0.3);
    const double ln = -1.5 + 0.1 * rep;
    const BlockIndices blocks = nearest_inducing_blocks(D.X, D.Xu);
    const MatrixXd Xs = random_matrix(d, 7, rng, -4.0, 4.0);
    for (SparseScheme s : kAllSchemes) {
      const SparseGP gp(s, D.X, D.Xu, D.y, mf, k, ln, s == SparseScheme::FSA ? blocks : BlockIndices{});
      std::vector<Eigen::Index> tb(7);
      for (Eigen::Index j = 0; j < 7; ++j) tb[j] = static_cast<Eigen::Index>(j % static_cast<Eigen::Index>(blocks.size()));
      const SparseOracle o = sparse_oracle(s, D, mf, k, ln, blocks, Xs, tb);
      EXPECT_NEAR(gp.log_marginal(), o.mll, 1e-9 * std::max(1.0, std::abs(o.mll))) << to_string(s);
      const Prediction p = s == SparseScheme::FSA ? gp.predict_f(Xs, tb) : gp.predict_f(Xs);
      EXPECT_LT((p.mean - o.mean).cwiseAbs().maxCoeff(), 1e-9) << to_string(s);
      EXPECT_LT((p.variance - o.var.cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-9) << to_string(s);
      const Prediction py = s == SparseScheme::FSA ? gp.predict_y(Xs, tb) : gp.predict_y(Xs);
      EXPECT_LT((py.variance - p.variance - VectorXd::Constant(7, std::exp(2 * ln))).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(SparseFit, DegenerateCasesRecoverExactGP) {
  CounterRng rng(303);
  const Eigen::Index n = 30;
  Data D{grid(-3.0, 3.0, n), MatrixXd(), VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) D.y[i] = std::sin(D.X(0, i)) + 0.1 * rng.normal();
  D.Xu = D.X;
  const Kernel k = kern::se_iso(-1.0, 0.0);
  const MeanFunction mf = mean::linear({0.2});
  const double ln = -1.0;
  const GPExact exact(D.X, D.y, mf, k, ln);
  const MatrixXd Xs = random_matrix(1, 9, rng, -4.0, 4.0);
  const Prediction pe = exact.predict_f(Xs);

  for (SparseScheme s : {SparseScheme::DTC, SparseScheme::FITC, SparseScheme::SoR}) {
    const SparseGP gp(s, D.X, D.Xu, D.y, mf, k, ln);
    EXPECT_NEAR(gp.log_marginal(), exact.log_marginal(), 1e-8) << to_string(s);
    const Prediction p = gp.predict_f(Xs);
    EXPECT_LT((p.mean - pe.mean).cwiseAbs().maxCoeff(), 1e-8) << to_string(s);
    // SoR keeps its degenerate prior variance at test points, so only the
    // other two schemes recover the exact variance.
    if (s != SparseScheme::SoR) EXPECT_LT((p.variance - pe.variance).cwiseAbs().maxCoeff(), 1e-8) << to_string(s);
  }

  // FSA with a single block is exact for any inducing set.
  CounterRng rng2(304);
  const MatrixXd Xu = random_matrix(1, 5, rng2, -3.0, 3.0);
  BlockIndices one(1);
  for (Eigen::Index i = 0; i < n; ++i) one[0].push_back(i);
  const SparseGP fsa(SparseScheme::FSA, D.X, Xu, D.y, mf, k, ln, one);
  EXPECT_NEAR(fsa.log_marginal(), exact.log_marginal(), 1e-8);
  const Prediction pf = fsa.predict_f(Xs);
  EXPECT_LT((pf.mean - pe.mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((pf.variance - pe.variance).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SparseGrad, MatchesFiniteDifferences) {
  CounterRng rng(305);
  int checked = 0;
  for (int rep = 0; rep < 4; ++rep) {
    const Data D = sparse_problem(2, 25, 5, rng);
    const BlockIndices blocks = nearest_inducing_blocks(D.X, D.Xu);
    const Kernel k = rep % 2 ? kern::se_ard({0.2, -0.1}, 0.3) : kern::matern_iso(MaternOrder::ThreeHalves, 0.3, 0.1) +
                                                                  kern::lin_ard({0.5, 0.2});
    for (SparseScheme s : kAllSchemes) {
      SparseGP gp(s, D.X, D.Xu, D.y, mean::constant(0.1) + mean::linear({0.2, -0.1}), k, -1.0,
                  s == SparseScheme::FSA ? blocks : BlockIndices{});
      const VectorXd th = gp.params();
      SparseGP probe = gp;
      const VectorXd fd = fd_gradient(
          [&](const VectorXd& t) {
            probe.set_params(t);
            return probe.log_marginal();
          },
          th);
      EXPECT_LT(max_rel_error(gp.grad_log_marginal(), fd), 1e-5) << to_string(s);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 16);
}

TEST(SparsePredict, FarFieldLimits) {
  CounterRng rng(306);
  const Data D = sparse_problem(1, 40, 6, rng);
  const BlockIndices blocks = nearest_inducing_blocks(D.X, D.Xu);
  MatrixXd Xs(1, 1);
  Xs << 200.0;
  const double sf2 = std::exp(2 * 0.4), s2 = std::exp(-2.0);
  for (SparseScheme s : kAllSchemes) {
    const SparseGP gp(s, D.X, D.Xu, D.y, mean::constant(0.5), kern::se_iso(0.0, 0.4), -1.0,
                      s == SparseScheme::FSA ? blocks : BlockIndices{});
    const Prediction p = gp.predict_f(Xs), py = gp.predict_y(Xs);
    EXPECT_NEAR(p.mean[0], 0.5, 1e-12) << to_string(s);
    const double expect = s == SparseScheme::SoR ? 0.0 : sf2;
    EXPECT_NEAR(p.variance[0], expect, 1e-12) << to_string(s);
    EXPECT_NEAR(py.variance[0], expect + s2, 1e-12) << to_string(s);
  }
}

TEST(SparsePredict, SoRIsMoreConfidentThanDTC) {
  CounterRng rng(307);
  const Eigen::Index n = 400;
  MatrixXd X = random_matrix(1, n, rng, 0.0, 10.0);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = std::abs(X(0, i) - 5) * std::cos(2 * X(0, i)) + 0.3 * rng.normal();
  const MatrixXd Xu = grid(1.0, 9.0, 12);
  const SparseGP sor(SparseScheme::SoR, X, Xu, y, mean::zero(), kern::se_iso(0.0, 0.0), -1.0);
  const SparseGP dtc(SparseScheme::DTC, X, Xu, y, mean::zero(), kern::se_iso(0.0, 0.0), -1.0);
  const MatrixXd Xs = grid(-2.0, 12.0, 57);
  const VectorXd vs = sor.predict_f(Xs).variance, vd = dtc.predict_f(Xs).variance;
  EXPECT_TRUE((vs.array() <= vd.array() + 1e-12).all());
  // Same mean: both share the projected training conditional.
  EXPECT_LT((sor.predict_f(Xs).mean - dtc.predict_f(Xs).mean).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SparseMemory, FactorsStayLowRank) {
  CounterRng rng(308);
  const Eigen::Index n = 5000, m = 12;
  MatrixXd X = random_matrix(1, n, rng, 0.0, 10.0);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = std::sin(X(0, i));
  const MatrixXd Xu = grid(0.0, 10.0, m);
  const std::size_t exact_bytes = sizeof(double) * static_cast<std::size_t>(n * n + n);
  for (SparseScheme s : {SparseScheme::SoR, SparseScheme::DTC, SparseScheme::FITC}) {
    const SparseGP gp(s, X, Xu, y, mean::zero(), kern::se_iso(0.0, 0.0), -1.0);
    EXPECT_LT(gp.factor_memory_bytes(), 10 * exact_bytes / 50) << to_string(s);
    // O(nm + m^2): a small constant number of n x m arrays.
    EXPECT_LT(gp.factor_memory_bytes(), sizeof(double) * static_cast<std::size_t>(4 * n * m + 4 * m * m + 8 * n));
  }
}

TEST(SparseParams, RoundTripAndNames) {
  CounterRng rng(309);
  const Data D = sparse_problem(1, 12, 4, rng);
  SparseGP gp(SparseScheme::FITC, D.X, D.Xu, D.y, mean::constant(0.0), kern::se_iso(0.0, 0.0), -1.0);
  VectorXd th(4);
  th << -0.7, 0.2, 0.1, -0.3;
  gp.set_params(th);
  EXPECT_EQ(gp.params(), th);
  const SparseGP fresh(SparseScheme::FITC, D.X, D.Xu, D.y, mean::constant(0.2), kern::se_iso(0.1, -0.3), -0.7);
  EXPECT_NEAR(gp.log_marginal(), fresh.log_marginal(), 1e-12);
  EXPECT_EQ(gp.param_names().front(), "Noise");
  EXPECT_THROW(gp.set_params(VectorXd::Zero(2)), ConfigError);
}
