#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace gpkit;
using namespace gpkit::testing;

namespace {

struct Case {
  Likelihood lik;
  std::function<double(CounterRng&)> draw_y;
};

std::vector<Case> all_kinds() {
  return {
      {lik::bernoulli(), [](CounterRng& r) { return r.uniform() < 0.5 ? 0.0 : 1.0; }},
      {lik::binomial(7), [](CounterRng& r) { return std::floor(8 * r.uniform()); }},
      {lik::exponential(), [](CounterRng& r) { return 0.1 + 3 * r.uniform(); }},
      {lik::gaussian(-0.3), [](CounterRng& r) { return 4 * r.uniform() - 2; }},
      {lik::poisson(), [](CounterRng& r) { return std::floor(6 * r.uniform()); }},
      {lik::student_t(3.0, 0.2), [](CounterRng& r) { return 4 * r.uniform() - 2; }},
  };
}

}  // namespace

TEST(LikelihoodDensity, ClosedForms) {
  EXPECT_NEAR(log_density(lik::bernoulli(), 1.0, 0.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(log_density(lik::poisson(), 0.0, 0.0), -1.0, 1e-15);
  EXPECT_NEAR(log_density(lik::gaussian(0.0), 0.7, 0.7), -0.5 * std::log(2 * M_PI), 1e-15);
  // Standard binomial coefficient: C(5,2) p^2 (1-p)^3 at p = logistic(0.4)
  const double p = 1.0 / (1.0 + std::exp(-0.4));
  EXPECT_NEAR(log_density(lik::binomial(5), 2.0, 0.4), std::log(10.0 * p * p * std::pow(1 - p, 3)), 1e-13);
  // Student-t density against its textbook normalizer for nu = 3
  const double s = std::exp(0.2), r = (1.3 - 0.4) / s;
  const double dens = std::tgamma(2.0) / (std::tgamma(1.5) * std::sqrt(M_PI * 3) * s) * std::pow(1 + r * r / 3, -2.0);
  EXPECT_NEAR(log_density(lik::student_t(3.0, 0.2), 1.3, 0.4), std::log(dens), 1e-13);
  // Exponential with rate exp(-f)
  EXPECT_NEAR(log_density(lik::exponential(), 2.0, 0.5), -0.5 - 2.0 * std::exp(-0.5), 1e-15);
}

TEST(LikelihoodDensity, StableProbitTails) {
  const double v = log_density(lik::bernoulli(), 1.0, -40.0);
  EXPECT_TRUE(std::isfinite(v));
  // log Phi(z) ~ log phi(z) - log(-z) for large negative z
  EXPECT_NEAR(v, -0.5 * 1600 - 0.5 * std::log(2 * M_PI) - std::log(40.0), 1e-3);
  EXPECT_NEAR(log_density(lik::bernoulli(), 1.0, 40.0), 0.0, 1e-300);
  EXPECT_TRUE(std::isfinite(dlog_density_df(lik::bernoulli(), 1.0, -40.0)));
}

TEST(LikelihoodDensity, InvalidResponses) {
  EXPECT_THROW(log_density(lik::bernoulli(), 0.5, 0.0), InputError);
  EXPECT_THROW(log_density(lik::binomial(3), 4.0, 0.0), InputError);
  EXPECT_THROW(log_density(lik::binomial(3), 1.5, 0.0), InputError);
  EXPECT_THROW(log_density(lik::exponential(), 0.0, 0.0), InputError);
  EXPECT_THROW(log_density(lik::poisson(), -1.0, 0.0), InputError);
  EXPECT_THROW(log_density(lik::poisson(), 2.5, 0.0), InputError);
  EXPECT_THROW(log_density(lik::gaussian(0.0), NAN, 0.0), InputError);
}

TEST(LikelihoodGrad, ClosedForms) {
  EXPECT_NEAR(dlog_density_df(lik::gaussian(std::log(2.0)), 1.0, 0.2), 0.8 / 4.0, 1e-15);
  EXPECT_NEAR(dlog_density_df(lik::bernoulli(), 1.0, 0.0), 2.0 * 0.3989422804014327, 1e-15);
  EXPECT_EQ(dlog_density_dtheta(lik::bernoulli(), 1.0, 0.3).size(), 0);
  EXPECT_EQ(dlog_density_dtheta(lik::poisson(), 1.0, 0.3).size(), 0);
}

TEST(LikelihoodGrad, AllKindsMatchFiniteDifferences) {
  CounterRng rng(7);
  for (auto& c : all_kinds()) {
    for (int rep = 0; rep < 20; ++rep) {
      const double y = c.draw_y(rng), f = 4 * rng.uniform() - 2;
      VectorXd f0(1);
      f0 << f;
      const VectorXd fd = fd_gradient([&](const VectorXd& t) { return log_density(c.lik, y, t[0]); }, f0);
      VectorXd an(1);
      an << dlog_density_df(c.lik, y, f);
      EXPECT_LT(max_rel_error(an, fd), 1e-6) << c.lik.type_name();

      if (c.lik.num_params() == 0) continue;
      Likelihood l = c.lik;
      const VectorXd th = l.params();
      const VectorXd fdt = fd_gradient(
          [&](const VectorXd& t) {
            l.set_params(t);
            return log_density(l, y, f);
          },
          th);
      l.set_params(th);
      EXPECT_LT(max_rel_error(dlog_density_dtheta(l, y, f), fdt), 1e-6) << c.lik.type_name();
    }
  }
}

TEST(LikelihoodProperties, DiscreteKindsNormalize) {
  for (double f : {-1.3, 0.0, 0.8}) {
    double sb = 0.0;
    for (double y : {0.0, 1.0}) sb += std::exp(log_density(lik::bernoulli(), y, f));
    EXPECT_NEAR(sb, 1.0, 1e-10);
    double sbin = 0.0;
    for (int y = 0; y <= 9; ++y) sbin += std::exp(log_density(lik::binomial(9), y, f));
    EXPECT_NEAR(sbin, 1.0, 1e-10);
    double sp = 0.0, tail = 1.0;
    for (int y = 0; tail > 1e-12 || y < 5; ++y) {
      tail = std::exp(log_density(lik::poisson(), y, f));
      sp += tail;
    }
    EXPECT_NEAR(sp, 1.0, 1e-10);
  }
}

TEST(GaussHermite, PolynomialExactness) {
  for (int n : {1, 2, 5, 10, 20, 40}) {
    const auto& rule = gauss_hermite(n);
    // E[Z^k] = (k-1)!! for even k, 0 for odd k.
    double dfact = 1.0;
    for (int k = 0; k <= 2 * n - 1; ++k) {
      if (k >= 2 && k % 2 == 0) dfact *= (k - 1);
      const double exact = (k % 2 == 0) ? dfact : 0.0;
      // Odd moments cancel large terms, so judge against the absolute sum.
      double q = 0.0, mag = 0.0;
      for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.weights[i] * std::pow(rule.nodes[i], k);
        q += t;
        mag += std::abs(t);
      }
      EXPECT_LE(std::abs(q - exact), 1e-12 * std::max(1.0, mag)) << "n=" << n << " k=" << k;
    }
  }
  EXPECT_THROW(gauss_hermite(0), ConfigError);
}

TEST(PredictiveMoments, GaussianIsExact) {
  const auto [m, v] = predictive_moments(lik::gaussian(0.0), 0.3, 0.5);
  EXPECT_DOUBLE_EQ(m, 0.3);
  EXPECT_DOUBLE_EQ(v, 1.5);
}

TEST(PredictiveMoments, BernoulliMatchesProbitIntegral) {
  EXPECT_NEAR(predictive_moments(lik::bernoulli(), 0.0, 1.0).first, 0.5, 1e-14);
  for (double mu = -5.0; mu <= 5.0; mu += 0.5)
    for (double v = 0.0; v <= 1.0; v += 0.125) {
      const double oracle = math::normal_cdf(mu / std::sqrt(1.0 + v));
      EXPECT_NEAR(predictive_moments(lik::bernoulli(), mu, v, 20).first, oracle, 1e-8) << mu << " " << v;
    }
}

TEST(PredictiveMoments, QuadratureErrorGrowsWithVariance) {
  // Order 20 is not uniformly accurate once the latent variance is large:
  // the probit integrand's kink-like transition is under-resolved.
  double worst_small = 0.0, worst_large = 0.0;
  for (double mu = -5.0; mu <= 5.0; mu += 0.25) {
    for (double v : {0.5, 1.0, 2.0}) {
      const double e = std::abs(predictive_moments(lik::bernoulli(), mu, v, 20).first -
                                math::normal_cdf(mu / std::sqrt(1.0 + v)));
      worst_small = std::max(worst_small, e);
    }
    const double e = std::abs(predictive_moments(lik::bernoulli(), mu, 10.0, 20).first -
                              math::normal_cdf(mu / std::sqrt(11.0)));
    worst_large = std::max(worst_large, e);
    // Higher order recovers accuracy at large variance.
    EXPECT_NEAR(predictive_moments(lik::bernoulli(), mu, 10.0, 200).first, math::normal_cdf(mu / std::sqrt(11.0)),
                1e-6);
  }
  EXPECT_LT(worst_small, 1e-7);
  EXPECT_GT(worst_large, worst_small);
}

TEST(PredictiveMoments, PoissonDegenerateVariance) {
  EXPECT_NEAR(predictive_moments(lik::poisson(), 1.0, 0.0).first, std::exp(1.0), 1e-14);
  // Lognormal mean exp(mu + v/2)
  EXPECT_NEAR(predictive_moments(lik::poisson(), 0.2, 0.3).first, std::exp(0.35), 1e-10);
}
