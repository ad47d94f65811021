#pragma once

// Kernel, mean and likelihood expressions the parser must accept. The
// kernel list covers the constructor syntax used in the documentation
// examples, the kernels shown in the composition figure, every row of the
// benchmark table, and one entry per kernel family (Iso and ARD forms).

#include <string>
#include <vector>

namespace gpkit::testing {

inline const std::vector<std::string>& kernel_corpus() {
  static const std::vector<std::string> c{
      // Documentation listings.
      "SE(0.0,0.0)",
      "Matern(5/2,[0.0,0.0],0.0) + SE(0.0,0.0)",
      "Matern(5/2,0.0,0.0)",
      "Matern(3/2,zeros(5),0.0)",
      "SE(4.0,4.0) + Periodic(0.0,1.0,0.0) * SE(4.0,0.0) + RQ(0.0,0.0,-1.0) + SE(-2.0,-2.0)",
      "Matern(3/2,0.0,0.0)",
      "SEArd([0., 0.], 5.)",
      "SEArd([0.], 5.)",
      // Composition figure.
      "SE(0.5,0.0)",
      "Periodic(0.5,0.0,1.0)",
      "Lin(0.0)",
      "SE(0.5,0.0) * Lin(0.0) + SE(0.5,0.0) * Periodic(0.5,0.0,1.0)",
      "Periodic(0.5,0.0,1.0) * Lin(0.0)",
      "SE(0.5,0.0) + Periodic(0.5,0.0,1.0)",
      // Benchmark table.
      "fix(SE(0.0,0.0), σ)",
      "Matern(1/2,0.0,0.0)",
      "Masked(SE(0.0,0.0), [1])",
      "RQ(0.0,0.0,0.0)",
      "SE(0.0,0.0) + RQ(0.0,0.0,0.0)",
      "Masked(SE(0.0,0.0), [1]) + Masked(RQ(0.0,0.0,0.0), collect(2:10))",
      "(SE(0.0,0.0) + SE(0.5,0.5)) * RQ(0.0,0.0,0.0)",
      "SE(0.0,0.0) * RQ(0.0,0.0,0.0)",
      // One per family.
      "Const(0.3)",
      "Noise(-1.0)",
      "Lin([0.1,-0.2])",
      "LinArd([0.0,0.0,0.0])",
      "Poly(0.0,0.0,2)",
      "Matern(1/2,[0.1,0.2],0.0)",
      "Matern(3/2,[0.1,0.2],0.0)",
      "RQ([0.1,0.2],0.0,0.5)",
      "SEIso(0.2,-0.1)",
      "Periodic(0.0,0.0,0.5)",
      "fix(RQ(0.0,0.0,0.0), [1,3])",
      "fix(SE(0.0,0.0) + Periodic(0.5,0.0,1.0), σ, ℓ)",
      "masked(Lin(0.0), [2])",
      "Const(1e-3) * (Lin(-0.5) + Noise(+2))",
  };
  return c;
}

inline const std::vector<std::string>& mean_corpus() {
  static const std::vector<std::string> c{
      "MeanZero()",        "MeanConst(0.)",         "MeanLin([0.5,-1.0])",
      "MeanLin(2.0)",      "MeanPoly([1.0],[0.5])", "MeanConst(1.0) + MeanLin([0.5]) * MeanConst(2.0)",
  };
  return c;
}

inline const std::vector<std::string>& likelihood_corpus() {
  static const std::vector<std::string> c{
      "BernLik()", "PoisLik()",   "BinLik(10)",       "ExpLik()",     "GaussLik(-1.0)", "StuTLik(3.0,0.0)",
      "Bernoulli()", "Poisson()", "Binomial(5)", "Exponential()", "Gaussian(0.5)",  "StudentT(4.0,-0.5)",
  };
  return c;
}

}  // namespace gpkit::testing
