#pragma once

// Umbrella header for the library.

#include "gpkit/core.hpp"
#include "gpkit/random.hpp"
#include "gpkit/priors.hpp"
#include "gpkit/kernels.hpp"
#include "gpkit/means.hpp"
#include "gpkit/gauss_hermite.hpp"
#include "gpkit/likelihoods.hpp"
#include "gpkit/cholesky.hpp"
#include "gpkit/gp_exact.hpp"
#include "gpkit/gp_mc.hpp"
#include "gpkit/hmc.hpp"
#include "gpkit/sparse.hpp"
#include "gpkit/optimize.hpp"
