#pragma once

#include <limits>

#include "threshmix/rng.hpp"

namespace threshmix {

/// Gamma density parameters in shape/rate form: the density is
///   rate^shape / Gamma(shape) * x^(shape-1) * exp(-rate*x),  x > 0,
/// i.e. shape is the exponent of x and rate multiplies x in the exponential.
struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;
};

/// Generalized Pareto parameters: threshold u, scale sigma > 0, shape xi.
/// Support is x >= u for xi >= 0 and u <= x < u - sigma/xi for xi < 0.
struct TailParams {
  double u = 0.0;
  double sigma = 1.0;
  double xi = 0.0;
};

/// One-sided truncated normal: N(mean, variance) conditioned on x > lower.
/// lower may be -infinity, recovering the plain normal.
struct TruncatedNormalSpec {
  double mean = 0.0;
  double variance = 1.0;
  double lower = -std::numeric_limits<double>::infinity();
};

/// |xi| below this evaluates GPD expressions on the xi -> 0 (exponential)
/// branch; both branches agree to ~1e-8 at the switch.
inline constexpr double kGpdXiZeroTol = 1e-8;

double gamma_logpdf(double x, const GammaParams& p);

/// Regularized lower incomplete gamma P(shape, rate*x); series/continued
/// fraction split as in AS 239 / Numerical Recipes.
double gamma_cdf(double x, const GammaParams& p);

/// Inverse of gamma_cdf by bracketed bisection.
double gamma_quantile(double p, const GammaParams& params);

double gpd_logpdf(double x, const TailParams& t);
double gpd_cdf(double x, const TailParams& t);
double gpd_quantile(double p, const TailParams& t);

/// u - sigma/xi for xi < 0, +infinity otherwise.
double gpd_upper_endpoint(const TailParams& t);

double std_normal_cdf(double z);

/// log(Phi(z)) with an asymptotic expansion for z << 0 where Phi underflows.
double log_std_normal_cdf(double z);

double sample_truncated_normal(const TruncatedNormalSpec& spec, Rng& rng);

/// Marsaglia-Tsang squeeze for shape >= 1, boosted from shape+1 below.
double sample_gamma(const GammaParams& p, Rng& rng);

double sample_exponential(double rate, Rng& rng);

}  // namespace threshmix
