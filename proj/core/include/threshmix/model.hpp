#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "threshmix/dpmg.hpp"
#include "threshmix/gpd_tail.hpp"

namespace threshmix {

/// Proposal-variance policy. Unset variances are seeded from the pilot
/// maximum-likelihood fit (inverse Hessian for sigma/xi, prior-plus-likelihood
/// curvature for u). kAuto switches to burn-in adaptation targeting 0.3
/// acceptance only when the pilot fails; adapted scales freeze at the end of
/// burn-in.
struct ProposalConfig {
  std::optional<double> v_xi;
  std::optional<double> v_sigma;
  std::optional<double> v_u;
  enum class Adapt { kAuto, kAlways, kNever };
  Adapt adapt = Adapt::kAuto;
};

struct FitConfig {
  int iterations = 15000;  // total sweeps, burn-in included
  int burn_in = 5000;
  int thin = 1;
  std::uint64_t seed = 1;
  BaseMeasureParams base;                 // alpha, hyperpriors, initial a_lambda/a_gamma
  std::optional<TailPriors> tail_priors;  // unset: empirical rule from the data
  double u_floor_quantile = 0.5;          // truncates the u prior at this data quantile
  ProposalConfig proposal;
};

/// One retained draw: tail parameters, the urn configuration snapshot, the
/// base-measure state and the joint log posterior at that sweep.
struct PosteriorSample {
  TailParams tail;
  ClusterState clusters;
  BaseMeasureParams base;
  double log_post = 0.0;
};

struct AcceptanceRates {
  double xi = 0.0;
  double sigma = 0.0;
  double u = 0.0;
  double shape_step = 0.0;  // per-cluster shape Metropolis step
};

struct Chain {
  std::vector<PosteriorSample> samples;
  std::vector<int> sweep_index;  // absolute sweep of each retained sample
  FitConfig config;
  TailPriors priors;       // priors actually used
  ProposalTuning tuning;   // proposal scales actually used (post freeze)
  std::string data_digest;
  AcceptanceRates acceptance;  // measured after burn-in
  double wall_ms = 0.0;
};

/// Linear-interpolation (type 7) quantile of an already sorted sample.
double empirical_quantile(std::span<const double> sorted, double p);

/// Empirical threshold prior: mean at the 90% quantile, variance solved so
/// the central 99% prior mass spans the 50%-99% quantile range of the data.
TailPriors default_tail_priors(std::span<const double> data);

/// Run the full sampler: per sweep, every bulk membership is resampled, the
/// cluster parameters are remixed, the base measure is updated, then xi,
/// sigma and u take one Metropolis-Hastings step each. Deterministic given
/// the seed.
Chain fit(std::span<const double> data, const FitConfig& config);

/// Spliced model density/CDF under one retained draw: the urn-predictive
/// mixture below u, the GPD weighted by 1 - H(u) above it. The CDF is
/// continuous at u by construction.
double model_logpdf(double x, const PosteriorSample& sample);
double model_cdf(double x, const PosteriorSample& sample);

/// p-quantile of one retained draw: bisection on the mixture CDF when
/// p <= H(u), otherwise the closed-form GPD inverse at the tail-renormalized
/// probability (p - H(u)) / (1 - H(u)).
double quantile(double p, const PosteriorSample& sample);

/// quantile(p, s) for every retained sample.
std::vector<double> quantile_posterior(double p, const Chain& chain);

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  double q2_5 = 0.0;
  double q50 = 0.0;
  double q97_5 = 0.0;
};

SummaryStats summarize(std::vector<double> values);

/// Equal-tailed interval at the given level.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};
Interval credible_interval(std::vector<double> values, double level = 0.95);

/// Scalar trace of one parameter: u, sigma, xi, n_star, a_lambda, a_gamma,
/// or log_post.
std::vector<double> chain_parameter(const Chain& chain, std::string_view parameter);
SummaryStats chain_summary(const Chain& chain, std::string_view parameter);

struct DensityBand {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Pointwise posterior predictive density: per-sample model density at each
/// grid point, summarized by mean and an equal-tailed band.
DensityBand predictive_density_grid(const Chain& chain, std::span<const double> grid,
                                    double level = 0.95);

}  // namespace threshmix
