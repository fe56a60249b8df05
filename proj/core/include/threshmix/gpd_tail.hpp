#pragma once

#include <span>

#include "threshmix/distributions.hpp"
#include "threshmix/dpmg.hpp"
#include "threshmix/rng.hpp"

namespace threshmix {

/// Normal prior on the threshold u, optionally truncated below. The floor
/// (default: none) pins the support away from the bottom of the data so the
/// bulk can never be emptied by threshold moves; fits place it at a low
/// empirical quantile, where the prior carries almost no mass anyway.
struct TailPriors {
  double m_u = 0.0;
  double var_u = 1.0;
  double floor = -std::numeric_limits<double>::infinity();
};

/// Random-walk proposal variances for the three tail updates plus the sample
/// maximum, which sets the truncation bounds that keep every observation
/// inside GPD support. sample_max must equal the max of the loaded data
/// (NaN when fitting priors only, making all bounds vacuous).
struct ProposalTuning {
  double v_xi = 0.01;
  double v_sigma = 1.0;
  double v_u = 1.0;
  double sample_max = std::numeric_limits<double>::quiet_NaN();
  // Scale proposals are kept above this support floor (0 = none). Fits pin
  // it far below the data scale; it only exists so an empty-tail transient
  // cannot random-walk sigma into denormals under the improper prior.
  double sigma_floor = 0.0;
};

/// log p(sigma, xi) = -log(sigma) - log(1+xi) - 0.5*log(1+2*xi), up to a
/// constant; supported on sigma > 0, xi > -0.5.
double jeffreys_logprior(double sigma, double xi);

/// Full joint log posterior: bulk points score the urn-predictive mixture,
/// tail points score log(1-H(u)) plus the GPD density, plus the normal prior
/// on u and the Jeffreys prior on (sigma, xi). Returns -inf instead of
/// throwing whenever a support constraint fails (xi <= -0.5, sigma <= 0, or
/// a tail point beyond the xi < 0 endpoint).
double joint_log_posterior(const TailParams& tail, const ClusterState& state,
                           const BaseMeasureParams& bm, const TailPriors& priors,
                           std::span<const double> data);

/// Log acceptance probabilities for the three Metropolis-Hastings moves
/// (exposed so the ratios can be checked against brute-force posterior
/// evaluation). Each includes the proposal-asymmetry correction.
double xi_log_acceptance(double xi_prop, const TailParams& cur, const ProposalTuning& tuning,
                         const ClusterState& state, const BaseMeasureParams& bm,
                         const TailPriors& priors, std::span<const double> data);
double sigma_log_acceptance(double sigma_prop, const TailParams& cur,
                            const ProposalTuning& tuning, const ClusterState& state,
                            const BaseMeasureParams& bm, const TailPriors& priors,
                            std::span<const double> data);

/// Evaluation of one threshold proposal. Observations crossing u are scored
/// by sequential urn predictives with their memberships collapsed: the
/// conjugate identity g0(theta)k(x;theta) = m(x) * posterior(theta|x) makes
/// every seating-proposal factor cancel, so non-crossing bulk terms drop out
/// of the ratio entirely. log_target_ratio excludes the proposal-density
/// correction (the caller adds its own); state_after carries the proposal's
/// repartitioned urn (joiners seated by urn draws, leavers detached) and is
/// committed only on acceptance.
struct UMoveEval {
  double log_target_ratio = 0.0;
  ClusterState state_after;
  bool crossed = false;
};
UMoveEval evaluate_u_move(double u_prop, const TailParams& cur, const ClusterState& state,
                          const BaseMeasureParams& bm, const TailPriors& priors,
                          std::span<const double> data, Rng& rng);

struct MhStepResult {
  TailParams tail;
  bool accepted = false;
};

/// xi* ~ N(xi, V_xi) truncated to (-sigma/(M-u), inf); accept with the
/// posterior ratio times the truncated-normal normalization correction, both
/// Phi factors evaluated at the current-iteration truncation bound.
MhStepResult mh_update_xi(const TailParams& cur, const ProposalTuning& tuning,
                          const ClusterState& state, const BaseMeasureParams& bm,
                          const TailPriors& priors, std::span<const double> data, Rng& rng);

/// For xi >= 0 proposes sigma* ~ Gamma(sigma^2/V, sigma/V) (mean sigma,
/// variance V_sigma) with the gamma Hastings ratio; for xi < 0 proposes from
/// N(sigma, V) truncated to (-xi*(M-u), inf) with the Phi correction.
MhStepResult mh_update_sigma(const TailParams& cur, const ProposalTuning& tuning,
                             const ClusterState& state, const BaseMeasureParams& bm,
                             const TailPriors& priors, std::span<const double> data, Rng& rng);

struct UStepResult {
  TailParams tail;
  bool accepted = false;
  bool repartitioned = false;
};

/// u* ~ N(u, V_u) truncated to (a, inf) with a = min(data) for xi >= 0 and
/// additionally a >= M + sigma/xi for xi < 0. On acceptance the urn state is
/// repartitioned: observations entering the bulk get a membership by one urn
/// draw, observations leaving it are detached.
UStepResult mh_update_u(const TailParams& cur, const ProposalTuning& tuning,
                        ClusterState& state, const BaseMeasureParams& bm,
                        const TailPriors& priors, std::span<const double> data, Rng& rng);

/// Independence counterpart of mh_update_u proposing u* from the (truncated)
/// threshold prior itself; the prior factors cancel, leaving the collapsed
/// likelihood ratio. Jumps directly between well-separated bulk/tail splits
/// that the random walk crosses only slowly.
UStepResult mh_update_u_prior(const TailParams& cur, ClusterState& state,
                              const BaseMeasureParams& bm, const TailPriors& priors,
                              std::span<const double> data, Rng& rng);

/// Maximum-likelihood pilot fit of (sigma, xi) to the excesses over a fixed
/// threshold, used to seed the proposal variances from the inverse Hessian.
struct GpdPilot {
  double sigma = 0.0;
  double xi = 0.0;
  double v_sigma = 0.0;
  double v_xi = 0.0;
  bool ok = false;
};
GpdPilot gpd_pilot_fit(std::span<const double> excesses);

}  // namespace threshmix
