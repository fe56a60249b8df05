#include "threshmix/gpd_tail.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace threshmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * M_PI * variance) - 0.5 * d * d / variance;
}

// Truncated-normal Hastings correction for a one-sided bound shared by the
// forward and reverse moves: log Phi((cur-lower)/sd) - log Phi((prop-lower)/sd).
double truncnorm_log_correction(double cur, double prop, double lower, double sd) {
  if (lower == kNegInf) return 0.0;
  return log_std_normal_cdf((cur - lower) / sd) - log_std_normal_cdf((prop - lower) / sd);
}

// Lower truncation for xi moves: xi > -sigma/(M-u) whenever the sample
// maximum sits above the threshold; vacuous otherwise.
double xi_lower_bound(const TailParams& cur, double sample_max) {
  if (std::isfinite(sample_max) && sample_max > cur.u) {
    return -cur.sigma / (sample_max - cur.u);
  }
  return kNegInf;
}

// Lower truncation for sigma moves on the xi < 0 branch: sigma > -xi*(M-u),
// floored by the tuning's support floor.
double sigma_lower_bound(const TailParams& cur, const ProposalTuning& tuning) {
  double bound = tuning.sigma_floor;
  if (std::isfinite(tuning.sample_max) && tuning.sample_max > cur.u && cur.xi < 0.0) {
    bound = std::max(bound, -cur.xi * (tuning.sample_max - cur.u));
  }
  return bound;
}

// Lower truncation for u moves: the prior floor and min(data) keep the bulk
// nonempty; for xi < 0, M + sigma/xi additionally keeps the sample maximum
// inside support.
double u_lower_bound(const TailParams& cur, const TailPriors& priors,
                     std::span<const double> data) {
  if (data.empty()) return priors.floor;
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  double bound = std::max(*lo, priors.floor);
  if (cur.xi < 0.0) {
    bound = std::max(bound, *hi + cur.sigma / cur.xi);
  }
  return bound;
}

// Sum of GPD log densities over the tail set {x > u}, or -inf if any tail
// point falls outside support.
double tail_gpd_sum(const TailParams& t, std::span<const double> data) {
  const double endpoint = gpd_upper_endpoint(t);
  double sum = 0.0;
  for (double x : data) {
    if (x <= t.u) continue;
    if (x >= endpoint) return kNegInf;
    sum += gpd_logpdf(x, t);
  }
  return sum;
}

bool tail_in_prior_support(const TailParams& t) {
  return t.sigma > 0.0 && t.xi > -0.5;
}

}  // namespace

double jeffreys_logprior(double sigma, double xi) {
  if (!(sigma > 0.0) || !(xi > -0.5)) {
    throw std::domain_error("jeffreys_logprior: requires sigma > 0 and xi > -0.5");
  }
  return -std::log(sigma) - std::log1p(xi) - 0.5 * std::log1p(2.0 * xi);
}

double joint_log_posterior(const TailParams& tail, const ClusterState& state,
                           const BaseMeasureParams& bm, const TailPriors& priors,
                           std::span<const double> data) {
  if (!tail_in_prior_support(tail)) return kNegInf;
  if (tail.u < priors.floor) return kNegInf;

  const double endpoint = gpd_upper_endpoint(tail);
  const MixturePredictive mix(state, bm);

  double lp = 0.0;
  int n_tail = 0;
  for (double x : data) {
    if (x <= tail.u) {
      lp += mix.logpdf(x);
    } else {
      if (x >= endpoint) return kNegInf;
      lp += gpd_logpdf(x, tail);
      ++n_tail;
    }
  }
  if (n_tail > 0) {
    const double h_at_u = tail.u > 0.0 ? mix.cdf(tail.u) : 0.0;
    if (h_at_u >= 1.0) return kNegInf;
    lp += static_cast<double>(n_tail) * std::log1p(-h_at_u);
  }
  lp += log_normal_pdf(tail.u, priors.m_u, priors.var_u);
  lp += jeffreys_logprior(tail.sigma, tail.xi);
  return lp;
}

double xi_log_acceptance(double xi_prop, const TailParams& cur, const ProposalTuning& tuning,
                         const ClusterState& state, const BaseMeasureParams& bm,
                         const TailPriors& priors, std::span<const double> data) {
  (void)state;
  (void)bm;
  (void)priors;
  TailParams prop = cur;
  prop.xi = xi_prop;
  if (!tail_in_prior_support(prop)) return kNegInf;

  // Only the tail densities and the Jeffreys prior move with xi; the bulk
  // sum, H(u) and the u prior cancel in the ratio.
  const double tail_prop = tail_gpd_sum(prop, data);
  if (tail_prop == kNegInf) return kNegInf;
  const double tail_cur = tail_gpd_sum(cur, data);

  const double lower = xi_lower_bound(cur, tuning.sample_max);
  return tail_prop - tail_cur + jeffreys_logprior(prop.sigma, prop.xi) -
         jeffreys_logprior(cur.sigma, cur.xi) +
         truncnorm_log_correction(cur.xi, xi_prop, lower, std::sqrt(tuning.v_xi));
}

double sigma_log_acceptance(double sigma_prop, const TailParams& cur,
                            const ProposalTuning& tuning, const ClusterState& state,
                            const BaseMeasureParams& bm, const TailPriors& priors,
                            std::span<const double> data) {
  (void)state;
  (void)bm;
  (void)priors;
  TailParams prop = cur;
  prop.sigma = sigma_prop;
  if (!tail_in_prior_support(prop) || sigma_prop < tuning.sigma_floor) return kNegInf;

  const double tail_prop = tail_gpd_sum(prop, data);
  if (tail_prop == kNegInf) return kNegInf;
  const double tail_cur = tail_gpd_sum(cur, data);

  double correction;
  if (cur.xi >= 0.0) {
    // Gamma proposal with mean sigma and variance V_sigma.
    const GammaParams fwd{cur.sigma * cur.sigma / tuning.v_sigma, cur.sigma / tuning.v_sigma};
    const GammaParams rev{sigma_prop * sigma_prop / tuning.v_sigma, sigma_prop / tuning.v_sigma};
    correction = gamma_logpdf(cur.sigma, rev) - gamma_logpdf(sigma_prop, fwd);
  } else {
    const double lower = sigma_lower_bound(cur, tuning);
    correction = truncnorm_log_correction(cur.sigma, sigma_prop, lower, std::sqrt(tuning.v_sigma));
  }
  return tail_prop - tail_cur + jeffreys_logprior(prop.sigma, prop.xi) -
         jeffreys_logprior(cur.sigma, cur.xi) + correction;
}

namespace {

// Tail-side log terms for a given threshold and urn configuration:
// |B| * log(1 - H(u)) + sum of GPD log densities over B. -inf on any
// support failure.
double tail_side_terms(const TailParams& t, const ClusterState& state,
                       const BaseMeasureParams& bm, std::span<const double> data) {
  const double gpd_sum = tail_gpd_sum(t, data);
  if (gpd_sum == kNegInf) return kNegInf;
  int n_tail = 0;
  for (double x : data) {
    if (x > t.u) ++n_tail;
  }
  if (n_tail == 0) return 0.0;
  const double h_at_u = t.u > 0.0 ? MixturePredictive(state, bm).cdf(t.u) : 0.0;
  if (h_at_u >= 1.0) return kNegInf;
  return static_cast<double>(n_tail) * std::log1p(-h_at_u) + gpd_sum;
}

}  // namespace

UMoveEval evaluate_u_move(double u_prop, const TailParams& cur, const ClusterState& state,
                          const BaseMeasureParams& bm, const TailPriors& priors,
                          std::span<const double> data, Rng& rng) {
  UMoveEval eval;
  eval.state_after = state;
  if (u_prop < priors.floor) {
    eval.log_target_ratio = kNegInf;
    return eval;
  }
  TailParams prop = cur;
  prop.u = u_prop;

  // Ladder of urn predictives over the crossing observations. Moving up,
  // each joiner is scored by the predictive before its seat is drawn; moving
  // down, each leaver is scored by the predictive after it is detached
  // (descending index order mirrors the ascending add order exactly).
  double cross_log_pred = 0.0;
  if (u_prop > cur.u) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i] > cur.u && data[i] <= u_prop) {
        cross_log_pred += MixturePredictive(eval.state_after, bm).logpdf(data[i]);
        resample_membership(static_cast<int>(i), eval.state_after, bm, data, rng);
        eval.crossed = true;
      }
    }
  } else if (u_prop < cur.u) {
    for (std::size_t i = data.size(); i-- > 0;) {
      if (data[i] > u_prop && data[i] <= cur.u) {
        eval.state_after.remove_observation(static_cast<int>(i));
        cross_log_pred -= MixturePredictive(eval.state_after, bm).logpdf(data[i]);
        eval.crossed = true;
      }
    }
  }

  const double tail_prop = tail_side_terms(prop, eval.state_after, bm, data);
  if (tail_prop == kNegInf) {
    eval.log_target_ratio = kNegInf;
    return eval;
  }
  const double tail_cur = tail_side_terms(cur, state, bm, data);

  eval.log_target_ratio = tail_prop - tail_cur + cross_log_pred +
                          log_normal_pdf(u_prop, priors.m_u, priors.var_u) -
                          log_normal_pdf(cur.u, priors.m_u, priors.var_u);
  return eval;
}

MhStepResult mh_update_xi(const TailParams& cur, const ProposalTuning& tuning,
                          const ClusterState& state, const BaseMeasureParams& bm,
                          const TailPriors& priors, std::span<const double> data, Rng& rng) {
  const double lower = xi_lower_bound(cur, tuning.sample_max);
  const double prop = sample_truncated_normal({cur.xi, tuning.v_xi, lower}, rng);
  const double la = xi_log_acceptance(prop, cur, tuning, state, bm, priors, data);
  MhStepResult result{cur, false};
  if (std::log(rng.uniform01()) < la) {
    result.tail.xi = prop;
    result.accepted = true;
  }
  return result;
}

MhStepResult mh_update_sigma(const TailParams& cur, const ProposalTuning& tuning,
                             const ClusterState& state, const BaseMeasureParams& bm,
                             const TailPriors& priors, std::span<const double> data, Rng& rng) {
  double prop;
  if (cur.xi >= 0.0) {
    prop = sample_gamma({cur.sigma * cur.sigma / tuning.v_sigma, cur.sigma / tuning.v_sigma}, rng);
  } else {
    prop = sample_truncated_normal({cur.sigma, tuning.v_sigma, sigma_lower_bound(cur, tuning)}, rng);
  }
  const double la = sigma_log_acceptance(prop, cur, tuning, state, bm, priors, data);
  MhStepResult result{cur, false};
  if (std::log(rng.uniform01()) < la) {
    result.tail.sigma = prop;
    result.accepted = true;
  }
  return result;
}

UStepResult mh_update_u(const TailParams& cur, const ProposalTuning& tuning,
                        ClusterState& state, const BaseMeasureParams& bm,
                        const TailPriors& priors, std::span<const double> data, Rng& rng) {
  const double lower = u_lower_bound(cur, priors, data);
  const double prop = sample_truncated_normal({cur.u, tuning.v_u, lower}, rng);
  UMoveEval eval = evaluate_u_move(prop, cur, state, bm, priors, data, rng);
  const double log_accept =
      eval.log_target_ratio +
      truncnorm_log_correction(cur.u, prop, lower, std::sqrt(tuning.v_u));

  UStepResult result{cur, false, false};
  if (std::log(rng.uniform01()) < log_accept) {
    result.tail.u = prop;
    result.accepted = true;
    result.repartitioned = eval.crossed;
    state = std::move(eval.state_after);
  }
  return result;
}

UStepResult mh_update_u_prior(const TailParams& cur, ClusterState& state,
                              const BaseMeasureParams& bm, const TailPriors& priors,
                              std::span<const double> data, Rng& rng) {
  const double lower = u_lower_bound(cur, priors, data);
  const double prop = sample_truncated_normal({priors.m_u, priors.var_u, lower}, rng);
  UMoveEval eval = evaluate_u_move(prop, cur, state, bm, priors, data, rng);
  // Prior proposal: q(u) equals the prior up to the shared truncation
  // normalizer, so the prior terms inside the target ratio cancel with the
  // proposal correction, leaving the collapsed likelihood ratio.
  const double log_accept = eval.log_target_ratio +
                            log_normal_pdf(cur.u, priors.m_u, priors.var_u) -
                            log_normal_pdf(prop, priors.m_u, priors.var_u);

  UStepResult result{cur, false, false};
  if (std::log(rng.uniform01()) < log_accept) {
    result.tail.u = prop;
    result.accepted = true;
    result.repartitioned = eval.crossed;
    state = std::move(eval.state_after);
  }
  return result;
}

namespace {

// Negative GPD log likelihood of the excesses, +inf outside the admissible
// region (sigma > 0, xi > -0.5, all excesses below the xi < 0 endpoint).
double gpd_negloglik(double sigma, double xi, std::span<const double> excesses) {
  if (!(sigma > 1e-12) || !(xi > -0.5 + 1e-9) || xi > 5.0) return kInf;
  const TailParams t{0.0, sigma, xi};
  const double endpoint = gpd_upper_endpoint(t);
  double sum = 0.0;
  for (double y : excesses) {
    if (!(y > 0.0) || y >= endpoint) return kInf;
    sum -= gpd_logpdf(y, t);
  }
  return sum;
}

}  // namespace

GpdPilot gpd_pilot_fit(std::span<const double> excesses) {
  GpdPilot pilot;
  if (excesses.size() < 5) return pilot;

  double mean = 0.0;
  for (double y : excesses) mean += y;
  mean /= static_cast<double>(excesses.size());
  double var = 0.0;
  for (double y : excesses) var += (y - mean) * (y - mean);
  var /= static_cast<double>(excesses.size() - 1);
  if (!(var > 0.0)) return pilot;

  // Method-of-moments start.
  double xi0 = 0.5 * (1.0 - mean * mean / var);
  xi0 = std::clamp(xi0, -0.45, 0.9);
  double sigma0 = std::max(0.5 * mean * (mean * mean / var + 1.0), 1e-6);

  const auto f = [&](const std::array<double, 2>& p) {
    return gpd_negloglik(p[0], p[1], excesses);
  };

  // Nelder-Mead on (sigma, xi).
  std::array<std::array<double, 2>, 3> simplex{{{sigma0, xi0},
                                                {1.3 * sigma0, xi0},
                                                {sigma0, xi0 + 0.1}}};
  std::array<double, 3> fv{f(simplex[0]), f(simplex[1]), f(simplex[2])};
  for (int iter = 0; iter < 400; ++iter) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const auto& best = simplex[static_cast<std::size_t>(order[0])];
    const auto& mid = simplex[static_cast<std::size_t>(order[1])];
    auto& worst = simplex[static_cast<std::size_t>(order[2])];
    if (std::fabs(fv[order[2]] - fv[order[0]]) <
        1e-11 * (1.0 + std::fabs(fv[order[0]]))) {
      break;
    }
    const std::array<double, 2> centroid{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
    const auto point_at = [&](double t) {
      return std::array<double, 2>{centroid[0] + t * (worst[0] - centroid[0]),
                                   centroid[1] + t * (worst[1] - centroid[1])};
    };
    const auto reflect = point_at(-1.0);
    const double fr = f(reflect);
    if (fr < fv[order[0]]) {
      const auto expand = point_at(-2.0);
      const double fe = f(expand);
      if (fe < fr) {
        worst = expand;
        fv[order[2]] = fe;
      } else {
        worst = reflect;
        fv[order[2]] = fr;
      }
    } else if (fr < fv[order[1]]) {
      worst = reflect;
      fv[order[2]] = fr;
    } else {
      const auto contract = point_at(0.5);
      const double fc = f(contract);
      if (fc < fv[order[2]]) {
        worst = contract;
        fv[order[2]] = fc;
      } else {
        for (int v : {order[1], order[2]}) {
          auto& s = simplex[static_cast<std::size_t>(v)];
          s[0] = 0.5 * (s[0] + best[0]);
          s[1] = 0.5 * (s[1] + best[1]);
          fv[v] = f(s);
        }
      }
    }
  }

  int best_idx = 0;
  for (int v = 1; v < 3; ++v) {
    if (fv[v] < fv[best_idx]) best_idx = v;
  }
  const double sigma_hat = simplex[static_cast<std::size_t>(best_idx)][0];
  const double xi_hat = simplex[static_cast<std::size_t>(best_idx)][1];
  if (!std::isfinite(fv[best_idx])) return pilot;

  // Observed-information proposal variances from a central-difference Hessian.
  const double hs = 1e-4 * (1.0 + sigma_hat);
  const double hx = 1e-4 * (1.0 + std::fabs(xi_hat));
  const auto fe = [&](double s, double x) { return gpd_negloglik(s, x, excesses); };
  const double f0 = fe(sigma_hat, xi_hat);
  const double hss = (fe(sigma_hat + hs, xi_hat) - 2.0 * f0 + fe(sigma_hat - hs, xi_hat)) / (hs * hs);
  const double hxx = (fe(sigma_hat, xi_hat + hx) - 2.0 * f0 + fe(sigma_hat, xi_hat - hx)) / (hx * hx);
  const double hsx = (fe(sigma_hat + hs, xi_hat + hx) - fe(sigma_hat + hs, xi_hat - hx) -
                      fe(sigma_hat - hs, xi_hat + hx) + fe(sigma_hat - hs, xi_hat - hx)) /
                     (4.0 * hs * hx);
  const double det = hss * hxx - hsx * hsx;
  if (!std::isfinite(det) || det <= 0.0 || hss <= 0.0) return pilot;

  pilot.sigma = sigma_hat;
  pilot.xi = xi_hat;
  pilot.v_sigma = hxx / det;
  pilot.v_xi = hss / det;
  pilot.ok = std::isfinite(pilot.v_sigma) && pilot.v_sigma > 0.0 &&
             std::isfinite(pilot.v_xi) && pilot.v_xi > 0.0;
  return pilot;
}

}  // namespace threshmix
