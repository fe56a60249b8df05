#include "threshmix/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "threshmix/digest.hpp"

namespace threshmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_positive(double v, double lo, double hi) {
  return std::clamp(v, lo, hi);
}

struct AcceptCounter {
  long accepted = 0;
  long attempted = 0;
  double rate() const {
    return attempted > 0 ? static_cast<double>(accepted) / static_cast<double>(attempted) : 0.0;
  }
  void reset() { accepted = attempted = 0; }
};

}  // namespace

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) {
    throw std::invalid_argument("empirical_quantile: empty sample");
  }
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::domain_error("empirical_quantile: p must be in [0,1]");
  }
  const double h = p * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

TailPriors default_tail_priors(std::span<const double> data) {
  if (data.empty()) {
    throw std::invalid_argument("default_tail_priors: empty data");
  }
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const double q50 = empirical_quantile(sorted, 0.50);
  const double q90 = empirical_quantile(sorted, 0.90);
  const double q99 = empirical_quantile(sorted, 0.99);

  TailPriors priors;
  priors.m_u = q90;

  const double spread = q99 - q50;
  if (!(spread > 0.0)) {
    priors.var_u = std::max(q90 * q90 * 1e-4, 1e-12);
    return priors;
  }

  // Solve P(q50 <= U <= q99) = 0.99 for the prior sd; P is monotone
  // decreasing in sd, from 1 (sd -> 0, q90 interior) to 0.
  const auto mass = [&](double sd) {
    return std_normal_cdf((q99 - q90) / sd) - std_normal_cdf((q50 - q90) / sd);
  };
  double lo = 1e-9 * spread;
  double hi = spread;
  while (mass(hi) > 0.99) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > 0.99) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * hi) break;
  }
  const double sd = 0.5 * (lo + hi);
  priors.var_u = sd * sd;
  return priors;
}

Chain fit(std::span<const double> data, const FitConfig& config) {
  if (data.empty()) {
    throw std::invalid_argument("fit: data must be nonempty");
  }
  if (data.size() < 20) {
    throw std::invalid_argument("fit: need at least 20 observations");
  }
  for (double x : data) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("fit: observations must be positive and finite");
    }
  }
  if (config.iterations <= 0 || config.burn_in < 0 || config.burn_in >= config.iterations) {
    throw std::invalid_argument("fit: require 0 <= burn_in < iterations");
  }
  if (config.thin < 1) {
    throw std::invalid_argument("fit: thin must be >= 1");
  }

  const auto t_start = std::chrono::steady_clock::now();

  Chain chain;
  chain.config = config;
  chain.priors = config.tail_priors ? *config.tail_priors : default_tail_priors(data);
  if (!(config.u_floor_quantile >= 0.0) || !(config.u_floor_quantile < 1.0)) {
    throw std::invalid_argument("fit: u_floor_quantile must be in [0,1)");
  }
  if (!std::isfinite(chain.priors.floor)) {
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    chain.priors.floor = empirical_quantile(sorted, config.u_floor_quantile);
  }
  chain.data_digest = sha256_hex(data);

  const double sample_max = *std::max_element(data.begin(), data.end());

  // Initial tail state: u at the prior mean, (sigma, xi) from the pilot
  // MLE over excesses (falling back to (sample sd, 0.1)).
  TailParams tail;
  tail.u = chain.priors.m_u;

  std::vector<double> excesses;
  for (double x : data) {
    if (x > tail.u) excesses.push_back(x - tail.u);
  }
  const GpdPilot pilot = gpd_pilot_fit(excesses);
  if (pilot.ok) {
    tail.sigma = pilot.sigma;
    tail.xi = pilot.xi;
  } else {
    double mean = 0.0;
    for (double x : data) mean += x;
    mean /= static_cast<double>(data.size());
    double var = 0.0;
    for (double x : data) var += (x - mean) * (x - mean);
    var /= static_cast<double>(data.size() - 1);
    tail.sigma = std::max(std::sqrt(var), 1e-6);
    tail.xi = 0.1;
  }

  ProposalTuning tuning;
  tuning.sample_max = sample_max;
  tuning.v_xi = config.proposal.v_xi.value_or(pilot.ok ? clamp_positive(pilot.v_xi, 1e-6, 1.0) : 0.01);
  tuning.v_sigma = config.proposal.v_sigma.value_or(
      pilot.ok ? clamp_positive(pilot.v_sigma, 1e-8, 1e8) : std::max(0.25 * tail.sigma * tail.sigma, 1e-4));
  // Threshold proposals default to the prior variance: wide enough to hop
  // between bulk/tail splits in one move (the collapsed crossing ladder
  // keeps large jumps well-scored).
  tuning.v_u = config.proposal.v_u.value_or(chain.priors.var_u);
  tuning.sigma_floor = 1e-8 * sample_max;

  const bool adapt =
      config.proposal.adapt == ProposalConfig::Adapt::kAlways ||
      (config.proposal.adapt == ProposalConfig::Adapt::kAuto && !pilot.ok);

  // Initial urn state: one singleton cluster per bulk point, each kernel
  // drawn from its exact single-observation posterior. Merges under the urn
  // are fast while splits are extremely slow, so starting over-fragmented
  // lets the chain find multimodal bulk shapes that a single starting
  // cluster never splits into.
  BaseMeasureParams bm = config.base;
  Rng rng(config.seed);

  ClusterState state;
  state.memberships.assign(data.size(), ClusterState::kTail);
  int n_bulk = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i] <= tail.u) {
      state.assign_observation(static_cast<int>(i), state.n_star(),
                               sample_new_component(data[i], bm, rng));
      ++n_bulk;
    }
  }
  if (n_bulk == 0) {
    throw std::invalid_argument("fit: threshold prior mean leaves no bulk observations");
  }

  AcceptCounter acc_xi, acc_sigma, acc_u, acc_shape;       // post burn-in
  AcceptCounter win_xi, win_sigma, win_u;                  // adaptation window
  constexpr int kAdaptWindow = 100;

  const int retained = (config.iterations - config.burn_in) / config.thin;
  chain.samples.reserve(static_cast<std::size_t>(std::max(retained, 0)));

  // Hold the threshold fixed over the first stretch of burn-in so the urn
  // merges into a sensible bulk fit before u starts crossing observations;
  // otherwise early-chaos threshold dives can strand the chain in a
  // degenerate bulk/tail split.
  const int u_freeze = std::min(500, config.burn_in / 2);

  for (int sweep = 1; sweep <= config.iterations; ++sweep) {
    const bool post_burn_in = sweep > config.burn_in;

    // 1. Bulk membership resampling.
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (state.memberships[i] != ClusterState::kTail) {
        resample_membership(static_cast<int>(i), state, bm, data, rng);
      }
    }

    // 2. Remix cluster parameters.
    {
      int a = 0, n = 0;
      refresh_cluster_params(state, bm, data, rng, 0.5, &a, &n);
      if (post_burn_in) {
        acc_shape.accepted += a;
        acc_shape.attempted += n;
      }
    }

    // 3. Base-measure hyperparameters.
    update_base_measure(state, bm, rng);

    // 4-6. Tail Metropolis-Hastings sweeps.
    {
      const MhStepResult r = mh_update_xi(tail, tuning, state, bm, chain.priors, data, rng);
      tail = r.tail;
      if (post_burn_in) {
        ++acc_xi.attempted;
        acc_xi.accepted += r.accepted;
      }
      ++win_xi.attempted;
      win_xi.accepted += r.accepted;
    }
    {
      const MhStepResult r = mh_update_sigma(tail, tuning, state, bm, chain.priors, data, rng);
      tail = r.tail;
      if (post_burn_in) {
        ++acc_sigma.attempted;
        acc_sigma.accepted += r.accepted;
      }
      ++win_sigma.attempted;
      win_sigma.accepted += r.accepted;
    }
    if (sweep > u_freeze) {
      const UStepResult r = mh_update_u(tail, tuning, state, bm, chain.priors, data, rng);
      tail = r.tail;
      if (post_burn_in) {
        ++acc_u.attempted;
        acc_u.accepted += r.accepted;
      }
      ++win_u.attempted;
      win_u.accepted += r.accepted;

      // Every few sweeps, one independence jump from the threshold prior;
      // hops between well-separated bulk/tail splits the random walk only
      // crosses slowly.
      if (sweep % 5 == 0) {
        tail = mh_update_u_prior(tail, state, bm, chain.priors, data, rng).tail;
      }
    }

    // Burn-in adaptation toward 0.3 acceptance, frozen afterwards.
    if (adapt && !post_burn_in && sweep % kAdaptWindow == 0) {
      const auto rescale = [](double v, const AcceptCounter& c) {
        const double f = std::exp(2.0 * (c.rate() - 0.3));
        return clamp_positive(v * f, 1e-12, 1e12);
      };
      if (!config.proposal.v_xi) tuning.v_xi = rescale(tuning.v_xi, win_xi);
      if (!config.proposal.v_sigma) tuning.v_sigma = rescale(tuning.v_sigma, win_sigma);
      if (!config.proposal.v_u) tuning.v_u = rescale(tuning.v_u, win_u);
      win_xi.reset();
      win_sigma.reset();
      win_u.reset();
    }

    if (post_burn_in && (sweep - config.burn_in) % config.thin == 0) {
      PosteriorSample s;
      s.tail = tail;
      s.clusters = state;
      s.base = bm;
      s.log_post = joint_log_posterior(tail, state, bm, chain.priors, data);
      chain.samples.push_back(std::move(s));
      chain.sweep_index.push_back(sweep);
    }
  }

  chain.tuning = tuning;
  chain.acceptance = {acc_xi.rate(), acc_sigma.rate(), acc_u.rate(), acc_shape.rate()};
  chain.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return chain;
}

double model_logpdf(double x, const PosteriorSample& sample) {
  if (!(x > 0.0)) {
    throw std::domain_error("model_logpdf: x must be positive");
  }
  const MixturePredictive mix(sample.clusters, sample.base);
  if (x <= sample.tail.u) {
    return mix.logpdf(x);
  }
  if (x >= gpd_upper_endpoint(sample.tail)) return -kInf;
  const double h_at_u = sample.tail.u > 0.0 ? mix.cdf(sample.tail.u) : 0.0;
  return std::log1p(-h_at_u) + gpd_logpdf(x, sample.tail);
}

double model_cdf(double x, const PosteriorSample& sample) {
  if (!(x > 0.0)) {
    throw std::domain_error("model_cdf: x must be positive");
  }
  const MixturePredictive mix(sample.clusters, sample.base);
  if (x <= sample.tail.u) {
    return mix.cdf(x);
  }
  const double h_at_u = sample.tail.u > 0.0 ? mix.cdf(sample.tail.u) : 0.0;
  return h_at_u + (1.0 - h_at_u) * gpd_cdf(x, sample.tail);
}

double quantile(double p, const PosteriorSample& sample) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("quantile: p must be in (0,1)");
  }
  const MixturePredictive mix(sample.clusters, sample.base);
  const double h_at_u = sample.tail.u > 0.0 ? mix.cdf(sample.tail.u) : 0.0;
  if (p > h_at_u) {
    const double p_star = (p - h_at_u) / (1.0 - h_at_u);
    return gpd_quantile(p_star, sample.tail);
  }
  // Bisection on the monotone mixture CDF over (0, u].
  double lo = 0.0;
  double hi = sample.tail.u;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double c = mix.cdf(mid);
    if (std::fabs(c - p) <= 1e-12) return mid;
    if (c < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * std::max(hi, 1.0)) break;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> quantile_posterior(double p, const Chain& chain) {
  std::vector<double> out;
  out.reserve(chain.samples.size());
  for (const PosteriorSample& s : chain.samples) {
    out.push_back(quantile(p, s));
  }
  return out;
}

SummaryStats summarize(std::vector<double> values) {
  if (values.empty()) {
    throw std::invalid_argument("summarize: empty sample");
  }
  SummaryStats stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
  stats.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  std::sort(values.begin(), values.end());
  stats.q2_5 = empirical_quantile(values, 0.025);
  stats.q50 = empirical_quantile(values, 0.50);
  stats.q97_5 = empirical_quantile(values, 0.975);
  return stats;
}

Interval credible_interval(std::vector<double> values, double level) {
  if (!(level > 0.0) || !(level < 1.0)) {
    throw std::domain_error("credible_interval: level must be in (0,1)");
  }
  std::sort(values.begin(), values.end());
  const double a = 0.5 * (1.0 - level);
  return {empirical_quantile(values, a), empirical_quantile(values, 1.0 - a)};
}

std::vector<double> chain_parameter(const Chain& chain, std::string_view parameter) {
  std::vector<double> out;
  out.reserve(chain.samples.size());
  for (const PosteriorSample& s : chain.samples) {
    if (parameter == "u") {
      out.push_back(s.tail.u);
    } else if (parameter == "sigma") {
      out.push_back(s.tail.sigma);
    } else if (parameter == "xi") {
      out.push_back(s.tail.xi);
    } else if (parameter == "n_star") {
      out.push_back(static_cast<double>(s.clusters.n_star()));
    } else if (parameter == "a_lambda") {
      out.push_back(s.base.a_lambda);
    } else if (parameter == "a_gamma") {
      out.push_back(s.base.a_gamma);
    } else if (parameter == "log_post") {
      out.push_back(s.log_post);
    } else {
      throw std::invalid_argument("unknown parameter selector: " + std::string(parameter));
    }
  }
  return out;
}

SummaryStats chain_summary(const Chain& chain, std::string_view parameter) {
  return summarize(chain_parameter(chain, parameter));
}

DensityBand predictive_density_grid(const Chain& chain, std::span<const double> grid,
                                    double level) {
  if (chain.samples.empty()) {
    throw std::invalid_argument("predictive_density_grid: empty chain");
  }
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    if (!(grid[g] > 0.0) || grid[g] > grid[g + 1]) {
      throw std::invalid_argument("predictive_density_grid: grid must be positive and sorted");
    }
  }

  const std::size_t n_grid = grid.size();
  const std::size_t n_samp = chain.samples.size();
  std::vector<std::vector<double>> values(n_grid);
  for (auto& v : values) v.reserve(n_samp);

  for (const PosteriorSample& s : chain.samples) {
    const MixturePredictive mix(s.clusters, s.base);
    const double h_at_u = s.tail.u > 0.0 ? mix.cdf(s.tail.u) : 0.0;
    const double endpoint = gpd_upper_endpoint(s.tail);
    for (std::size_t g = 0; g < n_grid; ++g) {
      const double x = grid[g];
      double dens;
      if (x <= s.tail.u) {
        dens = std::exp(mix.logpdf(x));
      } else if (x >= endpoint) {
        dens = 0.0;
      } else {
        dens = (1.0 - h_at_u) * std::exp(gpd_logpdf(x, s.tail));
      }
      values[g].push_back(dens);
    }
  }

  DensityBand band;
  band.x.assign(grid.begin(), grid.end());
  band.mean.resize(n_grid);
  band.lo.resize(n_grid);
  band.hi.resize(n_grid);
  const double a = 0.5 * (1.0 - level);
  for (std::size_t g = 0; g < n_grid; ++g) {
    double sum = 0.0;
    for (double v : values[g]) sum += v;
    band.mean[g] = sum / static_cast<double>(n_samp);
    std::sort(values[g].begin(), values[g].end());
    band.lo[g] = empirical_quantile(values[g], a);
    band.hi[g] = empirical_quantile(values[g], 1.0 - a);
  }
  return band;
}

}  // namespace threshmix
