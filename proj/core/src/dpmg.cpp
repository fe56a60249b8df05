#include "threshmix/dpmg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace threshmix {

namespace {

void require_base_params(const BaseMeasureParams& bm) {
  if (!(bm.a_lambda > 0.0) || !(bm.a_gamma > 0.0) || !(bm.alpha > 0.0)) {
    throw std::domain_error("base measure: a_lambda, a_gamma, alpha must be positive");
  }
}

// a_lambda - log(x/(x+a_gamma)); always > a_lambda since the log is negative.
double posterior_shape_rate(double x, const BaseMeasureParams& bm) {
  return bm.a_lambda - std::log(x / (x + bm.a_gamma));
}

// log marginal_likelihood; evaluated on the log scale so extreme
// hyperparameter states cannot underflow to 0/0.
double log_marginal_likelihood(double x, const BaseMeasureParams& bm) {
  const double v = posterior_shape_rate(x, bm);
  return std::log(bm.a_lambda) + std::log(bm.a_gamma) - std::log(x) -
         std::log(x + bm.a_gamma) - 2.0 * std::log(v);
}

}  // namespace

int ClusterState::bulk_count() const {
  int n = 0;
  for (int c : counts) n += c;
  return n;
}

void ClusterState::check_invariants() const {
  if (uniques.size() != counts.size()) {
    throw std::logic_error("cluster state: uniques/counts size mismatch");
  }
  std::vector<int> tally(counts.size(), 0);
  for (int m : memberships) {
    if (m == kTail) continue;
    if (m < 0 || m >= n_star()) {
      throw std::logic_error("cluster state: membership references dead cluster");
    }
    ++tally[static_cast<std::size_t>(m)];
  }
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 1) {
      throw std::logic_error("cluster state: empty cluster kept alive");
    }
    if (tally[j] != counts[j]) {
      throw std::logic_error("cluster state: counts disagree with memberships");
    }
    if (!(uniques[j].shape > 0.0) || !(uniques[j].rate > 0.0)) {
      throw std::logic_error("cluster state: non-positive kernel parameters");
    }
  }
}

void ClusterState::remove_observation(int i) {
  const int j = memberships[static_cast<std::size_t>(i)];
  if (j == kTail) return;
  memberships[static_cast<std::size_t>(i)] = kTail;
  if (--counts[static_cast<std::size_t>(j)] == 0) {
    counts.erase(counts.begin() + j);
    uniques.erase(uniques.begin() + j);
    for (int& m : memberships) {
      if (m != kTail && m > j) --m;
    }
  }
}

void ClusterState::assign_observation(int i, int j, const GammaParams& theta) {
  if (j == n_star()) {
    uniques.push_back(theta);
    counts.push_back(1);
  } else {
    ++counts[static_cast<std::size_t>(j)];
  }
  memberships[static_cast<std::size_t>(i)] = j;
}

double marginal_likelihood(double x, const BaseMeasureParams& bm) {
  require_base_params(bm);
  if (!(x > 0.0)) {
    throw std::domain_error("marginal_likelihood: x must be positive");
  }
  return std::exp(log_marginal_likelihood(x, bm));
}

double base_predictive_cdf(double x, const BaseMeasureParams& bm) {
  require_base_params(bm);
  if (x <= 0.0) return 0.0;
  return bm.a_lambda / posterior_shape_rate(x, bm);
}

GammaParams sample_new_component(double x, const BaseMeasureParams& bm, Rng& rng) {
  const double rate = posterior_shape_rate(x, bm);
  const double lambda = sample_gamma({2.0, rate}, rng);
  const double gamma = sample_gamma({lambda + 1.0, x + bm.a_gamma}, rng);
  return {lambda, gamma};
}

void resample_membership(int i, ClusterState& state, const BaseMeasureParams& bm,
                         std::span<const double> data, Rng& rng) {
  const double x = data[static_cast<std::size_t>(i)];
  state.remove_observation(i);

  const int k = state.n_star();
  std::vector<double> logw(static_cast<std::size_t>(k) + 1);
  for (int j = 0; j < k; ++j) {
    logw[static_cast<std::size_t>(j)] =
        std::log(static_cast<double>(state.counts[static_cast<std::size_t>(j)])) +
        gamma_logpdf(x, state.uniques[static_cast<std::size_t>(j)]);
  }
  logw[static_cast<std::size_t>(k)] =
      std::log(bm.alpha) + log_marginal_likelihood(x, bm);

  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - top);
    total += w;
  }
  double pick = rng.uniform01() * total;
  int j = 0;
  for (; j < k; ++j) {
    pick -= logw[static_cast<std::size_t>(j)];
    if (pick <= 0.0) break;
  }

  if (j == k) {
    state.assign_observation(i, k, sample_new_component(x, bm, rng));
  } else {
    state.assign_observation(i, j, {});
  }
}

void refresh_cluster_params(ClusterState& state, const BaseMeasureParams& bm,
                            std::span<const double> data, Rng& rng,
                            double log_step_sd, int* accepted, int* attempted) {
  const int k = state.n_star();
  if (k == 0) return;

  // Per-cluster sufficient statistics.
  std::vector<double> sum_x(static_cast<std::size_t>(k), 0.0);
  std::vector<double> sum_log_x(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < state.memberships.size(); ++i) {
    const int j = state.memberships[i];
    if (j == ClusterState::kTail) continue;
    sum_x[static_cast<std::size_t>(j)] += data[i];
    sum_log_x[static_cast<std::size_t>(j)] += std::log(data[i]);
  }

  for (int j = 0; j < k; ++j) {
    GammaParams& theta = state.uniques[static_cast<std::size_t>(j)];
    const double nj = state.counts[static_cast<std::size_t>(j)];

    // Conjugate draw for the rate given the shape.
    theta.rate = sample_gamma({1.0 + nj * theta.shape, bm.a_gamma + sum_x[static_cast<std::size_t>(j)]}, rng);

    // Log conditional of the shape up to a constant:
    //   -a_l*s + n_j*(s*log(rate)) + (s-1)*sum log x - n_j*lgamma(s).
    const auto shape_logpost = [&](double s) {
      return -bm.a_lambda * s + nj * s * std::log(theta.rate) +
             (s - 1.0) * sum_log_x[static_cast<std::size_t>(j)] - nj * std::lgamma(s);
    };

    const double cur = theta.shape;
    const double prop = cur * std::exp(log_step_sd * rng.normal());
    // Log-scale random walk: Jacobian contributes log(prop/cur).
    const double log_accept =
        std::isfinite(prop) && prop > 0.0
            ? shape_logpost(prop) - shape_logpost(cur) + std::log(prop) - std::log(cur)
            : -std::numeric_limits<double>::infinity();
    if (attempted != nullptr) ++*attempted;
    if (std::log(rng.uniform01()) < log_accept) {
      theta.shape = prop;
      if (accepted != nullptr) ++*accepted;
    }
  }
}

void update_base_measure(const ClusterState& state, BaseMeasureParams& bm, Rng& rng) {
  double sum_shape = 0.0;
  double sum_rate = 0.0;
  for (const GammaParams& theta : state.uniques) {
    sum_shape += theta.shape;
    sum_rate += theta.rate;
  }
  const double k = static_cast<double>(state.n_star());
  bm.a_lambda = sample_gamma({bm.b_lambda + k, bm.c_lambda + sum_shape}, rng);
  bm.a_gamma = sample_gamma({bm.b_gamma + k, bm.c_gamma + sum_rate}, rng);
}

MixturePredictive::MixturePredictive(const ClusterState& state, const BaseMeasureParams& bm)
    : bm_(bm) {
  require_base_params(bm);
  const double n = static_cast<double>(state.bulk_count());
  const double log_total = std::log(bm.alpha + n);
  terms_.reserve(state.uniques.size());
  for (std::size_t j = 0; j < state.uniques.size(); ++j) {
    const GammaParams& theta = state.uniques[j];
    terms_.push_back({std::log(static_cast<double>(state.counts[j])) - log_total,
                      theta.shape, theta.rate,
                      theta.shape * std::log(theta.rate) - std::lgamma(theta.shape)});
  }
  log_new_weight_ = std::log(bm.alpha) - log_total;
}

double MixturePredictive::logpdf(double x) const {
  if (!(x > 0.0)) {
    throw std::domain_error("mixture_logpdf: x must be positive");
  }
  const double log_x = std::log(x);
  double top = log_new_weight_ + log_marginal_likelihood(x, bm_);
  double best = top;
  std::vector<double> vals;
  vals.reserve(terms_.size() + 1);
  vals.push_back(top);
  for (const Term& t : terms_) {
    const double v = t.log_weight + t.log_norm + (t.shape - 1.0) * log_x - t.rate * x;
    vals.push_back(v);
    best = std::max(best, v);
  }
  double sum = 0.0;
  for (double v : vals) sum += std::exp(v - best);
  return best + std::log(sum);
}

double MixturePredictive::cdf(double x) const {
  if (!(x > 0.0)) {
    throw std::domain_error("mixture_cdf: x must be positive");
  }
  double total = std::exp(log_new_weight_) * base_predictive_cdf(x, bm_);
  for (const Term& t : terms_) {
    total += std::exp(t.log_weight) * gamma_cdf(x, {t.shape, t.rate});
  }
  return total;
}

double mixture_logpdf(double x, const ClusterState& state, const BaseMeasureParams& bm) {
  return MixturePredictive(state, bm).logpdf(x);
}

double mixture_cdf(double x, const ClusterState& state, const BaseMeasureParams& bm) {
  return MixturePredictive(state, bm).cdf(x);
}

double expected_cluster_count(double alpha, int n) {
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    total += alpha / (alpha + static_cast<double>(i) - 1.0);
  }
  return total;
}

}  // namespace threshmix
