#pragma once

#include <span>
#include <vector>

#include "threshmix/distributions.hpp"
#include "threshmix/rng.hpp"

namespace threshmix {

/// Base measure of the Dirichlet process over gamma-kernel parameters:
/// two independent exponentials, shape ~ Exp(a_lambda), rate ~ Exp(a_gamma),
/// with gamma hyperpriors a_lambda ~ Gamma(b_lambda, c_lambda) and
/// a_gamma ~ Gamma(b_gamma, c_gamma), plus the DP precision alpha (fixed).
struct BaseMeasureParams {
  double a_lambda = 1.0;
  double a_gamma = 1.0;
  double b_lambda = 0.001;
  double c_lambda = 0.001;
  double b_gamma = 0.001;
  double c_gamma = 0.001;
  double alpha = 0.1;
};

/// Polya-urn configuration over the bulk observations.
///
/// memberships is aligned with the full data vector: entry i is the cluster
/// index of observation i when it lies in the bulk, or kTail when the
/// observation currently sits above the threshold. uniques/counts hold the
/// distinct kernel parameters and their occupancies; live clusters always
/// have count >= 1.
struct ClusterState {
  static constexpr int kTail = -1;

  std::vector<int> memberships;
  std::vector<GammaParams> uniques;
  std::vector<int> counts;

  int n_star() const { return static_cast<int>(uniques.size()); }
  int bulk_count() const;

  /// Throws std::logic_error if any structural invariant is violated
  /// (count sums, empty clusters, dangling membership indices).
  void check_invariants() const;

  /// Drop observation i from its cluster, erasing the cluster when emptied
  /// (membership indices above it shift down). No-op for tail observations.
  void remove_observation(int i);

  /// Place observation i in cluster j (or a fresh cluster when j == n_star).
  void assign_observation(int i, int j, const GammaParams& theta);
};

/// Prior predictive density of one observation under the base measure,
/// integrating the gamma kernel against g0:
///   m(x) = a_l*a_g / [ x*(x+a_g)*(a_l - log(x/(x+a_g)))^2 ].
double marginal_likelihood(double x, const BaseMeasureParams& bm);

/// Exact CDF of marginal_likelihood: a_l / (a_l - log(x/(x+a_g))).
/// (Substituting v = a_l - log(x/(x+a_g)) turns m(x)dx into -a_l dv/v^2.)
double base_predictive_cdf(double x, const BaseMeasureParams& bm);

/// Draw kernel parameters from the posterior of the base measure given one
/// observation: lambda ~ Gamma(2, a_l - log(x/(x+a_g))), then
/// gamma | lambda ~ Gamma(lambda + 1, x + a_g).
GammaParams sample_new_component(double x, const BaseMeasureParams& bm, Rng& rng);

/// One urn transition for observation i: detach it, then reattach to an
/// existing cluster with weight n_j * k(x_i; theta_j) or to a fresh
/// component with weight alpha * marginal_likelihood(x_i).
void resample_membership(int i, ClusterState& state, const BaseMeasureParams& bm,
                         std::span<const double> data, Rng& rng);

/// Remix the unique kernel parameters against their clusters' data: the rate
/// is conjugate (Gamma(1 + n_j*shape, a_g + sum x)), the shape takes one
/// Metropolis step with a log-scale random walk. Memberships are unchanged.
void refresh_cluster_params(ClusterState& state, const BaseMeasureParams& bm,
                            std::span<const double> data, Rng& rng,
                            double log_step_sd = 0.5, int* accepted = nullptr,
                            int* attempted = nullptr);

/// Conjugate hyperparameter update from the n_star distinct components:
/// a_l ~ Gamma(b_l + n*, c_l + sum shape), a_g ~ Gamma(b_g + n*, c_g + sum rate).
/// alpha stays fixed.
void update_base_measure(const ClusterState& state, BaseMeasureParams& bm, Rng& rng);

/// Urn-predictive mixture given the configuration: precomputes per-cluster
/// normalizers once so batch evaluation over the data is cheap.
class MixturePredictive {
 public:
  MixturePredictive(const ClusterState& state, const BaseMeasureParams& bm);

  double logpdf(double x) const;
  double cdf(double x) const;

 private:
  struct Term {
    double log_weight;  // log(n_j / (alpha + n))
    double shape;
    double rate;
    double log_norm;  // shape*log(rate) - lgamma(shape)
  };
  std::vector<Term> terms_;
  double log_new_weight_;  // log(alpha / (alpha + n))
  BaseMeasureParams bm_;
};

/// h(x | state): sum_j n_j/(alpha+n) k(x; theta_j) + alpha/(alpha+n) m(x).
double mixture_logpdf(double x, const ClusterState& state, const BaseMeasureParams& bm);

/// H(x | state) with the same weights over kernel CDFs and the base
/// predictive CDF.
double mixture_cdf(double x, const ClusterState& state, const BaseMeasureParams& bm);

/// Prior mean number of distinct clusters after n draws from the urn:
/// sum_{i=1..n} alpha/(alpha + i - 1).
double expected_cluster_count(double alpha, int n);

}  // namespace threshmix
