#include "threshmix/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace threshmix {

namespace {

void require_bulk_spec(const BulkMixtureSpec& spec) {
  if (spec.components.empty() || spec.components.size() != spec.weights.size()) {
    throw std::invalid_argument("bulk mixture: components/weights mismatch or empty");
  }
  double total = 0.0;
  for (double w : spec.weights) {
    if (!(w > 0.0) || w > 1.0) {
      throw std::invalid_argument("bulk mixture: weights must lie in (0,1]");
    }
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("bulk mixture: weights must sum to 1");
  }
}

int pick_component(const BulkMixtureSpec& spec, Rng& rng) {
  double p = rng.uniform01();
  for (std::size_t c = 0; c + 1 < spec.weights.size(); ++c) {
    p -= spec.weights[c];
    if (p <= 0.0) return static_cast<int>(c);
  }
  return static_cast<int>(spec.weights.size()) - 1;
}

// Inverse of bulk_cdf by bisection; p in [0, 1).
double bulk_quantile(double p, const BulkMixtureSpec& spec) {
  double hi = 1.0;
  while (bulk_cdf(hi, spec) < p) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (bulk_cdf(mid, spec) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double bulk_logpdf(double x, const BulkMixtureSpec& spec) {
  require_bulk_spec(spec);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> vals(spec.components.size());
  for (std::size_t c = 0; c < spec.components.size(); ++c) {
    vals[c] = std::log(spec.weights[c]) + gamma_logpdf(x, spec.components[c]);
    best = std::max(best, vals[c]);
  }
  double sum = 0.0;
  for (double v : vals) sum += std::exp(v - best);
  return best + std::log(sum);
}

double bulk_cdf(double x, const BulkMixtureSpec& spec) {
  require_bulk_spec(spec);
  if (x <= 0.0) return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < spec.components.size(); ++c) {
    total += spec.weights[c] * gamma_cdf(x, spec.components[c]);
  }
  return total;
}

double spliced_cdf(double x, const SpliceSpec& spec) {
  const double h_at_u = bulk_cdf(spec.tail.u, spec.bulk);
  if (x <= spec.tail.u) return bulk_cdf(x, spec.bulk);
  return h_at_u + (1.0 - h_at_u) * gpd_cdf(x, spec.tail);
}

double spliced_pdf(double x, const SpliceSpec& spec) {
  if (x <= spec.tail.u) return std::exp(bulk_logpdf(x, spec.bulk));
  if (x >= gpd_upper_endpoint(spec.tail)) return 0.0;
  const double h_at_u = bulk_cdf(spec.tail.u, spec.bulk);
  return (1.0 - h_at_u) * std::exp(gpd_logpdf(x, spec.tail));
}

std::vector<double> sample_spliced(int n, const SpliceSpec& spec, Rng& rng) {
  if (n < 1) {
    throw std::invalid_argument("sample_spliced: n must be >= 1");
  }
  require_bulk_spec(spec.bulk);
  if (!(spec.tail.sigma > 0.0)) {
    throw std::invalid_argument("sample_spliced: tail sigma must be positive");
  }

  const double h_at_u = bulk_cdf(spec.tail.u, spec.bulk);
  const bool use_rejection = h_at_u >= 0.1;

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (rng.uniform01() < h_at_u) {
      double x;
      if (use_rejection) {
        do {
          const int c = pick_component(spec.bulk, rng);
          x = sample_gamma(spec.bulk.components[static_cast<std::size_t>(c)], rng);
        } while (x > spec.tail.u);
      } else {
        x = bulk_quantile(rng.uniform01() * h_at_u, spec.bulk);
      }
      out.push_back(x);
    } else {
      out.push_back(gpd_quantile(rng.uniform01(), spec.tail));
    }
  }
  return out;
}

SpliceSpec reference_scenario() {
  SpliceSpec spec;
  spec.bulk.weights = {0.5, 0.5};
  spec.bulk.components = {{10.0, 4.0}, {6.0, 0.7}};
  spec.tail = {11.0, 3.0, 0.4};
  return spec;
}

}  // namespace threshmix
