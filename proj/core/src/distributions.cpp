#include "threshmix/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace threshmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_gamma_params(const GammaParams& p) {
  if (!(p.shape > 0.0) || !(p.rate > 0.0)) {
    throw std::domain_error("gamma: shape and rate must be positive");
  }
}

// Regularized lower incomplete gamma P(a,z) by power series, for z < a+1.
double gamma_p_series(double a, double z) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 600; ++i) {
    ap += 1.0;
    term *= z / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,z) by Lentz continued fraction,
// for z >= a+1.
double gamma_q_contfrac(double a, double z) {
  const double tiny = 1e-300;
  double b = z + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 600; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-z + a * std::log(z) - std::lgamma(a));
}

}  // namespace

double gamma_logpdf(double x, const GammaParams& p) {
  require_gamma_params(p);
  if (!(x > 0.0)) {
    throw std::domain_error("gamma_logpdf: x must be positive");
  }
  return p.shape * std::log(p.rate) - std::lgamma(p.shape) +
         (p.shape - 1.0) * std::log(x) - p.rate * x;
}

double gamma_cdf(double x, const GammaParams& p) {
  require_gamma_params(p);
  if (x <= 0.0) return 0.0;
  const double z = p.rate * x;
  if (std::isinf(z)) return 1.0;
  if (z < p.shape + 1.0) return gamma_p_series(p.shape, z);
  return 1.0 - gamma_q_contfrac(p.shape, z);
}

double gamma_quantile(double p, const GammaParams& params) {
  require_gamma_params(params);
  if (!(p >= 0.0) || !(p < 1.0)) {
    throw std::domain_error("gamma_quantile: p must be in [0,1)");
  }
  if (p == 0.0) return 0.0;
  // Bracket: grow hi from the mean until the CDF exceeds p.
  double hi = (params.shape + 1.0) / params.rate;
  while (gamma_cdf(hi, params) < p) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_cdf(mid, params) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * hi) break;
  }
  return 0.5 * (lo + hi);
}

double gpd_upper_endpoint(const TailParams& t) {
  return t.xi < 0.0 ? t.u - t.sigma / t.xi : kInf;
}

double gpd_logpdf(double x, const TailParams& t) {
  if (!(t.sigma > 0.0)) {
    throw std::domain_error("gpd: sigma must be positive");
  }
  const double y = (x - t.u) / t.sigma;
  if (y < 0.0) {
    throw std::domain_error("gpd_logpdf: x below threshold");
  }
  if (std::fabs(t.xi) < kGpdXiZeroTol) {
    return -std::log(t.sigma) - y;
  }
  const double w = 1.0 + t.xi * y;
  if (w <= 0.0) {
    throw std::domain_error("gpd_logpdf: x above upper endpoint");
  }
  return -std::log(t.sigma) - (1.0 / t.xi + 1.0) * std::log(w);
}

double gpd_cdf(double x, const TailParams& t) {
  if (!(t.sigma > 0.0)) {
    throw std::domain_error("gpd: sigma must be positive");
  }
  const double y = (x - t.u) / t.sigma;
  if (y <= 0.0) return 0.0;
  if (std::fabs(t.xi) < kGpdXiZeroTol) {
    return -std::expm1(-y);
  }
  const double w = 1.0 + t.xi * y;
  if (w <= 0.0) return 1.0;  // beyond the xi<0 endpoint
  return -std::expm1(-std::log(w) / t.xi);
}

double gpd_quantile(double p, const TailParams& t) {
  if (!(t.sigma > 0.0)) {
    throw std::domain_error("gpd: sigma must be positive");
  }
  if (!(p >= 0.0) || !(p < 1.0)) {
    throw std::domain_error("gpd_quantile: p must be in [0,1)");
  }
  if (std::fabs(t.xi) < kGpdXiZeroTol) {
    return t.u - t.sigma * std::log1p(-p);
  }
  return t.u + (t.sigma / t.xi) * std::expm1(-t.xi * std::log1p(-p));
}

double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * M_SQRT1_2);
}

double log_std_normal_cdf(double z) {
  if (z > -10.0) {
    return std::log(std_normal_cdf(z));
  }
  // Asymptotic expansion of the lower tail: Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - 15/z^6).
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * M_PI) + std::log(series);
}

double sample_truncated_normal(const TruncatedNormalSpec& spec, Rng& rng) {
  if (!(spec.variance > 0.0)) {
    throw std::domain_error("truncated normal: variance must be positive");
  }
  const double sd = std::sqrt(spec.variance);
  const double a = (spec.lower - spec.mean) / sd;
  double z;
  if (!(a > 0.45)) {
    // Low bound (including -inf): plain rejection from the normal.
    do {
      z = rng.normal();
    } while (!(z > a));
  } else {
    // Robert (1995): shifted-exponential proposal for deep truncation.
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      z = a - std::log(rng.uniform01()) / lambda;
      const double diff = z - lambda;
      if (std::log(rng.uniform01()) <= -0.5 * diff * diff) break;
    }
  }
  return spec.mean + sd * z;
}

double sample_gamma(const GammaParams& p, Rng& rng) {
  require_gamma_params(p);
  if (p.shape < 1.0) {
    // Boost: G(a) = G(a+1) * U^(1/a). For very small shapes the correct draw
    // sits below double range; clamp so callers never see exactly zero.
    const double g = sample_gamma({p.shape + 1.0, p.rate}, rng);
    const double scaled = g * std::pow(rng.uniform01(), 1.0 / p.shape);
    return std::max(scaled, std::numeric_limits<double>::min());
  }
  // Marsaglia & Tsang (2000), ACM TOMS 26(3).
  const double d = p.shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform01();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x) ||
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return std::max(d * v / p.rate, std::numeric_limits<double>::min());
    }
  }
}

double sample_exponential(double rate, Rng& rng) {
  if (!(rate > 0.0)) {
    throw std::domain_error("exponential: rate must be positive");
  }
  return -std::log(rng.uniform01()) / rate;
}

}  // namespace threshmix
