#include "rgm/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "rgm/error.hpp"

namespace rgm {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  // Asymptotic series of the Mills ratio.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * M_PI) + std::log(series);
}

double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCategory::domain, "logit argument outside (0,1)");
  return std::log(p) - std::log1p(-p);
}

double draw_uniform(Rng& rng) {
  boost::random::uniform_01<double> u;
  return u(rng);
}

double draw_normal(Rng& rng) {
  boost::random::normal_distribution<double> n;
  return n(rng);
}

double draw_chi_squared(Rng& rng, double df) {
  boost::random::chi_squared_distribution<double> chi(df);
  return chi(rng);
}

namespace {

// Standard normal restricted to [a, b] with a > 0 in the far right tail.
double draw_right_tail(Rng& rng, double a, double b) {
  if (std::isfinite(b) && b - a < 1.0 / a) {
    // Narrow window: uniform proposal, density ratio is maximal at a.
    for (;;) {
      const double x = a + (b - a) * draw_uniform(rng);
      if (std::log(draw_uniform(rng)) <= 0.5 * (a * a - x * x)) return x;
    }
  }
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double x = a - std::log1p(-draw_uniform(rng)) / lambda;
    if (x > b) continue;
    const double d = x - lambda;
    if (std::log(draw_uniform(rng)) <= -0.5 * d * d) return x;
  }
}

constexpr double kTailThreshold = 4.0;

}  // namespace

double draw_truncated_normal(Rng& rng, double mean, double variance, double lower, double upper) {
  if (!(variance > 0.0)) throw Error(ErrorCategory::domain, "truncated normal requires positive variance");
  if (!(lower < upper)) throw Error(ErrorCategory::domain, "truncated normal requires lower < upper");
  const double sd = std::sqrt(variance);
  const double a = (lower - mean) / sd;
  const double b = (upper - mean) / sd;

  double x;
  if (a >= kTailThreshold) {
    x = draw_right_tail(rng, a, b);
  } else if (b <= -kTailThreshold) {
    x = -draw_right_tail(rng, -b, -a);
  } else if (std::isinf(a) && std::isinf(b)) {
    x = draw_normal(rng);
  } else {
    // Work in whichever tail keeps the probabilities away from 1.
    const bool mirror = a > 0.0;
    const double lo = mirror ? -b : a;
    const double hi = mirror ? -a : b;
    const double p_lo = normal_cdf(lo);
    const double p_hi = normal_cdf(hi);
    if (p_hi - p_lo < kMinTruncatedMass) {
      return 0.5 * (lower + upper);
    }
    const double u = p_lo + (p_hi - p_lo) * draw_uniform(rng);
    x = normal_quantile(u);
    if (mirror) x = -x;
  }

  double z = mean + sd * x;
  // Rounding in the quantile map can land a hair outside the cell.
  if (!(z > lower)) z = std::nextafter(lower, kInf);
  if (z > upper) z = upper;
  return z;
}

}  // namespace rgm
