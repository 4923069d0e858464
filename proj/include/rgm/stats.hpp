#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rgm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Small-state generator (Chris Doty-Humphrey's sfc64). Boost.Random
// distributions are layered on top so draws are identical across platforms.
class Sfc64 {
 public:
  using result_type = std::uint64_t;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  explicit Sfc64(std::uint64_t seed) : a_(seed), b_(seed), c_(seed), counter_(1) {
    for (int i = 0; i < 12; ++i) (*this)();
  }

  result_type operator()() noexcept {
    const std::uint64_t tmp = a_ + b_ + counter_++;
    a_ = b_ ^ (b_ >> 11);
    b_ = c_ + (c_ << 3);
    c_ = ((c_ << 24) | (c_ >> 40)) + tmp;
    return tmp;
  }

 private:
  std::uint64_t a_, b_, c_, counter_;
};

using Rng = Sfc64;

std::uint64_t mix64(std::uint64_t x);

// Deterministic stream keyed by a master seed and a path of integers
// (purpose tag, iteration, environment, row, ...). Chains that need
// reproducibility under any thread layout derive every generator this way.
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

// Stream purposes.
namespace stream {
inline constexpr std::uint64_t marginal = 1;
inline constexpr std::uint64_t theta = 2;
inline constexpr std::uint64_t latent = 3;
inline constexpr std::uint64_t precision = 4;
inline constexpr std::uint64_t birth_death = 5;
inline constexpr std::uint64_t simulation = 6;
inline constexpr std::uint64_t init = 7;
}  // namespace stream

double normal_cdf(double x);
// Upper tail 1 - Phi(x) without cancellation.
double normal_sf(double x);
double normal_quantile(double p);
// log Phi(x), accurate far into the lower tail.
double log_normal_cdf(double x);
double logistic(double x);
double logit(double p);

double draw_uniform(Rng& rng);
double draw_normal(Rng& rng);
double draw_chi_squared(Rng& rng, double df);

// Draws from N(mean, variance) restricted to (lower, upper]. Infinite bounds
// are allowed. Inverse-CDF for moderate truncation, exponential rejection for
// one-sided regions beyond four standard deviations. When the interval holds
// less than kMinTruncatedMass of probability (and is not a far tail) the
// midpoint is returned.
double draw_truncated_normal(Rng& rng, double mean, double variance, double lower, double upper);

inline constexpr double kMinTruncatedMass = 1e-14;

}  // namespace rgm
