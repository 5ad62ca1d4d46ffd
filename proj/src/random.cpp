#include "splinecos/random.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

namespace splinecos {

double Rng::uniform() {
  // 53 random bits mapped to the open interval (0, 1).
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::gamma(double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

double Rng::exponential() { return -std::log(uniform()); }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double normal_cdf(double x) { return 0.5 * boost::math::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

namespace {

// Standard normal truncated to (a, inf).
double standard_tail(Rng& rng, double a) {
  if (a > 4.0) {
    // Exponential rejection sampler with the optimal rate for the bound.
    const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      const double z = a + rng.exponential() / rate;
      const double log_accept = -0.5 * (z - rate) * (z - rate);
      if (std::log(rng.uniform()) <= log_accept) return z;
    }
  }
  if (a < -4.0) {
    // Almost no mass is removed; plain rejection accepts with prob > 0.9999.
    for (;;) {
      const double z = rng.normal();
      if (z > a) return z;
    }
  }
  // Inverse CDF through the upper tail: z = -Phi^{-1}(u * Phi(-a)).
  const double upper_mass = normal_cdf(-a);
  const double z = -normal_quantile(rng.uniform() * upper_mass);
  return std::max(z, std::nextafter(a, std::numeric_limits<double>::infinity()));
}

}  // namespace

double truncated_normal_above(Rng& rng, double mean, double sd, double lower) {
  const double z = standard_tail(rng, (lower - mean) / sd);
  const double x = mean + sd * z;
  return x > lower ? x : std::nextafter(lower, std::numeric_limits<double>::infinity());
}

double truncated_normal_below(Rng& rng, double mean, double sd, double upper) {
  // Mirror: -x ~ N(-mean, sd) truncated to [-upper, inf).
  const double z = standard_tail(rng, (mean - upper) / sd);
  const double x = mean - sd * z;
  return x <= upper ? x : upper;
}

}  // namespace splinecos
