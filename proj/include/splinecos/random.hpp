#pragma once

#include <cstdint>
#include <random>

namespace splinecos {

/// Random stream for one chain or one simulation. Not shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  /// Uniform on (0, 1), never exactly 0 or 1.
  double uniform();
  /// Gamma with shape and rate (mean shape / rate).
  double gamma(double shape, double rate);
  /// Inverse gamma with shape and scale (density ~ x^{-shape-1} exp(-scale/x)).
  double inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }
  /// Standard exponential.
  double exponential();

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Independent stream seed number `stream` derived from a master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

/// Draw from N(mean, sd^2) truncated to (lower, +inf).
double truncated_normal_above(Rng& rng, double mean, double sd, double lower);
/// Draw from N(mean, sd^2) truncated to (-inf, upper].
double truncated_normal_below(Rng& rng, double mean, double sd, double upper);

}  // namespace splinecos
