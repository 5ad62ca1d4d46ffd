#include "splinecos/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "splinecos/error.hpp"

namespace splinecos {

namespace {

struct Moments {
  double within = 0.0;          // mean of chain variances
  double between_over_n = 0.0;  // variance of chain means
  std::vector<double> means;
};

Moments chain_moments(const std::vector<Eigen::VectorXd>& chains) {
  Moments m;
  const auto n = static_cast<double>(chains.front().size());
  for (const auto& c : chains) {
    const double mean = c.mean();
    m.means.push_back(mean);
    m.within += n > 1 ? (c.array() - mean).square().sum() / (n - 1.0) : 0.0;
  }
  const auto k = static_cast<double>(chains.size());
  m.within /= k;
  if (chains.size() > 1) {
    double grand = 0.0;
    for (double v : m.means) grand += v;
    grand /= k;
    for (double v : m.means) m.between_over_n += (v - grand) * (v - grand);
    m.between_over_n /= k - 1.0;
  }
  return m;
}

void check_chains(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.empty()) throw ValidationError("diagnostics need at least one chain");
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) throw ValidationError("chains differ in length");
  }
  if (chains.front().size() < 4) throw ValidationError("diagnostics need at least 4 draws per chain");
}

double autocovariance(const Eigen::VectorXd& x, double mean, Eigen::Index lag) {
  const Eigen::Index n = x.size();
  double s = 0.0;
  for (Eigen::Index i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(n);
}

}  // namespace

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains);
  const Eigen::Index n = chains.front().size();
  const double total = static_cast<double>(n) * static_cast<double>(chains.size());
  const Moments m = chain_moments(chains);
  const double nn = static_cast<double>(n);
  const double var_plus = (nn - 1.0) / nn * m.within + m.between_over_n;
  if (!(var_plus > 0.0)) return total;

  auto rho = [&](Eigen::Index lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c) acov += autocovariance(chains[c], m.means[c], lag);
    acov /= static_cast<double>(chains.size());
    return 1.0 - (m.within - acov) / var_plus;
  };
  // Geyer's initial positive sequence of paired sums, made monotone.
  double sum = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    double pair = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, previous);
    previous = pair;
    sum += pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(total));
  return total / tau;
}

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains);
  if (chains.size() < 2) throw ValidationError("split R-hat needs at least two chains");
  const Eigen::Index half = chains.front().size() / 2;
  std::vector<Eigen::VectorXd> halves;
  for (const auto& c : chains) {
    halves.push_back(c.head(half));
    halves.push_back(c.tail(half));
  }
  const Moments m = chain_moments(halves);
  const double nn = static_cast<double>(half);
  if (m.within == 0.0) return m.between_over_n == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (nn - 1.0) / nn * m.within + m.between_over_n;
  return std::sqrt(var_plus / m.within);
}

std::vector<ParameterDiagnostics> diagnose(const PosteriorSamples& samples) {
  std::vector<ParameterDiagnostics> out;
  const auto& names = samples.layout.names;
  for (std::size_t p = 0; p < names.size(); ++p) {
    std::vector<Eigen::VectorXd> chains;
    for (const auto& c : samples.chains) chains.push_back(c.col(static_cast<Eigen::Index>(p)));
    ParameterDiagnostics d;
    d.name = names[p];
    const Eigen::VectorXd all = samples.column(p);
    d.mean = all.mean();
    d.sd = all.size() > 1 ? std::sqrt((all.array() - d.mean).square().sum() / static_cast<double>(all.size() - 1)) : 0.0;
    d.ess = effective_sample_size(chains);
    if (chains.size() > 1) d.rhat = split_rhat(chains);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace splinecos
