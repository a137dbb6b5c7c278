#include "coeval/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace coeval::stats {

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

}  // namespace

double binary_ce(double expected, double predicted) {
  if (!(expected >= 0.0 && expected <= 1.0) || !(predicted >= 0.0 && predicted <= 1.0)) {
    throw StatsError("binary_ce inputs must lie in [0, 1]");
  }
  const double p = std::clamp(predicted, kLogClamp, 1.0 - kLogClamp);
  return -(expected * std::log(p) + (1.0 - expected) * std::log1p(-p));
}

std::uint64_t hoeffding_min_n(double delta, double epsilon) {
  if (!(delta > 0.0 && delta < 1.0)) throw StatsError("delta must lie in (0, 1)");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw StatsError("epsilon must be positive");
  return static_cast<std::uint64_t>(std::ceil(std::log(2.0 / delta) / (2.0 * epsilon * epsilon)));
}

StatsSummary summarize(std::span<const double> scores) {
  if (scores.size() < 2) throw StatsError("insufficient samples: need at least 2");
  StatsSummary s;
  s.n = scores.size();
  s.mean = mean_of(scores);
  double ss = 0.0;
  for (double x : scores) ss += (x - s.mean) * (x - s.mean);
  s.sample_std = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.se = s.sample_std / std::sqrt(static_cast<double>(s.n));
  s.ci95_z = kZ95 * s.se;
  s.ci95_t = t_critical_95(s.n - 1) * s.se;
  return s;
}

StatsSummary summarize(std::span<const ScoreSample> samples) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples) {
    if (!(s.score >= 0.0 && s.score <= 100.0)) throw StatsError("score outside [0, 100]");
    scores.push_back(s.score);
  }
  return summarize(scores);
}

VarianceDecomposition variance_decomposition(const std::map<std::string, std::vector<double>>& groups) {
  if (groups.empty()) throw StatsError("variance decomposition needs at least one group");
  std::vector<double> all;
  for (const auto& [id, g] : groups) {
    if (g.empty()) throw StatsError("empty group '" + id + "'");
    all.insert(all.end(), g.begin(), g.end());
  }
  const double grand = mean_of(all);
  const double n = static_cast<double>(all.size());
  VarianceDecomposition d;
  for (const auto& [id, g] : groups) {
    const double w = static_cast<double>(g.size()) / n;
    const double m = mean_of(g);
    d.within += w * population_variance(g, m);
    d.between += w * (m - grand) * (m - grand);
  }
  d.total = population_variance(all, grand);
  return d;
}

VarianceDecomposition variance_decomposition(std::span<const ScoreSample> samples) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& s : samples) groups[s.config_id].push_back(s.score);
  return variance_decomposition(groups);
}

std::uint64_t required_runs(double sigma, double delta) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw StatsError("sigma must be non-negative");
  if (delta == 0.0) throw IndistinguishableError("indistinguishable: zero gap between models");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw StatsError("delta must be positive");
  const double n = std::ceil(2.0 * kZ95 * kZ95 * sigma * sigma / (delta * delta));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double t_critical_95(std::uint64_t df) {
  if (df == 0) throw StatsError("t critical value needs at least one degree of freedom");
  boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(dist, 0.975);
}

double inversion_probability(double delta, double sigma_a, double sigma_b, std::uint64_t n) {
  if (n < 1) throw StatsError("n must be at least 1");
  if (!(sigma_a >= 0.0) || !(sigma_b >= 0.0)) throw StatsError("sigmas must be non-negative");
  const double spread = std::sqrt((sigma_a * sigma_a + sigma_b * sigma_b) / static_cast<double>(n));
  if (spread == 0.0) {
    if (delta == 0.0) throw StatsError("inversion probability undefined for zero gap and zero variance");
    return delta > 0.0 ? 0.0 : 1.0;
  }
  return normal_cdf(-delta / spread);
}

ConvergenceReport convergence_check(std::span<const double> losses, std::optional<double> limit) {
  if (losses.size() < kMinConvergenceRuns) throw StatsError("convergence check needs at least 10 runs");
  ConvergenceReport r;
  const double overall = mean_of(losses);
  r.limit = limit.value_or(overall);
  double ss = 0.0;
  for (double x : losses) ss += (x - overall) * (x - overall);
  r.sd = std::sqrt(ss / static_cast<double>(losses.size() - 1));

  double sum = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    sum += losses[i];
    const double n = static_cast<double>(i + 1);
    r.running_mean.push_back(sum / n);
    r.band.push_back(3.0 * r.sd / std::sqrt(n));
  }
  // 10, 20, 50, 100, 200, 500, ...
  for (std::size_t decade = 10; decade <= losses.size(); decade *= 10) {
    for (std::size_t m : {1, 2, 5}) {
      const std::size_t n = decade * m;
      if (n > losses.size()) break;
      r.checked.push_back(n);
      // Relative slack keeps exactly-representable constant series in band.
      const double tol = r.band[n - 1] + 1e-12 * std::max(1.0, std::abs(r.limit));
      if (std::abs(r.running_mean[n - 1] - r.limit) > tol) r.outside.push_back(n);
    }
  }
  return r;
}

}  // namespace coeval::stats
