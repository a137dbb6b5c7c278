#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coeval::stats {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown by required_runs when the gap is zero: no finite run count separates
// two models with identical means.
class IndistinguishableError : public StatsError {
 public:
  using StatsError::StatsError;
};

// One evaluation score with its provenance.
struct ScoreSample {
  double score = 0.0;
  std::string node_id;
  std::string task_id;
  std::string config_id;
};

struct StatsSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sample_std = 0.0;  // n - 1 divisor
  double se = 0.0;
  double ci95_z = 0.0;  // half-width, z = 1.96
  double ci95_t = 0.0;  // half-width, Student-t with n - 1 degrees of freedom
};

// Population-style (n divisor) components; total == within + between.
struct VarianceDecomposition {
  double total = 0.0;
  double within = 0.0;
  double between = 0.0;
};

inline constexpr double kZ95 = 1.96;
inline constexpr double kLogClamp = 1e-12;

// Binary cross-entropy -(e*ln p + (1-e)*ln(1-p)) with p clamped to
// [1e-12, 1 - 1e-12]; `expected` plays the role of the ideal expected output.
double binary_ce(double expected, double predicted);

// ceil(ln(2/delta) / (2 eps^2)): Hoeffding bound for a [0, 1] outcome.
std::uint64_t hoeffding_min_n(double delta, double epsilon);

StatsSummary summarize(std::span<const double> scores);
StatsSummary summarize(std::span<const ScoreSample> samples);

// Groups keyed by configuration id; every group must be non-empty.
VarianceDecomposition variance_decomposition(const std::map<std::string, std::vector<double>>& groups);
VarianceDecomposition variance_decomposition(std::span<const ScoreSample> samples);

// max(1, ceil(2 * 1.96^2 * sigma^2 / delta^2)) runs per model.
std::uint64_t required_runs(double sigma, double delta);

// Standard normal CDF.
double normal_cdf(double x);
// Two-sided 95% Student-t critical value, t_{0.975, df}.
double t_critical_95(std::uint64_t df);

// P(mean_A <= mean_B) = Phi(-delta / sqrt(sigma_a^2/n + sigma_b^2/n)).
double inversion_probability(double delta, double sigma_a, double sigma_b, std::uint64_t n);

struct ConvergenceReport {
  std::vector<double> running_mean;  // running_mean[i] is the mean of the first i + 1 losses
  std::vector<double> band;          // 3 * sd / sqrt(i + 1)
  double limit = 0.0;                // limit estimate the running mean is compared against
  double sd = 0.0;
  std::vector<std::size_t> checked;  // sample counts that were checked
  std::vector<std::size_t> outside;  // checked counts where |mean - limit| > band
  bool converged() const { return outside.empty(); }
};

inline constexpr std::size_t kMinConvergenceRuns = 10;

// Running-mean trend of per-run discrepancies. The limit defaults to the mean
// of all losses; pass `limit` when the true value is known. Checks counts
// 10, 20, 50, 100, 200, 500, ... up to the number of losses.
ConvergenceReport convergence_check(std::span<const double> losses, std::optional<double> limit = std::nullopt);

}  // namespace coeval::stats
