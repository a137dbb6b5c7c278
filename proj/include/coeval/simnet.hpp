#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coeval/consensus.hpp"
#include "coeval/incentives.hpp"
#include "coeval/ledger.hpp"
#include "coeval/partition.hpp"
#include "coeval/rng.hpp"
#include "coeval/scenario.hpp"
#include "coeval/selection.hpp"
#include "coeval/stats.hpp"

namespace coeval::simnet {

struct SlashRecord {
  std::uint64_t round = 0;
  std::string node_id;
  std::string task_id;
  std::string reason;
  Tokens amount;
};

struct RewardRecord {
  std::uint64_t round = 0;
  std::string task_id;
  std::string node_id;
  Behavior behavior = Behavior::Honest;
  double score = 0.0;
  Tokens amount;
};

struct AssignmentSummary {
  std::size_t subsets_n = 0;
  std::size_t rho = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> subset_sizes;
  std::vector<std::string> owners;  // owners[j] evaluates subset j
};

struct TaskReport {
  std::string task_id;
  std::string model_id;
  std::string benchmark_id;
  selection::SelectionRoster roster;
  AssignmentSummary assignment;
  consensus::ConsensusResult consensus;
  incentives::RewardAllocation rewards;  // empty entries when nothing was accepted
  std::vector<SlashRecord> slashes;
};

struct ReputationDelta {
  std::string node_id;
  double before = 0.0;
  double after = 0.0;
};

struct RoundReport {
  std::uint64_t round = 0;  // 1-based
  std::vector<TaskReport> tasks;
  std::vector<ReputationDelta> reputation_deltas;  // only nodes whose reputation was updated
  Digest ledger_head{};
};

struct StabilityRow {
  std::string model;   // "<model_id>/<benchmark_id>"
  std::string method;  // "centralized" or "decentralized"
  stats::StatsSummary summary;
};

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
};

struct AggregateReport {
  std::uint64_t rounds = 0;
  std::vector<StabilityRow> stability;  // rows with fewer than two values are omitted
  std::vector<HistogramBin> histogram;
  std::vector<RewardRecord> reward_log;
  std::vector<SlashRecord> slash_log;
  // Per task id prefix "<model>/<benchmark>": decentralized per-round means and
  // the pooled centralized runs.
  std::map<std::string, std::vector<double>> decentralized_means;
  std::map<std::string, std::vector<double>> centralized_runs;
  Tokens supply_minted;
  Tokens supply_burned;
  Digest ledger_head{};
};

// Honest report for one run: clamp(mu + delta_c + N(0, sigma_within), 0, 100)
// on the 4-decimal grid.
double honest_score(double mu, double config_effect, double sigma_within, Xoshiro256& rng);

// Reward histogram with bins [j*w, (j+1)*w) covering 0 .. max(pool, largest reward).
std::vector<HistogramBin> reward_histogram(const std::vector<RewardRecord>& rewards, double bin_width, Tokens pool);

class Simulation {
 public:
  explicit Simulation(ScenarioConfig config);

  // Runs the next round; fully determined by (scenario, seed, round index).
  RoundReport run_round();
  // Aggregate over the rounds run so far.
  AggregateReport aggregate() const;

  const ScenarioConfig& config() const { return config_; }
  const ledger::Ledger& ledger() const { return ledger_; }
  std::uint64_t rounds_run() const { return round_; }
  double config_effect(const std::string& config_id) const;
  const selection::EvaluatorProfile& profile(const std::string& node_id) const;

 private:
  struct Agent {
    AgentSpec spec;
    selection::EvaluatorProfile profile;
  };

  TaskReport run_task(std::size_t task_index, std::vector<ReputationDelta>& deltas);
  std::uint64_t stream(std::uint64_t tag, std::initializer_list<std::uint64_t> more) const;
  const partition::BenchmarkManifest& manifest(const std::string& benchmark_id);

  ScenarioConfig config_;
  std::vector<Agent> agents_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::map<std::string, double, std::less<>> config_effects_;
  std::map<std::string, partition::BenchmarkManifest, std::less<>> manifests_;
  ledger::Ledger ledger_;
  std::uint64_t round_ = 0;
  std::uint64_t tick_ = 0;  // logical ledger round

  std::vector<RewardRecord> reward_log_;
  std::vector<SlashRecord> slash_log_;
  std::map<std::string, std::vector<double>> decentralized_means_;
  std::map<std::string, std::vector<double>> centralized_runs_;
};

// Runs every round. Round reports are appended to `reports` when given.
AggregateReport run_scenario(const ScenarioConfig& config, std::vector<RoundReport>* reports = nullptr);

std::string round_report_json(const RoundReport& report);
std::string stability_csv(const AggregateReport& report);
std::string histogram_csv(const AggregateReport& report);
std::string summary_json(const AggregateReport& report);

struct RunOutputs {
  AggregateReport aggregate;
  std::string ledger_ndjson;
};

// Runs the scenario and writes round_reports.ndjson, rewards_histogram.csv,
// stability.csv and ledger.ndjson into `out_dir` (created if missing).
RunOutputs simulate_to_directory(const ScenarioConfig& config, const std::filesystem::path& out_dir);

}  // namespace coeval::simnet
