#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coeval/selection.hpp"
#include "coeval/tokens.hpp"

namespace coeval::simnet {

// Validation failure; the message starts with the offending field path,
// e.g. "params.rho: ...".
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Behavior { Honest, Adversarial, Lazy };
enum class AdversaryMode { Uniform, Offset };

std::string_view behavior_name(Behavior b);

struct AgentSpec {
  std::string node_id;
  Behavior behavior = Behavior::Honest;
  selection::EvaluatorProfile profile;  // node_id mirrors the agent's
  std::string config_id;                // hardware / inference-parameter bucket
  Tokens balance = Tokens::whole(100);  // genesis allocation
  Tokens stake_target = Tokens::whole(10);
  std::optional<double> sigma_within;   // overrides the world value for this agent
  AdversaryMode adversary_mode = AdversaryMode::Uniform;
  double adversary_offset = 0.0;
  double reveal_failure_probability = 0.0;  // Lazy only
};

struct TrueScore {
  std::string model_id;
  std::string benchmark_id;
  double score = 0.0;
};

struct BenchmarkSpec {
  std::string benchmark_id;
  std::size_t items = 100;
  std::uint32_t strata = 3;
};

struct WorldModel {
  double sigma_between = 0.0;
  double sigma_within = 0.0;
  std::vector<TrueScore> true_scores;     // one task per entry per round
  std::vector<BenchmarkSpec> benchmarks;  // synthetic manifests; defaults fill missing ids
  // Draw delta_c afresh every round instead of once per run.
  bool redraw_config_effects = false;
};

struct RoundParams {
  std::size_t k_required = 10;
  double lambda = 0.7;
  double gamma = 0.0;
  std::size_t rho = 1;
  std::size_t n = 10;  // partition subset count
  double bin_width = 0.5;
  double k_decay = 1.25;
  Tokens r_total = Tokens::whole(100);
  Tokens min_stake = Tokens::whole(1);
  double slash_fraction = 1.0;
  double reputation_rate = 0.1;
  // Runs the single-config baseline performs per round; 0 means k_required.
  std::size_t centralized_runs_per_round = 0;
  // Baseline configuration; empty means the first agent's configuration.
  std::string centralized_config;
  double histogram_bin_width = 0.5;
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  std::uint64_t rounds = 1;
  std::vector<AgentSpec> agents;
  WorldModel world;
  RoundParams params;

  void validate() const;
};

// Accepts explicit "agents" and/or generated "agent_groups"; see README for
// the schema. Throws ScenarioError with a field path on any problem.
ScenarioConfig parse_scenario(std::string_view json_text);

}  // namespace coeval::simnet
