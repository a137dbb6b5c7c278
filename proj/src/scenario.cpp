#include "coeval/scenario.hpp"

#include <json.hpp>

#include "coeval/rng.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace coeval::simnet {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ScenarioError(path + ": " + what); }

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(path.empty() ? "(root)" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) fail(join(path, key), "unknown field");
  }
}

template <typename T>
T read(const json& obj, const std::string& path, std::string_view key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(join(path, key), "has the wrong type");
  }
}

template <typename T>
T require(const json& obj, const std::string& path, std::string_view key) {
  if (!obj.contains(key)) fail(join(path, key), "is required");
  return read<T>(obj, path, key, T{});
}

Tokens read_tokens(const json& obj, const std::string& path, std::string_view key, Tokens fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    if (it->is_string()) return Tokens::parse(it->get<std::string>());
    if (it->is_number()) return Tokens::from_double(it->get<double>());
  } catch (const std::invalid_argument& e) {
    fail(join(path, key), e.what());
  }
  fail(join(path, key), "must be a number or a decimal string");
}

Behavior parse_behavior(const std::string& text, const std::string& path) {
  if (text == "honest") return Behavior::Honest;
  if (text == "adversarial") return Behavior::Adversarial;
  if (text == "lazy") return Behavior::Lazy;
  fail(path, "unknown behavior '" + text + "' (expected honest, adversarial or lazy)");
}

// Fields shared by explicit agents and agent groups.
void read_agent_fields(const json& j, const std::string& path, AgentSpec& a) {
  a.behavior = parse_behavior(read<std::string>(j, path, "behavior", "honest"), join(path, "behavior"));
  a.balance = read_tokens(j, path, "balance", a.balance);
  a.stake_target = read_tokens(j, path, "stake", a.stake_target);
  a.profile.reputation = read<double>(j, path, "reputation", a.profile.reputation);
  a.profile.tasks_participated = read<std::uint64_t>(j, path, "tasks_participated", 0);
  a.profile.explicit_features = read<std::vector<std::string>>(j, path, "explicit_features", {});
  a.profile.implicit_features = read<std::vector<double>>(j, path, "implicit_features", {});
  if (j.contains("sigma_within")) a.sigma_within = read<double>(j, path, "sigma_within", 0.0);
  a.reveal_failure_probability = read<double>(j, path, "reveal_failure_probability", 0.0);
  if (j.contains("adversary")) {
    const auto& adv = j.at("adversary");
    const std::string apath = join(path, "adversary");
    reject_unknown(adv, apath, {"mode", "offset"});
    const auto mode = read<std::string>(adv, apath, "mode", "uniform");
    if (mode == "uniform") {
      a.adversary_mode = AdversaryMode::Uniform;
    } else if (mode == "offset") {
      a.adversary_mode = AdversaryMode::Offset;
      a.adversary_offset = require<double>(adv, apath, "offset");
    } else {
      fail(join(apath, "mode"), "unknown adversary mode '" + mode + "'");
    }
  }
}

const std::initializer_list<std::string_view> kAgentFields = {
    "node_id", "behavior", "config_id", "balance", "stake", "reputation", "tasks_participated",
    "explicit_features", "implicit_features", "sigma_within", "reveal_failure_probability", "adversary"};

}  // namespace

std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::Honest: return "honest";
    case Behavior::Adversarial: return "adversarial";
    case Behavior::Lazy: return "lazy";
  }
  return "unknown";
}

ScenarioConfig parse_scenario(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("(root): not valid JSON: ") + e.what());
  }
  reject_unknown(root, "", {"seed", "rounds", "agents", "agent_groups", "world", "params"});

  ScenarioConfig cfg;
  cfg.seed = read<std::uint64_t>(root, "", "seed", 0);
  cfg.rounds = read<std::uint64_t>(root, "", "rounds", 1);

  if (root.contains("agents")) {
    const auto& agents = root.at("agents");
    if (!agents.is_array()) fail("agents", "expected an array");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string path = "agents[" + std::to_string(i) + "]";
      reject_unknown(agents[i], path, kAgentFields);
      AgentSpec a;
      a.node_id = require<std::string>(agents[i], path, "node_id");
      read_agent_fields(agents[i], path, a);
      a.config_id = read<std::string>(agents[i], path, "config_id", a.node_id);
      cfg.agents.push_back(std::move(a));
    }
  }
  if (root.contains("agent_groups")) {
    const auto& groups = root.at("agent_groups");
    if (!groups.is_array()) fail("agent_groups", "expected an array");
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const std::string path = "agent_groups[" + std::to_string(g) + "]";
      const auto& gj = groups[g];
      reject_unknown(gj, path,
                     {"count", "prefix", "config_ids", "behavior", "balance", "stake", "reputation",
                      "tasks_participated", "explicit_features", "implicit_features", "sigma_within",
                      "reveal_failure_probability", "adversary", "random_implicit_dim"});
      const auto count = require<std::size_t>(gj, path, "count");
      const auto prefix = require<std::string>(gj, path, "prefix");
      const auto configs = read<std::vector<std::string>>(gj, path, "config_ids", {});
      const auto random_dim = read<std::size_t>(gj, path, "random_implicit_dim", 0);
      if (random_dim > 0 && gj.contains("implicit_features")) {
        fail(join(path, "random_implicit_dim"), "conflicts with implicit_features");
      }
      for (std::size_t i = 0; i < count; ++i) {
        AgentSpec a;
        char suffix[32];
        std::snprintf(suffix, sizeof suffix, "-%03zu", i);
        a.node_id = prefix + suffix;
        read_agent_fields(gj, path, a);
        a.config_id = configs.empty() ? a.node_id : configs[i % configs.size()];
        if (random_dim > 0) {
          // Latent embedding keyed by (seed, node id) so it does not depend on group order.
          Xoshiro256 rng(derive_seed(cfg.seed, {0x696d706cULL, fnv1a(a.node_id)}));
          for (std::size_t d = 0; d < random_dim; ++d) a.profile.implicit_features.push_back(rng.normal());
        }
        cfg.agents.push_back(std::move(a));
      }
    }
  }
  for (auto& a : cfg.agents) a.profile.node_id = a.node_id;

  if (!root.contains("world")) fail("world", "is required");
  {
    const auto& w = root.at("world");
    reject_unknown(w, "world",
                   {"sigma_between", "sigma_within", "true_scores", "benchmarks", "redraw_config_effects"});
    cfg.world.redraw_config_effects = read<bool>(w, "world", "redraw_config_effects", false);
    cfg.world.sigma_between = read<double>(w, "world", "sigma_between", 0.0);
    cfg.world.sigma_within = read<double>(w, "world", "sigma_within", 0.0);
    if (!w.contains("true_scores") || !w.at("true_scores").is_array()) {
      fail("world.true_scores", "is required and must be an array");
    }
    const auto& ts = w.at("true_scores");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string path = "world.true_scores[" + std::to_string(i) + "]";
      reject_unknown(ts[i], path, {"model_id", "benchmark_id", "score"});
      cfg.world.true_scores.push_back({require<std::string>(ts[i], path, "model_id"),
                                       require<std::string>(ts[i], path, "benchmark_id"),
                                       require<double>(ts[i], path, "score")});
    }
    if (w.contains("benchmarks")) {
      const auto& bs = w.at("benchmarks");
      if (!bs.is_array()) fail("world.benchmarks", "expected an array");
      for (std::size_t i = 0; i < bs.size(); ++i) {
        const std::string path = "world.benchmarks[" + std::to_string(i) + "]";
        reject_unknown(bs[i], path, {"benchmark_id", "items", "strata"});
        cfg.world.benchmarks.push_back({require<std::string>(bs[i], path, "benchmark_id"),
                                        read<std::size_t>(bs[i], path, "items", 100),
                                        read<std::uint32_t>(bs[i], path, "strata", 3)});
      }
    }
  }

  if (root.contains("params")) {
    const auto& p = root.at("params");
    const std::string path = "params";
    reject_unknown(p, path,
                   {"k_required", "lambda", "gamma", "rho", "n", "bin_width", "k_decay", "r_total", "min_stake",
                    "slash_fraction", "reputation_rate", "centralized_runs_per_round", "centralized_config",
                    "histogram_bin_width"});
    auto& rp = cfg.params;
    rp.k_required = read<std::size_t>(p, path, "k_required", rp.k_required);
    rp.lambda = read<double>(p, path, "lambda", rp.lambda);
    rp.gamma = read<double>(p, path, "gamma", rp.gamma);
    rp.rho = read<std::size_t>(p, path, "rho", rp.rho);
    rp.n = read<std::size_t>(p, path, "n", rp.n);
    rp.bin_width = read<double>(p, path, "bin_width", rp.bin_width);
    rp.k_decay = read<double>(p, path, "k_decay", rp.k_decay);
    rp.r_total = read_tokens(p, path, "r_total", rp.r_total);
    rp.min_stake = read_tokens(p, path, "min_stake", rp.min_stake);
    rp.slash_fraction = read<double>(p, path, "slash_fraction", rp.slash_fraction);
    rp.reputation_rate = read<double>(p, path, "reputation_rate", rp.reputation_rate);
    rp.centralized_runs_per_round = read<std::size_t>(p, path, "centralized_runs_per_round", 0);
    rp.centralized_config = read<std::string>(p, path, "centralized_config", "");
    rp.histogram_bin_width = read<double>(p, path, "histogram_bin_width", rp.histogram_bin_width);
  }

  cfg.validate();
  return cfg;
}

void ScenarioConfig::validate() const {
  if (rounds < 1) fail("rounds", "must be at least 1");
  if (agents.empty()) fail("agents", "at least one agent is required");
  std::set<std::string_view> ids;
  std::set<std::string_view> configs;
  const std::size_t dim = agents.front().profile.implicit_features.size();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    const std::string path = "agents[" + std::to_string(i) + "]";
    if (a.node_id.empty()) fail(path + ".node_id", "must not be empty");
    if (!ids.insert(a.node_id).second) fail(path + ".node_id", "duplicate node id '" + a.node_id + "'");
    configs.insert(a.config_id);
    if (!(a.profile.reputation >= 0.0 && a.profile.reputation <= 1.0)) fail(path + ".reputation", "must lie in [0, 1]");
    if (a.profile.implicit_features.size() != dim) fail(path + ".implicit_features", "dimension differs from agents[0]");
    if (a.sigma_within && !(*a.sigma_within >= 0.0)) fail(path + ".sigma_within", "must be non-negative");
    if (!(a.reveal_failure_probability >= 0.0 && a.reveal_failure_probability <= 1.0)) {
      fail(path + ".reveal_failure_probability", "must lie in [0, 1]");
    }
    if (a.balance < Tokens{}) fail(path + ".balance", "must be non-negative");
    if (a.stake_target < Tokens{}) fail(path + ".stake", "must be non-negative");
    if (!std::isfinite(a.adversary_offset)) fail(path + ".adversary.offset", "must be finite");
  }

  if (!(world.sigma_between >= 0.0)) fail("world.sigma_between", "must be non-negative");
  if (!(world.sigma_within >= 0.0)) fail("world.sigma_within", "must be non-negative");
  if (world.true_scores.empty()) fail("world.true_scores", "at least one (model, benchmark) score is required");
  std::set<std::pair<std::string_view, std::string_view>> tasks;
  for (std::size_t i = 0; i < world.true_scores.size(); ++i) {
    const auto& t = world.true_scores[i];
    const std::string path = "world.true_scores[" + std::to_string(i) + "]";
    if (!(t.score >= 0.0 && t.score <= 100.0)) fail(path + ".score", "must lie in [0, 100]");
    if (!tasks.insert({t.model_id, t.benchmark_id}).second) fail(path, "duplicate (model_id, benchmark_id)");
  }
  std::set<std::string_view> bench_ids;
  for (std::size_t i = 0; i < world.benchmarks.size(); ++i) {
    const auto& b = world.benchmarks[i];
    const std::string path = "world.benchmarks[" + std::to_string(i) + "]";
    if (!bench_ids.insert(b.benchmark_id).second) fail(path + ".benchmark_id", "duplicate benchmark id");
    if (b.items < 1) fail(path + ".items", "must be at least 1");
    if (b.strata < 1) fail(path + ".strata", "must be at least 1");
  }

  const auto& p = params;
  if (p.k_required < 1) fail("params.k_required", "must be at least 1");
  if (!(p.lambda >= 0.0 && p.lambda <= 1.0)) fail("params.lambda", "must lie in [0, 1]");
  if (!(p.gamma >= 0.0)) fail("params.gamma", "must be non-negative");
  if (p.n < 1) fail("params.n", "must be at least 1");
  if (p.rho < 1) fail("params.rho", "must be at least 1");
  if (p.rho > p.n) {
    fail("params.rho", "infeasible redundancy: rho (" + std::to_string(p.rho) + ") exceeds params.n (" +
                           std::to_string(p.n) + ")");
  }
  if (!(p.bin_width >= 0.0001)) fail("params.bin_width", "must be at least 0.0001");
  if (!(p.k_decay >= 1.0 && p.k_decay <= 1.5)) fail("params.k_decay", "must lie in [1, 1.5]");
  if (p.r_total < Tokens{}) fail("params.r_total", "must be non-negative");
  if (p.min_stake < Tokens{}) fail("params.min_stake", "must be non-negative");
  if (!(p.slash_fraction >= 0.0 && p.slash_fraction <= 1.0)) fail("params.slash_fraction", "must lie in [0, 1]");
  if (!(p.reputation_rate >= 0.0 && p.reputation_rate <= 1.0)) fail("params.reputation_rate", "must lie in [0, 1]");
  if (!(p.histogram_bin_width > 0.0)) fail("params.histogram_bin_width", "must be positive");
  if (!p.centralized_config.empty() && !configs.contains(p.centralized_config)) {
    fail("params.centralized_config", "no agent uses configuration '" + p.centralized_config + "'");
  }
}

}  // namespace coeval::simnet
