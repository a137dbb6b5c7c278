#include "coeval/simnet.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

namespace coeval::simnet {

using nlohmann::ordered_json;

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kScoreStream = 1;
constexpr std::uint64_t kSaltStream = 2;
constexpr std::uint64_t kConfigStream = 3;
constexpr std::uint64_t kPartitionStream = 4;
constexpr std::uint64_t kCentralStream = 5;

double on_grid(double score) { return static_cast<double>(score_units(score)) / 1e4; }

consensus::Salt draw_salt(Xoshiro256& rng) {
  consensus::Salt salt{};
  for (std::size_t i = 0; i < salt.size(); i += 8) {
    std::uint64_t word = rng.next();
    for (std::size_t b = 0; b < 8; ++b) salt[i + b] = static_cast<std::uint8_t>(word >> (8 * b));
  }
  return salt;
}

std::string task_key(const TrueScore& t) { return t.model_id + "/" + t.benchmark_id; }

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

double honest_score(double mu, double config_effect, double sigma_within, Xoshiro256& rng) {
  const double noise = sigma_within > 0.0 ? rng.normal(0.0, sigma_within) : 0.0;
  return on_grid(std::clamp(mu + config_effect + noise, 0.0, 100.0));
}

std::vector<HistogramBin> reward_histogram(const std::vector<RewardRecord>& rewards, double bin_width, Tokens pool) {
  const auto width = static_cast<std::int64_t>(std::llround(bin_width * 1e6));
  if (width <= 0) throw std::invalid_argument("histogram bin width must be at least one micro-token");
  std::int64_t top = pool.micros();
  for (const auto& r : rewards) top = std::max(top, r.amount.micros());
  std::vector<HistogramBin> bins(static_cast<std::size_t>(top / width) + 1);
  for (std::size_t j = 0; j < bins.size(); ++j) {
    bins[j].low = static_cast<double>(static_cast<std::int64_t>(j) * width) / 1e6;
    bins[j].high = static_cast<double>(static_cast<std::int64_t>(j + 1) * width) / 1e6;
  }
  for (const auto& r : rewards) ++bins[static_cast<std::size_t>(r.amount.micros() / width)].count;
  return bins;
}

Simulation::Simulation(ScenarioConfig config)
    : config_(std::move(config)), ledger_([&] {
        config_.validate();
        std::vector<std::pair<std::string, Tokens>> alloc;
        for (const auto& a : config_.agents) alloc.emplace_back(a.node_id, a.balance);
        return ledger::Ledger(alloc);
      }()) {
  for (std::size_t i = 0; i < config_.agents.size(); ++i) {
    agents_.push_back({config_.agents[i], config_.agents[i].profile});
    agents_.back().profile.node_id = config_.agents[i].node_id;
    by_id_.emplace(config_.agents[i].node_id, i);
  }
  if (!config_.world.redraw_config_effects) {
    for (const auto& a : agents_) {
      if (config_effects_.contains(a.spec.config_id)) continue;
      Xoshiro256 rng(stream(kConfigStream, {fnv1a(a.spec.config_id)}));
      config_effects_.emplace(a.spec.config_id, rng.normal(0.0, config_.world.sigma_between));
    }
  }
}

std::uint64_t Simulation::stream(std::uint64_t tag, std::initializer_list<std::uint64_t> more) const {
  std::uint64_t s = derive_seed(config_.seed, {tag});
  return derive_seed(s, more);
}

double Simulation::config_effect(const std::string& config_id) const {
  if (!config_.world.redraw_config_effects) return config_effects_.at(config_id);
  Xoshiro256 rng(stream(kConfigStream, {fnv1a(config_id), round_}));
  return rng.normal(0.0, config_.world.sigma_between);
}

const selection::EvaluatorProfile& Simulation::profile(const std::string& node_id) const {
  return agents_.at(by_id_.at(node_id)).profile;
}

const partition::BenchmarkManifest& Simulation::manifest(const std::string& benchmark_id) {
  auto it = manifests_.find(benchmark_id);
  if (it != manifests_.end()) return it->second;
  BenchmarkSpec spec{benchmark_id};
  for (const auto& b : config_.world.benchmarks) {
    if (b.benchmark_id == benchmark_id) spec = b;
  }
  return manifests_.emplace(benchmark_id, partition::synthetic_manifest(benchmark_id, spec.items, spec.strata))
      .first->second;
}

RoundReport Simulation::run_round() {
  ++round_;
  RoundReport report;
  report.round = round_;
  try {
    // Top stakes back up to each agent's target.
    std::vector<ledger::LedgerEvent> stakes;
    ++tick_;
    for (const auto& a : agents_) {
      const auto& acct = ledger_.account(a.spec.node_id);
      if (acct.staked >= a.spec.stake_target) continue;
      const Tokens want = std::min(a.spec.stake_target - acct.staked, acct.balance);
      if (want > Tokens{}) stakes.push_back({tick_, ledger::StakePayload{a.spec.node_id, want}});
    }
    if (!stakes.empty()) ledger_.append_block(std::move(stakes));

    std::map<std::string, double> before;
    for (const auto& a : agents_) before.emplace(a.spec.node_id, a.profile.reputation);
    std::vector<ReputationDelta> touched;
    for (std::size_t t = 0; t < config_.world.true_scores.size(); ++t) report.tasks.push_back(run_task(t, touched));

    std::set<std::string> seen;
    for (const auto& d : touched) seen.insert(d.node_id);
    for (const auto& id : seen) report.reputation_deltas.push_back({id, before.at(id), profile(id).reputation});
  } catch (const std::exception& e) {
    throw std::runtime_error("round " + std::to_string(round_) + ": " + e.what());
  }
  report.ledger_head = ledger_.head_hash();
  return report;
}

TaskReport Simulation::run_task(std::size_t task_index, std::vector<ReputationDelta>& touched) {
  const auto& truth = config_.world.true_scores[task_index];
  const auto& p = config_.params;
  TaskReport tr;
  tr.task_id = task_key(truth) + "/r" + std::to_string(round_);
  tr.model_id = truth.model_id;
  tr.benchmark_id = truth.benchmark_id;

  // Selection over current profiles with stake read from the ledger.
  std::vector<selection::EvaluatorProfile> candidates;
  for (const auto& a : agents_) {
    candidates.push_back(a.profile);
    candidates.back().stake = ledger_.account(a.spec.node_id).staked;
  }
  tr.roster = selection::mmr_select(tr.task_id, candidates, {p.k_required, p.lambda, p.gamma, p.min_stake});

  // Partition; subset j goes to roster member j mod |roster|.
  const std::uint64_t part_seed = stream(kPartitionStream, {round_, task_index});
  const auto assignment = partition::partition(manifest(truth.benchmark_id), p.n, p.rho, part_seed);
  tr.assignment = {assignment.subsets_n, assignment.rho, assignment.seed, {}, {}};
  for (std::size_t j = 0; j < assignment.subsets.size(); ++j) {
    tr.assignment.subset_sizes.push_back(assignment.subsets[j].size());
    if (!tr.roster.selected.empty()) tr.assignment.owners.push_back(tr.roster.selected[j % tr.roster.selected.size()]);
  }

  // Agent scoring and commitments.
  const std::uint64_t commit_tick = ++tick_;
  const std::uint64_t reveal_tick = ++tick_;
  std::vector<consensus::Commitment> commits;
  std::vector<consensus::Reveal> reveals;
  for (const auto& id : tr.roster.selected) {
    const auto& agent = agents_.at(by_id_.at(id));
    const auto& spec = agent.spec;
    Xoshiro256 rng(stream(kScoreStream, {fnv1a(id), round_, task_index}));
    const double sigma = spec.sigma_within.value_or(config_.world.sigma_within);
    double score = 0.0;
    bool reveals_score = true;
    switch (spec.behavior) {
      case Behavior::Honest:
        score = honest_score(truth.score, config_effect(spec.config_id), sigma, rng);
        break;
      case Behavior::Adversarial:
        score = spec.adversary_mode == AdversaryMode::Uniform
                    ? on_grid(rng.uniform(0.0, 100.0))
                    : on_grid(std::clamp(truth.score + spec.adversary_offset, 0.0, 100.0));
        break;
      case Behavior::Lazy:
        score = honest_score(truth.score, config_effect(spec.config_id), sigma, rng);
        reveals_score = !(rng.uniform01() < spec.reveal_failure_probability);
        break;
    }
    Xoshiro256 salt_rng(stream(kSaltStream, {fnv1a(id), round_, task_index}));
    const consensus::Salt salt = draw_salt(salt_rng);
    commits.push_back({id, tr.task_id, consensus::make_commitment(score, salt), commit_tick});
    if (reveals_score) reveals.push_back({id, tr.task_id, score, salt, reveal_tick});
  }

  if (!commits.empty()) {
    std::vector<ledger::LedgerEvent> events;
    for (const auto& c : commits) events.push_back(consensus::commit_event(c));
    ledger_.append_block(std::move(events));
  }
  if (!reveals.empty()) {
    std::vector<ledger::LedgerEvent> events;
    for (const auto& r : reveals) events.push_back(consensus::reveal_event(r));
    ledger_.append_block(std::move(events));
  }

  tr.consensus = consensus::run_task_consensus(tr.task_id, commits, commit_tick, reveals, p.bin_width);

  // Settlement: consensus record, slashes, rewards.
  std::vector<ledger::LedgerEvent> settle{consensus::consensus_event(tr.consensus, reveal_tick)};
  for (const auto& id : tr.consensus.non_revealers) {
    const Tokens staked = ledger_.account(id).staked;
    if (staked <= Tokens{}) continue;
    const Tokens amount = ledger::slash_amount(staked, p.slash_fraction);
    if (amount <= Tokens{}) continue;
    settle.push_back({reveal_tick, ledger::SlashPayload{id, tr.task_id, "non_reveal", amount}});
    tr.slashes.push_back({round_, id, tr.task_id, "non_reveal", amount});
  }
  tr.rewards.task_id = tr.task_id;
  if (!tr.consensus.accepted_reveals.empty()) {
    std::vector<std::string> ids;
    std::vector<double> scores;
    for (const auto& s : tr.consensus.accepted_reveals) {
      ids.push_back(s.node_id);
      scores.push_back(s.score);
    }
    tr.rewards = incentives::allocate_rewards(tr.task_id, ids, scores, p.r_total, p.k_decay);
    for (auto& e : incentives::reward_events(tr.rewards, reveal_tick)) settle.push_back(std::move(e));
  }
  ledger_.append_block(std::move(settle));

  // Reputation: accepted reveals by weight, non-revealers as weight zero.
  std::vector<double> peer_weights;
  for (const auto& e : tr.rewards.entries) peer_weights.push_back(e.weight);
  for (const auto& e : tr.rewards.entries) {
    incentives::update_reputation(agents_.at(by_id_.at(e.node_id)).profile, e.weight, peer_weights,
                                  p.reputation_rate);
    touched.push_back({e.node_id, 0, 0});
  }
  for (const auto& id : tr.consensus.non_revealers) {
    incentives::update_reputation(agents_.at(by_id_.at(id)).profile, 0.0, peer_weights, p.reputation_rate);
    touched.push_back({id, 0, 0});
  }

  // Logs for the aggregate report.
  for (const auto& e : tr.rewards.entries) {
    reward_log_.push_back({round_, tr.task_id, e.node_id, agents_.at(by_id_.at(e.node_id)).spec.behavior, e.score,
                           e.reward});
  }
  slash_log_.insert(slash_log_.end(), tr.slashes.begin(), tr.slashes.end());
  if (!tr.consensus.accepted_reveals.empty()) {
    double sum = 0.0;
    for (const auto& s : tr.consensus.accepted_reveals) sum += s.score;
    decentralized_means_[task_key(truth)].push_back(sum / static_cast<double>(tr.consensus.accepted_reveals.size()));
  }

  // Single-configuration baseline with the same per-round budget.
  const std::string& central_config =
      p.centralized_config.empty() ? agents_.front().spec.config_id : p.centralized_config;
  double central_sigma = config_.world.sigma_within;
  for (const auto& a : agents_) {
    if (a.spec.config_id == central_config) {
      central_sigma = a.spec.sigma_within.value_or(central_sigma);
      break;
    }
  }
  const std::size_t runs = p.centralized_runs_per_round ? p.centralized_runs_per_round : p.k_required;
  Xoshiro256 central_rng(stream(kCentralStream, {round_, task_index}));
  const double effect = config_effect(central_config);
  auto& pooled = centralized_runs_[task_key(truth)];
  for (std::size_t i = 0; i < runs; ++i) pooled.push_back(honest_score(truth.score, effect, central_sigma, central_rng));

  return tr;
}

AggregateReport Simulation::aggregate() const {
  AggregateReport agg;
  agg.rounds = round_;
  agg.reward_log = reward_log_;
  agg.slash_log = slash_log_;
  agg.decentralized_means = decentralized_means_;
  agg.centralized_runs = centralized_runs_;
  agg.histogram = reward_histogram(reward_log_, config_.params.histogram_bin_width, config_.params.r_total);
  for (const auto& t : config_.world.true_scores) {
    const std::string key = task_key(t);
    auto add = [&](const char* method, const std::map<std::string, std::vector<double>>& source) {
      auto it = source.find(key);
      if (it == source.end() || it->second.size() < 2) return;
      agg.stability.push_back({key, method, stats::summarize(std::span<const double>(it->second))});
    };
    add("centralized", centralized_runs_);
    add("decentralized", decentralized_means_);
  }
  agg.supply_minted = ledger_.book().minted();
  agg.supply_burned = ledger_.book().burned();
  agg.ledger_head = ledger_.head_hash();
  return agg;
}

AggregateReport run_scenario(const ScenarioConfig& config, std::vector<RoundReport>* reports) {
  Simulation sim(config);
  for (std::uint64_t r = 0; r < config.rounds; ++r) {
    auto report = sim.run_round();
    if (reports) reports->push_back(std::move(report));
  }
  return sim.aggregate();
}

std::string round_report_json(const RoundReport& report) {
  ordered_json j;
  j["round"] = report.round;
  j["tasks"] = ordered_json::array();
  for (const auto& t : report.tasks) {
    ordered_json tj;
    tj["task_id"] = t.task_id;
    tj["model_id"] = t.model_id;
    tj["benchmark_id"] = t.benchmark_id;
    tj["roster"] = t.roster.selected;
    tj["assignment"] = {{"N", t.assignment.subsets_n},
                        {"rho", t.assignment.rho},
                        {"seed", t.assignment.seed},
                        {"subset_sizes", t.assignment.subset_sizes},
                        {"owners", t.assignment.owners}};
    ordered_json cj;
    cj["focal_score"] = t.consensus.focal_score ? ordered_json(format_score(*t.consensus.focal_score)) : nullptr;
    cj["accepted"] = ordered_json::array();
    for (const auto& s : t.consensus.accepted_reveals) {
      cj["accepted"].push_back({{"node_id", s.node_id}, {"score", format_score(s.score)}});
    }
    cj["non_revealers"] = t.consensus.non_revealers;
    cj["rejected"] = ordered_json::array();
    for (const auto& r : t.consensus.rejected) {
      cj["rejected"].push_back({{"node_id", r.node_id}, {"status", consensus::status_name(r.status)}});
    }
    tj["consensus"] = cj;
    ordered_json rj;
    rj["median"] = t.rewards.median;
    rj["mad"] = t.rewards.mad;
    rj["sigma"] = t.rewards.sigma;
    rj["entries"] = ordered_json::array();
    for (const auto& e : t.rewards.entries) {
      rj["entries"].push_back(
          {{"node_id", e.node_id}, {"score", format_score(e.score)}, {"weight", e.weight}, {"reward", e.reward.str()}});
    }
    tj["rewards"] = rj;
    tj["slashes"] = ordered_json::array();
    for (const auto& s : t.slashes) {
      tj["slashes"].push_back({{"node_id", s.node_id}, {"reason", s.reason}, {"amount", s.amount.str()}});
    }
    j["tasks"].push_back(std::move(tj));
  }
  j["reputation_deltas"] = ordered_json::array();
  for (const auto& d : report.reputation_deltas) {
    j["reputation_deltas"].push_back({{"node_id", d.node_id}, {"before", d.before}, {"after", d.after}});
  }
  j["ledger_head"] = to_hex(report.ledger_head);
  return j.dump();
}

std::string stability_csv(const AggregateReport& report) {
  std::string out = "model,method,mean,std,ci_z,ci_t\n";
  for (const auto& row : report.stability) {
    out += row.model + "," + row.method + "," + fixed6(row.summary.mean) + "," + fixed6(row.summary.sample_std) + "," +
           fixed6(row.summary.ci95_z) + "," + fixed6(row.summary.ci95_t) + "\n";
  }
  return out;
}

std::string histogram_csv(const AggregateReport& report) {
  std::string out = "bin_low,bin_high,count\n";
  for (const auto& b : report.histogram) {
    out += fixed6(b.low) + "," + fixed6(b.high) + "," + std::to_string(b.count) + "\n";
  }
  return out;
}

std::string summary_json(const AggregateReport& report) {
  ordered_json j;
  j["rounds"] = report.rounds;
  j["supply_minted"] = report.supply_minted.str();
  j["supply_burned"] = report.supply_burned.str();
  j["ledger_head"] = to_hex(report.ledger_head);
  return j.dump();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

RunOutputs simulate_to_directory(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Simulation sim(config);
  std::string rounds;
  for (std::uint64_t r = 0; r < config.rounds; ++r) rounds += round_report_json(sim.run_round()) + "\n";
  RunOutputs out{sim.aggregate(), sim.ledger().export_ndjson()};
  write_file(out_dir / "round_reports.ndjson", rounds);
  write_file(out_dir / "rewards_histogram.csv", histogram_csv(out.aggregate));
  write_file(out_dir / "stability.csv", stability_csv(out.aggregate));
  write_file(out_dir / "ledger.ndjson", out.ledger_ndjson);
  return out;
}

}  // namespace coeval::simnet
