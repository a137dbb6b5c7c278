#include "coeval/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "coeval/csv.hpp"
#include "coeval/incentives.hpp"
#include "coeval/ledger.hpp"
#include "coeval/partition.hpp"
#include "coeval/selection.hpp"
#include "coeval/simnet.hpp"
#include "coeval/stats.hpp"

namespace coeval::cli {

namespace {

using nlohmann::ordered_json;

// Bad input: missing files, malformed formats, out-of-range values.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
}

// Writes to `path`, or to `out` when the path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file(path, text);
  }
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct Options {
  // simulate
  std::string scenario, out_dir;
  std::optional<std::uint64_t> seed_override;
  // shared
  std::string input, out, summary;
  // stats
  std::string task;
  // rewards
  double k = incentives::kDefaultDecay;
  std::string pool = "100";
  bool allow_any_k = false;
  // select
  std::string candidates, task_id = "task";
  std::size_t k_required = 1;
  double lambda = 0.5, gamma = 0.0;
  std::string min_stake = "0";
  // partition
  std::string manifest, check;
  std::size_t n = 1, rho = 1;
  std::uint64_t seed = 0;
  // verify-ledger
  std::string ledger;
};

int cmd_simulate(const Options& o, std::ostream& out) {
  auto cfg = simnet::parse_scenario(read_file(o.scenario));
  if (o.seed_override) cfg.seed = *o.seed_override;
  const auto result = simnet::simulate_to_directory(cfg, o.out_dir);
  out << simnet::summary_json(result.aggregate) << "\n";
  return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  auto samples = csv::read_score_samples(read_file(o.input));
  std::vector<std::string> order;
  std::map<std::string, std::vector<stats::ScoreSample>> by_task;
  for (auto& s : samples) {
    if (!o.task.empty() && s.task_id != o.task) continue;
    if (!by_task.contains(s.task_id)) order.push_back(s.task_id);
    by_task[s.task_id].push_back(std::move(s));
  }
  if (order.empty()) throw InputError(o.task.empty() ? "no samples" : "no samples for task '" + o.task + "'");
  ordered_json tasks = ordered_json::array();
  for (const auto& id : order) {
    const auto& group = by_task[id];
    const auto s = stats::summarize(std::span<const stats::ScoreSample>(group));
    ordered_json j;
    j["task_id"] = id;
    j["n"] = s.n;
    j["mean"] = s.mean;
    j["std"] = s.sample_std;
    j["se"] = s.se;
    j["ci95_z"] = s.ci95_z;
    j["ci95_t"] = s.ci95_t;
    const bool has_configs =
        std::all_of(group.begin(), group.end(), [](const auto& x) { return !x.config_id.empty(); });
    if (has_configs) {
      const auto v = stats::variance_decomposition(std::span<const stats::ScoreSample>(group));
      j["variance"] = {{"total", v.total}, {"within", v.within}, {"between", v.between}};
    }
    tasks.push_back(std::move(j));
  }
  ordered_json doc;
  doc["tasks"] = std::move(tasks);
  emit(o.out, doc.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_rewards(const Options& o, std::ostream& out) {
  const auto rows = csv::read_node_scores(read_file(o.input));
  std::vector<std::string> ids;
  std::vector<double> scores;
  for (const auto& r : rows) {
    ids.push_back(r.node_id);
    scores.push_back(r.score);
  }
  const auto alloc = incentives::allocate_rewards("cli", ids, scores, Tokens::parse(o.pool), o.k, o.allow_any_k);
  std::string table = "node_id,score,weight,reward\n";
  for (const auto& e : alloc.entries) {
    table += e.node_id + "," + format_score(e.score) + "," + fmt("%.9f", e.weight) + "," + e.reward.str() + "\n";
  }
  write_file(o.out, table);
  ordered_json j;
  j["M"] = alloc.median;
  j["MAD"] = alloc.mad;
  j["sigma"] = alloc.sigma;
  emit(o.summary, j.dump() + "\n", out);
  return kExitOk;
}

int cmd_select(const Options& o, std::ostream& out) {
  const auto profiles = selection::parse_profiles(read_file(o.candidates));
  selection::SelectionParams p{o.k_required, o.lambda, o.gamma, Tokens::parse(o.min_stake)};
  emit(o.out, selection::roster_to_json(selection::mmr_select(o.task_id, profiles, p)) + "\n", out);
  return kExitOk;
}

int cmd_partition(const Options& o, std::ostream& out) {
  const auto manifest = partition::parse_manifest(read_file(o.manifest));
  if (!o.check.empty()) {
    const auto assignment = partition::parse_assignment(read_file(o.check));
    const auto report = partition::check_balance(assignment, manifest);
    emit(o.out, partition::balance_to_json(report) + "\n", out);
    return report.coverage_ok ? kExitOk : kExitValidation;
  }
  const auto assignment = partition::partition(manifest, o.n, o.rho, o.seed);
  emit(o.out, partition::assignment_to_json(assignment) + "\n", out);
  return kExitOk;
}

int cmd_verify_ledger(const Options& o, std::ostream& out) {
  const auto text = read_file(o.ledger);
  const auto r = ledger::verify_ndjson(text);
  ordered_json j;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["first_bad_index"] = r.first_bad_index.value_or(0);
    j["reason"] = r.reason;
  }
  out << j.dump() << "\n";
  return r.ok ? kExitOk : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized evaluation protocol toolkit", args.empty() ? "coeval" : args.front()};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Run a scenario and write round reports, histogram, stability table and ledger");
  sim->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
  sim->add_option("--out", o.out_dir, "Output directory (created if missing)")->required();
  sim->add_option("--seed", o.seed_override, "Override the scenario seed");

  auto* st = app.add_subcommand("stats", "Per-task summary (mean, std, SE, 95% CIs) and variance decomposition");
  st->add_option("--input", o.input, "CSV with columns score,node_id,task_id[,config_id]")->required();
  st->add_option("--task", o.task, "Only summarize this task id");
  st->add_option("--out", o.out, "Write the JSON summary here instead of standard output");

  auto* rw = app.add_subcommand("rewards", "Median/MAD Gaussian reward allocation for one task");
  rw->add_option("--input", o.input, "CSV with columns node_id,score")->required();
  rw->add_option("--k", o.k, "Decay multiplier k, sigma = k * MAD")->capture_default_str();
  rw->add_option("--pool", o.pool, "Reward pool in tokens")->capture_default_str();
  rw->add_flag("--allow-any-k", o.allow_any_k, "Accept k outside [1, 1.5]");
  rw->add_option("--out", o.out, "Allocation CSV (node_id,score,weight,reward)")->required();
  rw->add_option("--summary", o.summary, "Write the {M, MAD, sigma} JSON here instead of standard output");

  auto* sel = app.add_subcommand("select", "MMR evaluator selection");
  sel->add_option("--candidates", o.candidates, "JSON array of evaluator profiles")->required();
  sel->add_option("--k", o.k_required, "Number of evaluators to select")->required();
  sel->add_option("--lambda", o.lambda, "Quality/diversity trade-off in [0, 1]")->capture_default_str();
  sel->add_option("--gamma", o.gamma, "Participation decay, q = r / (1 + gamma * t)")->capture_default_str();
  sel->add_option("--min-stake", o.min_stake, "Minimum stake to be eligible")->capture_default_str();
  sel->add_option("--task-id", o.task_id, "Task id recorded in the roster")->capture_default_str();
  sel->add_option("--out", o.out, "Write the roster JSON here instead of standard output");

  auto* part = app.add_subcommand("partition", "Stratified redundant partition, or a balance check of an assignment");
  part->add_option("--manifest", o.manifest, "Benchmark manifest JSON")->required();
  auto* n_opt = part->add_option("--n", o.n, "Number of subsets N");
  part->add_option("--rho", o.rho, "Redundancy factor")->capture_default_str();
  part->add_option("--seed", o.seed, "Shuffle seed")->capture_default_str();
  auto* check_opt = part->add_option("--check", o.check, "Assignment JSON to check against the manifest");
  n_opt->excludes(check_opt);
  part->add_option("--out", o.out, "Write the assignment or balance JSON here instead of standard output");

  auto* vl = app.add_subcommand("verify-ledger", "Verify an exported ledger (NDJSON)");
  vl->add_option("--ledger", o.ledger, "Ledger export")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("coeval");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (st->parsed()) return cmd_stats(o, out);
    if (rw->parsed()) return cmd_rewards(o, out);
    if (sel->parsed()) return cmd_select(o, out);
    if (part->parsed()) {
      if (o.check.empty() && n_opt->count() == 0) throw InputError("--n is required unless --check is given");
      return cmd_partition(o, out);
    }
    if (vl->parsed()) return cmd_verify_ledger(o, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace coeval::cli
