// Acceptance run: one line per criterion, non-zero exit if any fails.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "coeval/cli.hpp"
#include "coeval/consensus.hpp"
#include "coeval/incentives.hpp"
#include "coeval/ledger.hpp"
#include "coeval/partition.hpp"
#include "coeval/simnet.hpp"
#include "coeval/stats.hpp"
#include "oracles.hpp"

using namespace coeval;
using nlohmann::json;

namespace {

const std::string kSource = COEVAL_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* spec, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* spec, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, spec);
  std::vsnprintf(buf, sizeof buf, spec, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json stats_for(const std::string& task) {
  std::ostringstream out, err;
  const int code = cli::run({"coeval", "stats", "--input", kSource + "/data/table4.csv", "--task", task}, out, err);
  if (code != 0) throw std::runtime_error("stats failed for " + task + ": " + err.str());
  return json::parse(out.str())["tasks"][0];
}

// ---------------------------------------------------------------------------

Outcome ac1() {
  struct Row {
    const char* model;
    double mean, std;
  };
  // Decentralized GSM8K row of the summary table.
  const Row rows[] = {{"qwen2.5-7b", 91.09, 0.13},
                      {"internlm3-8b", 85.51, 0.17},
                      {"llama3-8b", 79.68, 0.18},
                      {"phi4-mini", 84.48, 0.66},
                      {"qwen3-14b", 95.88, 0.14}};
  Outcome o;
  double worst = 0;
  for (const auto& r : rows) {
    const auto t = stats_for(std::string(r.model) + "/gsm8k/decentralized");
    const double dm = std::abs(t["mean"].get<double>() - r.mean);
    const double ds = std::abs(t["std"].get<double>() - r.std);
    worst = std::max({worst, dm, ds});
    if (dm > 0.02 || ds > 0.02) {
      o.pass = false;
      o.detail += fmt("%s off (mean %.4f std %.4f); ", r.model, t["mean"].get<double>(), t["std"].get<double>());
    }
  }
  const double ci = stats_for("internlm3-8b/gsm8k/decentralized")["ci95_t"].get<double>();
  if (std::abs(ci - 0.125) > 0.005) o.pass = false;
  o.detail += fmt("max |diff| %.4f (tol 0.02), InternLM t-CI %.4f vs 0.125 (tol 0.005)", worst, ci);
  return o;
}

Outcome ac2() {
  const auto t = stats_for("qwen2.5-7b/gsm8k/centralized");
  const std::vector<double> column{91.2, 91.2, 91.3, 91.5, 91.2, 91.5, 91.6, 91.5, 91.3, 91.2};
  const double oracle_std = std::sqrt(static_cast<double>(oracle::sample_variance(column)));
  const double s = t["std"].get<double>();
  const bool documented = slurp(kSource + "/data/README.md").find("Known inconsistency") != std::string::npos;
  Outcome o;
  o.pass = std::abs(s - oracle_std) < 1e-9 && std::abs(s - 0.16) <= 0.005 && std::abs(s - 0.91) > 0.5 && documented;
  o.detail = fmt("std %.6f (recomputed %.6f, printed 0.91), fixture README notes it: %s", s, oracle_std,
                 documented ? "yes" : "no");
  return o;
}

Outcome ac3() {
  const auto a = stats::hoeffding_min_n(0.2, 0.2);
  const auto b = stats::hoeffding_min_n(0.2, 0.04);
  // The quoted "about 28" matches epsilon = 0.2, not epsilon = 0.04.
  const bool quoted_matches_literal = std::llabs(static_cast<long long>(b) - 28) <= 1;
  const bool quoted_matches_02 = std::llabs(static_cast<long long>(a) - 28) <= 1;
  Outcome o;
  o.pass = a == 29 && b == 720 && !quoted_matches_literal && quoted_matches_02;
  o.detail = fmt("n(0.2,0.2)=%llu n(0.2,0.04)=%llu; quoted ~28 agrees with eps=0.2 only",
                 static_cast<unsigned long long>(a), static_cast<unsigned long long>(b));
  return o;
}

Outcome ac4() {
  oracle::Lcg g(2026);
  std::size_t sets = 0, degenerate = 0, failures = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + g.below(50);
    const double k = 1.0 + 0.5 * g.uniform();
    std::vector<double> scores(n);
    const bool tie_heavy = g.uniform() < 0.2;
    const double centre = g.uniform(20, 80);
    for (auto& s : scores) {
      s = tie_heavy && g.uniform() < 0.7 ? centre : std::round(g.uniform(0, 100) * 10000) / 10000;
    }
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = fmt("n%03zu", i);
    const auto alloc = incentives::allocate_rewards("t", ids, scores, Tokens::whole(100), k);
    ++sets;
    bool ok = alloc.total() == Tokens::whole(100);
    const double m = oracle::median(scores);
    ok = ok && alloc.median == m;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ei = alloc.entries[i];
      if (ei.weight < 0 || ei.weight > 1) ok = false;
      for (std::size_t j = 0; j < n; ++j) {
        const auto& ej = alloc.entries[j];
        if (std::abs(ei.score - m) < std::abs(ej.score - m) && ei.weight < ej.weight) ok = false;
      }
    }
    if (alloc.mad == 0.0) {
      ++degenerate;
      for (const auto& e : alloc.entries) {
        if (e.weight != (e.score == m ? 1.0 : 0.0)) ok = false;
      }
    }
    if (!ok) ++failures;
  }
  Outcome o;
  o.pass = failures == 0 && degenerate > 0;
  o.detail = fmt("%zu sets, %zu with MAD=0, %zu failures", sets, degenerate, failures);
  return o;
}

// Unimodal up to Poisson noise: on the rising side no bin may sit clearly
// below an earlier one, on the falling side none clearly above.
bool unimodal(const std::vector<double>& c, std::size_t& mode) {
  mode = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const double slack = 3.0 * std::sqrt(c[i] + c[j]);
      if (j <= mode && c[j] < c[i] - slack) return false;
      if (i >= mode && c[j] > c[i] + slack) return false;
    }
  }
  return true;
}

Outcome ac5() {
  const auto cfg = simnet::parse_scenario(slurp(kSource + "/scenarios/figure4.json"));
  const auto agg = simnet::run_scenario(cfg);
  std::size_t events = agg.reward_log.size(), adversarial = 0, near_zero = 0, honest_near_zero = 0;
  double top = 0;
  for (const auto& r : agg.reward_log) {
    const bool adv = r.behavior == simnet::Behavior::Adversarial;
    const bool nz = r.amount < Tokens::whole(1);
    adversarial += adv;
    near_zero += nz;
    honest_near_zero += nz && !adv;
    top = std::max(top, r.amount.to_double());
  }
  const double adv_rate = static_cast<double>(adversarial) / events;
  const double nz_rate = static_cast<double>(near_zero) / events;
  // One-token bins above the near-zero cluster.
  std::vector<double> coarse(static_cast<std::size_t>(std::ceil(top)), 0.0);
  for (const auto& r : agg.reward_log) {
    const double v = r.amount.to_double();
    if (v >= 1.0) coarse[std::min(coarse.size() - 1, static_cast<std::size_t>(v))] += 1;
  }
  coarse.erase(coarse.begin());
  std::size_t mode = 0;
  const bool uni = unimodal(coarse, mode);
  const bool central = mode > 0 && mode + 1 < coarse.size();
  Outcome o;
  o.pass = events >= 2000 && uni && central && std::abs(nz_rate - adv_rate) <= 0.015;
  o.detail = fmt(
      "%zu events; near-zero %.2f%% (honest %zu, adversarial %zu) vs adversary selection rate %.2f%%, diff %+.2f pp "
      "(tol 1.5); central mode %zu-%zu tokens, unimodal: %s",
      events, 100 * nz_rate, honest_near_zero, near_zero - honest_near_zero, 100 * adv_rate,
      100 * (nz_rate - adv_rate), mode + 1, mode + 2, uni ? "yes" : "no");
  return o;
}

Outcome ac6() {
  auto cfg = simnet::parse_scenario(slurp(kSource + "/scenarios/variance.json"));
  std::size_t wins = 0;
  double ratio_sum = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    cfg.seed = seed;
    const auto agg = simnet::run_scenario(cfg);
    double dec = 0, cen = 0;
    for (const auto& row : agg.stability) (row.method == "decentralized" ? dec : cen) = row.summary.sample_std;
    ratio_sum += dec / cen;
    if (dec < 0.5 * cen) ++wins;
  }
  // Closed form: with a fresh configuration per run, Var(S) = sb^2 + sw^2 and
  // the mean of 10 configurations has variance Var(S) / 10.
  auto fresh = cfg;
  fresh.seed = 99;
  fresh.rounds = 1000;
  fresh.world.redraw_config_effects = true;
  const auto agg = simnet::run_scenario(fresh);
  const auto& means = agg.decentralized_means.begin()->second;
  const double emp = static_cast<double>(oracle::sample_variance(means));
  const double closed = (2.0 * 2.0 + 1.0 * 1.0) / 10.0;
  const double rel = std::abs(emp / closed - 1.0);
  Outcome o;
  o.pass = wins >= 95 && rel <= 0.15;
  o.detail = fmt("decentralized < 0.5x centralized in %zu/100 seeds (mean ratio %.3f); Var(mean of 10) %.4f vs %.4f "
                 "(rel %.3f, tol 0.15)",
                 wins, ratio_sum / 100, emp, closed, rel);
  return o;
}

Outcome ac7() {
  std::size_t checked = 0, failures = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t rho = 1; rho <= n; ++rho) {
      for (std::uint32_t k = 1; k <= 3; ++k) {
        for (std::size_t d = 1; d <= 30; ++d) {
          const auto m = partition::synthetic_manifest("b", d, k);
          const auto a = partition::partition(m, n, rho, 17 * d + k);
          ++checked;
          bool ok = a.subsets.size() == n && partition::partition(m, n, rho, 17 * d + k).subsets == a.subsets;
          std::map<std::string, std::size_t> mult;
          std::map<std::string, std::uint32_t> stratum;
          for (const auto& it : m.items) stratum[it.item_id] = it.stratum;
          std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(k, 0));
          for (std::size_t s = 0; s < a.subsets.size() && ok; ++s) {
            std::set<std::string> distinct(a.subsets[s].begin(), a.subsets[s].end());
            if (distinct.size() != a.subsets[s].size()) ok = false;
            for (const auto& id : a.subsets[s]) {
              ++mult[id];
              ++counts[s][stratum.at(id) - 1];
            }
          }
          for (const auto& it : m.items) ok = ok && mult[it.item_id] == rho;
          for (std::uint32_t kk = 0; kk < k && ok; ++kk) {
            std::size_t lo = SIZE_MAX, hi = 0;
            for (std::size_t s = 0; s < n; ++s) {
              lo = std::min(lo, counts[s][kk]);
              hi = std::max(hi, counts[s][kk]);
            }
            ok = hi - lo <= 1;
          }
          if (!ok) ++failures;
        }
      }
    }
  }
  // Two-way split of benchmark-sized manifests with three difficulty strata.
  double worst = 0;
  for (auto [id, items] : {std::pair<const char*, std::size_t>{"gsm8k", 1319}, {"humaneval", 164}, {"gpqa-diamond", 198}}) {
    const auto m = partition::synthetic_manifest(id, items, 3);
    const auto r = partition::check_balance(partition::partition(m, 2, 1, 7), m);
    if (!r.coverage_ok) ++failures;
    worst = std::max(worst, r.max_abs_deviation);
  }
  Outcome o;
  o.pass = failures == 0 && worst <= 1.0;
  o.detail = fmt("%zu configurations exhaustively checked, %zu failures; two-partition max stratum deviation %.1f item",
                 checked, failures, worst);
  return o;
}

Outcome ac8() {
  const bool golden = to_hex(consensus::make_commitment(84.06, consensus::Salt{})) ==
                      "5ab488ad2a3ec110f47bb53611e281f5fee27d2bafb2ba6e092e4c1722ec3006";
  Xoshiro256 rng(808);
  std::size_t cases = 0, accepted_bad = 0, rejected_good = 0;
  for (int t = 0; t < 5000; ++t) {
    const double score = std::round(rng.uniform(0, 100) * 10000) / 10000;
    consensus::Salt salt;
    for (auto& b : salt) b = static_cast<std::uint8_t>(rng.below(256));
    const auto c = consensus::make_commitment(score, salt);
    if (consensus::verify_reveal(c, score, salt) != consensus::RevealStatus::Accepted) ++rejected_good;
    // Score moved by at least one grid step.
    double other = score + (rng.below(2) ? 1 : -1) * (1 + static_cast<double>(rng.below(1000))) * 1e-4;
    if (other < 0 || other > 100) other = score >= 50 ? score - 0.0001 : score + 0.0001;
    ++cases;
    if (consensus::verify_reveal(c, other, salt) == consensus::RevealStatus::Accepted) ++accepted_bad;
    // One salt bit flipped.
    auto s2 = salt;
    s2[rng.below(32)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
    ++cases;
    if (consensus::verify_reveal(c, score, s2) == consensus::RevealStatus::Accepted) ++accepted_bad;
  }
  const consensus::Salt salt{};
  const auto none = consensus::verify_reveal(std::optional<Digest>{}, 50.0, salt);
  consensus::CommitRevealSession s("t");
  s.commit({"a", "t", consensus::make_commitment(50.0, salt), 1});
  const auto early = s.reveal({"a", "t", 50.0, salt, 1});
  const bool distinct = none == consensus::RevealStatus::NoCommitment &&
                        early == consensus::RevealStatus::PhaseViolation && none != early;
  Outcome o;
  o.pass = golden && cases >= 10000 && accepted_bad == 0 && rejected_good == 0 && distinct;
  o.detail = fmt("%zu perturbations, %zu accepted; reveal-without-commit=%s, early reveal=%s; golden vector %s", cases,
                 accepted_bad, std::string(consensus::status_name(none)).c_str(),
                 std::string(consensus::status_name(early)).c_str(), golden ? "ok" : "MISMATCH");
  return o;
}

Outcome ac9() {
  Outcome o;
  std::size_t scenarios = 0;
  for (const char* name : {"honest_small", "figure4", "variance"}) {
    auto cfg = simnet::parse_scenario(slurp(kSource + "/scenarios/" + name + ".json"));
    simnet::Simulation sim(cfg);
    Tokens burned;
    for (std::uint64_t r = 0; r < cfg.rounds; ++r) {
      for (const auto& t : sim.run_round().tasks) {
        for (const auto& sl : t.slashes) burned += sl.amount;
      }
    }
    ++scenarios;
    const auto& book = sim.ledger().book();
    Tokens rewarded;
    for (const auto& rr : sim.aggregate().reward_log) rewarded += rr.amount;
    if (!sim.ledger().verify().ok || !book.supply_balances() || book.minted() != rewarded || book.burned() != burned) {
      o.pass = false;
      o.detail += std::string(name) + " failed; ";
    }
  }
  // Byte-flip sweep over a whole export with slashing activity.
  json j = json::parse(slurp(kSource + "/scenarios/honest_small.json"));
  j["rounds"] = 2;
  j["agents"].push_back({{"node_id", "lazy"}, {"behavior", "lazy"}, {"reveal_failure_probability", 1.0},
                         {"reputation", 1.0}, {"config_id", "a100-fp16"}});
  simnet::Simulation sim(simnet::parse_scenario(j.dump()));
  sim.run_round();
  sim.run_round();
  const std::string text = sim.ledger().export_ndjson();
  std::vector<std::size_t> line_of(text.size());
  std::size_t line = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    line_of[i] = line;
    if (text[i] == '\n') ++line;
  }
  std::size_t flips = 0, wrong = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    std::string t = text;
    t[i] = static_cast<char>(t[i] ^ 0x01);
    const auto r = ledger::verify_ndjson(t);
    ++flips;
    if (r.ok || r.first_bad_index != line_of[i]) ++wrong;
  }
  const bool baseline = ledger::verify_ndjson(text).ok && !sim.aggregate().slash_log.empty();
  if (wrong != 0 || !baseline) o.pass = false;
  o.detail += fmt("%zu scenarios verified with exact supply accounting; %zu single-byte flips, %zu misreported",
                  scenarios, flips, wrong);
  return o;
}

Outcome ac10() {
  oracle::Lcg g(10);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    std::map<std::string, std::vector<double>> groups;
    const std::size_t ng = 1 + g.below(10);
    for (std::size_t c = 0; c < ng; ++c) {
      const double shift = g.uniform(-10, 10);
      auto& v = groups[fmt("c%zu", c)];
      for (std::size_t i = 0, m = 1 + g.below(20); i < m; ++i) v.push_back(60 + shift + 2 * g.normal());
    }
    const auto v = stats::variance_decomposition(groups);
    if (v.total > 0) worst = std::max(worst, std::abs(v.within + v.between - v.total) / v.total);
  }
  const double p0 = stats::normal_cdf(0.0), p196 = stats::normal_cdf(1.96);
  bool monotone = stats::inversion_probability(0.0, 1.0, 1.0, 5) == 0.5;
  double prev = 1.0;
  for (std::uint64_t n = 1; n <= 500; ++n) {
    const double p = stats::inversion_probability(0.5, 1.0, 2.0, n);
    monotone = monotone && p < prev;
    prev = p;
  }
  Outcome o;
  o.pass = worst <= 1e-10 && p0 == 0.5 && std::abs(p196 - 0.9750) <= 1e-4 && monotone;
  o.detail = fmt("identity max rel err %.2e over 100 datasets; Phi(0)=%.6f Phi(1.96)=%.6f; inversion(0)=0.5 and "
                 "decreasing in n: %s",
                 worst, p0, p196, monotone ? "yes" : "no");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"AC1", "per-run fixture reproduces decentralized GSM8K summary", 1, ac1},
      {"AC2", "centralized Qwen GSM8K spread recomputed, not copied", 0, ac2},
      {"AC3", "Hoeffding sample-size bounds", 0, ac3},
      {"AC4", "reward conservation and weight shape", 5, ac4},
      {"AC5", "reward distribution with 3% uniform adversaries", 30, ac5},
      {"AC6", "multi-config aggregation reduces spread", 60, ac6},
      {"AC7", "partition invariants", 10, ac7},
      {"AC8", "commit-reveal binding", 0, ac8},
      {"AC9", "ledger integrity and supply accounting", 0, ac9},
      {"AC10", "statistics oracle checks", 0, ac10},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_s);
    }
    std::printf("[%s] %s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
