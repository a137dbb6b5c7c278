#include "coeval/selection.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace coeval::selection {

namespace {

// Dot product of the unit-normalized one-hot encodings of two token sets.
double explicit_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b, bool& a_zero,
                       bool& b_zero) {
  std::set<std::string_view> sa(a.begin(), a.end());
  std::set<std::string_view> sb(b.begin(), b.end());
  a_zero = sa.empty();
  b_zero = sb.empty();
  if (a_zero || b_zero) return 0.0;
  std::size_t common = 0;
  for (auto t : sa) common += sb.count(t);
  return static_cast<double>(common) / std::sqrt(static_cast<double>(sa.size() * sb.size()));
}

double implicit_cosine(const std::vector<double>& a, const std::vector<double>& b, bool& a_zero, bool& b_zero) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  a_zero = na == 0.0;
  b_zero = nb == 0.0;
  if (a_zero || b_zero) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

double quality_score(double reputation, double tasks, double gamma) {
  if (!(reputation >= 0.0) || !(tasks >= 0.0) || !(gamma >= 0.0)) {
    throw SelectionError("quality score inputs must be non-negative");
  }
  return reputation / (1.0 + gamma * tasks);
}

double similarity(const EvaluatorProfile& a, const EvaluatorProfile& b) {
  if (a.implicit_features.size() != b.implicit_features.size()) {
    throw SelectionError("implicit feature dimensions differ");
  }
  bool ea0, eb0, ia0, ib0;
  const double e = explicit_cosine(a.explicit_features, b.explicit_features, ea0, eb0);
  const double i = implicit_cosine(a.implicit_features, b.implicit_features, ia0, ib0);
  // Each non-zero block contributes a unit vector to the concatenation.
  const double norm_a = std::sqrt(static_cast<double>(!ea0 + !ia0));
  const double norm_b = std::sqrt(static_cast<double>(!eb0 + !ib0));
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  const double cosine = (e + i) / (norm_a * norm_b);
  return std::clamp((cosine + 1.0) / 2.0, 0.0, 1.0);
}

SelectionRoster mmr_select(const std::string& task_id, std::span<const EvaluatorProfile> candidates,
                           const SelectionParams& params) {
  if (candidates.empty()) throw SelectionError("empty candidate list");
  if (params.k_required < 1) throw SelectionError("k_required must be at least 1");
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) throw SelectionError("lambda must lie in [0, 1]");
  if (!(params.gamma >= 0.0)) throw SelectionError("gamma must be non-negative");

  std::vector<const EvaluatorProfile*> pool;
  std::set<std::string_view> seen;
  const std::size_t dim = candidates.front().implicit_features.size();
  for (const auto& c : candidates) {
    if (!seen.insert(c.node_id).second) throw SelectionError("duplicate node id '" + c.node_id + "'");
    if (c.implicit_features.size() != dim) throw SelectionError("implicit feature dimensions differ");
    if (!(c.reputation >= 0.0 && c.reputation <= 1.0)) {
      throw SelectionError("reputation of '" + c.node_id + "' outside [0, 1]");
    }
    if (c.stake >= params.min_stake) pool.push_back(&c);
  }
  std::sort(pool.begin(), pool.end(), [](auto* a, auto* b) { return a->node_id < b->node_id; });

  SelectionRoster roster{task_id, {}, params.lambda, params.gamma, params.k_required};
  if (pool.empty()) return roster;

  std::vector<double> quality;
  for (const auto* c : pool) {
    quality.push_back(quality_score(c->reputation, static_cast<double>(c->tasks_participated), params.gamma));
  }
  std::vector<double> max_sim(pool.size(), 0.0);
  std::vector<bool> taken(pool.size(), false);
  const std::size_t want = std::min(params.k_required, pool.size());

  while (roster.selected.size() < want) {
    std::size_t best = pool.size();
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      const double score = roster.selected.empty()
                               ? quality[i]
                               : params.lambda * quality[i] - (1.0 - params.lambda) * max_sim[i];
      if (score > best_score) {  // pool is id-sorted, so the first maximum wins ties
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    roster.selected.push_back(pool[best]->node_id);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!taken[i]) max_sim[i] = std::max(max_sim[i], similarity(*pool[i], *pool[best]));
    }
  }
  return roster;
}

std::vector<EvaluatorProfile> parse_profiles(std::string_view json_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SelectionError(std::string("candidates file is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw SelectionError("candidates file must hold a JSON array of profiles");
  std::vector<EvaluatorProfile> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& p = j[i];
    const std::string where = "[" + std::to_string(i) + "]";
    try {
      EvaluatorProfile e;
      e.node_id = p.at("node_id").get<std::string>();
      e.reputation = p.value("reputation", 0.5);
      e.tasks_participated = p.value("tasks_participated", std::uint64_t{0});
      e.explicit_features = p.value("explicit_features", std::vector<std::string>{});
      e.implicit_features = p.value("implicit_features", std::vector<double>{});
      if (p.contains("stake")) {
        const auto& s = p.at("stake");
        e.stake = s.is_string() ? Tokens::parse(s.get<std::string>()) : Tokens::from_double(s.get<double>());
      }
      out.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw SelectionError(where + ": " + ex.what());
    }
  }
  return out;
}

std::string roster_to_json(const SelectionRoster& roster) {
  nlohmann::ordered_json j;
  j["task_id"] = roster.task_id;
  j["selected"] = roster.selected;
  j["lambda"] = roster.lambda;
  j["gamma"] = roster.gamma;
  j["k_required"] = roster.k_required;
  return j.dump(2);
}

}  // namespace coeval::selection
