#include "coeval/incentives.hpp"

#include <algorithm>
#include <cmath>

#include "coeval/selection.hpp"

namespace coeval::incentives {

double median(std::span<const double> scores) {
  if (scores.empty()) throw IncentiveError("median of an empty score list");
  std::vector<double> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

Weights compute_weights(std::span<const double> scores, double k, bool allow_any_k) {
  if (scores.empty()) throw IncentiveError("no scores to weight");
  if (!(k > 0.0) || !std::isfinite(k)) throw IncentiveError("decay k must be positive");
  if (!allow_any_k && (k < kMinDecay || k > kMaxDecay)) {
    throw IncentiveError("decay k must lie in [1, 1.5]");
  }
  Weights out;
  out.median = median(scores);
  std::vector<double> dev;
  dev.reserve(scores.size());
  for (double s : scores) dev.push_back(std::abs(s - out.median));
  out.mad = median(dev);
  out.sigma = k * out.mad;
  out.w.reserve(scores.size());
  for (double s : scores) {
    if (out.mad == 0.0) {
      out.w.push_back(s == out.median ? 1.0 : 0.0);
    } else {
      const double d = s - out.median;
      out.w.push_back(std::exp(-(d * d) / (2.0 * out.sigma * out.sigma)));
    }
  }
  return out;
}

std::vector<Tokens> distribute_rewards(std::span<const std::string> node_ids, std::span<const double> weights,
                                       Tokens pool) {
  if (node_ids.size() != weights.size()) throw IncentiveError("node ids and weights differ in length");
  if (pool < Tokens{}) throw IncentiveError("reward pool must be non-negative");
  long double sum = 0.0L;
  for (double w : weights) {
    if (!(w >= 0.0)) throw IncentiveError("weights must be non-negative");
    sum += w;
  }
  if (!(sum > 0.0L)) throw IncentiveError("all weights are zero");

  std::vector<Tokens> rewards;
  rewards.reserve(weights.size());
  std::int64_t assigned = 0;
  std::size_t top = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto share = static_cast<std::int64_t>(std::floor(static_cast<long double>(pool.micros()) * weights[i] / sum));
    rewards.push_back(Tokens::from_micros(share));
    assigned += share;
    if (weights[i] > weights[top] || (weights[i] == weights[top] && node_ids[i] < node_ids[top])) top = i;
  }
  rewards[top] += Tokens::from_micros(pool.micros() - assigned);
  return rewards;
}

Tokens RewardAllocation::total() const {
  Tokens t;
  for (const auto& e : entries) t += e.reward;
  return t;
}

double RewardAllocation::max_weight() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.weight);
  return m;
}

RewardAllocation allocate_rewards(const std::string& task_id, std::span<const std::string> node_ids,
                                  std::span<const double> scores, Tokens pool, double k, bool allow_any_k) {
  if (node_ids.size() != scores.size()) throw IncentiveError("node ids and scores differ in length");
  const Weights w = compute_weights(scores, k, allow_any_k);
  const auto rewards = distribute_rewards(node_ids, w.w, pool);
  RewardAllocation a{task_id, w.median, w.mad, w.sigma, {}};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    a.entries.push_back(RewardEntry{node_ids[i], scores[i], w.w[i], rewards[i]});
  }
  return a;
}

std::vector<ledger::LedgerEvent> reward_events(const RewardAllocation& allocation, std::uint64_t round) {
  std::vector<ledger::LedgerEvent> events;
  for (const auto& e : allocation.entries) {
    events.push_back(ledger::LedgerEvent{round, ledger::RewardPayload{e.node_id, allocation.task_id, e.reward}});
  }
  return events;
}

double next_reputation(double reputation, double weight, double max_weight, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw IncentiveError("reputation rate must lie in [0, 1]");
  const double ratio = max_weight > 0.0 ? std::clamp(weight / max_weight, 0.0, 1.0) : 0.0;
  return std::clamp((1.0 - alpha) * reputation + alpha * ratio, 0.0, 1.0);
}

void update_reputation(selection::EvaluatorProfile& profile, double weight, std::span<const double> peer_weights,
                       double alpha) {
  double max_w = weight;
  for (double w : peer_weights) max_w = std::max(max_w, w);
  profile.reputation = next_reputation(profile.reputation, weight, max_w, alpha);
  profile.tasks_participated += 1;
}

}  // namespace coeval::incentives
