#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coeval/ledger.hpp"
#include "coeval/tokens.hpp"

namespace coeval::selection {
struct EvaluatorProfile;
}

namespace coeval::incentives {

class IncentiveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultDecay = 1.25;
inline constexpr double kMinDecay = 1.0;
inline constexpr double kMaxDecay = 1.5;
inline constexpr double kDefaultReputationRate = 0.1;

// Order statistic; mean of the two middle values for even n.
double median(std::span<const double> scores);

struct Weights {
  double median = 0.0;
  double mad = 0.0;
  double sigma = 0.0;
  std::vector<double> w;  // parallel to the input scores
};

// w_i = exp(-(s_i - M)^2 / (2 sigma^2)), sigma = k * MAD. When MAD is zero only
// exact matches of the median are weighted (w = 1), everyone else gets 0.
// k must lie in [1, 1.5] unless allow_any_k is set.
Weights compute_weights(std::span<const double> scores, double k = kDefaultDecay, bool allow_any_k = false);

// floor(pool * w_i / sum w) in micros; the leftover micros go to the entry with
// the highest weight (lowest node id on ties), so the result sums to `pool`.
std::vector<Tokens> distribute_rewards(std::span<const std::string> node_ids, std::span<const double> weights,
                                       Tokens pool);

struct RewardEntry {
  std::string node_id;
  double score = 0.0;
  double weight = 0.0;
  Tokens reward;
};

struct RewardAllocation {
  std::string task_id;
  double median = 0.0;
  double mad = 0.0;
  double sigma = 0.0;
  std::vector<RewardEntry> entries;

  Tokens total() const;
  double max_weight() const;
};

RewardAllocation allocate_rewards(const std::string& task_id, std::span<const std::string> node_ids,
                                  std::span<const double> scores, Tokens pool, double k = kDefaultDecay,
                                  bool allow_any_k = false);

std::vector<ledger::LedgerEvent> reward_events(const RewardAllocation& allocation, std::uint64_t round);

// (1 - alpha) * r + alpha * (w / max_w); a zero max weight counts as ratio 0.
double next_reputation(double reputation, double weight, double max_weight, double alpha = kDefaultReputationRate);

// Applies next_reputation and bumps the participation count.
void update_reputation(selection::EvaluatorProfile& profile, double weight, std::span<const double> peer_weights,
                       double alpha = kDefaultReputationRate);

}  // namespace coeval::incentives
