#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coeval/tokens.hpp"

namespace coeval::selection {

class SelectionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EvaluatorProfile {
  std::string node_id;
  double reputation = 0.5;
  std::uint64_t tasks_participated = 0;
  // Categorical attributes, one token each, e.g. "skill:math", "affiliation:lab-a".
  std::vector<std::string> explicit_features;
  // Latent expertise embedding; one dimension per candidate pool.
  std::vector<double> implicit_features;
  Tokens stake;
};

struct SelectionParams {
  std::size_t k_required = 1;
  double lambda = 0.5;
  double gamma = 0.0;
  Tokens min_stake;
};

struct SelectionRoster {
  std::string task_id;
  std::vector<std::string> selected;  // in selection order
  double lambda = 0.0;
  double gamma = 0.0;
  std::size_t k_required = 0;
};

// q = r / (1 + gamma * t)
double quality_score(double reputation, double tasks, double gamma);

// Cosine over [explicit one-hot | implicit] with each block unit-normalized,
// mapped from [-1, 1] to [0, 1]. Zero vectors give 0.
double similarity(const EvaluatorProfile& a, const EvaluatorProfile& b);

// Greedy MMR: first pick maximizes quality, later picks maximize
// lambda * q - (1 - lambda) * max similarity to the roster. Ties go to the
// lowest node id. Candidates staking less than min_stake are skipped.
SelectionRoster mmr_select(const std::string& task_id, std::span<const EvaluatorProfile> candidates,
                           const SelectionParams& params);

std::vector<EvaluatorProfile> parse_profiles(std::string_view json_text);
std::string roster_to_json(const SelectionRoster& roster);

}  // namespace coeval::selection
