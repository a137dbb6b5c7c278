#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coeval/ledger.hpp"
#include "coeval/sha256.hpp"
#include "coeval/stats.hpp"

namespace coeval::consensus {

class ConsensusError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Salt = Digest;

inline constexpr double kDefaultBinWidth = 0.5;

// SHA-256 over "<score with 4 decimals>|<64 lowercase hex salt chars>".
// Throws ConsensusError when the score lies outside [0, 100].
Digest make_commitment(double score, const Salt& salt);
std::string commitment_message(double score, const Salt& salt);

enum class RevealStatus {
  Accepted,
  NoCommitment,      // nothing recorded for (node, task); not slashable
  BindingViolation,  // hash mismatch; slashable
  PhaseViolation,    // revealed before the commit window closed; slashable
  DuplicateReveal,   // node already revealed or was already rejected
};

std::string_view status_name(RevealStatus status);
bool is_slashable(RevealStatus status);

RevealStatus verify_reveal(const Digest& commitment, double score, const Salt& salt);
RevealStatus verify_reveal(const std::optional<Digest>& commitment, double score, const Salt& salt);

// Histogram estimate of the focal score. Scores fall into half-open bins
// [j*w, (j+1)*w); the fullest bin wins, ties go to the bin whose midpoint is
// nearest the overall median, then to the lower bin. Returns the median of the
// winning bin. Bin edges are evaluated on the 4-decimal score grid.
double schelling_point(std::span<const double> scores, double bin_width = kDefaultBinWidth);

struct Commitment {
  std::string node_id;
  std::string task_id;
  Digest commit_hash{};
  std::uint64_t round = 0;
};

struct Reveal {
  std::string node_id;
  std::string task_id;
  double score = 0.0;
  Salt salt{};
  std::uint64_t round = 0;
};

enum class CommitStatus { Recorded, Duplicate, PhaseViolation, WrongTask };

struct RevealOutcome {
  std::string node_id;
  RevealStatus status;
};

struct ConsensusResult {
  std::string task_id;
  std::optional<double> focal_score;               // empty when nothing was accepted
  std::vector<stats::ScoreSample> accepted_reveals;  // in reveal order
  std::vector<std::string> non_revealers;          // committed, no accepted reveal; sorted
  std::vector<RevealOutcome> rejected;             // every rejected reveal, in arrival order
};

// Commit-reveal state machine for one task. Phases are ordered by logical
// rounds: commitments must carry round <= the close round, reveals must carry a
// round strictly after it.
class CommitRevealSession {
 public:
  explicit CommitRevealSession(std::string task_id);

  CommitStatus commit(const Commitment& c);
  void close_commit_window(std::uint64_t round);
  RevealStatus reveal(const Reveal& r);
  ConsensusResult finalize(double bin_width = kDefaultBinWidth) const;

  bool commit_window_closed() const { return close_round_.has_value(); }
  const std::string& task_id() const { return task_id_; }

 private:
  std::string task_id_;
  std::map<std::string, Commitment> commitments_;
  std::optional<std::uint64_t> close_round_;
  std::vector<stats::ScoreSample> accepted_;
  std::set<std::string> settled_;  // accepted or disqualified
  std::vector<RevealOutcome> rejected_;
};

// Pure replay of one task's protocol: commitments, window close, reveals in
// the given order, then the focal score over accepted reveals.
ConsensusResult run_task_consensus(const std::string& task_id, std::span<const Commitment> commits,
                                   std::uint64_t commit_close_round, std::span<const Reveal> reveals,
                                   double bin_width = kDefaultBinWidth);

ledger::LedgerEvent commit_event(const Commitment& c);
ledger::LedgerEvent reveal_event(const Reveal& r);
ledger::LedgerEvent consensus_event(const ConsensusResult& result, std::uint64_t round);

}  // namespace coeval::consensus
