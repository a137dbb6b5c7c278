#include "coeval/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "coeval/incentives.hpp"
#include "coeval/tokens.hpp"

namespace coeval::consensus {

std::string commitment_message(double score, const Salt& salt) {
  if (!(score >= 0.0 && score <= 100.0)) throw ConsensusError("score out of range [0, 100]");
  return format_score(score) + "|" + to_hex(salt);
}

Digest make_commitment(double score, const Salt& salt) { return sha256(commitment_message(score, salt)); }

std::string_view status_name(RevealStatus status) {
  switch (status) {
    case RevealStatus::Accepted: return "accepted";
    case RevealStatus::NoCommitment: return "no commitment";
    case RevealStatus::BindingViolation: return "binding violation";
    case RevealStatus::PhaseViolation: return "phase violation";
    case RevealStatus::DuplicateReveal: return "duplicate reveal";
  }
  return "unknown";
}

bool is_slashable(RevealStatus status) {
  return status == RevealStatus::BindingViolation || status == RevealStatus::PhaseViolation;
}

RevealStatus verify_reveal(const Digest& commitment, double score, const Salt& salt) {
  if (!(score >= 0.0 && score <= 100.0)) return RevealStatus::BindingViolation;
  return make_commitment(score, salt) == commitment ? RevealStatus::Accepted : RevealStatus::BindingViolation;
}

RevealStatus verify_reveal(const std::optional<Digest>& commitment, double score, const Salt& salt) {
  if (!commitment) return RevealStatus::NoCommitment;
  return verify_reveal(*commitment, score, salt);
}

double schelling_point(std::span<const double> scores, double bin_width) {
  if (scores.empty()) throw ConsensusError("no reveals");
  const std::int64_t width = score_units(bin_width);
  if (!(bin_width > 0.0) || width < 1) throw ConsensusError("bin width must be at least 0.0001");

  std::map<std::int64_t, std::vector<double>> bins;
  for (double s : scores) {
    const std::int64_t u = score_units(s);
    std::int64_t j = u / width;
    if (u % width != 0 && u < 0) --j;
    bins[j].push_back(s);
  }
  // Twice the overall median, in score units, so midpoint distances stay integral.
  std::vector<std::int64_t> units;
  for (double s : scores) units.push_back(score_units(s));
  std::sort(units.begin(), units.end());
  const std::size_t mid = units.size() / 2;
  const std::int64_t median2 = units.size() % 2 ? 2 * units[mid] : units[mid - 1] + units[mid];

  const std::vector<double>* best = nullptr;
  std::int64_t best_dist = 0;
  for (const auto& [j, members] : bins) {  // ascending j, so strict comparisons keep the lower bin
    const std::int64_t dist = std::llabs((2 * j + 1) * width - median2);
    if (!best || members.size() > best->size() || (members.size() == best->size() && dist < best_dist)) {
      best = &members;
      best_dist = dist;
    }
  }
  return incentives::median(*best);
}

CommitRevealSession::CommitRevealSession(std::string task_id) : task_id_(std::move(task_id)) {}

CommitStatus CommitRevealSession::commit(const Commitment& c) {
  if (c.task_id != task_id_) return CommitStatus::WrongTask;
  if (close_round_) return CommitStatus::PhaseViolation;
  if (commitments_.contains(c.node_id)) return CommitStatus::Duplicate;
  commitments_.emplace(c.node_id, c);
  return CommitStatus::Recorded;
}

void CommitRevealSession::close_commit_window(std::uint64_t round) {
  if (close_round_) throw ConsensusError("commit window already closed");
  for (const auto& [id, c] : commitments_) {
    if (c.round > round) throw ConsensusError("commitment from '" + id + "' is later than the close round");
  }
  close_round_ = round;
}

RevealStatus CommitRevealSession::reveal(const Reveal& r) {
  auto reject = [&](RevealStatus s) {
    rejected_.push_back({r.node_id, s});
    return s;
  };
  auto it = commitments_.find(r.node_id);
  if (r.task_id != task_id_ || it == commitments_.end()) return reject(RevealStatus::NoCommitment);
  if (settled_.contains(r.node_id)) return reject(RevealStatus::DuplicateReveal);
  // An early reveal leaks the score while others can still commit, so the
  // node is disqualified for this task.
  if (!close_round_ || r.round <= *close_round_ || r.round <= it->second.round) {
    settled_.insert(r.node_id);
    return reject(RevealStatus::PhaseViolation);
  }
  const RevealStatus status = verify_reveal(it->second.commit_hash, r.score, r.salt);
  settled_.insert(r.node_id);
  if (status != RevealStatus::Accepted) return reject(status);
  accepted_.push_back(stats::ScoreSample{parse_score(format_score(r.score)), r.node_id, task_id_, ""});
  return status;
}

ConsensusResult CommitRevealSession::finalize(double bin_width) const {
  ConsensusResult out;
  out.task_id = task_id_;
  out.accepted_reveals = accepted_;
  out.rejected = rejected_;
  std::set<std::string> accepted_ids;
  for (const auto& s : accepted_) accepted_ids.insert(s.node_id);
  for (const auto& [id, c] : commitments_) {
    if (!accepted_ids.contains(id)) out.non_revealers.push_back(id);
  }
  if (!accepted_.empty()) {
    std::vector<double> scores;
    for (const auto& s : accepted_) scores.push_back(s.score);
    out.focal_score = schelling_point(scores, bin_width);
  }
  return out;
}

ConsensusResult run_task_consensus(const std::string& task_id, std::span<const Commitment> commits,
                                   std::uint64_t commit_close_round, std::span<const Reveal> reveals,
                                   double bin_width) {
  CommitRevealSession session(task_id);
  for (const auto& c : commits) {
    // Late commitments are ignored; they never enter the candidate set.
    if (c.round <= commit_close_round) session.commit(c);
  }
  session.close_commit_window(commit_close_round);
  for (const auto& r : reveals) session.reveal(r);
  return session.finalize(bin_width);
}

ledger::LedgerEvent commit_event(const Commitment& c) {
  return {c.round, ledger::CommitPayload{c.node_id, c.task_id, c.commit_hash}};
}

ledger::LedgerEvent reveal_event(const Reveal& r) {
  return {r.round, ledger::RevealPayload{r.node_id, r.task_id, format_score(r.score), r.salt}};
}

ledger::LedgerEvent consensus_event(const ConsensusResult& result, std::uint64_t round) {
  ledger::ConsensusPayload p;
  p.task_id = result.task_id;
  if (result.focal_score) p.focal_score = format_score(*result.focal_score);
  for (const auto& s : result.accepted_reveals) p.accepted.push_back(s.node_id);
  p.non_revealers = result.non_revealers;
  return {round, std::move(p)};
}

}  // namespace coeval::consensus
