#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "coeval/sha256.hpp"
#include "coeval/tokens.hpp"

namespace coeval::ledger {

class LedgerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TokenAccount {
  std::string node_id;
  Tokens balance;
  Tokens staked;

  Tokens total() const { return balance + staked; }
  bool operator==(const TokenAccount&) const = default;
};

// Initial allocation. Only legal inside the genesis block.
struct GenesisPayload {
  std::string node_id;
  Tokens amount;
};
struct StakePayload {
  std::string node_id;
  Tokens amount;
};
struct UnstakePayload {
  std::string node_id;
  Tokens amount;
};
struct CommitPayload {
  std::string node_id;
  std::string task_id;
  Digest commit_hash;
};
struct RevealPayload {
  std::string node_id;
  std::string task_id;
  std::string score;  // canonical 4-decimal rendering
  Digest salt;
};
struct ConsensusPayload {
  std::string task_id;
  std::optional<std::string> focal_score;  // absent when nothing was accepted
  std::vector<std::string> accepted;
  std::vector<std::string> non_revealers;
};
struct RewardPayload {
  std::string node_id;
  std::string task_id;
  Tokens amount;
};
struct SlashPayload {
  std::string node_id;
  std::string task_id;
  std::string reason;
  Tokens amount;  // burned
};

using EventPayload = std::variant<GenesisPayload, StakePayload, UnstakePayload, CommitPayload,
                                  RevealPayload, ConsensusPayload, RewardPayload, SlashPayload>;

enum class EventKind { Genesis, Stake, Unstake, Commit, Reveal, Consensus, Reward, Slash };

std::string_view kind_name(EventKind kind);

struct LedgerEvent {
  std::uint64_t round = 0;
  EventPayload payload;

  EventKind kind() const { return static_cast<EventKind>(payload.index()); }
};

// {"kind":..,"payload":{..},"round":..} with sorted keys and no whitespace.
std::string canonical_json(const LedgerEvent& event);
// Strict inverse of canonical_json's structure: unknown or missing keys throw.
LedgerEvent event_from_json_text(std::string_view text);

struct LedgerBlock {
  std::uint64_t index = 0;
  Digest prev_hash{};
  std::vector<LedgerEvent> events;
  Digest block_hash{};
};

// index (8 bytes BE) | prev_hash | event count (8 bytes BE) | per event: length (8 bytes BE) | JSON
std::vector<std::uint8_t> encode_block(std::uint64_t index, const Digest& prev_hash,
                                       std::span<const LedgerEvent> events);
Digest compute_block_hash(std::uint64_t index, const Digest& prev_hash,
                          std::span<const LedgerEvent> events);

// Account state plus supply counters; the pure replay target for events.
class AccountBook {
 public:
  // Throws LedgerError without modifying state when the event is not applicable.
  void apply(const LedgerEvent& event, bool in_genesis);

  const std::map<std::string, TokenAccount>& accounts() const { return accounts_; }
  const TokenAccount* find(std::string_view node_id) const;

  Tokens initial_supply() const { return initial_; }
  Tokens minted() const { return minted_; }
  Tokens burned() const { return burned_; }
  Tokens circulating() const;  // sum of balance + staked over all accounts
  bool supply_balances() const { return circulating() == initial_ + minted_ - burned_; }

  bool operator==(const AccountBook&) const = default;

 private:
  TokenAccount& existing(const std::string& node_id);

  std::map<std::string, TokenAccount> accounts_;
  Tokens initial_;
  Tokens minted_;
  Tokens burned_;
};

struct VerifyResult {
  bool ok = true;
  std::optional<std::uint64_t> first_bad_index;
  std::string reason;
};

// Never throws. Checks block indices, genesis prev_hash, linkage, block hashes,
// non-decreasing rounds, and that every event replays cleanly.
VerifyResult verify_chain(std::span<const LedgerBlock> blocks) noexcept;

// Verifies an NDJSON export; a line that does not parse counts as a bad block.
VerifyResult verify_ndjson(std::string_view text) noexcept;

AccountBook replay(std::span<const LedgerBlock> blocks);

std::string block_to_ndjson_line(const LedgerBlock& block);

// Single-writer, append-only chain. Block 0 holds the genesis allocations.
class Ledger {
 public:
  explicit Ledger(const std::vector<std::pair<std::string, Tokens>>& allocations);

  // Rebuilds a ledger from an export; throws LedgerError if it fails verification.
  static Ledger import_ndjson(std::string_view text);

  const LedgerBlock& append_block(std::vector<LedgerEvent> events);

  const TokenAccount& stake(const std::string& node_id, Tokens amount, std::uint64_t round);
  const TokenAccount& unstake(const std::string& node_id, Tokens amount, std::uint64_t round);
  // Burns round-to-nearest(fraction * staked) and records a Slash event.
  const TokenAccount& slash(const std::string& node_id, double fraction, std::uint64_t round,
                            const std::string& task_id = "", const std::string& reason = "manual");

  const std::vector<LedgerBlock>& blocks() const { return blocks_; }
  const AccountBook& book() const { return book_; }
  const TokenAccount& account(std::string_view node_id) const;
  const Digest& head_hash() const { return blocks_.back().block_hash; }
  std::uint64_t last_round() const { return last_round_; }

  VerifyResult verify() const noexcept { return verify_chain(blocks_); }
  std::string export_ndjson() const;

 private:
  Ledger() = default;

  std::vector<LedgerBlock> blocks_;
  AccountBook book_;
  std::uint64_t last_round_ = 0;
};

// Burn amount for a fractional slash, clamped to the staked amount.
Tokens slash_amount(Tokens staked, double fraction);

}  // namespace coeval::ledger
