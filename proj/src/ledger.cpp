#include "coeval/ledger.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>

namespace coeval::ledger {

using nlohmann::json;

namespace {

constexpr std::string_view kKindNames[] = {"Genesis", "Stake",     "Unstake", "Commit",
                                           "Reveal",  "Consensus", "Reward",  "Slash"};

void expect_keys(const json& obj, std::initializer_list<std::string_view> keys, const char* what) {
  if (!obj.is_object() || obj.size() != keys.size()) {
    throw LedgerError(std::string("malformed ") + what);
  }
  for (auto key : keys) {
    if (!obj.contains(key)) throw LedgerError(std::string(what) + " missing '" + std::string(key) + "'");
  }
}

std::string str_field(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw LedgerError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> str_list(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_array()) throw LedgerError(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw LedgerError(std::string("field '") + key + "' must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

Tokens tokens_field(const json& obj, const char* key) {
  try {
    return Tokens::parse(str_field(obj, key));
  } catch (const std::invalid_argument& e) {
    throw LedgerError(e.what());
  }
}

Digest digest_field(const json& obj, const char* key) {
  try {
    return digest_from_hex(str_field(obj, key));
  } catch (const std::invalid_argument& e) {
    throw LedgerError(std::string("field '") + key + "': " + e.what());
  }
}

json payload_json(const EventPayload& payload) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GenesisPayload> || std::is_same_v<T, StakePayload> ||
                      std::is_same_v<T, UnstakePayload>) {
          return {{"node_id", p.node_id}, {"amount", p.amount.str()}};
        } else if constexpr (std::is_same_v<T, CommitPayload>) {
          return {{"node_id", p.node_id}, {"task_id", p.task_id}, {"commit_hash", to_hex(p.commit_hash)}};
        } else if constexpr (std::is_same_v<T, RevealPayload>) {
          return {{"node_id", p.node_id}, {"task_id", p.task_id}, {"score", p.score}, {"salt", to_hex(p.salt)}};
        } else if constexpr (std::is_same_v<T, ConsensusPayload>) {
          json j = {{"task_id", p.task_id}, {"accepted", p.accepted}, {"non_revealers", p.non_revealers}};
          j["focal_score"] = p.focal_score ? json(*p.focal_score) : json(nullptr);
          return j;
        } else if constexpr (std::is_same_v<T, RewardPayload>) {
          return {{"node_id", p.node_id}, {"task_id", p.task_id}, {"amount", p.amount.str()}};
        } else {
          return {{"node_id", p.node_id}, {"task_id", p.task_id}, {"reason", p.reason}, {"amount", p.amount.str()}};
        }
      },
      payload);
}

EventPayload payload_from_json(EventKind kind, const json& p) {
  switch (kind) {
    case EventKind::Genesis:
      expect_keys(p, {"node_id", "amount"}, "Genesis payload");
      return GenesisPayload{str_field(p, "node_id"), tokens_field(p, "amount")};
    case EventKind::Stake:
      expect_keys(p, {"node_id", "amount"}, "Stake payload");
      return StakePayload{str_field(p, "node_id"), tokens_field(p, "amount")};
    case EventKind::Unstake:
      expect_keys(p, {"node_id", "amount"}, "Unstake payload");
      return UnstakePayload{str_field(p, "node_id"), tokens_field(p, "amount")};
    case EventKind::Commit:
      expect_keys(p, {"node_id", "task_id", "commit_hash"}, "Commit payload");
      return CommitPayload{str_field(p, "node_id"), str_field(p, "task_id"), digest_field(p, "commit_hash")};
    case EventKind::Reveal:
      expect_keys(p, {"node_id", "task_id", "score", "salt"}, "Reveal payload");
      return RevealPayload{str_field(p, "node_id"), str_field(p, "task_id"), str_field(p, "score"),
                           digest_field(p, "salt")};
    case EventKind::Consensus: {
      expect_keys(p, {"task_id", "focal_score", "accepted", "non_revealers"}, "Consensus payload");
      ConsensusPayload c{str_field(p, "task_id"), std::nullopt, str_list(p, "accepted"),
                         str_list(p, "non_revealers")};
      if (!p.at("focal_score").is_null()) c.focal_score = str_field(p, "focal_score");
      return c;
    }
    case EventKind::Reward:
      expect_keys(p, {"node_id", "task_id", "amount"}, "Reward payload");
      return RewardPayload{str_field(p, "node_id"), str_field(p, "task_id"), tokens_field(p, "amount")};
    case EventKind::Slash:
      expect_keys(p, {"node_id", "task_id", "reason", "amount"}, "Slash payload");
      return SlashPayload{str_field(p, "node_id"), str_field(p, "task_id"), str_field(p, "reason"),
                          tokens_field(p, "amount")};
  }
  throw LedgerError("unknown event kind");
}

LedgerEvent event_from_json(const json& j) {
  expect_keys(j, {"kind", "payload", "round"}, "event");
  const std::string kind = str_field(j, "kind");
  auto it = std::find(std::begin(kKindNames), std::end(kKindNames), kind);
  if (it == std::end(kKindNames)) throw LedgerError("unknown event kind '" + kind + "'");
  if (!j.at("round").is_number_unsigned()) throw LedgerError("event round must be a non-negative integer");
  const auto k = static_cast<EventKind>(it - std::begin(kKindNames));
  return LedgerEvent{j.at("round").get<std::uint64_t>(), payload_from_json(k, j.at("payload"))};
}

void put_be64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

LedgerBlock parse_block_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw LedgerError(std::string("unparseable block: ") + e.what());
  }
  expect_keys(j, {"index", "prev_hash", "events", "block_hash"}, "block");
  if (!j.at("index").is_number_unsigned()) throw LedgerError("block index must be a non-negative integer");
  if (!j.at("events").is_array()) throw LedgerError("block events must be an array");
  LedgerBlock block;
  block.index = j.at("index").get<std::uint64_t>();
  block.prev_hash = digest_field(j, "prev_hash");
  block.block_hash = digest_field(j, "block_hash");
  for (const auto& e : j.at("events")) block.events.push_back(event_from_json(e));
  if (block_to_ndjson_line(block) != line) throw LedgerError("non-canonical block encoding");
  return block;
}

}  // namespace

std::string_view kind_name(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::string canonical_json(const LedgerEvent& event) {
  json j = {{"kind", kind_name(event.kind())}, {"payload", payload_json(event.payload)}, {"round", event.round}};
  return j.dump();
}

LedgerEvent event_from_json_text(std::string_view text) {
  try {
    return event_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw LedgerError(std::string("unparseable event: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_block(std::uint64_t index, const Digest& prev_hash,
                                       std::span<const LedgerEvent> events) {
  std::vector<std::uint8_t> out;
  put_be64(out, index);
  out.insert(out.end(), prev_hash.begin(), prev_hash.end());
  put_be64(out, events.size());
  for (const auto& e : events) {
    const std::string body = canonical_json(e);
    put_be64(out, body.size());
    out.insert(out.end(), body.begin(), body.end());
  }
  return out;
}

Digest compute_block_hash(std::uint64_t index, const Digest& prev_hash, std::span<const LedgerEvent> events) {
  return sha256(encode_block(index, prev_hash, events));
}

// ---------------------------------------------------------------------------
// AccountBook

const TokenAccount* AccountBook::find(std::string_view node_id) const {
  auto it = accounts_.find(std::string(node_id));
  return it == accounts_.end() ? nullptr : &it->second;
}

TokenAccount& AccountBook::existing(const std::string& node_id) {
  auto it = accounts_.find(node_id);
  if (it == accounts_.end()) throw LedgerError("unknown node '" + node_id + "'");
  return it->second;
}

Tokens AccountBook::circulating() const {
  Tokens sum;
  for (const auto& [id, acct] : accounts_) sum += acct.total();
  return sum;
}

void AccountBook::apply(const LedgerEvent& event, bool in_genesis) {
  if (in_genesis != (event.kind() == EventKind::Genesis)) {
    throw LedgerError(in_genesis ? "only Genesis events may appear in block 0"
                                 : "Genesis events may only appear in block 0");
  }
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GenesisPayload>) {
          if (p.amount < Tokens{}) throw LedgerError("negative genesis allocation");
          if (accounts_.contains(p.node_id)) throw LedgerError("duplicate genesis account '" + p.node_id + "'");
          accounts_[p.node_id] = TokenAccount{p.node_id, p.amount, Tokens{}};
          initial_ += p.amount;
        } else if constexpr (std::is_same_v<T, StakePayload>) {
          auto& a = existing(p.node_id);
          if (p.amount <= Tokens{}) throw LedgerError("stake amount must be positive");
          if (p.amount > a.balance) throw LedgerError("insufficient balance for '" + p.node_id + "'");
          a.balance -= p.amount;
          a.staked += p.amount;
        } else if constexpr (std::is_same_v<T, UnstakePayload>) {
          auto& a = existing(p.node_id);
          if (p.amount <= Tokens{}) throw LedgerError("unstake amount must be positive");
          if (p.amount > a.staked) throw LedgerError("insufficient stake for '" + p.node_id + "'");
          a.staked -= p.amount;
          a.balance += p.amount;
        } else if constexpr (std::is_same_v<T, RewardPayload>) {
          auto& a = existing(p.node_id);
          if (p.amount < Tokens{}) throw LedgerError("negative reward");
          a.balance += p.amount;
          minted_ += p.amount;
        } else if constexpr (std::is_same_v<T, SlashPayload>) {
          auto& a = existing(p.node_id);
          if (a.staked <= Tokens{}) throw LedgerError("node '" + p.node_id + "' has nothing staked");
          if (p.amount < Tokens{} || p.amount > a.staked) throw LedgerError("slash amount out of range");
          a.staked -= p.amount;
          burned_ += p.amount;
        }
        // Commit, Reveal and Consensus are records only.
      },
      event.payload);
}

// ---------------------------------------------------------------------------
// Verification

VerifyResult verify_chain(std::span<const LedgerBlock> blocks) noexcept {
  auto bad = [](std::uint64_t i, std::string why) { return VerifyResult{false, i, std::move(why)}; };
  if (blocks.empty()) return bad(0, "empty chain");
  AccountBook book;
  std::uint64_t last_round = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    try {
      if (b.index != i) return bad(i, "index mismatch");
      const Digest expected_prev = i == 0 ? Digest{} : blocks[i - 1].block_hash;
      if (b.prev_hash != expected_prev) return bad(i, "prev_hash linkage broken");
      if (compute_block_hash(b.index, b.prev_hash, b.events) != b.block_hash) return bad(i, "block_hash mismatch");
      if (i > 0 && b.events.empty()) return bad(i, "empty block");
      for (const auto& e : b.events) {
        if (e.round < last_round) return bad(i, "round counter decreased");
        last_round = e.round;
        book.apply(e, i == 0);
      }
    } catch (const std::exception& e) {
      return bad(i, e.what());
    }
  }
  return {};
}

VerifyResult verify_ndjson(std::string_view text) noexcept {
  std::vector<LedgerBlock> blocks;
  std::optional<std::uint64_t> parse_failure;
  std::string why;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    try {
      blocks.push_back(parse_block_line(text.substr(pos, end - pos)));
    } catch (const std::exception& e) {
      parse_failure = blocks.size();
      why = e.what();
      break;
    }
    pos = end + 1;
  }
  if (blocks.empty() && !parse_failure) return {false, 0, "empty chain"};
  if (!blocks.empty()) {
    auto prefix = verify_chain(blocks);
    if (!prefix.ok) return prefix;
  }
  if (parse_failure) return {false, parse_failure, why};
  return {};
}

AccountBook replay(std::span<const LedgerBlock> blocks) {
  AccountBook book;
  for (const auto& b : blocks) {
    for (const auto& e : b.events) book.apply(e, b.index == 0);
  }
  return book;
}

std::string block_to_ndjson_line(const LedgerBlock& block) {
  std::string line = "{\"index\":" + std::to_string(block.index) + ",\"prev_hash\":\"" +
                     to_hex(block.prev_hash) + "\",\"events\":[";
  for (std::size_t i = 0; i < block.events.size(); ++i) {
    if (i) line += ',';
    line += canonical_json(block.events[i]);
  }
  line += "],\"block_hash\":\"" + to_hex(block.block_hash) + "\"}";
  return line;
}

Tokens slash_amount(Tokens staked, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw LedgerError("slash fraction must lie in [0, 1]");
  auto burned = std::llround(static_cast<double>(staked.micros()) * fraction);
  return Tokens::from_micros(std::clamp<std::int64_t>(burned, 0, staked.micros()));
}

// ---------------------------------------------------------------------------
// Ledger

Ledger::Ledger(const std::vector<std::pair<std::string, Tokens>>& allocations) {
  LedgerBlock genesis;
  for (const auto& [id, amount] : allocations) {
    genesis.events.push_back(LedgerEvent{0, GenesisPayload{id, amount}});
  }
  for (const auto& e : genesis.events) book_.apply(e, true);
  genesis.block_hash = compute_block_hash(0, genesis.prev_hash, genesis.events);
  blocks_.push_back(std::move(genesis));
}

Ledger Ledger::import_ndjson(std::string_view text) {
  auto result = verify_ndjson(text);
  if (!result.ok) {
    throw LedgerError("ledger fails verification at block " + std::to_string(*result.first_bad_index) + ": " +
                      result.reason);
  }
  Ledger ledger;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ledger.blocks_.push_back(parse_block_line(text.substr(pos, end - pos)));
    pos = end + 1;
  }
  ledger.book_ = replay(ledger.blocks_);
  for (const auto& b : ledger.blocks_) {
    if (!b.events.empty()) ledger.last_round_ = std::max(ledger.last_round_, b.events.back().round);
  }
  return ledger;
}

const LedgerBlock& Ledger::append_block(std::vector<LedgerEvent> events) {
  if (events.empty()) throw LedgerError("cannot append an empty block");
  AccountBook next = book_;
  std::uint64_t round = last_round_;
  for (const auto& e : events) {
    if (e.round < round) throw LedgerError("round counter decreased");
    round = e.round;
    next.apply(e, false);
  }
  LedgerBlock block;
  block.index = blocks_.size();
  block.prev_hash = blocks_.back().block_hash;
  block.events = std::move(events);
  block.block_hash = compute_block_hash(block.index, block.prev_hash, block.events);
  blocks_.push_back(std::move(block));
  book_ = std::move(next);
  last_round_ = round;
  return blocks_.back();
}

const TokenAccount& Ledger::account(std::string_view node_id) const {
  const auto* a = book_.find(node_id);
  if (!a) throw LedgerError("unknown node '" + std::string(node_id) + "'");
  return *a;
}

const TokenAccount& Ledger::stake(const std::string& node_id, Tokens amount, std::uint64_t round) {
  append_block({LedgerEvent{round, StakePayload{node_id, amount}}});
  return account(node_id);
}

const TokenAccount& Ledger::unstake(const std::string& node_id, Tokens amount, std::uint64_t round) {
  append_block({LedgerEvent{round, UnstakePayload{node_id, amount}}});
  return account(node_id);
}

const TokenAccount& Ledger::slash(const std::string& node_id, double fraction, std::uint64_t round,
                                  const std::string& task_id, const std::string& reason) {
  const auto& acct = account(node_id);
  if (acct.staked <= Tokens{}) throw LedgerError("node '" + node_id + "' has nothing staked");
  append_block({LedgerEvent{round, SlashPayload{node_id, task_id, reason, slash_amount(acct.staked, fraction)}}});
  return account(node_id);
}

std::string Ledger::export_ndjson() const {
  std::string out;
  for (const auto& b : blocks_) {
    out += block_to_ndjson_line(b);
    out += '\n';
  }
  return out;
}

}  // namespace coeval::ledger
