#pragma once

// Append-only DAG transaction ledger. Every transaction approves up to two
// earlier ones; a duplicated parent slot records a single effective parent
// (bootstrap case). Tips are the childless transactions. Conflicts are two
// non-empty transactions carrying the same (issuer, spend-nonce) pair; the
// ledger stores the verdict state but the adjudication rule lives in
// detect_conflict so callers can feed in box placement.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boxchain/hash.hpp"
#include "boxchain/poset.hpp"
#include "boxchain/rng.hpp"

namespace boxchain {

using TxId = std::uint64_t;
using AgentId = std::uint64_t;

enum class TxState { pending, confirmed, rejected, voided };

inline const char* to_string(TxState s) {
  switch (s) {
    case TxState::pending: return "pending";
    case TxState::confirmed: return "confirmed";
    case TxState::rejected: return "rejected";
    case TxState::voided: return "voided";
  }
  return "?";
}

struct Transaction {
  TxId id = 0;
  AgentId issuer = 0;
  std::array<TxId, 2> parents{0, 0};  // {0,0} genesis; equal = one effective parent
  double fee = 0.0;
  double issue_time = 0.0;
  bool is_empty = false;
  std::uint64_t spend_nonce = 0;
  Hash256 payload_digest{};
};

inline std::vector<TxId> effective_parents(const Transaction& tx) {
  if (tx.parents[0] == 0) return {};
  if (tx.parents[0] == tx.parents[1]) return {tx.parents[0]};
  return {tx.parents[0], tx.parents[1]};
}

// Digest over the replayable fields, so dump/parse round-trips reproduce it.
inline Hash256 transaction_digest(TxId id, AgentId issuer, std::array<TxId, 2> parents,
                                  double fee, double issue_time, bool is_empty) {
  ByteWriter w;
  w.u64be(id);
  w.u64be(issuer);
  w.u64be(parents[0]);
  w.u64be(parents[1]);
  w.i64be(static_cast<std::int64_t>(std::llround(fee * 1e6)));
  w.i64be(static_cast<std::int64_t>(std::llround(issue_time * 1e6)));
  w.u8(is_empty ? 1 : 0);
  return w.digest();
}

class DagLedger {
 public:
  explicit DagLedger(double genesis_time = 0.0, TxId genesis_id = 1) : genesis_id_(genesis_id) {
    if (genesis_id == 0) throw std::invalid_argument("ledger: genesis id must be nonzero");
    Transaction g;
    g.id = genesis_id;
    g.issuer = 0;
    g.issue_time = genesis_time;
    g.payload_digest = transaction_digest(g.id, g.issuer, g.parents, g.fee, g.issue_time, false);
    insert(g);
    states_[genesis_id] = TxState::confirmed;
  }

  TxId genesis_id() const { return genesis_id_; }
  std::size_t size() const { return txs_.size(); }
  bool contains(TxId id) const { return txs_.count(id) != 0; }

  const Transaction& tx(TxId id) const {
    auto it = txs_.find(id);
    if (it == txs_.end()) throw std::invalid_argument("ledger: unknown tx " + std::to_string(id));
    return it->second;
  }

  const std::set<TxId>& tips() const { return tips_; }
  const std::vector<TxId>& order() const { return order_; }

  const std::vector<TxId>& children(TxId id) const {
    tx(id);
    static const std::vector<TxId> none;
    auto it = children_.find(id);
    return it == children_.end() ? none : it->second;
  }

  const Transaction& add_transaction(TxId id, AgentId issuer, std::array<TxId, 2> parents,
                                     double fee, double issue_time, bool is_empty,
                                     std::uint64_t spend_nonce) {
    if (id == 0 || contains(id))
      throw std::invalid_argument("ledger: duplicate or zero tx id " + std::to_string(id));
    if (issuer == 0) throw std::invalid_argument("ledger: issuer 0 is reserved for the genesis");
    if (parents[0] == 0 || parents[1] == 0)
      throw std::invalid_argument("ledger: non-genesis tx needs parent slots filled");
    for (TxId p : {parents[0], parents[1]}) {
      if (p == id) throw std::invalid_argument("ledger: self-approval");
      const Transaction& parent = tx(p);
      if (issue_time < parent.issue_time)
        throw std::invalid_argument("ledger: issue time precedes parent tx " + std::to_string(p));
    }
    Transaction t;
    t.id = id;
    t.issuer = issuer;
    t.parents = parents;
    t.fee = fee;
    t.issue_time = issue_time;
    t.is_empty = is_empty;
    t.spend_nonce = is_empty ? 0 : spend_nonce;
    t.payload_digest = transaction_digest(id, issuer, parents, fee, issue_time, is_empty);
    insert(t);
    if (!is_empty) spends_[{issuer, t.spend_nonce}].push_back(id);
    return txs_.at(id);
  }

  TxState state(TxId id) const {
    tx(id);
    return states_.at(id);
  }

  // Only pending transactions may confirm; rejected and voided are final.
  void mark_confirmed(TxId id, double when) {
    if (state(id) == TxState::confirmed) return;
    if (state(id) != TxState::pending)
      throw std::logic_error("ledger: cannot confirm non-pending tx " + std::to_string(id));
    states_[id] = TxState::confirmed;
    confirm_times_[id] = when;
  }

  void mark_rejected(TxId id) {
    if (state(id) == TxState::confirmed)
      throw std::logic_error("ledger: cannot reject confirmed tx " + std::to_string(id));
    states_[id] = TxState::rejected;
  }

  void mark_voided(TxId id) {
    if (state(id) != TxState::pending)
      throw std::logic_error("ledger: can only void pending tx " + std::to_string(id));
    states_[id] = TxState::voided;
  }

  std::optional<double> confirm_time(TxId id) const {
    auto it = confirm_times_.find(id);
    if (it == confirm_times_.end()) return std::nullopt;
    return it->second;
  }

  // Transactions sharing (issuer, nonce) with the given key, oldest first.
  std::vector<TxId> spend_group(AgentId issuer, std::uint64_t nonce) const {
    auto it = spends_.find({issuer, nonce});
    return it == spends_.end() ? std::vector<TxId>{} : it->second;
  }

  // 1 + number of transactions whose ancestor closure contains id.
  std::uint64_t cumulative_weight(TxId id) const {
    tx(id);
    std::uint64_t count = 0;
    std::set<TxId> seen{id};
    std::deque<TxId> queue{id};
    while (!queue.empty()) {
      const TxId v = queue.front();
      queue.pop_front();
      ++count;
      for (TxId c : children(v))
        if (seen.insert(c).second) queue.push_back(c);
    }
    return count;
  }

  // Ancestor closure including id itself, ids ascending.
  std::vector<TxId> ancestor_closure(TxId id) const {
    tx(id);
    std::set<TxId> seen{id};
    std::deque<TxId> queue{id};
    while (!queue.empty()) {
      const TxId v = queue.front();
      queue.pop_front();
      for (TxId p : effective_parents(tx(v)))
        if (seen.insert(p).second) queue.push_back(p);
    }
    return {seen.begin(), seen.end()};
  }

  // True when `earlier` lies in the ancestor closure of `later`.
  bool reaches(TxId later, TxId earlier) const {
    const auto closure = ancestor_closure(later);
    return std::binary_search(closure.begin(), closure.end(), earlier);
  }

  // One line per transaction in issue order:
  // tx <id> <issuer> <parent1> <parent2> <fee> <time> <empty-flag>
  void dump(std::ostream& out) const {
    for (TxId id : order_) {
      const Transaction& t = txs_.at(id);
      char fee_buf[64], time_buf[64];
      std::snprintf(fee_buf, sizeof(fee_buf), "%.6f", t.fee);
      std::snprintf(time_buf, sizeof(time_buf), "%.6f", t.issue_time);
      out << "tx " << t.id << ' ' << t.issuer << ' ' << t.parents[0] << ' ' << t.parents[1]
          << ' ' << fee_buf << ' ' << time_buf << ' ' << (t.is_empty ? 1 : 0) << '\n';
    }
  }

  static DagLedger parse_dump(std::istream& in) {
    std::optional<DagLedger> ledger;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string word;
      TxId id, p0, p1;
      AgentId issuer;
      double fee, time;
      int empty_flag;
      if (!(ls >> word >> id >> issuer >> p0 >> p1 >> fee >> time >> empty_flag) ||
          word != "tx" || (empty_flag != 0 && empty_flag != 1))
        throw std::invalid_argument("ledger dump line " + std::to_string(lineno) + ": malformed");
      if (!ledger) {
        if (issuer != 0 || p0 != 0 || p1 != 0)
          throw std::invalid_argument("ledger dump: first line must be the genesis tx");
        ledger.emplace(time, id);
        continue;
      }
      ledger->add_transaction(id, issuer, {p0, p1}, fee, time, empty_flag == 1, 0);
    }
    if (!ledger) throw std::invalid_argument("ledger dump: empty input");
    return std::move(*ledger);
  }

 private:
  void insert(const Transaction& t) {
    txs_[t.id] = t;
    states_[t.id] = TxState::pending;
    order_.push_back(t.id);
    for (TxId p : effective_parents(t)) {
      children_[p].push_back(t.id);
      tips_.erase(p);
    }
    tips_.insert(t.id);
  }

  TxId genesis_id_;
  std::map<TxId, Transaction> txs_;
  std::map<TxId, TxState> states_;
  std::map<TxId, double> confirm_times_;
  std::map<TxId, std::vector<TxId>> children_;
  std::map<std::pair<AgentId, std::uint64_t>, std::vector<TxId>> spends_;
  std::set<TxId> tips_;
  std::vector<TxId> order_;
};

// Ledger viewed as a poset: elements are transactions, covers are approvals.
inline Poset make_poset(const DagLedger& ledger) {
  EdgeList edges;
  for (TxId id : ledger.order())
    for (TxId p : effective_parents(ledger.tx(id))) edges.emplace_back(id, p);
  return Poset(ledger.order(), edges);
}

struct ConflictVerdict {
  TxId survivor = 0;
  TxId rejected = 0;
  enum class Rule { reject_latter, weight_tiebreak, boxer_adjudication } rule;
};

// Adjudicate a declared double spend. Different boxes: the later box loses.
// Same box: lower cumulative weight loses; on equal weight the smaller id
// survives (the boxer's deterministic tie-break).
template <class BoxOf>
ConflictVerdict detect_conflict(const DagLedger& ledger, BoxOf&& box_of, TxId a, TxId b) {
  const Transaction& ta = ledger.tx(a);
  const Transaction& tb = ledger.tx(b);
  if (a == b || ta.is_empty || tb.is_empty || ta.issuer != tb.issuer ||
      ta.spend_nonce != tb.spend_nonce)
    throw std::invalid_argument("detect_conflict: transactions are not a conflicting pair");
  ConflictVerdict v;
  const auto box_a = box_of(a), box_b = box_of(b);
  if (box_a != box_b) {
    v.rule = ConflictVerdict::Rule::reject_latter;
    v.survivor = box_a < box_b ? a : b;
  } else {
    const auto wa = ledger.cumulative_weight(a), wb = ledger.cumulative_weight(b);
    if (wa != wb) {
      v.rule = ConflictVerdict::Rule::weight_tiebreak;
      v.survivor = wa > wb ? a : b;
    } else {
      v.rule = ConflictVerdict::Rule::boxer_adjudication;
      v.survivor = std::min(a, b);
    }
  }
  v.rejected = v.survivor == a ? b : a;
  return v;
}

struct TipSelection {
  std::array<TxId, 2> parents{0, 0};
  bool single = false;  // duplicated slot, one effective parent
};

// Pick approval targets for a transaction about to join the open box B_o.
// Candidates are pending members of B_{o-1} and B_{o-2} (the latter only
// while not under final confirmation); a legal pair has at least one parent
// in B_{o-1}, enforced by resampling. Box 1 joiners approve the genesis.
//
// BoxContext needs: open_index(), members(index) and selectable(index).
template <class BoxContext>
std::optional<TipSelection> select_tips(const DagLedger& ledger, const BoxContext& ctx,
                                        RngStream& rng) {
  const std::uint32_t open = ctx.open_index();
  if (open == 1) return TipSelection{{ledger.genesis_id(), ledger.genesis_id()}, true};

  auto pending_members = [&](std::uint32_t box) {
    std::vector<TxId> out;
    if (!ctx.selectable(box)) return out;
    for (TxId id : ctx.members(box))
      if (ledger.state(id) == TxState::pending) out.push_back(id);
    return out;
  };
  std::vector<TxId> fresh = pending_members(open - 1);
  if (fresh.empty()) return std::nullopt;
  std::vector<TxId> older = open >= 2 ? pending_members(open - 2) : std::vector<TxId>{};

  std::vector<TxId> all(fresh);
  all.insert(all.end(), older.begin(), older.end());
  std::sort(all.begin(), all.end());
  std::sort(fresh.begin(), fresh.end());

  if (all.size() == 1) return TipSelection{{all[0], all[0]}, true};

  for (int attempt = 0; attempt < 10000; ++attempt) {
    const std::size_t i = rng.uniform_int(all.size());
    std::size_t j = rng.uniform_int(all.size() - 1);
    if (j >= i) ++j;
    const TxId x = all[i], y = all[j];
    if (std::binary_search(fresh.begin(), fresh.end(), x) ||
        std::binary_search(fresh.begin(), fresh.end(), y))
      return TipSelection{{x, y}, false};
  }
  throw std::logic_error("select_tips: resampling failed to find a legal pair");
}

}  // namespace boxchain
