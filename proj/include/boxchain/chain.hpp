#pragma once

// The dual layer: a chain of antichain boxes mirroring the DAG ledger in
// real time. Boxes fill in arrival order, close on capacity M or duration
// tau (whichever first, with a rate guard holding suspiciously fast fills
// open until tau), and are finally confirmed by the next box's randomly
// drawn box-genesis, countersigned by that box's boxer. Box headers are
// hash-chained over a canonical big-endian serialization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boxchain/hash.hpp"
#include "boxchain/ledger.hpp"
#include "boxchain/rng.hpp"

namespace boxchain {

enum class BoxStatus { open, closing, confirmed };

inline const char* to_string(BoxStatus s) {
  switch (s) {
    case BoxStatus::open: return "open";
    case BoxStatus::closing: return "closing";
    case BoxStatus::confirmed: return "confirmed";
  }
  return "?";
}

enum class CheckReason { none, conflict, rank_violation, redundant_approval };

inline const char* to_string(CheckReason r) {
  switch (r) {
    case CheckReason::none: return "none";
    case CheckReason::conflict: return "conflict";
    case CheckReason::rank_violation: return "rank_violation";
    case CheckReason::redundant_approval: return "redundant_approval";
  }
  return "?";
}

// Outcome of one dual-layer neighbor check. A redundant approval is noted
// but stays legitimate; conflicts and rank violations are illegal.
struct ValidationResult {
  TxId checker = 0;
  TxId subject = 0;
  bool legitimate = true;
  CheckReason reason = CheckReason::none;
};

// Box capacity law M. Sampling inverts the cdf: smallest m with F(m) >= p.
class CapacityDist {
 public:
  static CapacityDist degenerate(std::uint32_t m) {
    return CapacityDist({{m, 1.0}});
  }
  static CapacityDist uniform_range(std::uint32_t lo, std::uint32_t hi) {
    if (lo > hi) throw std::invalid_argument("capacity: uniform range reversed");
    std::vector<std::pair<std::uint32_t, double>> support;
    const double p = 1.0 / static_cast<double>(hi - lo + 1);
    for (std::uint32_t m = lo; m <= hi; ++m) support.emplace_back(m, p);
    return CapacityDist(std::move(support));
  }
  static CapacityDist pmf(std::vector<std::pair<std::uint32_t, double>> support) {
    return CapacityDist(std::move(support));
  }

  std::uint32_t quantile(double p) const {
    if (!(p >= 0) || !(p <= 1)) throw std::invalid_argument("capacity: p outside [0,1]");
    double cum = 0.0;
    for (const auto& [value, prob] : support_) {
      cum += prob;
      if (cum >= p) return value;
    }
    return support_.back().first;
  }

  std::uint32_t sample(RngStream& rng) const { return quantile(rng.uniform01()); }

  std::uint32_t max_value() const { return support_.back().first; }
  bool is_degenerate() const { return support_.size() == 1; }

  // "degenerate:10" | "uniform:4:8" | "pmf:4:0.2,5:0.8"
  static CapacityDist parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("capacity: missing ':' in spec");
    const std::string kind = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (kind == "degenerate") {
      return degenerate(parse_u32(rest));
    } else if (kind == "uniform") {
      const auto mid = rest.find(':');
      if (mid == std::string::npos) throw std::invalid_argument("capacity: uniform needs lo:hi");
      return uniform_range(parse_u32(rest.substr(0, mid)), parse_u32(rest.substr(mid + 1)));
    } else if (kind == "pmf") {
      std::vector<std::pair<std::uint32_t, double>> support;
      std::istringstream in(rest);
      std::string item;
      while (std::getline(in, item, ',')) {
        const auto p = item.find(':');
        if (p == std::string::npos) throw std::invalid_argument("capacity: pmf needs value:prob");
        support.emplace_back(parse_u32(item.substr(0, p)), std::stod(item.substr(p + 1)));
      }
      return pmf(std::move(support));
    }
    throw std::invalid_argument("capacity: unknown kind '" + kind + "'");
  }

  std::string to_string() const {
    std::ostringstream out;
    if (support_.size() == 1) {
      out << "degenerate:" << support_[0].first;
    } else {
      out << "pmf:";
      for (std::size_t i = 0; i < support_.size(); ++i) {
        if (i) out << ',';
        out << support_[i].first << ':' << support_[i].second;
      }
    }
    return out.str();
  }

 private:
  explicit CapacityDist(std::vector<std::pair<std::uint32_t, double>> support)
      : support_(std::move(support)) {
    if (support_.empty()) throw std::invalid_argument("capacity: empty support");
    std::sort(support_.begin(), support_.end());
    double total = 0.0;
    for (const auto& [value, prob] : support_) {
      if (value == 0) throw std::invalid_argument("capacity: M must be >= 1");
      if (!(prob >= 0)) throw std::invalid_argument("capacity: negative probability");
      total += prob;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("capacity: probabilities must sum to 1");
  }

  static std::uint32_t parse_u32(const std::string& s) {
    std::size_t pos = 0;
    const unsigned long v = std::stoul(s, &pos);
    if (pos != s.size() || v == 0 || v > 0xffffffffull)
      throw std::invalid_argument("capacity: bad integer '" + s + "'");
    return static_cast<std::uint32_t>(v);
  }

  std::vector<std::pair<std::uint32_t, double>> support_;
};

struct AntichainBox {
  std::uint32_t index = 0;
  std::vector<TxId> members;  // join order; back() becomes the boxer
  TxId boxer = 0;
  AgentId box_genesis = 0;  // agent id, 0 = none
  BoxStatus status = BoxStatus::open;
  double opened_at = 0.0, closed_at = 0.0;
  std::uint32_t capacity = 0;
  bool guard_tripped = false;
  std::uint64_t boxer_seq = 0;  // event order at which the boxer was fixed
  Hash256 header_hash{}, prev_header_hash{}, member_digest{};
  std::vector<ValidationResult> checks;  // recorded by members of this box
  std::vector<Hash256> sync_log;         // headers of boxes confirmed after this one
};

struct AgentStanding {
  AgentId id = 0;
  bool good = false;
};

struct GenesisRecord {
  AgentId agent = 0;
  std::uint32_t box_index = 0;
  std::uint64_t order_seq = 0;
};

struct ConfirmationOutcome {
  std::uint32_t box_index = 0;  // the box that was (or failed to be) confirmed
  bool vacuous = false;          // predecessor already confirmed (genesis box)
  bool alarm = false;            // genesis/boxer countersign mismatch
  std::vector<TxId> illegal_members;
  std::vector<AgentId> disabled_agents;
};

struct NoEligibleAgent : std::runtime_error {
  NoEligibleAgent() : std::runtime_error("box genesis selection: no eligible agent") {}
};

struct ChainParams {
  double tau = 0.0;
  CapacityDist capacity = CapacityDist::degenerate(1);
  double guard_fraction = 0.25;  // 0 disables the rate guard
};

struct HeightBoundReport {
  bool ok = false;
  std::size_t height = 0;
  std::size_t bound = 0;
};

class Boxchain {
 public:
  Boxchain(ChainParams params, TxId genesis_tx, double genesis_time = 0.0)
      : params_(std::move(params)) {
    if (!(params_.tau > 0)) throw std::invalid_argument("boxchain: tau must be positive");
    if (!(params_.guard_fraction >= 0) || !(params_.guard_fraction <= 1))
      throw std::invalid_argument("boxchain: guard fraction outside [0,1]");
    AntichainBox b0;
    b0.index = 0;
    b0.members = {genesis_tx};
    b0.boxer = genesis_tx;
    b0.status = BoxStatus::confirmed;
    b0.opened_at = b0.closed_at = genesis_time;
    b0.capacity = 1;
    b0.member_digest = compute_member_digest(b0.members);
    b0.header_hash = compute_header(b0, Hash256{});
    boxes_.push_back(std::move(b0));
    box_of_[genesis_tx] = 0;
  }

  const std::vector<AntichainBox>& boxes() const { return boxes_; }

  const AntichainBox& box(std::uint32_t i) const {
    if (i >= boxes_.size()) throw std::invalid_argument("boxchain: no box " + std::to_string(i));
    return boxes_[i];
  }

  std::optional<std::uint32_t> box_of(TxId id) const {
    auto it = box_of_.find(id);
    if (it == box_of_.end()) return std::nullopt;
    return it->second;
  }

  bool has_open_box() const { return boxes_.back().status == BoxStatus::open; }

  // Index of the box a new arrival would join: the open box, or the next
  // index when the last box already closed.
  std::uint32_t open_index() const {
    return has_open_box() ? boxes_.back().index : boxes_.back().index + 1;
  }

  std::span<const TxId> members(std::uint32_t i) const { return box(i).members; }
  bool selectable(std::uint32_t i) const { return box(i).status != BoxStatus::confirmed; }

  // Adapter for select_tips.
  struct TipContext {
    const Boxchain* chain;
    std::uint32_t open_index() const { return chain->open_index(); }
    std::span<const TxId> members(std::uint32_t i) const { return chain->members(i); }
    bool selectable(std::uint32_t i) const { return chain->selectable(i); }
  };
  TipContext tip_context() const { return {this}; }

  // Box index implied by the parents: 1 + the newest parent's box. Legal
  // only when it lands in the open box; otherwise the transaction has no
  // parent in the preceding box (or reaches into the open box) and is
  // rejected at assignment.
  std::optional<std::uint32_t> placement_for(std::span<const TxId> parents) const {
    std::uint32_t newest = 0;
    for (TxId p : parents) {
      const auto b = box_of(p);
      if (!b) throw std::logic_error("boxchain: parent not box-assigned");
      newest = std::max(newest, *b);
    }
    const std::uint32_t j = newest + 1;
    if (j != open_index()) return std::nullopt;
    return j;
  }

  // Append a ledger-validated transaction to the open box, creating the box
  // (and sampling its capacity) when this is its first member.
  void append(TxId id, std::span<const TxId> parents, double now, RngStream& capacity_rng) {
    const auto j = placement_for(parents);
    if (!j) throw std::logic_error("boxchain: appending a rejected placement");
    if (!has_open_box()) {
      AntichainBox b;
      b.index = boxes_.back().index + 1;
      b.status = BoxStatus::open;
      b.opened_at = now;
      b.capacity = params_.capacity.sample(capacity_rng);
      boxes_.push_back(std::move(b));
    }
    AntichainBox& open = boxes_.back();
    open.members.push_back(id);
    box_of_[id] = open.index;
  }

  // Closing: duration tau always closes; capacity M closes unless M was
  // reached faster than guard_fraction * tau, in which case the box is held
  // open until tau. Returns the boxer when the box closed.
  std::optional<TxId> maybe_close_box(double now, std::uint64_t order_seq) {
    if (!has_open_box()) return std::nullopt;
    AntichainBox& b = boxes_.back();
    const double age = now - b.opened_at;
    bool close = false;
    if (age >= params_.tau - 1e-9) {
      close = true;
    } else if (b.members.size() >= b.capacity) {
      if (params_.guard_fraction > 0 && age < params_.guard_fraction * params_.tau)
        b.guard_tripped = true;
      if (!b.guard_tripped) close = true;
    }
    if (!close) return std::nullopt;
    b.status = BoxStatus::closing;
    b.closed_at = now;
    b.boxer = b.members.back();
    b.boxer_seq = order_seq;
    return b.boxer;
  }

  double tau() const { return params_.tau; }
  double close_deadline() const {
    if (!has_open_box()) throw std::logic_error("boxchain: no open box");
    return boxes_.back().opened_at + params_.tau;
  }

  // Box-genesis draw for a just-closed box: uniform over good-standing
  // agents, never the boxer's issuer, recorded strictly after the boxer.
  AgentId select_box_genesis(std::uint32_t i, const DagLedger& ledger,
                             std::span<const AgentStanding> standings, RngStream& rng,
                             std::uint64_t order_seq) {
    AntichainBox& b = mutable_box(i);
    if (b.status != BoxStatus::closing || b.boxer == 0 || b.box_genesis != 0)
      throw std::logic_error("boxchain: genesis selection needs a freshly closed box");
    const AgentId boxer_issuer = ledger.tx(b.boxer).issuer;
    std::vector<AgentId> eligible;
    for (const auto& s : standings)
      if (s.good && s.id != 0 && s.id != boxer_issuer) eligible.push_back(s.id);
    if (eligible.empty()) throw NoEligibleAgent();
    std::sort(eligible.begin(), eligible.end());
    b.box_genesis = eligible[rng.uniform_int(eligible.size())];
    genesis_chain_.push_back({b.box_genesis, i, order_seq});
    seal_header(i);
    return b.box_genesis;
  }

  const std::vector<GenesisRecord>& genesis_chain() const { return genesis_chain_; }

  // Dual-layer 2+2 re-check: the new member re-verifies the two approvals
  // of its dual predecessor (the prior member, or the previous box's boxer
  // for a first member). The verdict is recorded in the checker's box.
  ValidationResult two_plus_two_check(const DagLedger& ledger, TxId new_member) {
    const auto idx = box_of(new_member);
    if (!idx) throw std::invalid_argument("boxchain: member not assigned");
    AntichainBox& b = mutable_box(*idx);
    const auto pos = std::find(b.members.begin(), b.members.end(), new_member);
    if (pos == b.members.end()) throw std::logic_error("boxchain: member list desync");
    const TxId subject = pos == b.members.begin() ? box(*idx - 1).boxer : *(pos - 1);

    ValidationResult r;
    r.checker = new_member;
    r.subject = subject;
    const auto [legit, reason] = verify_approvals(ledger, subject);
    r.legitimate = legit;
    r.reason = reason;
    b.checks.push_back(r);
    return r;
  }

  // Final confirmation of box i-1, run when box i is fully formed. The
  // box-genesis aggregates the recorded neighbor checks; the boxer
  // countersigns by re-deriving every verdict from the ledger. Divergence
  // raises the integrity alarm and nothing is confirmed.
  ConfirmationOutcome finalize_box(DagLedger& ledger, std::uint32_t i, double now) {
    if (i == 0) throw std::invalid_argument("boxchain: genesis box has no predecessor");
    const AntichainBox& closer = box(i);
    if (closer.status != BoxStatus::closing || closer.box_genesis == 0)
      throw std::logic_error("boxchain: finalize needs a closed box with genesis");
    AntichainBox& target = mutable_box(i - 1);

    ConfirmationOutcome out;
    out.box_index = target.index;
    if (target.status == BoxStatus::confirmed) {
      out.vacuous = true;
      return out;
    }
    if (target.status != BoxStatus::closing)
      throw std::logic_error("boxchain: finalize target must be closed");

    // Genesis route: ledger state plus the recorded validation results.
    std::vector<TxId> illegal_recorded;
    for (TxId m : target.members) {
      bool illegal = ledger.state(m) == TxState::rejected;
      for (const auto& source : {std::cref(target.checks), std::cref(closer.checks)})
        for (const auto& r : source.get())
          if (r.subject == m && !r.legitimate) illegal = true;
      if (illegal) illegal_recorded.push_back(m);
    }
    // Boxer route: everything re-derived from the ledger.
    std::vector<TxId> illegal_fresh;
    for (TxId m : target.members) {
      const bool rejected = ledger.state(m) == TxState::rejected;
      if (rejected || !verify_approvals(ledger, m).first) illegal_fresh.push_back(m);
    }
    if (illegal_recorded != illegal_fresh) {
      out.alarm = true;
      return out;
    }

    out.illegal_members = illegal_recorded;
    if (!illegal_recorded.empty()) {
      std::vector<AgentId> disabled;
      for (TxId m : illegal_recorded) {
        disabled.push_back(ledger.tx(m).issuer);
        for (TxId child : ledger.children(m))
          if (box_of(child) == i) disabled.push_back(ledger.tx(child).issuer);
        if (ledger.state(m) == TxState::pending) ledger.mark_voided(m);
      }
      std::sort(disabled.begin(), disabled.end());
      disabled.erase(std::unique(disabled.begin(), disabled.end()), disabled.end());
      out.disabled_agents = std::move(disabled);
    }
    for (TxId m : target.members)
      if (ledger.state(m) == TxState::pending) ledger.mark_confirmed(m, now);
    target.status = BoxStatus::confirmed;

    // Timestamp synchronization: every earlier chain entry logs the newly
    // confirmed header.
    for (std::uint32_t k = 0; k < target.index; ++k)
      boxes_[k].sync_log.push_back(target.header_hash);
    return out;
  }

  // Diagnostic fault injection: flip one recorded verdict so the finalize
  // countersign routes diverge. Used by tests and the simulator's
  // inject.tamper_validation_box knob.
  void tamper_check_record(std::uint32_t box_index, std::size_t check_pos) {
    AntichainBox& b = mutable_box(box_index);
    if (check_pos >= b.checks.size())
      throw std::invalid_argument("boxchain: no such check record");
    b.checks[check_pos].legitimate = !b.checks[check_pos].legitimate;
  }

  std::size_t closed_box_count() const {
    std::size_t n = 0;
    for (const auto& b : boxes_)
      if (b.index > 0 && b.status != BoxStatus::open) ++n;
    return n;
  }

  // Ledger height may exceed the box count by at most the genesis layer
  // under a fixed capacity M.
  HeightBoundReport height_bound_check(const DagLedger& ledger, std::uint32_t m) const {
    if (m == 0) throw std::invalid_argument("boxchain: M must be positive");
    HeightBoundReport rep;
    std::size_t assigned = 0;
    for (const auto& b : boxes_)
      if (b.index > 0) assigned += b.members.size();
    rep.bound = (assigned + m - 1) / m + 1;
    rep.height = make_poset(ledger).height();
    rep.ok = rep.height <= rep.bound;
    return rep;
  }

  // Canonical header serialization:
  // index || prev_header_hash || member ids ascending || boxer id ||
  // genesis agent id || closed_at in microseconds, all big-endian.
  static Hash256 compute_header(const AntichainBox& b, const Hash256& prev) {
    ByteWriter w;
    w.u32be(b.index);
    w.raw(prev);
    std::vector<TxId> ids = b.members;
    std::sort(ids.begin(), ids.end());
    for (TxId id : ids) w.u64be(id);
    w.u64be(b.boxer);
    w.u64be(b.box_genesis);
    w.i64be(static_cast<std::int64_t>(std::llround(b.closed_at * 1e6)));
    return w.digest();
  }

  static Hash256 compute_member_digest(const std::vector<TxId>& members) {
    ByteWriter w;
    std::vector<TxId> ids = members;
    std::sort(ids.begin(), ids.end());
    for (TxId id : ids) w.u64be(id);
    return w.digest();
  }

  // Recompute digests and linkage for every non-open box.
  std::optional<std::string> verify_hash_chain() const {
    Hash256 prev{};
    for (const auto& b : boxes_) {
      if (b.status == BoxStatus::open) break;
      if (b.member_digest != compute_member_digest(b.members))
        return "box " + std::to_string(b.index) + ": member digest mismatch";
      if (b.prev_header_hash != prev)
        return "box " + std::to_string(b.index) + ": previous-header link broken";
      if (b.header_hash != compute_header(b, prev))
        return "box " + std::to_string(b.index) + ": header hash mismatch";
      prev = b.header_hash;
    }
    return std::nullopt;
  }

  // box <index> <status> <boxer> <genesis> <hash-hex> <prev-hash-hex> members:<id,...>
  void dump(std::ostream& out) const {
    for (const auto& b : boxes_) {
      out << "box " << b.index << ' ' << to_string(b.status) << ' ' << b.boxer << ' '
          << b.box_genesis << ' ' << to_hex(b.header_hash) << ' ' << to_hex(b.prev_header_hash)
          << " members:";
      for (std::size_t k = 0; k < b.members.size(); ++k) {
        if (k) out << ',';
        out << b.members[k];
      }
      out << '\n';
    }
  }

  struct ParsedBox {
    std::uint32_t index = 0;
    BoxStatus status = BoxStatus::open;
    TxId boxer = 0;
    AgentId genesis = 0;
    Hash256 header_hash{}, prev_header_hash{};
    std::vector<TxId> members;
  };

  static std::vector<ParsedBox> parse_dump(std::istream& in) {
    std::vector<ParsedBox> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string word, status, hash_hex, prev_hex, members;
      ParsedBox b;
      if (!(ls >> word >> b.index >> status >> b.boxer >> b.genesis >> hash_hex >> prev_hex >>
            members) ||
          word != "box" || members.rfind("members:", 0) != 0)
        throw std::invalid_argument("box dump line " + std::to_string(lineno) + ": malformed");
      if (status == "open") b.status = BoxStatus::open;
      else if (status == "closing") b.status = BoxStatus::closing;
      else if (status == "confirmed") b.status = BoxStatus::confirmed;
      else throw std::invalid_argument("box dump line " + std::to_string(lineno) +
                                       ": unknown status '" + status + "'");
      b.header_hash = from_hex(hash_hex);
      b.prev_header_hash = from_hex(prev_hex);
      std::istringstream ms(members.substr(8));
      std::string item;
      while (std::getline(ms, item, ',')) {
        if (item.empty()) continue;
        b.members.push_back(std::stoull(item));
      }
      out.push_back(std::move(b));
    }
    return out;
  }

 private:
  AntichainBox& mutable_box(std::uint32_t i) {
    return const_cast<AntichainBox&>(box(i));
  }

  void seal_header(std::uint32_t i) {
    AntichainBox& b = mutable_box(i);
    b.member_digest = compute_member_digest(b.members);
    b.prev_header_hash = box(i - 1).header_hash;
    b.header_hash = compute_header(b, b.prev_header_hash);
  }

  // Shared verdict logic for the 2+2 check and the finalize countersign:
  // were the subject's own approvals legal?
  std::pair<bool, CheckReason> verify_approvals(const DagLedger& ledger, TxId subject) const {
    const Transaction& t = ledger.tx(subject);
    const auto parents = effective_parents(t);
    if (parents.empty()) return {true, CheckReason::none};  // genesis
    if (ledger.state(subject) == TxState::rejected) return {false, CheckReason::conflict};
    for (TxId p : parents) {
      const TxState s = ledger.state(p);
      if (s == TxState::rejected || s == TxState::voided) return {false, CheckReason::conflict};
    }
    if (parents.size() == 2) {
      const Transaction& p0 = ledger.tx(parents[0]);
      const Transaction& p1 = ledger.tx(parents[1]);
      if (!p0.is_empty && !p1.is_empty && p0.issuer == p1.issuer &&
          p0.spend_nonce == p1.spend_nonce)
        return {false, CheckReason::conflict};
    }
    const auto sb = box_of(subject);
    if (sb && *sb > 0) {
      std::uint32_t newest = 0;
      for (TxId p : parents) {
        const auto pb = box_of(p);
        if (!pb) return {false, CheckReason::rank_violation};
        newest = std::max(newest, *pb);
      }
      if (newest + 1 != *sb) return {false, CheckReason::rank_violation};
    }
    if (parents.size() == 2 &&
        (ledger.reaches(parents[0], parents[1]) || ledger.reaches(parents[1], parents[0])))
      return {true, CheckReason::redundant_approval};
    return {true, CheckReason::none};
  }

  ChainParams params_;
  std::vector<AntichainBox> boxes_;
  std::map<TxId, std::uint32_t> box_of_;
  std::vector<GenesisRecord> genesis_chain_;
};

}  // namespace boxchain
