#pragma once

// A hand-checked 20-transaction reference ledger: genesis plus 19
// transactions that fill six antichain boxes. Every structural fact below
// (box memberships, boxers, tips, redundant approvals, ranks, width,
// height, cumulative weight) is replayed through the live ledger and
// boxchain machinery, never hard-coded into the outputs.

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "boxchain/chain.hpp"
#include "boxchain/ledger.hpp"
#include "boxchain/poset.hpp"
#include "boxchain/rng.hpp"

namespace boxchain {

struct FixtureEdge {
  TxId child;
  TxId p0, p1;  // p1 == 0: single effective parent (bootstrap approvals)
};

// Transaction 1 is the genesis. Arrival order is id order.
inline constexpr std::array<FixtureEdge, 19> kFixtureEdges{{
    {2, 1, 0},   {3, 1, 0},   {4, 1, 0},
    {5, 2, 3},   {6, 4, 3},   {7, 4, 2},
    {8, 5, 4},   {9, 5, 2},   {10, 6, 7},  {11, 7, 5},
    {12, 8, 9},  {13, 11, 10}, {14, 9, 10},
    {15, 12, 13}, {16, 14, 12}, {17, 13, 11}, {18, 13, 12},
    {19, 16, 17}, {20, 17, 14},
}};

inline EdgeList fixture_edge_list() {
  EdgeList edges;
  for (const auto& e : kFixtureEdges) {
    edges.emplace_back(e.child, e.p0);
    if (e.p1 != 0 && e.p1 != e.p0) edges.emplace_back(e.child, e.p1);
  }
  return edges;
}

inline std::vector<ElementId> fixture_elements() {
  std::vector<ElementId> ids;
  for (TxId id = 1; id <= 20; ++id) ids.push_back(id);
  return ids;
}

struct FixtureReplay {
  DagLedger ledger;
  Boxchain chain;
};

// Drive the arrivals through the live machinery; boxes close exactly when
// a transaction's placement index moves past the open box, plus one final
// close so the last box gets its boxer.
inline FixtureReplay replay_fixture() {
  FixtureReplay r{DagLedger(0.0, 1),
                  Boxchain({1.0, CapacityDist::degenerate(1000), 0.0}, 1, 0.0)};
  RngStream cap_rng(1, "fixture_capacity");
  RngStream gen_rng(1, "fixture_genesis");
  std::uint64_t seq = 0;

  const auto close_one = [&](double now) {
    const auto boxer = r.chain.maybe_close_box(now, seq++);
    if (!boxer) throw std::logic_error("fixture: box refused to close");
    const std::uint32_t i = r.chain.boxes().back().index;
    std::vector<AgentStanding> standings;
    for (AgentId a = 1; a <= 20; ++a) standings.push_back({a, true});
    r.chain.select_box_genesis(i, r.ledger, standings, gen_rng, seq++);
    r.chain.finalize_box(r.ledger, i, now);
  };

  for (const auto& e : kFixtureEdges) {
    const std::array<TxId, 2> parents{e.p0, e.p1 == 0 ? e.p0 : e.p1};
    const double now = static_cast<double>(e.child);
    while (!r.chain.placement_for(parents)) close_one(now);
    r.ledger.add_transaction(e.child, e.child, parents, 1.0, now, false, 1);
    r.chain.append(e.child, parents, now, cap_rng);
    r.chain.two_plus_two_check(r.ledger, e.child);
  }
  close_one(21.0);
  return r;
}

struct FixtureReport {
  std::vector<std::vector<TxId>> boxes;  // ids ascending, index 0 = box 1
  std::vector<TxId> boxers;
  std::vector<TxId> tips;
  std::vector<std::pair<TxId, TxId>> redundant;  // (child, parent)
  std::size_t rank9 = 0;
  std::size_t reverse_rank_genesis = 0;
  std::size_t width = 0;
  bool width_exact = false;
  std::size_t height = 0;
  std::uint64_t genesis_weight = 0;
};

inline FixtureReport fixture_report() {
  const FixtureReplay r = replay_fixture();
  FixtureReport rep;
  for (std::uint32_t i = 1; i < r.chain.boxes().size(); ++i) {
    std::vector<TxId> members(r.chain.box(i).members.begin(), r.chain.box(i).members.end());
    std::sort(members.begin(), members.end());
    rep.boxes.push_back(std::move(members));
    rep.boxers.push_back(r.chain.box(i).boxer);
  }
  rep.tips.assign(r.ledger.tips().begin(), r.ledger.tips().end());

  EdgeList edges;
  for (TxId id : r.ledger.order())
    for (TxId p : effective_parents(r.ledger.tx(id))) edges.emplace_back(id, p);
  rep.redundant = redundant_edges(r.ledger.order(), edges);

  const Poset poset = make_poset(r.ledger);
  rep.rank9 = poset.rank(9);
  rep.reverse_rank_genesis = poset.reverse_rank(r.ledger.genesis_id());
  const auto w = poset.width();
  rep.width = w.value;
  rep.width_exact = w.exact;
  rep.height = poset.height();
  rep.genesis_weight = r.ledger.cumulative_weight(r.ledger.genesis_id());
  return rep;
}

// The canonical printed form; the acceptance gate greps these exact lines.
inline std::string fixture_text(const FixtureReport& rep, bool redundant_only = false) {
  std::ostringstream out;
  const auto join = [](const std::vector<TxId>& ids) {
    std::ostringstream s;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (k) s << ',';
      s << ids[k];
    }
    return s.str();
  };
  if (!redundant_only) {
    for (std::size_t i = 0; i < rep.boxes.size(); ++i)
      out << 'B' << (i + 1) << "={" << join(rep.boxes[i]) << "}\n";
    out << "boxers";
    for (TxId b : rep.boxers) out << ' ' << b;
    out << '\n';
    out << "tips {" << join(rep.tips) << "}\n";
  }
  for (const auto& [child, parent] : rep.redundant)
    out << "redundant edge (" << child << ',' << parent << ")\n";
  if (!redundant_only) {
    out << "rank(9)=" << rep.rank9 << '\n';
    out << "reverse_rank(genesis)=" << rep.reverse_rank_genesis << '\n';
    out << "width=" << rep.width << (rep.width_exact ? " exact" : " estimate") << '\n';
    out << "height=" << rep.height << '\n';
    out << "cumulative_weight(genesis)=" << rep.genesis_weight << '\n';
  }
  return out.str();
}

// Hand-verified expectations; any mismatch is returned as a message.
inline std::vector<std::string> verify_fixture(const FixtureReport& rep) {
  std::vector<std::string> problems;
  const std::vector<std::vector<TxId>> boxes{{2, 3, 4},          {5, 6, 7},
                                             {8, 9, 10, 11},     {12, 13, 14},
                                             {15, 16, 17, 18},   {19, 20}};
  const std::vector<TxId> boxers{4, 7, 11, 14, 18, 20};
  const std::vector<TxId> tips{15, 18, 19, 20};
  const std::vector<std::pair<TxId, TxId>> redundant{{9, 2}, {17, 11}};
  if (rep.boxes != boxes) problems.push_back("box memberships diverge");
  if (rep.boxers != boxers) problems.push_back("boxer sequence diverges");
  if (rep.tips != tips) problems.push_back("tip set diverges");
  if (rep.redundant != redundant) problems.push_back("redundant edges diverge");
  if (rep.rank9 != 3) problems.push_back("rank(9) != 3");
  if (rep.reverse_rank_genesis != 4) problems.push_back("reverse_rank(genesis) != 4");
  if (rep.width != 4 || !rep.width_exact) problems.push_back("width != 4 (exact)");
  if (rep.height != 7) problems.push_back("height != 7");
  if (rep.genesis_weight != 20) problems.push_back("cumulative_weight(genesis) != 20");
  return problems;
}

}  // namespace boxchain
