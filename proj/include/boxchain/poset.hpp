#pragma once

// Finite poset machinery over opaque 64-bit element ids. A poset is built
// from cover-style edges (child, parent) meaning child > parent; the input
// may contain transitive edges, which changes nothing observable since all
// queries go through the reflexive-transitive closure.
//
// Orientation note: in ledger terms a "parent" is the approved (older)
// transaction, minimal elements are genesis-like, maximal elements are tips.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace boxchain {

using ElementId = std::uint64_t;
using EdgeList = std::vector<std::pair<ElementId, ElementId>>;  // (child, parent)

struct WidthResult {
  std::size_t value = 0;
  // True when computed by exhaustive search (n <= width_exact_limit);
  // otherwise the value is the largest Mirsky layer, a lower-bound estimate.
  bool exact = true;
};

struct AntichainDecomposition {
  // layers[r] holds the elements of rank r, ids ascending.
  std::vector<std::vector<ElementId>> layers;
};

class Poset {
 public:
  static constexpr std::size_t width_exact_limit = 20;

  Poset(std::vector<ElementId> elements, const EdgeList& covers) {
    std::sort(elements.begin(), elements.end());
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
    ids_ = std::move(elements);
    for (std::size_t i = 0; i < ids_.size(); ++i) index_[ids_[i]] = i;

    const std::size_t n = ids_.size();
    parents_.assign(n, {});
    children_.assign(n, {});
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [child, parent] : covers) {
      const std::size_t c = require(child), p = require(parent);
      if (c == p) throw std::invalid_argument("poset: self-cover on element " + std::to_string(child));
      if (!seen.insert({c, p}).second) continue;
      parents_[c].push_back(p);
      children_[p].push_back(c);
    }
    for (auto& v : parents_) std::sort(v.begin(), v.end());
    for (auto& v : children_) std::sort(v.begin(), v.end());

    topo_order();   // throws on cycles
    build_ranks();
    build_closure();
  }

  const std::vector<ElementId>& elements() const { return ids_; }
  std::size_t size() const { return ids_.size(); }

  bool comparable(ElementId a, ElementId b) const {
    const std::size_t ia = require(a), ib = require(b);
    return in_closure(ia, ib) || in_closure(ib, ia);
  }

  // Longest-path rank: minimal elements have rank 0 and each cover step
  // raises the rank by at least one (exactly one on graded posets).
  std::size_t rank(ElementId e) const { return rank_[require(e)]; }

  // Number of maximal elements whose ancestor closure contains e.
  std::size_t reverse_rank(ElementId e) const {
    const std::size_t i = require(e);
    std::size_t count = 0;
    for (std::size_t m = 0; m < ids_.size(); ++m)
      if (children_[m].empty() && in_closure(m, i)) ++count;
    return count;
  }

  std::size_t height() const { return ids_.empty() ? 0 : max_rank_ + 1; }

  AntichainDecomposition mirsky_decompose() const {
    AntichainDecomposition d;
    if (ids_.empty()) return d;
    d.layers.resize(max_rank_ + 1);
    for (std::size_t i = 0; i < ids_.size(); ++i) d.layers[rank_[i]].push_back(ids_[i]);
    for (auto& layer : d.layers) std::sort(layer.begin(), layer.end());
    return d;
  }

  WidthResult width() const {
    if (ids_.size() <= width_exact_limit) return {exact_width(), true};
    std::size_t best = 0;
    for (const auto& layer : mirsky_decompose().layers) best = std::max(best, layer.size());
    return {best, false};
  }

  std::vector<ElementId> minimal_elements() const {
    std::vector<ElementId> out;
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (parents_[i].empty()) out.push_back(ids_[i]);
    return out;
  }

  std::vector<ElementId> maximal_elements() const {
    std::vector<ElementId> out;
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (children_[i].empty()) out.push_back(ids_[i]);
    return out;
  }

  // Ancestor closure of e, including e itself, ids ascending.
  std::vector<ElementId> ancestor_closure(ElementId e) const {
    const std::size_t i = require(e);
    std::vector<ElementId> out;
    for (std::size_t j = 0; j < ids_.size(); ++j)
      if (in_closure(i, j)) out.push_back(ids_[j]);
    return out;
  }

 private:
  std::size_t require(ElementId e) const {
    auto it = index_.find(e);
    if (it == index_.end())
      throw std::invalid_argument("poset: unknown element " + std::to_string(e));
    return it->second;
  }

  void topo_order() {
    const std::size_t n = ids_.size();
    std::vector<std::size_t> pending(n);
    order_.clear();
    order_.reserve(n);
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
      pending[i] = parents_[i].size();
      if (pending[i] == 0) ready.push_back(i);
    }
    while (!ready.empty()) {
      const std::size_t v = ready.back();
      ready.pop_back();
      order_.push_back(v);
      for (std::size_t c : children_[v])
        if (--pending[c] == 0) ready.push_back(c);
    }
    if (order_.size() != n) throw std::invalid_argument("poset: relation is not acyclic");
  }

  void build_ranks() {
    rank_.assign(ids_.size(), 0);
    max_rank_ = 0;
    for (std::size_t v : order_) {
      std::size_t r = 0;
      for (std::size_t p : parents_[v]) r = std::max(r, rank_[p] + 1);
      rank_[v] = r;
      max_rank_ = std::max(max_rank_, r);
    }
  }

  void build_closure() {
    const std::size_t n = ids_.size();
    words_ = (n + 63) / 64;
    closure_.assign(n * words_, 0);
    for (std::size_t v : order_) {
      auto* row = &closure_[v * words_];
      row[v / 64] |= (std::uint64_t{1} << (v % 64));
      for (std::size_t p : parents_[v]) {
        const auto* prow = &closure_[p * words_];
        for (std::size_t w = 0; w < words_; ++w) row[w] |= prow[w];
      }
    }
  }

  bool in_closure(std::size_t of, std::size_t target) const {
    return (closure_[of * words_ + target / 64] >> (target % 64)) & 1;
  }

  // Exhaustive maximum antichain: maximum independent set of the
  // comparability graph, branch and bound over a bitmask of candidates.
  std::size_t exact_width() const {
    const std::size_t n = ids_.size();
    if (n == 0) return 0;
    std::vector<std::uint64_t> adj(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && (in_closure(i, j) || in_closure(j, i)))
          adj[i] |= (std::uint64_t{1} << j);
    std::size_t best = 0;
    struct Rec {
      const std::vector<std::uint64_t>& adj;
      std::size_t& best;
      void operator()(std::uint64_t candidates, std::size_t chosen) const {
        if (chosen + static_cast<std::size_t>(std::popcount(candidates)) <= best) return;
        if (candidates == 0) {
          best = std::max(best, chosen);
          return;
        }
        const int v = std::countr_zero(candidates);
        const std::uint64_t bit = std::uint64_t{1} << v;
        (*this)(candidates & ~bit & ~adj[v], chosen + 1);  // take v
        (*this)(candidates & ~bit, chosen);                // skip v
      }
    } rec{adj, best};
    rec((n == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1), 0);
    return best;
  }

  std::vector<ElementId> ids_;
  std::map<ElementId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_, children_;
  std::vector<std::size_t> order_, rank_;
  std::size_t max_rank_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> closure_;
};

// Edges (child, parent) whose removal leaves reachability unchanged: the
// parent is still reachable from the child through some other parent.
// Input must be acyclic; throws otherwise.
inline EdgeList redundant_edges(const std::vector<ElementId>& elements, const EdgeList& edges) {
  Poset poset(elements, edges);
  std::map<ElementId, std::vector<ElementId>> parents;
  std::set<std::pair<ElementId, ElementId>> seen;
  for (const auto& e : edges)
    if (seen.insert(e).second) parents[e.first].push_back(e.second);

  EdgeList out;
  for (const auto& [child, plist] : parents) {
    for (ElementId p : plist) {
      bool redundant = false;
      for (ElementId q : plist) {
        if (q == p) continue;
        const auto closure = poset.ancestor_closure(q);
        if (std::binary_search(closure.begin(), closure.end(), p)) {
          redundant = true;
          break;
        }
      }
      if (redundant) out.emplace_back(child, p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ParsedGraph {
  std::vector<ElementId> elements;
  EdgeList edges;
};

// Text format: one `edge <child> <parent>` per line; `#` starts a comment.
inline ParsedGraph parse_edge_list(std::istream& in) {
  ParsedGraph g;
  std::set<ElementId> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word != "edge")
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": expected 'edge <child> <parent>'");
    ElementId child, parent;
    if (!(ls >> child >> parent))
      throw std::invalid_argument("line " + std::to_string(lineno) + ": malformed edge");
    std::string extra;
    if (ls >> extra)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": trailing tokens");
    g.edges.emplace_back(child, parent);
    ids.insert(child);
    ids.insert(parent);
  }
  g.elements.assign(ids.begin(), ids.end());
  return g;
}

inline void format_layers(const AntichainDecomposition& d, std::ostream& out) {
  for (std::size_t r = 0; r < d.layers.size(); ++r) {
    out << "layer " << r << ":";
    for (ElementId e : d.layers[r]) out << ' ' << e;
    out << '\n';
  }
}

}  // namespace boxchain
