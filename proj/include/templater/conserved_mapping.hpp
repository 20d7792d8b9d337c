#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "templater/error.hpp"
#include "templater/graph.hpp"
#include "templater/mapping.hpp"

namespace templater {

struct McsOptions {
  /// Search-node expansions allowed per call before BudgetExceeded.
  std::size_t budget = 10'000'000;
};

struct McsResult {
  /// (reactant node, product node), ascending by reactant node.
  std::vector<std::pair<NodeIndex, NodeIndex>> pairs;
  std::size_t expansions = 0;
};

namespace detail {

/// Connected maximum common induced subgraph between two node-labelled
/// graphs given as adjacency matrices over local indices 0..n-1. Labels must
/// already encode every compatibility rule (equal label <=> compatible).
///
/// The search partitions unmatched vertices into classes of equally
/// labelled vertices with identical adjacency to the matched set, and bounds
/// by the sum over classes of min(left, right).
class McsSearch {
 public:
  using Pairs = std::vector<std::pair<int, int>>;

  McsSearch(std::vector<std::vector<char>> left_adj, std::vector<int> left_labels,
            std::vector<std::vector<char>> right_adj, std::vector<int> right_labels, std::size_t budget)
      : left_adj_(std::move(left_adj)),
        right_adj_(std::move(right_adj)),
        left_labels_(std::move(left_labels)),
        right_labels_(std::move(right_labels)),
        budget_(budget) {}

  std::size_t expansions() const noexcept { return expansions_; }

  /// Lexicographically smallest (by sorted left vertex, then right vertex)
  /// among the maximum-cardinality connected common subgraphs.
  Pairs solve() {
    best_.clear();
    target_.reset();
    Pairs current;
    maximize(initial_domains({}), current);
    if (best_.empty()) return {};
    return lex_min(best_);
  }

 private:
  struct Domain {
    std::vector<int> left;
    std::vector<int> right;
    bool adjacent = false;
  };

  std::vector<Domain> initial_domains(const std::vector<int>& excluded_left) const {
    std::map<int, Domain> by_label;
    for (int v = 0; v < static_cast<int>(left_labels_.size()); ++v) {
      if (std::find(excluded_left.begin(), excluded_left.end(), v) == excluded_left.end()) {
        by_label[left_labels_[v]].left.push_back(v);
      }
    }
    for (int w = 0; w < static_cast<int>(right_labels_.size()); ++w) {
      const auto it = by_label.find(right_labels_[w]);
      if (it != by_label.end()) it->second.right.push_back(w);
    }
    std::vector<Domain> out;
    for (auto& [label, d] : by_label) {
      if (!d.left.empty() && !d.right.empty()) out.push_back(std::move(d));
    }
    return out;
  }

  static std::size_t bound(const std::vector<Domain>& domains, std::size_t matched) {
    std::size_t b = matched;
    for (const auto& d : domains) b += std::min(d.left.size(), d.right.size());
    return b;
  }

  std::vector<Domain> refine(const std::vector<Domain>& domains, int v, int w) const {
    std::vector<Domain> out;
    out.reserve(domains.size() * 2);
    for (const auto& d : domains) {
      Domain near{{}, {}, true}, far{{}, {}, d.adjacent};
      for (const int x : d.left) {
        if (x == v) continue;
        (left_adj_[v][x] ? near : far).left.push_back(x);
      }
      for (const int y : d.right) {
        if (y == w) continue;
        (right_adj_[w][y] ? near : far).right.push_back(y);
      }
      if (!far.left.empty() && !far.right.empty()) out.push_back(std::move(far));
      if (!near.left.empty() && !near.right.empty()) out.push_back(std::move(near));
    }
    return out;
  }

  /// Index of the class to branch on, or -1. Once something is matched only
  /// classes touching the matched set may grow it, which keeps it connected.
  static int select_domain(const std::vector<Domain>& domains, bool any_matched) {
    int chosen = -1;
    std::size_t chosen_size = 0;
    for (std::size_t i = 0; i < domains.size(); ++i) {
      const auto& d = domains[i];
      if (any_matched && !d.adjacent) continue;
      const auto size = std::max(d.left.size(), d.right.size());
      const auto first = d.left.front();
      if (chosen < 0 || size < chosen_size ||
          (size == chosen_size && first < domains[static_cast<std::size_t>(chosen)].left.front())) {
        chosen = static_cast<int>(i);
        chosen_size = size;
      }
    }
    return chosen;
  }

  void tick() {
    if (++expansions_ > budget_) {
      fail(ErrorKind::BudgetExceeded,
           "common subgraph search exceeded " + std::to_string(budget_) + " expansions");
    }
  }

  bool connected(const Pairs& pairs) const {
    if (pairs.size() <= 1) return true;
    std::vector<int> members;
    for (const auto& [v, w] : pairs) members.push_back(v);
    std::vector<char> seen(members.size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < members.size(); ++j) {
        if (!seen[j] && left_adj_[members[i]][members[j]]) {
          seen[j] = 1;
          ++reached;
          stack.push_back(j);
        }
      }
    }
    return reached == members.size();
  }

  /// Without a target: keeps the largest solution seen. With a target: stops
  /// at the first connected solution of exactly that size.
  bool maximize(std::vector<Domain> domains, Pairs& current) {
    tick();
    if (target_) {
      if (current.size() == *target_) {
        if (connected(current)) {
          best_ = current;
          return true;
        }
        return false;
      }
      if (bound(domains, current.size()) < *target_) return false;
    } else {
      if (current.size() > best_.size()) best_ = current;
      if (bound(domains, current.size()) <= best_.size()) return false;
    }

    const int index = select_domain(domains, !current.empty());
    if (index < 0) return false;
    auto& d = domains[static_cast<std::size_t>(index)];
    const int v = d.left.front();
    const auto partners = d.right;
    for (const int w : partners) {
      current.emplace_back(v, w);
      const bool done = maximize(refine(domains, v, w), current);
      current.pop_back();
      if (done) return true;
    }
    d.left.erase(d.left.begin());
    if (d.left.empty()) domains.erase(domains.begin() + index);
    return maximize(std::move(domains), current);
  }

  /// Applies forced pairs and exclusions, then asks for a solution of the
  /// target size. Returns it or nullopt.
  std::optional<Pairs> feasible(const Pairs& forced, const std::vector<int>& excluded, std::size_t size) {
    auto domains = initial_domains(excluded);
    for (const auto& [v, w] : forced) {
      bool found = false;
      for (const auto& d : domains) {
        if (std::binary_search(d.left.begin(), d.left.end(), v) &&
            std::binary_search(d.right.begin(), d.right.end(), w)) {
          found = true;
          break;
        }
      }
      if (!found) return std::nullopt;
      domains = refine(domains, v, w);
    }
    target_ = size;
    Pairs current = forced;
    best_.clear();
    const bool ok = maximize(std::move(domains), current);
    target_.reset();
    if (!ok) return std::nullopt;
    return best_;
  }

  /// Walks left vertices in ascending order, committing each to its smallest
  /// feasible partner (or to exclusion) while a maximum solution still exists.
  Pairs lex_min(Pairs witness) {
    const std::size_t size = witness.size();
    Pairs forced;
    std::vector<int> excluded;
    const auto partner_in = [](const Pairs& p, int v) -> std::optional<int> {
      for (const auto& [a, b] : p) {
        if (a == v) return b;
      }
      return std::nullopt;
    };
    const auto used = [&](int w) {
      return std::any_of(forced.begin(), forced.end(), [w](const auto& p) { return p.second == w; });
    };
    for (int v = 0; v < static_cast<int>(left_labels_.size()) && forced.size() < size; ++v) {
      const auto current = partner_in(witness, v);
      bool committed = false;
      for (int w = 0; w < static_cast<int>(right_labels_.size()); ++w) {
        if (current && w >= *current) break;
        if (right_labels_[w] != left_labels_[v] || used(w)) continue;
        auto trial = forced;
        trial.emplace_back(v, w);
        if (auto found = feasible(trial, excluded, size)) {
          witness = std::move(*found);
          forced = std::move(trial);
          committed = true;
          break;
        }
      }
      if (committed) continue;
      if (current) {
        forced.emplace_back(v, *current);
      } else {
        excluded.push_back(v);
      }
    }
    std::sort(forced.begin(), forced.end());
    return forced;
  }

  std::vector<std::vector<char>> left_adj_;
  std::vector<std::vector<char>> right_adj_;
  std::vector<int> left_labels_;
  std::vector<int> right_labels_;
  std::size_t budget_;
  std::size_t expansions_ = 0;
  Pairs best_;
  std::optional<std::size_t> target_;
};

/// Compatibility label of a node: its type, its mass and, when a prior
/// mapping is given, the set of already-conserved nodes it is bonded to
/// (expressed in product indices on both sides).
using LabelKey = std::tuple<int, long long, std::vector<NodeIndex>>;

inline LabelKey reactant_label(const UnifiedGraph& g, NodeIndex v, const AtomMapping* prior) {
  std::vector<NodeIndex> anchors;
  if (prior) {
    for (const auto u : g.neighbors(v)) {
      if (const auto fu = prior->image(u)) anchors.push_back(*fu);
    }
    std::sort(anchors.begin(), anchors.end());
  }
  return {g.node(v).type, mass_key(g.node(v).mass), std::move(anchors)};
}

inline LabelKey product_label(const UnifiedGraph& g, NodeIndex p, const AtomMapping* prior) {
  std::vector<NodeIndex> anchors;
  if (prior) {
    for (const auto q : g.neighbors(p)) {
      if (prior->preimage(q)) anchors.push_back(q);
    }
    std::sort(anchors.begin(), anchors.end());
  }
  return {g.node(p).type, mass_key(g.node(p).mass), std::move(anchors)};
}

inline std::vector<std::vector<char>> local_adjacency(const UnifiedGraph& g, std::span<const NodeIndex> nodes) {
  std::vector<std::vector<char>> adj(nodes.size(), std::vector<char>(nodes.size(), 0));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j < nodes.size(); ++j) adj[i][j] = (i != j && g.adjacent(nodes[i], nodes[j])) ? 1 : 0;
  }
  return adj;
}

}  // namespace detail

/// Largest connected common induced subgraph between the given node subsets
/// of a reactant and a product graph, matching on mass and type. With
/// `prior`, a pair is only admissible if its bonds to already-mapped nodes
/// agree on both sides. Ties go to the lexicographically smallest pair list.
inline McsResult max_common_subgraph(const UnifiedGraph& reac, std::span<const NodeIndex> reac_nodes,
                                     const UnifiedGraph& prod, std::span<const NodeIndex> prod_nodes,
                                     const McsOptions& options = {}, const AtomMapping* prior = nullptr) {
  std::vector<NodeIndex> r(reac_nodes.begin(), reac_nodes.end());
  std::vector<NodeIndex> p(prod_nodes.begin(), prod_nodes.end());
  std::sort(r.begin(), r.end());
  std::sort(p.begin(), p.end());

  std::map<detail::LabelKey, int> ids;
  const auto id_of = [&](detail::LabelKey key) {
    return ids.emplace(std::move(key), static_cast<int>(ids.size())).first->second;
  };
  std::vector<int> left_labels, right_labels;
  for (const auto v : r) left_labels.push_back(id_of(detail::reactant_label(reac, v, prior)));
  for (const auto w : p) right_labels.push_back(id_of(detail::product_label(prod, w, prior)));

  const bool any_compatible = std::any_of(left_labels.begin(), left_labels.end(), [&](int label) {
    return std::find(right_labels.begin(), right_labels.end(), label) != right_labels.end();
  });
  if (!any_compatible) fail(ErrorKind::NoCommonSubgraph, "no reactant/product atom pair agrees on mass and type");

  detail::McsSearch search(detail::local_adjacency(reac, r), std::move(left_labels), detail::local_adjacency(prod, p),
                           std::move(right_labels), options.budget);
  McsResult result;
  for (const auto& [i, j] : search.solve()) {
    result.pairs.emplace_back(r[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  result.expansions = search.expansions();
  return result;
}

struct ConservedResult {
  AtomMapping mapping;
  /// Pairs accepted in each iteration (0 once nothing is left to match).
  std::vector<std::size_t> iteration_sizes;
  std::size_t expansions = 0;
};

/// Repeatedly takes the single largest conserved fragment over all
/// (reactant molecule, product molecule) pairs among still-unmapped atoms.
inline ConservedResult iterate_conserved(const UnifiedGraph& reac, const UnifiedGraph& prod, int iterations = 2,
                                         const McsOptions& options = {}) {
  if (iterations < 1) fail(ErrorKind::InvalidConfig, "conserved iterations must be at least 1");
  ConservedResult out{AtomMapping(reac.size(), prod.size()), {}, 0};
  auto& m = out.mapping;

  for (int k = 1; k <= iterations; ++k) {
    std::vector<std::pair<NodeIndex, NodeIndex>> best;
    for (int rc = 1; rc <= reac.molecule_count(); ++rc) {
      std::vector<NodeIndex> r;
      for (const auto v : reac.component_nodes(rc)) {
        if (!m.image(v)) r.push_back(v);
      }
      if (r.empty()) continue;
      for (int pc = 1; pc <= prod.molecule_count(); ++pc) {
        std::vector<NodeIndex> p;
        for (const auto w : prod.component_nodes(pc)) {
          if (!m.preimage(w)) p.push_back(w);
        }
        if (p.empty()) continue;
        McsResult found;
        try {
          found = max_common_subgraph(reac, r, prod, p, {options.budget - std::min(options.budget, out.expansions)},
                                      &m);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::NoCommonSubgraph) throw;
          continue;
        }
        out.expansions += found.expansions;
        if (found.pairs.size() > best.size() || (found.pairs.size() == best.size() && found.pairs < best)) {
          best = std::move(found.pairs);
        }
      }
    }
    out.iteration_sizes.push_back(best.size());
    for (const auto& [v, w] : best) m.map(v, w, Provenance::Conserved, k);
  }
  return out;
}

}  // namespace templater
