#pragma once

// Builders, seeded generators and brute-force oracles shared by the unit
// tests and the acceptance runner. Nothing here calls into the search code
// it is meant to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "templater/templater.hpp"

namespace support {

using templater::AtomId;
using templater::NodeIndex;
using templater::SystemTopology;
using templater::UnifiedGraph;

inline const std::filesystem::path kFixtures{TEMPLATER_FIXTURES};

inline std::vector<SystemTopology> load(const std::string& dir, std::initializer_list<const char*> names) {
  std::vector<SystemTopology> out;
  for (const auto* name : names) out.push_back(templater::load_data_file(kFixtures / dir / name));
  return out;
}

struct Reaction {
  std::vector<SystemTopology> reactants;
  std::vector<SystemTopology> products;
};

inline Reaction poly_addition() { return {load("poly_addition", {"mdi.data", "bd.data"}), load("poly_addition", {"product.data"})}; }
inline Reaction poly_condensation() {
  return {load("poly_condensation", {"ht.data", "mpd.data"}), load("poly_condensation", {"product.data"})};
}
inline Reaction chain_polymerization() {
  return {load("chain_polymerization", {"butene.data", "butene.data"}), load("chain_polymerization", {"octane.data"})};
}

/// One molecule from atom types (1-based ids in order) and 1-based bonds.
/// Masses come from `masses`; coordinates are spread along x.
inline SystemTopology molecule(const std::vector<int>& types, const std::vector<std::pair<AtomId, AtomId>>& bonds,
                               const std::map<int, double>& masses, const std::vector<double>& charges = {}) {
  SystemTopology t;
  t.title = "test molecule";
  for (std::size_t i = 0; i < types.size(); ++i) {
    const double q = i < charges.size() ? charges[i] : 0.0;
    t.atoms.push_back({static_cast<AtomId>(i + 1), 1, types[i], q, {1.5 * static_cast<double>(i), 0.0, 0.0}});
  }
  for (const auto& [type, mass] : masses) t.masses[type] = mass;
  for (const auto& [a, b] : bonds) t.bonds.push_back({1, {a, b}});
  t.box = {{{-10, 10}, {-10, 10}, {-10, 10}}};
  return t;
}

/// Every angle and proper dihedral implied by the bonds, typed 1.
inline void add_derived_interactions(SystemTopology& t) {
  std::map<AtomId, std::vector<AtomId>> nb;
  for (const auto& b : t.bonds) {
    nb[b.atoms[0]].push_back(b.atoms[1]);
    nb[b.atoms[1]].push_back(b.atoms[0]);
  }
  for (auto& [v, list] : nb) std::sort(list.begin(), list.end());
  for (const auto& [center, list] : nb) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) t.angles.push_back({1, {list[i], center, list[j]}});
    }
  }
  for (const auto& b : t.bonds) {
    const auto [x, y] = std::pair(b.atoms[0], b.atoms[1]);
    for (const auto a : nb[x]) {
      if (a == y) continue;
      for (const auto d : nb[y]) {
        if (d == x || d == a) continue;
        t.dihedrals.push_back({1, {a, x, y, d}});
      }
    }
  }
}

inline UnifiedGraph graph_of(const SystemTopology& t, templater::Side side = templater::Side::Reactant) {
  const std::vector<SystemTopology> one{t};
  return templater::build_unified_graph(one, side);
}

// ---------------------------------------------------------------- random graphs

/// Labelled graph over 0..n-1 used by the oracles.
struct SmallGraph {
  std::vector<int> labels;
  std::vector<std::vector<char>> adj;
  std::size_t size() const { return labels.size(); }
};

inline constexpr double kSymbolMass[3] = {12.011, 14.007, 15.999};

inline SmallGraph random_small_graph(std::mt19937& rng, int max_nodes, double edge_p) {
  std::uniform_int_distribution<int> count(1, max_nodes);
  std::uniform_int_distribution<int> symbol(0, 2);
  std::bernoulli_distribution edge(edge_p);
  SmallGraph g;
  const int n = count(rng);
  g.labels.resize(static_cast<std::size_t>(n));
  for (auto& l : g.labels) l = symbol(rng);
  g.adj.assign(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (edge(rng)) g.adj[i][j] = g.adj[j][i] = 1;
    }
  }
  return g;
}

/// Random connected graph: a random tree plus extra edges.
inline SmallGraph random_connected_graph(std::mt19937& rng, int min_nodes, int max_nodes, double extra_p) {
  std::uniform_int_distribution<int> count(min_nodes, max_nodes);
  std::uniform_int_distribution<int> symbol(0, 2);
  std::bernoulli_distribution extra(extra_p);
  SmallGraph g;
  const int n = count(rng);
  g.labels.resize(static_cast<std::size_t>(n));
  for (auto& l : g.labels) l = symbol(rng);
  g.adj.assign(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (int i = 1; i < n; ++i) {
    const int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
    g.adj[i][parent] = g.adj[parent][i] = 1;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!g.adj[i][j] && extra(rng)) g.adj[i][j] = g.adj[j][i] = 1;
    }
  }
  return g;
}

inline UnifiedGraph to_unified(const SmallGraph& s, templater::Side side) {
  std::vector<templater::AtomNode> nodes;
  for (std::size_t i = 0; i < s.size(); ++i) {
    nodes.push_back({0, static_cast<AtomId>(i + 1), kSymbolMass[s.labels[i]], s.labels[i] + 1, 0.0, 1});
  }
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (s.adj[i][j]) edges.emplace_back(i, j);
    }
  }
  return UnifiedGraph(side, std::move(nodes), edges);
}

// ---------------------------------------------------------------- oracles

/// Exhaustive maximum connected common induced subgraph. Returns the size
/// and, among all maximum mappings, the lexicographically smallest sorted
/// (left, right) pair list.
struct McsOracle {
  std::size_t size = 0;
  std::vector<std::pair<int, int>> lex_min;
};

inline bool connected_subset(const SmallGraph& g, unsigned mask) {
  if (mask == 0) return false;
  const int n = static_cast<int>(g.size());
  int start = 0;
  while (!(mask & (1u << start))) ++start;
  unsigned seen = 1u << start;
  std::vector<int> stack{start};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u = 0; u < n; ++u) {
      if ((mask & (1u << u)) && !(seen & (1u << u)) && g.adj[v][u]) {
        seen |= 1u << u;
        stack.push_back(u);
      }
    }
  }
  return seen == mask;
}

/// Calls `visit` for every label-preserving induced embedding of the
/// vertices in `members` (ascending) into `right`.
inline void embeddings(const SmallGraph& left, const std::vector<int>& members, const SmallGraph& right,
                       const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> image(members.size(), -1);
  std::vector<char> used(right.size(), 0);
  std::function<void(std::size_t)> place = [&](std::size_t k) {
    if (k == members.size()) {
      visit(image);
      return;
    }
    const int v = members[k];
    for (int w = 0; w < static_cast<int>(right.size()); ++w) {
      if (used[w] || right.labels[w] != left.labels[v]) continue;
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) ok = left.adj[v][members[j]] == right.adj[w][image[j]];
      if (!ok) continue;
      used[w] = 1;
      image[k] = w;
      place(k + 1);
      used[w] = 0;
    }
  };
  place(0);
}

inline McsOracle brute_force_mcs(const SmallGraph& left, const SmallGraph& right, bool want_lex = true) {
  McsOracle best;
  const unsigned limit = 1u << left.size();
  std::vector<unsigned> masks;
  for (unsigned mask = 1; mask < limit; ++mask) {
    if (connected_subset(left, mask)) masks.push_back(mask);
  }
  std::sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
    return __builtin_popcount(a) > __builtin_popcount(b);
  });
  for (const auto mask : masks) {
    const auto size = static_cast<std::size_t>(__builtin_popcount(mask));
    if (size < best.size) break;
    std::vector<int> members;
    for (int v = 0; v < static_cast<int>(left.size()); ++v) {
      if (mask & (1u << v)) members.push_back(v);
    }
    embeddings(left, members, right, [&](const std::vector<int>& image) {
      std::vector<std::pair<int, int>> pairs;
      for (std::size_t k = 0; k < members.size(); ++k) pairs.emplace_back(members[k], image[k]);
      if (size > best.size || (want_lex && pairs < best.lex_min) || best.lex_min.empty()) {
        best.size = size;
        best.lex_min = pairs;
      }
    });
    if (!want_lex && best.size == size && size > 0) break;
  }
  return best;
}

/// n! enumeration of the rectangular assignment problem (min(n, m) pairs).
inline double brute_force_assignment(const templater::Matrix& c) {
  const std::size_t n = c.size();
  if (n == 0 || c[0].empty()) return 0.0;
  const std::size_t m = c[0].size();
  const bool flip = n > m;
  const std::size_t small = flip ? m : n, large = flip ? n : m;
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < small; ++i) total += flip ? c[perm[i]][i] : c[i][perm[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline templater::Matrix random_matrix(std::mt19937& rng, std::size_t rows, std::size_t cols, bool integral) {
  std::uniform_real_distribution<double> real(0.0, 1.0);
  std::uniform_int_distribution<int> small(0, 4);
  templater::Matrix c(rows, std::vector<double>(cols));
  for (auto& row : c) {
    for (auto& x : row) x = integral ? small(rng) : real(rng);
  }
  return c;
}

/// Checks the mapping invariants on conserved pairs without using any of
/// the search code: injectivity, attribute agreement, and both-way edge
/// agreement among conserved pairs. Returns an empty string when valid.
inline std::string validate_conserved(const templater::AtomMapping& m, const UnifiedGraph& reac,
                                      const UnifiedGraph& prod) {
  std::map<NodeIndex, NodeIndex> f;
  std::set<NodeIndex> images;
  for (const auto& pair : m.pairs()) {
    if (pair.provenance != templater::Provenance::Conserved) continue;
    if (!images.insert(pair.product).second) return "product node used twice";
    f[pair.reactant] = pair.product;
    const auto& a = reac.node(pair.reactant);
    const auto& b = prod.node(pair.product);
    if (a.type != b.type || std::llround(a.mass * 1e4) != std::llround(b.mass * 1e4)) return "attribute mismatch";
  }
  for (const auto& [v, fv] : f) {
    for (const auto& [u, fu] : f) {
      if (u <= v) continue;
      if (reac.adjacent(v, u) != prod.adjacent(fv, fu)) return "edge mismatch between conserved pairs";
    }
  }
  return {};
}

// ---------------------------------------------------------------- synthetic reactions

/// Two random molecules joined by one new bond between `a` (molecule 1) and
/// `b` (molecule 2). The joined atoms change type in the product, as force
/// fields retype reacting atoms. Optionally one extra leaf on each of a and
/// b is removed, mimicking a condensation.
struct SyntheticReaction {
  Reaction reaction;
  AtomId a = 0;  ///< source id in molecule 1
  AtomId b = 0;  ///< source id in molecule 2
  bool condensation = false;
};

inline SyntheticReaction synthetic_reaction(std::mt19937& rng, bool condensation) {
  // Molecule 1 uses types 1..3, molecule 2 types 4..6; reacting atoms get
  // 7 and 8 (11 and 12 after reaction); leaving leaves get 9 and 10.
  const std::map<int, double> masses{{1, 12.011}, {2, 14.007}, {3, 1.008}, {4, 12.011}, {5, 15.999}, {6, 1.008},
                                     {7, 12.011}, {8, 14.007}, {9, 15.999}, {10, 1.008}, {11, 12.011}, {12, 14.007}};
  const auto make = [&](int type_offset, int reactive_type, int leaving_type, int size) {
    const auto skeleton = random_connected_graph(rng, size, size, 0.08);
    std::vector<int> types;
    for (const auto l : skeleton.labels) types.push_back(type_offset + l);
    std::vector<std::pair<AtomId, AtomId>> bonds;
    for (int i = 0; i < static_cast<int>(skeleton.size()); ++i) {
      for (int j = i + 1; j < static_cast<int>(skeleton.size()); ++j) {
        if (skeleton.adj[i][j]) bonds.emplace_back(i + 1, j + 1);
      }
    }
    const int site = std::uniform_int_distribution<int>(1, static_cast<int>(skeleton.size()))(rng);
    types[static_cast<std::size_t>(site - 1)] = reactive_type;
    if (condensation) {
      types.push_back(leaving_type);
      bonds.emplace_back(site, static_cast<AtomId>(types.size()));
    }
    return std::tuple(types, bonds, site);
  };
  std::uniform_int_distribution<int> size(4, 9);
  auto [t1, b1, s1] = make(1, 7, 9, size(rng));
  auto [t2, b2, s2] = make(4, 8, 10, size(rng));

  SyntheticReaction out;
  out.a = s1;
  out.b = s2;
  out.condensation = condensation;
  auto m1 = molecule(t1, b1, masses);
  auto m2 = molecule(t2, b2, masses);
  add_derived_interactions(m1);
  add_derived_interactions(m2);
  out.reaction.reactants = {m1, m2};

  // Product: molecule 1 atoms, then molecule 2 atoms, minus leaving leaves.
  std::vector<int> pt;
  std::vector<std::pair<AtomId, AtomId>> pb;
  std::map<std::pair<int, AtomId>, AtomId> id;
  const std::vector<std::vector<int>*> types{&t1, &t2};
  const std::vector<std::vector<std::pair<AtomId, AtomId>>*> bonds{&b1, &b2};
  for (int mol = 0; mol < 2; ++mol) {
    const auto count = types[mol]->size();
    for (std::size_t i = 0; i < count; ++i) {
      const auto atom = static_cast<AtomId>(i + 1);
      if (condensation && atom == static_cast<AtomId>(count)) continue;
      int type = (*types[mol])[i];
      if (type == 7) type = 11;
      if (type == 8) type = 12;
      pt.push_back(type);
      id[{mol, atom}] = static_cast<AtomId>(pt.size());
    }
    for (const auto& [x, y] : *bonds[mol]) {
      const auto ix = id.find({mol, x});
      const auto iy = id.find({mol, y});
      if (ix != id.end() && iy != id.end()) pb.emplace_back(ix->second, iy->second);
    }
  }
  pb.emplace_back(id.at({0, s1}), id.at({1, s2}));
  auto product = molecule(pt, pb, masses);
  add_derived_interactions(product);
  out.reaction.products = {product};
  return out;
}

}  // namespace support
