#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "templater/error.hpp"
#include "templater/lammps_io.hpp"

namespace templater {

enum class Side { Reactant, Product };

constexpr std::string_view to_string(Side side) noexcept {
  return side == Side::Reactant ? "reactant" : "product";
}

/// Position of a node in its UnifiedGraph; the node's global id is index + 1.
using NodeIndex = std::size_t;

/// Masses compare equal when they agree to 1e-4 amu.
inline long long mass_key(double mass) noexcept { return std::llround(mass * 1e4); }

inline bool same_mass(double a, double b) noexcept { return mass_key(a) == mass_key(b); }

struct AtomNode {
  int global_id = 0;
  AtomId source_id = 0;
  double mass = 0.0;
  int type = 0;
  double charge = 0.0;
  /// 1-based index of the molecule (input file) the atom came from.
  int component = 0;
};

inline bool same_attributes(const AtomNode& a, const AtomNode& b) noexcept {
  return a.type == b.type && same_mass(a.mass, b.mass);
}

class UnifiedGraph {
 public:
  UnifiedGraph() = default;

  /// Builds a graph from nodes (in global-id order) and undirected edges.
  /// Throws on self-loops, duplicate edges or out-of-range endpoints.
  UnifiedGraph(Side side, std::vector<AtomNode> nodes, const std::vector<std::pair<NodeIndex, NodeIndex>>& edges)
      : side_(side), nodes_(std::move(nodes)), adjacency_(nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      nodes_[i].global_id = static_cast<int>(i + 1);
      molecule_count_ = std::max(molecule_count_, nodes_[i].component);
      by_source_[{nodes_[i].component, nodes_[i].source_id}] = i;
    }
    for (const auto& [a, b] : edges) {
      if (a >= nodes_.size() || b >= nodes_.size()) fail(ErrorKind::DanglingReference, "edge endpoint out of range");
      if (a == b) fail(ErrorKind::MalformedLine, "self-loop on node " + std::to_string(a + 1));
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& list : adjacency_) {
      std::sort(list.begin(), list.end());
      if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
        fail(ErrorKind::MalformedLine, "duplicate bond in graph");
      }
      edge_count_ += list.size();
    }
    edge_count_ /= 2;
  }

  Side side() const noexcept { return side_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  int molecule_count() const noexcept { return molecule_count_; }

  const AtomNode& node(NodeIndex v) const { return nodes_.at(v); }
  const std::vector<AtomNode>& nodes() const noexcept { return nodes_; }
  std::span<const NodeIndex> neighbors(NodeIndex v) const { return adjacency_.at(v); }
  std::size_t degree(NodeIndex v) const { return adjacency_.at(v).size(); }

  bool adjacent(NodeIndex a, NodeIndex b) const {
    const auto& list = adjacency_.at(a);
    return std::binary_search(list.begin(), list.end(), b);
  }

  /// Edges as (smaller, larger) index pairs in ascending order.
  std::vector<std::pair<NodeIndex, NodeIndex>> edges() const {
    std::vector<std::pair<NodeIndex, NodeIndex>> out;
    out.reserve(edge_count_);
    for (NodeIndex a = 0; a < nodes_.size(); ++a) {
      for (const auto b : adjacency_[a]) {
        if (a < b) out.emplace_back(a, b);
      }
    }
    return out;
  }

  std::optional<NodeIndex> find(int component, AtomId source_id) const {
    const auto it = by_source_.find({component, source_id});
    if (it == by_source_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<NodeIndex> component_nodes(int component) const {
    std::vector<NodeIndex> out;
    for (NodeIndex v = 0; v < nodes_.size(); ++v) {
      if (nodes_[v].component == component) out.push_back(v);
    }
    return out;
  }

 private:
  Side side_ = Side::Reactant;
  std::vector<AtomNode> nodes_;
  std::vector<std::vector<NodeIndex>> adjacency_;
  std::map<std::pair<int, AtomId>, NodeIndex> by_source_;
  std::size_t edge_count_ = 0;
  int molecule_count_ = 0;
};

/// Combines per-molecule topologies into one graph. Molecule k gets
/// component id k (1-based); within a molecule atoms are numbered by
/// ascending source id, offset by the sizes of the molecules before it.
inline UnifiedGraph build_unified_graph(std::span<const SystemTopology> topologies, Side side) {
  if (topologies.empty()) fail(ErrorKind::EmptyTopology, "no " + std::string(to_string(side)) + " molecules given");
  std::vector<AtomNode> nodes;
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  for (std::size_t k = 0; k < topologies.size(); ++k) {
    const auto& topo = topologies[k];
    if (topo.atoms.empty()) {
      fail(ErrorKind::EmptyTopology, std::string(to_string(side)) + " molecule " + std::to_string(k + 1) +
                                         " has no atoms");
    }
    std::vector<AtomRecord> atoms = topo.atoms;
    std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::map<AtomId, NodeIndex> local;
    for (const auto& atom : atoms) {
      const auto mass = topo.masses.find(atom.type);
      if (mass == topo.masses.end()) {
        fail(ErrorKind::MissingMass, "atom type " + std::to_string(atom.type) + " has no mass");
      }
      local[atom.id] = nodes.size();
      nodes.push_back({0, atom.id, mass->second, atom.type, atom.charge, static_cast<int>(k + 1)});
    }
    std::vector<std::pair<NodeIndex, NodeIndex>> molecule_edges;
    for (const auto& bond : topo.bonds) {
      const auto a = local.find(bond.atoms[0]);
      const auto b = local.find(bond.atoms[1]);
      if (a == local.end() || b == local.end()) fail(ErrorKind::DanglingReference, "bond references missing atom");
      molecule_edges.emplace_back(std::min(a->second, b->second), std::max(a->second, b->second));
    }
    // A bond listed twice in the input (different bond types) is one edge.
    std::sort(molecule_edges.begin(), molecule_edges.end());
    molecule_edges.erase(std::unique(molecule_edges.begin(), molecule_edges.end()), molecule_edges.end());
    edges.insert(edges.end(), molecule_edges.begin(), molecule_edges.end());
  }
  return UnifiedGraph(side, std::move(nodes), edges);
}

template <std::size_t N>
struct Feature {
  std::array<NodeIndex, N> nodes{};
  /// Atom types of the participants, in the stored orientation.
  std::array<int, N> signature{};
  auto operator<=>(const Feature&) const = default;
};

struct FeatureSet {
  std::vector<Feature<2>> bonds;
  std::vector<Feature<3>> angles;
  std::vector<Feature<4>> dihedrals;
  /// Center first, then the three neighbors.
  std::vector<Feature<4>> impropers;
};

namespace detail {

template <std::size_t N>
Feature<N> canonical_chain(const UnifiedGraph& g, std::array<NodeIndex, N> nodes) {
  Feature<N> forward, backward;
  for (std::size_t i = 0; i < N; ++i) {
    forward.nodes[i] = nodes[i];
    backward.nodes[i] = nodes[N - 1 - i];
  }
  for (std::size_t i = 0; i < N; ++i) {
    forward.signature[i] = g.node(forward.nodes[i]).type;
    backward.signature[i] = g.node(backward.nodes[i]).type;
  }
  const auto key = [](const Feature<N>& f) { return std::pair(f.signature, f.nodes); };
  return key(backward) < key(forward) ? backward : forward;
}

}  // namespace detail

/// Enumerates bonds, angles, proper dihedrals (simple 3-edge paths) and
/// impropers (every neighbor triple of a node with degree >= 3), each once.
inline FeatureSet enumerate_features(const UnifiedGraph& g) {
  FeatureSet out;
  for (const auto& [a, b] : g.edges()) out.bonds.push_back(detail::canonical_chain<2>(g, {a, b}));
  for (NodeIndex center = 0; center < g.size(); ++center) {
    const auto nb = g.neighbors(center);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      for (std::size_t j = i + 1; j < nb.size(); ++j) {
        out.angles.push_back(detail::canonical_chain<3>(g, {nb[i], center, nb[j]}));
        for (std::size_t k = j + 1; k < nb.size(); ++k) {
          std::array<NodeIndex, 3> outer{nb[i], nb[j], nb[k]};
          std::sort(outer.begin(), outer.end(), [&](NodeIndex x, NodeIndex y) {
            return std::pair(g.node(x).type, x) < std::pair(g.node(y).type, y);
          });
          Feature<4> improper;
          improper.nodes = {center, outer[0], outer[1], outer[2]};
          for (std::size_t s = 0; s < 4; ++s) improper.signature[s] = g.node(improper.nodes[s]).type;
          out.impropers.push_back(improper);
        }
      }
    }
  }
  for (const auto& [b, c] : g.edges()) {
    for (const auto a : g.neighbors(b)) {
      if (a == c) continue;
      for (const auto d : g.neighbors(c)) {
        if (d == b || d == a) continue;
        out.dihedrals.push_back(detail::canonical_chain<4>(g, {a, b, c, d}));
      }
    }
  }
  std::sort(out.bonds.begin(), out.bonds.end());
  std::sort(out.angles.begin(), out.angles.end());
  std::sort(out.dihedrals.begin(), out.dihedrals.end());
  std::sort(out.impropers.begin(), out.impropers.end());
  return out;
}

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

/// Breadth-first hop counts from the nearest source; kUnreachable otherwise.
inline std::vector<int> shortest_path_distances(const UnifiedGraph& g, std::span<const NodeIndex> sources) {
  std::vector<int> dist(g.size(), kUnreachable);
  std::queue<NodeIndex> queue;
  for (const auto s : sources) {
    if (dist.at(s) != 0) {
      dist[s] = 0;
      queue.push(s);
    }
  }
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop();
    for (const auto u : g.neighbors(v)) {
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        queue.push(u);
      }
    }
  }
  return dist;
}

inline int eccentricity_within_component(const UnifiedGraph& g, NodeIndex v) {
  const std::array<NodeIndex, 1> source{v};
  const auto dist = shortest_path_distances(g, source);
  const int component = g.node(v).component;
  int ecc = 0;
  for (NodeIndex u = 0; u < g.size(); ++u) {
    if (g.node(u).component == component && dist[u] != kUnreachable) ecc = std::max(ecc, dist[u]);
  }
  return ecc;
}

/// Nodes grouped by exact hop distance from `root`: shells[k] holds the nodes
/// at distance k, for k = 0..max_depth.
inline std::vector<std::vector<NodeIndex>> distance_shells(const UnifiedGraph& g, NodeIndex root, int max_depth) {
  const std::array<NodeIndex, 1> source{root};
  const auto dist = shortest_path_distances(g, source);
  std::vector<std::vector<NodeIndex>> shells(static_cast<std::size_t>(std::max(max_depth, 0)) + 1);
  for (NodeIndex u = 0; u < g.size(); ++u) {
    if (dist[u] != kUnreachable && dist[u] <= max_depth) shells[static_cast<std::size_t>(dist[u])].push_back(u);
  }
  return shells;
}

struct CentralityOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

/// Principal eigenvector of the adjacency matrix of one molecule, unit
/// Euclidean norm, non-negative. Iterates with A + I, which has the same
/// eigenvectors as A but a unique dominant eigenvalue on bipartite graphs.
/// A molecule made of several disconnected fragments gets one normalized
/// vector per fragment; isolated atoms inside such a molecule score 0.
inline std::map<NodeIndex, double> eigenvector_centrality(const UnifiedGraph& g, int component,
                                                          const CentralityOptions& options = {}) {
  const auto members = g.component_nodes(component);
  std::size_t edges = 0;
  for (const auto v : members) edges += g.degree(v);
  if (edges == 0) {
    fail(ErrorKind::NoEdges, "eigenvector centrality is undefined for molecule " + std::to_string(component) +
                                 " without bonds");
  }

  std::map<NodeIndex, double> result;
  std::vector<bool> seen(g.size(), false);
  for (const auto start : members) {
    if (seen[start]) continue;
    const std::array<NodeIndex, 1> source{start};
    const auto dist = shortest_path_distances(g, source);
    std::vector<NodeIndex> piece;
    for (NodeIndex u = 0; u < g.size(); ++u) {
      if (dist[u] != kUnreachable) {
        piece.push_back(u);
        seen[u] = true;
      }
    }
    if (piece.size() == 1) {
      result[start] = 0.0;
      continue;
    }
    std::map<NodeIndex, std::size_t> local;
    for (std::size_t i = 0; i < piece.size(); ++i) local[piece[i]] = i;

    const std::size_t n = piece.size();
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), next(n);
    bool converged = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double sum = x[i];
        for (const auto u : g.neighbors(piece[i])) sum += x[local[u]];
        next[i] = sum;
        norm += sum * sum;
      }
      norm = std::sqrt(norm);
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] /= norm;
        diff = std::max(diff, std::abs(next[i] - x[i]));
      }
      x.swap(next);
      if (diff < options.tolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      fail(ErrorKind::NumericalFailure, "power iteration did not converge for molecule " + std::to_string(component));
    }
    for (std::size_t i = 0; i < n; ++i) result[piece[i]] = x[i];
  }
  return result;
}

}  // namespace templater
