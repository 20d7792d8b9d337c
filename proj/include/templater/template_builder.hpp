#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "templater/error.hpp"
#include "templater/graph.hpp"
#include "templater/lammps_io.hpp"
#include "templater/mapping.hpp"
#include "templater/reaction_analysis.hpp"

namespace templater {

/// Nodes within `cutoff` hops of any site, plus `always` regardless of
/// distance. Sorted ascending.
inline std::vector<NodeIndex> prune_to_cutoff(const UnifiedGraph& g, std::span<const NodeIndex> sites, int cutoff,
                                              std::span<const NodeIndex> always = {}) {
  if (cutoff < 1) fail(ErrorKind::InvalidConfig, "cutoff must be at least 1");
  const auto dist = shortest_path_distances(g, sites);
  std::set<NodeIndex> keep(always.begin(), always.end());
  for (NodeIndex v = 0; v < g.size(); ++v) {
    if (dist[v] <= cutoff) keep.insert(v);
  }
  return {keep.begin(), keep.end()};
}

/// Members of a sorted node set with at least one bonded neighbor outside it.
inline std::vector<NodeIndex> mark_edge_atoms(std::span<const NodeIndex> nodes, const UnifiedGraph& g) {
  std::vector<NodeIndex> out;
  for (const auto v : nodes) {
    const auto nb = g.neighbors(v);
    const bool outside = std::any_of(nb.begin(), nb.end(), [&](NodeIndex u) {
      return !std::binary_search(nodes.begin(), nodes.end(), u);
    });
    if (outside) out.push_back(v);
  }
  return out;
}

namespace detail {

/// Template-local id (1-based) of each kept node, by ascending node index,
/// which is ascending (molecule, source id).
inline std::map<NodeIndex, AtomId> local_ids(std::span<const NodeIndex> nodes) {
  std::map<NodeIndex, AtomId> ids;
  for (std::size_t i = 0; i < nodes.size(); ++i) ids[nodes[i]] = static_cast<AtomId>(i + 1);
  return ids;
}

template <std::size_t N>
void carry(const std::vector<Interaction<N>>& from, int component, const UnifiedGraph& g,
           const std::map<NodeIndex, AtomId>& ids, std::vector<Interaction<N>>& to) {
  for (const auto& item : from) {
    Interaction<N> local{item.type, {}};
    bool inside = true;
    for (std::size_t k = 0; k < N && inside; ++k) {
      const auto node = g.find(component, item.atoms[k]);
      const auto it = node ? ids.find(*node) : ids.end();
      if (it == ids.end()) {
        inside = false;
      } else {
        local.atoms[k] = it->second;
      }
    }
    if (inside) to.push_back(local);
  }
}

}  // namespace detail

/// A molecule template over the given nodes: atoms renumbered 1..N, per-atom
/// data and every input interaction lying entirely inside copied over.
inline MoleculeTemplateFile carry_features(std::span<const NodeIndex> nodes, const UnifiedGraph& g,
                                           std::span<const SystemTopology> topologies, std::string title = {}) {
  MoleculeTemplateFile t;
  t.title = std::move(title);
  const auto ids = detail::local_ids(nodes);
  std::vector<std::map<AtomId, const AtomRecord*>> records(topologies.size());
  for (std::size_t k = 0; k < topologies.size(); ++k) {
    for (const auto& atom : topologies[k].atoms) records[k][atom.id] = &atom;
  }
  for (const auto v : nodes) {
    const auto& n = g.node(v);
    const auto& atom = *records.at(static_cast<std::size_t>(n.component - 1)).at(n.source_id);
    t.atoms.push_back({atom.type, atom.charge, atom.position});
  }
  for (std::size_t k = 0; k < topologies.size(); ++k) {
    const int component = static_cast<int>(k + 1);
    detail::carry(topologies[k].bonds, component, g, ids, t.bonds);
    detail::carry(topologies[k].angles, component, g, ids, t.angles);
    detail::carry(topologies[k].dihedrals, component, g, ids, t.dihedrals);
    detail::carry(topologies[k].impropers, component, g, ids, t.impropers);
  }
  return t;
}

struct ReactionTemplates {
  MoleculeTemplateFile pre;
  MoleculeTemplateFile post;
  ReactionMapFile map;
  /// Graph nodes behind each template atom, in template order.
  std::vector<NodeIndex> pre_nodes;
  std::vector<NodeIndex> post_nodes;
  int cutoff = 0;
};

/// Reactant atoms that must be in the pre-template whatever their distance:
/// initiators, deleted atoms, atoms whose bonding changed and their partners.
inline std::vector<NodeIndex> required_reactant_atoms(const ReactionReport& report) {
  std::set<NodeIndex> out(report.initiators.begin(), report.initiators.end());
  out.insert(report.deleted.begin(), report.deleted.end());
  for (const auto& d : report.pairs) {
    if (d.delta_e.empty()) continue;
    out.insert(d.reactant);
    for (const auto& change : d.delta_e) {
      if (change.reactant) out.insert(*change.reactant);
    }
  }
  return {out.begin(), out.end()};
}

/// Post-template node set: image of the pre set plus every created atom.
inline std::vector<NodeIndex> post_nodes_for(std::span<const NodeIndex> pre_nodes, const AtomMapping& m,
                                             const ReactionReport& report) {
  std::set<NodeIndex> out(report.created.begin(), report.created.end());
  for (const auto v : pre_nodes) {
    if (const auto p = m.image(v)) out.insert(*p);
  }
  return {out.begin(), out.end()};
}

/// Builds both templates and the map file from pruned node sets.
inline ReactionTemplates assemble_templates(const AtomMapping& m, const ReactionReport& report,
                                            std::span<const NodeIndex> pre_nodes, std::span<const NodeIndex> post_nodes,
                                            const UnifiedGraph& reac, const UnifiedGraph& prod,
                                            std::span<const SystemTopology> reac_topos,
                                            std::span<const SystemTopology> prod_topos, int cutoff) {
  ReactionTemplates out;
  out.pre_nodes.assign(pre_nodes.begin(), pre_nodes.end());
  out.post_nodes.assign(post_nodes.begin(), post_nodes.end());
  std::sort(out.pre_nodes.begin(), out.pre_nodes.end());
  std::sort(out.post_nodes.begin(), out.post_nodes.end());
  out.cutoff = cutoff;

  const auto in = [](const std::vector<NodeIndex>& set, NodeIndex v) {
    return std::binary_search(set.begin(), set.end(), v);
  };
  std::set<NodeIndex> image, post_mapped;
  for (const auto v : out.pre_nodes) {
    if (const auto p = m.image(v)) image.insert(*p);
  }
  for (const auto q : out.post_nodes) {
    if (m.preimage(q)) post_mapped.insert(q);
  }
  if (image != post_mapped) {
    fail(ErrorKind::InconsistentPruning, "mapped pre-template atoms and non-created post-template atoms differ (" +
                                             std::to_string(image.size()) + " vs " +
                                             std::to_string(post_mapped.size()) + ")");
  }
  for (const auto v : report.deleted) {
    if (!in(out.pre_nodes, v)) fail(ErrorKind::InconsistentPruning, "a deleted atom lies outside the pre-template");
  }
  for (const auto q : report.created) {
    if (!in(out.post_nodes, q)) fail(ErrorKind::InconsistentPruning, "a created atom lies outside the post-template");
  }
  for (const auto v : report.initiators) {
    if (!in(out.pre_nodes, v)) fail(ErrorKind::InconsistentPruning, "an initiator lies outside the pre-template");
  }

  out.pre = carry_features(out.pre_nodes, reac, reac_topos, "pre-reaction template");
  out.post = carry_features(out.post_nodes, prod, prod_topos, "post-reaction template");

  const auto pre_ids = detail::local_ids(out.pre_nodes);
  const auto post_ids = detail::local_ids(out.post_nodes);
  auto& map = out.map;
  map.title = "reaction map";
  map.pre_atom_count = static_cast<int>(out.pre_nodes.size());
  map.post_atom_count = static_cast<int>(out.post_nodes.size());
  for (const auto v : out.pre_nodes) {
    if (const auto p = m.image(v)) {
      map.equivalences.emplace_back(pre_ids.at(v), post_ids.at(*p));
    } else {
      map.delete_ids.push_back(pre_ids.at(v));
    }
  }
  for (const auto q : out.post_nodes) {
    if (!m.preimage(q)) map.create_ids.push_back(post_ids.at(q));
  }
  map.initiators = {pre_ids.at(report.initiators[0]), pre_ids.at(report.initiators[1])};
  for (const auto v : mark_edge_atoms(out.pre_nodes, reac)) map.edge_ids.push_back(pre_ids.at(v));
  validate(map);
  validate(out.pre);
  validate(out.post);
  return out;
}

/// Splits a template back into data-file topologies, one per bonded
/// fragment, so it can be fed to the pipeline again. Atom ids are kept.
inline std::vector<SystemTopology> template_to_topologies(const MoleculeTemplateFile& t,
                                                          const std::map<int, double>& masses) {
  const std::size_t n = t.atoms.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  const auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& b : t.bonds) {
    const auto a = root(static_cast<std::size_t>(b.atoms[0] - 1));
    const auto c = root(static_cast<std::size_t>(b.atoms[1] - 1));
    if (a != c) parent[std::max(a, c)] = std::min(a, c);
  }
  std::map<std::size_t, std::size_t> fragment_of_root;
  std::vector<SystemTopology> out;
  std::vector<std::size_t> fragment(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = root(i);
    auto [it, fresh] = fragment_of_root.emplace(r, out.size());
    if (fresh) out.emplace_back();
    fragment[i] = it->second;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& topo = out[fragment[i]];
    const auto& a = t.atoms[i];
    topo.atoms.push_back({static_cast<AtomId>(i + 1), 1, a.type, a.charge, a.position});
    const auto mass = masses.find(a.type);
    if (mass == masses.end()) fail(ErrorKind::MissingMass, "atom type " + std::to_string(a.type) + " has no mass");
    topo.masses[a.type] = mass->second;
  }
  const auto owner = [&](AtomId id) { return fragment[static_cast<std::size_t>(id - 1)]; };
  for (const auto& x : t.bonds) out[owner(x.atoms[0])].bonds.push_back(x);
  for (const auto& x : t.angles) out[owner(x.atoms[0])].angles.push_back(x);
  for (const auto& x : t.dihedrals) out[owner(x.atoms[0])].dihedrals.push_back(x);
  for (const auto& x : t.impropers) out[owner(x.atoms[0])].impropers.push_back(x);
  return out;
}

/// type -> mass over all nodes of a graph.
inline std::map<int, double> mass_table(const UnifiedGraph& g) {
  std::map<int, double> out;
  for (const auto& n : g.nodes()) out.emplace(n.type, n.mass);
  return out;
}

}  // namespace templater
