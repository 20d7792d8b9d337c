#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "templater/error.hpp"
#include "templater/graph.hpp"
#include "templater/mapping.hpp"
#include "templater/text.hpp"

namespace templater {

/// One element of a bond difference, seen from a mapped reactant atom.
/// A gained neighbor is a product neighbor; it has a reactant counterpart
/// unless it was created. A lost neighbor is a reactant neighbor; it has a
/// product counterpart unless it was deleted.
struct BondChange {
  enum class Kind { Gained, Lost };
  Kind kind = Kind::Gained;
  std::optional<NodeIndex> reactant;
  std::optional<NodeIndex> product;
  auto operator<=>(const BondChange&) const = default;
};

/// Symmetric difference between the reactant neighbors of v and the product
/// neighbors of f(v) pulled back through the mapping.
inline std::vector<BondChange> bond_delta(NodeIndex v, const AtomMapping& m, const UnifiedGraph& reac,
                                          const UnifiedGraph& prod) {
  const auto p = m.image(v);
  if (!p) fail(ErrorKind::InvalidTemplate, "bond difference requested for unmapped atom " + std::to_string(v + 1));
  std::vector<BondChange> out;
  for (const auto q : prod.neighbors(*p)) {
    const auto back = m.preimage(q);
    if (!back || !reac.adjacent(v, *back)) out.push_back({BondChange::Kind::Gained, back, q});
  }
  for (const auto u : reac.neighbors(v)) {
    const auto fu = m.image(u);
    if (!fu || !prod.adjacent(*p, *fu)) out.push_back({BondChange::Kind::Lost, u, fu});
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Per-molecule eigenvector centralities, computed once per molecule. Atoms
/// of molecules without bonds get 0.
class CentralityTable {
 public:
  CentralityTable(const UnifiedGraph& g, const CentralityOptions& options = {}) : values_(g.size(), 0.0) {
    for (int c = 1; c <= g.molecule_count(); ++c) {
      std::size_t degree_sum = 0;
      for (const auto v : g.component_nodes(c)) degree_sum += g.degree(v);
      if (degree_sum == 0) continue;
      for (const auto& [v, x] : eigenvector_centrality(g, c, options)) values_[v] = x;
    }
  }

  double operator[](NodeIndex v) const { return values_.at(v); }

 private:
  std::vector<double> values_;
};

inline double centrality_delta(NodeIndex v, NodeIndex p, const CentralityTable& reac, const CentralityTable& prod) {
  return std::abs(prod[p] - reac[v]);
}

/// |C_prod(p) - C_reac(v)| from freshly computed per-molecule centralities.
inline double centrality_delta(NodeIndex v, NodeIndex p, const UnifiedGraph& reac, const UnifiedGraph& prod) {
  const auto cr = eigenvector_centrality(reac, reac.node(v).component);
  const auto cp = eigenvector_centrality(prod, prod.node(p).component);
  return std::abs(cp.at(p) - cr.at(v));
}

struct PairDiagnostics {
  NodeIndex reactant = 0;
  NodeIndex product = 0;
  Provenance provenance = Provenance::Conserved;
  std::vector<BondChange> delta_e;
  double delta_c = 0.0;
  /// |delta_e| + weight * delta_c / max delta_c over candidates; 0 when
  /// the atom is not a candidate.
  double score = 0.0;
};

struct ReactionReport {
  std::vector<PairDiagnostics> pairs;
  /// Reactant nodes, ordered by molecule.
  std::array<NodeIndex, 2> initiators{};
  std::vector<NodeIndex> created;
  std::vector<NodeIndex> deleted;
};

struct InitiatorOptions {
  /// Multiplies the rescaled centrality change in the combined score.
  double centrality_weight = 1.0;
};

/// Unmatched product nodes are created, unmatched reactant nodes deleted.
inline std::pair<std::vector<NodeIndex>, std::vector<NodeIndex>> classify_created_deleted(const AtomMapping& m) {
  return {m.unmapped_products(), m.unmapped_reactants()};
}

/// Picks one atom per reacting reactant molecule: the one with the largest
/// |dE| + w * dC / max(dC), ties going to the smaller source id. Fills the
/// score field of the candidates in `pairs`.
inline std::array<NodeIndex, 2> select_initiators(std::vector<PairDiagnostics>& pairs, const UnifiedGraph& reac,
                                                  const InitiatorOptions& options = {}) {
  double max_dc = 0.0;
  for (const auto& d : pairs) {
    if (!d.delta_e.empty()) max_dc = std::max(max_dc, d.delta_c);
  }
  std::map<int, const PairDiagnostics*> best;
  for (auto& d : pairs) {
    if (d.delta_e.empty()) {
      d.score = 0.0;
      continue;
    }
    const double rescaled = max_dc > 0.0 ? d.delta_c / max_dc : 0.0;
    d.score = static_cast<double>(d.delta_e.size()) + options.centrality_weight * rescaled;
  }
  for (const auto& d : pairs) {
    if (d.delta_e.empty()) continue;
    const auto& node = reac.node(d.reactant);
    auto& slot = best[node.component];
    if (!slot || d.score > slot->score ||
        (d.score == slot->score && node.source_id < reac.node(slot->reactant).source_id)) {
      slot = &d;
    }
  }
  if (best.empty()) fail(ErrorKind::NoReactionDetected, "no mapped atom changes its bonding");
  if (best.size() == 1) {
    fail(ErrorKind::UnsupportedReaction, "bond changes are confined to reactant molecule " +
                                             std::to_string(best.begin()->first) + " (intramolecular reaction)");
  }
  if (best.size() > 2) {
    fail(ErrorKind::UnsupportedReaction,
         "bond changes span " + std::to_string(best.size()) + " reactant molecules; only two are supported");
  }
  return {best.begin()->second->reactant, std::next(best.begin())->second->reactant};
}

/// Bond differences, centrality changes, initiators and created/deleted atoms
/// for a complete mapping.
inline ReactionReport analyze_reaction(const AtomMapping& m, const UnifiedGraph& reac, const UnifiedGraph& prod,
                                       const InitiatorOptions& options = {}) {
  ReactionReport report;
  const CentralityTable cr(reac), cp(prod);
  for (const auto& pair : m.pairs()) {
    PairDiagnostics d;
    d.reactant = pair.reactant;
    d.product = pair.product;
    d.provenance = pair.provenance;
    d.delta_e = bond_delta(pair.reactant, m, reac, prod);
    d.delta_c = centrality_delta(pair.reactant, pair.product, cr, cp);
    report.pairs.push_back(std::move(d));
  }
  std::tie(report.created, report.deleted) = classify_created_deleted(m);
  report.initiators = select_initiators(report.pairs, reac, options);
  return report;
}

namespace detail {

inline std::string atom_label(const AtomNode& n) {
  return std::to_string(n.component) + ":" + std::to_string(n.source_id);
}

inline std::string label_list(const std::vector<NodeIndex>& nodes, const UnifiedGraph& g) {
  std::string out;
  for (const auto v : nodes) {
    if (!out.empty()) out += ' ';
    out += atom_label(g.node(v));
  }
  return out;
}

}  // namespace detail

/// Human-readable summary. Atoms are written as <molecule>:<source id>.
inline std::string report_text(const ReactionReport& r, const UnifiedGraph& reac, const UnifiedGraph& prod) {
  std::string out;
  out += "Reaction report\n";
  out += "  reactant atoms: " + std::to_string(reac.size()) + "\n";
  out += "  product atoms:  " + std::to_string(prod.size()) + "\n";
  out += "  mapped pairs:   " + std::to_string(r.pairs.size()) + "\n";
  out += "  initiators:     " + detail::atom_label(reac.node(r.initiators[0])) + " " +
         detail::atom_label(reac.node(r.initiators[1])) + "\n";
  out += "  created:        " + (r.created.empty() ? std::string("none") : detail::label_list(r.created, prod)) + "\n";
  out += "  deleted:        " + (r.deleted.empty() ? std::string("none") : detail::label_list(r.deleted, reac)) + "\n";
  out += "\nChanged atoms (reactant -> product, |dE|, dC, score)\n";
  for (const auto& d : r.pairs) {
    if (d.delta_e.empty()) continue;
    out += "  " + detail::atom_label(reac.node(d.reactant)) + " -> " + detail::atom_label(prod.node(d.product)) + "  " +
           std::to_string(d.delta_e.size()) + "  " + text::fixed6(d.delta_c) + "  " + text::fixed6(d.score) + "\n";
  }
  return out;
}

/// Machine-readable "key = value" form. Keys:
///   reactant_atoms, product_atoms, mapped, conserved, similarity,
///   path_refined, hydrogen_swapped   integers
///   initiators, created, deleted     space-separated <molecule>:<source id>
///   pair.<r>                         "<p> <provenance> <|dE|> <dC>"
/// followed by any caller-supplied extra keys, in the order given.
inline std::string report_key_values(const ReactionReport& r, const UnifiedGraph& reac, const UnifiedGraph& prod,
                                     const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::map<Provenance, std::size_t> counts;
  for (const auto& d : r.pairs) ++counts[d.provenance];
  std::string out;
  const auto put = [&out](const std::string& key, const std::string& value) { out += key + " = " + value + "\n"; };
  put("reactant_atoms", std::to_string(reac.size()));
  put("product_atoms", std::to_string(prod.size()));
  put("mapped", std::to_string(r.pairs.size()));
  put("conserved", std::to_string(counts[Provenance::Conserved]));
  put("similarity", std::to_string(counts[Provenance::Similarity]));
  put("path_refined", std::to_string(counts[Provenance::PathRefined]));
  put("hydrogen_swapped", std::to_string(counts[Provenance::HydrogenSwapped]));
  put("initiators", detail::atom_label(reac.node(r.initiators[0])) + " " + detail::atom_label(reac.node(r.initiators[1])));
  put("created", detail::label_list(r.created, prod));
  put("deleted", detail::label_list(r.deleted, reac));
  for (const auto& [key, value] : extra) put(key, value);
  for (const auto& d : r.pairs) {
    put("pair." + detail::atom_label(reac.node(d.reactant)),
        detail::atom_label(prod.node(d.product)) + " " + std::string(to_string(d.provenance)) + " " +
            std::to_string(d.delta_e.size()) + " " + text::fixed6(d.delta_c));
  }
  return out;
}

}  // namespace templater
