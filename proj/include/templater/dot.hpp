#pragma once

#include <algorithm>
#include <string>
#include <string_view>

#include "templater/error.hpp"
#include "templater/graph.hpp"
#include "templater/mapping.hpp"
#include "templater/reaction_analysis.hpp"

namespace templater {

enum class DotStage { Reactants, Products, Mapped };

inline DotStage parse_stage(std::string_view name) {
  if (name == "reactants") return DotStage::Reactants;
  if (name == "products") return DotStage::Products;
  if (name == "mapped") return DotStage::Mapped;
  fail(ErrorKind::UnknownStage, "unknown export stage '" + std::string(name) + "' (expected reactants, products or mapped)");
}

constexpr std::string_view to_string(DotStage stage) noexcept {
  switch (stage) {
    case DotStage::Reactants: return "reactants";
    case DotStage::Products: return "products";
    case DotStage::Mapped: return "mapped";
  }
  return "unknown";
}

/// Whatever pipeline state exists; mapping and report may be absent.
struct DotInput {
  const UnifiedGraph* reactants = nullptr;
  const UnifiedGraph* products = nullptr;
  const AtomMapping* mapping = nullptr;
  const ReactionReport* report = nullptr;
};

namespace detail {

// Legend: conserved black, similarity-based red, created green, deleted blue,
// initiators orange, anything not yet classified gray.
inline std::string_view reactant_color(const DotInput& in, NodeIndex v) {
  if (in.report && std::find(in.report->initiators.begin(), in.report->initiators.end(), v) != in.report->initiators.end()) {
    return "orange";
  }
  if (!in.mapping) return "gray";
  const auto p = in.mapping->provenance(v);
  if (!p) return in.report ? "blue" : "gray";
  return *p == Provenance::Conserved ? "black" : "red";
}

inline std::string_view product_color(const DotInput& in, NodeIndex q) {
  if (!in.mapping) return "gray";
  const auto v = in.mapping->preimage(q);
  if (!v) return in.report ? "green" : "gray";
  return reactant_color(in, *v);
}

inline void dot_nodes(std::string& out, const UnifiedGraph& g, char prefix, const DotInput& in, bool reactant,
                      std::string_view indent) {
  for (NodeIndex v = 0; v < g.size(); ++v) {
    const auto& n = g.node(v);
    const auto color = reactant ? reactant_color(in, v) : product_color(in, v);
    out += std::string(indent) + prefix + std::to_string(n.global_id) + " [label=\"" + std::to_string(n.source_id) +
           "\", fillcolor=\"" + std::string(color) + "\", tooltip=\"molecule " + std::to_string(n.component) +
           ", type " + std::to_string(n.type) + "\"];\n";
  }
  for (const auto& [a, b] : g.edges()) {
    out += std::string(indent) + prefix + std::to_string(a + 1) + " -- " + prefix + std::to_string(b + 1) + ";\n";
  }
}

}  // namespace detail

/// DOT text for one stage. Node labels are source atom ids.
inline std::string export_dot(const DotInput& in, DotStage stage) {
  const bool need_reac = stage != DotStage::Products;
  const bool need_prod = stage != DotStage::Reactants;
  if ((need_reac && !in.reactants) || (need_prod && !in.products) || (stage == DotStage::Mapped && !in.mapping)) {
    fail(ErrorKind::InvalidConfig, "pipeline state for stage '" + std::string(to_string(stage)) + "' is not available");
  }
  std::string out = "graph " + std::string(to_string(stage)) + " {\n";
  out += "  node [shape=circle, style=filled, fontcolor=white];\n";
  switch (stage) {
    case DotStage::Reactants:
      detail::dot_nodes(out, *in.reactants, 'r', in, true, "  ");
      break;
    case DotStage::Products:
      detail::dot_nodes(out, *in.products, 'p', in, false, "  ");
      break;
    case DotStage::Mapped:
      out += "  subgraph cluster_reactants {\n    label=\"reactants\";\n";
      detail::dot_nodes(out, *in.reactants, 'r', in, true, "    ");
      out += "  }\n  subgraph cluster_products {\n    label=\"products\";\n";
      detail::dot_nodes(out, *in.products, 'p', in, false, "    ");
      out += "  }\n";
      for (const auto& pair : in.mapping->pairs()) {
        out += "  r" + std::to_string(pair.reactant + 1) + " -- p" + std::to_string(pair.product + 1) +
               " [style=dashed, color=gray, constraint=false];\n";
      }
      break;
  }
  out += "}\n";
  return out;
}

}  // namespace templater
