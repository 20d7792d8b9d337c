#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "templater/error.hpp"
#include "templater/graph.hpp"

namespace templater {

enum class Provenance { Conserved, Similarity, PathRefined, HydrogenSwapped };

constexpr std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::Conserved: return "conserved";
    case Provenance::Similarity: return "similarity";
    case Provenance::PathRefined: return "path-refined";
    case Provenance::HydrogenSwapped: return "hydrogen-swapped";
  }
  return "unknown";
}

struct MappedPair {
  NodeIndex reactant = 0;
  NodeIndex product = 0;
  Provenance provenance = Provenance::Conserved;
  /// Conserved-search iteration (1-based) for conserved pairs, 0 otherwise.
  int iteration = 0;
  bool operator==(const MappedPair&) const = default;
};

/// Partial injection from reactant nodes to product nodes. Both directions
/// are stored so that image and preimage lookups are O(1).
class AtomMapping {
 public:
  AtomMapping() = default;
  AtomMapping(std::size_t reactant_count, std::size_t product_count)
      : forward_(reactant_count), backward_(product_count) {}

  std::size_t reactant_count() const noexcept { return forward_.size(); }
  std::size_t product_count() const noexcept { return backward_.size(); }
  std::size_t size() const noexcept { return size_; }

  /// Adds r -> p. Both nodes must currently be unmapped.
  void map(NodeIndex r, NodeIndex p, Provenance provenance, int iteration = 0) {
    if (forward_.at(r) || backward_.at(p)) {
      fail(ErrorKind::InvalidTemplate, "mapping would not be injective at reactant node " + std::to_string(r + 1) +
                                           " / product node " + std::to_string(p + 1));
    }
    forward_[r] = Entry{p, provenance, iteration};
    backward_[p] = r;
    ++size_;
  }

  void unmap(NodeIndex r) {
    if (const auto& e = forward_.at(r)) {
      backward_[e->partner] = std::nullopt;
      forward_[r] = std::nullopt;
      --size_;
    }
  }

  std::optional<NodeIndex> image(NodeIndex r) const {
    if (const auto& e = forward_.at(r)) return e->partner;
    return std::nullopt;
  }

  std::optional<NodeIndex> preimage(NodeIndex p) const { return backward_.at(p); }

  std::optional<Provenance> provenance(NodeIndex r) const {
    if (const auto& e = forward_.at(r)) return e->provenance;
    return std::nullopt;
  }

  bool is_conserved(NodeIndex r) const { return provenance(r) == Provenance::Conserved; }

  /// Pairs in ascending reactant order.
  std::vector<MappedPair> pairs() const {
    std::vector<MappedPair> out;
    out.reserve(size_);
    for (NodeIndex r = 0; r < forward_.size(); ++r) {
      if (const auto& e = forward_[r]) out.push_back({r, e->partner, e->provenance, e->iteration});
    }
    return out;
  }

  std::vector<NodeIndex> unmapped_reactants() const {
    std::vector<NodeIndex> out;
    for (NodeIndex r = 0; r < forward_.size(); ++r) {
      if (!forward_[r]) out.push_back(r);
    }
    return out;
  }

  std::vector<NodeIndex> unmapped_products() const {
    std::vector<NodeIndex> out;
    for (NodeIndex p = 0; p < backward_.size(); ++p) {
      if (!backward_[p]) out.push_back(p);
    }
    return out;
  }

  std::size_t count(Provenance p) const {
    std::size_t n = 0;
    for (const auto& e : forward_) n += (e && e->provenance == p) ? 1 : 0;
    return n;
  }

  bool operator==(const AtomMapping&) const = default;

 private:
  struct Entry {
    NodeIndex partner;
    Provenance provenance;
    int iteration;
    bool operator==(const Entry&) const = default;
  };
  std::vector<std::optional<Entry>> forward_;
  std::vector<std::optional<NodeIndex>> backward_;
  std::size_t size_ = 0;
};

/// Number of reactant edges (a, b) with both ends mapped whose images are
/// bonded in the product graph.
inline std::size_t preserved_edge_count(const AtomMapping& m, const UnifiedGraph& reac, const UnifiedGraph& prod) {
  std::size_t n = 0;
  for (const auto& [a, b] : reac.edges()) {
    const auto fa = m.image(a);
    const auto fb = m.image(b);
    if (fa && fb && prod.adjacent(*fa, *fb)) ++n;
  }
  return n;
}

}  // namespace templater
