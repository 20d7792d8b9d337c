#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace templater;

namespace {

const std::map<int, double> kMasses{{1, 12.011}, {2, 1.008}};

SystemTopology path_molecule(int n) {
  std::vector<std::pair<AtomId, AtomId>> bonds;
  for (int i = 1; i < n; ++i) bonds.emplace_back(i, i + 1);
  auto t = support::molecule(std::vector<int>(static_cast<std::size_t>(n), 1), bonds, kMasses);
  support::add_derived_interactions(t);
  return t;
}

std::vector<support::Reaction> fixtures() {
  return {support::poly_addition(), support::poly_condensation(), support::chain_polymerization()};
}

}  // namespace

TEST(Prune, EndOfPathWithCutoffFour) {
  const auto g = support::graph_of(path_molecule(10));
  const std::vector<NodeIndex> site{0};
  const auto kept = prune_to_cutoff(g, site, 4);
  EXPECT_EQ(kept, (std::vector<NodeIndex>{0, 1, 2, 3, 4}));
  EXPECT_EQ(mark_edge_atoms(kept, g), (std::vector<NodeIndex>{4}));
}

TEST(Prune, AlwaysKeptAtomsIgnoreDistance) {
  const auto g = support::graph_of(path_molecule(10));
  const std::vector<NodeIndex> site{0}, always{9};
  EXPECT_EQ(prune_to_cutoff(g, site, 1, always), (std::vector<NodeIndex>{0, 1, 9}));
}

TEST(Prune, RejectsNonPositiveCutoff) {
  const auto g = support::graph_of(path_molecule(3));
  const std::vector<NodeIndex> site{0};
  EXPECT_THROW(prune_to_cutoff(g, site, 0), Error);
}

TEST(EdgeAtoms, WholeMoleculeHasNone) {
  const auto g = support::graph_of(path_molecule(6));
  const std::vector<NodeIndex> all{0, 1, 2, 3, 4, 5};
  EXPECT_TRUE(mark_edge_atoms(all, g).empty());
}

TEST(CarryFeatures, WholeMoleculeKeepsEverything) {
  const std::vector<SystemTopology> topo{path_molecule(6)};
  const auto g = build_unified_graph(topo, Side::Reactant);
  const std::vector<NodeIndex> all{0, 1, 2, 3, 4, 5};
  const auto t = carry_features(all, g, topo);
  EXPECT_EQ(t.atoms.size(), 6u);
  EXPECT_EQ(t.bonds, topo[0].bonds);
  EXPECT_EQ(t.angles, topo[0].angles);
  EXPECT_EQ(t.dihedrals, topo[0].dihedrals);
}

TEST(CarryFeatures, PartialInteractionsAreDropped) {
  const std::vector<SystemTopology> topo{path_molecule(6)};
  const auto g = build_unified_graph(topo, Side::Reactant);
  const std::vector<NodeIndex> kept{2, 3, 4};
  const auto t = carry_features(kept, g, topo);
  EXPECT_EQ(t.bonds, (std::vector<Bond>{{1, {1, 2}}, {1, {2, 3}}}));
  EXPECT_EQ(t.angles, (std::vector<Angle>{{1, {1, 2, 3}}}));
  EXPECT_TRUE(t.dihedrals.empty());
}

TEST(CarryFeatures, CopiesOnlyInputInteractions) {
  // no angles in the input means none in the template, even though the graph has them
  const std::vector<SystemTopology> topo{support::molecule({1, 1, 1}, {{1, 2}, {2, 3}}, kMasses, {0.1, -0.2, 0.1})};
  const auto g = build_unified_graph(topo, Side::Reactant);
  const std::vector<NodeIndex> all{0, 1, 2};
  const auto t = carry_features(all, g, topo);
  EXPECT_TRUE(t.angles.empty());
  EXPECT_DOUBLE_EQ(t.atoms[1].charge, -0.2);
  EXPECT_DOUBLE_EQ(t.atoms[2].position.x, 3.0);
}

TEST(Assemble, InconsistentPostSetIsRejected) {
  const auto rx = support::poly_addition();
  const auto r = run_pipeline(rx.reactants, rx.products);
  auto post = r.templates.post_nodes;
  post.pop_back();
  try {
    assemble_templates(r.mapping, r.report, r.templates.pre_nodes, post, r.reactants, r.products, rx.reactants,
                       rx.products, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentPruning);
  }
}

TEST(Assemble, FixtureTemplates) {
  const struct {
    support::Reaction rx;
    std::size_t pre, post, deleted, created;
  } cases[] = {{support::poly_addition(), 22, 22, 0, 0},
               {support::poly_condensation(), 32, 29, 3, 0},
               {support::chain_polymerization(), 24, 26, 0, 2}};
  for (const auto& c : cases) {
    const auto r = run_pipeline(c.rx.reactants, c.rx.products);
    const auto& map = r.templates.map;
    EXPECT_EQ(r.templates.pre.atoms.size(), c.pre);
    EXPECT_EQ(r.templates.post.atoms.size(), c.post);
    EXPECT_EQ(map.delete_ids.size(), c.deleted);
    EXPECT_EQ(map.create_ids.size(), c.created);
    EXPECT_EQ(map.equivalences.size(), c.pre - c.deleted);
    EXPECT_EQ(map.equivalences.size(), c.post - c.created);
  }
}

TEST(Assemble, ChainPolymerizationKeepsEveryInteraction) {
  const auto rx = support::chain_polymerization();
  const auto r = run_pipeline(rx.reactants, rx.products);
  std::size_t bonds = 0, angles = 0, dihedrals = 0;
  for (const auto& t : rx.reactants) {
    bonds += t.bonds.size();
    angles += t.angles.size();
    dihedrals += t.dihedrals.size();
  }
  EXPECT_EQ(r.templates.pre.bonds.size(), bonds);
  EXPECT_EQ(r.templates.pre.angles.size(), angles);
  EXPECT_EQ(r.templates.pre.dihedrals.size(), dihedrals);
  EXPECT_EQ(r.templates.post.bonds.size(), rx.products[0].bonds.size());
  EXPECT_TRUE(r.templates.map.edge_ids.empty());
}

TEST(Assemble, SpliceConsistencyAndInitiatorsInside) {
  for (const auto& rx : fixtures()) {
    const auto r = run_pipeline(rx.reactants, rx.products);
    std::set<NodeIndex> expected(r.report.created.begin(), r.report.created.end());
    for (const auto v : r.templates.pre_nodes) {
      if (const auto p = r.mapping.image(v)) expected.insert(*p);
    }
    EXPECT_EQ(std::vector<NodeIndex>(expected.begin(), expected.end()), r.templates.post_nodes);
    for (const auto v : r.report.initiators) {
      EXPECT_TRUE(std::binary_search(r.templates.pre_nodes.begin(), r.templates.pre_nodes.end(), v));
    }
  }
}

TEST(Assemble, LargerCutoffNeverDropsAtoms) {
  for (const auto& rx : fixtures()) {
    std::vector<NodeIndex> previous;
    for (int cutoff = 1; cutoff <= 8; ++cutoff) {
      PipelineOptions o;
      o.cutoff = cutoff;
      const auto r = run_pipeline(rx.reactants, rx.products, o);
      EXPECT_TRUE(std::includes(r.templates.pre_nodes.begin(), r.templates.pre_nodes.end(), previous.begin(),
                                previous.end()));
      previous = r.templates.pre_nodes;
    }
  }
}

TEST(Assemble, RerunOnTemplatesReproducesTheMap) {
  const auto all = fixtures();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& rx = all[i];
    const auto first = run_pipeline(rx.reactants, rx.products);
    const auto pre = template_to_topologies(first.templates.pre, mass_table(first.reactants));
    const auto post = template_to_topologies(first.templates.post, mass_table(first.products));
    const auto second = run_pipeline(pre, post);
    auto a = first.templates.map.equivalences;
    auto b = second.templates.map.equivalences;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    // Truncation moves centrality. In the urethane case the isocyanate C and N swap
    // rank, so there only the reacting site is compared.
    std::set<AtomId> changed;
    for (const auto& d : second.report.pairs) {
      if (!d.delta_e.empty()) changed.insert(second.reactants.node(d.reactant).source_id);
    }
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_TRUE(changed.contains(first.templates.map.initiators[k])) << "fixture " << i;
      EXPECT_TRUE(changed.contains(second.templates.map.initiators[k])) << "fixture " << i;
    }
    if (i != 0) {
      EXPECT_EQ(first.templates.map.initiators, second.templates.map.initiators) << "fixture " << i;
    }
    EXPECT_EQ(first.templates.map.delete_ids, second.templates.map.delete_ids);
    EXPECT_EQ(first.templates.map.create_ids, second.templates.map.create_ids);
  }
}

TEST(TemplateToTopologies, SplitsIntoFragments) {
  MoleculeTemplateFile t;
  t.atoms = {{1, 0, {}}, {1, 0, {}}, {2, 0, {}}};
  t.bonds = {{1, {1, 2}}};
  const auto parts = template_to_topologies(t, kMasses);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].atoms.size(), 2u);
  EXPECT_EQ(parts[1].atoms[0].id, 3);
  EXPECT_THROW(template_to_topologies(t, {{1, 12.011}}), Error);
}
