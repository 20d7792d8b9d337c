#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "templater/conserved_mapping.hpp"
#include "templater/dot.hpp"
#include "templater/error.hpp"
#include "templater/graph.hpp"
#include "templater/lammps_io.hpp"
#include "templater/mapping.hpp"
#include "templater/reaction_analysis.hpp"
#include "templater/similarity.hpp"
#include "templater/template_builder.hpp"
#include "templater/text.hpp"

namespace templater {

struct PipelineOptions {
  ScoringWeights weights;
  int iterations = 2;
  int cutoff = 4;
  std::size_t budget = 10'000'000;
  double hydrogen_tolerance = 0.01;
  double centrality_weight = 1.0;
};

struct RunConfig {
  std::vector<std::filesystem::path> reactants;
  std::vector<std::filesystem::path> products;
  std::filesystem::path out_dir;
  PipelineOptions options;
  bool export_dot = false;
  bool export_similarity_csv = false;
  bool write_report = true;
};

/// Checks a configuration and normalizes its weights in place. Returns
/// human-readable notes about anything that was adjusted.
inline std::vector<std::string> prepare(RunConfig& cfg) {
  std::vector<std::string> notes;
  if (cfg.reactants.empty()) fail(ErrorKind::InvalidConfig, "at least one reactant file is required");
  if (cfg.products.empty()) fail(ErrorKind::InvalidConfig, "at least one product file is required");
  if (cfg.out_dir.empty()) fail(ErrorKind::InvalidConfig, "an output directory is required");
  auto& o = cfg.options;
  if (o.iterations < 1) fail(ErrorKind::InvalidConfig, "iterations must be at least 1");
  if (o.cutoff < 1) fail(ErrorKind::InvalidConfig, "cutoff must be at least 1");
  if (o.budget == 0) fail(ErrorKind::InvalidConfig, "search budget must be positive");
  if (!(o.hydrogen_tolerance >= 0)) fail(ErrorKind::InvalidConfig, "hydrogen tolerance must be non-negative");
  if (!(o.centrality_weight >= 0)) fail(ErrorKind::InvalidConfig, "centrality weight must be non-negative");
  const auto before = o.weights;
  if (normalize(o.weights)) {
    notes.push_back("weights rescaled to sum 1: alpha " + text::fixed6(before.alpha) + " -> " +
                    text::fixed6(o.weights.alpha) + ", beta " + text::fixed6(before.beta) + " -> " +
                    text::fixed6(o.weights.beta) + ", gamma " + text::fixed6(before.gamma) + " -> " +
                    text::fixed6(o.weights.gamma));
  }
  return notes;
}

struct PipelineResult {
  UnifiedGraph reactants;
  UnifiedGraph products;
  ConservedResult conserved;
  SimilarityMatrix similarity;
  CostMatrix cost;
  Assignment assignment;
  RefineStats path_refinement;
  RefineStats hydrogen_swaps;
  AtomMapping mapping;
  ReactionReport report;
  ReactionTemplates templates;
  /// Every decision knob and what it did, in order.
  std::vector<std::pair<std::string, std::string>> notes;
};

/// The whole mapping and templating pipeline, in memory.
inline PipelineResult run_pipeline(std::span<const SystemTopology> reac_topos, std::span<const SystemTopology> prod_topos,
                                   const PipelineOptions& options = {}) {
  PipelineResult r;
  auto weights = options.weights;
  normalize(weights);
  r.reactants = build_unified_graph(reac_topos, Side::Reactant);
  r.products = build_unified_graph(prod_topos, Side::Product);

  r.conserved = iterate_conserved(r.reactants, r.products, options.iterations, {options.budget});
  r.mapping = r.conserved.mapping;

  r.similarity = build_similarity_matrix(r.mapping, r.reactants, r.products, weights);
  r.cost = build_cost_matrix(r.similarity);
  r.assignment = solve_assignment(r.cost);
  for (const auto& [i, j] : r.assignment.pairs) {
    r.mapping.map(r.similarity.rows[i], r.similarity.cols[j], Provenance::Similarity);
  }
  r.path_refinement = refine_symmetric_paths(r.mapping, r.reactants, r.products, weights, options.hydrogen_tolerance);
  r.hydrogen_swaps = swap_hydrogens(r.mapping, r.reactants, r.products, options.hydrogen_tolerance);

  r.report = analyze_reaction(r.mapping, r.reactants, r.products, {options.centrality_weight});

  const auto required = required_reactant_atoms(r.report);
  const auto pre = prune_to_cutoff(r.reactants, r.report.initiators, options.cutoff, required);
  const auto post = post_nodes_for(pre, r.mapping, r.report);
  r.templates = assemble_templates(r.mapping, r.report, pre, post, r.reactants, r.products, reac_topos, prod_topos,
                                   options.cutoff);

  auto& n = r.notes;
  n.emplace_back("weights", text::fixed6(weights.alpha) + " " + text::fixed6(weights.beta) + " " +
                                text::fixed6(weights.gamma));
  std::string sizes;
  for (const auto s : r.conserved.iteration_sizes) sizes += (sizes.empty() ? "" : " ") + std::to_string(s);
  n.emplace_back("conserved_iterations", std::to_string(options.iterations));
  n.emplace_back("conserved_per_iteration", sizes);
  n.emplace_back("search_expansions", std::to_string(r.conserved.expansions) + " of " + std::to_string(options.budget));
  n.emplace_back("cost_normalization", r.cost.method + " offset " + text::fixed6(r.cost.offset) + " scale " +
                                           text::fixed6(r.cost.scale));
  n.emplace_back("assignment_tie_break", "lexicographic (row, column)");
  n.emplace_back("assignment_cost", text::fixed6(r.assignment.cost));
  n.emplace_back("path_refinement_moves", std::to_string(r.path_refinement.moves));
  n.emplace_back("hydrogen_swaps", std::to_string(r.hydrogen_swaps.moves));
  n.emplace_back("hydrogen_tolerance", text::fixed6(options.hydrogen_tolerance));
  n.emplace_back("centrality_weight", text::fixed6(options.centrality_weight));
  n.emplace_back("cutoff", std::to_string(options.cutoff));
  n.emplace_back("pre_template_atoms", std::to_string(r.templates.pre_nodes.size()));
  n.emplace_back("post_template_atoms", std::to_string(r.templates.post_nodes.size()));
  n.emplace_back("template_count_convention", "pre-template includes deleted atoms, post-template includes created atoms");
  return r;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "error while reading " + path.string());
  return buffer.str();
}

inline SystemTopology load_data_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return parse_data_file(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

/// File name -> contents for everything a run produces.
inline std::map<std::string, std::string> render_outputs(const RunConfig& cfg, const PipelineResult& r) {
  std::map<std::string, std::string> files;
  files["pre.template"] = write_molecule_template(r.templates.pre);
  files["post.template"] = write_molecule_template(r.templates.post);
  files["reaction.map"] = write_map_file(r.templates.map);
  if (cfg.write_report) {
    files["report.txt"] = report_text(r.report, r.reactants, r.products);
    files["report.kv"] = report_key_values(r.report, r.reactants, r.products, r.notes);
  }
  if (cfg.export_dot) {
    const DotInput in{&r.reactants, &r.products, &r.mapping, &r.report};
    for (const auto stage : {DotStage::Reactants, DotStage::Products, DotStage::Mapped}) {
      files[std::string(to_string(stage)) + ".dot"] = export_dot(in, stage);
    }
  }
  if (cfg.export_similarity_csv) files["similarity.csv"] = similarity_csv(r.similarity, r.reactants, r.products);
  return files;
}

/// Writes every file to a temporary name first and renames only once all of
/// them are on disk, so a failure leaves no half-written output behind.
inline void write_outputs_atomically(const std::filesystem::path& dir, const std::map<std::string, std::string>& files) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged;
  const auto cleanup = [&] {
    for (const auto& [tmp, final_path] : staged) std::filesystem::remove(tmp, ec);
  };
  for (const auto& [name, content] : files) {
    const auto final_path = dir / name;
    auto tmp = final_path;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) {
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.close();
    }
    staged.emplace_back(tmp, final_path);
    if (!out) {
      cleanup();
      fail(ErrorKind::Io, "cannot write " + tmp.string());
    }
  }
  for (const auto& [tmp, final_path] : staged) {
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) {
      cleanup();
      fail(ErrorKind::Io, "cannot move " + tmp.string() + " into place: " + ec.message());
    }
  }
}

struct RunSummary {
  PipelineResult result;
  std::vector<std::string> adjustments;
  std::vector<std::string> written;
};

/// Loads inputs, runs the pipeline and writes all artifacts.
inline RunSummary run(RunConfig cfg) {
  auto adjustments = prepare(cfg);
  std::vector<SystemTopology> reac, prod;
  for (const auto& path : cfg.reactants) reac.push_back(load_data_file(path));
  for (const auto& path : cfg.products) prod.push_back(load_data_file(path));
  RunSummary summary{run_pipeline(reac, prod, cfg.options), std::move(adjustments), {}};
  const auto files = render_outputs(cfg, summary.result);
  write_outputs_atomically(cfg.out_dir, files);
  for (const auto& [name, content] : files) summary.written.push_back((cfg.out_dir / name).string());
  return summary;
}

}  // namespace templater
