#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "templater/templater.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("templater");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("TEMPLATER_LOG_LEVEL")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to "off"; only accept that when asked for.
    if (parsed != spdlog::level::off || std::string(level) == "off") {
      spdlog::set_level(parsed);
    } else {
      spdlog::warn("ignoring unknown TEMPLATER_LOG_LEVEL '{}'", level);
    }
  }
}

void add_pipeline_options(CLI::App& cmd, templater::RunConfig& cfg) {
  auto& o = cfg.options;
  cmd.add_option("--reactants", cfg.reactants, "reactant data files, one per molecule")->required()->expected(1, -1);
  cmd.add_option("--products", cfg.products, "product data files, one per molecule")->required()->expected(1, -1);
  cmd.add_option("--alpha", o.weights.alpha, "type-match weight")->capture_default_str();
  cmd.add_option("--beta", o.weights.beta, "mass-match weight")->capture_default_str();
  cmd.add_option("--gamma", o.weights.gamma, "neighborhood weight")->capture_default_str();
  cmd.add_option("--cutoff", o.cutoff, "template radius in bonds")->capture_default_str();
  cmd.add_option("--iterations", o.iterations, "conserved-region search iterations")->capture_default_str();
  cmd.add_option("--budget", o.budget, "search expansions allowed for the conserved-region search")
      ->capture_default_str();
  cmd.add_option("--hydrogen-tolerance", o.hydrogen_tolerance, "amu window around 1.008 for hydrogen-like atoms")
      ->capture_default_str();
  cmd.add_option("--centrality-weight", o.centrality_weight, "weight of the centrality change in initiator scores")
      ->capture_default_str();
}

void log_result(const templater::PipelineResult& r) {
  for (const auto& [key, value] : r.notes) spdlog::info("{}: {}", key, value);
}

int run_command(templater::RunConfig cfg) {
  const auto summary = templater::run(std::move(cfg));
  for (const auto& note : summary.adjustments) spdlog::warn("{}", note);
  log_result(summary.result);
  for (const auto& path : summary.written) spdlog::info("wrote {}", path);
  return 0;
}

int export_dot_command(templater::RunConfig cfg, const std::string& stage_name, const std::string& out) {
  using namespace templater;
  const auto stage = parse_stage(stage_name);
  cfg.out_dir = out.empty() ? std::filesystem::path(".") : std::filesystem::path(out).parent_path();
  if (cfg.out_dir.empty()) cfg.out_dir = ".";
  for (const auto& note : prepare(cfg)) spdlog::warn("{}", note);

  std::vector<SystemTopology> reac, prod;
  for (const auto& path : cfg.reactants) reac.push_back(load_data_file(path));
  for (const auto& path : cfg.products) prod.push_back(load_data_file(path));

  std::string dot;
  try {
    const auto result = run_pipeline(reac, prod, cfg.options);
    log_result(result);
    dot = export_dot({&result.reactants, &result.products, &result.mapping, &result.report}, stage);
  } catch (const Error& e) {
    if (stage == DotStage::Mapped) throw;
    // The plain graphs are still worth drawing without a mapping.
    spdlog::warn("no mapping available ({}: {}); exporting the bare graph", to_string(e.kind()), e.what());
    const auto g_reac = build_unified_graph(reac, Side::Reactant);
    const auto g_prod = build_unified_graph(prod, Side::Product);
    dot = export_dot({&g_reac, &g_prod, nullptr, nullptr}, stage);
  }
  if (out.empty()) {
    std::cout << dot;
  } else {
    write_outputs_atomically(cfg.out_dir, {{std::filesystem::path(out).filename().string(), dot}});
    spdlog::info("wrote {}", out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Generates fix bond/react pre/post templates and map files from LAMMPS data files"};
  app.set_config("--config", "", "INI/TOML file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  templater::RunConfig run_cfg;
  auto* run = app.add_subcommand("run", "map reactants onto products and write templates");
  add_pipeline_options(*run, run_cfg);
  run->add_option("--out", run_cfg.out_dir, "output directory")->required();
  run->add_flag("--export-dot", run_cfg.export_dot, "also write reactants/products/mapped DOT graphs");
  run->add_flag("--export-similarity-csv", run_cfg.export_similarity_csv, "also write the similarity matrix");
  bool no_report = false;
  run->add_flag("--no-report", no_report, "skip report.txt and report.kv");

  templater::RunConfig dot_cfg;
  std::string stage;
  std::string dot_out;
  auto* dot = app.add_subcommand("export-dot", "write one DOT view of the mapping");
  add_pipeline_options(*dot, dot_cfg);
  dot->add_option("--stage", stage, "reactants, products or mapped")->required();
  dot->add_option("--out", dot_out, "output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      run_cfg.write_report = !no_report;
      return run_command(std::move(run_cfg));
    }
    return export_dot_command(std::move(dot_cfg), stage, dot_out);
  } catch (const templater::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(templater::to_string(e.kind())).c_str(), e.what());
    return templater::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: Internal: %s\n", e.what());
    return 1;
  }
}
