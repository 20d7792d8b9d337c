#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace templater;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("templater_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

std::string fixture(const std::string& dir, const std::string& file) { return (support::kFixtures / dir / file).string(); }

// Runs the CLI with stderr captured; returns the exit status.
int cli(const std::string& args, std::string* stderr_text = nullptr, std::string* stdout_text = nullptr) {
  const auto err = scratch("stderr.txt");
  const auto out = scratch("stdout.txt");
  const std::string command = std::string(TEMPLATER_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(command.c_str());
  if (stderr_text) *stderr_text = read_file(err);
  if (stdout_text) *stdout_text = read_file(out);
  fs::remove(err);
  fs::remove(out);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string condensation_args() {
  return "--reactants " + fixture("poly_condensation", "ht.data") + " " + fixture("poly_condensation", "mpd.data") +
         " --products " + fixture("poly_condensation", "product.data");
}

}  // namespace

TEST(Pipeline, PrepareNormalizesWeights) {
  RunConfig cfg;
  cfg.reactants = {"a"};
  cfg.products = {"b"};
  cfg.out_dir = "out";
  cfg.options.weights = {2, 1, 1};
  const auto notes = prepare(cfg);
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_DOUBLE_EQ(cfg.options.weights.alpha, 0.5);
  cfg.options.cutoff = 0;
  EXPECT_THROW(prepare(cfg), Error);
}

TEST(Pipeline, NotesRecordEveryKnob) {
  const auto rx = support::chain_polymerization();
  const auto r = run_pipeline(rx.reactants, rx.products);
  std::set<std::string> keys;
  for (const auto& [k, v] : r.notes) keys.insert(k);
  for (const char* key : {"weights", "conserved_per_iteration", "search_expansions", "cost_normalization",
                          "assignment_tie_break", "hydrogen_swaps", "cutoff", "template_count_convention"}) {
    EXPECT_TRUE(keys.contains(key)) << key;
  }
}

TEST(Pipeline, RunWritesAllArtifacts) {
  const auto out = scratch("run");
  RunConfig cfg;
  cfg.reactants = {fixture("poly_condensation", "ht.data"), fixture("poly_condensation", "mpd.data")};
  cfg.products = {fixture("poly_condensation", "product.data")};
  cfg.out_dir = out;
  cfg.export_dot = true;
  cfg.export_similarity_csv = true;
  const auto summary = run(cfg);
  for (const char* name : {"pre.template", "post.template", "reaction.map", "report.txt", "report.kv",
                           "reactants.dot", "products.dot", "mapped.dot", "similarity.csv"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
  }
  const auto map = parse_map_file(read_file(out / "reaction.map"));
  EXPECT_EQ(map.delete_ids.size(), 3u);
  const auto pre = parse_molecule_template(read_file(out / "pre.template"));
  EXPECT_EQ(pre, summary.result.templates.pre);
  for (const auto& entry : fs::directory_iterator(out)) EXPECT_NE(entry.path().extension(), ".tmp");
  fs::remove_all(out);
}

TEST(Dot, MappedStageColors) {
  const auto rx = support::poly_addition();
  const auto r = run_pipeline(rx.reactants, rx.products);
  const auto dot = export_dot({&r.reactants, &r.products, &r.mapping, &r.report}, DotStage::Mapped);
  EXPECT_EQ(dot.rfind("graph mapped {", 0), 0u);
  EXPECT_NE(dot.find("fillcolor=\"black\""), std::string::npos);
  EXPECT_NE(dot.find("fillcolor=\"red\""), std::string::npos);
  EXPECT_NE(dot.find("fillcolor=\"orange\""), std::string::npos);
  EXPECT_EQ(dot.find("fillcolor=\"green\""), std::string::npos);
  std::size_t dashed = 0;
  for (auto at = dot.find("style=dashed"); at != std::string::npos; at = dot.find("style=dashed", at + 1)) ++dashed;
  EXPECT_EQ(dashed, r.mapping.size());
}

TEST(Dot, HydrogenReactants) {
  const auto h2 = support::graph_of(support::molecule({1, 1}, {{1, 2}}, {{1, 1.008}}));
  const auto dot = export_dot({&h2, nullptr, nullptr, nullptr}, DotStage::Reactants);
  EXPECT_NE(dot.find("r1 [label=\"1\""), std::string::npos);
  EXPECT_NE(dot.find("r2 [label=\"2\""), std::string::npos);
  EXPECT_NE(dot.find("r1 -- r2;"), std::string::npos);
  EXPECT_THROW(export_dot({&h2, nullptr, nullptr, nullptr}, DotStage::Mapped), Error);
}

TEST(Dot, UnknownStage) {
  try {
    parse_stage("foo");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownStage);
  }
}

TEST(Cli, CondensationRun) {
  const auto out = scratch("cli_run");
  EXPECT_EQ(cli("run " + condensation_args() + " --out " + out.string()), 0);
  const auto map = read_file(out / "reaction.map");
  EXPECT_NE(map.find("3 deleteIDs"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "report.kv"));
  fs::remove_all(out);
}

TEST(Cli, UnreadableInputLeavesNothing) {
  const auto out = scratch("cli_io");
  std::string err;
  const int code = cli("run --reactants /nonexistent/a.data --products /nonexistent/b.data --out " + out.string(), &err);
  EXPECT_EQ(code, exit_code(ErrorKind::Io));
  EXPECT_EQ(err.rfind("error: IoError: ", 0), 0u) << err;
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, IdenticalSidesExitWithNoReaction) {
  const auto out = scratch("cli_same");
  const auto r = fixture("poly_addition", "product.data");
  std::string err;
  EXPECT_EQ(cli("run --reactants " + r + " --products " + r + " --out " + out.string(), &err),
            exit_code(ErrorKind::NoReactionDetected));
  EXPECT_NE(err.find("NoReactionDetected"), std::string::npos);
  EXPECT_FALSE(fs::exists(out / "reaction.map"));
  fs::remove_all(out);
}

TEST(Cli, UnknownStageExitCode) {
  std::string err;
  EXPECT_EQ(cli("export-dot " + condensation_args() + " --stage foo", &err), exit_code(ErrorKind::UnknownStage));
}

TEST(Cli, BadWeightsAndUsage) {
  EXPECT_EQ(cli("run " + condensation_args() + " --alpha -1 --out " + scratch("cli_w").string()),
            exit_code(ErrorKind::InvalidConfig));
  EXPECT_EQ(cli("run --products x"), 2);
  EXPECT_EQ(cli("--help"), 0);
}

TEST(Cli, DotToStdout) {
  std::string out;
  EXPECT_EQ(cli("export-dot " + condensation_args() + " --stage mapped", nullptr, &out), 0);
  EXPECT_EQ(out.rfind("graph mapped {", 0), 0u);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto dir = scratch("cli_cfg");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.ini");
    cfg << "[run]\ncutoff=2\nout=" << (dir / "from_file").string() << "\n";
  }
  EXPECT_EQ(cli("--config " + (dir / "run.ini").string() + " run " + condensation_args() + " --cutoff 3"), 0);
  const auto kv = read_file(dir / "from_file" / "report.kv");
  EXPECT_NE(kv.find("cutoff = 3\n"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const auto a = scratch("cli_det_a");
  const auto b = scratch("cli_det_b");
  const std::string flags = " --export-dot --export-similarity-csv";
  ASSERT_EQ(cli("run " + condensation_args() + flags + " --out " + a.string()), 0);
  ASSERT_EQ(cli("run " + condensation_args() + flags + " --out " + b.string()), 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(read_file(entry.path()), read_file(b / entry.path().filename())) << entry.path();
    ++compared;
  }
  EXPECT_EQ(compared, 9u);
  fs::remove_all(a);
  fs::remove_all(b);
}
