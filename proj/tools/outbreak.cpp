// Command-line entry point: `outbreak run` drives the pipeline, `outbreak
// synth` writes the synthetic mini-region inputs.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "outbreak/pipeline.hpp"
#include "outbreak/synth.hpp"

namespace {

using nlohmann::json;
namespace pl = outbreak::pipeline;

void report_error(const std::string& stage, const std::string& kind, const std::string& message) {
  json e = {{"event", "error"}, {"kind", kind}, {"message", message}};
  if (!stage.empty()) e["stage"] = stage;
  std::cerr << e.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"District-level outbreak analysis pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string stage = "all";
  bool force = false;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run pipeline stages from a JSON config");
  run->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--stage", stage, "all, ingest, weights, esda, features, train or importance");
  run->add_flag("--force", force, "Re-run stages even when the manifest says they are current");
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--threads", threads, "Worker threads (default: hardware concurrency)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "Suppress JSON-lines progress events");

  std::string synth_out;
  outbreak::synth::MiniRegionSpec spec;
  auto* synth = app.add_subcommand("synth", "Write the synthetic mini-region input set");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--cols", spec.cols, "Districts per row");
  synth->add_option("--rows", spec.rows, "District rows");
  synth->add_option("--weeks", spec.n_weeks, "Panel length in weeks");
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--disease", spec.disease, "Disease name of the planted outbreak");

  CLI11_PARSE(app, argc, argv);

  if (*synth) {
    try {
      const auto path = outbreak::synth::write_mini_region(synth_out, spec);
      std::cout << path.string() << '\n';
      return 0;
    } catch (const std::exception& e) {
      report_error("", "synth", e.what());
      return 1;
    }
  }

  pl::PipelineConfig config;
  try {
    config = pl::load_config(config_path);
  } catch (const std::exception& e) {
    report_error("", "config", e.what());
    return 2;
  }
  pl::RunOptions options;
  options.force = force;
  options.seed = seed;
  options.threads = threads;
  options.log = quiet ? nullptr : &std::cerr;
  try {
    const auto outcomes = pl::run(std::move(config), stage, options);
    json summary = json::array();
    for (const auto& o : outcomes) {
      summary.push_back({{"stage", pl::to_string(o.stage)},
                         {"skipped", o.skipped},
                         {"outputs", o.outputs},
                         {"warnings", o.warnings.size()}});
    }
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const pl::StageError& e) {
    report_error(e.stage(), e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("", "error", e.what());
    return 1;
  }
}
