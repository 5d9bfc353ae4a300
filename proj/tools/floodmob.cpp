// floodmob command-line driver.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "floodmob/error.hpp"
#include "floodmob/pipeline.hpp"
#include "floodmob/synth.hpp"

namespace fs = std::filesystem;
using namespace floodmob;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("floodmob");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("FLOODMOB_LOG")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("FLOODMOB_LOG='{}' not one of error|warn|info|debug; using info", v);
  }
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const IngestError*>(&e) || dynamic_cast<const GeometryError*>(&e)) return 3;
  if (dynamic_cast<const StatsError*>(&e)) return 4;
  if (dynamic_cast<const SynthError*>(&e)) return 5;
  return 1;
}

const char* kind_of(const std::exception& e) {
  switch (exit_code_for(e)) {
    case 2: return "config";
    case 3: return "input";
    case 4: return "stats";
    case 5: return "synth";
    default: return "internal";
  }
}

// Flag values, kept as strings so they go through the same path as config files.
struct Flags {
  std::string config;
  std::map<std::string, std::string> values;
};

void log_notes(const std::vector<std::string>& notes) {
  for (const auto& n : notes) spdlog::warn("{}", n);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Residential and mobility flood exposure from stay records and floodplain maps."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "floodmob 1.0.0");

  Flags flags;
  app.add_option("--config", flags.config, "Run configuration file (key = value lines)");
  // Every config key is also a flag; hyphen and underscore spellings both work.
  for (const auto& key : pipeline::config_keys()) {
    std::string dashed = key;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    std::string names = "--" + dashed;
    if (dashed != key) names += ",--" + key;
    app.add_option_function<std::string>(
           names, [&flags, key](const std::string& v) { flags.values[key] = v; }, "Overrides '" + key + "'")
        ->option_text(key == "residential_mode" ? "{cbg-gated,stop-gated}" : "VALUE");
  }
  app.fallthrough();

  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run every stage and write all outputs plus summary.json");
  auto* classify_cmd = app.add_subcommand("classify", "Write stays_classified.csv");
  auto* exposure_cmd = app.add_subcommand("exposure", "Write exposure.csv");
  auto* cohorts_cmd = app.add_subcommand("cohorts", "Write cohorts.csv");

  std::string exposure_csv, cohorts_csv;
  auto* disparity_cmd = app.add_subcommand("disparity", "Write disparity.csv and regression.json from exposure.csv");
  disparity_cmd->add_option("--exposure", exposure_csv, "exposure.csv to read (default: <out>/exposure.csv)");
  auto* report_cmd = app.add_subcommand("report", "Write cdf_*.csv and ttests.csv from exposure.csv and cohorts.csv");
  report_cmd->add_option("--exposure", exposure_csv, "exposure.csv to read (default: <out>/exposure.csv)");
  report_cmd->add_option("--cohorts", cohorts_csv, "cohorts.csv to read (default: <out>/cohorts.csv)");

  std::string spec_path, preset_name;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scenario and its manifest.json");
  auto* spec_opt = synth_cmd->add_option("spec", spec_path, "Scenario spec (JSON)");
  synth_cmd->add_option("--preset", preset_name, "Built-in scenario")
      ->check(CLI::IsMember(synth::preset_names()))
      ->excludes(spec_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    pipeline::RunConfig cfg;
    if (!flags.config.empty()) {
      const fs::path cfg_path(flags.config);
      pipeline::apply_settings(cfg, pipeline::read_config_file(cfg_path), cfg_path.parent_path());
    }
    pipeline::apply_settings(cfg, flags.values);
    spdlog::debug("workers={} mode={} window=[{},{})", cfg.workers, exposure::to_string(cfg.mode), cfg.window_start,
                  cfg.window_end);

    if (synth_cmd->parsed()) {
      synth::ScenarioSpec spec;
      if (!preset_name.empty()) {
        spec = synth::preset(preset_name, cfg.seed);
      } else if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw SynthError(spec_path + ": cannot open scenario spec");
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw SynthError(spec_path + ": " + e.what());
        }
        spec = synth::spec_from_json(j);
        if (flags.values.contains("seed")) spec.seed = cfg.seed;
      } else {
        throw SynthError("synth needs a spec file or --preset");
      }
      synth::generate(spec, cfg.out_dir);
      std::cout << (cfg.out_dir / "manifest.json").string() << '\n';
      return 0;
    }

    fs::create_directories(cfg.out_dir);
    if (pipeline_cmd->parsed()) {
      const auto r = pipeline::run_pipeline(cfg);
      log_notes(r.notes);
      spdlog::info("{} CBGs, {} devices, {} stay rows -> {}", r.cbgs, r.devices, r.stays, cfg.out_dir.string());
      if (!r.balanced) spdlog::warn("stay counts do not balance; see summary.json");
    } else if (classify_cmd->parsed()) {
      spdlog::info("classified {} stays", pipeline::run_classify(cfg));
    } else if (exposure_cmd->parsed()) {
      spdlog::info("{} CBGs written", pipeline::run_exposure_only(cfg));
    } else if (cohorts_cmd->parsed()) {
      spdlog::info("{} CBGs labelled", pipeline::run_cohorts(cfg));
    } else if (disparity_cmd->parsed()) {
      const fs::path e = exposure_csv.empty() ? cfg.out_dir / "exposure.csv" : fs::path(exposure_csv);
      log_notes(pipeline::run_disparity_only(e, cfg.out_dir));
    } else if (report_cmd->parsed()) {
      const fs::path e = exposure_csv.empty() ? cfg.out_dir / "exposure.csv" : fs::path(exposure_csv);
      const fs::path c = cohorts_csv.empty() ? cfg.out_dir / "cohorts.csv" : fs::path(cohorts_csv);
      log_notes(pipeline::run_report_only(e, c, cfg.out_dir));
    }
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("{} error: {}", kind_of(e), e.what());
    return exit_code_for(e);
  }
}
