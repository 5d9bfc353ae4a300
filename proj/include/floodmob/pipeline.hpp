#pragma once

// Run configuration and the stage functions behind each CLI subcommand.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "floodmob/analysis.hpp"
#include "floodmob/cohort.hpp"
#include "floodmob/csv.hpp"
#include "floodmob/error.hpp"
#include "floodmob/exposure.hpp"
#include "floodmob/format.hpp"
#include "floodmob/ingest.hpp"
#include "floodmob/overlay.hpp"
#include "floodmob/parallel.hpp"
#include "floodmob/records.hpp"
#include "floodmob/report.hpp"

namespace floodmob::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct RunConfig {
  fs::path floodplain;
  fs::path cbg_geometry;
  fs::path demographics;
  fs::path stays;
  fs::path homes;
  std::int64_t window_start = StudyWindow::kDefaultStart;
  std::int64_t window_end = StudyWindow::kDefaultStart + StudyWindow::kWeekMinutes;
  exposure::ResidentialMode mode = exposure::ResidentialMode::CbgGated;
  std::string zone_filter;
  fs::path out_dir = "out";
  unsigned workers = default_workers();
  std::uint64_t seed = 1;

  StudyWindow window() const { return StudyWindow::make(window_start, window_end); }
};

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {"floodplain", "cbg_geometry", "demographics",    "stays",
                                                "homes",      "window_start", "window_end",      "residential_mode",
                                                "zone_filter", "out",         "workers",         "seed"};
  return keys;
}

/// Flat `key = value` lines; '#' starts a comment line. Unknown keys are an error.
inline std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = csv::trim(line);
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view = csv::trim(view.substr(3));
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key(csv::trim(view.substr(0, eq)));
    std::string value(csv::trim(view.substr(eq + 1)));
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = value;
  }
  return out;
}

/// Applies string settings to `cfg`. Relative paths are resolved against `base`.
inline void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& kv, const fs::path& base = {}) {
  auto path_of = [&](const std::string& v) {
    fs::path p(v);
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  auto integer = [&](const std::string& key, const std::string& v) {
    std::int64_t x = 0;
    if (!csv::parse_int(v, x)) throw ConfigError(key + " must be an integer, got '" + v + "'");
    return x;
  };
  for (const auto& [key, v] : kv) {
    if (key == "floodplain") cfg.floodplain = path_of(v);
    else if (key == "cbg_geometry") cfg.cbg_geometry = path_of(v);
    else if (key == "demographics") cfg.demographics = path_of(v);
    else if (key == "stays") cfg.stays = path_of(v);
    else if (key == "homes") cfg.homes = path_of(v);
    else if (key == "out") cfg.out_dir = path_of(v);
    else if (key == "window_start") cfg.window_start = integer(key, v);
    else if (key == "window_end") cfg.window_end = integer(key, v);
    else if (key == "residential_mode") cfg.mode = exposure::parse_residential_mode(v);
    else if (key == "zone_filter") cfg.zone_filter = v;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer(key, v));
    else if (key == "workers") {
      const auto w = integer(key, v);
      if (w < 1) throw ConfigError("workers must be >= 1");
      cfg.workers = static_cast<unsigned>(w);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
}

inline void require_file(const fs::path& p, const char* key) {
  if (p.empty()) throw ConfigError(std::string("no path given for '") + key + "'");
  if (!fs::is_regular_file(p)) throw ConfigError(std::string(key) + " file not found: " + p.string());
}

struct Inputs {
  ingest::FloodplainLoad floodplain;
  ingest::CbgLoad cbg;
  std::unique_ptr<geo::CbgIndex> index;  // views cbg.cbgs
  ingest::HomeLoad homes;
  ingest::StayLoad stays;
};

/// Loads everything the exposure stage needs and tags flood-prone CBGs.
inline std::unique_ptr<Inputs> load_inputs(const RunConfig& cfg) {
  require_file(cfg.floodplain, "floodplain");
  require_file(cfg.cbg_geometry, "cbg_geometry");
  require_file(cfg.demographics, "demographics");
  require_file(cfg.stays, "stays");
  require_file(cfg.homes, "homes");
  const auto window = cfg.window();
  auto in = std::make_unique<Inputs>();
  in->floodplain = ingest::load_floodplain(cfg.floodplain, ingest::ZoneFilter::parse(cfg.zone_filter));
  in->cbg = ingest::load_cbgs(cfg.cbg_geometry, cfg.demographics);
  geo::tag_flood_prone(in->cbg.cbgs, in->floodplain.map, cfg.workers);
  in->index = std::make_unique<geo::CbgIndex>(in->cbg.cbgs);
  in->homes = ingest::load_homes(cfg.homes, *in->index);
  in->stays = ingest::load_stays(cfg.stays, window, *in->index, cfg.workers);
  return in;
}

inline std::vector<std::uint8_t> classify_stays(const Inputs& in, unsigned workers) {
  std::vector<geo::GeoPoint> points;
  points.reserve(in.stays.stays.size());
  for (const auto& s : in.stays.stays) points.push_back(s.location);
  return geo::classify_points(points, in.floodplain.map, workers);
}

struct ExposureStage {
  std::vector<std::uint8_t> in_floodplain;
  exposure::Accumulation accumulation;
  std::vector<exposure::ExposureRecord> records;
};

inline ExposureStage run_exposure(const Inputs& in, const RunConfig& cfg) {
  ExposureStage s;
  s.in_floodplain = classify_stays(in, cfg.workers);
  s.accumulation =
      exposure::accumulate(in.stays.stays, s.in_floodplain, in.homes.homes, *in.index, cfg.window(), cfg.workers);
  s.records = exposure::compute_exposures(s.accumulation.dwells, *in.index, cfg.window(), cfg.mode);
  return s;
}

/// Values as printed in exposure.csv. Downstream statistics use these so a
/// full pipeline run and the file-based subcommands agree exactly.
inline std::vector<exposure::ExposureRecord> as_printed(std::vector<exposure::ExposureRecord> records) {
  for (auto& e : records) {
    e.e_r = round_sig(e.e_r);
    e.e_m = round_sig(e.e_m);
  }
  return records;
}

struct StatsStage {
  analysis::DisparityAnalysis disparity;
  analysis::DisparityRegression regression;
  std::vector<report::TtestRow> ttests;
  std::vector<std::string> notes;
};

inline StatsStage run_disparity(std::span<const exposure::ExposureRecord> exposures) {
  StatsStage s;
  s.disparity = analysis::state_disparity(exposures);
  s.regression = analysis::disparity_regression(s.disparity);
  for (const auto& d : s.disparity.degenerate) s.notes.push_back("disparity: " + d);
  if (!s.regression.fit) s.notes.push_back("regression: " + s.regression.error);
  return s;
}

inline void write_disparity_outputs(const fs::path& out, const StatsStage& s) {
  report::write_disparity(out / "disparity.csv", s.disparity.records);
  report::write_json(out / "regression.json", report::regression_json(s.regression));
}

/// Writes the cdf files and ttests.csv; returns notes about skipped groups.
inline std::vector<std::string> write_group_reports(const fs::path& out,
                                                    std::span<const exposure::ExposureRecord> exposures,
                                                    std::span<const cohort::CohortLabels> labels) {
  std::vector<std::string> notes;
  std::vector<report::TtestRow> rows;
  for (auto g : analysis::kGroupings) {
    for (auto k : analysis::kKinds) {
      const auto samples = analysis::group_samples(exposures, labels, g, k);
      report::write_cdf(out / report::cdf_filename(g, k), samples);
      const auto summary = stats::summarize_groups(samples);
      for (const auto& t : summary.tests) rows.push_back({g, k, t});
      for (const auto& n : summary.notes)
        notes.push_back(std::string(analysis::to_string(g)) + "/" + stats::to_string(k) + ": " + n);
    }
  }
  report::write_ttests(out / "ttests.csv", rows);
  return notes;
}

inline json load_report_json(const ingest::LoadReport& r) {
  return {{"accepted", r.accepted}, {"rejected", r.rejected}, {"messages", r.messages}};
}

inline json summary_json(const RunConfig& cfg, const Inputs& in, const ExposureStage& ex,
                         const std::vector<std::string>& notes) {
  const auto& st = in.stays;
  const auto& a = ex.accumulation.audit;
  const std::size_t flood_prone = static_cast<std::size_t>(std::count_if(
      in.cbg.cbgs.begin(), in.cbg.cbgs.end(), [](const CbgRecord& c) { return c.flood_prone; }));
  const std::size_t rejected = st.report.rejected;
  const std::size_t excluded = a.stays_cross_county + a.stays_unlocated + a.stays_no_home + a.stays_over_budget;
  json j;
  j["window"] = {{"start", cfg.window_start}, {"end", cfg.window_end}, {"total_minutes", cfg.window().total_minutes()}};
  j["residential_mode"] = exposure::to_string(cfg.mode);
  j["zone_filter"] = cfg.zone_filter;
  j["floodplain"] = {{"features", in.floodplain.features},
                     {"polygons", in.floodplain.map.size()},
                     {"filtered_out", in.floodplain.filtered_out},
                     {"report", load_report_json(in.floodplain.report)}};
  j["cbgs"] = {{"loaded", in.cbg.cbgs.size()},
               {"flood_prone", flood_prone},
               {"missing_geometry", in.cbg.missing_geometry},
               {"missing_demographics", in.cbg.missing_demographics},
               {"geometry_report", load_report_json(in.cbg.geometry_report)},
               {"demographics_report", load_report_json(in.cbg.demographics_report)}};
  j["homes"] = {{"rows", in.homes.rows},
                {"accepted", in.homes.homes.size()},
                {"dropped_unknown_cbg", in.homes.dropped_unknown},
                {"duplicates", in.homes.duplicates}};
  j["devices"] = {{"with_stays", a.devices_without_home + a.devices_over_budget + ex.accumulation.dwells.size()},
                  {"counted", ex.accumulation.dwells.size()},
                  {"without_home", a.devices_without_home},
                  {"over_budget", a.devices_over_budget}};
  j["stays"] = {{"input_rows", st.rows},
                {"rejected", rejected},
                {"rejected_by_reason",
                 {{"malformed", st.malformed},
                  {"bad_coordinate", st.bad_coordinate},
                  {"bad_dwell", st.bad_dwell},
                  {"out_of_window", st.out_of_window},
                  {"unknown_stay_cbg", st.unknown_cbg}}},
                {"reject_messages", st.report.messages},
                {"loaded", st.stays.size()},
                {"accepted", a.stays_accepted()},
                {"accepted_by_category",
                 {{"home", a.stays_home},
                  {"flood_mobility", a.stays_flood_mobility},
                  {"other_intra_county", a.stays_other_intra_county}}},
                {"cross_county_excluded", excluded},
                {"excluded_by_reason",
                 {{"cross_county", a.stays_cross_county},
                  {"unlocated", a.stays_unlocated},
                  {"no_home", a.stays_no_home},
                  {"over_budget", a.stays_over_budget}}},
                {"in_floodplain",
                 static_cast<std::size_t>(std::count(ex.in_floodplain.begin(), ex.in_floodplain.end(), 1))}};
  j["conservation"] = {{"input_rows", st.rows},
                       {"accepted_plus_rejected_plus_excluded", a.stays_accepted() + rejected + excluded},
                       {"balanced", st.rows == a.stays_accepted() + rejected + excluded}};
  j["exposure"] = {{"cbgs", ex.records.size()}};
  j["notes"] = notes;
  return j;
}

struct PipelineResult {
  std::size_t cbgs = 0;
  std::size_t devices = 0;
  std::size_t stays = 0;
  std::vector<std::string> notes;
  bool balanced = true;
};

/// Full chain: every output table plus summary.json.
inline PipelineResult run_pipeline(const RunConfig& cfg) {
  const auto in = load_inputs(cfg);
  const auto ex = run_exposure(*in, cfg);
  const auto printed = as_printed(ex.records);
  const auto labels = cohort::label_all(in->cbg.cbgs);

  fs::create_directories(cfg.out_dir);
  report::write_exposure(cfg.out_dir / "exposure.csv", ex.records);
  report::write_cohorts(cfg.out_dir / "cohorts.csv", labels);
  auto stats_stage = run_disparity(printed);
  write_disparity_outputs(cfg.out_dir, stats_stage);
  auto notes = stats_stage.notes;
  for (auto& n : write_group_reports(cfg.out_dir, printed, labels)) notes.push_back(std::move(n));

  const auto summary = summary_json(cfg, *in, ex, notes);
  report::write_json(cfg.out_dir / "summary.json", summary);

  PipelineResult r;
  r.cbgs = ex.records.size();
  r.devices = ex.accumulation.dwells.size();
  r.stays = in->stays.rows;
  r.notes = std::move(notes);
  r.balanced = summary["conservation"]["balanced"].get<bool>();
  return r;
}

/// stays_classified.csv only. Needs floodplain, CBGs and stays.
inline std::size_t run_classify(const RunConfig& cfg) {
  require_file(cfg.floodplain, "floodplain");
  require_file(cfg.cbg_geometry, "cbg_geometry");
  require_file(cfg.demographics, "demographics");
  require_file(cfg.stays, "stays");
  Inputs in;
  in.floodplain = ingest::load_floodplain(cfg.floodplain, ingest::ZoneFilter::parse(cfg.zone_filter));
  in.cbg = ingest::load_cbgs(cfg.cbg_geometry, cfg.demographics);
  in.index = std::make_unique<geo::CbgIndex>(in.cbg.cbgs);
  in.stays = ingest::load_stays(cfg.stays, cfg.window(), *in.index, cfg.workers);
  const auto flags = classify_stays(in, cfg.workers);
  report::write_classified_stays(cfg.out_dir / "stays_classified.csv", in.stays.stays, flags);
  return in.stays.stays.size();
}

inline std::size_t run_exposure_only(const RunConfig& cfg) {
  const auto in = load_inputs(cfg);
  const auto ex = run_exposure(*in, cfg);
  report::write_exposure(cfg.out_dir / "exposure.csv", ex.records);
  return ex.records.size();
}

/// cohorts.csv from demographics alone (geometry is loaded to apply the same CBG join).
inline std::size_t run_cohorts(const RunConfig& cfg) {
  require_file(cfg.cbg_geometry, "cbg_geometry");
  require_file(cfg.demographics, "demographics");
  const auto cbg = ingest::load_cbgs(cfg.cbg_geometry, cfg.demographics);
  const auto labels = cohort::label_all(cbg.cbgs);
  report::write_cohorts(cfg.out_dir / "cohorts.csv", labels);
  return labels.size();
}

inline std::vector<std::string> run_disparity_only(const fs::path& exposure_csv, const fs::path& out) {
  require_file(exposure_csv, "exposure");
  const auto exposures = report::read_exposure(exposure_csv);
  const auto s = run_disparity(exposures);
  write_disparity_outputs(out, s);
  return s.notes;
}

inline std::vector<std::string> run_report_only(const fs::path& exposure_csv, const fs::path& cohorts_csv,
                                                const fs::path& out) {
  require_file(exposure_csv, "exposure");
  require_file(cohorts_csv, "cohorts");
  const auto exposures = report::read_exposure(exposure_csv);
  const auto labels = report::read_cohorts(cohorts_csv);
  return write_group_reports(out, exposures, labels);
}

}  // namespace floodmob::pipeline
