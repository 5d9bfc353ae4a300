#pragma once

// Output tables and their readers. Every real number goes through
// format_sig so reruns are byte-identical.

#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "floodmob/analysis.hpp"
#include "floodmob/cohort.hpp"
#include "floodmob/csv.hpp"
#include "floodmob/error.hpp"
#include "floodmob/exposure.hpp"
#include "floodmob/format.hpp"
#include "floodmob/records.hpp"
#include "floodmob/stats.hpp"

namespace floodmob::report {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kExposureHeader = "cbg_id,county_id,state,flood_prone,n_devices,e_r,e_m";
inline constexpr const char* kCohortsHeader = "cbg_id,race_white,race_black,race_asian,income_class,education_class";
inline constexpr const char* kDisparityHeader = "state,exposure_kind,threshold_T,n_exceeders,cov";
inline constexpr const char* kCdfHeader = "group,x,ecdf,ccdf";
inline constexpr const char* kTtestsHeader = "grouping,exposure_kind,group_a,group_b,n_a,n_b,mean_a,mean_b,t,df,p";

inline std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream o(path, std::ios::binary);
  if (!o) throw IngestError(path.string() + ": cannot open for writing");
  return o;
}

/// JSON number holding exactly the value format_sig would print.
inline json number(double v) { return std::isfinite(v) ? json(round_sig(v)) : json(nullptr); }

inline void write_exposure(const fs::path& path, std::span<const exposure::ExposureRecord> records) {
  auto o = open_output(path);
  o << kExposureHeader << '\n';
  for (const auto& e : records)
    o << e.cbg_id << ',' << e.county_id << ',' << e.state << ',' << format_bool(e.flood_prone) << ',' << e.n_devices
      << ',' << format_sig(e.e_r) << ',' << format_sig(e.e_m) << '\n';
}

inline bool parse_bool(std::string_view s, bool& out) {
  if (s == "true") return out = true, true;
  if (s == "false") return out = false, true;
  return false;
}

inline std::vector<exposure::ExposureRecord> read_exposure(const fs::path& path) {
  const auto table = csv::read_file(path);
  if (csv::join(table.header) != kExposureHeader)
    throw IngestError(path.string() + ":1: header must be exactly '" + kExposureHeader + "'");
  std::vector<exposure::ExposureRecord> out;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    exposure::ExposureRecord e;
    std::int64_t n = 0;
    if (f.size() != 7 || f[0].empty() || !parse_bool(f[3], e.flood_prone) || !csv::parse_int(f[4], n) || n < 1 ||
        !csv::parse_double(f[5], e.e_r) || !csv::parse_double(f[6], e.e_m))
      throw IngestError(path.string() + ":" + std::to_string(row.line) + ": malformed exposure row");
    e.cbg_id = f[0];
    e.county_id = f[1];
    e.state = f[2];
    e.n_devices = static_cast<std::size_t>(n);
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.cbg_id < b.cbg_id; });
  return out;
}

inline void write_cohorts(const fs::path& path, std::span<const cohort::CohortLabels> labels) {
  auto o = open_output(path);
  o << kCohortsHeader << '\n';
  for (const auto& l : labels)
    o << l.cbg_id << ',' << format_bool(l.race_flags[0]) << ',' << format_bool(l.race_flags[1]) << ','
      << format_bool(l.race_flags[2]) << ',' << cohort::to_string(l.income_class) << ','
      << cohort::to_string(l.education_class) << '\n';
}

inline std::vector<cohort::CohortLabels> read_cohorts(const fs::path& path) {
  const auto table = csv::read_file(path);
  if (csv::join(table.header) != kCohortsHeader)
    throw IngestError(path.string() + ":1: header must be exactly '" + kCohortsHeader + "'");
  std::vector<cohort::CohortLabels> out;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    cohort::CohortLabels l;
    bool ok = f.size() == 6 && !f[0].empty();
    for (int k = 0; ok && k < 3; ++k) ok = parse_bool(f[1 + k], l.race_flags[k]);
    if (ok) {
      if (f[4] == "high") l.income_class = cohort::IncomeClass::High;
      else if (f[4] == "low") l.income_class = cohort::IncomeClass::Low;
      else if (f[4] != "unknown") ok = false;
      if (f[5] == "higher") l.education_class = cohort::EducationClass::Higher;
      else if (f[5] == "lower_attainment") l.education_class = cohort::EducationClass::LowerAttainment;
      else if (f[5] != "unknown") ok = false;
    }
    if (!ok) throw IngestError(path.string() + ":" + std::to_string(row.line) + ": malformed cohort row");
    l.cbg_id = f[0];
    out.push_back(std::move(l));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.cbg_id < b.cbg_id; });
  return out;
}

inline void write_disparity(const fs::path& path, std::span<const stats::DisparityRecord> records) {
  auto o = open_output(path);
  o << kDisparityHeader << '\n';
  for (const auto& r : records)
    o << r.state << ',' << stats::to_string(r.kind) << ',' << format_sig(r.threshold_T) << ',' << r.n_exceeders << ','
      << (r.cov ? format_sig(*r.cov) : "") << '\n';
}

inline std::string cdf_filename(analysis::Grouping g, stats::ExposureKind k) {
  return "cdf_" + std::string(analysis::to_string(g)) + "_" + stats::to_string(k) + ".csv";
}

/// One row per sample point, groups in their fixed order, x ascending.
inline void write_cdf(const fs::path& path, std::span<const stats::GroupSample> samples) {
  auto o = open_output(path);
  o << kCdfHeader << '\n';
  for (const auto& g : samples) {
    if (g.values.empty()) continue;
    const auto d = stats::EmpiricalDistribution::make(g.values);
    for (double x : d.values())
      o << g.name << ',' << format_sig(x) << ',' << format_sig(d.ecdf(x)) << ',' << format_sig(d.ccdf(x)) << '\n';
  }
}

struct TtestRow {
  analysis::Grouping grouping;
  stats::ExposureKind kind;
  stats::PairTest test;
};

inline void write_ttests(const fs::path& path, std::span<const TtestRow> rows) {
  auto o = open_output(path);
  o << kTtestsHeader << '\n';
  for (const auto& r : rows) {
    const auto& t = r.test;
    o << analysis::to_string(r.grouping) << ',' << stats::to_string(r.kind) << ',' << t.group_a << ',' << t.group_b
      << ',' << t.n_a << ',' << t.n_b << ',' << format_sig(t.test.mean_a) << ',' << format_sig(t.test.mean_b) << ','
      << format_sig(t.test.t_stat) << ',' << format_sig(t.test.df) << ',' << format_sig(t.test.p_value) << '\n';
  }
}

inline json regression_json(const analysis::DisparityRegression& reg) {
  json points = json::array();
  for (const auto& p : reg.points) points.push_back({{"state", p.state}, {"x", number(p.x)}, {"y", number(p.y)}});
  json j;
  if (reg.fit) {
    j["slope"] = number(reg.fit->slope);
    j["intercept"] = number(reg.fit->intercept);
    j["r_squared"] = reg.fit->r_squared ? number(*reg.fit->r_squared) : json(nullptr);
    j["n_points"] = reg.fit->n_points;
  } else {
    j["slope"] = nullptr;
    j["intercept"] = nullptr;
    j["r_squared"] = nullptr;
    j["n_points"] = reg.points.size();
    j["error"] = reg.error;
  }
  j["x"] = "residential_cov";
  j["y"] = "mobility_cov";
  j["points"] = std::move(points);
  return j;
}

inline void write_json(const fs::path& path, const json& j) {
  auto o = open_output(path);
  o << j.dump(2) << '\n';
}

/// stays_classified.csv: the accepted stay rows plus floodplain flag and CBG.
inline void write_classified_stays(const fs::path& path, std::span<const StayRecord> stays,
                                   std::span<const std::uint8_t> in_floodplain) {
  auto o = open_output(path);
  o << "device_id,lon,lat,start_epoch_min,dwell_min,in_floodplain,stay_cbg\n";
  for (std::size_t i = 0; i < stays.size(); ++i) {
    const auto& s = stays[i];
    o << csv::escape(s.device_id) << ',' << format_shortest(s.location.lon) << ','
      << format_shortest(s.location.lat) << ',' << s.start << ',' << format_shortest(s.dwell_min) << ','
      << format_bool(in_floodplain[i] != 0) << ',' << s.stay_cbg.value_or("") << '\n';
  }
}

}  // namespace floodmob::report
