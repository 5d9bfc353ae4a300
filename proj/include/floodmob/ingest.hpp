#pragma once

// Loaders for the four input datasets. Fatal problems throw IngestError naming
// the file and record; per-record problems are counted and the record dropped.

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "floodmob/csv.hpp"
#include "floodmob/error.hpp"
#include "floodmob/geojson.hpp"
#include "floodmob/overlay.hpp"
#include "floodmob/records.hpp"

namespace floodmob::ingest {

inline constexpr std::array<std::string_view, 10> kDemographicsHeader = {
    "cbg_id",    "county_id", "state",      "median_income", "pop_total",
    "pop_white", "pop_black", "pop_asian",  "pop_25plus",    "pop_25plus_low_attainment"};
inline constexpr std::array<std::string_view, 5> kStaysHeader = {"device_id", "lon", "lat", "start_epoch_min",
                                                                 "dwell_min"};
inline constexpr std::array<std::string_view, 2> kHomesHeader = {"device_id", "home_cbg"};

struct LoadReport {
  static constexpr std::size_t kMaxMessages = 50;

  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<std::string> messages;  // first kMaxMessages rejection reasons

  void reject(std::string message) {
    ++rejected;
    if (messages.size() < kMaxMessages) messages.push_back(std::move(message));
  }
};

/// Accepts floodplain features whose `zone` property is in a fixed set.
/// Expression syntax: comma-separated zone codes, e.g. "A,AE,VE".
struct ZoneFilter {
  std::set<std::string> zones;

  static std::optional<ZoneFilter> parse(std::string_view expr) {
    if (csv::trim(expr).empty()) return std::nullopt;
    ZoneFilter f;
    for (auto& z : csv::split_line(expr))
      if (!z.empty()) f.zones.insert(z);
    if (f.zones.empty()) return std::nullopt;
    return f;
  }

  bool accepts(const std::optional<std::string>& zone) const { return zone && zones.contains(*zone); }
};

namespace detail {

template <std::size_t N>
bool header_is(const std::vector<std::string>& header, const std::array<std::string_view, N>& want) {
  return header.size() == N && std::equal(header.begin(), header.end(), want.begin());
}

template <std::size_t N>
std::string header_text(const std::array<std::string_view, N>& h) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? "," : "") + std::string(h[i]);
  return s;
}

inline std::string where(const std::filesystem::path& p, std::size_t line) {
  return p.string() + ":" + std::to_string(line);
}

}  // namespace detail

struct FloodplainLoad {
  geo::FloodplainMap map;
  std::size_t features = 0;
  std::size_t filtered_out = 0;
  LoadReport report;
};

inline FloodplainLoad load_floodplain(const std::filesystem::path& path,
                                      const std::optional<ZoneFilter>& filter = std::nullopt) {
  FloodplainLoad out;
  std::vector<geo::PolygonGeom> polygons;
  for (auto& f : geojson::read_polygon_features(path)) {
    ++out.features;
    if (!f.valid()) {
      out.report.reject(f.error);
      continue;
    }
    if (filter && !filter->accepts(f.string_property("zone"))) {
      ++out.filtered_out;
      continue;
    }
    ++out.report.accepted;
    for (auto& part : f.parts) polygons.push_back(std::move(part));
  }
  out.map = geo::FloodplainMap(std::move(polygons));
  return out;
}

struct CbgLoad {
  std::vector<CbgRecord> cbgs;  // sorted by cbg_id
  LoadReport geometry_report;
  LoadReport demographics_report;
  std::size_t missing_geometry = 0;      // demographics rows without a geometry feature
  std::size_t missing_demographics = 0;  // geometry features without a demographics row
  std::vector<std::string> dropped_ids;
};

inline CbgLoad load_cbgs(const std::filesystem::path& geometry_path,
                         const std::filesystem::path& demographics_path) {
  CbgLoad out;

  std::map<std::string, std::vector<geo::PolygonGeom>> geometry;
  for (auto& f : geojson::read_polygon_features(geometry_path)) {
    auto id = f.string_property("cbg_id");
    const std::string loc = geometry_path.string() + ": feature " + std::to_string(f.index);
    if (!id || id->empty()) {
      out.geometry_report.reject(loc + ": missing property cbg_id");
      continue;
    }
    if (geometry.contains(*id)) throw IngestError(loc + ": duplicate cbg_id '" + *id + "'");
    if (!f.valid()) {
      out.geometry_report.reject(f.error);
      geometry.emplace(*id, std::vector<geo::PolygonGeom>{});  // still claims the id
      continue;
    }
    ++out.geometry_report.accepted;
    geometry.emplace(*id, std::move(f.parts));
  }

  const auto table = csv::read_file(demographics_path);
  if (!detail::header_is(table.header, kDemographicsHeader))
    throw IngestError(demographics_path.string() + ":1: header must be exactly '" +
                      detail::header_text(kDemographicsHeader) + "'");

  std::set<std::string> seen;
  std::map<std::string, CbgRecord> demographics;
  for (const auto& row : table.rows) {
    const auto loc = detail::where(demographics_path, row.line);
    if (row.fields.size() != kDemographicsHeader.size()) {
      out.demographics_report.reject(loc + ": expected " + std::to_string(kDemographicsHeader.size()) + " fields");
      continue;
    }
    const auto& f = row.fields;
    if (f[0].empty()) {
      out.demographics_report.reject(loc + ": empty cbg_id");
      continue;
    }
    if (!seen.insert(f[0]).second) throw IngestError(loc + ": duplicate cbg_id '" + f[0] + "'");

    CbgRecord r;
    r.cbg_id = f[0];
    r.county_id = f[1];
    r.state = f[2];
    if (r.county_id.empty() || r.state.size() != 2) {
      out.demographics_report.reject(loc + ": county_id must be non-empty and state a two-letter code");
      continue;
    }
    if (!f[3].empty()) {
      double income = 0;
      if (!csv::parse_double(f[3], income) || income < 0) {
        out.demographics_report.reject(loc + ": median_income is not a non-negative number");
        continue;
      }
      r.median_income = income;
    }
    std::int64_t* counts[] = {&r.pop_total, &r.pop_white, &r.pop_black,
                              &r.pop_asian, &r.pop_25plus, &r.pop_25plus_low_attainment};
    bool ok = true;
    for (std::size_t k = 0; k < 6 && ok; ++k) {
      if (!csv::parse_int(f[4 + k], *counts[k]) || *counts[k] < 0) {
        out.demographics_report.reject(loc + ": " + std::string(kDemographicsHeader[4 + k]) +
                                       " is not a non-negative integer");
        ok = false;
      }
    }
    if (!ok) continue;
    if (r.pop_white > r.pop_total || r.pop_black > r.pop_total || r.pop_asian > r.pop_total) {
      out.demographics_report.reject(loc + ": race count exceeds pop_total");
      continue;
    }
    if (r.pop_25plus_low_attainment > r.pop_25plus) {
      out.demographics_report.reject(loc + ": pop_25plus_low_attainment exceeds pop_25plus");
      continue;
    }
    ++out.demographics_report.accepted;
    demographics.emplace(r.cbg_id, std::move(r));
  }

  for (auto& [id, rec] : demographics) {
    auto g = geometry.find(id);
    if (g == geometry.end() || g->second.empty()) {
      ++out.missing_geometry;
      out.dropped_ids.push_back(id);
      continue;
    }
    rec.geometry = std::move(g->second);
    out.cbgs.push_back(std::move(rec));
  }
  for (const auto& [id, parts] : geometry) {
    if (!parts.empty() && !demographics.contains(id)) {
      ++out.missing_demographics;
      out.dropped_ids.push_back(id);
    }
  }
  std::sort(out.dropped_ids.begin(), out.dropped_ids.end());
  return out;
}

struct StayLoad {
  std::vector<StayRecord> stays;  // input order
  std::size_t rows = 0;
  std::size_t out_of_window = 0;
  std::size_t bad_dwell = 0;
  std::size_t bad_coordinate = 0;
  std::size_t unknown_cbg = 0;
  std::size_t malformed = 0;
  std::size_t unlocated = 0;  // accepted rows whose point lies in no CBG
  bool had_cbg_column = false;
  LoadReport report;
};

/// Rows with an empty or missing stay_cbg get one from the CBG index; rows
/// in no CBG are kept with stay_cbg absent.
inline StayLoad load_stays(const std::filesystem::path& path, const StudyWindow& window, const geo::CbgIndex& cbgs,
                           unsigned workers = 1) {
  StayLoad out;
  const auto table = csv::read_file(path);
  auto with_cbg = std::vector<std::string>(kStaysHeader.begin(), kStaysHeader.end());
  with_cbg.push_back("stay_cbg");
  if (detail::header_is(table.header, kStaysHeader)) {
    out.had_cbg_column = false;
  } else if (table.header == with_cbg) {
    out.had_cbg_column = true;
  } else {
    throw IngestError(path.string() + ":1: header must be exactly '" + detail::header_text(kStaysHeader) +
                      "' optionally followed by ',stay_cbg'");
  }
  const std::size_t ncols = out.had_cbg_column ? 6 : 5;

  std::vector<std::size_t> to_locate;
  for (const auto& row : table.rows) {
    ++out.rows;
    const auto loc = detail::where(path, row.line);
    const auto& f = row.fields;
    if (f.size() != ncols || f[0].empty()) {
      ++out.malformed;
      out.report.reject(loc + ": malformed row");
      continue;
    }
    StayRecord s;
    s.device_id = f[0];
    if (!csv::parse_double(f[1], s.location.lon) || !csv::parse_double(f[2], s.location.lat) ||
        !geo::is_valid_coordinate(s.location)) {
      ++out.bad_coordinate;
      out.report.reject(loc + ": unparseable or out-of-range coordinate");
      continue;
    }
    if (!csv::parse_int(f[3], s.start)) {
      ++out.malformed;
      out.report.reject(loc + ": start_epoch_min is not an integer");
      continue;
    }
    if (!csv::parse_double(f[4], s.dwell_min) || !(s.dwell_min > 0)) {
      ++out.bad_dwell;
      out.report.reject(loc + ": dwell_min must be positive");
      continue;
    }
    if (!window.contains(s.start)) {
      ++out.out_of_window;
      out.report.reject(loc + ": start outside study window");
      continue;
    }
    if (out.had_cbg_column && !f[5].empty()) {
      if (!cbgs.find(f[5])) {
        ++out.unknown_cbg;
        out.report.reject(loc + ": unknown stay_cbg '" + f[5] + "'");
        continue;
      }
      s.stay_cbg = f[5];
    } else {
      to_locate.push_back(out.stays.size());
    }
    ++out.report.accepted;
    out.stays.push_back(std::move(s));
  }

  parallel_chunks(to_locate.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      auto& s = out.stays[to_locate[k]];
      if (const auto* r = cbgs.locate_record(s.location)) s.stay_cbg = r->cbg_id;
    }
  });
  out.unlocated = static_cast<std::size_t>(
      std::count_if(out.stays.begin(), out.stays.end(), [](const StayRecord& s) { return !s.stay_cbg; }));
  return out;
}

struct HomeLoad {
  std::vector<HomeAssignment> homes;  // sorted by device_id
  std::size_t rows = 0;
  std::size_t dropped_unknown = 0;
  std::size_t duplicates = 0;
  LoadReport report;
};

inline HomeLoad load_homes(const std::filesystem::path& path, const geo::CbgIndex& cbgs) {
  HomeLoad out;
  const auto table = csv::read_file(path);
  if (!detail::header_is(table.header, kHomesHeader))
    throw IngestError(path.string() + ":1: header must be exactly '" + detail::header_text(kHomesHeader) + "'");

  std::map<std::string, std::string> homes;
  for (const auto& row : table.rows) {
    ++out.rows;
    const auto loc = detail::where(path, row.line);
    if (row.fields.size() != 2 || row.fields[0].empty() || row.fields[1].empty()) {
      out.report.reject(loc + ": malformed row");
      continue;
    }
    const auto& device = row.fields[0];
    const auto& home = row.fields[1];
    if (auto it = homes.find(device); it != homes.end()) {
      if (it->second != home)
        throw IngestError(loc + ": device '" + device + "' has conflicting homes '" + it->second + "' and '" +
                          home + "'");
      ++out.duplicates;
      continue;
    }
    homes.emplace(device, home);
  }
  for (auto& [device, home] : homes) {
    if (!cbgs.find(home)) {
      ++out.dropped_unknown;
      out.report.reject(path.string() + ": device '" + device + "' home CBG '" + home + "' not in CBG table");
      continue;
    }
    ++out.report.accepted;
    out.homes.push_back({device, home});
  }
  return out;
}

}  // namespace floodmob::ingest
