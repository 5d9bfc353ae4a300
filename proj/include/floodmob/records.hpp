#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodmob/error.hpp"
#include "floodmob/geo.hpp"

namespace floodmob {

/// One census block group. Multi-part geometry is a list of polygons;
/// containment is the OR over parts.
struct CbgRecord {
  std::string cbg_id;
  std::string county_id;
  std::string state;
  std::vector<geo::PolygonGeom> geometry;
  std::optional<double> median_income;
  std::int64_t pop_total = 0;
  std::int64_t pop_white = 0;
  std::int64_t pop_black = 0;
  std::int64_t pop_asian = 0;
  std::int64_t pop_25plus = 0;
  std::int64_t pop_25plus_low_attainment = 0;
  bool flood_prone = false;

  bool contains(geo::GeoPoint p) const { return geo::point_in_any(p, geometry); }

  geo::BBox bbox() const {
    geo::BBox b;
    for (const auto& g : geometry) b.expand(g.bbox());
    return b;
  }

  friend bool operator==(const CbgRecord&, const CbgRecord&) = default;
};

struct StayRecord {
  std::string device_id;
  geo::GeoPoint location;
  std::int64_t start = 0;  // epoch minutes
  double dwell_min = 0.0;
  std::optional<std::string> stay_cbg;

  friend bool operator==(const StayRecord&, const StayRecord&) = default;
};

struct HomeAssignment {
  std::string device_id;
  std::string home_cbg;

  friend bool operator==(const HomeAssignment&, const HomeAssignment&) = default;
};

/// Half-open window [start, end) in epoch minutes. Every device is charged
/// the full window length as its weekly time budget.
class StudyWindow {
 public:
  // 2019-04-01T00:00:00Z, seven days.
  static constexpr std::int64_t kDefaultStart = 25901280;
  static constexpr std::int64_t kWeekMinutes = 10080;

  StudyWindow() = default;

  static StudyWindow make(std::int64_t start, std::int64_t end) {
    if (end <= start) throw ConfigError("study window end must be after start");
    StudyWindow w;
    w.start_ = start;
    w.end_ = end;
    return w;
  }

  std::int64_t start() const { return start_; }
  std::int64_t end() const { return end_; }
  std::int64_t total_minutes() const { return end_ - start_; }
  bool contains(std::int64_t t) const { return t >= start_ && t < end_; }

  friend bool operator==(const StudyWindow&, const StudyWindow&) = default;

 private:
  std::int64_t start_ = kDefaultStart;
  std::int64_t end_ = kDefaultStart + kWeekMinutes;
};

}  // namespace floodmob
