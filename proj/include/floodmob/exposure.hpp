#pragma once

// Per-device dwell accumulation and the per-CBG residential / mobility
// exposure ratios. Each device is charged the full study window as its time
// budget, whether or not it was observed for all of it.

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "floodmob/error.hpp"
#include "floodmob/overlay.hpp"
#include "floodmob/parallel.hpp"
#include "floodmob/records.hpp"

namespace floodmob::exposure {

enum class ResidentialMode {
  CbgGated,   // all home dwell counts when the home CBG is flood-prone
  StopGated,  // only home dwell at stops inside the floodplain counts
};

inline std::string_view to_string(ResidentialMode m) {
  return m == ResidentialMode::CbgGated ? "cbg-gated" : "stop-gated";
}

inline ResidentialMode parse_residential_mode(std::string_view s) {
  if (s == "cbg-gated") return ResidentialMode::CbgGated;
  if (s == "stop-gated") return ResidentialMode::StopGated;
  throw ConfigError("residential mode must be cbg-gated or stop-gated, got '" + std::string(s) + "'");
}

struct DeviceDwell {
  std::string device_id;
  std::string home_cbg;
  double flood_mobility_min = 0;         // outside home CBG, in home county, in floodplain
  double home_min = 0;                   // inside home CBG geometry
  double home_flood_min = 0;             // inside home CBG and in floodplain
  double other_intra_county_min = 0;     // outside home CBG, in home county, not in floodplain
  double excluded_cross_county_min = 0;  // other county, or no resolvable CBG
  std::size_t n_stays = 0;

  double observed_min() const {
    return flood_mobility_min + home_min + other_intra_county_min + excluded_cross_county_min;
  }

  friend bool operator==(const DeviceDwell&, const DeviceDwell&) = default;
};

/// Stay-level counters. Every stay handed to accumulate() lands in exactly one of
/// no_home, over_budget, cross_county, unlocated, home, flood_mobility, other_intra_county.
struct AccumulateAudit {
  std::size_t stays_total = 0;
  std::size_t stays_no_home = 0;
  std::size_t stays_over_budget = 0;
  std::size_t stays_cross_county = 0;
  std::size_t stays_unlocated = 0;
  std::size_t stays_home = 0;
  std::size_t stays_flood_mobility = 0;
  std::size_t stays_other_intra_county = 0;
  std::size_t devices_without_home = 0;
  std::size_t devices_over_budget = 0;

  std::size_t stays_accepted() const { return stays_home + stays_flood_mobility + stays_other_intra_county; }

  AccumulateAudit& operator+=(const AccumulateAudit& o) {
    stays_total += o.stays_total;
    stays_no_home += o.stays_no_home;
    stays_over_budget += o.stays_over_budget;
    stays_cross_county += o.stays_cross_county;
    stays_unlocated += o.stays_unlocated;
    stays_home += o.stays_home;
    stays_flood_mobility += o.stays_flood_mobility;
    stays_other_intra_county += o.stays_other_intra_county;
    devices_without_home += o.devices_without_home;
    devices_over_budget += o.devices_over_budget;
    return *this;
  }
};

struct Accumulation {
  std::vector<DeviceDwell> dwells;  // sorted by device_id
  AccumulateAudit audit;
};

/// Sums each device's stays into its DeviceDwell.
///
/// `in_floodplain[i]` is the floodplain verdict for `stays[i]`. A stay inside
/// the home CBG geometry is home dwell. Otherwise it counts toward mobility
/// only if its CBG lies in the home county; stays in another county or in no
/// CBG are excluded and audited. Devices whose observed dwell exceeds the
/// window are dropped (their stays counted as over_budget).
inline Accumulation accumulate(std::span<const StayRecord> stays, std::span<const std::uint8_t> in_floodplain,
                               std::span<const HomeAssignment> homes, const geo::CbgIndex& cbgs,
                               const StudyWindow& window, unsigned workers = 1) {
  if (in_floodplain.size() != stays.size())
    throw std::invalid_argument("accumulate: floodplain verdicts must match stays");

  std::map<std::string_view, std::vector<std::size_t>> by_device;
  for (std::size_t i = 0; i < stays.size(); ++i) by_device[stays[i].device_id].push_back(i);

  std::map<std::string_view, const HomeAssignment*> home_of;
  for (const auto& h : homes) home_of.emplace(h.device_id, &h);

  struct Work {
    const std::vector<std::size_t>* stay_idx;
    const HomeAssignment* home;
  };
  std::vector<Work> work;
  Accumulation out;
  for (const auto& [device, idx] : by_device) {
    auto it = home_of.find(device);
    out.audit.stays_total += idx.size();
    if (it == home_of.end()) {
      ++out.audit.devices_without_home;
      out.audit.stays_no_home += idx.size();
      continue;
    }
    work.push_back({&idx, it->second});
  }

  const double budget = static_cast<double>(window.total_minutes());
  std::vector<DeviceDwell> dwells(work.size());
  std::vector<AccumulateAudit> audits(std::max(1u, workers));
  std::vector<std::uint8_t> keep(work.size(), 1);

  parallel_chunks(work.size(), workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    AccumulateAudit& audit = audits[chunk];
    for (std::size_t w = begin; w < end; ++w) {
      const HomeAssignment& home = *work[w].home;
      const CbgRecord* home_rec = cbgs.find(home.home_cbg);
      if (!home_rec) throw IngestError("home CBG '" + home.home_cbg + "' is not in the CBG table");

      DeviceDwell d;
      d.device_id = home.device_id;
      d.home_cbg = home.home_cbg;
      AccumulateAudit local;
      for (std::size_t i : *work[w].stay_idx) {
        const StayRecord& s = stays[i];
        const bool flood = in_floodplain[i] != 0;
        ++d.n_stays;
        if (home_rec->contains(s.location)) {
          d.home_min += s.dwell_min;
          if (flood) d.home_flood_min += s.dwell_min;
          ++local.stays_home;
          continue;
        }
        const CbgRecord* stay_rec = s.stay_cbg ? cbgs.find(*s.stay_cbg) : nullptr;
        if (!stay_rec) {
          d.excluded_cross_county_min += s.dwell_min;
          ++local.stays_unlocated;
        } else if (stay_rec->county_id != home_rec->county_id) {
          d.excluded_cross_county_min += s.dwell_min;
          ++local.stays_cross_county;
        } else if (flood) {
          d.flood_mobility_min += s.dwell_min;
          ++local.stays_flood_mobility;
        } else {
          d.other_intra_county_min += s.dwell_min;
          ++local.stays_other_intra_county;
        }
      }
      if (d.observed_min() > budget) {
        keep[w] = 0;
        ++audit.devices_over_budget;
        audit.stays_over_budget += d.n_stays;
        continue;
      }
      audit += local;
      dwells[w] = std::move(d);
    }
  });

  for (const auto& a : audits) out.audit += a;
  for (std::size_t w = 0; w < dwells.size(); ++w)
    if (keep[w]) out.dwells.push_back(std::move(dwells[w]));
  return out;
}

/// Convenience overload that classifies the stay points first.
inline Accumulation accumulate(std::span<const StayRecord> stays, std::span<const HomeAssignment> homes,
                               const geo::CbgIndex& cbgs, const geo::FloodplainMap& map,
                               const StudyWindow& window, unsigned workers = 1) {
  std::vector<geo::GeoPoint> points;
  points.reserve(stays.size());
  for (const auto& s : stays) points.push_back(s.location);
  const auto flags = geo::classify_points(points, map, workers);
  return accumulate(stays, flags, homes, cbgs, window, workers);
}

/// Sum of flood mobility dwell over n_devices x window length.
inline double mobility_exposure(std::span<const DeviceDwell> dwells, const StudyWindow& window) {
  if (dwells.empty()) throw StatsError("mobility_exposure: no devices homed in CBG");
  double num = 0;
  for (const auto& d : dwells) num += d.flood_mobility_min;
  return num / (static_cast<double>(dwells.size()) * static_cast<double>(window.total_minutes()));
}

inline double residential_exposure(std::span<const DeviceDwell> dwells, bool flood_prone, const StudyWindow& window,
                                   ResidentialMode mode = ResidentialMode::CbgGated) {
  if (dwells.empty()) throw StatsError("residential_exposure: no devices homed in CBG");
  if (mode == ResidentialMode::CbgGated && !flood_prone) return 0.0;
  double num = 0;
  for (const auto& d : dwells) num += mode == ResidentialMode::CbgGated ? d.home_min : d.home_flood_min;
  return num / (static_cast<double>(dwells.size()) * static_cast<double>(window.total_minutes()));
}

struct ExposureRecord {
  std::string cbg_id;
  std::string county_id;
  std::string state;
  bool flood_prone = false;
  std::size_t n_devices = 0;
  double e_r = 0;
  double e_m = 0;

  friend bool operator==(const ExposureRecord&, const ExposureRecord&) = default;
};

/// One record per CBG with at least one resident device, ordered by cbg_id.
inline std::vector<ExposureRecord> compute_exposures(std::span<const DeviceDwell> dwells, const geo::CbgIndex& cbgs,
                                                     const StudyWindow& window,
                                                     ResidentialMode mode = ResidentialMode::CbgGated) {
  std::map<std::string_view, std::vector<DeviceDwell>> by_home;
  for (const auto& d : dwells) by_home[d.home_cbg].push_back(d);

  std::vector<ExposureRecord> out;
  for (auto& [cbg_id, group] : by_home) {
    std::sort(group.begin(), group.end(),
              [](const DeviceDwell& a, const DeviceDwell& b) { return a.device_id < b.device_id; });
    const CbgRecord* rec = cbgs.find(cbg_id);
    if (!rec) throw IngestError("home CBG '" + std::string(cbg_id) + "' is not in the CBG table");
    ExposureRecord e;
    e.cbg_id = rec->cbg_id;
    e.county_id = rec->county_id;
    e.state = rec->state;
    e.flood_prone = rec->flood_prone;
    e.n_devices = group.size();
    e.e_r = residential_exposure(group, rec->flood_prone, window, mode);
    e.e_m = mobility_exposure(group, window);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace floodmob::exposure
