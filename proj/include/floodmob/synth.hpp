#pragma once

// Synthetic scenario generator. CBGs are axis-aligned grid cells, floodplains
// are rectangles strictly inside chosen cells, and every stay point sits at
// least 0.001 degrees away from any cell or floodplain edge, so the CBG and
// floodplain membership of each stay is known exactly. The manifest carries
// expected exposures as integer minute sums, computed straight from the
// per-device ledger rather than through the exposure engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "floodmob/error.hpp"
#include "floodmob/format.hpp"
#include "floodmob/geo.hpp"
#include "floodmob/geojson.hpp"
#include "floodmob/records.hpp"

namespace floodmob::synth {

using json = nlohmann::json;

/// Random source: std::mt19937_64 seeded with the scenario seed. Its output
/// sequence is fixed by the C++ standard; the draws below are built from raw
/// 64-bit outputs (no std:: distributions, whose algorithms vary by library).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  std::int64_t between(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct CohortProfile {
  std::string name;
  double home_fraction = 0.5;             // mean share of the week at home
  double flood_mobility_fraction = 0.05;  // mean share at flood-prone stops outside home, same county
  std::optional<double> flood_fraction = std::nullopt;  // overrides the scenario flood_fraction for this cohort
  double median_income = 60000;
  double share_white = 0.6;
  double share_black = 0.2;
  double share_asian = 0.1;
  double low_attainment = 0.3;  // share of pop_25plus with lower attainment

  /// Mean residential exposure implied by the profile (cbg-gated).
  double expected_residential_mean(double scenario_flood_fraction) const {
    return flood_fraction.value_or(scenario_flood_fraction) * home_fraction;
  }
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::size_t n_states = 1;
  std::size_t n_counties = 2;  // assigned to states round-robin
  std::size_t n_cbgs_per_county = 6;
  std::size_t n_devices_per_cbg = 10;
  double flood_fraction = 0.5;
  std::vector<CohortProfile> group_profiles;  // CBG j of a county uses profile j % size
  std::vector<double> state_spread;           // per-state CBG-level heterogeneity; missing = 0
  double home_jitter = 0.1;                   // device share = CBG mean * U[1-j, 1+j]
  double mobility_jitter = 0.5;
  double partial_observation_fraction = 0.3;  // devices observed for less than the full window
  double min_observed_fraction = 0.9;
  double cross_county_fraction = 0.02;  // mean share spent in another county
  double unlocated_fraction = 0.01;     // mean share spent outside every CBG
  bool emit_stay_cbg = false;           // write the stay_cbg column
  StudyWindow window;

  void validate() const {
    auto frac = [](double v, const char* what) {
      if (!(v >= 0.0 && v <= 1.0)) throw SynthError(std::string(what) + " must be in [0,1]");
    };
    frac(flood_fraction, "flood_fraction");
    frac(home_jitter, "home_jitter");
    frac(mobility_jitter, "mobility_jitter");
    frac(partial_observation_fraction, "partial_observation_fraction");
    frac(min_observed_fraction, "min_observed_fraction");
    frac(cross_county_fraction, "cross_county_fraction");
    frac(unlocated_fraction, "unlocated_fraction");
    if (n_states == 0 || n_counties == 0 || n_cbgs_per_county == 0)
      throw SynthError("n_states, n_counties and n_cbgs_per_county must be positive");
    if (n_states > 50) throw SynthError("at most 50 states");
    if (n_cbgs_per_county > 9999) throw SynthError("at most 9999 CBGs per county");
    if (group_profiles.empty()) throw SynthError("at least one group profile is required");
    for (const auto& p : group_profiles) {
      frac(p.home_fraction, "home_fraction");
      frac(p.flood_mobility_fraction, "flood_mobility_fraction");
      if (p.flood_fraction) frac(*p.flood_fraction, "profile flood_fraction");
      frac(p.share_white, "share_white");
      frac(p.share_black, "share_black");
      frac(p.share_asian, "share_asian");
      frac(p.low_attainment, "low_attainment");
      if (p.median_income < 0) throw SynthError("median_income must be non-negative");
    }
    for (double s : state_spread)
      if (!(s >= 0.0 && s < 1.0)) throw SynthError("state_spread values must be in [0,1)");
  }
};

// ---------------------------------------------------------------------------
// Manifest

struct LedgerStay {
  std::size_t row = 0;  // 0-based data row in stays.csv
  std::string category;
  std::int64_t dwell_min = 0;
};

struct DeviceLedger {
  std::string device_id;
  std::string home_cbg;
  std::int64_t observed_min = 0;
  std::int64_t home_min = 0;
  std::int64_t home_flood_min = 0;
  std::int64_t flood_mobility_min = 0;
  std::int64_t other_intra_county_min = 0;
  std::int64_t cross_county_min = 0;
  std::int64_t unlocated_min = 0;
  std::vector<LedgerStay> stays;
};

struct ExpectedExposure {
  std::string cbg_id;
  std::string county_id;
  std::string state;
  std::string profile;
  bool flood_prone = false;
  std::size_t n_devices = 0;
  std::int64_t mobility_num = 0;    // sum of flood mobility minutes
  std::int64_t home_num = 0;        // sum of home minutes
  std::int64_t home_flood_num = 0;  // sum of home minutes at floodplain stops
  std::int64_t denominator = 0;     // n_devices * window minutes
  double e_m = 0;
  double e_r = 0;             // cbg-gated
  double e_r_stop_gated = 0;  // stop-gated
};

struct ExpectedLabels {
  std::string cbg_id;
  bool race_white = false;
  bool race_black = false;
  bool race_asian = false;
  std::string income_class;
  std::string education_class;
};

struct ExpectedDisparity {
  std::string state;
  std::string exposure_kind;
  double threshold_T = 0;
  std::size_t n_exceeders = 0;
  std::optional<double> cov;
};

struct GroundTruthManifest {
  std::uint64_t seed = 0;
  StudyWindow window;
  std::vector<ExpectedExposure> cbgs;  // CBGs with >= 1 device, by cbg_id
  std::vector<DeviceLedger> devices;   // by device_id
  std::vector<ExpectedLabels> labels;  // every CBG, by cbg_id
  std::vector<ExpectedDisparity> disparity;

  const ExpectedExposure* find(const std::string& cbg_id) const {
    auto it = std::lower_bound(cbgs.begin(), cbgs.end(), cbg_id,
                               [](const ExpectedExposure& e, const std::string& id) { return e.cbg_id < id; });
    return it != cbgs.end() && it->cbg_id == cbg_id ? &*it : nullptr;
  }
};

inline json to_json(const CohortProfile& p) {
  json j = {{"name", p.name},
            {"home_fraction", p.home_fraction},
            {"flood_mobility_fraction", p.flood_mobility_fraction},
            {"median_income", p.median_income},
            {"share_white", p.share_white},
            {"share_black", p.share_black},
            {"share_asian", p.share_asian},
            {"low_attainment", p.low_attainment}};
  if (p.flood_fraction) j["flood_fraction"] = *p.flood_fraction;
  return j;
}

inline json to_json(const ScenarioSpec& s) {
  json profiles = json::array();
  for (const auto& p : s.group_profiles) profiles.push_back(to_json(p));
  return {{"seed", s.seed},
          {"n_states", s.n_states},
          {"n_counties", s.n_counties},
          {"n_cbgs_per_county", s.n_cbgs_per_county},
          {"n_devices_per_cbg", s.n_devices_per_cbg},
          {"flood_fraction", s.flood_fraction},
          {"group_profiles", profiles},
          {"state_spread", s.state_spread},
          {"home_jitter", s.home_jitter},
          {"mobility_jitter", s.mobility_jitter},
          {"partial_observation_fraction", s.partial_observation_fraction},
          {"min_observed_fraction", s.min_observed_fraction},
          {"cross_county_fraction", s.cross_county_fraction},
          {"unlocated_fraction", s.unlocated_fraction},
          {"emit_stay_cbg", s.emit_stay_cbg},
          {"window_start", s.window.start()},
          {"window_end", s.window.end()}};
}

/// Missing keys keep their defaults; unknown keys are an error.
inline ScenarioSpec spec_from_json(const json& j) {
  static const std::vector<std::string> known = {
      "seed", "n_states", "n_counties", "n_cbgs_per_county", "n_devices_per_cbg", "flood_fraction",
      "group_profiles", "state_spread", "home_jitter", "mobility_jitter", "partial_observation_fraction",
      "min_observed_fraction", "cross_county_fraction", "unlocated_fraction", "emit_stay_cbg", "window_start",
      "window_end"};
  if (!j.is_object()) throw SynthError("scenario spec must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw SynthError("unknown scenario spec key '" + key + "'");
  try {
    ScenarioSpec s;
    s.seed = j.value("seed", s.seed);
    s.n_states = j.value("n_states", s.n_states);
    s.n_counties = j.value("n_counties", s.n_counties);
    s.n_cbgs_per_county = j.value("n_cbgs_per_county", s.n_cbgs_per_county);
    s.n_devices_per_cbg = j.value("n_devices_per_cbg", s.n_devices_per_cbg);
    s.flood_fraction = j.value("flood_fraction", s.flood_fraction);
    s.state_spread = j.value("state_spread", s.state_spread);
    s.home_jitter = j.value("home_jitter", s.home_jitter);
    s.mobility_jitter = j.value("mobility_jitter", s.mobility_jitter);
    s.partial_observation_fraction = j.value("partial_observation_fraction", s.partial_observation_fraction);
    s.min_observed_fraction = j.value("min_observed_fraction", s.min_observed_fraction);
    s.cross_county_fraction = j.value("cross_county_fraction", s.cross_county_fraction);
    s.unlocated_fraction = j.value("unlocated_fraction", s.unlocated_fraction);
    s.emit_stay_cbg = j.value("emit_stay_cbg", s.emit_stay_cbg);
    s.window = StudyWindow::make(j.value("window_start", s.window.start()), j.value("window_end", s.window.end()));
    if (j.contains("group_profiles")) {
      for (const auto& pj : j.at("group_profiles")) {
        CohortProfile p;
        p.name = pj.value("name", std::string("G") + std::to_string(s.group_profiles.size()));
        p.home_fraction = pj.value("home_fraction", p.home_fraction);
        p.flood_mobility_fraction = pj.value("flood_mobility_fraction", p.flood_mobility_fraction);
        if (pj.contains("flood_fraction")) p.flood_fraction = pj.at("flood_fraction").get<double>();
        p.median_income = pj.value("median_income", p.median_income);
        p.share_white = pj.value("share_white", p.share_white);
        p.share_black = pj.value("share_black", p.share_black);
        p.share_asian = pj.value("share_asian", p.share_asian);
        p.low_attainment = pj.value("low_attainment", p.low_attainment);
        s.group_profiles.push_back(std::move(p));
      }
    } else {
      s.group_profiles.push_back(CohortProfile{.name = "G0"});
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw SynthError(std::string("scenario spec: ") + e.what());
  } catch (const ConfigError& e) {
    throw SynthError(std::string("scenario spec: ") + e.what());
  }
}

inline json to_json(const GroundTruthManifest& m) {
  json cbgs = json::array();
  for (const auto& c : m.cbgs)
    cbgs.push_back({{"cbg_id", c.cbg_id},
                    {"county_id", c.county_id},
                    {"state", c.state},
                    {"profile", c.profile},
                    {"flood_prone", c.flood_prone},
                    {"n_devices", c.n_devices},
                    {"mobility_num", c.mobility_num},
                    {"home_num", c.home_num},
                    {"home_flood_num", c.home_flood_num},
                    {"denominator", c.denominator},
                    {"e_m", c.e_m},
                    {"e_r", c.e_r},
                    {"e_r_stop_gated", c.e_r_stop_gated}});
  json devices = json::array();
  for (const auto& d : m.devices) {
    json stays = json::array();
    for (const auto& s : d.stays) stays.push_back({s.row, s.category, s.dwell_min});
    devices.push_back({{"device_id", d.device_id},
                       {"home_cbg", d.home_cbg},
                       {"observed_min", d.observed_min},
                       {"home_min", d.home_min},
                       {"home_flood_min", d.home_flood_min},
                       {"flood_mobility_min", d.flood_mobility_min},
                       {"other_intra_county_min", d.other_intra_county_min},
                       {"cross_county_min", d.cross_county_min},
                       {"unlocated_min", d.unlocated_min},
                       {"stays", stays}});
  }
  json labels = json::array();
  for (const auto& l : m.labels)
    labels.push_back({{"cbg_id", l.cbg_id},
                      {"race_white", l.race_white},
                      {"race_black", l.race_black},
                      {"race_asian", l.race_asian},
                      {"income_class", l.income_class},
                      {"education_class", l.education_class}});
  json disparity = json::array();
  for (const auto& d : m.disparity)
    disparity.push_back({{"state", d.state},
                         {"exposure_kind", d.exposure_kind},
                         {"threshold_T", d.threshold_T},
                         {"n_exceeders", d.n_exceeders},
                         {"cov", d.cov ? json(*d.cov) : json(nullptr)}});
  return {{"schema", "floodmob-manifest/1"},
          {"seed", m.seed},
          {"window", {{"start", m.window.start()}, {"end", m.window.end()}, {"total_minutes", m.window.total_minutes()}}},
          {"cbgs", cbgs},
          {"devices", devices},
          {"cohort_labels", labels},
          {"disparity", disparity}};
}

inline GroundTruthManifest manifest_from_json(const json& j) {
  GroundTruthManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.window = StudyWindow::make(j.at("window").at("start").get<std::int64_t>(),
                               j.at("window").at("end").get<std::int64_t>());
  for (const auto& c : j.at("cbgs")) {
    ExpectedExposure e;
    e.cbg_id = c.at("cbg_id");
    e.county_id = c.at("county_id");
    e.state = c.at("state");
    e.profile = c.at("profile");
    e.flood_prone = c.at("flood_prone");
    e.n_devices = c.at("n_devices");
    e.mobility_num = c.at("mobility_num");
    e.home_num = c.at("home_num");
    e.home_flood_num = c.at("home_flood_num");
    e.denominator = c.at("denominator");
    e.e_m = c.at("e_m");
    e.e_r = c.at("e_r");
    e.e_r_stop_gated = c.at("e_r_stop_gated");
    m.cbgs.push_back(std::move(e));
  }
  for (const auto& d : j.at("devices")) {
    DeviceLedger l;
    l.device_id = d.at("device_id");
    l.home_cbg = d.at("home_cbg");
    l.observed_min = d.at("observed_min");
    l.home_min = d.at("home_min");
    l.home_flood_min = d.at("home_flood_min");
    l.flood_mobility_min = d.at("flood_mobility_min");
    l.other_intra_county_min = d.at("other_intra_county_min");
    l.cross_county_min = d.at("cross_county_min");
    l.unlocated_min = d.at("unlocated_min");
    for (const auto& s : d.at("stays")) l.stays.push_back({s.at(0), s.at(1), s.at(2)});
    m.devices.push_back(std::move(l));
  }
  for (const auto& c : j.at("cohort_labels"))
    m.labels.push_back({c.at("cbg_id"), c.at("race_white"), c.at("race_black"), c.at("race_asian"),
                        c.at("income_class"), c.at("education_class")});
  for (const auto& d : j.at("disparity")) {
    ExpectedDisparity e{d.at("state"), d.at("exposure_kind"), d.at("threshold_T"), d.at("n_exceeders"), {}};
    if (!d.at("cov").is_null()) e.cov = d.at("cov").get<double>();
    m.disparity.push_back(std::move(e));
  }
  return m;
}

inline GroundTruthManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SynthError(path.string() + ": cannot open manifest");
  return manifest_from_json(json::parse(in));
}

// ---------------------------------------------------------------------------
// Generation

struct GeneratedScenario {
  ScenarioSpec spec;
  std::vector<CbgRecord> cbgs;  // by cbg_id; flood_prone set to ground truth
  std::vector<std::string> cbg_profile;  // parallel to cbgs
  std::vector<geo::PolygonGeom> floodplain;
  std::vector<HomeAssignment> homes;  // by device_id
  std::vector<StayRecord> stays;      // file order; stay_cbg holds the ground truth
  GroundTruthManifest manifest;
};

namespace detail {

inline constexpr const char* kStates[] = {"TX", "LA", "MS", "AL", "FL", "GA", "SC", "NC", "VA", "MD",
                                          "DE", "NJ", "NY", "CT", "RI", "MA", "NH", "ME", "CA", "OR",
                                          "WA", "PA", "DC", "HI", "AK", "OH", "MI", "IL", "IN", "WI",
                                          "MN", "IA", "MO", "AR", "TN", "KY", "WV", "OK", "KS", "NE",
                                          "SD", "ND", "MT", "WY", "CO", "NM", "AZ", "UT", "NV", "ID"};

// Grid in micro-degrees. Cell (county c, column j) spans
// [kLon0 + j*kCell, +kCell] x [kLat0 + c*kCell, +kCell].
inline constexpr std::int64_t kLon0 = -95'000'000;
inline constexpr std::int64_t kLat0 = 29'000'000;
inline constexpr std::int64_t kCell = 10'000;

inline double deg(std::int64_t micro) { return static_cast<double>(micro) / 1e6; }

// Floodplain rectangle inside a flood-prone cell, as offsets.
inline constexpr std::int64_t kFloodX0 = 1000, kFloodX1 = 5000, kFloodY0 = 1000, kFloodY1 = 9000;
// Stop-point sampling boxes (offsets), each 500 from the floodplain edge.
inline constexpr std::int64_t kInFloodX0 = 1500, kInFloodX1 = 4500, kInFloodY0 = 1500, kInFloodY1 = 8500;
inline constexpr std::int64_t kDryX0 = 5500, kDryX1 = 9000, kDryY0 = 1000, kDryY1 = 9000;

struct Cell {
  std::size_t county = 0;
  std::size_t column = 0;
};

inline std::string state_of_county(std::size_t c, std::size_t n_states) { return kStates[c % n_states]; }

inline std::string county_id(std::size_t c, std::size_t n_states) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%02zu%03zu", c % n_states + 1, c / n_states + 1);
  return buf;
}

inline std::string cbg_id(const std::string& county, std::size_t column) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%07zu", column + 1);
  return county + buf;
}

inline geo::GeoPoint point_in_cell(Rng& rng, Cell cell, bool in_flood) {
  const std::int64_t x0 = kLon0 + static_cast<std::int64_t>(cell.column) * kCell;
  const std::int64_t y0 = kLat0 + static_cast<std::int64_t>(cell.county) * kCell;
  if (in_flood)
    return {deg(x0 + rng.between(kInFloodX0, kInFloodX1)), deg(y0 + rng.between(kInFloodY0, kInFloodY1))};
  return {deg(x0 + rng.between(kDryX0, kDryX1)), deg(y0 + rng.between(kDryY0, kDryY1))};
}

// Splits `total` minutes into 1-3 positive integer pieces.
inline std::vector<std::int64_t> split_minutes(Rng& rng, std::int64_t total) {
  if (total <= 0) return {};
  const auto pieces = static_cast<std::int64_t>(std::min<std::int64_t>(total, 1 + rng.between(0, 2)));
  std::vector<std::int64_t> cuts;
  for (std::int64_t k = 1; k < pieces; ++k) cuts.push_back(rng.between(1, total - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<std::int64_t> out;
  std::int64_t prev = 0;
  for (auto c : cuts) {
    out.push_back(c - prev);
    prev = c;
  }
  out.push_back(total - prev);
  return out;
}

inline std::int64_t minutes_of(double fraction, std::int64_t window) {
  return static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(window)));
}

}  // namespace detail

/// Builds the scenario in memory. Throws SynthError if a device's drawn dwell
/// does not fit into its observed time.
inline GeneratedScenario build(const ScenarioSpec& spec) {
  using namespace detail;
  spec.validate();
  Rng rng(spec.seed);
  GeneratedScenario out;
  out.spec = spec;
  const std::int64_t T = spec.window.total_minutes();
  const std::size_t n_cols = spec.n_cbgs_per_county;

  // Cells, flood-prone selection and demographics.
  struct CellInfo {
    std::string id, county, state;
    const CohortProfile* profile = nullptr;
    bool flood = false;
    double home_mean = 0, mob_mean = 0;
  };
  std::vector<std::vector<CellInfo>> grid(spec.n_counties, std::vector<CellInfo>(n_cols));
  for (std::size_t c = 0; c < spec.n_counties; ++c) {
    const std::string county = county_id(c, spec.n_states);
    const std::string state = state_of_county(c, spec.n_states);
    const std::size_t state_idx = c % spec.n_states;
    const double spread = state_idx < spec.state_spread.size() ? spec.state_spread[state_idx] : 0.0;
    for (std::size_t j = 0; j < n_cols; ++j) {
      auto& cell = grid[c][j];
      cell.id = cbg_id(county, j);
      cell.county = county;
      cell.state = state;
      cell.profile = &spec.group_profiles[j % spec.group_profiles.size()];
      cell.home_mean = cell.profile->home_fraction * (1.0 + spread * rng.uniform(-1.0, 1.0));
      cell.mob_mean = cell.profile->flood_mobility_fraction * (1.0 + spread * rng.uniform(-1.0, 1.0));
    }
    // Exactly round(f * count) flood-prone cells per profile within the county.
    for (std::size_t p = 0; p < spec.group_profiles.size(); ++p) {
      std::vector<std::size_t> cols;
      for (std::size_t j = p; j < n_cols; j += spec.group_profiles.size()) cols.push_back(j);
      const double f = spec.group_profiles[p].flood_fraction.value_or(spec.flood_fraction);
      const auto k = static_cast<std::size_t>(std::llround(f * static_cast<double>(cols.size())));
      rng.shuffle(cols);
      for (std::size_t i = 0; i < k && i < cols.size(); ++i) grid[c][cols[i]].flood = true;
    }
  }

  std::map<std::string, std::size_t> cbg_pos;
  for (std::size_t c = 0; c < spec.n_counties; ++c) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      const auto& cell = grid[c][j];
      const auto& prof = *cell.profile;
      CbgRecord r;
      r.cbg_id = cell.id;
      r.county_id = cell.county;
      r.state = cell.state;
      const std::int64_t x0 = kLon0 + static_cast<std::int64_t>(j) * kCell;
      const std::int64_t y0 = kLat0 + static_cast<std::int64_t>(c) * kCell;
      r.geometry.push_back(geo::PolygonGeom::rectangle(deg(x0), deg(y0), deg(x0 + kCell), deg(y0 + kCell)));
      r.median_income = std::round(prof.median_income * rng.uniform(0.9, 1.1));
      r.pop_total = rng.between(500, 2000);
      auto share = [&](double s) {
        const double v = std::clamp(s + rng.uniform(-0.05, 0.05), 0.0, 1.0);
        return static_cast<std::int64_t>(std::llround(v * static_cast<double>(r.pop_total)));
      };
      r.pop_white = share(prof.share_white);
      r.pop_black = share(prof.share_black);
      r.pop_asian = share(prof.share_asian);
      r.pop_25plus = static_cast<std::int64_t>(std::llround(0.65 * static_cast<double>(r.pop_total)));
      const double low = std::clamp(prof.low_attainment + rng.uniform(-0.05, 0.05), 0.0, 1.0);
      r.pop_25plus_low_attainment = static_cast<std::int64_t>(std::llround(low * static_cast<double>(r.pop_25plus)));
      r.flood_prone = cell.flood;
      out.cbgs.push_back(std::move(r));
      out.cbg_profile.push_back(prof.name);
      if (cell.flood)
        out.floodplain.push_back(geo::PolygonGeom::rectangle(deg(x0 + kFloodX0), deg(y0 + kFloodY0),
                                                             deg(x0 + kFloodX1), deg(y0 + kFloodY1)));
    }
  }
  {
    std::vector<std::size_t> order(out.cbgs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return out.cbgs[a].cbg_id < out.cbgs[b].cbg_id; });
    std::vector<CbgRecord> cbgs;
    std::vector<std::string> profiles;
    for (auto i : order) {
      cbgs.push_back(std::move(out.cbgs[i]));
      profiles.push_back(std::move(out.cbg_profile[i]));
    }
    out.cbgs = std::move(cbgs);
    out.cbg_profile = std::move(profiles);
  }
  // Offshore floodplain strip below the grid; no CBG covers it.
  const std::int64_t off_y0 = kLat0 - 2 * kCell, off_y1 = kLat0 - kCell;
  const std::int64_t off_x1 = kLon0 + static_cast<std::int64_t>(n_cols) * kCell;
  out.floodplain.push_back(geo::PolygonGeom::rectangle(deg(kLon0), deg(off_y0), deg(off_x1), deg(off_y1)));

  // Devices and stays.
  std::size_t device_counter = 0;
  for (std::size_t c = 0; c < spec.n_counties; ++c) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      const auto& home = grid[c][j];
      std::vector<std::size_t> flood_targets, dry_targets;
      for (std::size_t k = 0; k < n_cols; ++k) {
        if (k == j) continue;
        dry_targets.push_back(k);
        if (grid[c][k].flood) flood_targets.push_back(k);
      }
      for (std::size_t d = 0; d < spec.n_devices_per_cbg; ++d) {
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "d%07zu", device_counter++);
        DeviceLedger led;
        led.device_id = idbuf;
        led.home_cbg = home.id;

        const bool partial = rng.uniform() < spec.partial_observation_fraction;
        led.observed_min = partial ? minutes_of(rng.uniform(spec.min_observed_fraction, 1.0), T) : T;
        const double home_share = home.home_mean * rng.uniform(1.0 - spec.home_jitter, 1.0 + spec.home_jitter);
        const double mob_share = home.mob_mean * rng.uniform(1.0 - spec.mobility_jitter, 1.0 + spec.mobility_jitter);
        led.home_min = std::max<std::int64_t>(1, minutes_of(home_share, T));
        led.flood_mobility_min = flood_targets.empty() ? 0 : minutes_of(mob_share, T);
        led.cross_county_min =
            spec.n_counties > 1 ? minutes_of(spec.cross_county_fraction * rng.uniform(0.0, 2.0), T) : 0;
        led.unlocated_min = minutes_of(spec.unlocated_fraction * rng.uniform(0.0, 2.0), T);
        const std::int64_t fixed = led.home_min + led.flood_mobility_min + led.cross_county_min + led.unlocated_min;
        if (fixed > led.observed_min)
          throw SynthError("unsatisfiable dwell budget for device " + led.device_id + ": needs " +
                           std::to_string(fixed) + " min, observed " + std::to_string(led.observed_min));
        led.other_intra_county_min = dry_targets.empty() ? 0 : led.observed_min - fixed;
        led.observed_min = fixed + led.other_intra_county_min;
        if (home.flood)
          led.home_flood_min = std::llround(static_cast<double>(led.home_min) * rng.uniform(0.3, 0.7));

        struct Pending {
          std::string category;
          std::int64_t dwell;
          geo::GeoPoint p;
          std::optional<std::string> cbg;
        };
        std::vector<Pending> pending;
        auto add = [&](const std::string& cat, std::int64_t minutes, auto&& place) {
          for (auto m : split_minutes(rng, minutes)) {
            auto [p, cbg] = place();
            pending.push_back({cat, m, p, cbg});
          }
        };
        const Cell home_cell{c, j};
        add("home_flood", led.home_flood_min,
            [&] { return std::pair{point_in_cell(rng, home_cell, true), std::optional(home.id)}; });
        add("home", led.home_min - led.home_flood_min,
            [&] { return std::pair{point_in_cell(rng, home_cell, false), std::optional(home.id)}; });
        add("flood_mobility", led.flood_mobility_min, [&] {
          const auto k = flood_targets[rng.below(flood_targets.size())];
          return std::pair{point_in_cell(rng, {c, k}, true), std::optional(grid[c][k].id)};
        });
        add("other_intra_county", led.other_intra_county_min, [&] {
          const auto k = dry_targets[rng.below(dry_targets.size())];
          return std::pair{point_in_cell(rng, {c, k}, false), std::optional(grid[c][k].id)};
        });
        add("cross_county", led.cross_county_min, [&] {
          const std::size_t oc = (c + 1 + rng.below(spec.n_counties - 1)) % spec.n_counties;
          const std::size_t k = rng.below(n_cols);
          const bool in_flood = grid[oc][k].flood;
          return std::pair{point_in_cell(rng, {oc, k}, in_flood), std::optional(grid[oc][k].id)};
        });
        add("unlocated", led.unlocated_min, [&] {
          geo::GeoPoint p{deg(rng.between(kLon0 + 1000, off_x1 - 1000)), deg(rng.between(off_y0 + 1000, off_y1 - 1000))};
          return std::pair{p, std::optional<std::string>{}};
        });

        rng.shuffle(pending);
        std::int64_t cursor = spec.window.start();
        for (auto& st : pending) {
          led.stays.push_back({out.stays.size(), st.category, st.dwell});
          StayRecord s;
          s.device_id = led.device_id;
          s.location = st.p;
          s.start = cursor;
          s.dwell_min = static_cast<double>(st.dwell);
          s.stay_cbg = st.cbg;
          out.stays.push_back(std::move(s));
          cursor += st.dwell;
        }
        out.homes.push_back({led.device_id, led.home_cbg});
        out.manifest.devices.push_back(std::move(led));
      }
    }
  }

  // Expected exposures by direct summation over the ledger.
  std::sort(out.manifest.devices.begin(), out.manifest.devices.end(),
            [](const DeviceLedger& a, const DeviceLedger& b) { return a.device_id < b.device_id; });
  std::sort(out.homes.begin(), out.homes.end(),
            [](const HomeAssignment& a, const HomeAssignment& b) { return a.device_id < b.device_id; });
  std::map<std::string, ExpectedExposure> expected;
  for (std::size_t i = 0; i < out.cbgs.size(); ++i) cbg_pos[out.cbgs[i].cbg_id] = i;
  for (const auto& d : out.manifest.devices) {
    const auto& rec = out.cbgs[cbg_pos.at(d.home_cbg)];
    auto& e = expected[d.home_cbg];
    e.cbg_id = rec.cbg_id;
    e.county_id = rec.county_id;
    e.state = rec.state;
    e.profile = out.cbg_profile[cbg_pos.at(d.home_cbg)];
    e.flood_prone = rec.flood_prone;
    ++e.n_devices;
    e.mobility_num += d.flood_mobility_min;
    e.home_num += d.home_min;
    e.home_flood_num += d.home_flood_min;
  }
  for (auto& [id, e] : expected) {
    e.denominator = static_cast<std::int64_t>(e.n_devices) * T;
    const auto den = static_cast<double>(e.denominator);
    e.e_m = static_cast<double>(e.mobility_num) / den;
    e.e_r = e.flood_prone ? static_cast<double>(e.home_num) / den : 0.0;
    e.e_r_stop_gated = static_cast<double>(e.home_flood_num) / den;
    out.manifest.cbgs.push_back(e);
  }
  out.manifest.seed = spec.seed;
  out.manifest.window = spec.window;

  // Expected cohort labels from the generated demographics.
  {
    double w = 0, b = 0, a = 0, inc = 0, low = 0;
    std::size_t n_pop = 0, n_inc = 0, n_edu = 0;
    for (const auto& r : out.cbgs) {
      if (r.pop_total > 0) {
        ++n_pop;
        w += static_cast<double>(r.pop_white) / static_cast<double>(r.pop_total);
        b += static_cast<double>(r.pop_black) / static_cast<double>(r.pop_total);
        a += static_cast<double>(r.pop_asian) / static_cast<double>(r.pop_total);
      }
      if (r.median_income) {
        ++n_inc;
        inc += *r.median_income;
      }
      if (r.pop_25plus > 0) {
        ++n_edu;
        low += static_cast<double>(r.pop_25plus_low_attainment) / static_cast<double>(r.pop_25plus);
      }
    }
    w /= static_cast<double>(n_pop);
    b /= static_cast<double>(n_pop);
    a /= static_cast<double>(n_pop);
    inc /= static_cast<double>(n_inc);
    low /= static_cast<double>(n_edu);
    for (const auto& r : out.cbgs) {
      const auto pt = static_cast<double>(r.pop_total);
      ExpectedLabels l;
      l.cbg_id = r.cbg_id;
      l.race_white = static_cast<double>(r.pop_white) / pt > w;
      l.race_black = static_cast<double>(r.pop_black) / pt > b;
      l.race_asian = static_cast<double>(r.pop_asian) / pt > a;
      l.income_class = *r.median_income > inc ? "high" : "low";
      l.education_class =
          static_cast<double>(r.pop_25plus_low_attainment) / static_cast<double>(r.pop_25plus) > low
              ? "lower_attainment"
              : "higher";
      out.manifest.labels.push_back(std::move(l));
    }
  }

  // Expected per-state disparity from the expected exposures.
  for (const char* kind : {"residential", "mobility"}) {
    const bool res = std::string(kind) == "residential";
    double sum = 0;
    for (const auto& e : out.manifest.cbgs) sum += res ? e.e_r : e.e_m;
    if (out.manifest.cbgs.empty()) break;
    const double T_global = sum / static_cast<double>(out.manifest.cbgs.size());
    if (!(T_global > 0)) continue;
    std::map<std::string, std::vector<double>> q_by_state;
    for (const auto& e : out.manifest.cbgs) {
      q_by_state[e.state];
      const double v = res ? e.e_r : e.e_m;
      if (v > T_global) q_by_state[e.state].push_back((v - T_global) / T_global);
    }
    for (const auto& [state, q] : q_by_state) {
      ExpectedDisparity d{state, kind, T_global, q.size(), {}};
      if (q.size() >= 2) {
        double m = 0;
        for (double v : q) m += v;
        m /= static_cast<double>(q.size());
        double ss = 0;
        for (double v : q) ss += (v - m) * (v - m);
        d.cov = std::sqrt(ss / static_cast<double>(q.size() - 1)) / m;
      }
      out.manifest.disparity.push_back(std::move(d));
    }
  }
  std::sort(out.manifest.disparity.begin(), out.manifest.disparity.end(),
            [](const ExpectedDisparity& x, const ExpectedDisparity& y) {
              return x.state != y.state ? x.state < y.state : x.exposure_kind > y.exposure_kind;
            });
  return out;
}

struct ScenarioFiles {
  std::filesystem::path floodplain = "floodplain.geojson";
  std::filesystem::path cbg_geometry = "cbg.geojson";
  std::filesystem::path demographics = "demographics.csv";
  std::filesystem::path stays = "stays.csv";
  std::filesystem::path homes = "homes.csv";
  std::filesystem::path manifest = "manifest.json";
  std::filesystem::path config = "run.cfg";
};

/// Writes the five input files, manifest.json and a run.cfg pointing at them.
inline void write_files(const GeneratedScenario& g, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const ScenarioFiles f;
  auto open = [&](const fs::path& name) {
    std::ofstream o(out_dir / name, std::ios::binary);
    if (!o) throw SynthError((out_dir / name).string() + ": cannot write file");
    return o;
  };

  std::vector<std::string> lines;
  for (const auto& poly : g.floodplain) {
    const bool offshore = &poly == &g.floodplain.back();
    lines.push_back(geojson::feature_line({poly}, offshore ? R"({"zone":"VE"})" : R"({"zone":"AE"})"));
  }
  geojson::write_feature_collection(out_dir / f.floodplain, lines);

  lines.clear();
  for (const auto& r : g.cbgs) lines.push_back(geojson::feature_line(r.geometry, json{{"cbg_id", r.cbg_id}}.dump()));
  geojson::write_feature_collection(out_dir / f.cbg_geometry, lines);

  {
    auto o = open(f.demographics);
    o << "cbg_id,county_id,state,median_income,pop_total,pop_white,pop_black,pop_asian,pop_25plus,"
         "pop_25plus_low_attainment\n";
    for (const auto& r : g.cbgs) {
      o << r.cbg_id << ',' << r.county_id << ',' << r.state << ','
        << (r.median_income ? format_shortest(*r.median_income) : "") << ',' << r.pop_total << ',' << r.pop_white
        << ',' << r.pop_black << ',' << r.pop_asian << ',' << r.pop_25plus << ',' << r.pop_25plus_low_attainment
        << '\n';
    }
  }
  {
    auto o = open(f.stays);
    o << "device_id,lon,lat,start_epoch_min,dwell_min" << (g.spec.emit_stay_cbg ? ",stay_cbg" : "") << '\n';
    for (const auto& s : g.stays) {
      o << s.device_id << ',' << format_shortest(s.location.lon) << ',' << format_shortest(s.location.lat) << ','
        << s.start << ',' << format_shortest(s.dwell_min);
      if (g.spec.emit_stay_cbg) o << ',' << s.stay_cbg.value_or("");
      o << '\n';
    }
  }
  {
    auto o = open(f.homes);
    o << "device_id,home_cbg\n";
    for (const auto& h : g.homes) o << h.device_id << ',' << h.home_cbg << '\n';
  }
  {
    auto o = open(f.manifest);
    json m = to_json(g.manifest);
    m["spec"] = to_json(g.spec);
    o << m.dump(1) << '\n';
  }
  {
    auto o = open(f.config);
    o << "# generated scenario, seed " << g.spec.seed << "\n"
      << "floodplain = " << f.floodplain.string() << "\n"
      << "cbg_geometry = " << f.cbg_geometry.string() << "\n"
      << "demographics = " << f.demographics.string() << "\n"
      << "stays = " << f.stays.string() << "\n"
      << "homes = " << f.homes.string() << "\n"
      << "window_start = " << g.spec.window.start() << "\n"
      << "window_end = " << g.spec.window.end() << "\n";
  }
}

inline GroundTruthManifest generate(const ScenarioSpec& spec, const std::filesystem::path& out_dir) {
  auto g = build(spec);
  write_files(g, out_dir);
  return std::move(g.manifest);
}

// ---------------------------------------------------------------------------
// Presets

/// Small mixed scenario exercising every stay category.
inline ScenarioSpec baseline_scenario(std::uint64_t seed) {
  ScenarioSpec s;
  s.seed = seed;
  s.n_states = 2;
  s.n_counties = 4;
  s.n_cbgs_per_county = 6;
  s.n_devices_per_cbg = 8;
  s.flood_fraction = 0.5;
  s.group_profiles = {
      {.name = "P0", .home_fraction = 0.55, .flood_mobility_fraction = 0.08, .median_income = 52000},
      {.name = "P1", .home_fraction = 0.45, .flood_mobility_fraction = 0.12, .median_income = 71000,
       .share_white = 0.4, .share_black = 0.35, .share_asian = 0.15, .low_attainment = 0.45},
  };
  return s;
}

/// Cohort A (low income) moves into flood-prone places more but lives in them
/// less than cohort B (high income): mobility means 0.20 vs 0.05, residential
/// means 0.10 vs 0.40.
inline ScenarioSpec disparity_scenario(std::uint64_t seed) {
  ScenarioSpec s;
  s.seed = seed;
  s.n_states = 1;
  s.n_counties = 4;
  s.n_cbgs_per_county = 10;
  s.n_devices_per_cbg = 100;
  s.flood_fraction = 0.5;
  s.mobility_jitter = 0.3;
  s.group_profiles = {
      {.name = "A", .home_fraction = 0.5, .flood_mobility_fraction = 0.20, .flood_fraction = 0.2,
       .median_income = 35000, .share_white = 0.3, .share_black = 0.5, .share_asian = 0.15,
       .low_attainment = 0.5},
      {.name = "B", .home_fraction = 0.5, .flood_mobility_fraction = 0.05, .flood_fraction = 0.8,
       .median_income = 85000, .share_white = 0.7, .share_black = 0.1, .share_asian = 0.05,
       .low_attainment = 0.2},
  };
  return s;
}

/// Eight states whose CBG-level exposure spread grows with the state index.
/// Every CBG is flood-prone; alternating low/high profiles put the global
/// threshold between the two levels, so each state's exceeders are its
/// high-profile CBGs and both residential and mobility CoV scale with the
/// state's spread.
inline ScenarioSpec multi_state_scenario(std::uint64_t seed) {
  ScenarioSpec s;
  s.seed = seed;
  s.n_states = 8;
  s.n_counties = 16;
  s.n_cbgs_per_county = 12;
  s.n_devices_per_cbg = 20;
  s.flood_fraction = 1.0;
  s.mobility_jitter = 0.2;
  s.partial_observation_fraction = 0.2;
  s.min_observed_fraction = 0.97;
  s.cross_county_fraction = 0.01;
  s.unlocated_fraction = 0.005;
  s.state_spread = {0.04, 0.08, 0.12, 0.16, 0.20, 0.24, 0.28, 0.32};
  s.group_profiles = {
      {.name = "H", .home_fraction = 0.45, .flood_mobility_fraction = 0.15},
      {.name = "L", .home_fraction = 0.09, .flood_mobility_fraction = 0.03},
  };
  return s;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"baseline", "disparity-flip", "multi-state"};
  return names;
}

inline ScenarioSpec preset(const std::string& name, std::uint64_t seed) {
  if (name == "baseline") return baseline_scenario(seed);
  if (name == "disparity-flip") return disparity_scenario(seed);
  if (name == "multi-state") return multi_state_scenario(seed);
  throw SynthError("unknown preset '" + name + "'");
}

}  // namespace floodmob::synth
