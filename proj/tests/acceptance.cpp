// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "floodmob/overlay.hpp"
#include "floodmob/pipeline.hpp"
#include "floodmob/stats.hpp"
#include "floodmob/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace floodmob;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail.str("");
      pass = false;
      detail << what << "; ";
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

pipeline::RunConfig config_for(const fs::path& scenario, const fs::path& out, unsigned workers = 1) {
  pipeline::RunConfig cfg;
  pipeline::apply_settings(cfg, pipeline::read_config_file(scenario / "run.cfg"), scenario);
  cfg.out_dir = out;
  cfg.workers = workers;
  return cfg;
}

// Runs the full pipeline through the command-line tool when it was built,
// otherwise through the library entry point.
void run_pipeline_cmd(const fs::path& scenario, const fs::path& out, unsigned workers) {
#ifdef FLOODMOB_CLI_PATH
  const auto r = testutil::run(std::string(FLOODMOB_CLI_PATH) + " pipeline --config " +
                               testutil::quote(scenario / "run.cfg") + " --out " + testutil::quote(out) +
                               " --workers " + std::to_string(workers));
  if (r.status != 0) throw std::runtime_error("pipeline exited with " + std::to_string(r.status) + ": " + r.output);
#else
  pipeline::run_pipeline(config_for(scenario, out, workers));
#endif
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = testutil::read_text(e.path());
  return out;
}

double boost_p(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double mx = oracle::mean(x), my = oracle::mean(y);
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// ---------------------------------------------------------------------------

Outcome ac1_spatial_join() {
  Outcome o;
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> centre(0, 80), where(-2, 82);
  std::vector<oracle::Poly> ref;
  std::vector<geo::PolygonGeom> polys;
  for (int i = 0; i < 1000; ++i) {
    const double cx = centre(rng), cy = centre(rng);
    auto star = oracle::random_star(rng, cx, cy, 1.5, 6 + i % 14);
    geo::Ring outer;
    for (auto v : star.outer) outer.push_back({v.x, v.y});
    std::vector<geo::Ring> holes;
    if (i % 5 == 0) {
      auto hole = oracle::random_star(rng, cx, cy, 0.5, 5);  // within the star's minimum radius
      geo::Ring h;
      for (auto v : hole.outer) h.push_back({v.x, v.y});
      holes.push_back(geo::close_ring(h));
      star.holes.push_back(hole.outer);
    }
    polys.push_back(geo::PolygonGeom::make(geo::close_ring(outer), holes));
    ref.push_back(std::move(star));
  }
  std::vector<geo::GeoPoint> pts;
  pts.reserve(100000);
  for (int i = 0; i < 100000; ++i) pts.push_back({where(rng), where(rng)});

  auto t0 = Clock::now();
  const geo::FloodplainMap map(polys);
  const auto indexed = geo::classify_points(pts, map, 1);
  const double t_indexed = seconds_since(t0);

  t0 = Clock::now();
  std::vector<std::uint8_t> scan(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (const auto& g : polys)
      if (geo::point_in_polygon(pts[i], g)) {
        scan[i] = 1;
        break;
      }
  const double t_scan = seconds_since(t0);

  std::size_t mismatches = 0, inside = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const bool truth = oracle::contains_any(ref, {pts[i].lon, pts[i].lat});
    inside += truth;
    if ((indexed[i] != 0) != truth) ++mismatches;
  }
  const double speedup = t_scan / std::max(t_indexed, 1e-9);
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatches vs oracle");
  o.require(t_indexed < 10.0, "indexed run took " + std::to_string(t_indexed) + " s");
  o.require(speedup >= 10.0, "speedup only " + std::to_string(speedup) + "x");
  if (o.pass)
    o.detail << "100000 points x 1000 polygons, " << inside << " inside, 0 mismatches; indexed " << t_indexed
             << " s, scan " << t_scan << " s, speedup " << speedup << "x";
  return o;
}

Outcome ac2_oracle_equivalence() {
  Outcome o;
  std::size_t compared = 0;
  double worst = 0;
  for (const auto& name : synth::preset_names()) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      testutil::TempDir scenario("ac2"), out("ac2_out");
      const auto m = synth::generate(synth::preset(name, seed), scenario.path());
      pipeline::run_exposure_only(config_for(scenario.path(), out.path()));
      const auto got = report::read_exposure(out / "exposure.csv");
      o.require(got.size() == m.cbgs.size(), name + " seed " + std::to_string(seed) + ": CBG count differs");
      if (got.size() != m.cbgs.size()) continue;
      for (std::size_t i = 0; i < got.size(); ++i) {
        o.require(got[i].cbg_id == m.cbgs[i].cbg_id, "cbg order differs");
        worst = std::max({worst, std::fabs(got[i].e_r - m.cbgs[i].e_r), std::fabs(got[i].e_m - m.cbgs[i].e_m)});
        ++compared;
      }
    }
  }
  o.require(worst <= 1e-12, "max abs error " + std::to_string(worst));
  if (o.pass) o.detail << "3 presets x 5 seeds, " << compared << " CBGs, max abs error " << worst;
  return o;
}

Outcome ac3_bounds_and_gating() {
  Outcome o;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0, 1);
  std::size_t device_weeks = 0, cbgs = 0, gated = 0;
  for (int scenario_no = 0; device_weeks < 10000; ++scenario_no) {
    synth::ScenarioSpec s;
    s.seed = 1000 + static_cast<std::uint64_t>(scenario_no);
    s.n_states = 1 + static_cast<std::size_t>(u(rng) * 3);
    s.n_counties = s.n_states + static_cast<std::size_t>(u(rng) * 4);
    s.n_cbgs_per_county = 2 + static_cast<std::size_t>(u(rng) * 8);
    s.n_devices_per_cbg = 5 + static_cast<std::size_t>(u(rng) * 20);
    s.flood_fraction = u(rng);
    for (int p = 0; p < 2; ++p)
      s.group_profiles.push_back({.name = "G" + std::to_string(p), .home_fraction = 0.5 * u(rng),
                                  .flood_mobility_fraction = 0.15 * u(rng)});
    testutil::TempDir scenario("ac3"), out("ac3_out");
    synth::generate(s, scenario.path());
    for (auto mode : {exposure::ResidentialMode::CbgGated, exposure::ResidentialMode::StopGated}) {
      auto cfg = config_for(scenario.path(), out.path());
      cfg.mode = mode;
      pipeline::run_exposure_only(cfg);
      for (const auto& e : report::read_exposure(out / "exposure.csv")) {
        o.require(e.e_r >= 0 && e.e_r <= 1, e.cbg_id + ": e_r out of [0,1]");
        o.require(e.e_m >= 0 && e.e_m <= 1, e.cbg_id + ": e_m out of [0,1]");
        if (mode == exposure::ResidentialMode::CbgGated) {
          ++cbgs;
          device_weeks += e.n_devices;
          if (!e.flood_prone) {
            ++gated;
            o.require(e.e_r == 0.0, e.cbg_id + ": e_r nonzero outside flood-prone CBG");
          }
        }
      }
    }
  }
  if (o.pass)
    o.detail << device_weeks << " device-weeks over " << cbgs << " CBGs in [0,1]; " << gated
             << " non-flood-prone CBGs all e_r = 0";
  return o;
}

Outcome ac4_cov() {
  Outcome o;
  const std::vector<double> flat = {0.3, 0.3, 0.3, 0.3, 0.3};
  o.require(stats::coefficient_of_variation(flat) == 0.0, "constant vector CoV not exactly 0");
  const std::vector<double> q = {0.1, 0.2, 0.3};
  const double c = stats::coefficient_of_variation(q);
  o.require(std::fabs(c - 0.5) <= 1e-12, "CoV{0.1,0.2,0.3} = " + std::to_string(c));
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> v(0.001, 3), k(1e-3, 1e3);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(2 + i % 40);
    for (auto& e : x) e = v(rng);
    const double scale = k(rng);
    auto y = x;
    for (auto& e : y) e *= scale;
    worst = std::max(worst, std::fabs(stats::coefficient_of_variation(x) - stats::coefficient_of_variation(y)));
  }
  o.require(worst < 1e-12, "rescaling changed CoV by " + std::to_string(worst));
  if (o.pass) o.detail << "constant -> 0, {0.1,0.2,0.3} -> " << c << ", max rescaling change " << worst;
  return o;
}

Outcome ac5_welch() {
  Outcome o;
  const std::vector<double> a = {1, 2, 3}, b = {2, 3, 4};
  const auto r = stats::welch_t(a, b);
  o.require(std::fabs(r.t_stat + 1.224745) <= 1e-6, "t = " + std::to_string(r.t_stat));
  o.require(std::fabs(r.df - 4.0) <= 1e-9, "df = " + std::to_string(r.df));
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> n(2, 60);
  std::uniform_real_distribution<double> mu(-1, 1), sd(0.1, 3);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    std::normal_distribution<double> da(mu(rng), sd(rng)), db(mu(rng), sd(rng));
    std::vector<double> x(n(rng)), y(n(rng));
    for (auto& e : x) e = da(rng);
    for (auto& e : y) e = db(rng);
    const long double vx = oracle::sample_sd(x) * oracle::sample_sd(x) / x.size();
    const long double vy = oracle::sample_sd(y) * oracle::sample_sd(y) / y.size();
    const double t = static_cast<double>((oracle::mean(x) - oracle::mean(y)) / std::sqrt(vx + vy));
    const double df =
        static_cast<double>((vx + vy) * (vx + vy) / (vx * vx / (x.size() - 1) + vy * vy / (y.size() - 1)));
    worst = std::max(worst, std::fabs(stats::welch_t(x, y).p_value - boost_p(t, df)));
  }
  o.require(worst <= 1e-6, "p differs from reference by " + std::to_string(worst));
  if (o.pass)
    o.detail << "t = " << r.t_stat << ", df = " << r.df << "; 100 random pairs, max |dp| " << worst;
  return o;
}

Outcome ac6_ols() {
  Outcome o;
  const std::vector<double> x = {0, 1, 2, 3, 4}, y = {-1, 2, 5, 8, 11};
  const auto exact = stats::ols_fit(x, y);
  o.require(exact.slope == 3.0 && exact.intercept == -1.0, "collinear fit not exact");
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(-10, 10);
  std::normal_distribution<double> noise(0, 2);
  std::vector<double> xs(50), ys(50);
  for (int i = 0; i < 50; ++i) {
    xs[i] = u(rng);
    ys[i] = -0.4 * xs[i] + 2.5 + noise(rng);
  }
  const auto fit = stats::ols_fit(xs, ys);
  const auto ref = oracle::normal_equations(xs, ys);
  const double ds = std::fabs(fit.slope - static_cast<double>(ref.slope));
  const double di = std::fabs(fit.intercept - static_cast<double>(ref.intercept));
  double sr = 0, srx = 0;
  for (int i = 0; i < 50; ++i) {
    const double e = ys[i] - (fit.slope * xs[i] + fit.intercept);
    sr += e;
    srx += e * xs[i];
  }
  o.require(ds <= 1e-9 && di <= 1e-9, "differs from normal equations");
  o.require(std::fabs(sr) <= 1e-9 && std::fabs(srx) <= 1e-9, "residuals not orthogonal");
  if (o.pass)
    o.detail << "collinear exact; 50 points |dslope| " << ds << " |dintercept| " << di << "; sum e " << sr
             << ", sum e*x " << srx;
  return o;
}

Outcome ac7_disparity_flip() {
  Outcome o;
  const auto t0 = Clock::now();
  testutil::TempDir scenario("ac7"), out("ac7_out");
  synth::generate(synth::disparity_scenario(1), scenario.path());
  run_pipeline_cmd(scenario.path(), out.path(), 1);
  const double elapsed = seconds_since(t0);

  std::map<std::string, std::size_t> devices;
  {
    const auto exposures = report::read_exposure(out / "exposure.csv");
    const auto labels = report::read_cohorts(out / "cohorts.csv");
    std::map<std::string, std::string> income;
    for (const auto& l : labels) income[l.cbg_id] = std::string(cohort::to_string(l.income_class));
    for (const auto& e : exposures) devices[income[e.cbg_id]] += e.n_devices;
  }
  const auto table = csv::read_file(out / "ttests.csv");
  bool saw_m = false, saw_r = false;
  std::ostringstream found;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f[0] != "income") continue;
    // f: grouping, kind, group_a, group_b, n_a, n_b, mean_a, mean_b, t, df, p
    const bool a_is_low = f[2] == "low";
    const double mean_low = std::stod(a_is_low ? f[6] : f[7]);
    const double mean_high = std::stod(a_is_low ? f[7] : f[6]);
    const double p = std::stod(f[10]);
    found << f[1] << ": low " << mean_low << " vs high " << mean_high << " p=" << p << "; ";
    if (f[1] == "mobility") {
      saw_m = true;
      o.require(mean_low > mean_high, "mobility exposure of the low-income cohort is not higher");
      o.require(p < 0.001, "mobility p = " + f[10]);
    } else {
      saw_r = true;
      o.require(mean_low < mean_high, "residential exposure of the low-income cohort is not lower");
      o.require(p < 0.001, "residential p = " + f[10]);
    }
  }
  o.require(saw_m && saw_r, "income t-tests missing from ttests.csv");
  o.require(devices["low"] >= 200 && devices["high"] >= 200, "fewer than 200 devices per cohort");
  o.require(elapsed < 60.0, "took " + std::to_string(elapsed) + " s");
  if (o.pass)
    o.detail << found.str() << "devices low " << devices["low"] << ", high " << devices["high"] << "; " << elapsed
             << " s";
  return o;
}

Outcome ac8_positive_association() {
  Outcome o;
  std::ostringstream fits;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    testutil::TempDir scenario("ac8"), out("ac8_out");
    const auto spec = synth::multi_state_scenario(seed);
    synth::generate(spec, scenario.path());
    pipeline::run_pipeline(config_for(scenario.path(), out.path()));
    const auto j = nlohmann::json::parse(testutil::read_text(out / "regression.json"));
    if (j["slope"].is_null() || j["r_squared"].is_null()) {
      o.require(false, "seed " + std::to_string(seed) + ": no fit");
      continue;
    }
    const double slope = j["slope"].get<double>(), r2 = j["r_squared"].get<double>();
    o.require(slope > 0, "seed " + std::to_string(seed) + ": slope " + std::to_string(slope));
    o.require(r2 > 0.5, "seed " + std::to_string(seed) + ": r^2 " + std::to_string(r2));

    // Both CoVs should rise with the per-state spread the generator was given.
    std::vector<double> spread, xs, ys;
    for (const auto& p : j["points"]) {
      const auto state = p["state"].get<std::string>();
      for (std::size_t i = 0; i < spec.n_states; ++i)
        if (synth::detail::kStates[i] == state) spread.push_back(spec.state_spread[i]);
      xs.push_back(p["x"].get<double>());
      ys.push_back(p["y"].get<double>());
    }
    o.require(xs.size() == spec.n_states, "seed " + std::to_string(seed) + ": states missing from the fit");
    const double rx = pearson(spread, xs), ry = pearson(spread, ys);
    o.require(rx > 0 && ry > 0, "seed " + std::to_string(seed) + ": CoV does not track the state spread");
    fits << "seed " << seed << " slope " << slope << " r2 " << r2 << "; ";
  }
  if (o.pass) o.detail << fits.str();
  return o;
}

Outcome ac9_determinism() {
  Outcome o;
  testutil::TempDir scenario("ac9");
  synth::generate(synth::multi_state_scenario(3), scenario.path());
  std::vector<std::map<std::string, std::string>> runs;
  for (unsigned workers : {1u, 1u, 8u, 8u}) {
    testutil::TempDir out("ac9_out");
    run_pipeline_cmd(scenario.path(), out.path(), workers);
    runs.push_back(dir_contents(out.path()));
  }
  for (std::size_t i = 1; i < runs.size(); ++i)
    o.require(runs[i] == runs[0], "run " + std::to_string(i) + " differs from the first");
  o.require(runs[0].size() >= 10, "only " + std::to_string(runs[0].size()) + " output files");
  if (o.pass) o.detail << runs[0].size() << " files byte-identical across 2 runs at --workers 1 and 2 at --workers 8";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 spatial join vs brute-force oracle", ac1_spatial_join},
      {"AC2 exposure equals generator manifest", ac2_oracle_equivalence},
      {"AC3 exposure bounds and gating", ac3_bounds_and_gating},
      {"AC4 CoV fixtures and scale invariance", ac4_cov},
      {"AC5 Welch t-test fixture and reference p-values", ac5_welch},
      {"AC6 least-squares fixtures", ac6_ols},
      {"AC7 disparity flip end to end", ac7_disparity_flip},
      {"AC8 positive association of state disparities", ac8_positive_association},
      {"AC9 byte-identical output across runs and workers", ac9_determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail.str("");
      o.detail << "exception: " << e.what();
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail.str() << std::endl;
    failed += !o.pass;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
