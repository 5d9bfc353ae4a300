#pragma once

// Cohort comparisons, per-state disparity and the residential-vs-mobility
// disparity regression, built from exposure records and cohort labels.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "floodmob/cohort.hpp"
#include "floodmob/exposure.hpp"
#include "floodmob/stats.hpp"

namespace floodmob::analysis {

using exposure::ExposureRecord;
using stats::ExposureKind;

enum class Grouping { Race, Income, Education };
inline constexpr Grouping kGroupings[] = {Grouping::Race, Grouping::Income, Grouping::Education};
inline constexpr ExposureKind kKinds[] = {ExposureKind::Residential, ExposureKind::Mobility};

inline std::string_view to_string(Grouping g) {
  switch (g) {
    case Grouping::Race: return "race";
    case Grouping::Income: return "income";
    case Grouping::Education: return "education";
  }
  return "?";
}

inline double value_of(const ExposureRecord& e, ExposureKind k) {
  return k == ExposureKind::Residential ? e.e_r : e.e_m;
}

/// Exposure values per cohort, in a fixed group order. Race groups overlap
/// (a CBG can be above the mean proportion for several races); CBGs with an
/// unknown income or education class are left out of that grouping.
inline std::vector<stats::GroupSample> group_samples(std::span<const ExposureRecord> exposures,
                                                     std::span<const cohort::CohortLabels> labels, Grouping grouping,
                                                     ExposureKind kind) {
  std::map<std::string_view, const cohort::CohortLabels*> by_id;
  for (const auto& l : labels) by_id.emplace(l.cbg_id, &l);

  std::vector<stats::GroupSample> groups;
  switch (grouping) {
    case Grouping::Race:
      for (auto r : cohort::kRaces) groups.push_back({std::string(cohort::to_string(r)), {}});
      break;
    case Grouping::Income:
      groups = {{"high", {}}, {"low", {}}};
      break;
    case Grouping::Education:
      groups = {{"higher", {}}, {"lower_attainment", {}}};
      break;
  }

  for (const auto& e : exposures) {
    auto it = by_id.find(e.cbg_id);
    if (it == by_id.end()) continue;
    const auto& l = *it->second;
    const double v = value_of(e, kind);
    switch (grouping) {
      case Grouping::Race:
        for (auto r : cohort::kRaces)
          if (l.has_race(r)) groups[static_cast<int>(r)].values.push_back(v);
        break;
      case Grouping::Income:
        if (l.income_class == cohort::IncomeClass::High) groups[0].values.push_back(v);
        if (l.income_class == cohort::IncomeClass::Low) groups[1].values.push_back(v);
        break;
      case Grouping::Education:
        if (l.education_class == cohort::EducationClass::Higher) groups[0].values.push_back(v);
        if (l.education_class == cohort::EducationClass::LowerAttainment) groups[1].values.push_back(v);
        break;
    }
  }
  return groups;
}

inline stats::GroupSummary group_summary(std::span<const ExposureRecord> exposures,
                                         std::span<const cohort::CohortLabels> labels, Grouping grouping,
                                         ExposureKind kind) {
  const auto samples = group_samples(exposures, labels, grouping, kind);
  return stats::summarize_groups(samples);
}

struct DisparityAnalysis {
  std::vector<stats::DisparityRecord> records;  // by state, residential before mobility
  std::map<ExposureKind, double> thresholds;    // only kinds with T > 0
  std::vector<std::string> degenerate;          // one message per kind with T == 0
};

/// T is the mean of each exposure kind over every CBG in `exposures`; CoV is
/// then computed per state. A kind with T == 0 yields no records.
inline DisparityAnalysis state_disparity(std::span<const ExposureRecord> exposures) {
  DisparityAnalysis out;
  if (exposures.empty()) {
    out.degenerate.push_back("no exposure records");
    return out;
  }
  std::map<std::string, std::vector<const ExposureRecord*>> by_state;
  for (const auto& e : exposures) by_state[e.state].push_back(&e);

  for (auto kind : kKinds) {
    std::vector<double> all;
    for (const auto& e : exposures) all.push_back(value_of(e, kind));
    const double T = stats::global_threshold(all);
    if (!(T > 0.0)) {
      out.degenerate.push_back(std::string("threshold T is zero for ") + stats::to_string(kind) + " exposure");
      continue;
    }
    out.thresholds[kind] = T;
  }

  for (const auto& [state, members] : by_state) {
    for (auto kind : kKinds) {
      auto t = out.thresholds.find(kind);
      if (t == out.thresholds.end()) continue;
      std::vector<double> v;
      for (const auto* e : members) v.push_back(value_of(*e, kind));
      out.records.push_back(stats::disparity_cov(state, v, kind, t->second));
    }
  }
  return out;
}

struct RegressionPoint {
  std::string state;
  double x = 0;  // residential CoV
  double y = 0;  // mobility CoV
};

struct DisparityRegression {
  std::vector<RegressionPoint> points;
  std::optional<stats::RegressionResult> fit;
  std::string error;  // why fit is absent
};

/// Regresses mobility CoV on residential CoV over states where both are defined.
inline DisparityRegression disparity_regression(const DisparityAnalysis& d) {
  std::map<std::string, std::optional<double>> res, mob;
  for (const auto& r : d.records) (r.kind == ExposureKind::Residential ? res : mob)[r.state] = r.cov;

  DisparityRegression out;
  for (const auto& [state, x] : res) {
    auto it = mob.find(state);
    if (x && it != mob.end() && it->second) out.points.push_back({state, *x, *it->second});
  }
  std::vector<double> xs, ys;
  for (const auto& p : out.points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  try {
    out.fit = stats::ols_fit(xs, ys);
  } catch (const StatsError& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace floodmob::analysis
