#pragma once

// CBG cohort labels. Each label compares a CBG's proportion (or income) to the
// mean over all CBGs in the run, with strict ">" for the flagged side.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "floodmob/error.hpp"
#include "floodmob/records.hpp"

namespace floodmob::cohort {

enum class Race { White, Black, Asian };
inline constexpr std::array<Race, 3> kRaces = {Race::White, Race::Black, Race::Asian};

inline std::string_view to_string(Race r) {
  switch (r) {
    case Race::White: return "white";
    case Race::Black: return "black";
    case Race::Asian: return "asian";
  }
  return "?";
}

enum class IncomeClass { High, Low, Unknown };
enum class EducationClass { Higher, LowerAttainment, Unknown };

inline std::string_view to_string(IncomeClass c) {
  return c == IncomeClass::High ? "high" : c == IncomeClass::Low ? "low" : "unknown";
}

inline std::string_view to_string(EducationClass c) {
  return c == EducationClass::Higher ? "higher" : c == EducationClass::LowerAttainment ? "lower_attainment" : "unknown";
}

inline std::int64_t race_count(const CbgRecord& c, Race r) {
  switch (r) {
    case Race::White: return c.pop_white;
    case Race::Black: return c.pop_black;
    case Race::Asian: return c.pop_asian;
  }
  return 0;
}

/// Indexed by static_cast<int>(Race).
using RaceFlags = std::array<bool, 3>;
using RaceThresholds = std::array<double, 3>;

struct CohortLabels {
  std::string cbg_id;
  RaceFlags race_flags{};
  IncomeClass income_class = IncomeClass::Unknown;
  EducationClass education_class = EducationClass::Unknown;

  bool has_race(Race r) const { return race_flags[static_cast<int>(r)]; }

  friend bool operator==(const CohortLabels&, const CohortLabels&) = default;
};

/// Mean per-race proportion over CBGs with pop_total > 0.
inline RaceThresholds race_thresholds(std::span<const CbgRecord> cbgs) {
  RaceThresholds sum{};
  std::size_t n = 0;
  for (const auto& c : cbgs) {
    if (c.pop_total <= 0) continue;
    ++n;
    for (Race r : kRaces)
      sum[static_cast<int>(r)] += static_cast<double>(race_count(c, r)) / static_cast<double>(c.pop_total);
  }
  if (n == 0) throw StatsError("race_thresholds: every CBG has zero population");
  for (auto& s : sum) s /= static_cast<double>(n);
  return sum;
}

inline RaceFlags label_race(const CbgRecord& c, const RaceThresholds& thresholds) {
  RaceFlags flags{};
  if (c.pop_total <= 0) return flags;
  for (Race r : kRaces) {
    const double p = static_cast<double>(race_count(c, r)) / static_cast<double>(c.pop_total);
    flags[static_cast<int>(r)] = p > thresholds[static_cast<int>(r)];
  }
  return flags;
}

/// Mean of median_income over CBGs that report it; absent if none do.
inline std::optional<double> mean_income(std::span<const CbgRecord> cbgs) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& c : cbgs) {
    if (!c.median_income) continue;
    sum += *c.median_income;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline IncomeClass label_income(const CbgRecord& c, double mean) {
  if (!c.median_income) return IncomeClass::Unknown;
  return *c.median_income > mean ? IncomeClass::High : IncomeClass::Low;
}

inline std::optional<double> low_attainment_proportion(const CbgRecord& c) {
  if (c.pop_25plus <= 0) return std::nullopt;
  return static_cast<double>(c.pop_25plus_low_attainment) / static_cast<double>(c.pop_25plus);
}

/// Mean low-attainment proportion over CBGs with pop_25plus > 0; absent if none.
inline std::optional<double> mean_low_attainment(std::span<const CbgRecord> cbgs) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& c : cbgs) {
    if (auto p = low_attainment_proportion(c)) {
      sum += *p;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline EducationClass label_education(const CbgRecord& c, double mean) {
  auto p = low_attainment_proportion(c);
  if (!p) return EducationClass::Unknown;
  return *p > mean ? EducationClass::LowerAttainment : EducationClass::Higher;
}

/// Labels for every CBG, in input order. Thresholds come from the same list.
inline std::vector<CohortLabels> label_all(std::span<const CbgRecord> cbgs) {
  const auto race_t = race_thresholds(cbgs);
  const auto income_t = mean_income(cbgs);
  const auto edu_t = mean_low_attainment(cbgs);
  std::vector<CohortLabels> out;
  out.reserve(cbgs.size());
  for (const auto& c : cbgs) {
    CohortLabels l;
    l.cbg_id = c.cbg_id;
    l.race_flags = label_race(c, race_t);
    l.income_class = income_t ? label_income(c, *income_t) : IncomeClass::Unknown;
    l.education_class = edu_t ? label_education(c, *edu_t) : EducationClass::Unknown;
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace floodmob::cohort
