#pragma once

// Numeric statistics: empirical distributions, quantiles, Welch's t-test with
// a Student-t p-value from the regularized incomplete beta function, the
// coefficient-of-variation disparity index, and simple least squares.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodmob/error.hpp"

namespace floodmob::stats {

inline double mean(std::span<const double> v) {
  if (v.empty()) throw StatsError("mean of empty sample");
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// n-1 denominator.
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw StatsError("sample variance needs at least 2 values");
  // The rounded mean of equal values can differ from them by an ulp.
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

class EmpiricalDistribution {
 public:
  static EmpiricalDistribution make(std::vector<double> values) {
    if (values.empty()) throw StatsError("empirical distribution of empty sample");
    std::sort(values.begin(), values.end());
    EmpiricalDistribution d;
    d.sorted_ = std::move(values);
    return d;
  }

  std::span<const double> values() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

  /// Fraction of values <= x.
  double ecdf(double x) const {
    const auto k = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
    return static_cast<double>(k) / static_cast<double>(sorted_.size());
  }

  /// Fraction of values > x; computed from the same count so ecdf + ccdf == 1.
  double ccdf(double x) const {
    const auto k = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
    return static_cast<double>(static_cast<std::ptrdiff_t>(sorted_.size()) - k) / static_cast<double>(sorted_.size());
  }

  /// Linear interpolation between order statistics at h = (n-1)p.
  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw StatsError("quantile probability outside [0,1]");
    const double h = static_cast<double>(sorted_.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted_.size() - 1);
    return sorted_[lo] + (h - static_cast<double>(lo)) * (sorted_[hi] - sorted_[lo]);
  }

 private:
  std::vector<double> sorted_;
};

struct FiveNumberSummary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

inline FiveNumberSummary five_number_summary(const EmpiricalDistribution& d) {
  return {d.values().front(), d.quantile(0.25), d.quantile(0.5), d.quantile(0.75), d.values().back()};
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;  // converged to working precision for all a, b used here
}

}  // namespace detail

namespace detail {

// I_x(a, b) with y = 1 - x supplied by the caller, so it keeps full precision
// when x is close to 1.
inline double incomplete_beta(double a, double b, double x, double y) {
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

}  // namespace detail

/// I_x(a, b) for a, b > 0 and x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw StatsError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw StatsError("incomplete beta needs x in [0,1]");
  return detail::incomplete_beta(a, b, x, 1.0 - x);
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw StatsError("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  return std::clamp(detail::incomplete_beta(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2)), 0.0, 1.0);
}

struct TTestResult {
  double t_stat = 0;
  double df = 0;
  double p_value = 1;
  double mean_a = 0;
  double mean_b = 0;
};

/// Welch's unequal-variance two-sample t-test, two-sided.
inline TTestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw StatsError("welch_t needs at least 2 values per sample");
  TTestResult r;
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na;
  const double vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    if (r.mean_a != r.mean_b) throw StatsError("welch_t: both samples constant with different means");
    r.t_stat = 0.0;
    r.df = na + nb - 2.0;
    r.p_value = 1.0;
    return r;
  }
  r.t_stat = (r.mean_a - r.mean_b) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_value = student_t_two_sided_p(r.t_stat, r.df);
  return r;
}

/// "***" below 0.001, "**" below 0.01, "*" below 0.05, otherwise "ns".
inline const char* significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "ns";
}

/// Sample standard deviation over mean. Needs >= 2 values with positive mean.
inline double coefficient_of_variation(std::span<const double> q) {
  const double m = mean(q);
  if (!(m > 0.0)) throw StatsError("coefficient of variation needs a positive mean");
  return std::sqrt(sample_variance(q)) / m;
}

enum class ExposureKind { Residential, Mobility };

inline const char* to_string(ExposureKind k) { return k == ExposureKind::Residential ? "residential" : "mobility"; }

struct DisparityRecord {
  std::string state;
  ExposureKind kind = ExposureKind::Residential;
  double threshold_T = 0;
  std::size_t n_exceeders = 0;
  std::optional<double> cov;  // absent when n_exceeders < 2
};

/// Mean exposure over every CBG in the run; the exceedance threshold T.
inline double global_threshold(std::span<const double> all_exposures) { return mean(all_exposures); }

/// Disparity over the CBGs of one state: q = (e - T) / T for each e > T, then
/// CoV(q). Rescaling q by any positive constant leaves the CoV unchanged.
inline DisparityRecord disparity_cov(std::string state, std::span<const double> exposures, ExposureKind kind,
                                     double threshold) {
  if (!(threshold > 0.0))
    throw StatsError(std::string("disparity threshold T is zero for ") + to_string(kind) + " exposure");
  DisparityRecord r;
  r.state = std::move(state);
  r.kind = kind;
  r.threshold_T = threshold;
  std::vector<double> q;
  for (double e : exposures)
    if (e > threshold) q.push_back((e - threshold) / threshold);
  r.n_exceeders = q.size();
  if (q.size() >= 2) r.cov = coefficient_of_variation(q);
  return r;
}

struct RegressionResult {
  double slope = 0;
  double intercept = 0;
  std::optional<double> r_squared;  // absent when every y is equal
  std::size_t n_points = 0;
};

/// Ordinary least squares y = slope * x + intercept on centered sums.
inline RegressionResult ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("ols_fit: x and y lengths differ");
  if (x.size() < 2) throw StatsError("ols_fit needs at least 2 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw StatsError("ols_fit: x is constant");
  RegressionResult r;
  r.n_points = x.size();
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (r.slope * x[i] + r.intercept);
      ss_res += e * e;
    }
    r.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return r;
}

struct GroupSample {
  std::string name;
  std::vector<double> values;
};

struct GroupStats {
  std::string name;
  std::size_t n = 0;
  double mean = 0;
  FiveNumberSummary five;
};

struct PairTest {
  std::string group_a;
  std::string group_b;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  TTestResult test;
};

struct GroupSummary {
  std::vector<GroupStats> groups;  // non-empty groups, input order
  std::vector<PairTest> tests;     // every pair i < j where both have n >= 2
  std::vector<std::string> notes;  // groups left out of the pairwise tests
};

inline GroupSummary summarize_groups(std::span<const GroupSample> samples) {
  GroupSummary s;
  for (const auto& g : samples) {
    if (g.values.empty()) {
      s.notes.push_back("group '" + g.name + "' is empty");
      continue;
    }
    GroupStats gs;
    gs.name = g.name;
    gs.n = g.values.size();
    gs.mean = mean(g.values);
    gs.five = five_number_summary(EmpiricalDistribution::make(g.values));
    s.groups.push_back(std::move(gs));
    if (g.values.size() < 2) s.notes.push_back("group '" + g.name + "' has fewer than 2 values; no t-tests");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const auto& a = samples[i];
      const auto& b = samples[j];
      if (a.values.size() < 2 || b.values.size() < 2) continue;
      try {
        s.tests.push_back({a.name, b.name, a.values.size(), b.values.size(), welch_t(a.values, b.values)});
      } catch (const StatsError& e) {
        s.notes.push_back(a.name + " vs " + b.name + ": " + e.what());
      }
    }
  }
  return s;
}

}  // namespace floodmob::stats
