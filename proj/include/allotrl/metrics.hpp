#pragma once

// Performance statistics over realized per-period return series.

#include <cmath>
#include <string>
#include <vector>

#include "allotrl/common.hpp"

namespace allotrl {

inline constexpr double kPeriodsPerYearDaily = 252.0;
inline constexpr double kPeriodsPerYearBiDaily = 126.0;
inline constexpr double kDenomFloor = 1e-12;

struct PerformanceReport {
  double annual_return = 0.0;
  double sharpe = 0.0;
  double sortino = 0.0;
  double calmar = 0.0;
  double omega = 0.0;
  double max_drawdown = 0.0;
  double periods_per_year = kPeriodsPerYearBiDaily;
  bool degenerate = false;  // some denominator hit its floor
};

// Largest peak-to-trough fractional decline of a positive value path.
inline double max_drawdown(const std::vector<double>& values) {
  if (values.empty()) throw ArgumentError("max_drawdown: empty series");
  double peak = values.front();
  double mdd = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw ArgumentError("max_drawdown: values must be > 0");
    peak = std::max(peak, v);
    mdd = std::max(mdd, (peak - v) / peak);
  }
  return mdd;
}

inline std::vector<double> compound_path(const std::vector<double>& returns,
                                         double initial = 1.0) {
  std::vector<double> path;
  path.reserve(returns.size() + 1);
  path.push_back(initial);
  for (double r : returns) {
    if (!(r > -1.0)) throw ArgumentError("compound_path: return <= -1");
    path.push_back(path.back() * (1.0 + r));
  }
  return path;
}

// Geometric annualization (CAGR).
inline double annual_return(const std::vector<double>& returns,
                            double periods_per_year) {
  if (returns.empty()) throw ArgumentError("annual_return: empty series");
  double total = 1.0;
  for (double r : returns) {
    if (!(r > -1.0)) throw ArgumentError("annual_return: return <= -1");
    total *= 1.0 + r;
  }
  return std::pow(total, periods_per_year / static_cast<double>(returns.size())) -
         1.0;
}

inline double sharpe_annualized(const std::vector<double>& returns,
                                double r_f_per_period, double periods_per_year,
                                bool* degenerate = nullptr) {
  if (returns.size() < 2)
    throw InsufficientDataError("sharpe_annualized: need >= 2 points");
  double mean = 0.0;
  for (double r : returns) mean += r - r_f_per_period;
  mean /= static_cast<double>(returns.size());
  double ss = 0.0;
  for (double r : returns) {
    const double d = (r - r_f_per_period) - mean;
    ss += d * d;
  }
  double sd = std::sqrt(ss / static_cast<double>(returns.size() - 1));
  if (sd < kDenomFloor) {
    sd = kDenomFloor;
    if (degenerate) *degenerate = true;
  }
  return mean / sd * std::sqrt(periods_per_year);
}

inline double sortino(const std::vector<double>& returns,
                      double r_f_per_period, double periods_per_year,
                      bool* degenerate = nullptr) {
  if (returns.size() < 2)
    throw InsufficientDataError("sortino: need >= 2 points");
  double mean = 0.0, downside_ss = 0.0;
  for (double r : returns) {
    const double ex = r - r_f_per_period;
    mean += ex;
    downside_ss += std::min(ex, 0.0) * std::min(ex, 0.0);
  }
  mean /= static_cast<double>(returns.size());
  double dd = std::sqrt(downside_ss / static_cast<double>(returns.size()));
  if (dd < kDenomFloor) {
    dd = kDenomFloor;
    if (degenerate) *degenerate = true;
  }
  return mean / dd * std::sqrt(periods_per_year);
}

inline double calmar(const std::vector<double>& returns,
                     double periods_per_year, bool* degenerate = nullptr) {
  if (returns.empty()) throw ArgumentError("calmar: empty series");
  const double ar = annual_return(returns, periods_per_year);
  double mdd = max_drawdown(compound_path(returns));
  if (mdd < kDenomFloor) {
    mdd = kDenomFloor;
    if (degenerate) *degenerate = true;
  }
  return ar / mdd;
}

inline double omega(const std::vector<double>& returns,
                    double threshold_per_period, bool* degenerate = nullptr) {
  if (returns.empty()) throw ArgumentError("omega: empty series");
  double gains = 0.0, losses = 0.0;
  for (double r : returns) {
    gains += std::max(r - threshold_per_period, 0.0);
    losses += std::max(threshold_per_period - r, 0.0);
  }
  if (losses < kDenomFloor) {
    losses = kDenomFloor;
    if (degenerate) *degenerate = true;
  }
  return gains / losses;
}

inline PerformanceReport performance_report(const std::vector<double>& returns,
                                            double periods_per_year,
                                            double r_f_per_period = 0.0) {
  PerformanceReport rep;
  rep.periods_per_year = periods_per_year;
  rep.annual_return = annual_return(returns, periods_per_year);
  rep.sharpe = sharpe_annualized(returns, r_f_per_period, periods_per_year,
                                 &rep.degenerate);
  rep.sortino = sortino(returns, r_f_per_period, periods_per_year,
                        &rep.degenerate);
  rep.calmar = calmar(returns, periods_per_year, &rep.degenerate);
  rep.omega = omega(returns, r_f_per_period, &rep.degenerate);
  rep.max_drawdown = max_drawdown(compound_path(returns));
  return rep;
}

}  // namespace allotrl
