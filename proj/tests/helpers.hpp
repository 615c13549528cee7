#pragma once

// Shared fixtures for the test suite.

#include <fstream>
#include <string>
#include <vector>

#include "allotrl/marketdata.hpp"
#include "allotrl/common.hpp"

namespace testutil {

using namespace allotrl;

// Business-day stepping from a Monday anchor.
inline Date business_day(long i) {
  const Date anchor = Date::from_ymd(2018, 1, 1);  // a Monday
  const long weeks = i / 5;
  const long rem = i % 5;
  return Date{anchor.days + weeks * 7 + rem};
}

// Random return panel with dates on a business-day grid.
inline ReturnPanel random_panel(std::size_t n, Rng& rng, double scale = 0.01) {
  ReturnPanel panel;
  for (std::size_t t = 0; t < n; ++t) {
    panel.dates.push_back(business_day(static_cast<long>(t)));
    Vec3 a{}, x{};
    for (int k = 0; k < 3; ++k) {
      a[static_cast<std::size_t>(k)] = scale * rng.normal();
      x[static_cast<std::size_t>(k)] = scale * rng.normal();
    }
    panel.assets.push_back(a);
    panel.indexes.push_back(x);
  }
  return panel;
}

// Feature frame wrapping a raw panel one-to-one (no rolling warmup), for
// environment tests where exact per-step returns matter.
inline FeatureFrame frame_from_panel(const ReturnPanel& panel) {
  FeatureFrame f;
  f.dates = panel.dates;
  f.mu = panel.assets;
  f.alpha = panel.indexes;
  f.mu_roll = panel.assets;
  f.sigma_roll.assign(panel.size(), Vec3{0.01, 0.01, 0.01});
  f.q_roll.assign(panel.size(), Vec3{0.01, 0.01, 0.01});
  return f;
}

// Constant-return panel.
inline ReturnPanel constant_panel(std::size_t n, const Vec3& mu) {
  ReturnPanel panel;
  for (std::size_t t = 0; t < n; ++t) {
    panel.dates.push_back(business_day(static_cast<long>(t)));
    panel.assets.push_back(mu);
    panel.indexes.push_back(Vec3{0.0, 0.0, 0.0});
  }
  return panel;
}

inline std::string write_temp(const std::string& name,
                              const std::string& content) {
  const std::string path = "/tmp/allotrl_test_" + name;
  std::ofstream f(path, std::ios::trunc);
  f << content;
  return path;
}

}  // namespace testutil
