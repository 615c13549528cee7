#pragma once

// Price ingestion, strategy composition, return transforms, rolling
// features, and phase-window slicing.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "allotrl/common.hpp"

namespace allotrl {

// Dated table of one column per ticker. Used for both price levels and
// per-period returns; price invariants are enforced at load time.
struct SeriesTable {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  std::vector<std::vector<double>> rows;  // rows[t][k]

  std::size_t size() const { return dates.size(); }
  std::size_t width() const { return tickers.size(); }
};

using PriceSeries = SeriesTable;

// Aligned K=3 strategy returns plus 3 context index returns.
struct ReturnPanel {
  std::vector<Date> dates;
  std::vector<Vec3> assets;   // strategy returns mu_t
  std::vector<Vec3> indexes;  // context returns alpha_t

  std::size_t size() const { return dates.size(); }
};

struct FeatureFrame {
  std::vector<Date> dates;
  std::vector<Vec3> mu;          // per-period strategy returns
  std::vector<Vec3> alpha;       // per-period index returns
  std::vector<Vec3> mu_roll;     // rolling mean strategy return
  std::vector<Vec3> sigma_roll;  // rolling strategy return std
  std::vector<Vec3> q_roll;      // rolling index return std

  std::size_t size() const { return dates.size(); }
};

struct PhaseWindow {
  Date train_start, train_end;
  Date valid_start, valid_end;
  Date test_start, test_end;
};

struct PhasePlan {
  std::array<PhaseWindow, 3> phases;

  static PhasePlan defaults() {
    PhasePlan p;
    p.phases[0] = {Date::parse_iso("1996-02-01"), Date::parse_iso("2012-01-01"),
                   Date::parse_iso("2012-01-01"), Date::parse_iso("2015-01-01"),
                   Date::parse_iso("2015-01-01"), Date::parse_iso("2020-01-01")};
    p.phases[1] = {Date::parse_iso("2002-01-01"), Date::parse_iso("2016-01-01"),
                   Date::parse_iso("2016-01-01"), Date::parse_iso("2020-01-01"),
                   Date::parse_iso("2020-01-01"), Date::parse_iso("2022-01-01")};
    p.phases[2] = {Date::parse_iso("2009-01-01"), Date::parse_iso("2018-01-01"),
                   Date::parse_iso("2018-01-01"), Date::parse_iso("2022-01-01"),
                   Date::parse_iso("2022-01-01"), Date::parse_iso("2024-01-01")};
    return p;
  }

  const PhaseWindow& window(int phase) const {
    if (phase < 1 || phase > 3)
      throw ArgumentError("phase must be 1, 2 or 3");
    return phases[static_cast<std::size_t>(phase - 1)];
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Loads one price CSV: header `date,T1,T2,...`, ISO dates, strictly
// positive prices, no missing cells.
inline PriceSeries load_prices(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ArgumentError("cannot open file: " + csv_path);

  std::string line;
  if (!std::getline(in, line))
    throw ParseError(csv_path + ": empty file");

  PriceSeries out;
  auto header = detail::split_csv_line(detail::trim(line));
  if (header.size() < 2 || detail::trim(header[0]) != "date")
    throw ParseError(csv_path + ": header must be `date,<ticker>,...`");
  for (std::size_t i = 1; i < header.size(); ++i)
    out.tickers.push_back(detail::trim(header[i]));

  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    auto strip = detail::trim(line);
    if (strip.empty()) continue;
    auto cells = detail::split_csv_line(strip);
    if (cells.size() != header.size())
      throw ParseError(csv_path + ": row " + std::to_string(row_no) +
                       " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(header.size()));
    Date d;
    try {
      d = Date::parse_iso(detail::trim(cells[0]));
    } catch (const ParseError& e) {
      throw ParseError(csv_path + ": row " + std::to_string(row_no) + ": " +
                       e.what());
    }
    std::vector<double> vals;
    vals.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const std::string cell = detail::trim(cells[i]);
      if (cell.empty())
        throw ParseError(csv_path + ": row " + std::to_string(row_no) +
                         ": missing cell for ticker " + out.tickers[i - 1]);
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cell.size())
        throw ParseError(csv_path + ": row " + std::to_string(row_no) +
                         ": non-numeric price '" + cell + "'");
      if (!(v > 0.0))
        throw ValidationError(csv_path + ": nonpositive price for ticker " +
                              out.tickers[i - 1] + " at " + d.to_iso());
      vals.push_back(v);
    }
    if (!out.dates.empty() && d <= out.dates.back())
      throw ValidationError(csv_path + ": row " + std::to_string(row_no) +
                            ": dates must be strictly increasing");
    out.dates.push_back(d);
    out.rows.push_back(std::move(vals));
  }
  if (out.dates.empty()) throw ParseError(csv_path + ": no data rows");
  return out;
}

// Inner-joins tables on dates; columns are concatenated in argument order.
inline SeriesTable inner_join(const std::vector<SeriesTable>& tables) {
  if (tables.empty()) throw ArgumentError("inner_join: no tables");
  std::map<Date, int> counts;
  for (const auto& t : tables)
    for (const auto& d : t.dates) counts[d] += 1;

  SeriesTable out;
  for (const auto& t : tables)
    out.tickers.insert(out.tickers.end(), t.tickers.begin(), t.tickers.end());
  for (const auto& [d, c] : counts) {
    if (c != static_cast<int>(tables.size())) continue;
    std::vector<double> row;
    for (const auto& t : tables) {
      auto it = std::lower_bound(t.dates.begin(), t.dates.end(), d);
      auto idx = static_cast<std::size_t>(it - t.dates.begin());
      row.insert(row.end(), t.rows[idx].begin(), t.rows[idx].end());
    }
    out.dates.push_back(d);
    out.rows.push_back(std::move(row));
  }
  if (out.dates.empty())
    throw ValidationError("inner_join: empty date intersection across inputs");
  return out;
}

// One strategy = weighted blend of constituent asset returns; weights
// must sum to 1 per strategy.
struct StrategyWeights {
  // weights[s][k] over the columns of the input price table
  std::vector<std::vector<double>> weights;
  std::vector<std::string> names;

  // Paper composition over (developed eq, emerging eq, credit, govies).
  static StrategyWeights defaults() {
    return {{{1.0, 0.0, 0.0, 0.0},
             {0.55, 0.05, 0.20, 0.20},
             {0.0, 0.0, 0.0, 1.0}},
            {"strategy1", "strategy2", "strategy3"}};
  }
};

// Builds synthetic strategy price levels compounded from 100. Default is
// a daily-rebalanced blend (strategy return = weighted sum of constituent
// returns); with `drift` the constituents are bought at the first date
// and held, so the internal mix drifts with relative performance.
inline PriceSeries compose_strategies(const PriceSeries& prices,
                                      const StrategyWeights& table,
                                      bool drift = false) {
  if (prices.size() < 1) throw ArgumentError("compose_strategies: empty panel");
  for (std::size_t s = 0; s < table.weights.size(); ++s) {
    const auto& w = table.weights[s];
    if (w.size() != prices.width())
      throw ValidationError("strategy " + std::to_string(s + 1) + " has " +
                            std::to_string(w.size()) + " weights for " +
                            std::to_string(prices.width()) + " tickers");
    double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("strategy " + std::to_string(s + 1) +
                            " weights sum to " + std::to_string(sum));
  }

  PriceSeries out;
  out.dates = prices.dates;
  out.tickers = table.names;
  out.rows.assign(prices.size(),
                  std::vector<double>(table.weights.size(), 100.0));
  if (drift) {
    for (std::size_t t = 1; t < prices.size(); ++t) {
      for (std::size_t s = 0; s < table.weights.size(); ++s) {
        double level = 0.0;
        for (std::size_t k = 0; k < prices.width(); ++k)
          level += table.weights[s][k] * prices.rows[t][k] / prices.rows[0][k];
        out.rows[t][s] = 100.0 * level;
      }
    }
    return out;
  }
  for (std::size_t t = 1; t < prices.size(); ++t) {
    for (std::size_t s = 0; s < table.weights.size(); ++s) {
      double ret = 0.0;
      for (std::size_t k = 0; k < prices.width(); ++k) {
        ret += table.weights[s][k] *
               (prices.rows[t][k] / prices.rows[t - 1][k] - 1.0);
      }
      out.rows[t][s] = out.rows[t - 1][s] * (1.0 + ret);
    }
  }
  return out;
}

// Simple returns r_t = P_t / P_{t-1} - 1; first date dropped.
inline SeriesTable to_returns(const PriceSeries& prices) {
  if (prices.size() < 2)
    throw InsufficientDataError("to_returns: need at least 2 rows");
  SeriesTable out;
  out.tickers = prices.tickers;
  out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  out.rows.reserve(prices.size() - 1);
  for (std::size_t t = 1; t < prices.size(); ++t) {
    std::vector<double> row(prices.width());
    for (std::size_t k = 0; k < prices.width(); ++k)
      row[k] = prices.rows[t][k] / prices.rows[t - 1][k] - 1.0;
    out.rows.push_back(std::move(row));
  }
  return out;
}

// Pairs 3-column strategy returns with 3-column index returns on the
// inner-joined date range.
inline ReturnPanel make_return_panel(const SeriesTable& asset_returns,
                                     const SeriesTable& index_returns) {
  if (asset_returns.width() != kNumAssets)
    throw ValidationError("asset return table must have exactly 3 columns");
  if (index_returns.width() != kNumIndexes)
    throw ValidationError("index return table must have exactly 3 columns");
  SeriesTable joined = inner_join({asset_returns, index_returns});
  ReturnPanel out;
  out.dates = joined.dates;
  out.assets.reserve(joined.size());
  out.indexes.reserve(joined.size());
  for (const auto& row : joined.rows) {
    out.assets.push_back({row[0], row[1], row[2]});
    out.indexes.push_back({row[3], row[4], row[5]});
  }
  return out;
}

// Compounds non-overlapping stride-length windows; trailing partial
// window dropped; each output row dated at its window's last date.
inline ReturnPanel aggregate(const ReturnPanel& panel, std::size_t stride) {
  if (stride == 0) throw ArgumentError("aggregate: stride must be >= 1");
  ReturnPanel out;
  for (std::size_t start = 0; start + stride <= panel.size(); start += stride) {
    Vec3 a{1.0, 1.0, 1.0}, x{1.0, 1.0, 1.0};
    for (std::size_t i = start; i < start + stride; ++i) {
      for (int k = 0; k < 3; ++k) {
        a[k] *= 1.0 + panel.assets[i][k];
        x[k] *= 1.0 + panel.indexes[i][k];
      }
    }
    out.dates.push_back(panel.dates[start + stride - 1]);
    out.assets.push_back({a[0] - 1.0, a[1] - 1.0, a[2] - 1.0});
    out.indexes.push_back({x[0] - 1.0, x[1] - 1.0, x[2] - 1.0});
  }
  return out;
}

namespace detail {

// Trailing-window mean/std at each index >= window-1, sample (N-1) std.
inline void rolling_stats(const std::vector<Vec3>& series, std::size_t window,
                          std::vector<Vec3>* mean_out,
                          std::vector<Vec3>* std_out) {
  const std::size_t n = series.size();
  if (mean_out) mean_out->assign(n, Vec3{});
  if (std_out) std_out->assign(n, Vec3{});
  for (std::size_t t = window - 1; t < n; ++t) {
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (std::size_t i = t + 1 - window; i <= t; ++i) s += series[i][k];
      const double m = s / static_cast<double>(window);
      if (mean_out) (*mean_out)[t][k] = m;
      if (std_out) {
        double ss = 0.0;
        for (std::size_t i = t + 1 - window; i <= t; ++i) {
          const double d = series[i][k] - m;
          ss += d * d;
        }
        (*std_out)[t][k] =
            window > 1 ? std::sqrt(ss / static_cast<double>(window - 1)) : 0.0;
      }
    }
  }
}

}  // namespace detail

// Rolling features at the panel's own frequency; rows without full
// history for the longest window are dropped.
inline FeatureFrame build_features(const ReturnPanel& panel,
                                   std::size_t mean_window = 40,
                                   std::size_t std_window = 60) {
  if (mean_window == 0 || std_window == 0)
    throw ArgumentError("build_features: windows must be positive");
  const std::size_t warmup = std::max(mean_window, std_window);
  if (panel.size() <= warmup)
    throw InsufficientDataError(
        "build_features: panel has " + std::to_string(panel.size()) +
        " rows, need more than " + std::to_string(warmup));

  std::vector<Vec3> mu_roll, sigma_roll, q_roll, mean_only;
  detail::rolling_stats(panel.assets, mean_window, &mu_roll, nullptr);
  detail::rolling_stats(panel.assets, std_window, &mean_only, &sigma_roll);
  detail::rolling_stats(panel.indexes, std_window, &mean_only, &q_roll);

  FeatureFrame out;
  for (std::size_t t = warmup - 1; t < panel.size(); ++t) {
    out.dates.push_back(panel.dates[t]);
    out.mu.push_back(panel.assets[t]);
    out.alpha.push_back(panel.indexes[t]);
    out.mu_roll.push_back(mu_roll[t]);
    out.sigma_roll.push_back(sigma_roll[t]);
    out.q_roll.push_back(q_roll[t]);
  }
  return out;
}

// Full feature pipeline: rolling windows on the source-frequency panel,
// then aggregation to the decision grid, with rolling values sampled at
// the aggregated timestamps.
inline FeatureFrame prepare_features(const ReturnPanel& daily,
                                     std::size_t stride = 2,
                                     std::size_t mean_window = 40,
                                     std::size_t std_window = 60) {
  FeatureFrame daily_feats = build_features(daily, mean_window, std_window);
  if (stride == 1) return daily_feats;
  ReturnPanel agg = aggregate(daily, stride);

  FeatureFrame out;
  std::size_t j = 0;
  for (std::size_t t = 0; t < agg.size(); ++t) {
    while (j < daily_feats.size() && daily_feats.dates[j] < agg.dates[t]) ++j;
    if (j >= daily_feats.size()) break;
    if (daily_feats.dates[j] != agg.dates[t]) continue;  // inside warmup
    out.dates.push_back(agg.dates[t]);
    out.mu.push_back(agg.assets[t]);
    out.alpha.push_back(agg.indexes[t]);
    out.mu_roll.push_back(daily_feats.mu_roll[j]);
    out.sigma_roll.push_back(daily_feats.sigma_roll[j]);
    out.q_roll.push_back(daily_feats.q_roll[j]);
  }
  if (out.dates.empty())
    throw InsufficientDataError("prepare_features: no aggregated rows survive");
  return out;
}

// Half-open slice [lo, hi).
inline FeatureFrame slice(const FeatureFrame& frame, Date lo, Date hi) {
  FeatureFrame out;
  for (std::size_t t = 0; t < frame.size(); ++t) {
    if (frame.dates[t] >= lo && frame.dates[t] < hi) {
      out.dates.push_back(frame.dates[t]);
      out.mu.push_back(frame.mu[t]);
      out.alpha.push_back(frame.alpha[t]);
      out.mu_roll.push_back(frame.mu_roll[t]);
      out.sigma_roll.push_back(frame.sigma_roll[t]);
      out.q_roll.push_back(frame.q_roll[t]);
    }
  }
  return out;
}

struct PhaseSplit {
  FeatureFrame train, valid, test;
};

// Half-open intervals: a date equal to train_end belongs to validation.
inline PhaseSplit split_phases(const FeatureFrame& frame, const PhasePlan& plan,
                               int phase) {
  const PhaseWindow& w = plan.window(phase);
  if (frame.size() == 0) throw RangeError("split_phases: empty frame");
  // Windows are half-open, so the frame must start by train_start and
  // reach into the test window; it need not extend to test_end itself.
  if (frame.dates.front() > w.train_start || frame.dates.back() < w.test_start)
    throw RangeError("split_phases: frame covers [" +
                     frame.dates.front().to_iso() + ", " +
                     frame.dates.back().to_iso() + "] but phase " +
                     std::to_string(phase) + " needs [" +
                     w.train_start.to_iso() + ", " + w.test_start.to_iso() +
                     "]");
  PhaseSplit out;
  out.train = slice(frame, w.train_start, w.train_end);
  out.valid = slice(frame, w.valid_start, w.valid_end);
  out.test = slice(frame, w.test_start, w.test_end);
  return out;
}

// Slices a ReturnPanel to the dates of a FeatureFrame plus forward rows
// beyond its end (oracle lookahead support).
inline ReturnPanel panel_slice(const ReturnPanel& panel, Date lo, Date hi) {
  ReturnPanel out;
  for (std::size_t t = 0; t < panel.size(); ++t) {
    if (panel.dates[t] >= lo && panel.dates[t] < hi) {
      out.dates.push_back(panel.dates[t]);
      out.assets.push_back(panel.assets[t]);
      out.indexes.push_back(panel.indexes[t]);
    }
  }
  return out;
}

}  // namespace allotrl
