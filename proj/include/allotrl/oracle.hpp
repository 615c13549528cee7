#pragma once

// Forward-looking Sharpe-optimal allocation with an L1 transaction-cost
// penalty, found by exhaustive enumeration of the discretized simplex.

#include <cmath>
#include <optional>
#include <vector>

#include "allotrl/common.hpp"
#include "allotrl/marketdata.hpp"

namespace allotrl {

inline constexpr double kSharpeDenomFloor = 1e-12;

struct ForwardStats {
  Vec3 mu_fwd{};    // mean of the next n per-period returns
  Mat3 sigma_wide{};  // sample covariance over (t-3n, t+3n), ridge-loaded
  std::size_t n = 14;
};

struct OracleConfig {
  double grid_resolution = 0.01;
  double risk_free = 0.0;
  double ridge = 1e-10;
  std::size_t horizon_n = 14;

  void validate() const {
    if (!(grid_resolution > 0.0 && grid_resolution <= 1.0))
      throw ValidationError("oracle.grid_resolution must be in (0, 1]");
    if (ridge < 0.0) throw ValidationError("oracle.ridge must be >= 0");
    if (horizon_n < 1) throw ValidationError("oracle.horizon_n must be >= 1");
  }
};

// mu_fwd over rows t+1..t+n (shrunk at the data end); sigma_wide over
// rows [max(0, t-3n), min(N, t+3n)). Throws if fewer than 2 covariance
// rows or no forward rows exist.
inline ForwardStats forward_stats(const ReturnPanel& panel, std::size_t t,
                                  std::size_t n, double ridge = 1e-10) {
  if (n < 1) throw ArgumentError("forward_stats: horizon must be >= 1");
  const std::size_t size = panel.size();
  if (t + 1 >= size)
    throw InsufficientDataError("forward_stats: no forward rows after t");

  ForwardStats out;
  out.n = n;
  const std::size_t fwd_end = std::min(size, t + 1 + n);
  const std::size_t fwd_count = fwd_end - (t + 1);
  for (std::size_t i = t + 1; i < fwd_end; ++i)
    for (int k = 0; k < 3; ++k) out.mu_fwd[k] += panel.assets[i][k];
  for (int k = 0; k < 3; ++k) out.mu_fwd[k] /= static_cast<double>(fwd_count);

  const std::size_t lo = t >= 3 * n ? t - 3 * n : 0;
  const std::size_t hi = std::min(size, t + 3 * n);
  if (hi - lo < 2)
    throw InsufficientDataError("forward_stats: covariance window too short");

  Vec3 mean{};
  for (std::size_t i = lo; i < hi; ++i)
    for (int k = 0; k < 3; ++k) mean[k] += panel.assets[i][k];
  const double cnt = static_cast<double>(hi - lo);
  for (int k = 0; k < 3; ++k) mean[k] /= cnt;
  for (std::size_t i = lo; i < hi; ++i) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        out.sigma_wide[a][b] +=
            (panel.assets[i][a] - mean[a]) * (panel.assets[i][b] - mean[b]);
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) out.sigma_wide[a][b] /= cnt - 1.0;
  for (int a = 0; a < 3; ++a) out.sigma_wide[a][a] += ridge;
  return out;
}

// (w'mu - r_f) / sqrt(w' sigma w), denominator floored at 1e-12.
inline double sharpe(const Vec3& w, const Vec3& mu, const Mat3& sigma,
                     double r_f) {
  const double var = quadratic_form(w, sigma);
  const double denom = std::max(std::sqrt(std::max(var, 0.0)), kSharpeDenomFloor);
  return (dot(w, mu) - r_f) / denom;
}

namespace detail {

// Enumerates {w : w_i = k_i * res, sum k_i = 1/res} for general K; the
// point count grows as C(m+K-1, K-1) so large K is impractical by design.
template <typename Fn>
void for_each_simplex_grid_point(int dims, int m, std::vector<int>& ks, Fn&& fn) {
  if (dims == 1) {
    ks.push_back(m);
    fn(ks);
    ks.pop_back();
    return;
  }
  for (int k = 0; k <= m; ++k) {
    ks.push_back(k);
    for_each_simplex_grid_point(dims - 1, m - k, ks, fn);
    ks.pop_back();
  }
}

}  // namespace detail

// Exhaustive grid argmax of sharpe(w) - tc_rate * ||w - w_prev||_1.
// Ties broken by lower turnover, then lexicographic order of w.
inline Vec3 oracle_weights(const ForwardStats& stats, double tc_rate,
                           const Vec3& w_prev, const OracleConfig& cfg) {
  cfg.validate();
  if (tc_rate < 0.0) throw ArgumentError("oracle_weights: tc_rate must be >= 0");
  const int m = static_cast<int>(std::llround(1.0 / cfg.grid_resolution));
  const double res = 1.0 / static_cast<double>(m);

  Vec3 best{};
  double best_obj = -std::numeric_limits<double>::infinity();
  double best_turnover = std::numeric_limits<double>::infinity();
  bool found = false;

  std::vector<int> ks;
  detail::for_each_simplex_grid_point(3, m, ks, [&](const std::vector<int>& k) {
    const Vec3 w{k[0] * res, k[1] * res, k[2] * res};
    const double turnover = l1_distance(w, w_prev);
    const double obj =
        sharpe(w, stats.mu_fwd, stats.sigma_wide, cfg.risk_free) -
        tc_rate * turnover;
    // Enumeration is lexicographically ascending, so keeping the first
    // point among exact ties yields the lexicographic tie-break for free.
    if (!found || obj > best_obj ||
        (obj == best_obj && turnover < best_turnover)) {
      best = w;
      best_obj = obj;
      best_turnover = turnover;
      found = true;
    }
  });
  return best;
}

}  // namespace allotrl
