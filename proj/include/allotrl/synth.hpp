#pragma once

// Bootstrap resampling of training panels and a Markov-switching
// Gaussian market generator for tests and demos.

#include <cmath>
#include <vector>

#include "allotrl/common.hpp"
#include "allotrl/marketdata.hpp"

namespace allotrl {

struct BootstrapConfig {
  double block_fraction = 0.8;       // fraction of training length, (0, 1]
  std::uint64_t seed = 0;
  double swap_probability = 0.7;     // Bernoulli at each decision point
  int swap_interval_episodes = 10;
  bool deterministic_alternation = false;  // 10 real / 10 synthetic cycling
  bool enabled = true;

  void validate() const {
    if (!(block_fraction > 0.0 && block_fraction <= 1.0))
      throw ValidationError("bootstrap.block_fraction must be in (0, 1]");
    if (swap_probability < 0.0 || swap_probability > 1.0)
      throw ValidationError("bootstrap.swap_probability must be in [0, 1]");
    if (swap_interval_episodes < 1)
      throw ValidationError("bootstrap.swap_interval_episodes must be >= 1");
  }
};

// Concatenates blocks of length ceil(block_fraction * N) starting at
// uniformly random positions, wrapping circularly, truncated to N rows.
// Entire rows are resampled jointly so cross-sectional dependence between
// assets and indexes is preserved. Dates are kept from the original panel
// so downstream slicing still works; only the return rows are shuffled.
inline ReturnPanel circular_block_bootstrap(const ReturnPanel& panel,
                                            const BootstrapConfig& cfg,
                                            Rng& rng) {
  cfg.validate();
  const std::size_t n = panel.size();
  if (n == 0) throw ArgumentError("circular_block_bootstrap: empty panel");
  const std::size_t block_len = static_cast<std::size_t>(
      std::ceil(cfg.block_fraction * static_cast<double>(n)));

  ReturnPanel out;
  out.dates = panel.dates;
  out.assets.reserve(n);
  out.indexes.reserve(n);
  while (out.assets.size() < n) {
    std::size_t start = rng.uniform_int(n);
    for (std::size_t i = 0; i < block_len && out.assets.size() < n; ++i) {
      const std::size_t src = (start + i) % n;
      out.assets.push_back(panel.assets[src]);
      out.indexes.push_back(panel.indexes[src]);
    }
  }
  return out;
}

struct Regime {
  Vec3 mean{};   // per-period asset mean returns
  Mat3 cov{};    // asset return covariance
  Vec3 index_mean{};
  Mat3 index_cov{};
};

struct RegimeGenConfig {
  std::size_t n_steps = 0;
  std::vector<Regime> regimes;
  std::vector<std::vector<double>> transition;  // row-stochastic
  std::size_t initial_regime = 0;
  std::uint64_t seed = 0;
  Date start_date = Date::from_ymd(2000, 1, 3);
};

namespace detail {

// Lower Cholesky with zero-pivot tolerance so PSD (not just PD) inputs work.
inline Mat3 cholesky_psd(const Mat3& a) {
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(a[i][j] - a[j][i]) > 1e-9)
        throw ValidationError("covariance must be symmetric");
  Mat3 l{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s < -1e-10)
          throw ValidationError("covariance is not positive semidefinite");
        l[i][j] = std::sqrt(std::max(s, 0.0));
      } else {
        l[i][j] = l[j][j] > 1e-15 ? s / l[j][j] : 0.0;
      }
    }
  }
  return l;
}

inline Vec3 sample_gaussian(const Vec3& mean, const Mat3& chol, Rng& rng) {
  Vec3 z{rng.normal(), rng.normal(), rng.normal()};
  Vec3 out = mean;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j <= i; ++j) out[i] += chol[i][j] * z[j];
  return out;
}

}  // namespace detail

// Markov-switching Gaussian returns; deterministic per seed. Dates are a
// synthetic run of consecutive weekdays.
inline ReturnPanel generate_regime_market(const RegimeGenConfig& cfg) {
  if (cfg.regimes.empty())
    throw ValidationError("regime market: need at least one regime");
  if (cfg.transition.size() != cfg.regimes.size())
    throw ValidationError("regime market: transition matrix size mismatch");
  for (const auto& row : cfg.transition) {
    if (row.size() != cfg.regimes.size())
      throw ValidationError("regime market: transition row size mismatch");
    double s = 0.0;
    for (double p : row) {
      if (p < 0.0) throw ValidationError("regime market: negative probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw ValidationError("regime market: transition row must sum to 1");
  }
  if (cfg.initial_regime >= cfg.regimes.size())
    throw ValidationError("regime market: initial regime out of range");

  std::vector<Mat3> asset_chol, index_chol;
  for (const auto& r : cfg.regimes) {
    asset_chol.push_back(detail::cholesky_psd(r.cov));
    index_chol.push_back(detail::cholesky_psd(r.index_cov));
  }

  Rng rng(cfg.seed);
  ReturnPanel out;
  std::size_t regime = cfg.initial_regime;
  Date d = cfg.start_date;
  for (std::size_t t = 0; t < cfg.n_steps; ++t) {
    out.dates.push_back(d);
    out.assets.push_back(
        detail::sample_gaussian(cfg.regimes[regime].mean, asset_chol[regime], rng));
    out.indexes.push_back(detail::sample_gaussian(cfg.regimes[regime].index_mean,
                                                  index_chol[regime], rng));
    // next weekday
    do {
      d.days += 1;
    } while ((d.days % 7 + 10) % 7 >= 5);  // 1970-01-01 was a Thursday
    // regime transition
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < cfg.transition[regime].size(); ++k) {
      acc += cfg.transition[regime][k];
      if (u < acc) {
        regime = k;
        break;
      }
    }
  }
  return out;
}

// Selects the active training panel per episode. Every
// swap_interval_episodes episodes a Bernoulli(swap_probability) draw picks
// a fresh bootstrap of `original`; otherwise `original`. Between decision
// points `current` is kept. The deterministic_alternation flag instead
// cycles real/synthetic every interval.
inline ReturnPanel training_data_selector(long episode_index,
                                          const BootstrapConfig& cfg, Rng& rng,
                                          const ReturnPanel& original,
                                          const ReturnPanel& current) {
  if (episode_index < 0)
    throw ArgumentError("training_data_selector: negative episode index");
  if (!cfg.enabled) return original;
  if (episode_index % cfg.swap_interval_episodes != 0) return current;
  if (cfg.deterministic_alternation) {
    const long cycle = episode_index / cfg.swap_interval_episodes;
    return cycle % 2 == 1 ? circular_block_bootstrap(original, cfg, rng)
                          : original;
  }
  return rng.bernoulli(cfg.swap_probability)
             ? circular_block_bootstrap(original, cfg, rng)
             : original;
}

}  // namespace allotrl
