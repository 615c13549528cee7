#pragma once

// The four interchangeable reward functions plus the deployment
// zero-reward. All are pure per-step functions over an explicit context
// record assembled by the environment; DiffSharpeState is threaded by
// value.

#include <cmath>
#include <string>

#include "allotrl/common.hpp"

namespace allotrl {

enum class RewardKind { kRegret, kDiffSharpe, kEmbeddedDd, kReturn, kZero };

inline RewardKind reward_kind_from_string(const std::string& s) {
  if (s == "regret") return RewardKind::kRegret;
  if (s == "diff_sharpe") return RewardKind::kDiffSharpe;
  if (s == "embedded_dd") return RewardKind::kEmbeddedDd;
  if (s == "return") return RewardKind::kReturn;
  if (s == "zero") return RewardKind::kZero;
  throw ConfigError("unknown reward.kind: " + s);
}

inline std::string to_string(RewardKind k) {
  switch (k) {
    case RewardKind::kRegret: return "regret";
    case RewardKind::kDiffSharpe: return "diff_sharpe";
    case RewardKind::kEmbeddedDd: return "embedded_dd";
    case RewardKind::kReturn: return "return";
    case RewardKind::kZero: return "zero";
  }
  return "?";
}

// -mu_fwd . (w_star - w_t); zero when the agent matches the Oracle.
inline double regret_reward(const Vec3& mu_fwd, const Vec3& w_star,
                            const Vec3& w_t) {
  return -(mu_fwd[0] * (w_star[0] - w_t[0]) + mu_fwd[1] * (w_star[1] - w_t[1]) +
           mu_fwd[2] * (w_star[2] - w_t[2]));
}

struct DiffSharpeState {
  double a = 0.0;  // cumulative mean-return EMA
  double b = 0.0;  // cumulative second-moment EMA
  double eta = 1.0 / 252.0;
};

// Moody-Saffell differential Sharpe. Returns the reward and advances the
// EMA state; the first update (zero denominator) yields 0.
inline double differential_sharpe(DiffSharpeState& state, double r_t) {
  const double delta_a = r_t - state.a;
  const double delta_b = r_t * r_t - state.b;
  const double var = state.b - state.a * state.a;
  const double denom = var > 0.0 ? std::pow(var, 1.5) : 0.0;
  const double d_t =
      denom > 1e-12 ? (state.b * delta_a - 0.5 * state.a * delta_b) / denom
                    : 0.0;
  state.a += state.eta * delta_a;
  state.b += state.eta * delta_b;
  return d_t;
}

struct EmbeddedDdConfig {
  double k = 2.0;
  bool alpha_dynamic = true;  // alpha = running MDD of the 60/40 benchmark
  double alpha_fixed = 0.1;

  void validate() const {
    if (!(k > 0.0)) throw ValidationError("reward.embedded_dd.k must be > 0");
    if (alpha_fixed < 0.0 || alpha_fixed >= 1.0)
      throw ValidationError("reward.embedded_dd.alpha must be in [0, 1)");
  }
};

// k / (1 + e^{-r_cum}) * (e^alpha - e^mdd): negative whenever the
// portfolio drawdown exceeds the target level alpha.
inline double embedded_drawdown_reward(const EmbeddedDdConfig& cfg,
                                       double r_cum, double mdd_t,
                                       double alpha_t) {
  return cfg.k / (1.0 + std::exp(-r_cum)) * (std::exp(alpha_t) - std::exp(mdd_t));
}

inline double return_reward(double net_return) { return net_return; }

// Everything a reward function may need, assembled per step by the env.
struct RewardContext {
  double net_return = 0.0;
  double cum_return = 0.0;  // cumulative portfolio return since episode start
  double drawdown = 0.0;    // current portfolio drawdown
  double benchmark_mdd = 0.0;  // running MDD of the 60/40 benchmark
  Vec3 mu_fwd{};
  Vec3 w_star{};
  Vec3 w_t{};
  bool forward_valid = false;  // false near the data end: regret reward is 0
};

struct RewardFunction {
  RewardKind kind = RewardKind::kZero;
  EmbeddedDdConfig embedded_dd{};
  DiffSharpeState diff_sharpe_state{};
  long skipped_forward_steps = 0;

  void reset_episode_state() { diff_sharpe_state = DiffSharpeState{}; }

  double operator()(const RewardContext& ctx) {
    switch (kind) {
      case RewardKind::kRegret:
        if (!ctx.forward_valid) {
          ++skipped_forward_steps;
          return 0.0;
        }
        return regret_reward(ctx.mu_fwd, ctx.w_star, ctx.w_t);
      case RewardKind::kDiffSharpe:
        return differential_sharpe(diff_sharpe_state, ctx.net_return);
      case RewardKind::kEmbeddedDd: {
        const double alpha = embedded_dd.alpha_dynamic ? ctx.benchmark_mdd
                                                       : embedded_dd.alpha_fixed;
        return embedded_drawdown_reward(embedded_dd, ctx.cum_return,
                                        ctx.drawdown, alpha);
      }
      case RewardKind::kReturn:
        return return_reward(ctx.net_return);
      case RewardKind::kZero:
        return 0.0;
    }
    return 0.0;
  }
};

}  // namespace allotrl
