#pragma once

// Sequential allocation environment: observation assembly, softmax
// action mapping, scheduled transaction costs, portfolio accounting, and
// reward delegation.

#include <algorithm>
#include <cmath>
#include <optional>

#include "allotrl/common.hpp"
#include "allotrl/marketdata.hpp"
#include "allotrl/oracle.hpp"
#include "allotrl/rewards.hpp"

namespace allotrl {

using Observation = std::array<double, kObsDim>;

struct TcSchedule {
  double tc_max = 0.0025;
  long ramp_steps = 1;    // S; typically 100 * episode_length
  double convexity = 1.0;  // a; 1 in phase 1, 0.45 in phases 2-3
  bool enabled = true;     // ablation toggle: off = full cost from step 0

  void validate() const {
    if (tc_max < 0.0) throw ValidationError("env.tc_max must be >= 0");
    if (ramp_steps < 1) throw ValidationError("tc ramp_steps must be >= 1");
    if (!(convexity > 0.0)) throw ValidationError("tc convexity must be > 0");
  }
};

// TC_train(x) = tc_max / S^a * x^a on [0, S], tc_max beyond.
inline double tc_train(long x, const TcSchedule& sched) {
  if (x < 0) throw ArgumentError("tc_train: negative step count");
  if (!sched.enabled) return sched.tc_max;
  if (x >= sched.ramp_steps) return sched.tc_max;
  return sched.tc_max *
         std::pow(static_cast<double>(x) / static_cast<double>(sched.ramp_steps),
                  sched.convexity);
}

// Max-shifted stabilized softmax onto the 3-simplex.
inline Vec3 softmax(const Vec3& a) {
  if (!all_finite(a)) throw NumericError("softmax: non-finite input");
  const double m = std::max({a[0], a[1], a[2]});
  Vec3 e{std::exp(a[0] - m), std::exp(a[1] - m), std::exp(a[2] - m)};
  const double s = e[0] + e[1] + e[2];
  return {e[0] / s, e[1] / s, e[2] / s};
}

enum class EnvMode { kTraining, kDeployment };

struct StepResult {
  Observation observation{};
  double reward = 0.0;
  double net_return = 0.0;
  bool episode_end = false;  // cursor wrapped past the last row
  // diagnostics
  double gross_return = 0.0;
  double cost = 0.0;
  double turnover = 0.0;
  double drawdown = 0.0;
  Vec3 weights{};
  std::optional<Vec3> oracle_target;
};

inline constexpr Vec3 kInitialWeights{0.0, 1.0, 0.0};  // all-in 60/40 strategy

class Environment {
 public:
  Environment(TcSchedule sched, RewardFunction reward, OracleConfig oracle_cfg,
              Vec3 initial_weights = kInitialWeights)
      : sched_(sched), reward_(reward), oracle_cfg_(oracle_cfg),
        initial_weights_(initial_weights) {
    sched_.validate();
    oracle_cfg_.validate();
  }

  // Training-mode resets keep the global step so the TC curriculum
  // continues across episodes; deployment pins it at the ramp end.
  Observation reset(const FeatureFrame& frame, EnvMode mode) {
    if (frame.size() == 0) throw ArgumentError("reset: empty frame");
    frame_ = &frame;
    mode_ = mode;
    cursor_ = 0;
    w_prev_ = initial_weights_;
    portfolio_value_ = 1.0;
    peak_value_ = 1.0;
    bench_value_ = 1.0;
    bench_peak_ = 1.0;
    bench_mdd_ = 0.0;
    if (mode_ == EnvMode::kDeployment) global_step_ = sched_.ramp_steps;
    reward_.reset_episode_state();
    initialized_ = true;
    rebuild_panel();
    return observe();
  }

  // Swaps the active frame mid-training (bootstrap data selection)
  // without touching the TC curriculum or portfolio accounting.
  void swap_frame(const FeatureFrame& frame) {
    if (!initialized_) throw StateError("swap_frame before reset");
    if (frame.size() == 0) throw ArgumentError("swap_frame: empty frame");
    frame_ = &frame;
    cursor_ = std::min(cursor_, frame.size() - 1);
    rebuild_panel();
  }

  StepResult step(const Vec3& action) {
    if (!initialized_) throw StateError("step before reset");
    if (!all_finite(action)) throw NumericError("step: non-finite action");

    StepResult res;
    const Vec3 w_t = softmax(action);
    const double tc_now = current_tc();
    res.turnover = l1_distance(w_t, w_prev_);
    res.cost = tc_now * res.turnover;

    // Trade at t, earn the next period's strategy returns.
    const std::size_t next = (cursor_ + 1) % frame_->size();
    const Vec3& mu_next = frame_->mu[next];
    res.gross_return = dot(w_t, mu_next);
    res.net_return = res.gross_return - res.cost;
    portfolio_value_ *= 1.0 + res.net_return;
    if (!(portfolio_value_ > 0.0))
      throw NumericError("step: portfolio value drove nonpositive");
    peak_value_ = std::max(peak_value_, portfolio_value_);
    res.drawdown = (peak_value_ - portfolio_value_) / peak_value_;
    res.weights = w_t;

    // 60/40 benchmark path over the same window, for the dynamic alpha.
    bench_value_ *= 1.0 + mu_next[1];
    bench_peak_ = std::max(bench_peak_, bench_value_);
    bench_mdd_ = std::max(bench_mdd_, (bench_peak_ - bench_value_) / bench_peak_);

    if (mode_ == EnvMode::kDeployment) {
      res.reward = 0.0;
      if (reward_.kind == RewardKind::kRegret || want_oracle_diagnostics_)
        res.oracle_target = compute_oracle(tc_now).value_or(w_t);
    } else {
      RewardContext ctx;
      ctx.net_return = res.net_return;
      ctx.cum_return = portfolio_value_ - 1.0;
      ctx.drawdown = res.drawdown;
      ctx.benchmark_mdd = bench_mdd_;
      ctx.w_t = w_t;
      if (reward_.kind == RewardKind::kRegret) {
        auto stats = try_forward_stats();
        if (stats) {
          ctx.forward_valid = true;
          ctx.mu_fwd = stats->mu_fwd;
          const Vec3 w_star =
              oracle_weights(*stats, tc_now, w_prev_, oracle_cfg_);
          ctx.w_star = w_star;
          res.oracle_target = w_star;
        }
      }
      res.reward = reward_(ctx);
    }

    w_prev_ = w_t;
    if (cursor_ + 1 >= frame_->size()) {
      cursor_ = 0;
      res.episode_end = true;
      portfolio_value_ = 1.0;
      peak_value_ = 1.0;
      bench_value_ = 1.0;
      bench_peak_ = 1.0;
      bench_mdd_ = 0.0;
      reward_.reset_episode_state();
    } else {
      ++cursor_;
    }
    if (mode_ == EnvMode::kTraining) ++global_step_;
    res.observation = observe();
    return res;
  }

  double current_tc() const {
    return mode_ == EnvMode::kDeployment ? sched_.tc_max
                                         : tc_train(global_step_, sched_);
  }

  Observation observe() const {
    if (!initialized_) throw StateError("observe before reset");
    Observation o{};
    const std::size_t t = cursor_;
    for (int k = 0; k < 3; ++k) {
      o[0 + k] = frame_->mu[t][k];
      o[3 + k] = frame_->alpha[t][k];
      o[6 + k] = frame_->mu_roll[t][k];
      o[9 + k] = frame_->sigma_roll[t][k];
      o[12 + k] = frame_->q_roll[t][k];
      o[15 + k] = w_prev_[k];
    }
    o[18] = current_tc();
    return o;
  }

  long global_step() const { return global_step_; }
  std::size_t cursor() const { return cursor_; }
  double portfolio_value() const { return portfolio_value_; }
  const Vec3& previous_weights() const { return w_prev_; }
  Date current_date() const { return frame_->dates[cursor_]; }
  std::size_t episode_length() const { return frame_->size(); }
  long skipped_forward_steps() const { return reward_.skipped_forward_steps; }
  void set_oracle_diagnostics(bool on) { want_oracle_diagnostics_ = on; }
  const TcSchedule& schedule() const { return sched_; }
  RewardKind reward_kind() const { return reward_.kind; }

 private:
  void rebuild_panel() {
    panel_.dates = frame_->dates;
    panel_.assets = frame_->mu;
    panel_.indexes = frame_->alpha;
  }

  // Forward stats on the active frame's own grid; the window shrinks at
  // the data end and steps with fewer than 2 forward rows yield nullopt.
  std::optional<ForwardStats> try_forward_stats() const {
    if (cursor_ + 2 >= panel_.size()) return std::nullopt;
    try {
      return forward_stats(panel_, cursor_, oracle_cfg_.horizon_n,
                           oracle_cfg_.ridge);
    } catch (const InsufficientDataError&) {
      return std::nullopt;
    }
  }

  std::optional<Vec3> compute_oracle(double tc_now) const {
    auto stats = try_forward_stats();
    if (!stats) return std::nullopt;
    return oracle_weights(*stats, tc_now, w_prev_, oracle_cfg_);
  }

  TcSchedule sched_;
  RewardFunction reward_;
  OracleConfig oracle_cfg_;
  Vec3 initial_weights_;

  const FeatureFrame* frame_ = nullptr;
  ReturnPanel panel_;  // frame mirrored as a panel for oracle statistics
  EnvMode mode_ = EnvMode::kTraining;
  std::size_t cursor_ = 0;
  long global_step_ = 0;
  Vec3 w_prev_ = kInitialWeights;
  double portfolio_value_ = 1.0;
  double peak_value_ = 1.0;
  double bench_value_ = 1.0;
  double bench_peak_ = 1.0;
  double bench_mdd_ = 0.0;
  bool initialized_ = false;
  bool want_oracle_diagnostics_ = false;
};

}  // namespace allotrl
