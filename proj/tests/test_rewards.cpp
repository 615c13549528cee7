#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "allotrl/rewards.hpp"
#include "allotrl/common.hpp"

using namespace allotrl;

TEST_CASE("regret reward direct cases") {
  CHECK(regret_reward(Vec3{0.03, -0.01, 0.2}, Vec3{0.2, 0.5, 0.3},
                      Vec3{0.2, 0.5, 0.3}) == 0.0);
  CHECK(regret_reward(Vec3{0.01, 0.0, -0.01}, Vec3{1, 0, 0}, Vec3{0, 0, 1}) ==
        Catch::Approx(-0.02));
  CHECK(regret_reward(Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}) == 0.0);
}

TEST_CASE("regret reward identities over random cases") {
  Rng rng(51);
  for (int i = 0; i < 1000; ++i) {
    Vec3 mu{0.02 * rng.normal(), 0.02 * rng.normal(), 0.02 * rng.normal()};
    Vec3 a{rng.uniform(), rng.uniform(), rng.uniform()};
    Vec3 b{rng.uniform(), rng.uniform(), rng.uniform()};
    const double sa = a[0] + a[1] + a[2], sb = b[0] + b[1] + b[2];
    for (int k = 0; k < 3; ++k) {
      a[k] /= sa;
      b[k] /= sb;
    }
    CHECK(regret_reward(mu, a, a) == 0.0);
    CHECK(regret_reward(mu, a, b) == -regret_reward(mu, b, a));
  }
}

TEST_CASE("differential sharpe first step and update equations") {
  DiffSharpeState st;  // A = B = 0
  const double r = 0.0123;
  const double d1 = differential_sharpe(st, r);
  CHECK(d1 == 0.0);
  CHECK(st.a == Catch::Approx(st.eta * r).margin(1e-18));
  CHECK(st.b == Catch::Approx(st.eta * r * r).margin(1e-18));

  // single update: A' = A + eta (r - A) exactly
  DiffSharpeState s2;
  s2.a = 0.004;
  s2.b = 0.0001;
  const double old_a = s2.a;
  differential_sharpe(s2, 0.01);
  CHECK(s2.a == old_a + s2.eta * (0.01 - old_a));
}

TEST_CASE("differential sharpe matches independent recurrence") {
  Rng rng(52);
  DiffSharpeState st;
  double a = 0.0, b = 0.0;
  const double eta = st.eta;
  for (int i = 0; i < 1000; ++i) {
    const double r = 0.02 * rng.normal();
    // reference recurrence, coded separately
    const double da = r - a, db = r * r - b;
    const double denom = std::pow(b - a * a, 1.5);
    const double want = denom > 1e-12 ? (b * da - 0.5 * a * db) / denom : 0.0;
    const double got = differential_sharpe(st, r);
    CHECK(got == Catch::Approx(want).margin(1e-12));
    a += eta * da;
    b += eta * db;
    CHECK(st.a == Catch::Approx(a).margin(1e-15));
    CHECK(st.b == Catch::Approx(b).margin(1e-15));
    CHECK(st.b >= st.a * st.a - 1e-12);
  }
}

TEST_CASE("differential sharpe converges to zero on constant stream") {
  DiffSharpeState st;
  double last = 1.0;
  for (int i = 0; i < 20000; ++i) last = differential_sharpe(st, 0.005);
  CHECK(st.a == Catch::Approx(0.005).margin(1e-6));
  CHECK(st.b == Catch::Approx(0.005 * 0.005).margin(1e-6));
  CHECK(std::abs(last) < 1e-4);
}

TEST_CASE("embedded drawdown reward") {
  EmbeddedDdConfig cfg;
  CHECK(embedded_drawdown_reward(cfg, 0.3, 0.2, 0.2) == 0.0);
  CHECK(embedded_drawdown_reward(cfg, 1.0, 0.3, 0.1) < 0.0);  // penalty
  CHECK(embedded_drawdown_reward(cfg, -1.0, 0.05, 0.2) > 0.0);

  // sign follows alpha - mdd for any r_cum
  Rng rng(53);
  for (int i = 0; i < 1000; ++i) {
    const double r = 10.0 * rng.normal();
    const double mdd = rng.uniform() * 0.9;
    const double alpha = rng.uniform() * 0.9;
    const double rew = embedded_drawdown_reward(cfg, r, mdd, alpha);
    if (alpha > mdd) CHECK(rew > 0.0);
    if (alpha < mdd) CHECK(rew < 0.0);
  }

  // saturation: sigmoid → 1 as r_cum → ∞
  const double sat = embedded_drawdown_reward(cfg, 50.0, 0.0, 0.1);
  CHECK(sat ==
        Catch::Approx(cfg.k * (std::exp(0.1) - 1.0)).margin(1e-9));
}

TEST_CASE("return reward is the identity") {
  CHECK(return_reward(0.01) == 0.01);
  CHECK(return_reward(0.0) == 0.0);
  CHECK(return_reward(-0.02) == -0.02);
}

TEST_CASE("reward kind round trip") {
  for (const auto* name : {"regret", "diff_sharpe", "embedded_dd", "return"})
    CHECK(to_string(reward_kind_from_string(name)) == name);
  CHECK_THROWS_AS(reward_kind_from_string("nope"), ConfigError);
}

TEST_CASE("reward function dispatch") {
  RewardContext ctx;
  ctx.net_return = 0.015;
  ctx.cum_return = 0.4;
  ctx.drawdown = 0.1;
  ctx.benchmark_mdd = 0.2;
  ctx.mu_fwd = Vec3{0.01, 0.0, -0.01};
  ctx.w_star = Vec3{1, 0, 0};
  ctx.w_t = Vec3{0, 0, 1};
  ctx.forward_valid = true;

  RewardFunction f;
  f.kind = RewardKind::kReturn;
  CHECK(f(ctx) == Catch::Approx(0.015));
  f.kind = RewardKind::kRegret;
  CHECK(f(ctx) == Catch::Approx(-0.02));
  f.kind = RewardKind::kZero;
  CHECK(f(ctx) == 0.0);

  // regret with no forward window → 0 and counted
  f.kind = RewardKind::kRegret;
  ctx.forward_valid = false;
  CHECK(f(ctx) == 0.0);
  CHECK(f.skipped_forward_steps == 1);
}
