#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "allotrl/oracle.hpp"
#include "helpers.hpp"

using namespace allotrl;

namespace {

// 3x3 solve via Cramer's rule, independent of the library code.
Vec3 solve3(const Mat3& a, const Vec3& b) {
  auto det3 = [](const Mat3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double d = det3(a);
  Vec3 x{};
  for (int c = 0; c < 3; ++c) {
    Mat3 m = a;
    for (int r = 0; r < 3; ++r) m[r][c] = b[r];
    x[c] = det3(m) / d;
  }
  return x;
}

}  // namespace

TEST_CASE("forward_stats on constant panel") {
  const Vec3 c{0.01, -0.005, 0.002};
  const ReturnPanel panel = testutil::constant_panel(200, c);
  const ForwardStats st = forward_stats(panel, 100, 14);
  for (int k = 0; k < 3; ++k) {
    CHECK(st.mu_fwd[k] == Catch::Approx(c[k]).margin(1e-15));
    for (int j = 0; j < 3; ++j) {
      const double want = k == j ? 1e-10 : 0.0;
      CHECK(st.sigma_wide[k][j] == Catch::Approx(want).margin(1e-18));
    }
  }
}

TEST_CASE("forward_stats n=1 equals next row; end of data throws") {
  Rng rng(41);
  const ReturnPanel panel = testutil::random_panel(100, rng);
  const ForwardStats st = forward_stats(panel, 50, 1);
  for (int k = 0; k < 3; ++k)
    CHECK(st.mu_fwd[k] == Catch::Approx(panel.assets[51][k]).margin(1e-16));
  CHECK_THROWS_AS(forward_stats(panel, 99, 14), InsufficientDataError);
}

TEST_CASE("forward_stats matches explicit slice statistics") {
  Rng rng(42);
  const ReturnPanel panel = testutil::random_panel(500, rng);
  const std::size_t t = 250, n = 14;
  const ForwardStats st = forward_stats(panel, t, n);

  Vec3 mu{};
  for (std::size_t j = t + 1; j < t + 1 + n; ++j)
    for (int k = 0; k < 3; ++k) mu[k] += panel.assets[j][k];
  for (int k = 0; k < 3; ++k) mu[k] /= static_cast<double>(n);
  for (int k = 0; k < 3; ++k)
    CHECK(st.mu_fwd[k] == Catch::Approx(mu[k]).margin(1e-15));

  const std::size_t lo = t - 3 * n, hi = t + 3 * n;  // [lo, hi)
  const double m = static_cast<double>(hi - lo);
  Vec3 mean{};
  for (std::size_t j = lo; j < hi; ++j)
    for (int k = 0; k < 3; ++k) mean[k] += panel.assets[j][k];
  for (int k = 0; k < 3; ++k) mean[k] /= m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (std::size_t j = lo; j < hi; ++j)
        s += (panel.assets[j][a] - mean[a]) * (panel.assets[j][b] - mean[b]);
      double want = s / (m - 1.0);
      if (a == b) want += 1e-10;
      CHECK(st.sigma_wide[a][b] == Catch::Approx(want).margin(1e-15));
    }
}

TEST_CASE("sharpe reductions") {
  Mat3 sigma{};
  sigma[0][0] = 0.04;
  sigma[1][1] = 0.09;
  sigma[2][2] = 0.01;
  const Vec3 mu{0.02, 0.01, 0.005};
  CHECK(sharpe(Vec3{1, 0, 0}, mu, sigma, 0.001) ==
        Catch::Approx((0.02 - 0.001) / 0.2));
  // mu = r_f * 1 → zero for any w
  CHECK(sharpe(Vec3{0.3, 0.3, 0.4}, Vec3{0.01, 0.01, 0.01}, sigma, 0.01) ==
        Catch::Approx(0.0).margin(1e-15));
  // degenerate variance floored, no division by zero
  CHECK(std::isfinite(sharpe(Vec3{1, 0, 0}, mu, Mat3{}, 0.0)));

  // random PSD sigma: matches independent quadratic form
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    Mat3 l{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j) l[i][j] = 0.1 * rng.normal();
    Mat3 s{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) s[i][j] += l[i][k] * l[j][k];
    Vec3 w{rng.uniform(), rng.uniform(), rng.uniform()};
    const double tot = w[0] + w[1] + w[2];
    for (int k = 0; k < 3; ++k) w[k] /= tot;
    double var = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) var += w[i] * s[i][j] * w[j];
    const double want =
        dot(w, mu) / std::max(std::sqrt(std::max(var, 0.0)), 1e-12);
    CHECK(sharpe(w, mu, s, 0.0) == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("oracle grid beats random simplex points") {
  Rng rng(44);
  OracleConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    ForwardStats st;
    for (int k = 0; k < 3; ++k) st.mu_fwd[k] = 0.02 * rng.normal();
    Mat3 l{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j) l[i][j] = 0.05 * rng.normal();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        st.sigma_wide[i][j] = 0.0;
        for (int k = 0; k < 3; ++k) st.sigma_wide[i][j] += l[i][k] * l[j][k];
      }
    const double tc = 0.003 * rng.uniform();
    Vec3 wp{rng.uniform(), rng.uniform(), rng.uniform()};
    const double tot = wp[0] + wp[1] + wp[2];
    for (int k = 0; k < 3; ++k) wp[k] /= tot;

    const Vec3 ws = oracle_weights(st, tc, wp, cfg);
    const double best =
        sharpe(ws, st.mu_fwd, st.sigma_wide, cfg.risk_free) -
        tc * l1_distance(ws, wp);
    for (int probe = 0; probe < 500; ++probe) {
      Vec3 w{rng.uniform(), rng.uniform(), rng.uniform()};
      const double s = w[0] + w[1] + w[2];
      for (int k = 0; k < 3; ++k) w[k] /= s;
      const double obj = sharpe(w, st.mu_fwd, st.sigma_wide, cfg.risk_free) -
                         tc * l1_distance(w, wp);
      CHECK(best >= obj - 1e-12);
    }
  }
}

TEST_CASE("oracle matches tangency portfolio at zero cost") {
  OracleConfig cfg;
  ForwardStats st;
  st.mu_fwd = Vec3{0.02, 0.01, 0.01};
  st.sigma_wide = Mat3{};
  st.sigma_wide[0][0] = 0.01;
  st.sigma_wide[1][1] = 0.04;
  st.sigma_wide[2][2] = 0.04;
  const Vec3 ws = oracle_weights(st, 0.0, Vec3{1.0 / 3, 1.0 / 3, 1.0 / 3}, cfg);
  const Vec3 raw = solve3(st.sigma_wide, st.mu_fwd);
  const double tot = raw[0] + raw[1] + raw[2];
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(ws[k] - raw[k] / tot) <= cfg.grid_resolution + 1e-12);
}

TEST_CASE("oracle penalty dominance and tie-breaking") {
  OracleConfig cfg;
  cfg.grid_resolution = 1.0 / 3.0;  // puts (1/3,1/3,1/3) on the grid
  ForwardStats st;
  st.mu_fwd = Vec3{0.01, 0.005, 0.002};
  st.sigma_wide = Mat3{};
  for (int i = 0; i < 3; ++i) st.sigma_wide[i][i] = 0.01;
  const Vec3 wp{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  const Vec3 ws = oracle_weights(st, 1e6, wp, cfg);
  for (int k = 0; k < 3; ++k)
    CHECK(ws[k] == Catch::Approx(wp[k]).margin(1e-12));

  // full degeneracy: equal objective everywhere → stay put (turnover tie)
  ForwardStats flat;
  flat.mu_fwd = Vec3{0.0, 0.0, 0.0};
  flat.sigma_wide = Mat3{};
  const Vec3 wd = oracle_weights(flat, 0.01, wp, cfg);
  for (int k = 0; k < 3; ++k)
    CHECK(wd[k] == Catch::Approx(wp[k]).margin(1e-12));
}

TEST_CASE("oracle output on simplex grid; finer grid never worse") {
  Rng rng(45);
  OracleConfig coarse, fine;
  coarse.grid_resolution = 0.05;
  fine.grid_resolution = 0.01;
  for (int trial = 0; trial < 10; ++trial) {
    ForwardStats st;
    for (int k = 0; k < 3; ++k) st.mu_fwd[k] = 0.01 + 0.01 * rng.uniform();
    st.sigma_wide = Mat3{};
    for (int i = 0; i < 3; ++i)
      st.sigma_wide[i][i] = 0.01 + 0.02 * rng.uniform();
    const Vec3 wp{0.0, 1.0, 0.0};

    const Vec3 wc = oracle_weights(st, 0.0, wp, coarse);
    const Vec3 wf = oracle_weights(st, 0.0, wp, fine);
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      sum += wc[k];
      CHECK(wc[k] >= -1e-12);
      const double scaled = wc[k] / coarse.grid_resolution;
      CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
    CHECK(sharpe(wf, st.mu_fwd, st.sigma_wide, 0.0) >=
          sharpe(wc, st.mu_fwd, st.sigma_wide, 0.0) - 1e-12);
  }
}

TEST_CASE("zero-cost argmax invariant under positive scaling of mu and r_f") {
  Rng rng(46);
  OracleConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    ForwardStats st;
    for (int k = 0; k < 3; ++k) st.mu_fwd[k] = 0.02 * rng.normal() + 0.01;
    st.sigma_wide = Mat3{};
    for (int i = 0; i < 3; ++i)
      st.sigma_wide[i][i] = 0.01 + 0.03 * rng.uniform();
    const Vec3 wp{1.0, 0.0, 0.0};
    const Vec3 a = oracle_weights(st, 0.0, wp, cfg);
    ForwardStats scaled = st;
    for (int k = 0; k < 3; ++k) scaled.mu_fwd[k] *= 7.5;
    OracleConfig cfg2 = cfg;
    cfg2.risk_free = cfg.risk_free * 7.5;
    const Vec3 b = oracle_weights(scaled, 0.0, wp, cfg2);
    for (int k = 0; k < 3; ++k) CHECK(a[k] == Catch::Approx(b[k]).margin(1e-12));
  }
}
