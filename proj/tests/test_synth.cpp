#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "allotrl/synth.hpp"
#include "helpers.hpp"

using namespace allotrl;

namespace {

bool rows_equal(const ReturnPanel& a, std::size_t i, const ReturnPanel& b,
                std::size_t j) {
  return a.assets[i] == b.assets[j] && a.indexes[i] == b.indexes[j];
}

bool is_row_of(const ReturnPanel& out, std::size_t i, const ReturnPanel& in) {
  for (std::size_t j = 0; j < in.size(); ++j)
    if (rows_equal(out, i, in, j)) return true;
  return false;
}

}  // namespace

TEST_CASE("bootstrap preserves length and resamples whole rows") {
  Rng fix(31);
  const ReturnPanel panel = testutil::random_panel(57, fix);
  BootstrapConfig cfg;
  cfg.block_fraction = 0.3;
  Rng rng(5);
  const ReturnPanel out = circular_block_bootstrap(panel, cfg, rng);
  REQUIRE(out.size() == panel.size());
  CHECK(out.dates == panel.dates);
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(is_row_of(out, i, panel));
}

TEST_CASE("bootstrap with block_fraction 1 is a rotation") {
  Rng fix(32);
  const ReturnPanel panel = testutil::random_panel(20, fix);
  BootstrapConfig cfg;
  cfg.block_fraction = 1.0;
  Rng rng(9);
  const ReturnPanel out = circular_block_bootstrap(panel, cfg, rng);
  REQUIRE(out.size() == panel.size());
  // find the offset from row 0, then verify the full rotation
  std::size_t offset = panel.size();
  for (std::size_t j = 0; j < panel.size(); ++j)
    if (rows_equal(out, 0, panel, j)) {
      offset = j;
      break;
    }
  REQUIRE(offset < panel.size());
  for (std::size_t i = 0; i < panel.size(); ++i)
    CHECK(rows_equal(out, i, panel, (offset + i) % panel.size()));
}

TEST_CASE("bootstrap determinism per seed") {
  Rng fix(33);
  const ReturnPanel panel = testutil::random_panel(40, fix);
  BootstrapConfig cfg;
  Rng r1(123), r2(123), r3(124);
  const ReturnPanel a = circular_block_bootstrap(panel, cfg, r1);
  const ReturnPanel b = circular_block_bootstrap(panel, cfg, r2);
  const ReturnPanel c = circular_block_bootstrap(panel, cfg, r3);
  CHECK(a.assets == b.assets);
  CHECK(a.indexes == b.indexes);
  bool differs = a.assets != c.assets;
  CHECK(differs);

  ReturnPanel empty;
  CHECK_THROWS_AS(circular_block_bootstrap(empty, cfg, r1), ArgumentError);
}

TEST_CASE("regime market degenerate cases") {
  RegimeGenConfig cfg;
  cfg.n_steps = 50;
  cfg.seed = 1;
  cfg.regimes = {Regime{Vec3{0.01, 0.002, -0.003}, Mat3{}, Vec3{}, Mat3{}}};
  cfg.transition = {{1.0}};
  const ReturnPanel p = generate_regime_market(cfg);
  REQUIRE(p.size() == 50);
  for (std::size_t t = 0; t < p.size(); ++t) {
    CHECK(p.assets[t][0] == Catch::Approx(0.01));
    CHECK(p.assets[t][2] == Catch::Approx(-0.003));
  }

  // two regimes, no transitions → stays in regime 0
  cfg.regimes.push_back(Regime{Vec3{-0.5, -0.5, -0.5}, Mat3{}, Vec3{}, Mat3{}});
  cfg.transition = {{1.0, 0.0}, {0.0, 1.0}};
  const ReturnPanel q = generate_regime_market(cfg);
  for (std::size_t t = 0; t < q.size(); ++t)
    CHECK(q.assets[t][0] == Catch::Approx(0.01));
}

TEST_CASE("regime market law of large numbers and determinism") {
  RegimeGenConfig cfg;
  cfg.n_steps = 10000;
  cfg.seed = 7;
  Mat3 cov{};
  for (int i = 0; i < 3; ++i) cov[i][i] = 0.0001;
  cfg.regimes = {Regime{Vec3{0.001, 0.0, -0.001}, cov, Vec3{}, Mat3{}}};
  cfg.transition = {{1.0}};
  const ReturnPanel p = generate_regime_market(cfg);
  const double se = 0.01 / std::sqrt(10000.0);
  for (int k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) mean += p.assets[t][k];
    mean /= static_cast<double>(p.size());
    CHECK(std::abs(mean - cfg.regimes[0].mean[k]) < 4.0 * se);
  }
  const ReturnPanel p2 = generate_regime_market(cfg);
  CHECK(p.assets == p2.assets);

  // non-PSD covariance rejected
  Mat3 bad{};
  bad[0][0] = -1.0;
  RegimeGenConfig bc = cfg;
  bc.regimes[0].cov = bad;
  CHECK_THROWS_AS(generate_regime_market(bc), ValidationError);
}

TEST_CASE("training_data_selector degenerate probabilities") {
  Rng fix(34);
  const ReturnPanel original = testutil::random_panel(30, fix);

  BootstrapConfig never;
  never.swap_probability = 0.0;
  Rng r1(1);
  for (long e = 0; e < 50; e += never.swap_interval_episodes) {
    const ReturnPanel sel =
        training_data_selector(e, never, r1, original, original);
    CHECK(sel.assets == original.assets);
  }

  BootstrapConfig always;
  always.swap_probability = 1.0;
  Rng r2(2);
  int synthetic = 0;
  for (long e = 0; e < 100; e += always.swap_interval_episodes) {
    const ReturnPanel sel =
        training_data_selector(e, always, r2, original, original);
    if (sel.assets != original.assets) ++synthetic;
  }
  CHECK(synthetic == 10);  // fresh bootstrap at every decision point
}

TEST_CASE("training_data_selector binomial concentration at defaults") {
  Rng fix(35);
  const ReturnPanel original = testutil::random_panel(25, fix);
  BootstrapConfig cfg;  // 0.7, every 10 episodes
  Rng rng(77);
  int synthetic = 0;
  const int decisions = 1000;
  for (int d = 0; d < decisions; ++d) {
    const ReturnPanel sel = training_data_selector(
        static_cast<long>(d) * cfg.swap_interval_episodes, cfg, rng, original,
        original);
    if (sel.assets != original.assets) ++synthetic;
  }
  const double frac = static_cast<double>(synthetic) / decisions;
  CHECK(frac > 0.65);
  CHECK(frac < 0.75);
}

TEST_CASE("training_data_selector keeps current between decisions") {
  Rng fix(36);
  const ReturnPanel original = testutil::random_panel(25, fix);
  Rng mut(55);
  BootstrapConfig cfg;
  const ReturnPanel current = circular_block_bootstrap(original, cfg, mut);
  Rng rng(3);
  const ReturnPanel sel =
      training_data_selector(5, cfg, rng, original, current);  // 5 % 10 != 0
  CHECK(sel.assets == current.assets);
}

TEST_CASE("deterministic alternation reproduces the prose schedule") {
  Rng fix(37);
  const ReturnPanel original = testutil::random_panel(25, fix);
  BootstrapConfig cfg;
  cfg.deterministic_alternation = true;
  Rng rng(1);
  bool expect_synth = false;  // first block is real data
  for (int d = 0; d < 6; ++d) {
    const ReturnPanel sel = training_data_selector(
        static_cast<long>(d) * cfg.swap_interval_episodes, cfg, rng, original,
        original);
    const bool is_synth = sel.assets != original.assets;
    CHECK(is_synth == expect_synth);
    expect_synth = !expect_synth;
  }
}
