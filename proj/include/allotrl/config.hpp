#pragma once

// Run configuration: a flat dotted-key text file plus ALLOTRL_<KEY>
// environment overrides, materialized into the per-module config structs.

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "allotrl/common.hpp"
#include "allotrl/env.hpp"
#include "allotrl/marketdata.hpp"
#include "allotrl/oracle.hpp"
#include "allotrl/ppo.hpp"
#include "allotrl/rewards.hpp"
#include "allotrl/synth.hpp"

namespace allotrl {

class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto s = detail::trim(line);
      if (s.empty() || s[0] == '#') continue;
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": expected `key = value`");
      cfg.values_[detail::trim(s.substr(0, eq))] =
          detail::trim(s.substr(eq + 1));
    }
    cfg.apply_env_overrides();
    return cfg;
  }

  // ALLOTRL_PPO_LR=0.01 overrides key `ppo.lr`, matched case-insensitively
  // with dots mapped to underscores.
  void apply_env_overrides() {
    for (auto& [key, value] : values_) {
      std::string env_key = "ALLOTRL_";
      for (char c : key)
        env_key += c == '.' ? '_' : static_cast<char>(std::toupper(c));
      if (const char* v = std::getenv(env_key.c_str())) value = v;
    }
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": not a number: '" +
                        it->second + "'");
    }
  }

  long get_long(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stol(it->second);
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": not an integer: '" +
                        it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "on" || it->second == "1")
      return true;
    if (it->second == "false" || it->second == "off" || it->second == "0")
      return false;
    throw ConfigError("config key " + key + ": not a boolean: '" + it->second +
                      "'");
  }

  std::vector<std::string> get_list(const std::string& key,
                                    const std::string& fallback) const {
    std::vector<std::string> out;
    std::stringstream ss(get_string(key, fallback));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto t = detail::trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  // Canonical text (sorted keys) used for the checkpoint config hash.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  std::uint64_t hash() const { return fnv1a(canonical()); }

 private:
  std::map<std::string, std::string> values_;
};

struct RunConfig {
  // data
  std::string prices_csv;
  std::string index_csv;
  std::string feature_store;
  bool compose = true;  // apply the default strategy composition
  std::size_t stride = 2;
  std::size_t mean_window = 40;
  std::size_t std_window = 60;
  double periods_per_year = kPeriodsPerYearBiDaily;
  // benchmark 60/40 rebalancing: "daily" (default) or "drift"
  std::string benchmark_mode = "daily";

  PhasePlan phase_plan = PhasePlan::defaults();
  std::vector<int> phases = {1, 2, 3};

  double tc_max = 0.0025;
  double tc_convexity_phase1 = 1.0;
  double tc_convexity_later = 0.45;
  long ramp_episodes = 100;
  bool tc_schedule_enabled = true;
  Vec3 initial_weights = kInitialWeights;

  OracleConfig oracle;
  RewardKind reward_kind = RewardKind::kRegret;
  EmbeddedDdConfig embedded_dd;
  double diff_sharpe_eta = 1.0 / 252.0;

  PpoConfig ppo;
  BootstrapConfig bootstrap;

  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "runs";
  std::uint64_t config_hash = 0;

  double tc_convexity(int phase) const {
    return phase == 1 ? tc_convexity_phase1 : tc_convexity_later;
  }

  static RunConfig from_kv(const KeyValueConfig& kv) {
    RunConfig rc;
    rc.prices_csv = kv.get_string("data.prices_csv", "");
    rc.index_csv = kv.get_string("data.index_csv", "");
    rc.feature_store = kv.get_string("data.feature_store", "");
    rc.compose = kv.get_bool("data.compose", true);
    rc.stride = static_cast<std::size_t>(kv.get_long("env.stride", 2));
    rc.mean_window =
        static_cast<std::size_t>(kv.get_long("features.mean_window", 40));
    rc.std_window =
        static_cast<std::size_t>(kv.get_long("features.std_window", 60));
    rc.benchmark_mode = kv.get_string("benchmark.rebalance", "daily");
    if (rc.benchmark_mode != "daily" && rc.benchmark_mode != "drift")
      throw ConfigError("benchmark.rebalance must be `daily` or `drift`");
    if (rc.stride == 0) throw ConfigError("env.stride must be >= 1");
    rc.periods_per_year =
        kv.get_double("metrics.periods_per_year",
                      kPeriodsPerYearDaily / static_cast<double>(rc.stride));

    for (int p = 1; p <= 3; ++p) {
      auto& w = rc.phase_plan.phases[static_cast<std::size_t>(p - 1)];
      const std::string pre = "phase" + std::to_string(p) + ".";
      auto date_or = [&](const std::string& key, Date fallback) {
        const std::string s = kv.get_string(pre + key, "");
        return s.empty() ? fallback : Date::parse_iso(s);
      };
      w.train_start = date_or("train_start", w.train_start);
      w.train_end = date_or("train_end", w.train_end);
      w.valid_start = date_or("valid_start", w.valid_start);
      w.valid_end = date_or("valid_end", w.valid_end);
      w.test_start = date_or("test_start", w.test_start);
      w.test_end = date_or("test_end", w.test_end);
    }
    rc.phases.clear();
    for (const auto& s : kv.get_list("run.phases", "1,2,3"))
      rc.phases.push_back(static_cast<int>(std::stol(s)));

    rc.tc_max = kv.get_double("env.tc_max", 0.0025);
    rc.tc_convexity_phase1 = kv.get_double("env.tc_convexity", 1.0);
    rc.tc_convexity_later =
        kv.get_double("env.tc_convexity_later", 0.45);
    rc.ramp_episodes = kv.get_long("env.ramp_episodes", 100);
    rc.tc_schedule_enabled = kv.get_bool("env.tc_schedule", true);
    auto iw = kv.get_list("env.initial_weights", "0,1,0");
    if (iw.size() != 3) throw ConfigError("env.initial_weights needs 3 values");
    for (int k = 0; k < 3; ++k)
      rc.initial_weights[static_cast<std::size_t>(k)] = std::stod(iw[static_cast<std::size_t>(k)]);

    rc.oracle.horizon_n =
        static_cast<std::size_t>(kv.get_long("oracle.horizon_n", 14));
    rc.oracle.grid_resolution = kv.get_double("oracle.grid_resolution", 0.01);
    rc.oracle.risk_free = kv.get_double("oracle.risk_free", 0.0);
    rc.oracle.ridge = kv.get_double("oracle.ridge", 1e-10);
    rc.oracle.validate();

    rc.reward_kind =
        reward_kind_from_string(kv.get_string("reward.kind", "regret"));
    rc.embedded_dd.k = kv.get_double("reward.embedded_dd.k", 2.0);
    rc.embedded_dd.alpha_dynamic =
        kv.get_string("reward.embedded_dd.alpha_mode", "benchmark") ==
        "benchmark";
    rc.embedded_dd.alpha_fixed = kv.get_double("reward.embedded_dd.alpha", 0.1);
    rc.embedded_dd.validate();
    rc.diff_sharpe_eta = kv.get_double("reward.diff_sharpe.eta", 1.0 / 252.0);

    rc.ppo.gamma = kv.get_double("ppo.gamma", 0.99);
    rc.ppo.lr = kv.get_double("ppo.lr", 0.001);
    rc.ppo.clip_eps = kv.get_double("ppo.clip_eps", 0.2);
    rc.ppo.n_steps = static_cast<int>(kv.get_long("ppo.n_steps", 2048));
    rc.ppo.batch_size = static_cast<int>(kv.get_long("ppo.batch_size", 64));
    rc.ppo.beta_value = kv.get_double("ppo.beta_value", 1.0);
    rc.ppo.beta_entropy_start =
        kv.get_double("ppo.beta_entropy_start", 0.00005);
    rc.ppo.gae_lambda = kv.get_double("ppo.gae_lambda", 0.95);
    rc.ppo.epochs_per_update =
        static_cast<int>(kv.get_long("ppo.epochs_per_update", 10));
    rc.ppo.max_grad_norm = kv.get_double("ppo.max_grad_norm", 0.5);
    rc.ppo.normalize_advantages =
        kv.get_bool("ppo.normalize_advantages", true);
    rc.ppo.episodes = static_cast<int>(kv.get_long("ppo.episodes", 300));
    rc.ppo.eval_interval_episodes =
        static_cast<int>(kv.get_long("ppo.eval_interval_episodes", 10));
    rc.ppo.entropy_decay_end_fraction =
        kv.get_double("ppo.entropy_decay_end_fraction", 0.1);
    rc.ppo.selection_mdd_penalty =
        kv.get_double("ppo.selection_mdd_penalty", 1.0);
    rc.ppo.hidden = static_cast<int>(kv.get_long("ppo.hidden", 64));
    rc.ppo.validate();

    rc.bootstrap.block_fraction = kv.get_double("bootstrap.block_fraction", 0.8);
    rc.bootstrap.swap_probability =
        kv.get_double("bootstrap.swap_probability", 0.7);
    rc.bootstrap.swap_interval_episodes = static_cast<int>(
        kv.get_long("bootstrap.swap_interval_episodes", 10));
    rc.bootstrap.deterministic_alternation =
        kv.get_bool("bootstrap.deterministic_alternation", false);
    rc.bootstrap.enabled = kv.get_bool("bootstrap.enabled", true);
    rc.bootstrap.validate();

    rc.seeds.clear();
    for (const auto& s : kv.get_list("run.seeds", "1"))
      rc.seeds.push_back(static_cast<std::uint64_t>(std::stoull(s)));
    if (rc.seeds.empty()) throw ConfigError("run.seeds must be non-empty");
    rc.out_dir = kv.get_string("run.out_dir", "runs");
    rc.config_hash = kv.hash();
    return rc;
  }

  RewardFunction make_reward() const {
    RewardFunction r;
    r.kind = reward_kind;
    r.embedded_dd = embedded_dd;
    r.diff_sharpe_state.eta = diff_sharpe_eta;
    return r;
  }

  TcSchedule make_schedule(int phase, std::size_t episode_length) const {
    TcSchedule s;
    s.tc_max = tc_max;
    s.convexity = tc_convexity(phase);
    s.ramp_steps =
        std::max<long>(1, ramp_episodes * static_cast<long>(episode_length));
    s.enabled = tc_schedule_enabled;
    return s;
  }
};

}  // namespace allotrl
