#pragma once

// Run orchestration behind the CLI: feature-store ingestion, phased
// training with weight transfer, deployment evaluation, the ablation
// grid, and consolidated reports.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "allotrl/checkpoint.hpp"
#include "allotrl/common.hpp"
#include "allotrl/config.hpp"
#include "allotrl/env.hpp"
#include "allotrl/marketdata.hpp"
#include "allotrl/metrics.hpp"
#include "allotrl/ppo.hpp"
#include "allotrl/rewards.hpp"
#include "allotrl/synth.hpp"

namespace allotrl {

namespace fs = std::filesystem;

inline constexpr const char* kStoreMagic = "allotrl-features v1";
inline constexpr const char* kBenchmarkCheckpoint = "benchmark";

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  fs::create_directories(fs::path(path).parent_path().empty()
                             ? "."
                             : fs::path(path).parent_path().string());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw ArgumentError("cannot write file: " + path);
    f << content;
  }
  fs::rename(tmp, path);
}

inline std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------
// Feature store: one text file holding the source-frequency panel and
// the decision-grid feature frame, plus provenance metadata.

struct FeatureStore {
  ReturnPanel daily_panel;
  FeatureFrame features;
  std::size_t stride = 2;
  std::size_t mean_window = 40;
  std::size_t std_window = 60;
  std::uint64_t source_hash = 0;
};

inline std::string serialize_store(const FeatureStore& store) {
  std::ostringstream out;
  out << kStoreMagic << "\n";
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(store.source_hash));
  out << "source_hash " << hash_buf << "\n";
  out << "stride " << store.stride << "\n";
  out << "mean_window " << store.mean_window << "\n";
  out << "std_window " << store.std_window << "\n";
  out << "[daily_panel]\n";
  out << "date,a1,a2,a3,i1,i2,i3\n";
  for (std::size_t t = 0; t < store.daily_panel.size(); ++t) {
    out << store.daily_panel.dates[t].to_iso();
    for (int k = 0; k < 3; ++k)
      out << "," << detail::fmt(store.daily_panel.assets[t][k]);
    for (int k = 0; k < 3; ++k)
      out << "," << detail::fmt(store.daily_panel.indexes[t][k]);
    out << "\n";
  }
  out << "[features]\n";
  out << "date,mu1,mu2,mu3,alpha1,alpha2,alpha3,mu_roll1,mu_roll2,mu_roll3,"
         "sigma_roll1,sigma_roll2,sigma_roll3,q_roll1,q_roll2,q_roll3\n";
  for (std::size_t t = 0; t < store.features.size(); ++t) {
    out << store.features.dates[t].to_iso();
    for (int k = 0; k < 3; ++k) out << "," << detail::fmt(store.features.mu[t][k]);
    for (int k = 0; k < 3; ++k)
      out << "," << detail::fmt(store.features.alpha[t][k]);
    for (int k = 0; k < 3; ++k)
      out << "," << detail::fmt(store.features.mu_roll[t][k]);
    for (int k = 0; k < 3; ++k)
      out << "," << detail::fmt(store.features.sigma_roll[t][k]);
    for (int k = 0; k < 3; ++k)
      out << "," << detail::fmt(store.features.q_roll[t][k]);
    out << "\n";
  }
  return out.str();
}

inline FeatureStore load_store(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open feature store: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kStoreMagic)
    throw ParseError(path + ": not an allotrl feature store");

  FeatureStore store;
  enum class Section { kMeta, kPanel, kFeatures } section = Section::kMeta;
  bool skip_header = false;
  while (std::getline(in, line)) {
    const std::string s = detail::trim(line);
    if (s.empty()) continue;
    if (s == "[daily_panel]") {
      section = Section::kPanel;
      skip_header = true;
      continue;
    }
    if (s == "[features]") {
      section = Section::kFeatures;
      skip_header = true;
      continue;
    }
    if (skip_header) {  // column header line
      skip_header = false;
      continue;
    }
    if (section == Section::kMeta) {
      std::stringstream ss(s);
      std::string key, value;
      ss >> key >> value;
      if (key == "source_hash")
        store.source_hash = std::stoull(value, nullptr, 16);
      else if (key == "stride")
        store.stride = std::stoul(value);
      else if (key == "mean_window")
        store.mean_window = std::stoul(value);
      else if (key == "std_window")
        store.std_window = std::stoul(value);
      else
        throw ParseError(path + ": unknown metadata key " + key);
      continue;
    }
    auto cells = detail::split_csv_line(s);
    const std::size_t want = section == Section::kPanel ? 7u : 16u;
    if (cells.size() != want)
      throw ParseError(path + ": row with " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(want));
    const Date d = Date::parse_iso(cells[0]);
    auto vec3_at = [&](std::size_t base) {
      return Vec3{std::stod(cells[base]), std::stod(cells[base + 1]),
                  std::stod(cells[base + 2])};
    };
    if (section == Section::kPanel) {
      store.daily_panel.dates.push_back(d);
      store.daily_panel.assets.push_back(vec3_at(1));
      store.daily_panel.indexes.push_back(vec3_at(4));
    } else {
      store.features.dates.push_back(d);
      store.features.mu.push_back(vec3_at(1));
      store.features.alpha.push_back(vec3_at(4));
      store.features.mu_roll.push_back(vec3_at(7));
      store.features.sigma_roll.push_back(vec3_at(10));
      store.features.q_roll.push_back(vec3_at(13));
    }
  }
  if (store.features.size() == 0)
    throw ParseError(path + ": feature section is empty");
  return store;
}

// ---------------------------------------------------------------------
// ingest

// Builds the feature store from asset + index price CSVs. With
// `drift_benchmark` the strategy blends hold their constituents instead
// of rebalancing daily.
inline FeatureStore build_store(const std::string& prices_csv,
                                const std::string& index_csv, bool compose,
                                std::size_t stride, std::size_t mean_window,
                                std::size_t std_window,
                                bool drift_benchmark = false) {
  PriceSeries assets = load_prices(prices_csv);
  PriceSeries indexes = load_prices(index_csv);
  if (indexes.width() != kNumIndexes)
    throw ValidationError(index_csv + ": expected exactly 3 index columns, got " +
                          std::to_string(indexes.width()));

  PriceSeries strategies;
  if (compose) {
    auto table = StrategyWeights::defaults();
    if (assets.width() != table.weights[0].size())
      throw ValidationError(
          prices_csv + ": default strategy composition needs 4 tickers, got " +
          std::to_string(assets.width()));
    strategies = compose_strategies(assets, table, drift_benchmark);
  } else {
    if (assets.width() != kNumAssets)
      throw ValidationError(prices_csv +
                            ": expected exactly 3 strategy columns without "
                            "composition, got " +
                            std::to_string(assets.width()));
    strategies = assets;
  }

  FeatureStore store;
  store.stride = stride;
  store.mean_window = mean_window;
  store.std_window = std_window;
  store.source_hash =
      detail::file_hash(prices_csv) ^ (detail::file_hash(index_csv) << 1);
  store.daily_panel =
      make_return_panel(to_returns(strategies), to_returns(indexes));
  store.features =
      prepare_features(store.daily_panel, stride, mean_window, std_window);
  return store;
}

inline void cmd_ingest(const RunConfig& cfg, const std::string& out_path) {
  if (cfg.prices_csv.empty() || cfg.index_csv.empty())
    throw ConfigError("ingest needs data.prices_csv and data.index_csv");
  FeatureStore store =
      build_store(cfg.prices_csv, cfg.index_csv, cfg.compose, cfg.stride,
                  cfg.mean_window, cfg.std_window,
                  cfg.benchmark_mode == "drift");
  detail::write_file_atomic(out_path, serialize_store(store));
}

// ---------------------------------------------------------------------
// train

struct MetricsRow {
  int phase = 0;
  std::string split;
  std::string reward_kind;
  std::uint64_t seed = 0;
  PerformanceReport report;
};

inline std::string metrics_csv_header() {
  return "phase,split,reward_kind,seed,annual_return,sharpe,sortino,calmar,"
         "omega,max_drawdown,degenerate\n";
}

inline std::string metrics_csv_row(const MetricsRow& r) {
  std::ostringstream out;
  out << r.phase << "," << r.split << "," << r.reward_kind << "," << r.seed
      << "," << detail::fmt(r.report.annual_return) << ","
      << detail::fmt(r.report.sharpe) << "," << detail::fmt(r.report.sortino)
      << "," << detail::fmt(r.report.calmar) << ","
      << detail::fmt(r.report.omega) << ","
      << detail::fmt(r.report.max_drawdown) << ","
      << (r.report.degenerate ? 1 : 0) << "\n";
  return out.str();
}

inline std::string trace_csv(const EvalResult& ev) {
  std::ostringstream out;
  out << "date,w1,w2,w3,wstar1,wstar2,wstar3,net_return,drawdown,reward\n";
  std::vector<double> path = compound_path(ev.net_returns);
  double peak = 1.0;
  for (std::size_t t = 0; t < ev.net_returns.size(); ++t) {
    peak = std::max(peak, path[t + 1]);
    out << ev.dates[t].to_iso();
    for (int k = 0; k < 3; ++k) out << "," << detail::fmt(ev.weights[t][k]);
    if (ev.oracle_targets[t]) {
      for (int k = 0; k < 3; ++k)
        out << "," << detail::fmt((*ev.oracle_targets[t])[k]);
    } else {
      out << ",,,";
    }
    out << "," << detail::fmt(ev.net_returns[t]) << ","
        << detail::fmt((peak - path[t + 1]) / peak) << ",0\n";
  }
  return out.str();
}

inline std::string episodes_csv(const TrainHistory& h) {
  std::ostringstream out;
  out << "episode,train_cum_return,tc_rate,synthetic\n";
  for (const auto& e : h.episodes)
    out << e.episode << "," << detail::fmt(e.train_cum_return) << ","
        << detail::fmt(e.tc_rate) << "," << (e.synthetic_data ? 1 : 0) << "\n";
  return out.str();
}

inline std::string evals_csv(const TrainHistory& h) {
  std::ostringstream out;
  out << "episode,valid_annual_return,valid_mdd,score,is_best\n";
  for (const auto& e : h.evals)
    out << e.episode << "," << detail::fmt(e.valid_annual_return) << ","
        << detail::fmt(e.valid_mdd) << "," << detail::fmt(e.score) << ","
        << (e.is_best ? 1 : 0) << "\n";
  return out.str();
}

struct PhaseData {
  FeatureFrame train, valid, test;
  ReturnPanel train_panel;  // source-frequency rows over the train window
};

inline PhaseData phase_data(const FeatureStore& store, const RunConfig& cfg,
                            int phase) {
  PhaseData out;
  PhaseSplit split = split_phases(store.features, cfg.phase_plan, phase);
  out.train = std::move(split.train);
  out.valid = std::move(split.valid);
  out.test = std::move(split.test);
  const PhaseWindow& w = cfg.phase_plan.window(phase);
  out.train_panel = panel_slice(store.daily_panel, w.train_start, w.train_end);
  return out;
}

inline MetricsRow benchmark_metrics(const RunConfig& cfg, int phase,
                                    const std::string& split,
                                    const FeatureFrame& frame) {
  Environment env(cfg.make_schedule(phase, std::max<std::size_t>(1, frame.size())),
                  RewardFunction{RewardKind::kZero}, cfg.oracle,
                  cfg.initial_weights);
  EvalResult ev = evaluate_constant_policy(kInitialWeights, env, frame,
                                           cfg.periods_per_year);
  MetricsRow row;
  row.phase = phase;
  row.split = split;
  row.reward_kind = "benchmark";
  row.seed = 0;
  row.report = performance_report(ev.net_returns, cfg.periods_per_year);
  return row;
}

// Phases 1..3 with best-validation weight transfer; one run directory per
// seed. Deterministic given (store, config, seed): outputs carry no
// timestamps.
inline void cmd_train(const RunConfig& cfg) {
  if (cfg.feature_store.empty())
    throw ConfigError("train needs data.feature_store");
  FeatureStore store = load_store(cfg.feature_store);

  for (std::uint64_t seed : cfg.seeds) {
    const fs::path seed_dir =
        fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    std::string metrics_out = metrics_csv_header();

    std::optional<NetworkParams> carried;
    for (int phase : cfg.phases) {
      PhaseData data = phase_data(store, cfg, phase);
      if (data.train.size() == 0 || data.valid.size() == 0)
        throw RangeError("phase " + std::to_string(phase) +
                         ": empty train or valid split");

      TrainPhaseInputs inputs;
      inputs.train = data.train;
      inputs.valid = data.valid;
      inputs.train_panel = data.train_panel;
      inputs.stride = store.stride;
      inputs.mean_window = store.mean_window;
      inputs.std_window = store.std_window;
      inputs.periods_per_year = cfg.periods_per_year;

      TrainPhaseResult result = train_phase(
          inputs, cfg.ppo, cfg.make_schedule(phase, data.train.size()),
          cfg.make_reward(), cfg.oracle, cfg.bootstrap,
          seed * 1000003ull + static_cast<std::uint64_t>(phase),
          carried ? &*carried : nullptr);

      const fs::path phase_dir =
          seed_dir / ("phase" + std::to_string(phase));
      fs::create_directories(phase_dir);
      save_checkpoint((phase_dir / "checkpoint_best.txt").string(),
                      result.best_params, cfg.config_hash);
      save_checkpoint((phase_dir / "checkpoint_final.txt").string(),
                      result.final_params, cfg.config_hash);
      detail::write_file_atomic((phase_dir / "episodes.csv").string(),
                                episodes_csv(result.history));
      detail::write_file_atomic((phase_dir / "evals.csv").string(),
                                evals_csv(result.history));

      // deployment metrics and test trace with the best-validation model
      const std::array<std::pair<std::string, const FeatureFrame*>, 3> splits{
          {{"train", &data.train}, {"valid", &data.valid}, {"test", &data.test}}};
      for (const auto& [name, frame] : splits) {
        if (frame->size() == 0) continue;
        Environment env(cfg.make_schedule(phase, data.train.size()),
                        RewardFunction{RewardKind::kZero}, cfg.oracle,
                        cfg.initial_weights);
        EvalResult ev = evaluate_policy(result.best_params, env, *frame,
                                        cfg.periods_per_year,
                                        /*oracle_diagnostics=*/name == "test");
        MetricsRow row;
        row.phase = phase;
        row.split = name;
        row.reward_kind = to_string(cfg.reward_kind);
        row.seed = seed;
        row.report = performance_report(ev.net_returns, cfg.periods_per_year);
        metrics_out += metrics_csv_row(row);
        if (name == "test")
          detail::write_file_atomic((phase_dir / "trace_test.csv").string(),
                                    trace_csv(ev));
        metrics_out +=
            metrics_csv_row(benchmark_metrics(cfg, phase, name, *frame));
      }
      carried = result.best_params;
    }
    detail::write_file_atomic((seed_dir / "metrics.csv").string(),
                              metrics_out);
  }
}

// ---------------------------------------------------------------------
// evaluate

inline void cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint,
                         int phase, const std::string& split,
                         const std::string& out_dir, bool force = false) {
  if (cfg.feature_store.empty())
    throw ConfigError("evaluate needs data.feature_store");
  if (split != "train" && split != "valid" && split != "test")
    throw ArgumentError("split must be train|valid|test");
  FeatureStore store = load_store(cfg.feature_store);
  PhaseData data = phase_data(store, cfg, phase);
  const FeatureFrame& frame = split == "train"   ? data.train
                              : split == "valid" ? data.valid
                                                 : data.test;
  if (frame.size() == 0)
    throw RangeError("evaluate: empty " + split + " split for phase " +
                     std::to_string(phase));

  Environment env(cfg.make_schedule(phase, data.train.size()),
                  RewardFunction{RewardKind::kZero}, cfg.oracle,
                  cfg.initial_weights);

  EvalResult ev;
  std::string kind;
  if (checkpoint == kBenchmarkCheckpoint) {
    env.set_oracle_diagnostics(true);
    ev = evaluate_constant_policy(kInitialWeights, env, frame,
                                  cfg.periods_per_year);
    kind = "benchmark";
  } else {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint);
    if (loaded.config_hash != cfg.config_hash && !force)
      throw ConfigError(
          "checkpoint was trained under a different config (hash mismatch); "
          "pass --force to evaluate anyway");
    ev = evaluate_policy(loaded.params, env, frame, cfg.periods_per_year,
                         /*oracle_diagnostics=*/true);
    kind = to_string(cfg.reward_kind);
  }

  MetricsRow row;
  row.phase = phase;
  row.split = split;
  row.reward_kind = kind;
  row.seed = cfg.seeds.front();
  row.report = performance_report(ev.net_returns, cfg.periods_per_year);

  fs::create_directories(out_dir);
  detail::write_file_atomic((fs::path(out_dir) / "trace.csv").string(),
                            trace_csv(ev));
  detail::write_file_atomic((fs::path(out_dir) / "metrics.csv").string(),
                            metrics_csv_header() + metrics_csv_row(row));
  // JSON mirror of the report
  std::ostringstream json;
  json << "{\n"
       << "  \"phase\": " << phase << ",\n"
       << "  \"split\": \"" << split << "\",\n"
       << "  \"reward_kind\": \"" << kind << "\",\n"
       << "  \"annual_return\": " << detail::fmt(row.report.annual_return)
       << ",\n"
       << "  \"sharpe\": " << detail::fmt(row.report.sharpe) << ",\n"
       << "  \"sortino\": " << detail::fmt(row.report.sortino) << ",\n"
       << "  \"calmar\": " << detail::fmt(row.report.calmar) << ",\n"
       << "  \"omega\": " << detail::fmt(row.report.omega) << ",\n"
       << "  \"max_drawdown\": " << detail::fmt(row.report.max_drawdown)
       << ",\n"
       << "  \"degenerate\": " << (row.report.degenerate ? "true" : "false")
       << "\n}\n";
  detail::write_file_atomic((fs::path(out_dir) / "metrics.json").string(),
                            json.str());
}

// ---------------------------------------------------------------------
// ablate

struct AblationSpec {
  std::vector<bool> tc_options{true, false};
  std::vector<bool> bb_options{true, false};
  std::vector<RewardKind> rewards{RewardKind::kRegret, RewardKind::kReturn,
                                  RewardKind::kDiffSharpe,
                                  RewardKind::kEmbeddedDd};
  int runs = 20;
};

inline std::string cell_name(bool tc, bool bb, RewardKind kind) {
  std::string s;
  if (tc) s += "TC+";
  if (bb) s += "BB+";
  s += to_string(kind);
  return s;
}

// Runs the ablation grid on the first configured phase; per-cell mean and
// spread of the accumulated-return training curves plus final metrics.
inline void cmd_ablate(const AblationSpec& spec, const RunConfig& cfg) {
  if (spec.runs < 1) throw ArgumentError("ablate: runs must be >= 1");
  if (spec.rewards.empty() || spec.tc_options.empty() || spec.bb_options.empty())
    throw ArgumentError("ablate: empty grid");
  if (cfg.feature_store.empty())
    throw ConfigError("ablate needs data.feature_store");
  FeatureStore store = load_store(cfg.feature_store);
  const int phase = cfg.phases.empty() ? 1 : cfg.phases.front();
  PhaseData data = phase_data(store, cfg, phase);

  TrainPhaseInputs inputs;
  inputs.train = data.train;
  inputs.valid = data.valid;
  inputs.train_panel = data.train_panel;
  inputs.stride = store.stride;
  inputs.mean_window = store.mean_window;
  inputs.std_window = store.std_window;
  inputs.periods_per_year = cfg.periods_per_year;

  const fs::path root = fs::path(cfg.out_dir) / "ablate";
  fs::create_directories(root);
  std::string summary = "cell,run,seed,split,annual_return,max_drawdown\n";
  std::string failures;

  for (bool tc : spec.tc_options) {
    for (bool bb : spec.bb_options) {
      for (RewardKind kind : spec.rewards) {
        const std::string cell = cell_name(tc, bb, kind);
        try {
          std::vector<std::vector<double>> curves;
          std::string cell_metrics = metrics_csv_header();
          for (int run = 0; run < spec.runs; ++run) {
            const std::uint64_t seed =
                cfg.seeds.front() + static_cast<std::uint64_t>(run);
            TcSchedule sched = cfg.make_schedule(phase, data.train.size());
            sched.enabled = tc;
            BootstrapConfig bb_cfg = cfg.bootstrap;
            bb_cfg.enabled = bb;
            RewardFunction reward = cfg.make_reward();
            reward.kind = kind;

            TrainPhaseResult result =
                train_phase(inputs, cfg.ppo, sched, reward, cfg.oracle,
                            bb_cfg, seed, nullptr);
            std::vector<double> curve;
            for (const auto& e : result.history.episodes)
              curve.push_back(e.train_cum_return);
            curves.push_back(std::move(curve));

            const std::array<std::pair<std::string, const FeatureFrame*>, 3>
                splits{{{"train", &data.train},
                        {"valid", &data.valid},
                        {"test", &data.test}}};
            for (const auto& [name, frame] : splits) {
              if (frame->size() == 0) continue;
              Environment env(cfg.make_schedule(phase, data.train.size()),
                              RewardFunction{RewardKind::kZero}, cfg.oracle,
                              cfg.initial_weights);
              EvalResult ev =
                  evaluate_policy(result.best_params, env, *frame,
                                  cfg.periods_per_year);
              MetricsRow row;
              row.phase = phase;
              row.split = name;
              row.reward_kind = cell;
              row.seed = seed;
              row.report =
                  performance_report(ev.net_returns, cfg.periods_per_year);
              cell_metrics += metrics_csv_row(row);
              summary += cell + "," + std::to_string(run) + "," +
                         std::to_string(seed) + "," + name + "," +
                         detail::fmt(row.report.annual_return) + "," +
                         detail::fmt(row.report.max_drawdown) + "\n";
            }
          }
          // averaged curve: episode, mean, std, stderr across runs
          std::size_t min_len = SIZE_MAX;
          for (const auto& c : curves) min_len = std::min(min_len, c.size());
          std::ostringstream curve_out;
          curve_out << "episode,mean_cum_return,std,stderr\n";
          for (std::size_t e = 0; e < min_len; ++e) {
            double mean = 0.0;
            for (const auto& c : curves) mean += c[e];
            mean /= static_cast<double>(curves.size());
            double ss = 0.0;
            for (const auto& c : curves) ss += (c[e] - mean) * (c[e] - mean);
            const double sd =
                curves.size() > 1
                    ? std::sqrt(ss / static_cast<double>(curves.size() - 1))
                    : 0.0;
            curve_out << e << "," << detail::fmt(mean) << ","
                      << detail::fmt(sd) << ","
                      << detail::fmt(sd / std::sqrt(static_cast<double>(
                                              curves.size())))
                      << "\n";
          }
          fs::create_directories(root / cell);
          detail::write_file_atomic((root / cell / "curve.csv").string(),
                                    curve_out.str());
          detail::write_file_atomic((root / cell / "metrics.csv").string(),
                                    cell_metrics);
        } catch (const std::exception& e) {
          failures += cell + ": " + e.what() + "\n";
        }
      }
    }
  }
  detail::write_file_atomic((root / "summary.csv").string(), summary);
  if (!failures.empty())
    detail::write_file_atomic((root / "failures.txt").string(), failures);
}

// ---------------------------------------------------------------------
// report

// Consolidates metrics.csv files from run directories. Rows are ordered
// benchmark first, then reward kinds alphabetically.
inline std::string build_report(const std::vector<std::string>& run_dirs,
                                std::string* warnings = nullptr) {
  if (run_dirs.empty()) throw ArgumentError("report: no run directories given");
  std::vector<MetricsRow> rows;
  for (const auto& dir : run_dirs) {
    const fs::path file = fs::path(dir) / "metrics.csv";
    std::ifstream in(file);
    if (!in) {
      if (warnings) *warnings += "warning: missing " + file.string() + "\n";
      continue;
    }
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      auto cells = detail::split_csv_line(detail::trim(line));
      if (cells.size() != 11) continue;
      MetricsRow r;
      r.phase = std::stoi(cells[0]);
      r.split = cells[1];
      r.reward_kind = cells[2];
      r.seed = std::stoull(cells[3]);
      r.report.annual_return = std::stod(cells[4]);
      r.report.sharpe = std::stod(cells[5]);
      r.report.sortino = std::stod(cells[6]);
      r.report.calmar = std::stod(cells[7]);
      r.report.omega = std::stod(cells[8]);
      r.report.max_drawdown = std::stod(cells[9]);
      r.report.degenerate = cells[10] == "1";
      rows.push_back(std::move(r));
    }
  }
  // deduplicate benchmark rows (identical across seeds)
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a,
                                                const MetricsRow& b) {
    const bool ab = a.reward_kind == "benchmark";
    const bool bb = b.reward_kind == "benchmark";
    if (ab != bb) return ab;
    if (a.reward_kind != b.reward_kind) return a.reward_kind < b.reward_kind;
    if (a.phase != b.phase) return a.phase < b.phase;
    if (a.split != b.split) return a.split < b.split;
    return a.seed < b.seed;
  });
  rows.erase(std::unique(rows.begin(), rows.end(),
                         [](const MetricsRow& a, const MetricsRow& b) {
                           return a.reward_kind == "benchmark" &&
                                  b.reward_kind == "benchmark" &&
                                  a.phase == b.phase && a.split == b.split;
                         }),
             rows.end());

  std::string out = metrics_csv_header();
  for (const auto& r : rows) out += metrics_csv_row(r);
  return out;
}

inline std::string render_report_text(const std::string& csv) {
  std::stringstream in(csv);
  std::string line, out;
  bool first = true;
  while (std::getline(in, line)) {
    auto cells = detail::split_csv_line(line);
    std::ostringstream row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::string c = cells[i];
      if (!first && i >= 4 && i <= 9) {  // round metric columns for display
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%.4f", std::stod(c));
        c = buf;
      }
      char padded[32];
      std::snprintf(padded, sizeof(padded), "%-14s", c.c_str());
      row << padded;
    }
    out += detail::trim(row.str()) + "\n";
    first = false;
  }
  return out;
}

inline void cmd_report(const std::vector<std::string>& run_dirs,
                       const std::string& out_dir) {
  std::string warnings;
  const std::string csv = build_report(run_dirs, &warnings);
  fs::create_directories(out_dir);
  detail::write_file_atomic((fs::path(out_dir) / "report.csv").string(), csv);
  detail::write_file_atomic((fs::path(out_dir) / "report.txt").string(),
                            render_report_text(csv) + warnings);
  if (!warnings.empty()) std::fputs(warnings.c_str(), stderr);
}

}  // namespace allotrl
