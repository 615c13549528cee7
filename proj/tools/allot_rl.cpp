// allot-rl: command-line front end for the allocation lab.
//
// Subcommands: ingest | train | evaluate | ablate | report.
// Exit codes: 0 success, 1 invalid input/arguments, 2 runtime failure.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "allotrl/runner.hpp"

namespace {

allotrl::RunConfig load_config(const std::string& path,
                               const std::vector<std::string>& sets) {
  allotrl::KeyValueConfig kv;
  if (!path.empty()) kv = allotrl::KeyValueConfig::from_file(path);
  for (const auto& kvp : sets) {
    const auto eq = kvp.find('=');
    if (eq == std::string::npos)
      throw allotrl::ArgumentError("--set expects key=value, got: " + kvp);
    kv.set(kvp.substr(0, eq), kvp.substr(eq + 1));
  }
  kv.apply_env_overrides();
  return allotrl::RunConfig::from_kv(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"allot-rl: portfolio allocation lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "path to key = value config file")
      ->envname("ALLOTRL_CONFIG");
  app.add_option("--set", sets, "override a config key (key=value)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build the feature store");
  std::string ingest_out = "features.store";
  ingest->add_option("--out", ingest_out, "output feature store path");

  // train
  auto* train = app.add_subcommand("train", "run phased PPO training");
  std::string train_out;
  std::vector<std::uint64_t> train_seeds;
  std::vector<int> train_phases;
  train->add_option("--out", train_out, "run output directory");
  train->add_option("--seed", train_seeds, "seed(s), overrides run.seeds");
  train->add_option("--phase", train_phases, "phase(s), overrides run.phases");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "deploy a checkpoint on a split");
  std::string eval_checkpoint, eval_split = "test", eval_out = "eval";
  int eval_phase = 1;
  bool eval_force = false;
  eval->add_option("checkpoint", eval_checkpoint,
                   "checkpoint path, or `benchmark` for the 60/40 stub")
      ->required();
  eval->add_option("--phase", eval_phase, "phase window to evaluate");
  eval->add_option("--split", eval_split, "train|valid|test");
  eval->add_option("--out", eval_out, "output directory");
  eval->add_flag("--force", eval_force, "ignore config hash mismatch");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run the ablation grid");
  std::string ablate_out;
  int ablate_runs = 20;
  std::vector<std::string> ablate_rewards;
  ablate->add_option("--out", ablate_out, "run output directory");
  ablate->add_option("--runs", ablate_runs, "independent runs per cell");
  ablate->add_option("--reward", ablate_rewards,
                     "reward kinds to include (default: all four)");

  // report
  auto* report = app.add_subcommand("report", "consolidate run metrics");
  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  report->add_option("runs", report_dirs, "run directories with metrics.csv")
      ->required();
  report->add_option("--out", report_out, "output directory");

  // let --config/--set appear after the subcommand too
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help/usage or the parse error
    return code == 0 ? 0 : 1;
  }

  try {
    allotrl::RunConfig cfg = load_config(config_path, sets);

    if (*ingest) {
      allotrl::cmd_ingest(cfg, ingest_out);
    } else if (*train) {
      if (!train_out.empty()) cfg.out_dir = train_out;
      if (!train_seeds.empty()) cfg.seeds = train_seeds;
      if (!train_phases.empty()) cfg.phases = train_phases;
      allotrl::cmd_train(cfg);
    } else if (*eval) {
      allotrl::cmd_evaluate(cfg, eval_checkpoint, eval_phase, eval_split,
                            eval_out, eval_force);
    } else if (*ablate) {
      if (!ablate_out.empty()) cfg.out_dir = ablate_out;
      allotrl::AblationSpec spec;
      spec.runs = ablate_runs;
      if (!ablate_rewards.empty()) {
        spec.rewards.clear();
        for (const auto& r : ablate_rewards)
          spec.rewards.push_back(allotrl::reward_kind_from_string(r));
      }
      allotrl::cmd_ablate(spec, cfg);
    } else if (*report) {
      allotrl::cmd_report(report_dirs, report_out);
    }
  } catch (const allotrl::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const allotrl::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const allotrl::ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const allotrl::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
