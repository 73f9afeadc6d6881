// Command-line front end: training, evaluation sweeps, reward-scheme
// comparison, MWPM benchmarking, and threshold estimation. Every command
// writes only to caller-named paths and is deterministic for a fixed seed
// (training logs excepted in their wall-clock column).
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "toric/checkpoint.hpp"
#include "toric/eval.hpp"
#include "toric/thread_pool.hpp"
#include "toric/trainer.hpp"

namespace {

using namespace toric;

nlohmann::json base_metadata(const std::string& command, uint64_t seed) {
  return nlohmann::json{{"command", command}, {"seed", seed}, {"git", build_git_hash()}};
}

Precision precision_from_string(const std::string& name) {
  if (name == "f32") return Precision::kF32;
  if (name == "f64") return Precision::kF64;
  throw std::invalid_argument("precision must be f32 or f64, got '" + name + "'");
}

struct TrainArgs {
  std::string preset = "d3";
  uint64_t seed = 1;
  std::string out;
  std::string log;
  std::string reward_mode = "success_failure";
  std::string precision;
  bool double_dqn = false;
  int iterations = 0;
  int max_episode_steps = 0;
  int checkpoint_every = 0;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg = preset_config(a.preset);
  cfg.seed = a.seed;
  cfg.checkpoint_path = a.out;
  cfg.log_path = a.log.empty() ? a.out + ".log.csv" : a.log;
  cfg.checkpoint_every = a.checkpoint_every;
  cfg.schedule.reward_mode = reward_mode_from_string(a.reward_mode);
  cfg.schedule.double_dqn = a.double_dqn;
  if (!a.precision.empty()) cfg.net.precision = precision_from_string(a.precision);
  if (a.iterations > 0) {
    cfg.schedule.total_iterations = a.iterations;
    cfg.schedule.iterations_at_p_final =
        std::min(cfg.schedule.iterations_at_p_final, a.iterations);
  }
  if (a.max_episode_steps > 0) cfg.schedule.max_episode_steps = a.max_episode_steps;

  TrainResult res = train(cfg);

  nlohmann::json meta = base_metadata("train", a.seed);
  meta["preset"] = a.preset;
  meta["net"] = config_to_json(cfg.net);
  meta["schedule"] = schedule_to_json(cfg.schedule);
  meta["learning_rate"] = cfg.learning_rate;
  meta["replay_capacity"] = cfg.replay_capacity;
  meta["episodes"] = res.episodes;
  meta["updates"] = res.updates;
  meta["successes"] = res.successes;
  write_metadata(a.out + ".meta.json", meta);

  std::printf("trained %s seed %llu: %d episodes, %lld updates, %d successes\n",
              a.preset.c_str(), static_cast<unsigned long long>(a.seed), res.episodes,
              static_cast<long long>(res.updates), res.successes);
  std::printf("checkpoint: %s\nlog: %s\n", a.out.c_str(), cfg.log_path.c_str());
  return 0;
}

struct SweepArgs {
  std::string decoder = "mwpm";
  int d = 0;
  std::string p_list;
  int trials = 1000;
  uint64_t seed = 1;
  std::string checkpoint;
  std::string out;
  std::string hist;
  int max_episode_steps = 1000;
  int threads = 0;
};

int run_sweep(const SweepArgs& a, const std::string& command) {
  SweepSpec spec;
  spec.p_values = parse_p_list(a.p_list);
  spec.trials = a.trials;
  spec.seed = a.seed;
  spec.max_episode_steps = a.max_episode_steps;
  if (a.decoder == "mwpm") {
    spec.decoder = DecoderKind::kMwpm;
    if (a.d == 0) throw std::invalid_argument("--d is required for the mwpm decoder");
    spec.d = a.d;
  } else if (a.decoder == "rl") {
    spec.decoder = DecoderKind::kRl;
    if (a.checkpoint.empty())
      throw std::invalid_argument("--checkpoint is required for the rl decoder");
    spec.checkpoint_path = a.checkpoint;
    spec.d = a.d != 0 ? a.d : load_checkpoint(a.checkpoint).params.config.d;
  } else {
    throw std::invalid_argument("decoder must be mwpm or rl, got '" + a.decoder + "'");
  }

  SweepResult res = evaluate(spec, a.threads);
  write_curves_csv(a.out, res);
  if (!a.hist.empty()) write_histogram_csv(a.hist, res);

  nlohmann::json meta = base_metadata(command, a.seed);
  meta["decoder"] = a.decoder;
  meta["d"] = spec.d;
  meta["p_values"] = spec.p_values;
  meta["trials"] = a.trials;
  meta["max_episode_steps"] = a.max_episode_steps;
  if (!a.checkpoint.empty()) meta["checkpoint"] = a.checkpoint;
  write_metadata(a.out + ".meta.json", meta);

  for (const auto& pt : res.points)
    std::printf("d=%d p=%.4f rate=%.4f [%.4f, %.4f] mean_steps=%.2f\n", res.d, pt.p, pt.rate,
                pt.ci_lo, pt.ci_hi, pt.mean_steps);
  return 0;
}

struct CompareArgs {
  std::string sf_checkpoint;
  std::string mad_checkpoint;
  double p = 0.10;
  int trials = 1000;
  uint64_t seed = 1;
  std::string out_prefix;
  int max_episode_steps = 1000;
  int threads = 0;
};

int cmd_compare(const CompareArgs& a) {
  CompareResult cmp = compare_reward_modes(a.sf_checkpoint, a.mad_checkpoint, a.p, a.trials,
                                           a.seed, a.max_episode_steps, a.threads);
  SweepResult sf{cmp.d, {cmp.success_failure}};
  SweepResult mad{cmp.d, {cmp.minimum_action}};
  write_histogram_csv(a.out_prefix + "_sf_hist.csv", sf);
  write_histogram_csv(a.out_prefix + "_mad_hist.csv", mad);

  auto point_json = [](const PointResult& pt) {
    return nlohmann::json{{"trials", pt.trials},   {"successes", pt.successes},
                          {"rate", pt.rate},       {"ci_lo", pt.ci_lo},
                          {"ci_hi", pt.ci_hi},     {"mean_steps", pt.mean_steps}};
  };
  nlohmann::json meta = base_metadata("compare", a.seed);
  meta["d"] = cmp.d;
  meta["p"] = cmp.p;
  meta["success_failure"] = point_json(cmp.success_failure);
  meta["minimum_action"] = point_json(cmp.minimum_action);
  meta["tv_distance"] = cmp.tv_distance;
  write_metadata(a.out_prefix + "_summary.json", meta);

  std::printf("d=%d p=%.4f  success/failure rate=%.4f  minimum-action rate=%.4f  tv=%.4f\n",
              cmp.d, cmp.p, cmp.success_failure.rate, cmp.minimum_action.rate, cmp.tv_distance);
  return 0;
}

struct BenchArgs {
  int d = 0;
  std::string p_list;
  int trials = 1000;
  uint64_t seed = 1;
  std::string out;
  int threads = 0;
};

int cmd_mwpm_bench(const BenchArgs& a) {
  SweepSpec spec;
  spec.d = a.d;
  spec.p_values = parse_p_list(a.p_list);
  spec.trials = a.trials;
  spec.seed = a.seed;
  SweepResult res = evaluate(spec, a.threads);

  std::ofstream out(a.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file " + a.out);
  out << "d,p,trials,successes,success_rate\n";
  for (const auto& pt : res.points) {
    char row[128];
    std::snprintf(row, sizeof(row), "%d,%.6f,%d,%d,%.6f\n", res.d, pt.p, pt.trials,
                  pt.successes, pt.rate);
    out << row;
  }

  nlohmann::json meta = base_metadata("mwpm-bench", a.seed);
  meta["d"] = a.d;
  meta["p_values"] = spec.p_values;
  meta["trials"] = a.trials;
  write_metadata(a.out + ".meta.json", meta);

  for (const auto& pt : res.points)
    std::printf("d=%d p=%.4f rate=%.4f\n", res.d, pt.p, pt.rate);
  return 0;
}

struct ThresholdArgs {
  std::vector<std::string> curve_files;
  std::string out;
};

std::vector<Curve> read_curves(const std::vector<std::string>& paths) {
  std::map<int, std::vector<std::pair<double, double>>> by_d;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open curve file " + path);
    std::string line;
    if (!std::getline(in, line) || line != "d,p,trials,successes,rate,ci_lo,ci_hi,mean_steps")
      throw std::runtime_error(path + " is not a curve CSV (unexpected header)");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() != 8) throw std::runtime_error(path + ": malformed row '" + line + "'");
      by_d[std::stoi(cells[0])].push_back({std::stod(cells[1]), std::stod(cells[4])});
    }
  }
  std::vector<Curve> curves;
  for (auto& [d, rows] : by_d) {
    std::sort(rows.begin(), rows.end());
    Curve c;
    c.d = d;
    for (const auto& [p, rate] : rows) {
      c.p.push_back(p);
      c.rate.push_back(rate);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

int cmd_threshold(const ThresholdArgs& a) {
  ThresholdEstimate est = estimate_threshold(read_curves(a.curve_files));
  nlohmann::json result{{"found", est.found}};
  if (est.found) {
    result["lo"] = est.lo;
    result["hi"] = est.hi;
    result["crossings"] = est.crossings;
    std::printf("threshold interval [%.6f, %.6f] from %zu crossing(s)\n", est.lo, est.hi,
                est.crossings.size());
  } else {
    std::printf("no crossing on the shared grid\n");
  }
  if (!a.out.empty()) write_metadata(a.out, result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toric-code decoding laboratory: deep-Q agents and MWPM baselines"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train an agent from a named preset");
  train_cmd->add_option("--preset", train_args.preset, "Hyper-parameter row")
      ->required()
      ->check(CLI::IsMember(toric::preset_names()));
  train_cmd->add_option("--seed", train_args.seed, "Run seed");
  train_cmd->add_option("--out", train_args.out, "Checkpoint output path")->required();
  train_cmd->add_option("--log", train_args.log, "Training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--reward-mode", train_args.reward_mode, "Reward scheme")
      ->check(CLI::IsMember({"success_failure", "minimum_action"}));
  train_cmd->add_flag("--double-dqn", train_args.double_dqn,
                      "Pick bootstrap actions with the active network");
  train_cmd->add_option("--precision", train_args.precision, "Compute precision (f32 or f64)")
      ->check(CLI::IsMember({"f32", "f64"}));
  train_cmd->add_option("--iterations", train_args.iterations,
                        "Override the preset's episode count");
  train_cmd->add_option("--max-episode-steps", train_args.max_episode_steps,
                        "Override the per-episode step cap");
  train_cmd->add_option("--checkpoint-every", train_args.checkpoint_every,
                        "Also save every N episodes");

  SweepArgs sweep_args;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Success-rate sweep over error rates for either decoder");
  sweep_cmd->add_option("--decoder", sweep_args.decoder, "mwpm or rl")
      ->check(CLI::IsMember({"mwpm", "rl"}));
  sweep_cmd->add_option("--d", sweep_args.d, "Lattice dimension (odd)");
  sweep_cmd->add_option("--p", sweep_args.p_list, "Error rates: start:end:step or comma list")
      ->required();
  sweep_cmd->add_option("--trials", sweep_args.trials, "Episodes per error rate");
  sweep_cmd->add_option("--seed", sweep_args.seed, "Sweep seed");
  sweep_cmd->add_option("--checkpoint", sweep_args.checkpoint, "Agent checkpoint (rl decoder)");
  sweep_cmd->add_option("--out", sweep_args.out, "Curve CSV output path")->required();
  sweep_cmd->add_option("--hist", sweep_args.hist, "Also write an episode-length histogram CSV");
  sweep_cmd->add_option("--max-episode-steps", sweep_args.max_episode_steps,
                        "Step cap; capped episodes count as failures");
  sweep_cmd->add_option("--threads", sweep_args.threads,
                        "Worker threads (default TORIC_LAB_THREADS or hardware)");

  SweepArgs eval_args;
  eval_args.decoder = "rl";
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate a trained agent checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Agent checkpoint")->required();
  eval_cmd->add_option("--d", eval_args.d, "Expected dimension (must match the checkpoint)");
  eval_cmd->add_option("--p", eval_args.p_list, "Error rates: start:end:step or comma list")
      ->required();
  eval_cmd->add_option("--trials", eval_args.trials, "Episodes per error rate");
  eval_cmd->add_option("--seed", eval_args.seed, "Evaluation seed");
  eval_cmd->add_option("--out", eval_args.out, "Curve CSV output path")->required();
  eval_cmd->add_option("--hist", eval_args.hist, "Also write an episode-length histogram CSV");
  eval_cmd->add_option("--max-episode-steps", eval_args.max_episode_steps,
                       "Step cap; capped episodes count as failures");
  eval_cmd->add_option("--threads", eval_args.threads,
                       "Worker threads (default TORIC_LAB_THREADS or hardware)");

  CompareArgs compare_args;
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Compare success/failure and minimum-action agents");
  compare_cmd->add_option("--sf", compare_args.sf_checkpoint, "success_failure checkpoint")
      ->required();
  compare_cmd->add_option("--mad", compare_args.mad_checkpoint, "minimum_action checkpoint")
      ->required();
  compare_cmd->add_option("--p", compare_args.p, "Error rate")->check(CLI::Range(0.0, 1.0));
  compare_cmd->add_option("--trials", compare_args.trials, "Episodes per agent");
  compare_cmd->add_option("--seed", compare_args.seed, "Comparison seed");
  compare_cmd->add_option("--out", compare_args.out_prefix, "Output path prefix")->required();
  compare_cmd->add_option("--max-episode-steps", compare_args.max_episode_steps,
                          "Step cap; capped episodes count as failures");
  compare_cmd->add_option("--threads", compare_args.threads,
                          "Worker threads (default TORIC_LAB_THREADS or hardware)");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("mwpm-bench", "Matching-decoder success rates");
  bench_cmd->add_option("--d", bench_args.d, "Lattice dimension (odd)")->required();
  bench_cmd->add_option("--p", bench_args.p_list, "Error rates: start:end:step or comma list")
      ->required();
  bench_cmd->add_option("--trials", bench_args.trials, "Trials per error rate");
  bench_cmd->add_option("--seed", bench_args.seed, "Bench seed");
  bench_cmd->add_option("--out", bench_args.out, "CSV output path")->required();
  bench_cmd->add_option("--threads", bench_args.threads,
                        "Worker threads (default TORIC_LAB_THREADS or hardware)");

  ThresholdArgs threshold_args;
  CLI::App* threshold_cmd =
      app.add_subcommand("threshold", "Crossing interval of curve CSVs for several d");
  threshold_cmd->add_option("--curves", threshold_args.curve_files, "Curve CSVs (one or more)")
      ->required()
      ->expected(-1);
  threshold_cmd->add_option("--out", threshold_args.out, "JSON result path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (sweep_cmd->parsed()) return run_sweep(sweep_args, "sweep");
    if (eval_cmd->parsed()) return run_sweep(eval_args, "evaluate");
    if (compare_cmd->parsed()) return cmd_compare(compare_args);
    if (bench_cmd->parsed()) return cmd_mwpm_bench(bench_args);
    if (threshold_cmd->parsed()) return cmd_threshold(threshold_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "toriclab: %s\n", e.what());
    return 1;
  }
  return 2;
}
