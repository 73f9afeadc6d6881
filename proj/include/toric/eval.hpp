#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "toric/trainer.hpp"

namespace toric {

struct WilsonInterval {
  double lo = 0.0;
  double hi = 0.0;
};

// 95% Wilson score interval; stays inside [0, 1] and behaves at rates near
// the boundaries where the normal approximation collapses.
WilsonInterval wilson_interval(int successes, int trials);

enum class DecoderKind { kMwpm, kRl };

struct SweepSpec {
  int d = 3;
  std::vector<double> p_values;  // strictly increasing, each in [0, 1]
  int trials = 1000;
  DecoderKind decoder = DecoderKind::kMwpm;
  std::string checkpoint_path;  // RL only
  uint64_t seed = 1;
  int max_episode_steps = 1000;  // RL step cap; capped episodes count as failures
};

struct PointResult {
  double p = 0.0;
  int trials = 0;
  int successes = 0;
  double rate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double mean_steps = 0.0;
  // Episode length -> trial count. RL length is agent steps; MWPM length is
  // the weight of the returned correction. Mass always equals `trials`.
  std::map<int, int64_t> length_histogram;
};

struct SweepResult {
  int d = 0;
  std::vector<PointResult> points;
};

// Runs `trials` independent decoding episodes per error rate. RL decoding is
// pure greedy (epsilon = 0) with the checkpoint's network; defect-free draws
// score immediately instead of being resampled. Every trial derives its own
// seed from (spec.seed, point index, trial index) and lands in its own
// result slot, so the outcome is independent of the worker count (0 threads
// = honor TORIC_LAB_THREADS / hardware).
// Throws std::invalid_argument on a malformed spec and std::runtime_error if
// the checkpoint is unreadable or trained for a different d.
SweepResult evaluate(const SweepSpec& spec, int threads = 0);

struct Curve {
  int d = 0;
  std::vector<double> p;
  std::vector<double> rate;
};

Curve to_curve(const SweepResult& result);

struct ThresholdEstimate {
  bool found = false;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> crossings;  // one per detected pairwise sign change
};

// Crossing points of success-vs-p curves for different code distances:
// for every dimension pair, linear interpolation locates each sign change of
// the rate difference over the shared p grid; the estimate spans the
// smallest and largest crossing. A crossing-free grid returns found = false.
// Throws std::invalid_argument on fewer than two distinct dimensions or a
// shared grid with fewer than two points.
ThresholdEstimate estimate_threshold(const std::vector<Curve>& curves);

struct CompareResult {
  int d = 0;
  double p = 0.0;
  PointResult success_failure;
  PointResult minimum_action;
  double tv_distance = 0.0;  // between normalized episode-length histograms
};

// Paired evaluation of two reward-scheme checkpoints on identical noise
// (same derived trial seeds). Throws if the checkpoints disagree on d.
CompareResult compare_reward_modes(const std::string& success_failure_ckpt,
                                   const std::string& minimum_action_ckpt, double p, int trials,
                                   uint64_t seed, int max_episode_steps = 1000, int threads = 0);

// Total-variation distance between two histograms after normalizing each to
// unit mass.
double tv_distance(const std::map<int, int64_t>& a, const std::map<int, int64_t>& b);

// "0.01:0.15:0.01" (inclusive endpoints) or "0.01,0.05,0.1". Validates that
// the result is strictly increasing within [0, 1].
std::vector<double> parse_p_list(const std::string& text);

// CSV schema: d,p,trials,successes,rate,ci_lo,ci_hi,mean_steps (floats %.6f).
void write_curves_csv(const std::string& path, const SweepResult& result);

// CSV schema: d,p,steps,count, one row per occupied histogram bin.
void write_histogram_csv(const std::string& path, const SweepResult& result);

// Pretty-printed JSON sidecar; contents are caller-assembled and must stay
// deterministic (no timestamps).
void write_metadata(const std::string& path, const nlohmann::json& meta);

// Commit the binary was configured from, or "unknown" outside a git tree.
std::string build_git_hash();

}  // namespace toric
