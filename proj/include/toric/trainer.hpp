#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toric/perspectives.hpp"
#include "toric/qnet.hpp"
#include "toric/replay.hpp"
#include "toric/rng.hpp"

namespace toric {

// success_failure pays +1000 on reaching the defect-free state without a
// logical error and 0 otherwise; minimum_action charges -1 per step so the
// return counts actions (the MAD scheme).
enum class RewardMode { kSuccessFailure, kMinimumAction };

// Per-episode annealing. Epsilon falls linearly across the whole run and
// epsilon_at(total_iterations - 1) == eps_final exactly. The error rate
// climbs linearly and then holds at p_final for the final
// iterations_at_p_final episodes.
struct TrainSchedule {
  double eps_initial = 0.75;
  double eps_final = 0.08;
  int total_iterations = 1000;
  double p_initial = 0.01;
  double p_final = 0.10;
  int iterations_at_p_final = 300;
  double gamma = 0.9;
  int batch_size = 32;
  int target_sync_k = 500;
  int max_episode_steps = 1000;
  RewardMode reward_mode = RewardMode::kSuccessFailure;
  bool double_dqn = false;

  double epsilon_at(int iter) const;
  double p_at(int iter) const;
};

// Fires after every gradient update; the references stay valid only for the
// duration of the call. Exposes the parameter vectors and the batch so sync
// cadence and target construction are observable from the outside.
struct UpdateInfo {
  int64_t update_index = 0;
  double loss = 0.0;
  const std::vector<double>& active_theta;
  const std::vector<double>& target_theta;
  const std::vector<std::size_t>& batch_indices;
  const std::vector<double>& targets;
};

struct TrainConfig {
  QNetworkConfig net;
  TrainSchedule schedule;
  uint64_t seed = 1;
  std::size_t replay_capacity = 3'000'000;
  double learning_rate = 1e-4;
  std::string checkpoint_path;  // required; periodic saves overwrite it
  std::string log_path;         // per-episode CSV; empty disables logging
  int checkpoint_every = 0;     // episodes between periodic saves; 0 = final only
  std::function<void(const UpdateInfo&)> on_update;
};

// Named hyper-parameter rows: d3, d5, d7, d9, plus *_p15 variants that raise
// the curriculum endpoint to p_final = 0.15. Unknown names throw
// std::invalid_argument listing the valid set.
TrainConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

std::string to_string(RewardMode mode);
RewardMode reward_mode_from_string(const std::string& name);

nlohmann::json schedule_to_json(const TrainSchedule& s);
TrainSchedule schedule_from_json(const nlohmann::json& j);

struct ActionChoice {
  int qubit = 0;
  int perspective = 0;
  ActionId action = ActionId::kUp;
};

// Epsilon-greedy over all perspectives x 4 actions. The greedy branch takes
// the global argmax; exact ties break to the lowest perspective index, then
// the lowest action id. Throws std::invalid_argument on a defect-free
// syndrome. The QNetworkParams overloads build a throwaway engine per call;
// they are conveniences for tests, not for hot loops.
ActionChoice select_action(QNetwork& net, const Syndrome& syn, double eps, Rng& rng);
ActionChoice select_action(const QNetworkParams& params, const Syndrome& syn, double eps,
                           Rng& rng);

// Largest q-value over every perspective/action pair; 0 for a defect-free
// (terminal) syndrome.
double q_max(QNetwork& net, const Syndrome& syn);
double q_max(const QNetworkParams& params, const Syndrome& syn);

// Double-DQN bootstrap: the action is chosen by argmax under `active`, its
// value read from `target`. 0 for a terminal syndrome.
double double_dqn_target(QNetwork& active, QNetwork& target, const Syndrome& next_state);

struct EpisodeRecord {
  int steps = 0;
  bool success = false;
};

// Plays one episode against freshly sampled noise at error rate p. The
// hidden error state evolves under the agent's flips; the episode ends at
// the defect-free state or after schedule.max_episode_steps (a capped
// episode counts as failure and its last transition stays non-terminal).
// Transitions are appended to `memory` when it is non-null, and `after_step`
// runs once per environment step, after the append.
//
// When resample_empty_start is set (training semantics), defect-free initial
// draws are redrawn so every episode trains on something; otherwise such an
// episode ends immediately with steps = 0, judged by is_success.
EpisodeRecord run_episode(QNetwork& net, double p, double eps, const TrainSchedule& schedule,
                          ReplayMemory* memory, Rng& rng, bool resample_empty_start = true,
                          const std::function<void(int)>& after_step = {});

struct TrainResult {
  int episodes = 0;
  int64_t updates = 0;
  int successes = 0;
};

// Runs the full schedule: one episode per iteration, one batched gradient
// update per environment step once the memory holds a batch, target-network
// sync every target_sync_k updates. Writes the checkpoint and, when
// configured, a per-episode CSV log with header
// iter,epsilon,p,steps,success,mean_loss,wall_ms. Throws std::runtime_error
// with a batch dump if the loss leaves the finite range.
TrainResult train(const TrainConfig& cfg);

}  // namespace toric
