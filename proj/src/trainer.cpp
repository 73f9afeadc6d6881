#include "toric/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "toric/checkpoint.hpp"

namespace toric {

double TrainSchedule::epsilon_at(int iter) const {
  if (total_iterations <= 1) return eps_final;
  int t = std::clamp(iter, 0, total_iterations - 1);
  double f = static_cast<double>(t) / static_cast<double>(total_iterations - 1);
  return eps_initial + (eps_final - eps_initial) * f;
}

double TrainSchedule::p_at(int iter) const {
  int ramp = total_iterations - iterations_at_p_final;
  if (ramp <= 0) return p_final;
  int t = std::clamp(iter, 0, ramp);
  return p_initial + (p_final - p_initial) * (static_cast<double>(t) / static_cast<double>(ramp));
}

std::string to_string(RewardMode mode) {
  return mode == RewardMode::kSuccessFailure ? "success_failure" : "minimum_action";
}

RewardMode reward_mode_from_string(const std::string& name) {
  if (name == "success_failure") return RewardMode::kSuccessFailure;
  if (name == "minimum_action") return RewardMode::kMinimumAction;
  throw std::invalid_argument("unknown reward mode: " + name);
}

nlohmann::json schedule_to_json(const TrainSchedule& s) {
  return nlohmann::json{{"eps_initial", s.eps_initial},
                        {"eps_final", s.eps_final},
                        {"total_iterations", s.total_iterations},
                        {"p_initial", s.p_initial},
                        {"p_final", s.p_final},
                        {"iterations_at_p_final", s.iterations_at_p_final},
                        {"gamma", s.gamma},
                        {"batch_size", s.batch_size},
                        {"target_sync_k", s.target_sync_k},
                        {"max_episode_steps", s.max_episode_steps},
                        {"reward_mode", to_string(s.reward_mode)},
                        {"double_dqn", s.double_dqn}};
}

TrainSchedule schedule_from_json(const nlohmann::json& j) {
  TrainSchedule s;
  s.eps_initial = j.at("eps_initial").get<double>();
  s.eps_final = j.at("eps_final").get<double>();
  s.total_iterations = j.at("total_iterations").get<int>();
  s.p_initial = j.at("p_initial").get<double>();
  s.p_final = j.at("p_final").get<double>();
  s.iterations_at_p_final = j.at("iterations_at_p_final").get<int>();
  s.gamma = j.at("gamma").get<double>();
  s.batch_size = j.at("batch_size").get<int>();
  s.target_sync_k = j.at("target_sync_k").get<int>();
  s.max_episode_steps = j.at("max_episode_steps").get<int>();
  s.reward_mode = reward_mode_from_string(j.at("reward_mode").get<std::string>());
  s.double_dqn = j.value("double_dqn", false);
  return s;
}

TrainConfig preset_config(const std::string& name) {
  std::string base = name;
  bool p15 = false;
  if (base.size() > 4 && base.substr(base.size() - 4) == "_p15") {
    p15 = true;
    base = base.substr(0, base.size() - 4);
  }
  TrainConfig cfg;
  TrainSchedule& s = cfg.schedule;
  if (base == "d3") {
    s = {0.75, 0.08, 1000, 0.01, 0.10, 300, 0.90};
  } else if (base == "d5") {
    s = {0.75, 0.08, 2500, 0.01, 0.10, 1000, 0.95};
  } else if (base == "d7") {
    s = {0.75, 0.08, 6000, 0.01, 0.10, 2000, 0.95};
  } else if (base == "d9") {
    s = {0.50, 0.10, 8000, 0.01, 0.10, 3500, 0.95};
  } else {
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + name + "' (valid: " + valid + ")");
  }
  if (p15) s.p_final = 0.15;
  int d = base[1] - '0';
  cfg.net = QNetworkConfig::defaults(d);
  // f32 compute runs 2-3x faster here and the f64 master copy keeps the
  // optimizer exact; gradient correctness is proven against f64 in tests.
  cfg.net.precision = Precision::kF32;
  return cfg;
}

std::vector<std::string> preset_names() {
  return {"d3", "d5", "d7", "d9", "d3_p15", "d5_p15", "d7_p15", "d9_p15"};
}

namespace {

// Contiguous row-major copy of every perspective grid, ready for a batch
// forward pass.
void gather_grids(const std::vector<Perspective>& persps, std::vector<uint8_t>& out) {
  const std::size_t cells = persps.empty() ? 0 : persps[0].grid.size();
  out.resize(persps.size() * cells);
  for (std::size_t i = 0; i < persps.size(); ++i)
    std::memcpy(out.data() + i * cells, persps[i].grid.data(), cells);
}

// First (perspective, action) pair that maps to the stored absolute qubit.
// Selection uses the same perspective order, so a match always exists.
std::pair<int, int> pair_for_qubit(const ToricLattice& lat,
                                   const std::vector<Perspective>& persps, int qubit) {
  for (std::size_t pi = 0; pi < persps.size(); ++pi)
    for (int ai = 0; ai < 4; ++ai)
      if (resolve_action(lat, persps[pi], static_cast<ActionId>(ai)) == qubit)
        return {static_cast<int>(pi), ai};
  throw std::logic_error("stored action does not border any defect of its state");
}

int argmax_row(const std::vector<double>& q, int begin, int count) {
  int best = begin;
  for (int i = begin + 1; i < begin + count; ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

}  // namespace

ActionChoice select_action(QNetwork& net, const Syndrome& syn, double eps, Rng& rng) {
  auto persps = make_perspectives(syn);  // throws on a terminal syndrome
  const int n = static_cast<int>(persps.size());
  int flat;
  if (rng.bernoulli(eps)) {
    flat = static_cast<int>(rng.below(static_cast<uint64_t>(n) * 4));
  } else {
    std::vector<uint8_t> grids;
    gather_grids(persps, grids);
    std::vector<double> q;
    net.forward_batch(grids.data(), n, q);
    flat = argmax_row(q, 0, n * 4);
  }
  ActionChoice choice;
  choice.perspective = flat / 4;
  choice.action = static_cast<ActionId>(flat % 4);
  ToricLattice lat(syn.d);
  choice.qubit = resolve_action(lat, persps[choice.perspective], choice.action);
  return choice;
}

ActionChoice select_action(const QNetworkParams& params, const Syndrome& syn, double eps,
                           Rng& rng) {
  QNetwork net(params.config);
  net.sync(params.theta);
  return select_action(net, syn, eps, rng);
}

double q_max(QNetwork& net, const Syndrome& syn) {
  if (syn.empty()) return 0.0;
  auto persps = make_perspectives(syn);
  std::vector<uint8_t> grids;
  gather_grids(persps, grids);
  std::vector<double> q;
  net.forward_batch(grids.data(), static_cast<int>(persps.size()), q);
  return *std::max_element(q.begin(), q.end());
}

double q_max(const QNetworkParams& params, const Syndrome& syn) {
  QNetwork net(params.config);
  net.sync(params.theta);
  return q_max(net, syn);
}

double double_dqn_target(QNetwork& active, QNetwork& target, const Syndrome& next_state) {
  if (next_state.empty()) return 0.0;
  auto persps = make_perspectives(next_state);
  std::vector<uint8_t> grids;
  gather_grids(persps, grids);
  const int n = static_cast<int>(persps.size());
  std::vector<double> q_act, q_tgt;
  active.forward_batch(grids.data(), n, q_act);
  target.forward_batch(grids.data(), n, q_tgt);
  return q_tgt[argmax_row(q_act, 0, n * 4)];
}

EpisodeRecord run_episode(QNetwork& net, double p, double eps, const TrainSchedule& schedule,
                          ReplayMemory* memory, Rng& rng, bool resample_empty_start,
                          const std::function<void(int)>& after_step) {
  const ToricLattice lat(net.config().d);
  ErrorState errs = sample_errors(lat, p, rng);
  Syndrome syn = compute_syndrome(lat, errs);
  if (resample_empty_start && p > 0.0) {
    while (syn.empty()) {
      errs = sample_errors(lat, p, rng);
      syn = compute_syndrome(lat, errs);
    }
  }
  EpisodeRecord rec;
  if (syn.empty()) {
    // A defect-free draw can still carry a winding error, so judge it.
    rec.success = is_success(lat, errs);
    return rec;
  }
  const bool mad = schedule.reward_mode == RewardMode::kMinimumAction;
  for (int step = 0; step < schedule.max_episode_steps; ++step) {
    ActionChoice choice = select_action(net, syn, eps, rng);
    apply_flip_in_place(errs, choice.qubit);
    Syndrome next = compute_syndrome(lat, errs);
    const bool terminal = next.empty();
    const bool success = terminal && is_success(lat, errs);
    double reward;
    if (mad)
      reward = -1.0;
    else
      reward = terminal ? (success ? 1000.0 : 0.0) : 0.0;
    if (memory) memory->append({syn, choice.qubit, reward, next, terminal});
    syn = std::move(next);
    ++rec.steps;
    if (after_step) after_step(rec.steps);
    if (terminal) {
      rec.success = success;
      break;
    }
  }
  return rec;
}

namespace {

struct UpdateContext {
  const TrainConfig* cfg = nullptr;
  ToricLattice lat{3};
  QNetwork* active = nullptr;
  QNetwork* target = nullptr;
  QNetworkParams* params = nullptr;
  std::vector<double>* target_theta = nullptr;
  AdamState* adam = nullptr;
  ReplayMemory* memory = nullptr;
  Rng* sample_rng = nullptr;
  int64_t updates = 0;

  // Scratch reused across updates.
  std::vector<std::size_t> indices;
  std::vector<uint8_t> state_grids, next_grids;
  std::vector<int> actions;
  std::vector<double> targets, q_next, q_act, grad;
};

std::string dump_batch(const UpdateContext& ctx, double loss) {
  std::ostringstream os;
  os << "non-finite loss " << loss << " at update " << ctx.updates + 1 << "; batch:";
  for (std::size_t i = 0; i < ctx.indices.size(); ++i) {
    const Experience& e = (*ctx.memory)[ctx.indices[i]];
    os << "\n  [" << ctx.indices[i] << "] action=" << e.action << " reward=" << e.reward
       << " terminal=" << e.terminal << " target=" << ctx.targets[i]
       << " state=" << to_json(e.state);
  }
  return os.str();
}

// One batched Q-learning update: uniform replay sample, bootstrap targets
// from the frozen network, mean-gradient Adam step, periodic target sync.
double one_update(UpdateContext& ctx) {
  const TrainSchedule& s = ctx.cfg->schedule;
  const int batch = s.batch_size;
  const int cells = ctx.lat.d() * ctx.lat.d();
  ctx.indices = ctx.memory->sample_indices(batch, *ctx.sample_rng);

  // Bootstrap values for every non-terminal next state in one forward pass.
  ctx.next_grids.clear();
  std::vector<std::pair<int, int>> spans(batch, {0, 0});
  int total = 0;
  for (int i = 0; i < batch; ++i) {
    const Experience& e = (*ctx.memory)[ctx.indices[i]];
    if (e.terminal) continue;
    auto persps = make_perspectives(e.next_state);
    spans[i] = {total, static_cast<int>(persps.size())};
    ctx.next_grids.resize((total + persps.size()) * cells);
    for (std::size_t k = 0; k < persps.size(); ++k)
      std::memcpy(ctx.next_grids.data() + (total + k) * cells, persps[k].grid.data(), cells);
    total += static_cast<int>(persps.size());
  }
  if (total > 0) {
    ctx.target->forward_batch(ctx.next_grids.data(), total, ctx.q_next);
    if (s.double_dqn) ctx.active->forward_batch(ctx.next_grids.data(), total, ctx.q_act);
  }

  ctx.state_grids.resize(batch * cells);
  ctx.actions.resize(batch);
  ctx.targets.resize(batch);
  for (int i = 0; i < batch; ++i) {
    const Experience& e = (*ctx.memory)[ctx.indices[i]];
    double boot = 0.0;
    if (!e.terminal) {
      const int begin = spans[i].first * 4;
      const int count = spans[i].second * 4;
      if (s.double_dqn)
        boot = ctx.q_next[argmax_row(ctx.q_act, begin, count)];
      else
        boot = *std::max_element(ctx.q_next.begin() + begin, ctx.q_next.begin() + begin + count);
    }
    ctx.targets[i] = e.reward + s.gamma * boot;

    auto persps = make_perspectives(e.state);
    auto [pi, ai] = pair_for_qubit(ctx.lat, persps, e.action);
    std::memcpy(ctx.state_grids.data() + static_cast<std::size_t>(i) * cells,
                persps[pi].grid.data(), cells);
    ctx.actions[i] = ai;
  }

  double loss = ctx.active->backward_batch(ctx.state_grids.data(), ctx.actions.data(),
                                           ctx.targets.data(), batch, ctx.grad);
  if (!std::isfinite(loss)) throw std::runtime_error(dump_batch(ctx, loss));
  adam_step(*ctx.params, ctx.grad, *ctx.adam);
  ctx.active->sync(ctx.params->theta);
  ++ctx.updates;
  if (ctx.updates % s.target_sync_k == 0) {
    *ctx.target_theta = ctx.params->theta;
    ctx.target->sync(*ctx.target_theta);
  }
  if (ctx.cfg->on_update)
    ctx.cfg->on_update(UpdateInfo{ctx.updates, loss, ctx.params->theta, *ctx.target_theta,
                                  ctx.indices, ctx.targets});
  return loss;
}

void validate(const TrainConfig& cfg) {
  const TrainSchedule& s = cfg.schedule;
  auto is_prob = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (s.total_iterations < 1) throw std::invalid_argument("total_iterations must be >= 1");
  if (!is_prob(s.eps_initial) || !is_prob(s.eps_final))
    throw std::invalid_argument("epsilon endpoints must lie in [0, 1]");
  if (!is_prob(s.p_initial) || !is_prob(s.p_final))
    throw std::invalid_argument("error-rate endpoints must lie in [0, 1]");
  if (s.iterations_at_p_final < 0 || s.iterations_at_p_final > s.total_iterations)
    throw std::invalid_argument("iterations_at_p_final must lie in [0, total_iterations]");
  if (!is_prob(s.gamma)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (s.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (s.target_sync_k < 1) throw std::invalid_argument("target_sync_k must be >= 1");
  if (s.max_episode_steps < 1) throw std::invalid_argument("max_episode_steps must be >= 1");
  if (cfg.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (cfg.replay_capacity < static_cast<std::size_t>(s.batch_size))
    throw std::invalid_argument("replay capacity smaller than one batch");
  if (cfg.checkpoint_path.empty()) throw std::invalid_argument("checkpoint_path is required");
  if (cfg.checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  validate(cfg);
  const TrainSchedule& s = cfg.schedule;

  QNetworkParams params = init_params(cfg.net, cfg.seed);
  AdamState adam = make_adam(cfg.net, cfg.learning_rate);
  std::vector<double> target_theta = params.theta;
  QNetwork active(cfg.net), target(cfg.net);
  active.sync(params.theta);
  target.sync(target_theta);

  ReplayMemory memory(cfg.replay_capacity);
  Rng root(cfg.seed);
  Rng episode_rng = root.child(1);
  Rng sample_rng = root.child(2);

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    log.open(cfg.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot open training log " + cfg.log_path);
    log << "iter,epsilon,p,steps,success,mean_loss,wall_ms\n";
  }

  UpdateContext ctx;
  ctx.cfg = &cfg;
  ctx.lat = ToricLattice(cfg.net.d);
  ctx.active = &active;
  ctx.target = &target;
  ctx.params = &params;
  ctx.target_theta = &target_theta;
  ctx.adam = &adam;
  ctx.memory = &memory;
  ctx.sample_rng = &sample_rng;

  auto save = [&](int episodes_done) {
    nlohmann::json extra{{"episodes", episodes_done},
                         {"updates", ctx.updates},
                         {"seed", cfg.seed},
                         {"learning_rate", cfg.learning_rate},
                         {"replay_capacity", cfg.replay_capacity},
                         {"schedule", schedule_to_json(s)}};
    save_checkpoint(cfg.checkpoint_path, params, adam, extra);
  };

  TrainResult result;
  for (int t = 0; t < s.total_iterations; ++t) {
    const double eps = s.epsilon_at(t);
    const double p = s.p_at(t);
    double loss_sum = 0.0;
    int loss_count = 0;
    const auto t0 = std::chrono::steady_clock::now();
    EpisodeRecord rec =
        run_episode(active, p, eps, s, &memory, episode_rng, true, [&](int) {
          if (memory.size() < static_cast<std::size_t>(s.batch_size)) return;
          loss_sum += one_update(ctx);
          ++loss_count;
        });
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    ++result.episodes;
    if (rec.success) ++result.successes;
    if (log) {
      char row[160];
      std::snprintf(row, sizeof(row), "%d,%.6f,%.6f,%d,%d,%.6f,%lld\n", t, eps, p, rec.steps,
                    rec.success ? 1 : 0, loss_count ? loss_sum / loss_count : 0.0,
                    static_cast<long long>(wall_ms));
      log << row;
      log.flush();
    }
    if (cfg.checkpoint_every > 0 && (t + 1) % cfg.checkpoint_every == 0 &&
        t + 1 < s.total_iterations)
      save(t + 1);
  }
  result.updates = ctx.updates;
  save(s.total_iterations);
  return result;
}

}  // namespace toric
