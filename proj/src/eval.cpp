#include "toric/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "toric/checkpoint.hpp"
#include "toric/mwpm.hpp"
#include "toric/thread_pool.hpp"

namespace toric {

namespace {

constexpr double kZ95 = 1.959963984540054;

void validate(const SweepSpec& spec) {
  if (spec.d < 3 || spec.d % 2 == 0) throw std::invalid_argument("d must be odd and >= 3");
  if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (spec.max_episode_steps < 1)
    throw std::invalid_argument("max_episode_steps must be >= 1");
  if (spec.p_values.empty()) throw std::invalid_argument("p_values must be non-empty");
  for (std::size_t i = 0; i < spec.p_values.size(); ++i) {
    if (spec.p_values[i] < 0.0 || spec.p_values[i] > 1.0)
      throw std::invalid_argument("error rates must lie in [0, 1]");
    if (i > 0 && spec.p_values[i] <= spec.p_values[i - 1])
      throw std::invalid_argument("p_values must be strictly increasing");
  }
  if (spec.decoder == DecoderKind::kRl && spec.checkpoint_path.empty())
    throw std::invalid_argument("RL evaluation needs a checkpoint path");
}

struct TrialOutcome {
  uint8_t success = 0;
  int steps = 0;
};

PointResult summarize(double p, const std::vector<TrialOutcome>& slots) {
  PointResult out;
  out.p = p;
  out.trials = static_cast<int>(slots.size());
  int64_t step_sum = 0;
  for (const auto& t : slots) {
    out.successes += t.success;
    step_sum += t.steps;
    ++out.length_histogram[t.steps];
  }
  out.rate = static_cast<double>(out.successes) / out.trials;
  WilsonInterval ci = wilson_interval(out.successes, out.trials);
  out.ci_lo = ci.lo;
  out.ci_hi = ci.hi;
  out.mean_steps = static_cast<double>(step_sum) / out.trials;
  return out;
}

}  // namespace

WilsonInterval wilson_interval(int successes, int trials) {
  if (trials < 1) throw std::invalid_argument("wilson interval needs at least one trial");
  if (successes < 0 || successes > trials)
    throw std::invalid_argument("successes must lie in [0, trials]");
  const double n = trials;
  const double phat = successes / n;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = kZ95 * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  // The score interval brackets the point estimate by construction; clamping
  // removes the one-ulp excursions at the boundaries.
  const double lo = std::min(phat, std::max(0.0, center - half));
  const double hi = std::max(phat, std::min(1.0, center + half));
  return {lo, hi};
}

SweepResult evaluate(const SweepSpec& spec, int threads) {
  validate(spec);

  QNetworkParams rl_params;
  if (spec.decoder == DecoderKind::kRl) {
    Checkpoint ckpt = load_checkpoint(spec.checkpoint_path);
    if (ckpt.params.config.d != spec.d)
      throw std::runtime_error("checkpoint " + spec.checkpoint_path + " was trained for d=" +
                               std::to_string(ckpt.params.config.d) + ", not d=" +
                               std::to_string(spec.d));
    rl_params = std::move(ckpt.params);
  }

  TrainSchedule episode_rules;
  episode_rules.max_episode_steps = spec.max_episode_steps;

  ThreadPool pool(threads > 0 ? threads : default_thread_count());
  SweepResult result;
  result.d = spec.d;

  for (std::size_t pi = 0; pi < spec.p_values.size(); ++pi) {
    const double p = spec.p_values[pi];
    std::vector<TrialOutcome> slots(spec.trials);
    const uint64_t seed_base = static_cast<uint64_t>(pi) * spec.trials;

    if (spec.decoder == DecoderKind::kMwpm) {
      pool.parallel_for(spec.trials, [&](int64_t begin, int64_t end) {
        ToricLattice lat(spec.d);
        Rng root(spec.seed);
        for (int64_t t = begin; t < end; ++t) {
          Rng rng = root.child(seed_base + t);
          ErrorState errs = sample_errors(lat, p, rng);
          Syndrome syn = compute_syndrome(lat, errs);
          ErrorState correction = mwpm_decode(lat, syn);
          slots[t].success = is_success(lat, errs ^ correction) ? 1 : 0;
          slots[t].steps = correction.weight();
        }
      });
    } else {
      pool.parallel_for(spec.trials, [&](int64_t begin, int64_t end) {
        QNetwork net(rl_params.config);
        net.sync(rl_params.theta);
        Rng root(spec.seed);
        for (int64_t t = begin; t < end; ++t) {
          Rng rng = root.child(seed_base + t);
          EpisodeRecord rec =
              run_episode(net, p, 0.0, episode_rules, nullptr, rng, false);
          slots[t].success = rec.success ? 1 : 0;
          slots[t].steps = rec.steps;
        }
      });
    }
    result.points.push_back(summarize(p, slots));
  }
  return result;
}

Curve to_curve(const SweepResult& result) {
  Curve c;
  c.d = result.d;
  for (const auto& pt : result.points) {
    c.p.push_back(pt.p);
    c.rate.push_back(pt.rate);
  }
  return c;
}

ThresholdEstimate estimate_threshold(const std::vector<Curve>& curves) {
  std::set<int> dims;
  for (const auto& c : curves) {
    if (c.p.size() != c.rate.size()) throw std::invalid_argument("curve arrays disagree");
    dims.insert(c.d);
  }
  if (dims.size() < 2)
    throw std::invalid_argument("threshold estimation needs at least two code distances");

  ThresholdEstimate est;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (std::size_t j = i + 1; j < curves.size(); ++j) {
      if (curves[i].d == curves[j].d) continue;
      // Shared grid points, in order.
      std::vector<double> ps;
      std::vector<double> diff;
      for (std::size_t a = 0; a < curves[i].p.size(); ++a)
        for (std::size_t b = 0; b < curves[j].p.size(); ++b)
          if (curves[i].p[a] == curves[j].p[b]) {
            ps.push_back(curves[i].p[a]);
            diff.push_back(curves[i].rate[a] - curves[j].rate[b]);
          }
      if (ps.size() < 2)
        throw std::invalid_argument("curves share fewer than two grid points");
      for (std::size_t k = 0; k + 1 < ps.size(); ++k) {
        const double y0 = diff[k], y1 = diff[k + 1];
        if (y0 == 0.0) {
          est.crossings.push_back(ps[k]);
        } else if (y0 * y1 < 0.0) {
          est.crossings.push_back(ps[k] + (ps[k + 1] - ps[k]) * y0 / (y0 - y1));
        }
      }
      if (!diff.empty() && diff.back() == 0.0) est.crossings.push_back(ps.back());
    }
  }
  if (!est.crossings.empty()) {
    est.found = true;
    auto [lo, hi] = std::minmax_element(est.crossings.begin(), est.crossings.end());
    est.lo = *lo;
    est.hi = *hi;
  }
  return est;
}

double tv_distance(const std::map<int, int64_t>& a, const std::map<int, int64_t>& b) {
  int64_t mass_a = 0, mass_b = 0;
  for (const auto& [k, v] : a) mass_a += v;
  for (const auto& [k, v] : b) mass_b += v;
  if (mass_a == 0 || mass_b == 0) throw std::invalid_argument("empty histogram");
  std::set<int> keys;
  for (const auto& [k, v] : a) keys.insert(k);
  for (const auto& [k, v] : b) keys.insert(k);
  double tv = 0.0;
  for (int k : keys) {
    auto ia = a.find(k);
    auto ib = b.find(k);
    double fa = ia == a.end() ? 0.0 : static_cast<double>(ia->second) / mass_a;
    double fb = ib == b.end() ? 0.0 : static_cast<double>(ib->second) / mass_b;
    tv += std::abs(fa - fb);
  }
  return 0.5 * tv;
}

CompareResult compare_reward_modes(const std::string& success_failure_ckpt,
                                   const std::string& minimum_action_ckpt, double p, int trials,
                                   uint64_t seed, int max_episode_steps, int threads) {
  Checkpoint sf = load_checkpoint(success_failure_ckpt);
  Checkpoint mad = load_checkpoint(minimum_action_ckpt);
  if (sf.params.config.d != mad.params.config.d)
    throw std::runtime_error("reward-mode comparison needs checkpoints of the same d (got " +
                             std::to_string(sf.params.config.d) + " and " +
                             std::to_string(mad.params.config.d) + ")");
  SweepSpec spec;
  spec.d = sf.params.config.d;
  spec.p_values = {p};
  spec.trials = trials;
  spec.decoder = DecoderKind::kRl;
  spec.seed = seed;
  spec.max_episode_steps = max_episode_steps;

  CompareResult out;
  out.d = spec.d;
  out.p = p;
  spec.checkpoint_path = success_failure_ckpt;
  out.success_failure = evaluate(spec, threads).points[0];
  spec.checkpoint_path = minimum_action_ckpt;
  out.minimum_action = evaluate(spec, threads).points[0];
  out.tv_distance =
      tv_distance(out.success_failure.length_histogram, out.minimum_action.length_histogram);
  return out;
}

std::vector<double> parse_p_list(const std::string& text) {
  std::vector<double> out;
  auto parse_one = [](const std::string& s) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number in p list: '" + s + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ':')) parts.push_back(cell);
    if (parts.size() != 3)
      throw std::invalid_argument("range form must be start:end:step, got '" + text + "'");
    const double start = parse_one(parts[0]);
    const double end = parse_one(parts[1]);
    const double step = parse_one(parts[2]);
    if (step <= 0.0 || end < start)
      throw std::invalid_argument("range form needs end >= start and step > 0");
    const int n = static_cast<int>(std::lround((end - start) / step)) + 1;
    for (int i = 0; i < n; ++i) out.push_back(start + i * step);
  } else {
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty()) out.push_back(parse_one(cell));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty p list");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0 || out[i] > 1.0)
      throw std::invalid_argument("error rates must lie in [0, 1]");
    if (i > 0 && out[i] <= out[i - 1])
      throw std::invalid_argument("p list must be strictly increasing");
  }
  return out;
}

namespace {

std::ofstream open_or_throw(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  return out;
}

}  // namespace

void write_curves_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out = open_or_throw(path);
  out << "d,p,trials,successes,rate,ci_lo,ci_hi,mean_steps\n";
  for (const auto& pt : result.points) {
    char row[256];
    std::snprintf(row, sizeof(row), "%d,%.6f,%d,%d,%.6f,%.6f,%.6f,%.6f\n", result.d, pt.p,
                  pt.trials, pt.successes, pt.rate, pt.ci_lo, pt.ci_hi, pt.mean_steps);
    out << row;
  }
}

void write_histogram_csv(const std::string& path, const SweepResult& result) {
  std::ofstream out = open_or_throw(path);
  out << "d,p,steps,count\n";
  for (const auto& pt : result.points) {
    for (const auto& [steps, count] : pt.length_histogram) {
      char row[128];
      std::snprintf(row, sizeof(row), "%d,%.6f,%d,%lld\n", result.d, pt.p, steps,
                    static_cast<long long>(count));
      out << row;
    }
  }
}

void write_metadata(const std::string& path, const nlohmann::json& meta) {
  std::ofstream out = open_or_throw(path);
  out << meta.dump(2) << "\n";
}

std::string build_git_hash() {
#ifdef TORICLAB_GIT_HASH
  return TORICLAB_GIT_HASH;
#else
  return "unknown";
#endif
}

}  // namespace toric
