#include "toric/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "reference_net.hpp"
#include "toric/rng.hpp"

using namespace toric;

namespace {

using toric_test::NaiveNet;

QNetworkConfig tiny_config() {
  QNetworkConfig cfg;
  cfg.d = 3;
  cfg.conv_specs = {{8, 3, 2}};
  cfg.fc_sizes = {8, 4};
  cfg.outputs = 4;
  return cfg;
}

QNetworkConfig small_config() {
  QNetworkConfig cfg;
  cfg.d = 5;
  cfg.conv_specs = {{8, 3, 2}, {4, 3, 2}};
  cfg.fc_sizes = {8, 4};
  cfg.outputs = 4;
  return cfg;
}

std::vector<uint8_t> random_grid(int d, Rng& rng) {
  std::vector<uint8_t> g(static_cast<std::size_t>(d) * d);
  for (auto& x : g) x = rng.bernoulli(0.3) ? 1 : 0;
  return g;
}

std::vector<double> random_theta(const QNetworkConfig& cfg, Rng& rng, double scale) {
  std::vector<double> t(param_count(cfg));
  for (auto& x : t) x = (2.0 * rng.uniform() - 1.0) * scale;
  return t;
}

}  // namespace

TEST_CASE("default d=9 stack has the documented parameter count") {
  // conv 512/256/256 with 3x3 kernels, then fc 256/128/64/32 and 4 heads;
  // spatial chain 9 -> 5 -> 3 -> 2 so the flatten feeds 256*4 units.
  const std::vector<std::size_t> per_layer = {5120,   1179904, 590080, 262400,
                                              32896,  8256,    2080,   132};
  std::size_t total = std::accumulate(per_layer.begin(), per_layer.end(), std::size_t{0});
  CHECK(total == 2080868);
  CHECK(param_count(QNetworkConfig::defaults(9)) == 2080868);
}

TEST_CASE("output layer width is part of the parameter count contract") {
  QNetworkConfig cfg = tiny_config();
  // conv 8 filters on 1 channel: 8*9+8; fc1 8x(8*2*2)+8; fc2 4x8+4; out 4x4+4
  CHECK(param_count(cfg) == 80 + 264 + 36 + 20);
}

TEST_CASE("all-zero parameters map every input to the zero vector") {
  QNetworkConfig cfg = small_config();
  QNetworkParams params{cfg, std::vector<double>(param_count(cfg), 0.0)};
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    auto q = forward(params, random_grid(cfg.d, rng));
    REQUIRE(q.size() == 4);
    for (double x : q) CHECK(x == 0.0);
  }
}

TEST_CASE("forward is deterministic and stateless") {
  QNetworkConfig cfg = small_config();
  Rng rng(2);
  QNetworkParams params{cfg, random_theta(cfg, rng, 0.5)};
  auto grid = random_grid(cfg.d, rng);
  auto a = forward(params, grid);
  auto b = forward(params, grid);
  CHECK(a == b);
  QNetwork net(cfg);
  net.sync(params.theta);
  std::vector<double> q;
  net.forward_batch(grid.data(), 1, q);
  CHECK(q == a);
}

TEST_CASE("forward matches a naive re-implementation") {
  Rng rng(3);
  for (const QNetworkConfig& cfg : {tiny_config(), small_config()}) {
    for (int trial = 0; trial < 50; ++trial) {
      QNetworkParams params{cfg, random_theta(cfg, rng, 0.6)};
      auto grid = random_grid(cfg.d, rng);
      auto fast = forward(params, grid);
      NaiveNet naive{cfg, params.theta};
      auto slow = naive.run(grid);
      REQUIRE(fast.size() == slow.size());
      for (std::size_t i = 0; i < fast.size(); ++i)
        CHECK(std::abs(fast[i] - slow[i]) <= 1e-6 * std::max(1.0, std::abs(slow[i])));
    }
  }
}

TEST_CASE("forward matches the naive path on the full-size stack") {
  QNetworkConfig cfg = QNetworkConfig::defaults(3);
  Rng rng(4);
  QNetworkParams params = init_params(cfg, 99);
  auto grid = random_grid(3, rng);
  auto fast = forward(params, grid);
  NaiveNet naive{cfg, params.theta};
  auto slow = naive.run(grid);
  for (std::size_t i = 0; i < fast.size(); ++i)
    CHECK(std::abs(fast[i] - slow[i]) <= 1e-6 * std::max(1.0, std::abs(slow[i])));
}

TEST_CASE("batched rows equal single evaluations across block boundaries") {
  QNetworkConfig cfg = small_config();
  Rng rng(5);
  QNetworkParams params{cfg, random_theta(cfg, rng, 0.5)};
  const int batch = 37;  // spans more than one internal block
  std::vector<uint8_t> grids;
  std::vector<std::vector<uint8_t>> singles;
  for (int b = 0; b < batch; ++b) {
    auto g = random_grid(cfg.d, rng);
    grids.insert(grids.end(), g.begin(), g.end());
    singles.push_back(std::move(g));
  }
  QNetwork net(cfg);
  net.sync(params.theta);
  std::vector<double> q;
  net.forward_batch(grids.data(), batch, q);
  for (int b = 0; b < batch; ++b) {
    auto one = forward(params, singles[b]);
    for (int o = 0; o < 4; ++o) CHECK(q[b * 4 + o] == one[o]);
  }
}

TEST_CASE("shape mismatches are rejected") {
  QNetworkConfig cfg = tiny_config();
  Rng rng(6);
  QNetworkParams params{cfg, random_theta(cfg, rng, 0.5)};
  std::vector<uint8_t> wrong(5, 0);
  CHECK_THROWS_AS(forward(params, wrong), std::domain_error);
  CHECK_THROWS_AS(backward(params, wrong, 0, 0.0), std::domain_error);
  QNetwork net(cfg);
  CHECK_THROWS_AS(net.sync(std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("zero residual yields an exactly zero gradient") {
  QNetworkConfig cfg = small_config();
  Rng rng(7);
  QNetworkParams params{cfg, random_theta(cfg, rng, 0.5)};
  auto grid = random_grid(cfg.d, rng);
  auto q = forward(params, grid);
  auto grad = backward(params, grid, 2, q[2]);
  CHECK(std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; }));
}

TEST_CASE("gradient is linear in the residual") {
  QNetworkConfig cfg = tiny_config();
  Rng rng(8);
  QNetworkParams params{cfg, random_theta(cfg, rng, 0.5)};
  auto grid = random_grid(cfg.d, rng);
  auto q = forward(params, grid);
  auto g1 = backward(params, grid, 1, q[1] - 0.7);
  auto g2 = backward(params, grid, 1, q[1] - 1.4);
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(std::abs(g2[i] - 2.0 * g1[i]) <= 1e-12 * std::max(1.0, std::abs(g1[i])));
}

TEST_CASE("gradient matches central finite differences away from kinks") {
  QNetworkConfig cfg = tiny_config();
  Rng rng(20250816);
  QNetwork net(cfg);
  const std::size_t n = param_count(cfg);
  const double h = 1e-4;
  int accepted = 0, attempts = 0;
  double worst = 0;
  while (accepted < 100 && attempts < 2000) {
    ++attempts;
    QNetworkParams params{cfg, random_theta(cfg, rng, 0.6)};
    auto grid = random_grid(cfg.d, rng);
    NaiveNet probe{cfg, params.theta};
    probe.run(grid);
    if (probe.min_abs_pre < 1e-2) continue;  // too close to a ReLU kink
    ++accepted;
    int action = static_cast<int>(rng.below(4));
    double target = (2.0 * rng.uniform() - 1.0) * 2.0;
    auto grad = backward(params, grid, action, target);
    REQUIRE(grad.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      double saved = params.theta[i];
      auto eval = [&](double x) {
        params.theta[i] = x;
        net.sync(params.theta);
        std::vector<double> q;
        net.forward_batch(grid.data(), 1, q);
        double res = q[action] - target;
        return 0.5 * res * res;
      };
      double fd = (eval(saved + h) - eval(saved - h)) / (2 * h);
      params.theta[i] = saved;
      double rel = std::abs(grad[i] - fd) / std::max({1.0, std::abs(grad[i]), std::abs(fd)});
      worst = std::max(worst, rel);
    }
  }
  REQUIRE(accepted == 100);
  CHECK(worst <= 1e-3);
}

TEST_CASE("init is seeded, bounded, and zero-biased") {
  QNetworkConfig cfg = small_config();
  QNetworkParams a = init_params(cfg, 11);
  QNetworkParams b = init_params(cfg, 11);
  QNetworkParams c = init_params(cfg, 12);
  CHECK(a.theta == b.theta);
  CHECK(a.theta != c.theta);
  // First conv: fan_in 9, bound sqrt(6/9); biases (last 8 of the first 80) zero.
  double bound = std::sqrt(6.0 / 9.0);
  for (int i = 0; i < 72; ++i) CHECK(std::abs(a.theta[i]) <= bound);
  for (int i = 72; i < 80; ++i) CHECK(a.theta[i] == 0.0);
}

TEST_CASE("adam leaves parameters alone under a zero gradient") {
  QNetworkConfig cfg = tiny_config();
  QNetworkParams params = init_params(cfg, 21);
  auto before = params.theta;
  AdamState opt = make_adam(cfg);
  adam_step(params, std::vector<double>(params.theta.size(), 0.0), opt);
  CHECK(params.theta == before);
  CHECK(opt.step == 1);
}

TEST_CASE("one adam step from rest moves each parameter by about lr") {
  QNetworkConfig cfg = tiny_config();
  QNetworkParams params = init_params(cfg, 22);
  auto before = params.theta;
  AdamState opt = make_adam(cfg);
  std::vector<double> grads(params.theta.size());
  Rng rng(9);
  // Keep |g| well above Adam's eps so the sign-step limit applies.
  for (auto& g : grads) g = (rng.bernoulli(0.5) ? 1.0 : -1.0) * (0.1 + 0.7 * rng.uniform());
  adam_step(params, grads, opt);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    double delta = params.theta[i] - before[i];
    double expected = -opt.lr * (grads[i] > 0 ? 1.0 : -1.0);
    CHECK(std::abs(delta - expected) <= 1e-6 * opt.lr);
  }
}

TEST_CASE("constant gradients drive the step size toward lr") {
  QNetworkConfig cfg = tiny_config();
  QNetworkParams params = init_params(cfg, 23);
  AdamState opt = make_adam(cfg);
  std::vector<double> grads(params.theta.size(), 0.37);
  std::vector<double> prev;
  for (int k = 0; k < 500; ++k) {
    prev = params.theta;
    adam_step(params, grads, opt);
  }
  for (std::size_t i = 0; i < params.theta.size(); ++i) {
    double step = prev[i] - params.theta[i];
    CHECK(std::abs(step - opt.lr) <= 0.02 * opt.lr);
  }
  CHECK(opt.step == 500);
}

TEST_CASE("adam rejects mismatched shapes") {
  QNetworkConfig cfg = tiny_config();
  QNetworkParams params = init_params(cfg, 24);
  AdamState opt = make_adam(cfg);
  CHECK_THROWS_AS(adam_step(params, std::vector<double>(3, 0.0), opt), std::invalid_argument);
}

TEST_CASE("float mirror tracks the double path closely") {
  QNetworkConfig cfg64 = small_config();
  QNetworkConfig cfg32 = cfg64;
  cfg32.precision = Precision::kF32;
  Rng rng(10);
  std::vector<double> theta = random_theta(cfg64, rng, 0.5);
  QNetwork n64(cfg64), n32(cfg32);
  n64.sync(theta);
  n32.sync(theta);
  for (int trial = 0; trial < 20; ++trial) {
    auto grid = random_grid(cfg64.d, rng);
    std::vector<double> q64, q32;
    n64.forward_batch(grid.data(), 1, q64);
    n32.forward_batch(grid.data(), 1, q32);
    for (int o = 0; o < 4; ++o)
      CHECK(std::abs(q64[o] - q32[o]) <= 1e-3 * std::max(1.0, std::abs(q64[o])));
  }
}

TEST_CASE("a thousand updates keep everything finite") {
  for (Precision prec : {Precision::kF64, Precision::kF32}) {
    QNetworkConfig cfg = tiny_config();
    cfg.precision = prec;
    QNetworkParams params = init_params(cfg, 31);
    AdamState opt = make_adam(cfg, 1e-3);
    QNetwork net(cfg);
    Rng rng(32);
    const int batch = 8;
    std::vector<double> grad;
    for (int step = 0; step < 1000; ++step) {
      net.sync(params.theta);
      std::vector<uint8_t> grids;
      std::vector<int> actions(batch);
      std::vector<double> targets(batch);
      for (int b = 0; b < batch; ++b) {
        auto g = random_grid(cfg.d, rng);
        grids.insert(grids.end(), g.begin(), g.end());
        actions[b] = static_cast<int>(rng.below(4));
        targets[b] = rng.bernoulli(0.1) ? 1000.0 : 0.0;  // terminal-scale targets
      }
      double loss = net.backward_batch(grids.data(), actions.data(), targets.data(), batch, grad);
      REQUIRE(std::isfinite(loss));
      adam_step(params, grad, opt);  // throws if anything goes non-finite
    }
    CHECK(opt.step == 1000);
  }
}
