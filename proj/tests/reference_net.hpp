// Straightforward re-implementation of the q-network layer arithmetic with
// plain nested loops: circular padding, ceiling-mode stride, ReLU,
// channel-major flatten. Shares nothing with the production engine except
// the parameter layout contract. Also tracks the closest approach to a ReLU
// kink so finite-difference draws can skip non-smooth points. Test-only.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "toric/qnet.hpp"

namespace toric_test {

inline int ref_mod(int x, int m) { return ((x % m) + m) % m; }

struct NaiveNet {
  const toric::QNetworkConfig& cfg;
  const std::vector<double>& theta;
  double min_abs_pre = std::numeric_limits<double>::infinity();

  std::vector<double> run(const std::vector<uint8_t>& grid) {
    int hw = cfg.d, ch = 1;
    std::vector<double> act(grid.begin(), grid.end());
    std::size_t off = 0;
    for (const toric::ConvSpec& spec : cfg.conv_specs) {
      int k = spec.kernel, pad = (k - 1) / 2;
      int out_hw = std::max(1, (hw + spec.stride - 1) / spec.stride);
      std::vector<double> next(static_cast<std::size_t>(spec.filters) * out_hw * out_hw);
      std::size_t w_off = off;
      off += static_cast<std::size_t>(spec.filters) * ch * k * k;
      std::size_t b_off = off;
      off += spec.filters;
      for (int f = 0; f < spec.filters; ++f)
        for (int i = 0; i < out_hw; ++i)
          for (int j = 0; j < out_hw; ++j) {
            double pre = theta[b_off + f];
            for (int c0 = 0; c0 < ch; ++c0)
              for (int u = 0; u < k; ++u)
                for (int v = 0; v < k; ++v) {
                  int r = ref_mod(i * spec.stride + u - pad, hw);
                  int s = ref_mod(j * spec.stride + v - pad, hw);
                  pre += theta[w_off + ((static_cast<std::size_t>(f) * ch + c0) * k + u) * k + v] *
                         act[static_cast<std::size_t>(c0) * hw * hw + r * hw + s];
                }
            min_abs_pre = std::min(min_abs_pre, std::abs(pre));
            next[static_cast<std::size_t>(f) * out_hw * out_hw + i * out_hw + j] =
                std::max(0.0, pre);
          }
      act = std::move(next);
      ch = spec.filters;
      hw = out_hw;
    }
    int in_dim = ch * hw * hw;
    auto fc = [&](int width, bool relu) {
      std::vector<double> next(width);
      std::size_t w_off = off;
      off += static_cast<std::size_t>(width) * in_dim;
      std::size_t b_off = off;
      off += width;
      for (int o = 0; o < width; ++o) {
        double pre = theta[b_off + o];
        for (int i = 0; i < in_dim; ++i)
          pre += theta[w_off + static_cast<std::size_t>(o) * in_dim + i] * act[i];
        if (relu) {
          min_abs_pre = std::min(min_abs_pre, std::abs(pre));
          pre = std::max(0.0, pre);
        }
        next[o] = pre;
      }
      act = std::move(next);
      in_dim = width;
    };
    for (int width : cfg.fc_sizes) fc(width, true);
    fc(cfg.outputs, false);
    return act;
  }
};

}  // namespace toric_test
