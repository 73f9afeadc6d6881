#include "toric/qnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace toric {
namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct LayerPlan {
  enum class Kind { kConv, kFcHidden, kFcOut };
  Kind kind = Kind::kConv;
  int in_ch = 0, out_ch = 0;  // conv channels / fc widths
  int in_hw = 1, out_hw = 1;  // square spatial side, conv only
  int kernel = 0, stride = 0;
  int patch_len = 0;                // conv: in_ch * kernel²
  int in_units = 0, out_units = 0;  // per-sample activation sizes
  std::size_t w_off = 0, b_off = 0;
  std::vector<int> taps;  // conv: [out_hw²][kernel²] input spatial indices
};

struct Plan {
  QNetworkConfig cfg;
  std::vector<LayerPlan> layers;
  std::size_t params = 0;
};

Plan make_plan(const QNetworkConfig& cfg) {
  if (cfg.d < 3 || cfg.d % 2 == 0)
    throw std::invalid_argument("lattice dimension must be odd and >= 3");
  if (cfg.outputs < 1) throw std::invalid_argument("output head count must be positive");
  Plan plan;
  plan.cfg = cfg;
  int hw = cfg.d, ch = 1;
  std::size_t off = 0;
  for (const ConvSpec& spec : cfg.conv_specs) {
    if (spec.filters < 1 || spec.kernel < 1 || spec.kernel % 2 == 0 || spec.stride < 1)
      throw std::invalid_argument("conv layers need positive filters/stride and an odd kernel");
    LayerPlan layer;
    layer.kind = LayerPlan::Kind::kConv;
    layer.in_ch = ch;
    layer.out_ch = spec.filters;
    layer.in_hw = hw;
    layer.out_hw = std::max(1, ceil_div(hw, spec.stride));
    layer.kernel = spec.kernel;
    layer.stride = spec.stride;
    layer.patch_len = ch * spec.kernel * spec.kernel;
    layer.in_units = ch * hw * hw;
    layer.out_units = layer.out_ch * layer.out_hw * layer.out_hw;
    int pad = (spec.kernel - 1) / 2;
    auto wrapi = [hw](int x) {
      x %= hw;
      return x < 0 ? x + hw : x;
    };
    layer.taps.resize(static_cast<std::size_t>(layer.out_hw) * layer.out_hw * spec.kernel * spec.kernel);
    std::size_t t = 0;
    for (int i = 0; i < layer.out_hw; ++i)
      for (int j = 0; j < layer.out_hw; ++j)
        for (int u = 0; u < spec.kernel; ++u)
          for (int v = 0; v < spec.kernel; ++v)
            layer.taps[t++] =
                wrapi(i * spec.stride + u - pad) * hw + wrapi(j * spec.stride + v - pad);
    layer.w_off = off;
    off += static_cast<std::size_t>(layer.out_ch) * layer.patch_len;
    layer.b_off = off;
    off += layer.out_ch;
    ch = spec.filters;
    hw = layer.out_hw;
    plan.layers.push_back(std::move(layer));
  }
  int in_dim = ch * hw * hw;
  auto add_fc = [&](int width, LayerPlan::Kind kind) {
    if (width < 1) throw std::invalid_argument("fc layer width must be positive");
    LayerPlan layer;
    layer.kind = kind;
    layer.in_ch = in_dim;
    layer.out_ch = width;
    layer.in_units = in_dim;
    layer.out_units = width;
    layer.w_off = off;
    off += static_cast<std::size_t>(width) * in_dim;
    layer.b_off = off;
    off += width;
    plan.layers.push_back(std::move(layer));
    in_dim = width;
  };
  for (int width : cfg.fc_sizes) add_fc(width, LayerPlan::Kind::kFcHidden);
  add_fc(cfg.outputs, LayerPlan::Kind::kFcOut);
  plan.params = off;
  return plan;
}

// Dot product over a fixed grid of independent accumulator chains. The
// chain count is 4 vector registers' worth of lanes for the element type,
// so the loop vectorizes cleanly for both f32 and f64 without -ffast-math,
// and the fixed pairwise reduction gives run-to-run identical sums.
template <typename T>
T dot(const T* a, const T* b, int n) {
  constexpr int kWidth = 4 * int(64 / sizeof(T));
  T acc[kWidth] = {};
  int i = 0;
  for (; i + kWidth <= n; i += kWidth)
    for (int w = 0; w < kWidth; ++w) acc[w] += a[i + w] * b[i + w];
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  for (int s = kWidth / 2; s > 0; s /= 2)
    for (int w = 0; w < s; ++w) acc[w] += acc[w + s];
  return acc[0] + tail;
}

template <typename T>
void axpy(T* y, T a, const T* x, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

// Samples per block: keeps a conv layer's gathered patches cache-resident
// while a full pass over the filters runs against them.
constexpr int kBlock = 16;

template <typename T>
struct Engine {
  explicit Engine(const Plan& plan) : plan_(&plan) {
    w_.assign(plan.params, T(0));
    grad_.assign(plan.params, T(0));
    act_.resize(plan.layers.size() + 1);
    dact_.resize(plan.layers.size() + 1);
    std::size_t max_patch = 0;
    for (const LayerPlan& layer : plan.layers)
      if (layer.kind == LayerPlan::Kind::kConv)
        max_patch = std::max(max_patch, static_cast<std::size_t>(layer.out_hw) * layer.out_hw *
                                            layer.patch_len);
    patch_.assign(max_patch * kBlock, T(0));
    dpatch_.assign(max_patch * kBlock, T(0));
  }

  void sync(const std::vector<double>& theta) {
    for (std::size_t i = 0; i < theta.size(); ++i) w_[i] = static_cast<T>(theta[i]);
  }

  void ensure(int batch) {
    if (batch <= cap_) return;
    const auto& layers = plan_->layers;
    act_[0].assign(static_cast<std::size_t>(batch) * layers.front().in_units, T(0));
    dact_[0].assign(act_[0].size(), T(0));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      act_[l + 1].assign(static_cast<std::size_t>(batch) * layers[l].out_units, T(0));
      dact_[l + 1].assign(act_[l + 1].size(), T(0));
    }
    cap_ = batch;
  }

  void build_patch(const LayerPlan& layer, const T* src, int b0, int bn) {
    const int P = layer.out_hw * layer.out_hw;
    const int k2 = layer.kernel * layer.kernel;
    const int hw2 = layer.in_hw * layer.in_hw;
    for (int b = 0; b < bn; ++b) {
      const T* s = src + static_cast<std::size_t>(b0 + b) * layer.in_units;
      for (int pos = 0; pos < P; ++pos) {
        T* row = patch_.data() + (static_cast<std::size_t>(b) * P + pos) * layer.patch_len;
        const int* taps = layer.taps.data() + static_cast<std::size_t>(pos) * k2;
        for (int ch = 0; ch < layer.in_ch; ++ch)
          for (int t = 0; t < k2; ++t) row[ch * k2 + t] = s[ch * hw2 + taps[t]];
      }
    }
  }

  void forward(const uint8_t* grids, int batch) {
    ensure(batch);
    const auto& layers = plan_->layers;
    const std::size_t in0 = layers.front().in_units;
    for (std::size_t i = 0; i < static_cast<std::size_t>(batch) * in0; ++i)
      act_[0][i] = static_cast<T>(grids[i]);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const LayerPlan& layer = layers[l];
      const T* wl = w_.data() + layer.w_off;
      const T* bl = w_.data() + layer.b_off;
      const T* src = act_[l].data();
      T* dst = act_[l + 1].data();
      if (layer.kind == LayerPlan::Kind::kConv) {
        const int P = layer.out_hw * layer.out_hw;
        const int K = layer.patch_len;
        for (int b0 = 0; b0 < batch; b0 += kBlock) {
          int bn = std::min(kBlock, batch - b0);
          build_patch(layer, src, b0, bn);
          for (int f = 0; f < layer.out_ch; ++f) {
            const T* wrow = wl + static_cast<std::size_t>(f) * K;
            const T bias = bl[f];
            for (int b = 0; b < bn; ++b) {
              T* out = dst + static_cast<std::size_t>(b0 + b) * layer.out_units +
                       static_cast<std::size_t>(f) * P;
              const T* prow = patch_.data() + static_cast<std::size_t>(b) * P * K;
              for (int pos = 0; pos < P; ++pos) {
                T pre = bias + dot(wrow, prow + static_cast<std::size_t>(pos) * K, K);
                out[pos] = pre > T(0) ? pre : T(0);
              }
            }
          }
        }
      } else {
        const bool relu = layer.kind == LayerPlan::Kind::kFcHidden;
        const int in = layer.in_units;
        for (int o = 0; o < layer.out_ch; ++o) {
          const T* wrow = wl + static_cast<std::size_t>(o) * in;
          const T bias = bl[o];
          for (int b = 0; b < batch; ++b) {
            T pre = bias + dot(wrow, src + static_cast<std::size_t>(b) * in, in);
            dst[static_cast<std::size_t>(b) * layer.out_ch + o] =
                relu && pre < T(0) ? T(0) : pre;
          }
        }
      }
    }
  }

  void read_q(int batch, std::vector<double>& q_out) const {
    const int outputs = plan_->cfg.outputs;
    q_out.resize(static_cast<std::size_t>(batch) * outputs);
    const auto& q = act_.back();
    for (std::size_t i = 0; i < q_out.size(); ++i) q_out[i] = static_cast<double>(q[i]);
  }

  double backward(const uint8_t* grids, const int* actions, const double* targets, int batch,
                  std::vector<double>& grad_out) {
    forward(grids, batch);
    const auto& layers = plan_->layers;
    const int outputs = plan_->cfg.outputs;

    std::fill(dact_.back().begin(), dact_.back().end(), T(0));
    double loss = 0;
    for (int b = 0; b < batch; ++b) {
      int a = actions[b];
      if (a < 0 || a >= outputs) throw std::domain_error("action id out of range");
      double q = static_cast<double>(act_.back()[static_cast<std::size_t>(b) * outputs + a]);
      double res = q - targets[b];
      loss += 0.5 * res * res;
      dact_.back()[static_cast<std::size_t>(b) * outputs + a] = static_cast<T>(res / batch);
    }
    loss /= batch;

    std::fill(grad_.begin(), grad_.end(), T(0));
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
      const LayerPlan& layer = layers[l];
      const T* wl = w_.data() + layer.w_off;
      T* gw = grad_.data() + layer.w_off;
      T* gb = grad_.data() + layer.b_off;
      const T* src = act_[l].data();
      const T* out = act_[l + 1].data();
      T* dout = dact_[l + 1].data();
      T* dsrc = dact_[l].data();
      const bool need_dsrc = l > 0;
      if (need_dsrc)
        std::fill(dact_[l].begin(), dact_[l].begin() + static_cast<std::size_t>(batch) * layer.in_units,
                  T(0));

      // ReLU mask: the stored activation is max(0, pre), so a zero output
      // kills the incoming gradient.
      if (layer.kind != LayerPlan::Kind::kFcOut) {
        const std::size_t n = static_cast<std::size_t>(batch) * layer.out_units;
        for (std::size_t i = 0; i < n; ++i)
          if (out[i] <= T(0)) dout[i] = T(0);
      }

      if (layer.kind == LayerPlan::Kind::kConv) {
        const int P = layer.out_hw * layer.out_hw;
        const int K = layer.patch_len;
        const int k2 = layer.kernel * layer.kernel;
        const int hw2 = layer.in_hw * layer.in_hw;
        for (int b0 = 0; b0 < batch; b0 += kBlock) {
          int bn = std::min(kBlock, batch - b0);
          build_patch(layer, src, b0, bn);
          std::fill(dpatch_.begin(),
                    dpatch_.begin() + static_cast<std::size_t>(bn) * P * K, T(0));
          for (int f = 0; f < layer.out_ch; ++f) {
            const T* wrow = wl + static_cast<std::size_t>(f) * K;
            T* grow = gw + static_cast<std::size_t>(f) * K;
            T bias_grad = 0;
            for (int b = 0; b < bn; ++b) {
              const T* drow = dout + static_cast<std::size_t>(b0 + b) * layer.out_units +
                              static_cast<std::size_t>(f) * P;
              for (int pos = 0; pos < P; ++pos) {
                T g = drow[pos];
                if (g == T(0)) continue;
                const std::size_t row = (static_cast<std::size_t>(b) * P + pos) * K;
                axpy(grow, g, patch_.data() + row, K);
                if (need_dsrc) axpy(dpatch_.data() + row, g, wrow, K);
                bias_grad += g;
              }
            }
            gb[f] += bias_grad;
          }
          if (need_dsrc) {
            for (int b = 0; b < bn; ++b) {
              T* ds = dsrc + static_cast<std::size_t>(b0 + b) * layer.in_units;
              for (int pos = 0; pos < P; ++pos) {
                const T* row = dpatch_.data() + (static_cast<std::size_t>(b) * P + pos) * K;
                const int* taps = layer.taps.data() + static_cast<std::size_t>(pos) * k2;
                for (int ch = 0; ch < layer.in_ch; ++ch)
                  for (int t = 0; t < k2; ++t) ds[ch * hw2 + taps[t]] += row[ch * k2 + t];
              }
            }
          }
        }
      } else {
        const int in = layer.in_units;
        const int outw = layer.out_ch;
        for (int o = 0; o < outw; ++o) {
          const T* wrow = wl + static_cast<std::size_t>(o) * in;
          T* grow = gw + static_cast<std::size_t>(o) * in;
          T bias_grad = 0;
          for (int b = 0; b < batch; ++b) {
            T g = dout[static_cast<std::size_t>(b) * outw + o];
            if (g == T(0)) continue;
            axpy(grow, g, src + static_cast<std::size_t>(b) * in, in);
            if (need_dsrc) axpy(dsrc + static_cast<std::size_t>(b) * in, g, wrow, in);
            bias_grad += g;
          }
          gb[o] += bias_grad;
        }
      }
    }

    grad_out.resize(plan_->params);
    for (std::size_t i = 0; i < grad_.size(); ++i) grad_out[i] = static_cast<double>(grad_[i]);
    return loss;
  }

  const Plan* plan_;
  std::vector<T> w_, grad_, patch_, dpatch_;
  std::vector<std::vector<T>> act_, dact_;
  int cap_ = 0;
};

}  // namespace

QNetworkConfig QNetworkConfig::defaults(int d) {
  QNetworkConfig cfg;
  cfg.d = d;
  return cfg;
}

std::size_t param_count(const QNetworkConfig& cfg) { return make_plan(cfg).params; }

QNetworkParams init_params(const QNetworkConfig& cfg, uint64_t seed) {
  Plan plan = make_plan(cfg);
  QNetworkParams params{cfg, std::vector<double>(plan.params, 0.0)};
  Rng rng(seed);
  for (const LayerPlan& layer : plan.layers) {
    int fan_in = layer.kind == LayerPlan::Kind::kConv ? layer.patch_len : layer.in_units;
    double bound = std::sqrt(6.0 / fan_in);
    std::size_t w_count = layer.b_off - layer.w_off;
    for (std::size_t i = layer.w_off; i < layer.w_off + w_count; ++i)
      params.theta[i] = (2.0 * rng.uniform() - 1.0) * bound;
  }
  return params;
}

AdamState make_adam(const QNetworkConfig& cfg, double lr) {
  AdamState opt;
  opt.lr = lr;
  std::size_t n = param_count(cfg);
  opt.m.assign(n, 0.0);
  opt.v.assign(n, 0.0);
  return opt;
}

void adam_step(QNetworkParams& params, const std::vector<double>& grads, AdamState& opt) {
  const std::size_t n = params.theta.size();
  if (grads.size() != n || opt.m.size() != n || opt.v.size() != n)
    throw std::invalid_argument("optimizer state does not match the parameter shape");
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    double g = grads[i];
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g;
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * g * g;
    params.theta[i] -= opt.lr * (opt.m[i] / bc1) / (std::sqrt(opt.v[i] / bc2) + opt.eps);
    finite = finite && std::isfinite(params.theta[i]);
  }
  if (!finite) throw std::runtime_error("non-finite parameter after optimizer update");
}

struct QNetwork::Impl {
  Plan plan;
  std::unique_ptr<Engine<double>> e64;
  std::unique_ptr<Engine<float>> e32;

  explicit Impl(const QNetworkConfig& cfg) : plan(make_plan(cfg)) {
    if (cfg.precision == Precision::kF32)
      e32 = std::make_unique<Engine<float>>(plan);
    else
      e64 = std::make_unique<Engine<double>>(plan);
  }
};

QNetwork::QNetwork(const QNetworkConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {}
QNetwork::~QNetwork() = default;
QNetwork::QNetwork(QNetwork&&) noexcept = default;
QNetwork& QNetwork::operator=(QNetwork&&) noexcept = default;

const QNetworkConfig& QNetwork::config() const { return impl_->plan.cfg; }
std::size_t QNetwork::param_count() const { return impl_->plan.params; }

void QNetwork::sync(const std::vector<double>& theta) {
  if (theta.size() != impl_->plan.params)
    throw std::invalid_argument("parameter vector does not match the network plan");
  if (impl_->e64)
    impl_->e64->sync(theta);
  else
    impl_->e32->sync(theta);
}

void QNetwork::forward_batch(const uint8_t* grids, int batch, std::vector<double>& q_out) {
  if (batch < 0) throw std::invalid_argument("negative batch");
  if (batch == 0) {
    q_out.clear();
    return;
  }
  if (impl_->e64) {
    impl_->e64->forward(grids, batch);
    impl_->e64->read_q(batch, q_out);
  } else {
    impl_->e32->forward(grids, batch);
    impl_->e32->read_q(batch, q_out);
  }
}

double QNetwork::backward_batch(const uint8_t* grids, const int* actions, const double* targets,
                                int batch, std::vector<double>& grad_out) {
  if (batch <= 0) throw std::invalid_argument("backward needs a positive batch");
  if (impl_->e64) return impl_->e64->backward(grids, actions, targets, batch, grad_out);
  return impl_->e32->backward(grids, actions, targets, batch, grad_out);
}

std::vector<double> forward(const QNetworkParams& params, const std::vector<uint8_t>& grid) {
  const int d = params.config.d;
  if (static_cast<int>(grid.size()) != d * d)
    throw std::domain_error("grid size does not match the configured dimension");
  QNetwork net(params.config);
  net.sync(params.theta);
  std::vector<double> q;
  net.forward_batch(grid.data(), 1, q);
  return q;
}

std::vector<double> backward(const QNetworkParams& params, const std::vector<uint8_t>& grid,
                             int action, double target) {
  const int d = params.config.d;
  if (static_cast<int>(grid.size()) != d * d)
    throw std::domain_error("grid size does not match the configured dimension");
  QNetwork net(params.config);
  net.sync(params.theta);
  std::vector<double> grad;
  net.backward_batch(grid.data(), &action, &target, 1, grad);
  return grad;
}

}  // namespace toric
