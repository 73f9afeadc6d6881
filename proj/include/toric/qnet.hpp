#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "toric/rng.hpp"

namespace toric {

struct ConvSpec {
  int filters = 0;
  int kernel = 0;
  int stride = 0;
  bool operator==(const ConvSpec&) const = default;
};

enum class Precision { kF64, kF32 };

// Convolutional torso plus fully connected head with `outputs` q-value heads.
// Convolutions use circular padding (the input is a torus) and ceiling-mode
// striding with a 1x1 floor so the default stack stays valid down to d=3.
struct QNetworkConfig {
  int d = 9;
  std::vector<ConvSpec> conv_specs{{512, 3, 2}, {256, 3, 2}, {256, 3, 2}};
  std::vector<int> fc_sizes{256, 128, 64, 32};
  int outputs = 4;
  Precision precision = Precision::kF64;

  static QNetworkConfig defaults(int d);
  bool operator==(const QNetworkConfig&) const = default;
};

std::size_t param_count(const QNetworkConfig& cfg);

// Flat parameter vector; per layer: weights, then biases. Conv weights are
// [filter][in_channel][kernel][kernel], fc weights [out][in]. Master copy is
// always 64-bit; 32-bit precision only changes the compute mirror.
struct QNetworkParams {
  QNetworkConfig config;
  std::vector<double> theta;
};

// He-style uniform init, bound sqrt(6 / fan_in); biases zero. Weight draws
// happen in flat parameter order, so a seed pins the full vector.
QNetworkParams init_params(const QNetworkConfig& cfg, uint64_t seed);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<double> m, v;
};

AdamState make_adam(const QNetworkConfig& cfg, double lr = 1e-4);

// Bias-corrected Adam update in place. Throws std::invalid_argument on shape
// mismatch and std::runtime_error if any parameter leaves the finite range.
void adam_step(QNetworkParams& params, const std::vector<double>& grads, AdamState& opt);

// Batched compute engine: owns the layer plan, scratch buffers, and a
// possibly reduced-precision mirror of the parameters. Not thread-safe; use
// one instance per thread. Call sync() after every parameter change.
class QNetwork {
 public:
  explicit QNetwork(const QNetworkConfig& cfg);
  ~QNetwork();
  QNetwork(QNetwork&&) noexcept;
  QNetwork& operator=(QNetwork&&) noexcept;

  const QNetworkConfig& config() const;
  std::size_t param_count() const;

  void sync(const std::vector<double>& theta);

  // grids: `batch` rows of d*d cells in {0,1}. q_out is resized to
  // batch*outputs, row-major.
  void forward_batch(const uint8_t* grids, int batch, std::vector<double>& q_out);

  // Loss is the batch mean of ½(target − q[action])²; grad_out is resized to
  // the parameter count and receives the mean gradient. Returns the loss.
  double backward_batch(const uint8_t* grids, const int* actions, const double* targets,
                        int batch, std::vector<double>& grad_out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Single-grid conveniences; bit-identical to a batch of one.
std::vector<double> forward(const QNetworkParams& params, const std::vector<uint8_t>& grid);
std::vector<double> backward(const QNetworkParams& params, const std::vector<uint8_t>& grid,
                             int action, double target);

}  // namespace toric
