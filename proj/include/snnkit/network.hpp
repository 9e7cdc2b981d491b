#pragma once

#include <cstdint>
#include <vector>

#include "snnkit/params.hpp"
#include "snnkit/tensor.hpp"

namespace snnkit {

enum class ReadoutMode { kAccumulateCurrent, kSpikeCount };

// kHard: Heaviside spikes with hard reset; the surrogate is used only in the
// backward pass. kSmooth: the spike is replaced by the surrogate primitive
// (1/pi)*atan(pi*s*x) + 1/2 and the reset is disabled, which makes the whole
// network differentiable so gradients can be checked by finite differences.
enum class SpikeMode { kHard, kSmooth };

struct NetworkConfig {
  int timesteps = 8;           // T, simulation step dt fixed at 1
  double time_constant = 2.0;  // tau; membrane decays by (1 - 1/tau) each step
  double threshold = 1.0;      // v_th
  ReadoutMode readout = ReadoutMode::kAccumulateCurrent;
  double surrogate_scale = 1.0;
  SpikeMode spike_mode = SpikeMode::kHard;

  void validate() const;  // DomainError on nonsense
  double decay() const { return 1.0 - 1.0 / time_constant; }
};

enum class SynapseKind { kAffine, kConv2d };

struct LayerSpec {
  SynapseKind kind = SynapseKind::kAffine;
  bool lif = true;  // hidden spiking activation; the last layer follows readout mode
  // affine
  size_t out = 0;
  // conv2d
  size_t out_channels = 0;
  size_t kernel = 3;
  size_t stride = 1;
  size_t padding = 0;
};

// Per-timestep caches produced by forward() and consumed by stbp_backward().
// Index [t][l] with t in 0..T-1 (public APIs use 1-based timesteps).
struct ForwardTrace {
  int timesteps = 0;
  size_t batch = 0;
  NetworkConfig config;      // dynamics constants in effect at forward time
  uint64_t net_fingerprint = 0;

  std::vector<std::vector<Tensor>> membrane;     // U_l^t, post-update pre-reset (LIF layers)
  std::vector<std::vector<Tensor>> spikes;       // O_l^t; pass-through current for non-LIF layers
  std::vector<std::vector<Tensor>> after_reset;  // U_l^t * (1 - O_l^t) under hard reset
  std::vector<Tensor> readout_logits;            // A_t, [batch, classes]

  bool shared_input = true;   // direct coding shows one image every step
  std::vector<Tensor> inputs; // one entry if shared, else one per timestep

  const Tensor& input_at(int t0) const { return shared_input ? inputs[0] : inputs[t0]; }
};

class SpikingNetwork {
 public:
  SpikingNetwork() = default;

  // Draws weights from N(0, init_scale/sqrt(fan_in)), biases zero.
  static SpikingNetwork build(std::vector<LayerSpec> layers, NetworkConfig config,
                              std::vector<size_t> input_shape, uint64_t init_seed,
                              double init_scale = 1.0);

  const NetworkConfig& config() const { return config_; }
  NetworkConfig& config() { return config_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const std::vector<size_t>& input_shape() const { return input_shape_; }
  size_t layer_count() const { return layers_.size(); }
  size_t classes() const;

  const ParameterVector& params() const { return params_; }
  ParameterVector& params() { return params_; }

  // shapes exclude the batch dimension
  const std::vector<size_t>& layer_input_shape(size_t l) const { return io_shapes_[l]; }
  const std::vector<size_t>& layer_output_shape(size_t l) const { return io_shapes_[l + 1]; }

  size_t weight_index(size_t l) const { return 2 * l; }
  size_t bias_index(size_t l) const { return 2 * l + 1; }

  // Hashes topology + input shape (not parameter values); pairs traces with nets.
  uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::vector<LayerSpec> layers_;
  NetworkConfig config_;
  ParameterVector params_;
  std::vector<size_t> input_shape_;
  std::vector<std::vector<size_t>> io_shapes_;  // io_shapes_[l] = input shape of layer l
  uint64_t fingerprint_ = 0;
};

// One discretized LIF update:
//   U_new = (1 - 1/tau) * U_prev + (1/tau) * input_current
//   spikes = 1 where U_new >= threshold (ties fire)
//   after_reset = U_new * (1 - spikes)
struct LifStepResult {
  Tensor membrane;
  Tensor spikes;
  Tensor after_reset;
};
LifStepResult lif_step(const Tensor& prev_membrane, const Tensor& input_current,
                       double tau, double threshold);

// s / (1 + (pi*s*x)^2), the derivative of (1/pi)*atan(pi*s*x) + 1/2.
double surrogate_derivative(double x, double scale);
Tensor surrogate_derivative(const Tensor& u_minus_vth, double scale);
// The primitive itself; forward activation in smooth mode.
double surrogate_spike(double x, double scale);

// Direct coding: the same image is injected as input current at every step.
ForwardTrace forward(const SpikingNetwork& net, const Tensor& input);

// Per-timestep injection hook (deficit windows, causality checks).
// inputs_per_t.size() must equal config().timesteps.
ForwardTrace forward_injected(const SpikingNetwork& net,
                              const std::vector<Tensor>& inputs_per_t);

// softmax(A_t) per sample; t is 1-based in 1..T.
Tensor posterior(const ForwardTrace& trace, int t);

// argmax(A_T) accuracy on (images, labels); evaluation helper used everywhere.
double evaluate_accuracy(const SpikingNetwork& net, const Tensor& images,
                         const std::vector<int>& labels, size_t batch_size = 256);

}  // namespace snnkit
