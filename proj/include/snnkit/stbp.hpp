#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "snnkit/dataset.hpp"
#include "snnkit/network.hpp"
#include "snnkit/params.hpp"

namespace snnkit {

struct PruneMask;  // pruning.hpp

enum class LossMode { kStandard, kAlphaTarget };

struct LossConfig {
  LossMode mode = LossMode::kStandard;
  double alpha = 0.0;  // target loss level; alpha-target mode only
  void validate() const;
};

struct StbpGradients {
  ParameterVector params;
  Tensor input;  // dL/dx summed over timesteps; empty unless requested
};

// Backpropagation through the layer stack (spatial path, surrogate derivative
// at each spike) and the membrane recurrence (temporal path, decay gated by
// the reset). logit_grads_per_t[i] is dL/dA_{i+1}; empty tensors mean zero and
// the vector may be shorter than T.
StbpGradients stbp_backward(const SpikingNetwork& net, const ForwardTrace& trace,
                            const std::vector<Tensor>& logit_grads_per_t,
                            bool want_input_grad = false);

struct LossResult {
  double value = 0.0;              // training objective
  double raw_cross_entropy = 0.0;  // plain CE for reporting (mean over t in alpha mode)
  std::vector<Tensor> logit_grads_per_t;
};

// Cross-entropy on softmax(A_T).
LossResult loss_standard(const ForwardTrace& trace, const std::vector<int>& labels);

// (1/T) * sum_t |L_t - alpha| with L_t the cross-entropy on softmax(A_t).
// Each per-t gradient is sign(L_t - alpha)/T times the CE gradient; sign(0)=0,
// so timesteps sitting exactly at the target contribute nothing.
LossResult loss_alpha(const ForwardTrace& trace, const std::vector<int>& labels,
                      double alpha);

struct OptimizerConfig {
  double lr = 0.1;
  double weight_decay = 0.0;
  double momentum = 0.0;   // off by default
  double grad_clip = 0.0;  // global-norm clip; 0 disables
  size_t batch_size = 64;
  int lr_step_epochs = 0;  // 0 = constant learning rate
  double lr_step_gamma = 0.1;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // raw cross-entropy, not the alpha objective
  double test_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  uint64_t seed = 0;
  std::vector<EpochStats> epochs;
};

struct TrainOptions {
  int epochs = 1;
  OptimizerConfig optimizer;
  LossConfig loss;
  uint64_t seed = 0;
  const PruneMask* mask = nullptr;  // gradients and weights stay zero where masked
  // Called with epoch 0 before training and after every completed epoch.
  std::function<void(int epoch, const SpikingNetwork&)> epoch_hook;
};

struct TrainResult {
  SpikingNetwork net;
  TrainReport report;
};

// Epoch loop: shuffle by seed, minibatch forward, loss, stbp_backward,
// sgd_step; evaluates test accuracy each epoch. Deterministic given the seed
// (wall-time fields aside). Non-finite loss aborts with diagnostics.
TrainResult train(const SpikingNetwork& net, const Dataset& data, const TrainOptions& opts);

}  // namespace snnkit
