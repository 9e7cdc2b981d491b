#pragma once

#include <cstdint>
#include <vector>

#include "snnkit/dataset.hpp"
#include "snnkit/fisher.hpp"
#include "snnkit/network.hpp"
#include "snnkit/stbp.hpp"

namespace snnkit {

// One binary tensor per layer, congruent with that layer's weights; 1 = keep.
// Biases are never pruned.
struct PruneMask {
  std::vector<Tensor> keep;

  size_t total() const;
  size_t kept() const;
  double sparsity() const;  // 1 - kept/total
};

PruneMask full_mask(const SpikingNetwork& net);

// Zeroes pruned weight entries in place.
void apply_mask(SpikingNetwork& net, const PruneMask& mask);

// Zeroes gradient entries at pruned positions so SGD never revives them.
void mask_gradients(ParameterVector& grads, const PruneMask& mask);

// Among currently-kept weights (global pool across layers), newly masks the
// fraction with smallest |w|; ties broken by (layer index, flat index)
// ascending. The returned mask is the intersection with `existing`, so masks
// only ever grow. StateError when no weights are left to prune.
PruneMask magnitude_prune(const SpikingNetwork& net, double fraction,
                          const PruneMask& existing);

struct PruningSchedule {
  double fraction = 0.5;    // p, pruned per cycle among survivors
  int cycles = 5;           // R
  int retrain_epochs = 10;  // N_retrain
  int first_epochs = 60;    // N, epochs of the initial full training stage
  int retrain_timesteps = 0;  // T_retrain; 0 means full T
  OptimizerConfig optimizer;  // reuse the final learning rate, not re-warmed
  LossConfig loss;

  void validate(int full_timesteps) const;
};

struct PruneCycleStats {
  int cycle = 0;
  double sparsity = 0.0;
  int retrain_timesteps = 0;
  double accuracy = 0.0;  // always measured at the full inference T
  int epochs_spent = 0;
};

struct PruneRunResult {
  SpikingNetwork net;
  PruneMask mask;
  std::vector<PruneCycleStats> series;
};

// R cycles of {magnitude_prune; retrain at T_retrain with the mask enforced;
// evaluate at full T}. `net` must already be trained.
PruneRunResult iterative_prune(const SpikingNetwork& net, const Dataset& data,
                               const PruningSchedule& schedule, uint64_t seed);

// T_retrain = max{t : I_t >= kappa * max_s I_s}; the last timestep still
// carrying at least a kappa fraction of the peak information.
int tic_select_timestep(const FisherProfile& profile, double kappa);
int tic_select_timestep(const std::vector<double>& traces, double kappa);

// N_retrain*R*(T - T_retrain) / (N*T + N_retrain*R*T) * 100
double compute_efficiency(double n_first, double n_retrain, double cycles,
                          double timesteps, double retrain_timesteps);

}  // namespace snnkit
