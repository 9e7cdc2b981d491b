#include "snnkit/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "snnkit/error.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

size_t PruneMask::total() const {
  size_t n = 0;
  for (const auto& t : keep) n += t.size();
  return n;
}

size_t PruneMask::kept() const {
  size_t n = 0;
  for (const auto& t : keep)
    for (size_t i = 0; i < t.size(); ++i) n += (t[i] != 0.0);
  return n;
}

double PruneMask::sparsity() const {
  size_t all = total();
  if (all == 0) return 0.0;
  return 1.0 - double(kept()) / double(all);
}

PruneMask full_mask(const SpikingNetwork& net) {
  PruneMask mask;
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const Tensor& w = net.params().segment(net.weight_index(l)).value;
    mask.keep.push_back(Tensor::full(w.shape(), 1.0));
  }
  return mask;
}

namespace {

void check_congruent(const SpikingNetwork& net, const PruneMask& mask) {
  if (mask.keep.size() != net.layer_count())
    throw StateError("prune mask: layer count mismatch");
  for (size_t l = 0; l < mask.keep.size(); ++l)
    if (mask.keep[l].shape() != net.params().segment(net.weight_index(l)).value.shape())
      throw StateError("prune mask: shape mismatch at layer " + std::to_string(l));
}

}  // namespace

void apply_mask(SpikingNetwork& net, const PruneMask& mask) {
  check_congruent(net, mask);
  for (size_t l = 0; l < mask.keep.size(); ++l) {
    Tensor& w = net.params().segment(net.weight_index(l)).value;
    const double* keep = mask.keep[l].data();
    for (size_t i = 0; i < w.size(); ++i)
      if (keep[i] == 0.0) w[i] = 0.0;
  }
}

void mask_gradients(ParameterVector& grads, const PruneMask& mask) {
  for (size_t l = 0; l < mask.keep.size(); ++l) {
    Tensor& g = grads.segment(2 * l).value;
    if (g.shape() != mask.keep[l].shape())
      throw StateError("mask_gradients: shape mismatch at layer " + std::to_string(l));
    const double* keep = mask.keep[l].data();
    for (size_t i = 0; i < g.size(); ++i)
      if (keep[i] == 0.0) g[i] = 0.0;
  }
}

PruneMask magnitude_prune(const SpikingNetwork& net, double fraction,
                          const PruneMask& existing) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw DomainError("magnitude_prune: fraction must be in (0, 1)");
  check_congruent(net, existing);

  struct Entry {
    double mag;
    size_t layer;
    size_t index;
  };
  std::vector<Entry> pool;
  for (size_t l = 0; l < net.layer_count(); ++l) {
    const Tensor& w = net.params().segment(net.weight_index(l)).value;
    const double* keep = existing.keep[l].data();
    for (size_t i = 0; i < w.size(); ++i)
      if (keep[i] != 0.0) pool.push_back({std::fabs(w[i]), l, i});
  }
  if (pool.empty()) throw StateError("magnitude_prune: nothing left to prune");

  size_t cut = size_t(std::floor(fraction * double(pool.size())));
  PruneMask mask = existing;
  if (cut == 0) return mask;
  std::nth_element(pool.begin(), pool.begin() + (cut - 1), pool.end(),
                   [](const Entry& a, const Entry& b) {
                     return std::tie(a.mag, a.layer, a.index) <
                            std::tie(b.mag, b.layer, b.index);
                   });
  for (size_t i = 0; i < cut; ++i) mask.keep[pool[i].layer][pool[i].index] = 0.0;
  return mask;
}

void PruningSchedule::validate(int full_timesteps) const {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw DomainError("pruning schedule: fraction must be in (0, 1)");
  if (cycles < 1) throw DomainError("pruning schedule: cycles must be >= 1");
  if (retrain_epochs < 1) throw DomainError("pruning schedule: retrain_epochs must be >= 1");
  if (first_epochs < 1) throw DomainError("pruning schedule: first_epochs must be >= 1");
  int tr = retrain_timesteps == 0 ? full_timesteps : retrain_timesteps;
  if (tr < 1 || tr > full_timesteps)
    throw DomainError("pruning schedule: retrain timesteps must be in [1, T]");
}

PruneRunResult iterative_prune(const SpikingNetwork& net, const Dataset& data,
                               const PruningSchedule& schedule, uint64_t seed) {
  int full_t = net.config().timesteps;
  schedule.validate(full_t);
  int retrain_t = schedule.retrain_timesteps == 0 ? full_t : schedule.retrain_timesteps;

  PruneRunResult result;
  result.net = net;
  result.mask = full_mask(net);
  for (int cycle = 1; cycle <= schedule.cycles; ++cycle) {
    result.mask = magnitude_prune(result.net, schedule.fraction, result.mask);
    apply_mask(result.net, result.mask);

    result.net.config().timesteps = retrain_t;
    TrainOptions opts;
    opts.epochs = schedule.retrain_epochs;
    opts.optimizer = schedule.optimizer;
    opts.loss = schedule.loss;
    opts.seed = derive_seed(seed, "retrain", uint64_t(cycle));
    opts.mask = &result.mask;
    TrainResult trained = train(result.net, data, opts);
    result.net = std::move(trained.net);
    result.net.config().timesteps = full_t;

    PruneCycleStats stats;
    stats.cycle = cycle;
    stats.sparsity = result.mask.sparsity();
    stats.retrain_timesteps = retrain_t;
    stats.accuracy = evaluate_accuracy(result.net, data.test_images, data.test_labels);
    stats.epochs_spent = schedule.retrain_epochs;
    result.series.push_back(stats);
  }
  return result;
}

int tic_select_timestep(const std::vector<double>& traces, double kappa) {
  if (traces.empty()) throw DomainError("tic_select_timestep: empty profile");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw DomainError("tic_select_timestep: kappa must be in (0, 1]");
  double peak = 0.0;
  for (double v : traces) {
    if (v < 0.0) throw DomainError("tic_select_timestep: negative trace");
    peak = std::max(peak, v);
  }
  if (peak <= 0.0) throw DomainError("tic_select_timestep: all traces zero");
  double threshold = kappa * peak;
  int last = 1;
  for (size_t i = 0; i < traces.size(); ++i)
    if (traces[i] >= threshold) last = int(i) + 1;
  return last;
}

int tic_select_timestep(const FisherProfile& profile, double kappa) {
  return tic_select_timestep(profile.traces, kappa);
}

double compute_efficiency(double n_first, double n_retrain, double cycles,
                          double timesteps, double retrain_timesteps) {
  if (!(n_first > 0.0 && n_retrain > 0.0 && cycles > 0.0 && timesteps > 0.0 &&
        retrain_timesteps > 0.0))
    throw DomainError("compute_efficiency: all arguments must be positive");
  if (retrain_timesteps > timesteps)
    throw DomainError("compute_efficiency: retrain timesteps exceed full timesteps");
  return n_retrain * cycles * (timesteps - retrain_timesteps) /
         (n_first * timesteps + n_retrain * cycles * timesteps) * 100.0;
}

}  // namespace snnkit
