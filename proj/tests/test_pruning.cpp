#include <cmath>
#include <vector>

#include "doctest.h"
#include "snnkit/dataset.hpp"
#include "snnkit/error.hpp"
#include "snnkit/pruning.hpp"

using namespace snnkit;

namespace {

SpikingNetwork hand_net() {
  NetworkConfig cfg;
  cfg.timesteps = 3;
  std::vector<LayerSpec> layers(2);
  layers[0].out = 2;
  layers[1].out = 2;
  layers[1].lif = false;
  SpikingNetwork net = SpikingNetwork::build(layers, cfg, {2}, 1);
  net.params().segment(0).value = Tensor({2, 2}, {0.1, -0.2, 0.3, -0.05});
  net.params().segment(2).value = Tensor({2, 2}, {0.15, -0.25, 0.01, 0.4});
  return net;
}

}  // namespace

TEST_CASE("tic timestep selection") {
  CHECK(tic_select_timestep({10.0, 2.0, 0.4, 0.003, 0.001}, 0.05) == 2);
  CHECK(tic_select_timestep({10.0, 0.0, 0.0, 0.0, 0.0}, 0.05) == 1);
  CHECK(tic_select_timestep({3.0, 3.0, 3.0, 3.0}, 0.05) == 4);
  CHECK(tic_select_timestep({0.1, 1.0, 10.0}, 0.05) == 3);
  CHECK(tic_select_timestep({1.0, 0.049, 0.05, 0.0499}, 0.05) == 3);  // >= at the bound

  FisherProfile profile;
  profile.traces = {5.0, 1.0, 0.2};
  CHECK(tic_select_timestep(profile, 0.05) == 2);
  CHECK(tic_select_timestep(profile, 1.0) == 1);

  CHECK_THROWS_AS(tic_select_timestep(std::vector<double>{}, 0.05), DomainError);
  CHECK_THROWS_AS(tic_select_timestep({1.0, 2.0}, 0.0), DomainError);
  CHECK_THROWS_AS(tic_select_timestep({1.0, 2.0}, 1.5), DomainError);
  CHECK_THROWS_AS(tic_select_timestep({0.0, 0.0}, 0.05), DomainError);
  CHECK_THROWS_AS(tic_select_timestep({1.0, -1.0}, 0.05), DomainError);
}

TEST_CASE("compute efficiency closed forms") {
  // N=300, N_retrain=60, R=5, T=5, T'=3: 600 / 3000 * 100
  CHECK(compute_efficiency(300, 60, 5, 5, 3) == doctest::Approx(20.0).epsilon(1e-15));
  CHECK(compute_efficiency(100, 10, 4, 8, 8) == 0.0);
  // upper bound: savings approach N_retrain*R*T / total as T' -> 0+
  CHECK(compute_efficiency(1, 1, 1, 10, 1) == doctest::Approx(9.0 / 20.0 * 100.0));

  CHECK_THROWS_AS(compute_efficiency(0, 60, 5, 5, 3), DomainError);
  CHECK_THROWS_AS(compute_efficiency(300, 0, 5, 5, 3), DomainError);
  CHECK_THROWS_AS(compute_efficiency(300, 60, 0, 5, 3), DomainError);
  CHECK_THROWS_AS(compute_efficiency(300, 60, 5, 0, 3), DomainError);
  CHECK_THROWS_AS(compute_efficiency(300, 60, 5, 5, 0), DomainError);
  CHECK_THROWS_AS(compute_efficiency(300, 60, 5, 5, 6), DomainError);
}

TEST_CASE("full mask covers weights only") {
  SpikingNetwork net = hand_net();
  PruneMask mask = full_mask(net);
  REQUIRE(mask.keep.size() == 2);
  CHECK(mask.keep[0].shape() == std::vector<size_t>{2, 2});
  CHECK(mask.keep[1].shape() == std::vector<size_t>{2, 2});
  CHECK(mask.total() == 8);  // biases excluded
  CHECK(mask.kept() == 8);
  CHECK(mask.sparsity() == 0.0);
}

TEST_CASE("magnitude pruning cuts the smallest weights across layers") {
  SpikingNetwork net = hand_net();
  PruneMask mask = magnitude_prune(net, 0.25, full_mask(net));
  // pool magnitudes: .1 .2 .3 .05 | .15 .25 .01 .4; cut floor(.25*8)=2
  CHECK(mask.keep[0][3] == 0.0);  // |-0.05|
  CHECK(mask.keep[1][2] == 0.0);  // |0.01|
  CHECK(mask.kept() == 6);
  CHECK(mask.sparsity() == doctest::Approx(0.25));

  SUBCASE("masks only grow") {
    PruneMask next = magnitude_prune(net, 0.5, mask);  // cut floor(.5*6)=3
    CHECK(next.keep[0][3] == 0.0);
    CHECK(next.keep[1][2] == 0.0);
    CHECK(next.kept() == 3);
    // survivors are the three largest magnitudes: .25, .3, .4
    CHECK(next.keep[0][2] == 1.0);
    CHECK(next.keep[1][1] == 1.0);
    CHECK(next.keep[1][3] == 1.0);
  }

  SUBCASE("a cut that floors to zero leaves the mask unchanged") {
    PruneMask same = magnitude_prune(net, 0.05, mask);  // floor(.05*6)=0
    CHECK(same.kept() == mask.kept());
  }
}

TEST_CASE("magnitude pruning breaks magnitude ties by layer then index") {
  SpikingNetwork net = hand_net();
  net.params().segment(0).value = Tensor({2, 2}, {0.1, 0.1, 0.5, 0.6});
  net.params().segment(2).value = Tensor({2, 2}, {0.5, 0.1, 0.5, 0.5});
  PruneMask one = magnitude_prune(net, 0.13, full_mask(net));  // floor(.13*8)=1
  CHECK(one.keep[0][0] == 0.0);
  CHECK(one.kept() == 7);
  PruneMask two = magnitude_prune(net, 0.26, full_mask(net));
  CHECK(two.keep[0][0] == 0.0);
  CHECK(two.keep[0][1] == 0.0);
  CHECK(two.keep[1][1] == 1.0);
}

TEST_CASE("pruning argument validation") {
  SpikingNetwork net = hand_net();
  CHECK_THROWS_AS(magnitude_prune(net, 0.0, full_mask(net)), DomainError);
  CHECK_THROWS_AS(magnitude_prune(net, 1.0, full_mask(net)), DomainError);

  PruneMask empty;
  empty.keep.assign(2, Tensor::full({2, 2}, 0.0));
  CHECK_THROWS_AS(magnitude_prune(net, 0.5, empty), StateError);

  PruneMask wrong_layers;
  wrong_layers.keep.assign(1, Tensor::full({2, 2}, 1.0));
  CHECK_THROWS_AS(magnitude_prune(net, 0.5, wrong_layers), StateError);
  CHECK_THROWS_AS(apply_mask(net, wrong_layers), StateError);

  PruneMask wrong_shape;
  wrong_shape.keep.assign(2, Tensor::full({2, 3}, 1.0));
  CHECK_THROWS_AS(apply_mask(net, wrong_shape), StateError);
}

TEST_CASE("apply_mask and mask_gradients zero exactly the pruned slots") {
  SpikingNetwork net = hand_net();
  PruneMask mask = full_mask(net);
  mask.keep[0][1] = 0.0;
  mask.keep[1][0] = 0.0;

  apply_mask(net, mask);
  CHECK(net.params().segment(0).value[1] == 0.0);
  CHECK(net.params().segment(2).value[0] == 0.0);
  CHECK(net.params().segment(0).value[0] == 0.1);
  CHECK(net.params().segment(2).value[3] == 0.4);

  ParameterVector grads = net.params().zeros_like();
  for (size_t s = 0; s < grads.segment_count(); ++s) grads.segment(s).value.fill(1.0);
  mask_gradients(grads, mask);
  CHECK(grads.segment(0).value[1] == 0.0);
  CHECK(grads.segment(2).value[0] == 0.0);
  CHECK(grads.segment(0).value[0] == 1.0);
  // biases keep their gradients
  CHECK(grads.segment(1).value[0] == 1.0);
  CHECK(grads.segment(3).value[1] == 1.0);
}

TEST_CASE("halving schedule walks the exact sparsity ladder") {
  NetworkConfig cfg;
  cfg.timesteps = 2;
  std::vector<LayerSpec> layers(2);
  layers[0].out = 4;
  layers[1].out = 4;
  layers[1].lif = false;
  SpikingNetwork net = SpikingNetwork::build(layers, cfg, {4}, 9);

  PruneMask mask = full_mask(net);
  CHECK(mask.total() == 32);
  const size_t expect_kept[5] = {16, 8, 4, 2, 1};
  for (size_t cycle = 0; cycle < 5; ++cycle) {
    mask = magnitude_prune(net, 0.5, mask);
    CHECK(mask.kept() == expect_kept[cycle]);
  }
  CHECK(mask.sparsity() == doctest::Approx(1.0 - 1.0 / 32.0));
}

TEST_CASE("schedule validation") {
  PruningSchedule s;
  CHECK_NOTHROW(s.validate(8));
  s.fraction = 1.0;
  CHECK_THROWS_AS(s.validate(8), DomainError);
  s = PruningSchedule{};
  s.cycles = 0;
  CHECK_THROWS_AS(s.validate(8), DomainError);
  s = PruningSchedule{};
  s.retrain_epochs = 0;
  CHECK_THROWS_AS(s.validate(8), DomainError);
  s = PruningSchedule{};
  s.first_epochs = 0;
  CHECK_THROWS_AS(s.validate(8), DomainError);
  s = PruningSchedule{};
  s.retrain_timesteps = 9;
  CHECK_THROWS_AS(s.validate(8), DomainError);
  s.retrain_timesteps = 8;
  CHECK_NOTHROW(s.validate(8));
}

TEST_CASE("iterative pruning keeps masked weights at zero") {
  BlobSpec spec;
  spec.train_samples = 32;
  spec.test_samples = 32;
  Dataset data = synth_blobs(spec, 4);

  NetworkConfig cfg;
  cfg.timesteps = 4;
  std::vector<LayerSpec> layers(2);
  layers[0].out = 8;
  layers[1].out = 2;
  layers[1].lif = false;
  SpikingNetwork net = SpikingNetwork::build(layers, cfg, {1, 16, 16}, 30);

  TrainOptions warm;
  warm.epochs = 2;
  warm.seed = 6;
  SpikingNetwork trained = train(net, data, warm).net;

  PruningSchedule schedule;
  schedule.cycles = 2;
  schedule.retrain_epochs = 2;
  PruneRunResult run = iterative_prune(trained, data, schedule, 17);

  REQUIRE(run.series.size() == 2);
  CHECK(run.series[0].cycle == 1);
  CHECK(run.series[1].cycle == 2);
  CHECK(run.series[0].sparsity < run.series[1].sparsity);
  CHECK(run.series[0].retrain_timesteps == 4);
  CHECK(run.net.config().timesteps == 4);
  for (const auto& s : run.series) {
    CHECK(s.accuracy >= 0.0);
    CHECK(s.accuracy <= 1.0);
    CHECK(s.epochs_spent == 2);
  }
  size_t masked = 0;
  for (size_t l = 0; l < 2; ++l) {
    const Tensor& w = run.net.params().segment(run.net.weight_index(l)).value;
    const Tensor& keep = run.mask.keep[l];
    for (size_t i = 0; i < w.size(); ++i)
      if (keep[i] == 0.0) {
        CHECK(w[i] == 0.0);
        ++masked;
      }
  }
  CHECK(masked == run.mask.total() - run.mask.kept());
  CHECK(run.mask.sparsity() == doctest::Approx(run.series.back().sparsity));

  SUBCASE("short retrain windows restore the full horizon afterwards") {
    PruningSchedule fixed = schedule;
    fixed.retrain_timesteps = 1;
    PruneRunResult short_run = iterative_prune(trained, data, fixed, 17);
    CHECK(short_run.series[0].retrain_timesteps == 1);
    CHECK(short_run.net.config().timesteps == 4);
  }
}
