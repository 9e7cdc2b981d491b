#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "snnkit/error.hpp"
#include "snnkit/fisher.hpp"
#include "snnkit/network.hpp"
#include "snnkit/rng.hpp"

using namespace snnkit;

namespace {

SpikingNetwork two_layer_net(int timesteps, uint64_t seed) {
  NetworkConfig cfg;
  cfg.timesteps = timesteps;
  cfg.time_constant = 2.0;
  std::vector<LayerSpec> layers(2);
  layers[0].out = 3;
  layers[1].out = 2;
  layers[1].lif = false;
  return SpikingNetwork::build(layers, cfg, {4}, seed);
}

Tensor random_images(size_t n, size_t d, uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Tensor out({n, d});
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = uni(rng);
  return out;
}

}  // namespace

TEST_CASE("information centroid closed forms") {
  CHECK(information_centroid({1.0, 0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(information_centroid({0.0, 0.0, 0.0, 1.0}) == doctest::Approx(4.0));
  std::vector<double> uniform(10, 0.7);
  CHECK(information_centroid(uniform) == doctest::Approx(5.5));
  CHECK(information_centroid({1.0, 3.0}) == doctest::Approx(1.75));

  CHECK_THROWS_AS(information_centroid({}), DomainError);
  CHECK_THROWS_AS(information_centroid({0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(information_centroid({1.0, -0.5}), DomainError);
}

TEST_CASE("exact fisher matches the closed form on a readout-only net") {
  // Single affine readout with accumulate coding: A_t = t*(Wx + b), so the
  // log-posterior gradient at t is t*(onehot - p) against (x, 1) and
  //   I_t = mean_n t^2 * (1 - |p|^2) * (|x|^2 + 1)
  // with p = softmax(t*(Wx + b)).
  NetworkConfig cfg;
  cfg.timesteps = 3;
  std::vector<LayerSpec> layers(1);
  layers[0].out = 2;
  layers[0].lif = false;
  SpikingNetwork net = SpikingNetwork::build(layers, cfg, {3}, 11, 1.5);

  const size_t n = 5, d = 3, classes = 2;
  Tensor images = random_images(n, d, 99);

  FisherOptions opts;
  FisherProfile profile = fisher_profile(net, images, opts);
  REQUIRE(profile.traces.size() == 3);

  const double* w = net.params().segment(net.weight_index(0)).value.data();
  const double* b = net.params().segment(net.bias_index(0)).value.data();
  for (int t = 1; t <= 3; ++t) {
    double expect = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double* x = images.data() + i * d;
      double logits[classes];
      for (size_t c = 0; c < classes; ++c) {
        logits[c] = b[c];
        for (size_t j = 0; j < d; ++j) logits[c] += w[c * d + j] * x[j];
        logits[c] *= double(t);
      }
      double zmax = std::max(logits[0], logits[1]);
      double e0 = std::exp(logits[0] - zmax), e1 = std::exp(logits[1] - zmax);
      double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
      double xsq = 1.0;
      for (size_t j = 0; j < d; ++j) xsq += x[j] * x[j];
      expect += double(t) * double(t) * (1.0 - p0 * p0 - p1 * p1) * xsq;
    }
    expect /= double(n);
    CHECK(profile.traces[size_t(t) - 1] == doctest::Approx(expect).epsilon(1e-10));
  }
  CHECK(profile.centroid_defined);
  CHECK(profile.centroid == doctest::Approx(information_centroid(profile.traces)));
  CHECK(profile.num_samples == n);
  CHECK(profile.mc_standard_error.empty());
}

TEST_CASE("fisher_trace agrees with the profile and is deterministic") {
  SpikingNetwork net = two_layer_net(4, 7);
  Tensor images = random_images(6, 4, 42);
  FisherOptions opts;
  FisherProfile profile = fisher_profile(net, images, opts);
  for (int t = 1; t <= 4; ++t)
    CHECK(fisher_trace(net, images, t, opts) == profile.traces[size_t(t) - 1]);
  FisherProfile again = fisher_profile(net, images, opts);
  for (size_t i = 0; i < 4; ++i) CHECK(profile.traces[i] == again.traces[i]);
  for (double v : profile.traces) CHECK(v > 0.0);
}

TEST_CASE("fisher is invariant under sample duplication") {
  SpikingNetwork net = two_layer_net(3, 3);
  Tensor images = random_images(4, 4, 17);
  Tensor doubled({8, 4});
  for (size_t i = 0; i < images.size(); ++i) {
    doubled.data()[i] = images.data()[i];
    doubled.data()[images.size() + i] = images.data()[i];
  }
  FisherOptions opts;
  FisherProfile a = fisher_profile(net, images, opts);
  FisherProfile c = fisher_profile(net, doubled, opts);
  for (size_t i = 0; i < a.traces.size(); ++i)
    CHECK(a.traces[i] == doctest::Approx(c.traces[i]).epsilon(1e-12));
}

TEST_CASE("layerwise fisher partitions the trace") {
  SpikingNetwork net = two_layer_net(4, 5);
  Tensor images = random_images(5, 4, 23);
  FisherOptions opts;
  FisherProfile profile = fisher_profile(net, images, opts);
  LayerFisherMap map = layerwise_fisher(net, images, opts, false);
  REQUIRE(map.values.size() == 2);
  REQUIRE(map.values[0].size() == 4);
  CHECK_FALSE(map.normalized);
  for (size_t t = 0; t < 4; ++t) {
    double sum = map.values[0][t] + map.values[1][t];
    CHECK(sum == doctest::Approx(profile.traces[t]).epsilon(1e-10));
  }

  LayerFisherMap norm = layerwise_fisher(net, images, opts, true);
  CHECK(norm.normalized);
  for (const auto& row : norm.values) {
    double peak = 0.0;
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
      peak = std::max(peak, v);
    }
    CHECK(peak == doctest::Approx(1.0));
  }
}

TEST_CASE("monte carlo estimator is consistent with exact expectation") {
  SpikingNetwork net = two_layer_net(3, 13);
  Tensor images = random_images(6, 4, 31);

  FisherOptions exact;
  FisherProfile ref = fisher_profile(net, images, exact);

  FisherOptions mc;
  mc.estimator = FisherEstimator::kMonteCarlo;
  mc.mc_draws = 400;
  mc.seed = 2024;
  FisherProfile est = fisher_profile(net, images, mc);
  REQUIRE(est.mc_standard_error.size() == 3);
  for (size_t t = 0; t < 3; ++t) {
    double slack = 5.0 * est.mc_standard_error[t] + 1e-9;
    CHECK(std::fabs(est.traces[t] - ref.traces[t]) <= slack);
  }

  // same seed reproduces, different seed perturbs
  FisherProfile est2 = fisher_profile(net, images, mc);
  for (size_t t = 0; t < 3; ++t) CHECK(est.traces[t] == est2.traces[t]);
  mc.seed = 2025;
  FisherProfile est3 = fisher_profile(net, images, mc);
  bool moved = false;
  for (size_t t = 0; t < 3; ++t) moved = moved || est3.traces[t] != est.traces[t];
  CHECK(moved);
}

TEST_CASE("fisher argument validation") {
  SpikingNetwork net = two_layer_net(3, 1);
  Tensor images = random_images(2, 4, 8);
  FisherOptions opts;
  CHECK_THROWS_AS(fisher_trace(net, images, 0, opts), DomainError);
  CHECK_THROWS_AS(fisher_trace(net, images, 4, opts), DomainError);
  FisherOptions mc;
  mc.estimator = FisherEstimator::kMonteCarlo;
  mc.mc_draws = 0;
  CHECK_THROWS_AS(fisher_trace(net, images, 1, mc), DomainError);
}

TEST_CASE("ic recorder samples epochs at the stride") {
  SpikingNetwork net = two_layer_net(3, 21);
  Tensor images = random_images(3, 4, 55);
  FisherOptions opts;
  IcRecorder rec(images, 3, opts);
  for (int epoch = 0; epoch <= 7; ++epoch) rec(epoch, net);
  REQUIRE(rec.series().size() == 3);
  CHECK(rec.series()[0].epoch == 0);
  CHECK(rec.series()[1].epoch == 3);
  CHECK(rec.series()[2].epoch == 6);
  for (const auto& entry : rec.series()) {
    CHECK(entry.profile.traces.size() == 3);
    CHECK(entry.profile.centroid_defined);
  }
  CHECK_THROWS_AS(IcRecorder(images, 0, opts), DomainError);
}
