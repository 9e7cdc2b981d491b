#include "snnkit/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "snnkit/error.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

namespace {

Tensor sample_slice(const Tensor& images, size_t n) { return images.row_slice(n, n + 1); }

// Squared gradient norm of log softmax(A_t)[y] w.r.t. the parameters, split by
// segment. The logit gradient of the log posterior is onehot(y) - softmax.
std::vector<double> segment_sq_norms(const SpikingNetwork& net, const ForwardTrace& trace,
                                     int t, size_t y, const Tensor& post) {
  size_t classes = post.shape()[1];
  Tensor up({size_t(1), classes});
  for (size_t c = 0; c < classes; ++c)
    up.data()[c] = (c == y ? 1.0 : 0.0) - post.data()[c];
  std::vector<Tensor> logit_grads(static_cast<size_t>(t));
  logit_grads[size_t(t) - 1] = std::move(up);
  StbpGradients g = stbp_backward(net, trace, logit_grads, false);
  std::vector<double> out(g.params.segment_count());
  for (size_t s = 0; s < out.size(); ++s)
    out[s] = g.params.segment(s).value.squared_norm();
  return out;
}

struct FisherAccum {
  std::vector<std::vector<double>> seg;  // [t-1][segment], summed over samples
  std::vector<double> se2;               // [t-1], MC variance of the mean
  size_t samples = 0;
};

FisherAccum accumulate(const SpikingNetwork& net, const Tensor& images,
                       const std::vector<int>& ts, const FisherOptions& opts) {
  if (images.shape().size() < 2 || images.shape()[0] == 0)
    throw DomainError("fisher: need at least one sample");
  int timesteps = net.config().timesteps;
  for (int t : ts)
    if (t < 1 || t > timesteps) throw DomainError("fisher: timestep out of range");
  if (opts.estimator == FisherEstimator::kMonteCarlo && opts.mc_draws < 1)
    throw DomainError("fisher: mc_draws must be >= 1");

  size_t n_samples = images.shape()[0];
  size_t n_segments = net.params().segment_count();
  FisherAccum acc;
  acc.samples = n_samples;
  acc.seg.assign(size_t(timesteps), std::vector<double>(n_segments, 0.0));
  acc.se2.assign(size_t(timesteps), 0.0);

  for (size_t n = 0; n < n_samples; ++n) {
    Tensor sample = sample_slice(images, n);
    ForwardTrace trace = forward(net, sample);
    for (int t : ts) {
      Tensor post = posterior(trace, t);
      size_t classes = post.shape()[1];
      if (opts.estimator == FisherEstimator::kExactExpectation) {
        for (size_t y = 0; y < classes; ++y) {
          double w = post.data()[y];
          if (w == 0.0) continue;
          auto norms = segment_sq_norms(net, trace, t, y, post);
          for (size_t s = 0; s < n_segments; ++s) acc.seg[size_t(t) - 1][s] += w * norms[s];
        }
      } else {
        // One backward per class that was actually drawn; repeated draws only
        // change the weight, not the gradient.
        auto rng = make_rng(derive_seed(opts.seed, "fisher-mc",
                                        n * uint64_t(timesteps) + uint64_t(t - 1)));
        std::discrete_distribution<size_t> dist(post.data(), post.data() + classes);
        std::vector<int> counts(classes, 0);
        for (int m = 0; m < opts.mc_draws; ++m) counts[dist(rng)]++;
        std::vector<double> value(classes, 0.0);
        double mean = 0.0;
        for (size_t y = 0; y < classes; ++y) {
          if (counts[y] == 0) continue;
          auto norms = segment_sq_norms(net, trace, t, y, post);
          double w = double(counts[y]) / double(opts.mc_draws);
          for (size_t s = 0; s < n_segments; ++s) acc.seg[size_t(t) - 1][s] += w * norms[s];
          for (double v : norms) value[y] += v;
          mean += w * value[y];
        }
        if (opts.mc_draws > 1) {
          double ss = 0.0;
          for (size_t y = 0; y < classes; ++y)
            if (counts[y] > 0) ss += counts[y] * (value[y] - mean) * (value[y] - mean);
          // per-sample variance of the M-draw mean
          acc.se2[size_t(t) - 1] += ss / double(opts.mc_draws - 1) / double(opts.mc_draws);
        }
      }
    }
  }
  return acc;
}

std::vector<int> all_timesteps(const SpikingNetwork& net) {
  std::vector<int> ts(size_t(net.config().timesteps));
  for (size_t i = 0; i < ts.size(); ++i) ts[i] = int(i) + 1;
  return ts;
}

}  // namespace

double fisher_trace(const SpikingNetwork& net, const Tensor& images, int t,
                    const FisherOptions& opts) {
  FisherAccum acc = accumulate(net, images, {t}, opts);
  double sum = 0.0;
  for (double v : acc.seg[size_t(t) - 1]) sum += v;
  return sum / double(acc.samples);
}

FisherProfile fisher_profile(const SpikingNetwork& net, const Tensor& images,
                             const FisherOptions& opts) {
  FisherAccum acc = accumulate(net, images, all_timesteps(net), opts);
  FisherProfile profile;
  profile.num_samples = acc.samples;
  profile.estimator = opts.estimator;
  profile.mc_draws = opts.mc_draws;
  profile.seed = opts.seed;
  profile.traces.resize(acc.seg.size(), 0.0);
  for (size_t i = 0; i < acc.seg.size(); ++i) {
    double sum = 0.0;
    for (double v : acc.seg[i]) sum += v;
    profile.traces[i] = sum / double(acc.samples);
  }
  double total = 0.0;
  for (double v : profile.traces) total += v;
  if (total > 0.0) {
    profile.centroid = information_centroid(profile.traces);
    profile.centroid_defined = true;
  }
  if (opts.estimator == FisherEstimator::kMonteCarlo) {
    profile.mc_standard_error.resize(acc.se2.size(), 0.0);
    for (size_t i = 0; i < acc.se2.size(); ++i)
      profile.mc_standard_error[i] = std::sqrt(acc.se2[i]) / double(acc.samples);
  }
  return profile;
}

double information_centroid(const std::vector<double>& traces) {
  if (traces.empty()) throw DomainError("information_centroid: empty trace vector");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < traces.size(); ++i) {
    if (traces[i] < 0.0) throw DomainError("information_centroid: negative trace");
    num += double(i + 1) * traces[i];
    den += traces[i];
  }
  if (den <= 0.0) throw DomainError("information_centroid: all traces zero");
  return num / den;
}

LayerFisherMap layerwise_fisher(const SpikingNetwork& net, const Tensor& images,
                                const FisherOptions& opts, bool normalize_per_layer) {
  FisherAccum acc = accumulate(net, images, all_timesteps(net), opts);
  size_t layers = net.layer_count();
  LayerFisherMap map;
  map.normalized = normalize_per_layer;
  map.values.assign(layers, std::vector<double>(acc.seg.size(), 0.0));
  for (size_t t = 0; t < acc.seg.size(); ++t)
    for (size_t l = 0; l < layers; ++l)
      map.values[l][t] = (acc.seg[t][net.weight_index(l)] + acc.seg[t][net.bias_index(l)]) /
                         double(acc.samples);
  if (normalize_per_layer) {
    for (auto& row : map.values) {
      double peak = 0.0;
      for (double v : row) peak = std::max(peak, v);
      if (peak > 0.0)
        for (double& v : row) v /= peak;
    }
  }
  return map;
}

IcRecorder::IcRecorder(Tensor eval_images, int stride, FisherOptions opts)
    : images_(std::move(eval_images)), stride_(stride), opts_(opts) {
  if (stride_ < 1) throw DomainError("IcRecorder: stride must be >= 1");
}

void IcRecorder::operator()(int epoch, const SpikingNetwork& net) {
  if (epoch % stride_ != 0) return;
  IcSeriesEntry entry;
  entry.epoch = epoch;
  entry.profile = fisher_profile(net, images_, opts_);
  series_.push_back(std::move(entry));
}

}  // namespace snnkit
