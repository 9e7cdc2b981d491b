#include "snnkit/stbp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "snnkit/error.hpp"
#include "snnkit/ops.hpp"
#include "snnkit/pruning.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

void LossConfig::validate() const {
  if (alpha < 0.0) throw DomainError("loss: alpha must be >= 0");
}

namespace {

struct SynapticGrads {
  Tensor input;
};

// Runs the synaptic backward of layer l, accumulating weight/bias gradients
// into `grads` and returning the gradient w.r.t. the layer input.
Tensor synaptic_backward(const SpikingNetwork& net, size_t l, const Tensor& upstream,
                         const Tensor& input, ParameterVector& grads) {
  const LayerSpec& spec = net.layers()[l];
  const Tensor& w = net.params().segment(net.weight_index(l)).value;
  if (spec.kind == SynapseKind::kAffine) {
    const bool flattened = input.rank() != 2;  // affine after conv, see forward
    AffineGrads g = affine_backward(
        upstream, flattened ? input.reshaped({input.dim(0), input.size() / input.dim(0)}) : input,
        w);
    grads.segment(net.weight_index(l)).value += g.weights;
    grads.segment(net.bias_index(l)).value += g.bias;
    if (flattened) return g.input.reshaped(input.shape());
    return std::move(g.input);
  }
  Conv2dGrads g = conv2d_backward(upstream, input, w, spec.stride, spec.padding);
  grads.segment(net.weight_index(l)).value += g.kernel;
  grads.segment(net.bias_index(l)).value += g.bias;
  return std::move(g.input);
}

}  // namespace

StbpGradients stbp_backward(const SpikingNetwork& net, const ForwardTrace& trace,
                            const std::vector<Tensor>& logit_grads_per_t,
                            bool want_input_grad) {
  if (trace.net_fingerprint != net.fingerprint())
    throw StateError("stbp_backward: trace was produced by a different network");
  if (static_cast<int>(logit_grads_per_t.size()) > trace.timesteps)
    throw StateError("stbp_backward: more logit gradients than timesteps");

  const NetworkConfig& cfg = trace.config;  // dynamics in effect at forward time
  const size_t L = net.layer_count();
  const bool smooth = cfg.spike_mode == SpikeMode::kSmooth;
  const double decay = cfg.decay();
  const double gain = 1.0 / cfg.time_constant;
  const double vth = cfg.threshold;
  const double sscale = cfg.surrogate_scale;
  const bool spiking_readout = cfg.readout == ReadoutMode::kSpikeCount;

  StbpGradients out;
  out.params = net.params().zeros_like();

  int t_last = -1;
  for (int t = 0; t < static_cast<int>(logit_grads_per_t.size()); ++t)
    if (!logit_grads_per_t[t].empty()) t_last = t;
  if (t_last < 0) return out;  // zero upstream, zero gradients

  if (want_input_grad) out.input = Tensor(trace.input_at(0).shape());

  // dL/dU_l^{t+1}, carried across the time sweep; empty means zero.
  std::vector<Tensor> du_next(L);
  // accumulate-current readout: dL/d(current_L^t) = sum_{s>=t} dL/dA_s
  Tensor suffix({trace.batch, net.classes()});

  for (int t = t_last; t >= 0; --t) {
    if (t < static_cast<int>(logit_grads_per_t.size()) && !logit_grads_per_t[t].empty())
      suffix += logit_grads_per_t[t];

    // gradient flowing into each layer's output at this timestep
    Tensor d_out = suffix;
    for (size_t li = L; li-- > 0;) {
      const bool is_readout = (li == L - 1);
      const bool spiking = is_readout ? spiking_readout : net.layers()[li].lif;
      Tensor upstream_current;
      if (!spiking) {
        upstream_current = std::move(d_out);  // identity activation
      } else {
        const Tensor& u = trace.membrane[t][li];
        const Tensor& o = trace.spikes[t][li];
        Tensor du(u.shape());
        const bool have_next = !du_next[li].empty();
        for (size_t i = 0; i < du.size(); ++i) {
          double v = d_out[i] * surrogate_derivative(u[i] - vth, sscale);
          if (have_next) {
            const double gate = smooth ? 1.0 : (1.0 - o[i]);  // reset blocks the leak path
            v += du_next[li][i] * decay * gate;
          }
          du[i] = v;
        }
        upstream_current = Tensor(du.shape());
        for (size_t i = 0; i < du.size(); ++i) upstream_current[i] = du[i] * gain;
        du_next[li] = std::move(du);
      }
      const Tensor& layer_input = li == 0 ? trace.input_at(t) : trace.spikes[t][li - 1];
      Tensor d_in = synaptic_backward(net, li, upstream_current, layer_input, out.params);
      if (li == 0) {
        if (want_input_grad) out.input += d_in;
      } else {
        d_out = std::move(d_in);
      }
    }
  }

  // Timesteps before t=0 do not exist; leftover du_next is dropped. In
  // accumulate mode the readout has no state, so du_next[L-1] stays empty.
  return out;
}

LossResult loss_standard(const ForwardTrace& trace, const std::vector<int>& labels) {
  LossResult r;
  CrossEntropyResult ce = softmax_cross_entropy(trace.readout_logits.back(), labels);
  r.value = ce.loss;
  r.raw_cross_entropy = ce.loss;
  r.logit_grads_per_t.resize(trace.timesteps);
  r.logit_grads_per_t.back() = std::move(ce.logit_grads);
  return r;
}

LossResult loss_alpha(const ForwardTrace& trace, const std::vector<int>& labels,
                      double alpha) {
  if (alpha < 0.0) throw DomainError("loss_alpha: alpha must be >= 0");
  LossResult r;
  const int T = trace.timesteps;
  const double inv_t = 1.0 / static_cast<double>(T);
  r.logit_grads_per_t.resize(T);
  for (int t = 0; t < T; ++t) {
    CrossEntropyResult ce = softmax_cross_entropy(trace.readout_logits[t], labels);
    const double dev = ce.loss - alpha;
    r.value += std::fabs(dev) * inv_t;
    r.raw_cross_entropy += ce.loss * inv_t;
    const double sign = dev > 0.0 ? 1.0 : (dev < 0.0 ? -1.0 : 0.0);
    if (sign != 0.0) {
      ce.logit_grads *= sign * inv_t;
      r.logit_grads_per_t[t] = std::move(ce.logit_grads);
    }
  }
  return r;
}

TrainResult train(const SpikingNetwork& net, const Dataset& data, const TrainOptions& opts) {
  if (opts.epochs < 1) throw DomainError("train: epochs must be >= 1");
  if (data.train_size() == 0) throw DomainError("train: empty training split");
  opts.loss.validate();
  const OptimizerConfig& oc = opts.optimizer;
  if (oc.batch_size == 0) throw DomainError("train: batch size must be >= 1");

  TrainResult result;
  result.net = net;
  result.report.seed = opts.seed;
  if (opts.mask) apply_mask(result.net, *opts.mask);

  ParameterVector velocity;
  if (oc.momentum > 0.0) velocity = net.params().zeros_like();

  const size_t n = data.train_size();
  const size_t features = data.train_images.size() / n;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  if (opts.epoch_hook) opts.epoch_hook(0, result.net);

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double lr = oc.lr;
    if (oc.lr_step_epochs > 0)
      lr *= std::pow(oc.lr_step_gamma, (epoch - 1) / oc.lr_step_epochs);

    auto rng = make_rng(derive_seed(opts.seed, "shuffle", static_cast<uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    size_t seen = 0;
    int batch_index = 0;
    for (size_t start = 0; start < n; start += oc.batch_size, ++batch_index) {
      const size_t count = std::min(oc.batch_size, n - start);
      Tensor batch({count, features});
      std::vector<int> labels(count);
      for (size_t b = 0; b < count; ++b) {
        const size_t src = order[start + b];
        std::copy(data.train_images.data() + src * features,
                  data.train_images.data() + (src + 1) * features,
                  batch.data() + b * features);
        labels[b] = data.train_labels[src];
      }

      ForwardTrace trace = forward(result.net, batch);
      LossResult loss = opts.loss.mode == LossMode::kStandard
                            ? loss_standard(trace, labels)
                            : loss_alpha(trace, labels, opts.loss.alpha);
      if (!std::isfinite(loss.value))
        throw StateError("train: non-finite loss " + std::to_string(loss.value) +
                         " at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch_index));
      loss_sum += loss.raw_cross_entropy * static_cast<double>(count);
      seen += count;

      StbpGradients grads = stbp_backward(result.net, trace, loss.logit_grads_per_t);
      if (opts.mask) mask_gradients(grads.params, *opts.mask);
      if (oc.grad_clip > 0.0) {
        const double norm = std::sqrt(grads.params.squared_norm());
        if (norm > oc.grad_clip) grads.params.scale(oc.grad_clip / norm);
      }
      if (oc.momentum > 0.0) {
        velocity.scale(oc.momentum);
        velocity.add_scaled(grads.params, 1.0);
        sgd_step(result.net.params(), velocity, lr, oc.weight_decay);
      } else {
        sgd_step(result.net.params(), grads.params, lr, oc.weight_decay);
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(seen);
    stats.test_accuracy = data.test_size()
                              ? evaluate_accuracy(result.net, data.test_images, data.test_labels)
                              : 0.0;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.epochs.push_back(stats);

    if (opts.epoch_hook) opts.epoch_hook(epoch, result.net);
  }
  return result;
}

}  // namespace snnkit
