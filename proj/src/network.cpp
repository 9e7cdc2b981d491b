#include "snnkit/network.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "snnkit/error.hpp"
#include "snnkit/ops.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

namespace {
constexpr double kPi = 3.14159265358979323846;

size_t shape_product(const std::vector<size_t>& s) {
  return std::accumulate(s.begin(), s.end(), size_t{1}, std::multiplies<>());
}

std::string shape_str(const std::vector<size_t>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}
}  // namespace

void NetworkConfig::validate() const {
  if (timesteps < 1) throw DomainError("config: timesteps must be >= 1");
  if (!(time_constant > 0.0)) throw DomainError("config: time constant must be > 0");
  if (!(threshold > 0.0)) throw DomainError("config: threshold must be > 0");
  if (!(surrogate_scale > 0.0)) throw DomainError("config: surrogate scale must be > 0");
}

size_t SpikingNetwork::classes() const { return layers_.back().out; }

SpikingNetwork SpikingNetwork::build(std::vector<LayerSpec> layers, NetworkConfig config,
                                     std::vector<size_t> input_shape, uint64_t init_seed,
                                     double init_scale) {
  config.validate();
  if (layers.empty()) throw DomainError("network needs at least one layer");
  if (layers.back().kind != SynapseKind::kAffine)
    throw DomainError("readout layer must be affine");
  if (input_shape.empty()) throw DimensionError("input shape must be non-empty");

  SpikingNetwork net;
  net.layers_ = std::move(layers);
  net.config_ = config;
  net.input_shape_ = std::move(input_shape);
  net.io_shapes_.push_back(net.input_shape_);

  auto rng = make_rng(init_seed);
  for (size_t l = 0; l < net.layers_.size(); ++l) {
    const LayerSpec& spec = net.layers_[l];
    const std::vector<size_t>& in_shape = net.io_shapes_.back();
    const std::string prefix = "layer" + std::to_string(l) + ".";
    size_t fan_in = 0;
    Tensor weights, bias;
    std::vector<size_t> out_shape;
    if (spec.kind == SynapseKind::kAffine) {
      if (spec.out == 0) throw DomainError(prefix + "affine layer needs out > 0");
      fan_in = shape_product(in_shape);
      weights = Tensor({spec.out, fan_in});
      bias = Tensor({spec.out});
      out_shape = {spec.out};
    } else {
      if (in_shape.size() != 3)
        throw DimensionError(prefix + "conv layer needs [c,h,w] input, got " +
                             shape_str(in_shape));
      if (spec.out_channels == 0) throw DomainError(prefix + "conv layer needs out_channels > 0");
      if (spec.kernel % 2 == 0) throw DomainError(prefix + "conv kernel size must be odd");
      if (spec.stride < 1) throw DomainError(prefix + "conv stride must be >= 1");
      const size_t cin = in_shape[0], h = in_shape[1], w = in_shape[2], k = spec.kernel;
      if (h + 2 * spec.padding < k || w + 2 * spec.padding < k)
        throw DimensionError(prefix + "conv kernel larger than padded input");
      fan_in = cin * k * k;
      weights = Tensor({spec.out_channels, cin, k, k});
      bias = Tensor({spec.out_channels});
      out_shape = {spec.out_channels, (h + 2 * spec.padding - k) / spec.stride + 1,
                   (w + 2 * spec.padding - k) / spec.stride + 1};
    }
    std::normal_distribution<double> dist(0.0, init_scale / std::sqrt(static_cast<double>(fan_in)));
    for (size_t i = 0; i < weights.size(); ++i) weights[i] = dist(rng);
    net.params_.add(prefix + "weight", false, std::move(weights));
    net.params_.add(prefix + "bias", true, std::move(bias));
    net.io_shapes_.push_back(std::move(out_shape));
  }

  // structural fingerprint
  std::string topo = shape_str(net.input_shape_);
  for (const auto& spec : net.layers_) {
    topo += spec.kind == SynapseKind::kAffine ? "|a" : "|c";
    topo += std::to_string(spec.out) + "," + std::to_string(spec.out_channels) + "," +
            std::to_string(spec.kernel) + "," + std::to_string(spec.stride) + "," +
            std::to_string(spec.padding) + (spec.lif ? ",1" : ",0");
  }
  net.fingerprint_ = fnv1a64(topo);
  return net;
}

double surrogate_derivative(double x, double scale) {
  const double z = kPi * scale * x;
  return scale / (1.0 + z * z);
}

Tensor surrogate_derivative(const Tensor& u_minus_vth, double scale) {
  Tensor out(u_minus_vth.shape());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = surrogate_derivative(u_minus_vth[i], scale);
  return out;
}

double surrogate_spike(double x, double scale) {
  return std::atan(kPi * scale * x) / kPi + 0.5;
}

LifStepResult lif_step(const Tensor& prev_membrane, const Tensor& input_current,
                       double tau, double threshold) {
  if (!prev_membrane.same_shape(input_current))
    throw DimensionError("lif_step: membrane and current shapes differ");
  const double decay = 1.0 - 1.0 / tau;
  const double gain = 1.0 / tau;
  LifStepResult r;
  r.membrane = Tensor(prev_membrane.shape());
  r.spikes = Tensor(prev_membrane.shape());
  r.after_reset = Tensor(prev_membrane.shape());
  for (size_t i = 0; i < r.membrane.size(); ++i) {
    const double u = decay * prev_membrane[i] + gain * input_current[i];
    const double o = u >= threshold ? 1.0 : 0.0;
    r.membrane[i] = u;
    r.spikes[i] = o;
    r.after_reset[i] = u * (1.0 - o);
  }
  return r;
}

namespace {

Tensor synaptic_forward(const SpikingNetwork& net, size_t l, const Tensor& in) {
  const LayerSpec& spec = net.layers()[l];
  const Tensor& w = net.params().segment(net.weight_index(l)).value;
  const Tensor& b = net.params().segment(net.bias_index(l)).value;
  if (spec.kind == SynapseKind::kAffine) {
    if (in.rank() != 2)  // affine after conv flattens the feature map
      return affine_forward(in.reshaped({in.dim(0), in.size() / in.dim(0)}), w, b);
    return affine_forward(in, w, b);
  }
  return conv2d_forward(in, w, b, spec.stride, spec.padding);
}

/// Conforms a batched input to the first layer's expectations: flattens to
// [batch, features] for affine, keeps [batch,c,h,w] for conv.
Tensor conform_input(const SpikingNetwork& net, const Tensor& input) {
  if (input.rank() < 2) throw DimensionError("input must carry a batch dimension");
  const size_t batch = input.dim(0);
  const size_t features = input.size() / batch;
  const std::vector<size_t>& expect = net.layer_input_shape(0);
  if (features != shape_product(expect))
    throw DimensionError("input feature count " + std::to_string(features) +
                         " does not match network input " + shape_str(expect));
  if (net.layers()[0].kind == SynapseKind::kAffine) {
    if (input.rank() == 2) return input;
    return input.reshaped({batch, features});
  }
  std::vector<size_t> full = {batch};
  full.insert(full.end(), expect.begin(), expect.end());
  if (input.shape() == full) return input;
  return input.reshaped(full);
}

ForwardTrace run_forward(const SpikingNetwork& net, std::vector<Tensor> inputs,
                         bool shared) {
  const NetworkConfig& cfg = net.config();
  const int T = cfg.timesteps;
  const size_t L = net.layer_count();
  const size_t batch = inputs[0].dim(0);
  const bool smooth = cfg.spike_mode == SpikeMode::kSmooth;
  const double decay = cfg.decay();
  const double gain = 1.0 / cfg.time_constant;
  const double vth = cfg.threshold;
  const double sscale = cfg.surrogate_scale;

  ForwardTrace trace;
  trace.timesteps = T;
  trace.batch = batch;
  trace.config = cfg;
  trace.net_fingerprint = net.fingerprint();
  trace.shared_input = shared;
  trace.inputs = std::move(inputs);
  trace.membrane.assign(T, std::vector<Tensor>(L));
  trace.spikes.assign(T, std::vector<Tensor>(L));
  trace.after_reset.assign(T, std::vector<Tensor>(L));
  trace.readout_logits.reserve(T);

  // running post-reset membranes, per layer (empty where stateless)
  std::vector<Tensor> carried(L);
  Tensor logits({batch, net.classes()});

  for (int t = 0; t < T; ++t) {
    Tensor activation = trace.input_at(t);  // O_0 = injected current
    for (size_t l = 0; l < L; ++l) {
      Tensor current = synaptic_forward(net, l, activation);
      const bool is_readout = (l == L - 1);
      const bool spiking = is_readout ? (cfg.readout == ReadoutMode::kSpikeCount)
                                      : net.layers()[l].lif;
      if (!spiking) {
        if (is_readout) {
          logits += current;  // accumulate-current readout, no leak, no state
        } else {
          trace.spikes[t][l] = std::move(current);  // pass-through activation
          activation = trace.spikes[t][l];
        }
        continue;
      }
      if (carried[l].empty()) carried[l] = Tensor(current.shape());  // U^0 = 0
      Tensor u(current.shape());
      Tensor o(current.shape());
      Tensor h(current.shape());
      const Tensor& prev = carried[l];
      for (size_t i = 0; i < u.size(); ++i) {
        const double ui = decay * prev[i] + gain * current[i];
        u[i] = ui;
        if (smooth) {
          o[i] = surrogate_spike(ui - vth, sscale);
          h[i] = ui;  // reset disabled
        } else {
          const double oi = ui >= vth ? 1.0 : 0.0;
          o[i] = oi;
          h[i] = ui * (1.0 - oi);
        }
      }
      carried[l] = h;
      if (is_readout) logits += o;  // spike-count readout
      trace.membrane[t][l] = std::move(u);
      trace.spikes[t][l] = std::move(o);
      trace.after_reset[t][l] = std::move(h);
      if (!is_readout) activation = trace.spikes[t][l];
    }
    trace.readout_logits.push_back(logits);
  }
  return trace;
}

}  // namespace

ForwardTrace forward(const SpikingNetwork& net, const Tensor& input) {
  std::vector<Tensor> one;
  one.push_back(conform_input(net, input));
  return run_forward(net, std::move(one), /*shared=*/true);
}

ForwardTrace forward_injected(const SpikingNetwork& net,
                              const std::vector<Tensor>& inputs_per_t) {
  if (static_cast<int>(inputs_per_t.size()) != net.config().timesteps)
    throw DimensionError("forward_injected: need one input per timestep");
  std::vector<Tensor> conformed;
  conformed.reserve(inputs_per_t.size());
  for (const Tensor& x : inputs_per_t) conformed.push_back(conform_input(net, x));
  for (size_t t = 1; t < conformed.size(); ++t)
    if (!conformed[t].same_shape(conformed[0]))
      throw DimensionError("forward_injected: inputs disagree across timesteps");
  return run_forward(net, std::move(conformed), /*shared=*/false);
}

Tensor posterior(const ForwardTrace& trace, int t) {
  if (t < 1 || t > trace.timesteps)
    throw DomainError("posterior: timestep " + std::to_string(t) + " outside 1.." +
                      std::to_string(trace.timesteps));
  return softmax_rows(trace.readout_logits[t - 1]);
}

double evaluate_accuracy(const SpikingNetwork& net, const Tensor& images,
                         const std::vector<int>& labels, size_t batch_size) {
  const size_t n = images.dim(0);
  if (labels.size() != n) throw DimensionError("evaluate_accuracy: labels/images mismatch");
  if (n == 0) throw DomainError("evaluate_accuracy: empty dataset");
  const size_t features = images.size() / n;
  size_t correct = 0;
  for (size_t start = 0; start < n; start += batch_size) {
    const size_t count = std::min(batch_size, n - start);
    Tensor chunk({count, features});
    std::copy(images.data() + start * features, images.data() + (start + count) * features,
              chunk.data());
    ForwardTrace trace = forward(net, chunk);
    const Tensor& logits = trace.readout_logits.back();
    const size_t classes = logits.dim(1);
    for (size_t b = 0; b < count; ++b) {
      const double* row = logits.data() + b * classes;
      size_t best = 0;
      for (size_t c = 1; c < classes; ++c)
        if (row[c] > row[best]) best = c;
      if (static_cast<int>(best) == labels[start + b]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace snnkit
