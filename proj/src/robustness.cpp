#include "snnkit/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <utility>

#include "snnkit/error.hpp"
#include "snnkit/rng.hpp"
#include "snnkit/stbp.hpp"

namespace snnkit {

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// x + eps rounds to nearest and can land half an ulp outside the ball, which
// would void the |adv - x| <= eps certificate; walk back the stray ulp.
double snap_into_ball(double v, double x, double eps) {
  while (v - x > eps || x - v > eps) v = std::nextafter(v, x);
  return v;
}

// dL/dx for the standard cross-entropy at the final readout, same shape as x.
Tensor attack_input_gradient(const SpikingNetwork& net, const Tensor& x,
                             const std::vector<int>& labels) {
  ForwardTrace trace = forward(net, x);
  LossResult loss = loss_standard(trace, labels);
  StbpGradients g = stbp_backward(net, trace, loss.logit_grads_per_t, true);
  return g.input.reshaped(x.shape());
}

}  // namespace

void AttackParams::validate() const {
  if (!(epsilon > 0.0)) throw DomainError("attack: epsilon must be positive");
  if (!(clamp_lo < clamp_hi)) throw DomainError("attack: empty clamp range");
  if (kind == Kind::kPgd) {
    if (!(step_size > 0.0)) throw DomainError("attack: step_size must be positive");
    if (iterations < 1) throw DomainError("attack: iterations must be >= 1");
    if (step_size > epsilon)
      std::fprintf(stderr, "warning: PGD step_size %g exceeds epsilon %g\n", step_size,
                   epsilon);
  }
}

Tensor gaussian_corrupt(const Tensor& x, double ratio, uint64_t seed) {
  if (x.rank() < 2) throw DimensionError("gaussian_corrupt: need [N, ...] input");
  if (!(ratio > 0.0)) throw DomainError("gaussian_corrupt: ratio must be positive");
  size_t n_samples = x.shape()[0];
  size_t per = x.size() / n_samples;
  Tensor out = x;
  std::vector<double> noise(per);
  for (size_t n = 0; n < n_samples; ++n) {
    auto rng = make_rng(derive_seed(seed, "gauss", n));
    std::normal_distribution<double> normal(0.0, 1.0);
    double x_sq = 0.0, d_sq = 0.0;
    for (size_t i = 0; i < per; ++i) {
      noise[i] = normal(rng);
      d_sq += noise[i] * noise[i];
      double v = x.data()[n * per + i];
      x_sq += v * v;
    }
    if (x_sq == 0.0) throw DomainError("gaussian_corrupt: zero-norm sample");
    if (d_sq == 0.0) throw DomainError("gaussian_corrupt: degenerate noise draw");
    double scale = ratio * std::sqrt(x_sq / d_sq);
    for (size_t i = 0; i < per; ++i) out.data()[n * per + i] += scale * noise[i];
  }
  return out;
}

Tensor blur_corrupt(const Tensor& x, size_t factor) {
  if (x.rank() != 4) throw DimensionError("blur_corrupt: need [N, c, h, w] input");
  if (factor == 0) throw DomainError("blur_corrupt: factor must be >= 1");
  if (factor == 1) return x;
  size_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  if (h % factor != 0 || w % factor != 0)
    throw DimensionError("blur_corrupt: image size not divisible by factor");
  size_t ph = h / factor, pw = w / factor;

  Tensor pooled({n, c, ph, pw});
  for (size_t b = 0; b < n; ++b)
    for (size_t ch = 0; ch < c; ++ch)
      for (size_t i = 0; i < ph; ++i)
        for (size_t j = 0; j < pw; ++j) {
          double sum = 0.0;
          for (size_t dy = 0; dy < factor; ++dy)
            for (size_t dx = 0; dx < factor; ++dx)
              sum += x.data()[((b * c + ch) * h + i * factor + dy) * w + j * factor + dx];
          pooled.data()[((b * c + ch) * ph + i) * pw + j] = sum / double(factor * factor);
        }

  Tensor out({n, c, h, w});
  double inv = 1.0 / double(factor);
  for (size_t b = 0; b < n; ++b)
    for (size_t ch = 0; ch < c; ++ch)
      for (size_t y = 0; y < h; ++y) {
        double sy = (double(y) + 0.5) * inv - 0.5;
        double fy = sy - std::floor(sy);
        long y0 = long(std::floor(sy));
        long y1 = y0 + 1;
        y0 = std::clamp(y0, 0L, long(ph) - 1);
        y1 = std::clamp(y1, 0L, long(ph) - 1);
        for (size_t xo = 0; xo < w; ++xo) {
          double sx = (double(xo) + 0.5) * inv - 0.5;
          double fx = sx - std::floor(sx);
          long x0 = long(std::floor(sx));
          long x1 = x0 + 1;
          x0 = std::clamp(x0, 0L, long(pw) - 1);
          x1 = std::clamp(x1, 0L, long(pw) - 1);
          const double* p = &pooled.data()[(b * c + ch) * ph * pw];
          double v = (1.0 - fy) * ((1.0 - fx) * p[size_t(y0) * pw + size_t(x0)] +
                                   fx * p[size_t(y0) * pw + size_t(x1)]) +
                     fy * ((1.0 - fx) * p[size_t(y1) * pw + size_t(x0)] +
                           fx * p[size_t(y1) * pw + size_t(x1)]);
          out.data()[((b * c + ch) * h + y) * w + xo] = v;
        }
      }
  return out;
}

Tensor fgsm(const SpikingNetwork& net, const Tensor& x, const std::vector<int>& labels,
            double epsilon, double clamp_lo, double clamp_hi) {
  if (!(epsilon > 0.0)) throw DomainError("fgsm: epsilon must be positive");
  if (!(clamp_lo < clamp_hi)) throw DomainError("fgsm: empty clamp range");
  Tensor g = attack_input_gradient(net, x, labels);
  Tensor out = x;
  for (size_t i = 0; i < out.size(); ++i) {
    double v = x.data()[i] + epsilon * sign_of(g.data()[i]);
    v = std::clamp(v, clamp_lo, clamp_hi);
    out.data()[i] = snap_into_ball(v, x.data()[i], epsilon);
  }
  return out;
}

Tensor pgd(const SpikingNetwork& net, const Tensor& x, const std::vector<int>& labels,
           const AttackParams& params) {
  params.validate();
  Tensor adv = x;
  for (int it = 0; it < params.iterations; ++it) {
    Tensor g = attack_input_gradient(net, adv, labels);
    for (size_t i = 0; i < adv.size(); ++i) {
      double v = adv.data()[i] + params.step_size * sign_of(g.data()[i]);
      v = std::clamp(v, x.data()[i] - params.epsilon, x.data()[i] + params.epsilon);
      v = std::clamp(v, params.clamp_lo, params.clamp_hi);
      adv.data()[i] = snap_into_ball(v, x.data()[i], params.epsilon);
    }
  }
  return adv;
}

void DeficitWindow::validate(int timesteps) const {
  if (length < 1) throw DomainError("deficit window: length must be >= 1");
  if (start < 1 || start + length - 1 > timesteps)
    throw DomainError("deficit window: [" + std::to_string(start) + ", " +
                      std::to_string(start + length - 1) + "] outside 1.." +
                      std::to_string(timesteps));
  if (noise_ratio < 0.0 || noise_ratio > 1.0)
    throw DomainError("deficit window: noise_ratio must be in [0, 1]");
}

namespace {

double windowed_accuracy(const SpikingNetwork& net, const Tensor& clean,
                         const Tensor& corrupted, const std::vector<int>& labels,
                         int start, int length) {
  int timesteps = net.config().timesteps;
  size_t n_samples = clean.shape()[0];
  size_t hits = 0;
  const size_t chunk = 256;
  for (size_t b0 = 0; b0 < n_samples; b0 += chunk) {
    size_t b1 = std::min(b0 + chunk, n_samples);
    Tensor clean_chunk = clean.row_slice(b0, b1);
    Tensor dirty_chunk = corrupted.row_slice(b0, b1);
    std::vector<Tensor> per_t;
    per_t.reserve(size_t(timesteps));
    for (int t = 1; t <= timesteps; ++t)
      per_t.push_back(t >= start && t <= start + length - 1 ? dirty_chunk : clean_chunk);
    ForwardTrace trace = forward_injected(net, per_t);
    const Tensor& logits = trace.readout_logits.back();
    size_t classes = logits.shape()[1];
    for (size_t i = 0; i < b1 - b0; ++i) {
      size_t best = 0;
      for (size_t c = 1; c < classes; ++c)
        if (logits.data()[i * classes + c] > logits.data()[i * classes + best]) best = c;
      hits += (int(best) == labels[b0 + i]);
    }
  }
  return double(hits) / double(n_samples);
}

}  // namespace

DeficitResult windowed_deficit_eval(const SpikingNetwork& net, const Tensor& images,
                                    const std::vector<int>& labels,
                                    const DeficitWindow& window, uint64_t seed) {
  int timesteps = net.config().timesteps;
  window.validate(timesteps);
  if (images.shape()[0] != labels.size())
    throw DimensionError("windowed_deficit_eval: image/label count mismatch");

  Tensor corrupted =
      window.noise_ratio == 0.0
          ? images
          : gaussian_corrupt(images, window.noise_ratio, derive_seed(seed, "deficit-noise"));

  DeficitResult result;
  result.accuracy =
      windowed_accuracy(net, images, corrupted, labels, window.start, window.length);
  result.reference_start = timesteps - window.length + 1;
  result.reference_accuracy =
      window.start == result.reference_start
          ? result.accuracy
          : windowed_accuracy(net, images, corrupted, labels, result.reference_start,
                              window.length);
  result.relative = result.accuracy - result.reference_accuracy;
  return result;
}

std::string CorruptionSpec::name() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kGaussian: return "gaussian";
    case Kind::kBlur: return "blur";
    case Kind::kFgsm: return "fgsm";
    case Kind::kPgd: return "pgd";
  }
  return "?";
}

std::string CorruptionSpec::params_text() const {
  char buf[128];
  switch (kind) {
    case Kind::kNone:
      return "";
    case Kind::kGaussian:
      std::snprintf(buf, sizeof(buf), "ratio=%g seed=%llu", ratio, (unsigned long long)seed);
      return buf;
    case Kind::kBlur:
      std::snprintf(buf, sizeof(buf), "factor=%zu", blur_factor);
      return buf;
    case Kind::kFgsm:
      std::snprintf(buf, sizeof(buf), "eps=%g", attack.epsilon);
      return buf;
    case Kind::kPgd:
      std::snprintf(buf, sizeof(buf), "eps=%g step=%g n=%d", attack.epsilon,
                    attack.step_size, attack.iterations);
      return buf;
  }
  return "";
}

RobustnessRow robust_accuracy(const SpikingNetwork& net, const Tensor& images,
                              const std::vector<int>& labels, const CorruptionSpec& spec) {
  RobustnessRow row;
  row.corruption = spec.name();
  row.params = spec.params_text();
  row.clean_accuracy = evaluate_accuracy(net, images, labels);
  Tensor corrupted;
  switch (spec.kind) {
    case CorruptionSpec::Kind::kNone:
      corrupted = images;
      break;
    case CorruptionSpec::Kind::kGaussian:
      corrupted = gaussian_corrupt(images, spec.ratio, spec.seed);
      break;
    case CorruptionSpec::Kind::kBlur:
      corrupted = blur_corrupt(images, spec.blur_factor);
      break;
    case CorruptionSpec::Kind::kFgsm:
      corrupted = fgsm(net, images, labels, spec.attack.epsilon, spec.attack.clamp_lo,
                       spec.attack.clamp_hi);
      break;
    case CorruptionSpec::Kind::kPgd:
      corrupted = pgd(net, images, labels, spec.attack);
      break;
  }
  row.corrupted_accuracy = evaluate_accuracy(net, corrupted, labels);
  row.drop = row.clean_accuracy - row.corrupted_accuracy;
  return row;
}

namespace {

std::vector<double> log_softmax_row(const Tensor& logits) {
  size_t classes = logits.shape()[1];
  double peak = logits.data()[0];
  for (size_t c = 1; c < classes; ++c) peak = std::max(peak, logits.data()[c]);
  double lse = 0.0;
  for (size_t c = 0; c < classes; ++c) lse += std::exp(logits.data()[c] - peak);
  lse = std::log(lse);
  std::vector<double> out(classes);
  for (size_t c = 0; c < classes; ++c) out[c] = logits.data()[c] - peak - lse;
  return out;
}

}  // namespace

KlQuadratic kl_quadratic_check(const SpikingNetwork& net, const Tensor& x,
                               const Tensor& delta, int t) {
  if (x.rank() < 2 || x.shape()[0] != 1)
    throw DimensionError("kl_quadratic_check: x must be a single sample [1, ...]");
  if (!x.same_shape(delta))
    throw DimensionError("kl_quadratic_check: delta shape must match x");
  if (t < 1 || t > net.config().timesteps)
    throw DomainError("kl_quadratic_check: timestep out of range");

  ForwardTrace trace_p = forward(net, x);
  Tensor shifted = x;
  shifted += delta;
  ForwardTrace trace_q = forward(net, shifted);

  auto lp = log_softmax_row(trace_p.readout_logits[size_t(t) - 1]);
  auto lq = log_softmax_row(trace_q.readout_logits[size_t(t) - 1]);
  size_t classes = lp.size();

  KlQuadratic out;
  for (size_t y = 0; y < classes; ++y) out.true_kl += std::exp(lp[y]) * (lp[y] - lq[y]);

  for (size_t y = 0; y < classes; ++y) {
    double py = std::exp(lp[y]);
    Tensor up({size_t(1), classes});
    for (size_t c = 0; c < classes; ++c) up.data()[c] = (c == y ? 1.0 : 0.0) - std::exp(lp[c]);
    std::vector<Tensor> logit_grads(static_cast<size_t>(t));
    logit_grads[size_t(t) - 1] = std::move(up);
    StbpGradients g = stbp_backward(net, trace_p, logit_grads, true);
    Tensor gx = g.input.reshaped(x.shape());
    double dir = 0.0;
    for (size_t i = 0; i < gx.size(); ++i) dir += gx.data()[i] * delta.data()[i];
    out.quadratic_form += py * dir * dir;
  }
  out.quadratic_form *= 0.5;
  return out;
}

}  // namespace snnkit
