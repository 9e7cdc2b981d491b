#include "snnkit/ops.hpp"

#include <cmath>
#include <string>

#include "snnkit/error.hpp"

namespace snnkit {

namespace {
void require_rank(const Tensor& t, size_t rank, const char* what) {
  if (t.rank() != rank)
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got " + std::to_string(t.rank()));
}
}  // namespace

Tensor affine_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 2, "affine input");
  require_rank(weights, 2, "affine weights");
  require_rank(bias, 1, "affine bias");
  const size_t batch = input.dim(0), in = input.dim(1);
  const size_t out = weights.dim(0);
  if (weights.dim(1) != in || bias.dim(0) != out)
    throw DimensionError("affine: weights/bias do not conform with input");

  Tensor y({batch, out});
  for (size_t b = 0; b < batch; ++b) {
    const double* xb = input.data() + b * in;
    double* yb = y.data() + b * out;
    for (size_t o = 0; o < out; ++o) {
      const double* wo = weights.data() + o * in;
      double acc = bias[o];
      for (size_t i = 0; i < in; ++i) acc += wo[i] * xb[i];
      yb[o] = acc;
    }
  }
  return y;
}

AffineGrads affine_backward(const Tensor& upstream, const Tensor& input,
                            const Tensor& weights) {
  require_rank(upstream, 2, "affine upstream");
  require_rank(input, 2, "affine cached input");
  require_rank(weights, 2, "affine weights");
  const size_t batch = input.dim(0), in = input.dim(1), out = weights.dim(0);
  if (upstream.dim(0) != batch || upstream.dim(1) != out || weights.dim(1) != in)
    throw DimensionError("affine backward: upstream does not conform with cache");

  AffineGrads g;
  g.input = Tensor({batch, in});
  g.weights = Tensor({out, in});
  g.bias = Tensor({out});
  for (size_t b = 0; b < batch; ++b) {
    const double* ub = upstream.data() + b * out;
    const double* xb = input.data() + b * in;
    double* gib = g.input.data() + b * in;
    for (size_t o = 0; o < out; ++o) {
      const double u = ub[o];
      if (u == 0.0) continue;
      const double* wo = weights.data() + o * in;
      double* gwo = g.weights.data() + o * in;
      g.bias[o] += u;
      for (size_t i = 0; i < in; ++i) {
        gib[i] += u * wo[i];
        gwo[i] += u * xb[i];
      }
    }
  }
  return g;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                      size_t stride, size_t padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  require_rank(bias, 1, "conv2d bias");
  const size_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const size_t cout = kernel.dim(0), k = kernel.dim(2);
  if (kernel.dim(1) != cin || kernel.dim(3) != k || bias.dim(0) != cout)
    throw DimensionError("conv2d: kernel/bias do not conform with input");
  if (k % 2 == 0) throw DomainError("conv2d: kernel size must be odd");
  if (stride < 1) throw DomainError("conv2d: stride must be >= 1");
  if (h + 2 * padding < k || w + 2 * padding < k)
    throw DimensionError("conv2d: kernel larger than padded input");

  const size_t oh = (h + 2 * padding - k) / stride + 1;
  const size_t ow = (w + 2 * padding - k) / stride + 1;
  Tensor y({batch, cout, oh, ow});
  for (size_t b = 0; b < batch; ++b)
    for (size_t co = 0; co < cout; ++co)
      for (size_t oy = 0; oy < oh; ++oy)
        for (size_t ox = 0; ox < ow; ++ox) {
          double acc = bias[co];
          for (size_t ci = 0; ci < cin; ++ci)
            for (size_t ky = 0; ky < k; ++ky) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              for (size_t kx = 0; kx < k; ++kx) {
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
                if (ix < 0 || ix >= static_cast<long>(w)) continue;
                acc += kernel[((co * cin + ci) * k + ky) * k + kx] *
                       input[((b * cin + ci) * h + iy) * w + ix];
              }
            }
          y[((b * cout + co) * oh + oy) * ow + ox] = acc;
        }
  return y;
}

Conv2dGrads conv2d_backward(const Tensor& upstream, const Tensor& input,
                            const Tensor& kernel, size_t stride, size_t padding) {
  require_rank(upstream, 4, "conv2d upstream");
  require_rank(input, 4, "conv2d cached input");
  require_rank(kernel, 4, "conv2d kernel");
  const size_t batch = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const size_t cout = kernel.dim(0), k = kernel.dim(2);
  const size_t oh = (h + 2 * padding - k) / stride + 1;
  const size_t ow = (w + 2 * padding - k) / stride + 1;
  if (upstream.dim(0) != batch || upstream.dim(1) != cout || upstream.dim(2) != oh ||
      upstream.dim(3) != ow)
    throw DimensionError("conv2d backward: upstream does not conform with cache");

  Conv2dGrads g;
  g.input = Tensor({batch, cin, h, w});
  g.kernel = Tensor({cout, cin, k, k});
  g.bias = Tensor({cout});
  for (size_t b = 0; b < batch; ++b)
    for (size_t co = 0; co < cout; ++co)
      for (size_t oy = 0; oy < oh; ++oy)
        for (size_t ox = 0; ox < ow; ++ox) {
          const double u = upstream[((b * cout + co) * oh + oy) * ow + ox];
          if (u == 0.0) continue;
          g.bias[co] += u;
          for (size_t ci = 0; ci < cin; ++ci)
            for (size_t ky = 0; ky < k; ++ky) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              for (size_t kx = 0; kx < k; ++kx) {
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
                if (ix < 0 || ix >= static_cast<long>(w)) continue;
                const size_t kidx = ((co * cin + ci) * k + ky) * k + kx;
                const size_t iidx = ((b * cin + ci) * h + iy) * w + ix;
                g.kernel[kidx] += u * input[iidx];
                g.input[iidx] += u * kernel[kidx];
              }
            }
        }
  return g;
}

Tensor softmax_rows(const Tensor& logits) {
  require_rank(logits, 2, "softmax logits");
  const size_t batch = logits.dim(0), classes = logits.dim(1);
  Tensor p({batch, classes});
  for (size_t b = 0; b < batch; ++b) {
    const double* lb = logits.data() + b * classes;
    double* pb = p.data() + b * classes;
    double mx = lb[0];
    for (size_t c = 1; c < classes; ++c) mx = std::max(mx, lb[c]);
    double denom = 0.0;
    for (size_t c = 0; c < classes; ++c) {
      pb[c] = std::exp(lb[c] - mx);
      denom += pb[c];
    }
    for (size_t c = 0; c < classes; ++c) pb[c] /= denom;
  }
  return p;
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         const std::vector<int>& labels) {
  require_rank(logits, 2, "cross entropy logits");
  const size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch)
    throw DimensionError("cross entropy: one label per sample required");
  for (int y : labels)
    if (y < 0 || static_cast<size_t>(y) >= classes)
      throw DomainError("cross entropy: label out of range");

  CrossEntropyResult r;
  r.logit_grads = softmax_rows(logits);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (size_t b = 0; b < batch; ++b) {
    const double* lb = logits.data() + b * classes;
    double* gb = r.logit_grads.data() + b * classes;
    // log p[y] = (l[y] - max) - log sum exp(l - max); recompute stably
    double mx = lb[0];
    for (size_t c = 1; c < classes; ++c) mx = std::max(mx, lb[c]);
    double denom = 0.0;
    for (size_t c = 0; c < classes; ++c) denom += std::exp(lb[c] - mx);
    loss -= (lb[labels[b]] - mx - std::log(denom));
    gb[labels[b]] -= 1.0;
    for (size_t c = 0; c < classes; ++c) gb[c] *= inv_batch;
  }
  r.loss = loss * inv_batch;
  return r;
}

void sgd_step(ParameterVector& params, const ParameterVector& grads, double lr,
              double weight_decay) {
  params.require_same_segmentation(grads);
  for (size_t s = 0; s < params.segment_count(); ++s) {
    auto& seg = params.segment(s);
    const Tensor& g = grads.segment(s).value;
    const double wd = seg.is_bias ? 0.0 : weight_decay;
    for (size_t i = 0; i < seg.value.size(); ++i)
      seg.value[i] -= lr * (g[i] + wd * seg.value[i]);
  }
}

}  // namespace snnkit
