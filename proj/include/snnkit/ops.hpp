#pragma once

#include <vector>

#include "snnkit/params.hpp"
#include "snnkit/tensor.hpp"

namespace snnkit {

// Differentiable primitives, each as an explicit forward/backward pair.
// There is no autodiff tape: callers wire the chain rule by hand.

// input [batch,in], weights [out,in], bias [out] -> [batch,out]
Tensor affine_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct AffineGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};
AffineGrads affine_backward(const Tensor& upstream, const Tensor& input,
                            const Tensor& weights);

// Cross-correlation with zero padding (no kernel flip).
// input [batch,cin,h,w], kernel [cout,cin,k,k], bias [cout]
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                      size_t stride, size_t padding);

struct Conv2dGrads {
  Tensor input;
  Tensor kernel;
  Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& upstream, const Tensor& input,
                            const Tensor& kernel, size_t stride, size_t padding);

struct CrossEntropyResult {
  double loss = 0.0;      // mean over the batch
  Tensor logit_grads;     // (softmax - onehot) / batch
};
CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         const std::vector<int>& labels);

// softmax with max-subtraction, row-wise over [batch,classes]
Tensor softmax_rows(const Tensor& logits);

// w <- w - lr * (g + weight_decay * w); bias segments skip the decay term.
void sgd_step(ParameterVector& params, const ParameterVector& grads, double lr,
              double weight_decay);

}  // namespace snnkit
