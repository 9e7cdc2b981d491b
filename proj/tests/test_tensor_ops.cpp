#include <random>

#include "doctest.h"
#include "snnkit/error.hpp"
#include "snnkit/ops.hpp"
#include "snnkit/tensor.hpp"
#include "testutil.hpp"

using namespace snnkit;
using testutil::fd_max_rel_error;
using testutil::from_vec;
using testutil::random_tensor;
using testutil::to_vec;

TEST_CASE("tensor construction and validation") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t[5] == 0.0);
  CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor({2}, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(Tensor({1}, {std::nan("")}), DomainError);

  set_checked_mode(false);
  Tensor nan_ok({1}, {std::nan("")});
  CHECK(!nan_ok.all_finite());
  set_checked_mode(true);
}

TEST_CASE("tensor reshape and row_slice") {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = t.reshaped({3, 2});
  CHECK(r.at2(2, 1) == 6.0);
  CHECK_THROWS_AS(t.reshaped({4, 2}), DimensionError);

  Tensor s = t.row_slice(1, 2);
  CHECK(s.shape() == std::vector<size_t>{1, 3});
  CHECK(s[0] == 4.0);
  CHECK_THROWS_AS(t.row_slice(1, 3), DimensionError);
  CHECK_THROWS_AS(t.row_slice(1, 1), DimensionError);
}

TEST_CASE("norms are index-ordered and exact on known input") {
  Tensor t({4}, {1, -2, 3, -4});
  CHECK(t.squared_norm() == doctest::Approx(30.0).epsilon(1e-15));
  CHECK(t.max_abs() == 4.0);
}

TEST_CASE("affine forward matches a hand computation") {
  // [1,2] x [2x2 weights] + bias
  Tensor x({1, 2}, {1.0, 2.0});
  Tensor w({2, 2}, {1.0, 0.5, -1.0, 2.0});
  Tensor b({2}, {0.25, -0.5});
  Tensor y = affine_forward(x, w, b);
  CHECK(y.at2(0, 0) == doctest::Approx(1.0 + 1.0 + 0.25));
  CHECK(y.at2(0, 1) == doctest::Approx(-1.0 + 4.0 - 0.5));
  CHECK_THROWS_AS(affine_forward(Tensor({1, 3}), w, b), DimensionError);
}

TEST_CASE("affine backward matches finite differences") {
  std::mt19937_64 rng(7);
  Tensor x = random_tensor({3, 4}, rng);
  Tensor w = random_tensor({5, 4}, rng);
  Tensor b = random_tensor({5}, rng);
  Tensor c = random_tensor({3, 5}, rng);  // fixed linear readout of the output

  auto loss_for = [&](const Tensor& xi, const Tensor& wi, const Tensor& bi) {
    Tensor y = affine_forward(xi, wi, bi);
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += c[i] * y[i];
    return s;
  };
  AffineGrads g = affine_backward(c, x, w);

  CHECK(fd_max_rel_error(
            [&](const std::vector<double>& v) { return loss_for(from_vec({3, 4}, v), w, b); },
            to_vec(x), to_vec(g.input)) < 1e-5);
  CHECK(fd_max_rel_error(
            [&](const std::vector<double>& v) { return loss_for(x, from_vec({5, 4}, v), b); },
            to_vec(w), to_vec(g.weights)) < 1e-5);
  CHECK(fd_max_rel_error(
            [&](const std::vector<double>& v) { return loss_for(x, w, from_vec({5}, v)); },
            to_vec(b), to_vec(g.bias)) < 1e-5);
}

TEST_CASE("conv2d forward matches a naive reference") {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({2, 2, 5, 5}, rng);
  Tensor k = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  size_t stride = 2, pad = 1;
  Tensor y = conv2d_forward(x, k, b, stride, pad);
  size_t oh = (5 + 2 * pad - 3) / stride + 1;
  CHECK(y.shape() == std::vector<size_t>{2, 3, oh, oh});

  // independent loop nest, signed arithmetic throughout
  for (size_t n = 0; n < 2; ++n)
    for (size_t co = 0; co < 3; ++co)
      for (size_t i = 0; i < oh; ++i)
        for (size_t j = 0; j < oh; ++j) {
          double acc = b[co];
          for (size_t ci = 0; ci < 2; ++ci)
            for (int di = 0; di < 3; ++di)
              for (int dj = 0; dj < 3; ++dj) {
                int yy = int(i * stride) + di - int(pad);
                int xx = int(j * stride) + dj - int(pad);
                if (yy < 0 || yy >= 5 || xx < 0 || xx >= 5) continue;
                acc += x[((n * 2 + ci) * 5 + size_t(yy)) * 5 + size_t(xx)] *
                       k[((co * 2 + ci) * 3 + size_t(di)) * 3 + size_t(dj)];
              }
          CHECK(y[((n * 3 + co) * oh + i) * oh + j] == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("conv2d backward matches finite differences") {
  std::mt19937_64 rng(13);
  Tensor x = random_tensor({1, 2, 4, 4}, rng);
  Tensor k = random_tensor({2, 2, 3, 3}, rng);
  Tensor b = random_tensor({2}, rng);

  for (auto [stride, pad] : {std::pair<size_t, size_t>{1, 1}, {2, 0}, {1, 0}}) {
    Tensor y0 = conv2d_forward(x, k, b, stride, pad);
    Tensor c = random_tensor(y0.shape(), rng);
    auto loss_for = [&](const Tensor& xi, const Tensor& ki, const Tensor& bi) {
      Tensor y = conv2d_forward(xi, ki, bi, stride, pad);
      double s = 0.0;
      for (size_t i = 0; i < y.size(); ++i) s += c[i] * y[i];
      return s;
    };
    Conv2dGrads g = conv2d_backward(c, x, k, stride, pad);
    CHECK(fd_max_rel_error([&](const std::vector<double>& v) {
            return loss_for(from_vec({1, 2, 4, 4}, v), k, b);
          }, to_vec(x), to_vec(g.input)) < 1e-5);
    CHECK(fd_max_rel_error([&](const std::vector<double>& v) {
            return loss_for(x, from_vec({2, 2, 3, 3}, v), b);
          }, to_vec(k), to_vec(g.kernel)) < 1e-5);
    CHECK(fd_max_rel_error([&](const std::vector<double>& v) {
            return loss_for(x, k, from_vec({2}, v));
          }, to_vec(b), to_vec(g.bias)) < 1e-5);

    // bias gradient is also just the upstream sum per channel
    double manual = 0.0;
    size_t per = c.size() / 2 / 1;
    (void)per;
    for (size_t i = 0; i < c.size(); ++i)
      if ((i / (c.dim(2) * c.dim(3))) % 2 == 0) manual += c[i];
    CHECK(g.bias[0] == doctest::Approx(manual).epsilon(1e-12));
  }
}

TEST_CASE("softmax rows: normalization, stability, shift invariance") {
  Tensor logits({2, 3}, {1.0, 2.0, 3.0, 10000.0, 10000.0, 9999.0});
  Tensor p = softmax_rows(logits);
  for (size_t r = 0; r < 2; ++r) {
    double sum = 0.0;
    for (size_t c = 0; c < 3; ++c) sum += p.at2(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(p.all_finite());

  Tensor shifted({2, 3});
  for (size_t i = 0; i < logits.size(); ++i) shifted[i] = logits[i] + 123.25;
  Tensor q = softmax_rows(shifted);
  for (size_t i = 0; i < p.size(); ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("cross entropy: value, gradient rows sum to zero, FD check") {
  std::mt19937_64 rng(17);
  Tensor logits = random_tensor({4, 3}, rng);
  std::vector<int> labels = {0, 2, 1, 2};
  CrossEntropyResult ce = softmax_cross_entropy(logits, labels);

  // manual value
  Tensor p = softmax_rows(logits);
  double manual = 0.0;
  for (size_t r = 0; r < 4; ++r) manual -= std::log(p.at2(r, size_t(labels[r])));
  manual /= 4.0;
  CHECK(ce.loss == doctest::Approx(manual).epsilon(1e-12));

  for (size_t r = 0; r < 4; ++r) {
    double sum = 0.0;
    for (size_t c = 0; c < 3; ++c) sum += ce.logit_grads.at2(r, c);
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
  }

  CHECK(fd_max_rel_error(
            [&](const std::vector<double>& v) {
              return softmax_cross_entropy(from_vec({4, 3}, v), labels).loss;
            },
            to_vec(logits), to_vec(ce.logit_grads)) < 1e-5);

  CHECK_THROWS_AS(softmax_cross_entropy(logits, std::vector<int>{0, 1, 2, 3}), DomainError);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, std::vector<int>{0, 1}), DimensionError);
}

TEST_CASE("sgd step: update rule and bias decay exemption") {
  ParameterVector params;
  params.add("w", false, Tensor({2}, {1.0, -2.0}));
  params.add("b", true, Tensor({1}, {0.5}));
  ParameterVector grads;
  grads.add("w", false, Tensor({2}, {0.1, 0.2}));
  grads.add("b", true, Tensor({1}, {0.3}));

  sgd_step(params, grads, 0.5, 0.01);
  // w: 1 - 0.5*(0.1 + 0.01*1) = 0.945 ; -2 - 0.5*(0.2 - 0.02) = -2.09
  CHECK(params.segment(0).value[0] == doctest::Approx(0.945).epsilon(1e-15));
  CHECK(params.segment(0).value[1] == doctest::Approx(-2.09).epsilon(1e-15));
  // bias skips decay: 0.5 - 0.5*0.3 = 0.35
  CHECK(params.segment(1).value[0] == doctest::Approx(0.35).epsilon(1e-15));
}

TEST_CASE("parameter vector flatten round-trip and segmentation checks") {
  ParameterVector params;
  params.add("w", false, Tensor({2, 2}, {1, 2, 3, 4}));
  params.add("b", true, Tensor({2}, {5, 6}));
  auto flat = params.flatten();
  CHECK(flat == std::vector<double>{1, 2, 3, 4, 5, 6});

  ParameterVector other = params.zeros_like();
  other.unflatten(flat);
  CHECK(other.segment(1).value[1] == 6.0);
  CHECK_THROWS_AS(other.unflatten(std::vector<double>(5, 0.0)), StateError);

  ParameterVector mismatched;
  mismatched.add("w", false, Tensor({3}, {0, 0, 0}));
  CHECK_THROWS_AS(params.require_same_segmentation(mismatched), StateError);
  CHECK(params.squared_norm() == doctest::Approx(1 + 4 + 9 + 16 + 25 + 36));
}
