#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "snnkit/tensor.hpp"

namespace testutil {

// Central finite differences of a scalar function against an analytic
// gradient. Returns max_i |fd_i - analytic_i| scaled by the gradient's
// largest magnitude, so a uniformly tiny gradient cannot inflate the ratio.
inline double fd_max_rel_error(const std::function<double(const std::vector<double>&)>& f,
                               std::vector<double> at, const std::vector<double>& analytic,
                               double h = 1e-5) {
  double scale = 1e-12;
  for (double a : analytic) scale = std::max(scale, std::fabs(a));
  double worst = 0.0;
  for (size_t i = 0; i < at.size(); ++i) {
    double keep = at[i];
    at[i] = keep + h;
    double up = f(at);
    at[i] = keep - h;
    double down = f(at);
    at[i] = keep;
    double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::fabs(fd - analytic[i]) / scale);
  }
  return worst;
}

inline snnkit::Tensor random_tensor(std::vector<size_t> shape, std::mt19937_64& rng,
                                    double scale = 1.0) {
  snnkit::Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, scale);
  for (size_t i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

inline std::vector<double> to_vec(const snnkit::Tensor& t) {
  return std::vector<double>(t.data(), t.data() + t.size());
}

inline snnkit::Tensor from_vec(const std::vector<size_t>& shape,
                               const std::vector<double>& v) {
  return snnkit::Tensor(shape, v);
}

}  // namespace testutil
