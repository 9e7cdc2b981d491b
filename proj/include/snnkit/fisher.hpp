#pragma once

#include <cstdint>
#include <vector>

#include "snnkit/network.hpp"
#include "snnkit/stbp.hpp"

namespace snnkit {

enum class FisherEstimator { kExactExpectation, kMonteCarlo };

struct FisherOptions {
  FisherEstimator estimator = FisherEstimator::kExactExpectation;
  int mc_draws = 1;   // M per sample, Monte Carlo only
  uint64_t seed = 0;  // Monte Carlo only
};

// Accumulated Fisher trace per timestep: I_t is the mean over samples of the
// expected squared gradient norm of the log posterior when the readout is
// accumulated only through timestep t, labels drawn from the model's own
// posterior. Exact mode enumerates the classes; Monte Carlo draws them.
struct FisherProfile {
  std::vector<double> traces;  // I_1..I_T
  double centroid = 0.0;       // IC in [1, T]
  bool centroid_defined = false;
  size_t num_samples = 0;
  FisherEstimator estimator = FisherEstimator::kExactExpectation;
  int mc_draws = 1;
  uint64_t seed = 0;
  std::vector<double> mc_standard_error;  // per t; empty in exact mode
};

struct LayerFisherMap {
  std::vector<std::vector<double>> values;  // [layer][t-1]
  bool normalized = false;  // each layer divided by its own max over t
};

double fisher_trace(const SpikingNetwork& net, const Tensor& images, int t,
                    const FisherOptions& opts);

FisherProfile fisher_profile(const SpikingNetwork& net, const Tensor& images,
                             const FisherOptions& opts);

// IC = (sum_t t * I_t) / (sum_t I_t), timesteps 1-based. All-zero traces are
// undefined and raise DomainError.
double information_centroid(const std::vector<double>& traces);

// Exact partition of the squared gradient norm by parameter segment, grouped
// per layer; unnormalized columns sum to I_t.
LayerFisherMap layerwise_fisher(const SpikingNetwork& net, const Tensor& images,
                                const FisherOptions& opts, bool normalize_per_layer);

struct IcSeriesEntry {
  int epoch = 0;
  FisherProfile profile;
};

// train() epoch hook recording (epoch, IC, I_1..I_T) on a fixed evaluation
// subset at a fixed stride. Epoch 0 is always recorded.
class IcRecorder {
 public:
  IcRecorder(Tensor eval_images, int stride, FisherOptions opts);
  void operator()(int epoch, const SpikingNetwork& net);
  const std::vector<IcSeriesEntry>& series() const { return series_; }

 private:
  Tensor images_;
  int stride_;
  FisherOptions opts_;
  std::vector<IcSeriesEntry> series_;
};

}  // namespace snnkit
