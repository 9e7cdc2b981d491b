#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnkit/network.hpp"
#include "snnkit/tensor.hpp"

namespace snnkit {

struct AttackParams {
  enum class Kind { kFgsm, kPgd };
  Kind kind = Kind::kPgd;
  double epsilon = 8.0 / 255.0;    // max perturbation, infinity norm
  double step_size = 4.0 / 255.0;  // PGD only (the attack step, not the loss target)
  int iterations = 10;             // PGD only
  double clamp_lo = 0.0;
  double clamp_hi = 1.0;

  void validate() const;  // DomainError; warns on stderr when step_size > epsilon
};

// Per-sample noise delta with exactly ||delta||_2 = ratio * ||x_n||_2, added
// without clamping. Sample n's noise depends only on (seed, n).
Tensor gaussian_corrupt(const Tensor& x, double ratio, uint64_t seed);

// Average-pool by factor k, then bilinear upsample back to (h, w). Half-pixel
// centers (align_corners=false): output pixel i samples the pooled grid at
// (i + 0.5)/k - 0.5, clamped to the border.
Tensor blur_corrupt(const Tensor& x, size_t factor);

// Single signed-gradient step on the cross-entropy at the final readout,
// clamped to [lo, hi]. sign(0) = 0. Every returned pixel satisfies
// |adv - x| <= epsilon exactly (stray rounding ulps are walked back), assuming
// x itself lies inside [lo, hi].
Tensor fgsm(const SpikingNetwork& net, const Tensor& x, const std::vector<int>& labels,
            double epsilon, double clamp_lo, double clamp_hi);

// n signed steps of step_size, each projected onto the infinity ball of radius
// epsilon around x, then clamped. Zero (non-random) initialization. The same
// exact-ball guarantee as fgsm holds for the result.
Tensor pgd(const SpikingNetwork& net, const Tensor& x, const std::vector<int>& labels,
           const AttackParams& params);

struct DeficitWindow {
  int start = 1;   // 1-based timestep
  int length = 3;  // window [start, start+length-1]
  double noise_ratio = 0.5;  // 0 is accepted as the degenerate clean window

  void validate(int timesteps) const;
};

struct DeficitResult {
  double accuracy = 0.0;
  double reference_accuracy = 0.0;  // same window length at the last position
  double relative = 0.0;            // accuracy - reference_accuracy
  int reference_start = 0;
};

// Fig.-2 style protocol: timesteps inside the window see the Gaussian-corrupted
// image, the rest see the clean one. The same noise draw (per sample) is used
// for the evaluated window and the reference window.
DeficitResult windowed_deficit_eval(const SpikingNetwork& net, const Tensor& images,
                                    const std::vector<int>& labels,
                                    const DeficitWindow& window, uint64_t seed);

struct CorruptionSpec {
  enum class Kind { kNone, kGaussian, kBlur, kFgsm, kPgd };
  Kind kind = Kind::kNone;
  double ratio = 0.5;      // gaussian
  size_t blur_factor = 2;  // blur
  AttackParams attack;     // fgsm / pgd
  uint64_t seed = 0;       // gaussian noise draw

  std::string name() const;
  std::string params_text() const;
};

struct RobustnessRow {
  std::string corruption;
  std::string params;
  double clean_accuracy = 0.0;
  double corrupted_accuracy = 0.0;
  double drop = 0.0;  // clean - corrupted
};

RobustnessRow robust_accuracy(const SpikingNetwork& net, const Tensor& images,
                              const std::vector<int>& labels, const CorruptionSpec& spec);

struct KlQuadratic {
  double true_kl = 0.0;
  double quadratic_form = 0.0;  // (1/2) delta^T M_t delta, input-space Fisher
};

// Exact KL between posterior(x) and posterior(x+delta) at timestep t against
// its second-order approximation. x is a single sample [1, ...].
KlQuadratic kl_quadratic_check(const SpikingNetwork& net, const Tensor& x,
                               const Tensor& delta, int t);

}  // namespace snnkit
