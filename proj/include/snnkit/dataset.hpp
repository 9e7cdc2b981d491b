#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnkit/tensor.hpp"

namespace snnkit {

struct Dataset {
  Tensor train_images;  // [N, c, h, w]
  std::vector<int> train_labels;
  Tensor test_images;
  std::vector<int> test_labels;
  size_t classes = 0;
  std::vector<size_t> image_shape;  // {c, h, w}
  double norm_lo = 0.0;  // normalization range, respected by corruption clamps
  double norm_hi = 1.0;
  std::string provenance;

  void validate() const;
  size_t train_size() const { return train_labels.size(); }
  size_t test_size() const { return test_labels.size(); }
};

struct BlobSpec {
  enum class Pattern { kBlob, kStripe };
  size_t classes = 2;
  size_t train_samples = 512;
  size_t test_samples = 256;
  size_t height = 16;
  size_t width = 16;
  Pattern pattern = Pattern::kBlob;
  double sigma = 2.5;          // blob radius in pixels / stripe softness
  double center_jitter = 1.0;  // per-sample center displacement (std, pixels)
  double noise = 0.15;         // iid pixel noise (std)
  double amplitude = 1.0;
  double background = 0.0;     // base pixel level before pattern and noise
  double separation = 0.55;    // class-center ring radius as a fraction of the half-span
};

// Class-conditional blob or stripe images, clamped to [0,1], deterministic
// per seed. Classes are laid out round-robin within each split.
Dataset synth_blobs(const BlobSpec& spec, uint64_t seed);

struct LabeledImages {
  Tensor images;  // [N, 1, rows, cols], rescaled to [lo, hi]
  std::vector<int> labels;
  size_t rows = 0;
  size_t cols = 0;
};

// IDX (MNIST-family) parsing, bit-exact: big-endian sizes, magic 0x00000803
// for 3-D unsigned-byte image files, 0x00000801 for label files, pixel bytes
// row-major. Malformed input raises FormatError naming the byte offset.
LabeledImages load_idx(const std::string& images_path, const std::string& labels_path,
                       double lo = 0.0, double hi = 1.0);

// Writers for the same formats (dataset gen, test fixtures). Pixels are
// quantized to bytes over [lo, hi].
void write_idx_images(const std::string& path, const Tensor& images, size_t rows,
                      size_t cols, double lo = 0.0, double hi = 1.0);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

Dataset make_dataset(LabeledImages train, LabeledImages test, size_t classes,
                     double lo = 0.0, double hi = 1.0);

}  // namespace snnkit
