#include "snnkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <utility>

#include "snnkit/error.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

void Dataset::validate() const {
  if (classes < 2) throw DomainError("dataset: need at least two classes");
  if (image_shape.size() != 3) throw DimensionError("dataset: image_shape must be {c, h, w}");
  for (const auto* pair : {&train_images, &test_images}) {
    const auto& shape = pair->shape();
    if (shape.size() != 4) throw DimensionError("dataset: images must be [N, c, h, w]");
    for (size_t i = 0; i < 3; ++i)
      if (shape[i + 1] != image_shape[i])
        throw DimensionError("dataset: image shape mismatch");
  }
  if (train_images.shape()[0] != train_labels.size() ||
      test_images.shape()[0] != test_labels.size())
    throw DimensionError("dataset: image/label count mismatch");
  for (const auto* labels : {&train_labels, &test_labels})
    for (int y : *labels)
      if (y < 0 || size_t(y) >= classes) throw DomainError("dataset: label out of range");
  if (!(norm_lo < norm_hi)) throw DomainError("dataset: empty normalization range");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

void render_sample(std::vector<double>& out, const BlobSpec& spec, int label,
                   std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double cy = 0.5 * double(spec.height - 1);
  double cx = 0.5 * double(spec.width - 1);
  double ring = spec.separation * 0.5 * double(std::min(spec.height, spec.width));
  double angle = 2.0 * kPi * double(label) / double(spec.classes);
  double jy = spec.center_jitter * normal(rng);
  double jx = spec.center_jitter * normal(rng);
  double by = cy + ring * std::sin(angle) + jy;
  double bx = cx + ring * std::cos(angle) + jx;
  double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
  for (size_t y = 0; y < spec.height; ++y) {
    for (size_t x = 0; x < spec.width; ++x) {
      double v;
      if (spec.pattern == BlobSpec::Pattern::kBlob) {
        double dy = double(y) - by;
        double dx = double(x) - bx;
        v = spec.amplitude * std::exp(-(dy * dy + dx * dx) * inv);
      } else {
        // soft bar through the jittered center; orientations spread over a half
        // turn, a full turn would alias opposite classes onto the same bar
        double theta = 0.5 * angle;
        double dy = double(y) - by;
        double dx = double(x) - bx;
        double d = dx * std::sin(theta) - dy * std::cos(theta);
        v = spec.amplitude * std::exp(-d * d * inv);
      }
      v += spec.background + spec.noise * normal(rng);
      out.push_back(std::clamp(v, 0.0, 1.0));
    }
  }
}

std::pair<Tensor, std::vector<int>> render_split(const BlobSpec& spec, uint64_t seed,
                                                 const char* role, size_t count) {
  std::vector<double> data;
  data.reserve(count * spec.height * spec.width);
  std::vector<int> labels(count);
  for (size_t i = 0; i < count; ++i) {
    labels[i] = int(i % spec.classes);
    auto rng = make_rng(derive_seed(seed, role, i));
    render_sample(data, spec, labels[i], rng);
  }
  Tensor images({count, 1, spec.height, spec.width}, std::move(data));
  return {std::move(images), std::move(labels)};
}

}  // namespace

Dataset synth_blobs(const BlobSpec& spec, uint64_t seed) {
  if (spec.classes < 2) throw DomainError("synth_blobs: need at least two classes");
  if (spec.train_samples == 0 || spec.test_samples == 0)
    throw DomainError("synth_blobs: empty split");
  if (spec.height == 0 || spec.width == 0) throw DimensionError("synth_blobs: empty image");
  if (spec.sigma <= 0.0) throw DomainError("synth_blobs: sigma must be positive");

  Dataset data;
  auto train = render_split(spec, seed, "data-train", spec.train_samples);
  auto test = render_split(spec, seed, "data-test", spec.test_samples);
  data.train_images = std::move(train.first);
  data.train_labels = std::move(train.second);
  data.test_images = std::move(test.first);
  data.test_labels = std::move(test.second);
  data.classes = spec.classes;
  data.image_shape = {1, spec.height, spec.width};
  data.norm_lo = 0.0;
  data.norm_hi = 1.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "synth_blobs(pattern=%s classes=%zu %zux%zu seed=%llu)",
                spec.pattern == BlobSpec::Pattern::kBlob ? "blob" : "stripe", spec.classes,
                spec.height, spec.width, (unsigned long long)seed);
  data.provenance = buf;
  data.validate();
  return data;
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

uint32_t read_u32_be(const std::vector<unsigned char>& bytes, size_t offset,
                     const std::string& path) {
  if (offset + 4 > bytes.size())
    throw FormatError(path + ": truncated at byte offset " + std::to_string(bytes.size()));
  return (uint32_t(bytes[offset]) << 24) | (uint32_t(bytes[offset + 1]) << 16) |
         (uint32_t(bytes[offset + 2]) << 8) | uint32_t(bytes[offset + 3]);
}

void write_u32_be(std::ofstream& out, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v >> 24), (unsigned char)(v >> 16),
                        (unsigned char)(v >> 8), (unsigned char)v};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

LabeledImages load_idx(const std::string& images_path, const std::string& labels_path,
                       double lo, double hi) {
  if (!(lo < hi)) throw DomainError("load_idx: empty normalization range");

  auto img_bytes = read_file(images_path);
  uint32_t magic = read_u32_be(img_bytes, 0, images_path);
  if (magic != 0x00000803u)
    throw FormatError(images_path + ": bad image magic at byte offset 0 (got 0x" +
                      [&] { char b[16]; std::snprintf(b, sizeof(b), "%08x", magic); return std::string(b); }() +
                      ", want 0x00000803)");
  uint32_t count = read_u32_be(img_bytes, 4, images_path);
  uint32_t rows = read_u32_be(img_bytes, 8, images_path);
  uint32_t cols = read_u32_be(img_bytes, 12, images_path);
  if (count == 0) throw FormatError(images_path + ": zero items at byte offset 4");
  if (rows == 0 || cols == 0)
    throw FormatError(images_path + ": zero image dimensions at byte offset 8");
  size_t expected = 16 + size_t(count) * rows * cols;
  if (img_bytes.size() != expected)
    throw FormatError(images_path + ": expected " + std::to_string(expected) +
                      " bytes, file ends at byte offset " + std::to_string(img_bytes.size()));

  auto lab_bytes = read_file(labels_path);
  uint32_t lab_magic = read_u32_be(lab_bytes, 0, labels_path);
  if (lab_magic != 0x00000801u)
    throw FormatError(labels_path + ": bad label magic at byte offset 0");
  uint32_t lab_count = read_u32_be(lab_bytes, 4, labels_path);
  if (lab_bytes.size() != 8 + size_t(lab_count))
    throw FormatError(labels_path + ": expected " + std::to_string(8 + size_t(lab_count)) +
                      " bytes, file ends at byte offset " + std::to_string(lab_bytes.size()));
  if (lab_count != count)
    throw FormatError(labels_path + ": " + std::to_string(lab_count) + " labels for " +
                      std::to_string(count) + " images");

  LabeledImages out;
  out.rows = rows;
  out.cols = cols;
  std::vector<double> data(size_t(count) * rows * cols);
  double scale = (hi - lo) / 255.0;
  for (size_t i = 0; i < data.size(); ++i) data[i] = lo + double(img_bytes[16 + i]) * scale;
  out.images = Tensor({size_t(count), 1, rows, cols}, std::move(data));
  out.labels.resize(count);
  for (size_t i = 0; i < count; ++i) out.labels[i] = int(lab_bytes[8 + i]);
  return out;
}

void write_idx_images(const std::string& path, const Tensor& images, size_t rows,
                      size_t cols, double lo, double hi) {
  if (!(lo < hi)) throw DomainError("write_idx_images: empty normalization range");
  const auto& shape = images.shape();
  if (shape.empty()) throw DimensionError("write_idx_images: need [N, ...] images");
  size_t count = shape[0];
  if (images.size() != count * rows * cols)
    throw DimensionError("write_idx_images: size does not match rows*cols");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  write_u32_be(out, 0x00000803u);
  write_u32_be(out, uint32_t(count));
  write_u32_be(out, uint32_t(rows));
  write_u32_be(out, uint32_t(cols));
  double scale = 255.0 / (hi - lo);
  std::vector<unsigned char> bytes(images.size());
  for (size_t i = 0; i < images.size(); ++i) {
    double q = std::round((images.data()[i] - lo) * scale);
    bytes[i] = (unsigned char)std::clamp(q, 0.0, 255.0);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw FormatError("short write to " + path);
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  write_u32_be(out, 0x00000801u);
  write_u32_be(out, uint32_t(labels.size()));
  for (int y : labels) {
    if (y < 0 || y > 255) throw DomainError("write_idx_labels: label out of byte range");
    unsigned char b = (unsigned char)y;
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!out) throw FormatError("short write to " + path);
}

Dataset make_dataset(LabeledImages train, LabeledImages test, size_t classes, double lo,
                     double hi) {
  Dataset data;
  data.image_shape = {1, train.rows, train.cols};
  data.train_images = std::move(train.images);
  data.train_labels = std::move(train.labels);
  data.test_images = std::move(test.images);
  data.test_labels = std::move(test.labels);
  data.classes = classes;
  data.norm_lo = lo;
  data.norm_hi = hi;
  data.provenance = "idx";
  data.validate();
  return data;
}

}  // namespace snnkit
