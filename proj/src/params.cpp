#include "snnkit/params.hpp"

#include <utility>

#include "snnkit/error.hpp"

namespace snnkit {

void ParameterVector::add(std::string id, bool is_bias, Tensor value) {
  segments_.push_back(ParamSegment{std::move(id), is_bias, std::move(value)});
}

size_t ParameterVector::total_size() const {
  size_t n = 0;
  for (const auto& s : segments_) n += s.value.size();
  return n;
}

double ParameterVector::squared_norm() const {
  double total = 0.0;
  for (const auto& s : segments_) total += s.value.squared_norm();
  return total;
}

std::vector<double> ParameterVector::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& s : segments_)
    flat.insert(flat.end(), s.value.data(), s.value.data() + s.value.size());
  return flat;
}

void ParameterVector::unflatten(const std::vector<double>& flat) {
  if (flat.size() != total_size())
    throw StateError("flat vector length does not match parameter count");
  size_t offset = 0;
  for (auto& s : segments_) {
    for (size_t i = 0; i < s.value.size(); ++i) s.value[i] = flat[offset + i];
    offset += s.value.size();
  }
}

ParameterVector ParameterVector::zeros_like() const {
  ParameterVector out;
  for (const auto& s : segments_)
    out.add(s.id, s.is_bias, Tensor(s.value.shape()));
  return out;
}

void ParameterVector::add_scaled(const ParameterVector& other, double scale) {
  require_same_segmentation(other);
  for (size_t i = 0; i < segments_.size(); ++i) {
    Tensor& dst = segments_[i].value;
    const Tensor& src = other.segments_[i].value;
    for (size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

void ParameterVector::scale(double s) {
  for (auto& seg : segments_) seg.value *= s;
}

bool ParameterVector::same_segmentation(const ParameterVector& other) const {
  if (segments_.size() != other.segments_.size()) return false;
  for (size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].id != other.segments_[i].id) return false;
    if (segments_[i].is_bias != other.segments_[i].is_bias) return false;
    if (!segments_[i].value.same_shape(other.segments_[i].value)) return false;
  }
  return true;
}

void ParameterVector::require_same_segmentation(const ParameterVector& other) const {
  if (!same_segmentation(other))
    throw StateError("parameter vectors have different segmentations");
}

}  // namespace snnkit
