#pragma once

#include <string>
#include <vector>

#include "snnkit/tensor.hpp"

namespace snnkit {

struct ParamSegment {
  std::string id;        // e.g. "layer0.weight"
  bool is_bias = false;  // biases are exempt from weight decay and pruning
  Tensor value;
};

// Ordered collection of all trainable tensors of a network. Segment order is
// fixed at construction, so flattening is deterministic.
class ParameterVector {
 public:
  void add(std::string id, bool is_bias, Tensor value);

  size_t segment_count() const { return segments_.size(); }
  ParamSegment& segment(size_t i) { return segments_[i]; }
  const ParamSegment& segment(size_t i) const { return segments_[i]; }

  size_t total_size() const;
  double squared_norm() const;

  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  ParameterVector zeros_like() const;

  // this += scale * other; segmentation must match.
  void add_scaled(const ParameterVector& other, double scale);
  void scale(double s);

  bool same_segmentation(const ParameterVector& other) const;
  void require_same_segmentation(const ParameterVector& other) const;  // StateError

 private:
  std::vector<ParamSegment> segments_;
};

}  // namespace snnkit
