#pragma once

#include <string>

#include "snnkit/network.hpp"

namespace snnkit {

// Checkpoint container, version 1:
//   bytes 0..7   magic "SNNCKPT1"
//   bytes 8..15  JSON header length H, unsigned 64-bit little-endian
//   H bytes      UTF-8 JSON: format_version, config, input_shape, layers,
//                segments (id, is_bias, shape)
//   then         raw IEEE-754 doubles per segment, in segment order,
//                little-endian
// Parameter bytes are copied verbatim, so load(save(net)) == net bitwise.
void save_checkpoint(const SpikingNetwork& net, const std::string& path);
SpikingNetwork load_checkpoint(const std::string& path);

}  // namespace snnkit
