#include "snnkit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"
#include "snnkit/error.hpp"

namespace snnkit {

namespace {

constexpr char kMagic[8] = {'S', 'N', 'N', 'C', 'K', 'P', 'T', '1'};

const char* readout_name(ReadoutMode m) {
  return m == ReadoutMode::kAccumulateCurrent ? "accumulate_current" : "spike_count";
}

ReadoutMode readout_from(const std::string& s) {
  if (s == "accumulate_current") return ReadoutMode::kAccumulateCurrent;
  if (s == "spike_count") return ReadoutMode::kSpikeCount;
  throw FormatError("checkpoint: unknown readout mode '" + s + "'");
}

const char* spike_mode_name(SpikeMode m) { return m == SpikeMode::kHard ? "hard" : "smooth"; }

SpikeMode spike_mode_from(const std::string& s) {
  if (s == "hard") return SpikeMode::kHard;
  if (s == "smooth") return SpikeMode::kSmooth;
  throw FormatError("checkpoint: unknown spike mode '" + s + "'");
}

const char* kind_name(SynapseKind k) { return k == SynapseKind::kAffine ? "affine" : "conv2d"; }

SynapseKind kind_from(const std::string& s) {
  if (s == "affine") return SynapseKind::kAffine;
  if (s == "conv2d") return SynapseKind::kConv2d;
  throw FormatError("checkpoint: unknown synapse kind '" + s + "'");
}

}  // namespace

void save_checkpoint(const SpikingNetwork& net, const std::string& path) {
  nlohmann::json header;
  header["format_version"] = 1;
  const NetworkConfig& cfg = net.config();
  header["config"] = {{"timesteps", cfg.timesteps},
                      {"time_constant", cfg.time_constant},
                      {"threshold", cfg.threshold},
                      {"readout", readout_name(cfg.readout)},
                      {"surrogate_scale", cfg.surrogate_scale},
                      {"spike_mode", spike_mode_name(cfg.spike_mode)}};
  header["input_shape"] = net.input_shape();
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& spec : net.layers())
    layers.push_back({{"kind", kind_name(spec.kind)},
                      {"lif", spec.lif},
                      {"out", spec.out},
                      {"out_channels", spec.out_channels},
                      {"kernel", spec.kernel},
                      {"stride", spec.stride},
                      {"padding", spec.padding}});
  header["layers"] = std::move(layers);
  nlohmann::json segments = nlohmann::json::array();
  for (size_t s = 0; s < net.params().segment_count(); ++s) {
    const ParamSegment& seg = net.params().segment(s);
    segments.push_back(
        {{"id", seg.id}, {"is_bias", seg.is_bias}, {"shape", seg.value.shape()}});
  }
  header["segments"] = std::move(segments);

  std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  uint64_t h = text.size();
  unsigned char len[8];
  for (int i = 0; i < 8; ++i) len[i] = (unsigned char)(h >> (8 * i));
  out.write(reinterpret_cast<const char*>(len), 8);
  out.write(text.data(), std::streamsize(text.size()));
  for (size_t s = 0; s < net.params().segment_count(); ++s) {
    const Tensor& value = net.params().segment(s).value;
    out.write(reinterpret_cast<const char*>(value.data()),
              std::streamsize(value.size() * sizeof(double)));
  }
  if (!out) throw FormatError("short write to " + path);
}

SpikingNetwork load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError(path + ": bad checkpoint magic at byte offset 0");
  unsigned char len[8];
  if (!in.read(reinterpret_cast<char*>(len), 8))
    throw FormatError(path + ": truncated header length at byte offset 8");
  uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h |= uint64_t(len[i]) << (8 * i);
  std::string text(h, '\0');
  if (!in.read(text.data(), std::streamsize(h)))
    throw FormatError(path + ": truncated JSON header at byte offset 16");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed JSON header: " + e.what());
  }
  try {
    if (header.at("format_version").get<int>() != 1)
      throw FormatError(path + ": unsupported checkpoint version");

    NetworkConfig cfg;
    const auto& jc = header.at("config");
    cfg.timesteps = jc.at("timesteps").get<int>();
    cfg.time_constant = jc.at("time_constant").get<double>();
    cfg.threshold = jc.at("threshold").get<double>();
    cfg.readout = readout_from(jc.at("readout").get<std::string>());
    cfg.surrogate_scale = jc.at("surrogate_scale").get<double>();
    cfg.spike_mode = spike_mode_from(jc.at("spike_mode").get<std::string>());

    std::vector<size_t> input_shape = header.at("input_shape").get<std::vector<size_t>>();
    std::vector<LayerSpec> layers;
    for (const auto& jl : header.at("layers")) {
      LayerSpec spec;
      spec.kind = kind_from(jl.at("kind").get<std::string>());
      spec.lif = jl.at("lif").get<bool>();
      spec.out = jl.at("out").get<size_t>();
      spec.out_channels = jl.at("out_channels").get<size_t>();
      spec.kernel = jl.at("kernel").get<size_t>();
      spec.stride = jl.at("stride").get<size_t>();
      spec.padding = jl.at("padding").get<size_t>();
      layers.push_back(spec);
    }

    SpikingNetwork net = SpikingNetwork::build(layers, cfg, input_shape, /*init_seed=*/0);
    const auto& jsegs = header.at("segments");
    if (jsegs.size() != net.params().segment_count())
      throw FormatError(path + ": segment count disagrees with topology");
    for (size_t s = 0; s < net.params().segment_count(); ++s) {
      ParamSegment& seg = net.params().segment(s);
      auto shape = jsegs[s].at("shape").get<std::vector<size_t>>();
      if (shape != seg.value.shape())
        throw FormatError(path + ": segment " + std::to_string(s) +
                          " shape disagrees with topology");
      if (!in.read(reinterpret_cast<char*>(seg.value.data()),
                   std::streamsize(seg.value.size() * sizeof(double))))
        throw FormatError(path + ": truncated parameter data in segment " +
                          std::to_string(s));
    }
    char extra;
    if (in.read(&extra, 1)) throw FormatError(path + ": trailing bytes after parameters");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": bad checkpoint header: " + e.what());
  }
}

}  // namespace snnkit
