#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "snnkit/checkpoint.hpp"
#include "snnkit/error.hpp"

using namespace snnkit;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const char* name) : path(std::string("snnkit_ckpt_") + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

SpikingNetwork sample_net() {
  NetworkConfig cfg;
  cfg.timesteps = 5;
  cfg.time_constant = 3.0;
  cfg.threshold = 0.9;
  cfg.readout = ReadoutMode::kSpikeCount;
  cfg.surrogate_scale = 2.0;
  cfg.spike_mode = SpikeMode::kSmooth;

  std::vector<LayerSpec> layers(3);
  layers[0].kind = SynapseKind::kConv2d;
  layers[0].out_channels = 2;
  layers[0].kernel = 3;
  layers[0].padding = 1;
  layers[1].out = 4;
  layers[2].out = 3;
  layers[2].lif = false;
  return SpikingNetwork::build(layers, cfg, {1, 6, 6}, 77, 1.3);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

}  // namespace

TEST_CASE("checkpoints round-trip bitwise") {
  SpikingNetwork net = sample_net();
  TempFile f("roundtrip.bin");
  save_checkpoint(net, f.path);
  SpikingNetwork back = load_checkpoint(f.path);

  CHECK(back.params().flatten() == net.params().flatten());
  CHECK(back.fingerprint() == net.fingerprint());
  CHECK(back.input_shape() == net.input_shape());

  const NetworkConfig& a = net.config();
  const NetworkConfig& b = back.config();
  CHECK(a.timesteps == b.timesteps);
  CHECK(a.time_constant == b.time_constant);
  CHECK(a.threshold == b.threshold);
  CHECK(a.readout == b.readout);
  CHECK(a.surrogate_scale == b.surrogate_scale);
  CHECK(a.spike_mode == b.spike_mode);

  REQUIRE(back.layers().size() == 3);
  for (size_t l = 0; l < 3; ++l) {
    CHECK(back.layers()[l].kind == net.layers()[l].kind);
    CHECK(back.layers()[l].lif == net.layers()[l].lif);
    CHECK(back.layers()[l].out == net.layers()[l].out);
    CHECK(back.layers()[l].out_channels == net.layers()[l].out_channels);
    CHECK(back.layers()[l].kernel == net.layers()[l].kernel);
    CHECK(back.layers()[l].stride == net.layers()[l].stride);
    CHECK(back.layers()[l].padding == net.layers()[l].padding);
  }

  // save(load(save(net))) is byte-identical
  TempFile g("resave.bin");
  save_checkpoint(back, g.path);
  CHECK(slurp(f.path) == slurp(g.path));
}

TEST_CASE("loader rejects corrupted checkpoints") {
  SpikingNetwork net = sample_net();
  TempFile f("corrupt.bin");
  save_checkpoint(net, f.path);
  std::string bytes = slurp(f.path);
  TempFile g("mutated.bin");

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint("no_such_checkpoint.bin"), FormatError);
  }

  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    spit(g.path, bad);
    CHECK_THROWS_AS(load_checkpoint(g.path), FormatError);
  }

  SUBCASE("truncated header length") {
    spit(g.path, bytes.substr(0, 12));
    CHECK_THROWS_AS(load_checkpoint(g.path), FormatError);
  }

  SUBCASE("truncated JSON header") {
    spit(g.path, bytes.substr(0, 20));
    CHECK_THROWS_AS(load_checkpoint(g.path), FormatError);
  }

  SUBCASE("truncated parameter data") {
    spit(g.path, bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(load_checkpoint(g.path), FormatError);
  }

  SUBCASE("trailing bytes") {
    spit(g.path, bytes + "x");
    CHECK_THROWS_AS(load_checkpoint(g.path), FormatError);
  }

  SUBCASE("unsupported version") {
    std::string bad = bytes;
    size_t pos = bad.find("\"format_version\":1");
    REQUIRE(pos != std::string::npos);
    bad[pos + 17] = '2';  // same byte count, header length stays valid
    spit(g.path, bad);
    CHECK_THROWS_AS(load_checkpoint(g.path), FormatError);
  }

  SUBCASE("malformed JSON header") {
    std::string bad = bytes;
    bad[16] = '?';  // first header byte, breaks the opening brace
    spit(g.path, bad);
    CHECK_THROWS_AS(load_checkpoint(g.path), FormatError);
  }
}
