#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "snnkit/dataset.hpp"
#include "snnkit/fisher.hpp"
#include "snnkit/network.hpp"
#include "snnkit/pruning.hpp"
#include "snnkit/robustness.hpp"
#include "snnkit/stbp.hpp"

namespace snnkit {

extern const char* kVersion;

// Typed mirror of the JSON config schema (docs/config.md). parse_config
// rejects unknown keys anywhere in the tree.
struct DatasetConfig {
  std::string kind = "blobs";  // "blobs" | "idx"
  BlobSpec blobs;
  std::string train_images, train_labels, test_images, test_labels;  // idx only
  size_t idx_classes = 10;
  double norm_lo = 0.0, norm_hi = 1.0;
};

struct NetworkSectionConfig {
  std::vector<size_t> hidden = {64};
  double width_multiplier = 1.0;
  double init_scale = 1.0;
  NetworkConfig dynamics;  // timesteps, tau, threshold, readout, surrogate, spike mode
};

struct OptimizerSectionConfig {
  OptimizerConfig sgd;
  int epochs = 60;
};

struct FisherSectionConfig {
  FisherEstimator estimator = FisherEstimator::kExactExpectation;
  int mc_draws = 1;
  size_t subset = 256;   // evaluation samples taken from the test split
  int epoch_stride = 5;  // ic_vs_epoch recording stride
};

struct CorruptionSectionConfig {
  double gaussian_ratio = 0.5;
  size_t blur_factor = 2;
};

struct DeficitSectionConfig {
  int length = 3;
  double noise_ratio = 0.5;
};

struct PruningSectionConfig {
  double fraction = 0.5;
  int cycles = 5;
  int retrain_epochs = 10;
  std::string timestep_rule = "full";  // "full" | "tic" | "fixed"
  int retrain_timesteps = 1;           // fixed rule only
  double kappa = 0.05;                 // tic rule only
};

struct ExperimentConfig {
  DatasetConfig dataset;
  NetworkSectionConfig network;
  OptimizerSectionConfig optimizer;
  LossConfig loss;
  FisherSectionConfig fisher;
  AttackParams attack;
  CorruptionSectionConfig corruption;
  DeficitSectionConfig deficit;
  PruningSectionConfig pruning;
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string out_dir = "runs/out";
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);  // fully resolved
ExperimentConfig load_config_file(const std::string& path);

// "a.b.c=value"; value is parsed as JSON when possible, else kept as a string.
// Creates intermediate objects; unknown keys are caught later by parse_config.
void apply_override(nlohmann::json& j, const std::string& assignment);

Dataset dataset_from_config(const ExperimentConfig& cfg, uint64_t seed);
SpikingNetwork network_from_config(const ExperimentConfig& cfg, const Dataset& data,
                                   uint64_t seed);

// Double formatting for CSVs: shortest text that parses back bitwise (%.17g).
std::string csv_num(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  size_t columns_;
  std::ofstream out_;
};

struct RunManifest {
  std::string command;
  nlohmann::json resolved_config;
  std::vector<uint64_t> seeds;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
  nlohmann::json extra;  // command-specific summary values
};

void write_manifest(const std::string& path, const RunManifest& manifest);

// One full training run: dataset + net from the config, optional ic_vs_epoch
// recording on a fixed test subset.
struct TrainRun {
  Dataset data;
  SpikingNetwork net;
  TrainReport report;
  std::vector<IcSeriesEntry> ic_series;
};

TrainRun run_training(const ExperimentConfig& cfg, uint64_t seed, bool record_ic);

enum class SweepAxis {
  kTimestep,
  kTimeConstant,
  kWeightDecay,
  kLearningRate,
  kDataset,
  kArchitecture,
};

SweepAxis sweep_axis_from(const std::string& name);
const char* sweep_axis_name(SweepAxis axis);

struct AblationCell {
  std::string value;
  bool failed = false;
  std::string error;
  std::vector<IcSeriesEntry> series;
};

// Fig. 5 grid: one training run per axis value (same seed), ic_vs_epoch per
// cell. A failing cell is recorded and skipped.
std::vector<AblationCell> run_ablation_grid(const ExperimentConfig& base, SweepAxis axis,
                                            const std::vector<std::string>& values,
                                            uint64_t seed);

struct CapacityRow {
  std::string net_id;  // "small" | "large"
  size_t param_count = 0;
  int timesteps = 0;
  double accuracy = 0.0;
};

struct CapacityResult {
  std::vector<CapacityRow> rows;
  int small_saturation = 0;  // first T within 1 accuracy point of that net's best
  int large_saturation = 0;
};

// Appendix F analogue on the blob task. Requires parameter counts to be
// ordered: params(small hidden) <= params(large hidden).
CapacityResult run_capacity_study(const ExperimentConfig& base, size_t small_hidden,
                                  size_t large_hidden, const std::vector<int>& timesteps,
                                  uint64_t seed);

}  // namespace snnkit
