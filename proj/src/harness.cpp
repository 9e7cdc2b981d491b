#include "snnkit/harness.hpp"

#include <cmath>
#include <cstdio>
#include <initializer_list>

#include "snnkit/error.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

const char* kVersion = "0.1.0";

namespace {

void check_keys(const nlohmann::json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw FormatError("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw FormatError("config: unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string get_enum(const nlohmann::json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<std::string>();
}

ReadoutMode readout_from(const std::string& s) {
  if (s == "accumulate_current") return ReadoutMode::kAccumulateCurrent;
  if (s == "spike_count") return ReadoutMode::kSpikeCount;
  throw FormatError("config: unknown readout '" + s + "'");
}

SpikeMode spike_mode_from(const std::string& s) {
  if (s == "hard") return SpikeMode::kHard;
  if (s == "smooth") return SpikeMode::kSmooth;
  throw FormatError("config: unknown spike_mode '" + s + "'");
}

BlobSpec::Pattern pattern_from(const std::string& s) {
  if (s == "blob") return BlobSpec::Pattern::kBlob;
  if (s == "stripe") return BlobSpec::Pattern::kStripe;
  throw FormatError("config: unknown dataset pattern '" + s + "'");
}

LossMode loss_mode_from(const std::string& s) {
  if (s == "standard") return LossMode::kStandard;
  if (s == "alpha") return LossMode::kAlphaTarget;
  throw FormatError("config: unknown loss mode '" + s + "'");
}

FisherEstimator estimator_from(const std::string& s) {
  if (s == "exact") return FisherEstimator::kExactExpectation;
  if (s == "mc") return FisherEstimator::kMonteCarlo;
  throw FormatError("config: unknown fisher estimator '" + s + "'");
}

AttackParams::Kind attack_kind_from(const std::string& s) {
  if (s == "fgsm") return AttackParams::Kind::kFgsm;
  if (s == "pgd") return AttackParams::Kind::kPgd;
  throw FormatError("config: unknown attack kind '" + s + "'");
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  check_keys(j, "top level",
             {"dataset", "network", "optimizer", "loss", "fisher", "attack", "corruption",
              "deficit", "pruning", "seeds", "out_dir"});
  ExperimentConfig cfg;

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d, "dataset",
               {"kind", "pattern", "classes", "train_samples", "test_samples", "height",
                "width", "sigma", "center_jitter", "noise", "amplitude", "background",
                "separation",
                "train_images", "train_labels", "test_images", "test_labels",
                "idx_classes", "norm_lo", "norm_hi"});
    maybe(d, "kind", cfg.dataset.kind);
    if (cfg.dataset.kind != "blobs" && cfg.dataset.kind != "idx")
      throw FormatError("config: dataset.kind must be 'blobs' or 'idx'");
    cfg.dataset.blobs.pattern = pattern_from(get_enum(d, "pattern", "blob"));
    maybe(d, "classes", cfg.dataset.blobs.classes);
    maybe(d, "train_samples", cfg.dataset.blobs.train_samples);
    maybe(d, "test_samples", cfg.dataset.blobs.test_samples);
    maybe(d, "height", cfg.dataset.blobs.height);
    maybe(d, "width", cfg.dataset.blobs.width);
    maybe(d, "sigma", cfg.dataset.blobs.sigma);
    maybe(d, "center_jitter", cfg.dataset.blobs.center_jitter);
    maybe(d, "noise", cfg.dataset.blobs.noise);
    maybe(d, "amplitude", cfg.dataset.blobs.amplitude);
    maybe(d, "background", cfg.dataset.blobs.background);
    maybe(d, "separation", cfg.dataset.blobs.separation);
    maybe(d, "train_images", cfg.dataset.train_images);
    maybe(d, "train_labels", cfg.dataset.train_labels);
    maybe(d, "test_images", cfg.dataset.test_images);
    maybe(d, "test_labels", cfg.dataset.test_labels);
    maybe(d, "idx_classes", cfg.dataset.idx_classes);
    maybe(d, "norm_lo", cfg.dataset.norm_lo);
    maybe(d, "norm_hi", cfg.dataset.norm_hi);
  }

  if (j.contains("network")) {
    const auto& n = j.at("network");
    check_keys(n, "network",
               {"hidden", "width_multiplier", "init_scale", "timesteps", "time_constant",
                "threshold", "readout", "surrogate_scale", "spike_mode"});
    maybe(n, "hidden", cfg.network.hidden);
    maybe(n, "width_multiplier", cfg.network.width_multiplier);
    maybe(n, "init_scale", cfg.network.init_scale);
    maybe(n, "timesteps", cfg.network.dynamics.timesteps);
    maybe(n, "time_constant", cfg.network.dynamics.time_constant);
    maybe(n, "threshold", cfg.network.dynamics.threshold);
    cfg.network.dynamics.readout = readout_from(get_enum(n, "readout", "accumulate_current"));
    maybe(n, "surrogate_scale", cfg.network.dynamics.surrogate_scale);
    cfg.network.dynamics.spike_mode = spike_mode_from(get_enum(n, "spike_mode", "hard"));
  }

  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    check_keys(o, "optimizer",
               {"lr", "weight_decay", "momentum", "grad_clip", "batch_size", "epochs",
                "lr_step_epochs", "lr_step_gamma"});
    maybe(o, "lr", cfg.optimizer.sgd.lr);
    maybe(o, "weight_decay", cfg.optimizer.sgd.weight_decay);
    maybe(o, "momentum", cfg.optimizer.sgd.momentum);
    maybe(o, "grad_clip", cfg.optimizer.sgd.grad_clip);
    maybe(o, "batch_size", cfg.optimizer.sgd.batch_size);
    maybe(o, "epochs", cfg.optimizer.epochs);
    maybe(o, "lr_step_epochs", cfg.optimizer.sgd.lr_step_epochs);
    maybe(o, "lr_step_gamma", cfg.optimizer.sgd.lr_step_gamma);
  }

  if (j.contains("loss")) {
    const auto& l = j.at("loss");
    check_keys(l, "loss", {"mode", "alpha"});
    cfg.loss.mode = loss_mode_from(get_enum(l, "mode", "standard"));
    maybe(l, "alpha", cfg.loss.alpha);
    cfg.loss.validate();
  }

  if (j.contains("fisher")) {
    const auto& f = j.at("fisher");
    check_keys(f, "fisher", {"estimator", "mc_draws", "subset", "epoch_stride"});
    cfg.fisher.estimator = estimator_from(get_enum(f, "estimator", "exact"));
    maybe(f, "mc_draws", cfg.fisher.mc_draws);
    maybe(f, "subset", cfg.fisher.subset);
    maybe(f, "epoch_stride", cfg.fisher.epoch_stride);
  }

  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    check_keys(a, "attack",
               {"kind", "epsilon", "step_size", "iterations", "clamp_lo", "clamp_hi"});
    cfg.attack.kind = attack_kind_from(get_enum(a, "kind", "pgd"));
    maybe(a, "epsilon", cfg.attack.epsilon);
    maybe(a, "step_size", cfg.attack.step_size);
    maybe(a, "iterations", cfg.attack.iterations);
    maybe(a, "clamp_lo", cfg.attack.clamp_lo);
    maybe(a, "clamp_hi", cfg.attack.clamp_hi);
  }

  if (j.contains("corruption")) {
    const auto& c = j.at("corruption");
    check_keys(c, "corruption", {"gaussian_ratio", "blur_factor"});
    maybe(c, "gaussian_ratio", cfg.corruption.gaussian_ratio);
    maybe(c, "blur_factor", cfg.corruption.blur_factor);
  }

  if (j.contains("deficit")) {
    const auto& d = j.at("deficit");
    check_keys(d, "deficit", {"length", "noise_ratio"});
    maybe(d, "length", cfg.deficit.length);
    maybe(d, "noise_ratio", cfg.deficit.noise_ratio);
  }

  if (j.contains("pruning")) {
    const auto& p = j.at("pruning");
    check_keys(p, "pruning",
               {"fraction", "cycles", "retrain_epochs", "timestep_rule",
                "retrain_timesteps", "kappa"});
    maybe(p, "fraction", cfg.pruning.fraction);
    maybe(p, "cycles", cfg.pruning.cycles);
    maybe(p, "retrain_epochs", cfg.pruning.retrain_epochs);
    maybe(p, "timestep_rule", cfg.pruning.timestep_rule);
    maybe(p, "retrain_timesteps", cfg.pruning.retrain_timesteps);
    maybe(p, "kappa", cfg.pruning.kappa);
    if (cfg.pruning.timestep_rule != "full" && cfg.pruning.timestep_rule != "tic" &&
        cfg.pruning.timestep_rule != "fixed")
      throw FormatError("config: pruning.timestep_rule must be full, tic, or fixed");
  }

  maybe(j, "seeds", cfg.seeds);
  if (cfg.seeds.empty()) throw FormatError("config: seeds must be non-empty");
  maybe(j, "out_dir", cfg.out_dir);
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  const BlobSpec& b = cfg.dataset.blobs;
  j["dataset"] = {{"kind", cfg.dataset.kind},
                  {"pattern", b.pattern == BlobSpec::Pattern::kBlob ? "blob" : "stripe"},
                  {"classes", b.classes},
                  {"train_samples", b.train_samples},
                  {"test_samples", b.test_samples},
                  {"height", b.height},
                  {"width", b.width},
                  {"sigma", b.sigma},
                  {"center_jitter", b.center_jitter},
                  {"noise", b.noise},
                  {"amplitude", b.amplitude},
                  {"background", b.background},
                  {"separation", b.separation},
                  {"train_images", cfg.dataset.train_images},
                  {"train_labels", cfg.dataset.train_labels},
                  {"test_images", cfg.dataset.test_images},
                  {"test_labels", cfg.dataset.test_labels},
                  {"idx_classes", cfg.dataset.idx_classes},
                  {"norm_lo", cfg.dataset.norm_lo},
                  {"norm_hi", cfg.dataset.norm_hi}};
  const NetworkConfig& d = cfg.network.dynamics;
  j["network"] = {{"hidden", cfg.network.hidden},
                  {"width_multiplier", cfg.network.width_multiplier},
                  {"init_scale", cfg.network.init_scale},
                  {"timesteps", d.timesteps},
                  {"time_constant", d.time_constant},
                  {"threshold", d.threshold},
                  {"readout", d.readout == ReadoutMode::kAccumulateCurrent
                                  ? "accumulate_current"
                                  : "spike_count"},
                  {"surrogate_scale", d.surrogate_scale},
                  {"spike_mode", d.spike_mode == SpikeMode::kHard ? "hard" : "smooth"}};
  const OptimizerConfig& o = cfg.optimizer.sgd;
  j["optimizer"] = {{"lr", o.lr},
                    {"weight_decay", o.weight_decay},
                    {"momentum", o.momentum},
                    {"grad_clip", o.grad_clip},
                    {"batch_size", o.batch_size},
                    {"epochs", cfg.optimizer.epochs},
                    {"lr_step_epochs", o.lr_step_epochs},
                    {"lr_step_gamma", o.lr_step_gamma}};
  j["loss"] = {{"mode", cfg.loss.mode == LossMode::kStandard ? "standard" : "alpha"},
               {"alpha", cfg.loss.alpha}};
  j["fisher"] = {{"estimator", cfg.fisher.estimator == FisherEstimator::kExactExpectation
                                   ? "exact"
                                   : "mc"},
                 {"mc_draws", cfg.fisher.mc_draws},
                 {"subset", cfg.fisher.subset},
                 {"epoch_stride", cfg.fisher.epoch_stride}};
  j["attack"] = {{"kind", cfg.attack.kind == AttackParams::Kind::kFgsm ? "fgsm" : "pgd"},
                 {"epsilon", cfg.attack.epsilon},
                 {"step_size", cfg.attack.step_size},
                 {"iterations", cfg.attack.iterations},
                 {"clamp_lo", cfg.attack.clamp_lo},
                 {"clamp_hi", cfg.attack.clamp_hi}};
  j["corruption"] = {{"gaussian_ratio", cfg.corruption.gaussian_ratio},
                     {"blur_factor", cfg.corruption.blur_factor}};
  j["deficit"] = {{"length", cfg.deficit.length}, {"noise_ratio", cfg.deficit.noise_ratio}};
  j["pruning"] = {{"fraction", cfg.pruning.fraction},
                  {"cycles", cfg.pruning.cycles},
                  {"retrain_epochs", cfg.pruning.retrain_epochs},
                  {"timestep_rule", cfg.pruning.timestep_rule},
                  {"retrain_timesteps", cfg.pruning.retrain_timesteps},
                  {"kappa", cfg.pruning.kappa}};
  j["seeds"] = cfg.seeds;
  j["out_dir"] = cfg.out_dir;
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": malformed JSON: " + e.what());
  }
  return parse_config(j);
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw DomainError("override must look like key.path=value: " + assignment);
  std::string path = assignment.substr(0, eq);
  std::string text = assignment.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;  // unquoted strings stay strings
  }

  nlohmann::json* cur = &j;
  size_t pos = 0;
  while (true) {
    size_t dot = path.find('.', pos);
    std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (key.empty()) throw DomainError("override has an empty path segment: " + assignment);
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    cur = &(*cur)[key];
    pos = dot + 1;
  }
}

Dataset dataset_from_config(const ExperimentConfig& cfg, uint64_t seed) {
  if (cfg.dataset.kind == "blobs") return synth_blobs(cfg.dataset.blobs, seed);
  LabeledImages train = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels,
                                 cfg.dataset.norm_lo, cfg.dataset.norm_hi);
  LabeledImages test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels,
                                cfg.dataset.norm_lo, cfg.dataset.norm_hi);
  return make_dataset(std::move(train), std::move(test), cfg.dataset.idx_classes,
                      cfg.dataset.norm_lo, cfg.dataset.norm_hi);
}

SpikingNetwork network_from_config(const ExperimentConfig& cfg, const Dataset& data,
                                   uint64_t seed) {
  if (cfg.network.hidden.empty())
    throw DomainError("network: need at least one hidden layer");
  if (!(cfg.network.width_multiplier > 0.0))
    throw DomainError("network: width_multiplier must be positive");
  std::vector<LayerSpec> layers;
  for (size_t h : cfg.network.hidden) {
    LayerSpec spec;
    spec.kind = SynapseKind::kAffine;
    spec.lif = true;
    spec.out = std::max<size_t>(
        1, size_t(std::llround(double(h) * cfg.network.width_multiplier)));
    layers.push_back(spec);
  }
  LayerSpec readout;
  readout.kind = SynapseKind::kAffine;
  readout.lif = false;
  readout.out = data.classes;
  layers.push_back(readout);
  return SpikingNetwork::build(layers, cfg.network.dynamics, data.image_shape,
                               derive_seed(seed, "init"), cfg.network.init_scale);
}

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()), out_(path, std::ios::binary) {
  if (!out_) throw FormatError("cannot open " + path + " for writing");
  if (header.empty()) throw DomainError("csv: empty header");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw StateError("csv " + path_ + ": expected " + std::to_string(columns_) +
                     " columns, got " + std::to_string(cells.size()));
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\n\"") != std::string::npos)
      throw StateError("csv " + path_ + ": cell contains a delimiter: " + cells[i]);
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  out_ << line;
  if (!out_) throw FormatError("short write to " + path_);
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["version"] = kVersion;
  j["config"] = manifest.resolved_config;
  j["seeds"] = manifest.seeds;
  j["wall_seconds"] = manifest.wall_seconds;
  j["outputs"] = manifest.outputs;
  j["summary"] = manifest.extra.is_null() ? nlohmann::json::object() : manifest.extra;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw FormatError("short write to " + path);
}

}  // namespace snnkit
