// snnkit command-line driver. Every subcommand resolves a JSON config
// (defaults <- --config file <- --override flags), runs, and writes CSVs plus
// a manifest JSON into --out. Exit codes: 0 ok, 1 usage error, 2 runtime
// failure.
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snnkit/checkpoint.hpp"
#include "snnkit/error.hpp"
#include "snnkit/harness.hpp"
#include "snnkit/rng.hpp"

namespace fs = std::filesystem;
using namespace snnkit;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--override", args.overrides, "dot-path override key=value (repeatable)");
  cmd->add_option("--seed", args.seed, "run a single seed instead of the config's list")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out, "output directory (default: config out_dir)");
}

// Throws FormatError (reported as usage errors) on bad config input.
ExperimentConfig resolve_config(const CommonArgs& args) {
  nlohmann::json j;
  if (args.config_path.empty()) {
    j = config_to_json(ExperimentConfig{});
  } else {
    std::ifstream in(args.config_path);
    if (!in) throw FormatError("cannot open config " + args.config_path);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(args.config_path + ": malformed JSON: " + e.what());
    }
  }
  for (const std::string& o : args.overrides) apply_override(j, o);
  ExperimentConfig cfg = parse_config(j);
  if (args.seed_set) cfg.seeds = {args.seed};
  if (!args.out.empty()) cfg.out_dir = args.out;
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum((unsigned char)c) || c == '.' || c == '-') ? c : '_';
  return out;
}

class WallClock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void emit_ic_series(CsvWriter& csv, const std::vector<IcSeriesEntry>& series,
                    const std::vector<std::string>& prefix) {
  for (const IcSeriesEntry& entry : series) {
    for (size_t t = 0; t < entry.profile.traces.size(); ++t) {
      std::vector<std::string> cells = prefix;
      cells.push_back(std::to_string(entry.epoch));
      cells.push_back(std::to_string(t + 1));
      cells.push_back(csv_num(entry.profile.traces[t]));
      cells.push_back(csv_num(entry.profile.centroid_defined ? entry.profile.centroid : -1.0));
      csv.row(cells);
    }
  }
}

int cmd_train(const ExperimentConfig& cfg) {
  WallClock clock;
  RunManifest manifest;
  manifest.command = "train";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = cfg.seeds;
  nlohmann::json final_acc = nlohmann::json::object();
  for (uint64_t seed : cfg.seeds) {
    TrainRun run = run_training(cfg, seed, /*record_ic=*/true);
    std::string tag = "seed" + std::to_string(seed);

    CsvWriter log(out_path(cfg, "train_" + tag + ".csv"),
                  {"seed", "epoch", "train_loss", "test_accuracy", "seconds"});
    for (const EpochStats& e : run.report.epochs)
      log.row({std::to_string(seed), std::to_string(e.epoch), csv_num(e.train_loss),
               csv_num(e.test_accuracy), csv_num(e.seconds)});
    manifest.outputs.push_back(log.path());

    CsvWriter ic(out_path(cfg, "ic_" + tag + ".csv"), {"epoch", "t", "I_t", "IC"});
    emit_ic_series(ic, run.ic_series, {});
    manifest.outputs.push_back(ic.path());

    std::string ckpt = out_path(cfg, "model_" + tag + ".ckpt");
    save_checkpoint(run.net, ckpt);
    manifest.outputs.push_back(ckpt);

    final_acc[tag] =
        run.report.epochs.empty() ? 0.0 : run.report.epochs.back().test_accuracy;
  }
  manifest.extra = {{"final_test_accuracy", final_acc}};
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

int cmd_fisher(const ExperimentConfig& cfg, const std::string& checkpoint) {
  WallClock clock;
  RunManifest manifest;
  manifest.command = "fisher";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = cfg.seeds;
  for (uint64_t seed : cfg.seeds) {
    std::string tag = "seed" + std::to_string(seed);
    Dataset data = dataset_from_config(cfg, seed);
    SpikingNetwork net;
    if (!checkpoint.empty()) {
      net = load_checkpoint(checkpoint);
    } else {
      TrainRun run = run_training(cfg, seed, /*record_ic=*/false);
      net = std::move(run.net);
      data = std::move(run.data);
    }
    size_t n = std::min(cfg.fisher.subset, data.test_size());
    Tensor subset = data.test_images.row_slice(0, n);
    FisherOptions fopts;
    fopts.estimator = cfg.fisher.estimator;
    fopts.mc_draws = cfg.fisher.mc_draws;
    fopts.seed = derive_seed(seed, "fisher-mc");

    FisherProfile profile = fisher_profile(net, subset, fopts);
    CsvWriter csv(out_path(cfg, "fisher_" + tag + ".csv"), {"t", "I_t", "IC"});
    for (size_t t = 0; t < profile.traces.size(); ++t)
      csv.row({std::to_string(t + 1), csv_num(profile.traces[t]),
               csv_num(profile.centroid_defined ? profile.centroid : -1.0)});
    manifest.outputs.push_back(csv.path());

    LayerFisherMap layers = layerwise_fisher(net, subset, fopts, /*normalize=*/false);
    CsvWriter lcsv(out_path(cfg, "layers_" + tag + ".csv"), {"layer", "t", "fisher"});
    for (size_t l = 0; l < layers.values.size(); ++l)
      for (size_t t = 0; t < layers.values[l].size(); ++t)
        lcsv.row({std::to_string(l), std::to_string(t + 1), csv_num(layers.values[l][t])});
    manifest.outputs.push_back(lcsv.path());
  }
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

int cmd_ablate(const ExperimentConfig& cfg, const std::string& axis_name,
               const std::vector<std::string>& values) {
  WallClock clock;
  SweepAxis axis = sweep_axis_from(axis_name);
  uint64_t seed = cfg.seeds.front();
  std::vector<AblationCell> cells = run_ablation_grid(cfg, axis, values, seed);

  RunManifest manifest;
  manifest.command = "ablate";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = {seed};
  nlohmann::json failures = nlohmann::json::array();

  CsvWriter merged(out_path(cfg, "ablate_" + sanitize(axis_name) + ".csv"),
                   {"axis", "value", "epoch", "t", "I_t", "IC"});
  for (const AblationCell& cell : cells) {
    if (cell.failed) {
      failures.push_back({{"value", cell.value}, {"error", cell.error}});
      continue;
    }
    CsvWriter per(out_path(cfg, "ablate_" + sanitize(axis_name) + "_" +
                                    sanitize(cell.value) + ".csv"),
                  {"epoch", "t", "I_t", "IC"});
    emit_ic_series(per, cell.series, {});
    manifest.outputs.push_back(per.path());
    emit_ic_series(merged, cell.series, {axis_name, cell.value});
  }
  manifest.outputs.push_back(merged.path());
  manifest.extra = {{"failed_cells", failures}};
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

int cmd_robust(const ExperimentConfig& cfg) {
  WallClock clock;
  RunManifest manifest;
  manifest.command = "robust";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = cfg.seeds;

  CsvWriter csv(out_path(cfg, "robust.csv"),
                {"model", "dataset", "corruption", "params", "clean_acc", "corrupted_acc",
                 "drop"});
  for (uint64_t seed : cfg.seeds) {
    TrainRun run = run_training(cfg, seed, /*record_ic=*/false);
    std::string model = "seed" + std::to_string(seed);

    std::vector<CorruptionSpec> specs;
    CorruptionSpec none;
    none.kind = CorruptionSpec::Kind::kNone;
    specs.push_back(none);
    CorruptionSpec gauss;
    gauss.kind = CorruptionSpec::Kind::kGaussian;
    gauss.ratio = cfg.corruption.gaussian_ratio;
    gauss.seed = derive_seed(seed, "attack-noise");
    specs.push_back(gauss);
    CorruptionSpec blur;
    blur.kind = CorruptionSpec::Kind::kBlur;
    blur.blur_factor = cfg.corruption.blur_factor;
    specs.push_back(blur);
    CorruptionSpec fg;
    fg.kind = CorruptionSpec::Kind::kFgsm;
    fg.attack = cfg.attack;
    specs.push_back(fg);
    CorruptionSpec pg;
    pg.kind = CorruptionSpec::Kind::kPgd;
    pg.attack = cfg.attack;
    specs.push_back(pg);

    for (const CorruptionSpec& spec : specs) {
      RobustnessRow row =
          robust_accuracy(run.net, run.data.test_images, run.data.test_labels, spec);
      csv.row({model, run.data.provenance, row.corruption,
               row.params.empty() ? "-" : row.params, csv_num(row.clean_accuracy),
               csv_num(row.corrupted_accuracy), csv_num(row.drop)});
    }
  }
  manifest.outputs.push_back(csv.path());
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

int cmd_deficit(const ExperimentConfig& cfg) {
  WallClock clock;
  RunManifest manifest;
  manifest.command = "deficit";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = cfg.seeds;
  for (uint64_t seed : cfg.seeds) {
    TrainRun run = run_training(cfg, seed, /*record_ic=*/false);
    std::string tag = "seed" + std::to_string(seed);
    CsvWriter csv(out_path(cfg, "deficit_" + tag + ".csv"),
                  {"window_start", "acc", "rel_acc"});
    int timesteps = run.net.config().timesteps;
    for (int start = 1; start + cfg.deficit.length - 1 <= timesteps; ++start) {
      DeficitWindow window;
      window.start = start;
      window.length = cfg.deficit.length;
      window.noise_ratio = cfg.deficit.noise_ratio;
      DeficitResult r = windowed_deficit_eval(run.net, run.data.test_images,
                                              run.data.test_labels, window,
                                              derive_seed(seed, "attack-noise"));
      csv.row({std::to_string(start), csv_num(r.accuracy), csv_num(r.relative)});
    }
    manifest.outputs.push_back(csv.path());
  }
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

int cmd_prune(const ExperimentConfig& cfg) {
  WallClock clock;
  RunManifest manifest;
  manifest.command = "prune";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = cfg.seeds;
  nlohmann::json summary = nlohmann::json::object();
  for (uint64_t seed : cfg.seeds) {
    std::string tag = "seed" + std::to_string(seed);
    TrainRun run = run_training(cfg, seed, /*record_ic=*/false);
    int full_t = run.net.config().timesteps;

    WallClock profile_clock;
    int retrain_t = full_t;
    if (cfg.pruning.timestep_rule == "tic") {
      size_t n = std::min(cfg.fisher.subset, run.data.test_size());
      FisherOptions fopts;
      fopts.estimator = cfg.fisher.estimator;
      fopts.mc_draws = cfg.fisher.mc_draws;
      fopts.seed = derive_seed(seed, "fisher-mc");
      FisherProfile profile =
          fisher_profile(run.net, run.data.test_images.row_slice(0, n), fopts);
      retrain_t = tic_select_timestep(profile, cfg.pruning.kappa);
    } else if (cfg.pruning.timestep_rule == "fixed") {
      retrain_t = cfg.pruning.retrain_timesteps;
    }
    double profiling_seconds = profile_clock.seconds();

    PruningSchedule schedule;
    schedule.fraction = cfg.pruning.fraction;
    schedule.cycles = cfg.pruning.cycles;
    schedule.retrain_epochs = cfg.pruning.retrain_epochs;
    schedule.first_epochs = cfg.optimizer.epochs;
    schedule.retrain_timesteps = retrain_t;
    schedule.optimizer = cfg.optimizer.sgd;
    schedule.loss = cfg.loss;
    PruneRunResult result = iterative_prune(run.net, run.data, schedule, seed);

    CsvWriter csv(out_path(cfg, "prune_" + tag + ".csv"),
                  {"cycle", "sparsity", "T_retrain", "accuracy", "epochs_spent"});
    for (const PruneCycleStats& s : result.series)
      csv.row({std::to_string(s.cycle), csv_num(s.sparsity),
               std::to_string(s.retrain_timesteps), csv_num(s.accuracy),
               std::to_string(s.epochs_spent)});
    manifest.outputs.push_back(csv.path());

    std::string ckpt = out_path(cfg, "pruned_" + tag + ".ckpt");
    save_checkpoint(result.net, ckpt);
    manifest.outputs.push_back(ckpt);

    summary[tag] = {{"T_retrain", retrain_t},
                    {"efficiency_percent",
                     compute_efficiency(cfg.optimizer.epochs, cfg.pruning.retrain_epochs,
                                        cfg.pruning.cycles, full_t, retrain_t)},
                    {"profiling_seconds", profiling_seconds},
                    {"final_sparsity", result.mask.sparsity()}};
  }
  manifest.extra = summary;
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

int cmd_capacity(const ExperimentConfig& cfg, size_t small_hidden, size_t large_hidden,
                 const std::vector<int>& timesteps) {
  WallClock clock;
  CapacityResult result =
      run_capacity_study(cfg, small_hidden, large_hidden, timesteps, cfg.seeds.front());
  RunManifest manifest;
  manifest.command = "capacity";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = {cfg.seeds.front()};
  CsvWriter csv(out_path(cfg, "capacity.csv"), {"net", "params", "timesteps", "accuracy"});
  for (const CapacityRow& row : result.rows)
    csv.row({row.net_id, std::to_string(row.param_count), std::to_string(row.timesteps),
             csv_num(row.accuracy)});
  manifest.outputs.push_back(csv.path());
  manifest.extra = {{"small_saturation", result.small_saturation},
                    {"large_saturation", result.large_saturation}};
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

int cmd_dataset_gen(const ExperimentConfig& cfg) {
  WallClock clock;
  uint64_t seed = cfg.seeds.front();
  Dataset data = dataset_from_config(cfg, seed);
  RunManifest manifest;
  manifest.command = "dataset gen";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = {seed};

  size_t rows = data.image_shape[1], cols = data.image_shape[2];
  struct Item {
    const char* name;
    const Tensor* images;
    const std::vector<int>* labels;
  } items[] = {{"train", &data.train_images, &data.train_labels},
               {"test", &data.test_images, &data.test_labels}};
  for (const Item& item : items) {
    std::string ipath = out_path(cfg, std::string(item.name) + "-images-idx3-ubyte");
    std::string lpath = out_path(cfg, std::string(item.name) + "-labels-idx1-ubyte");
    write_idx_images(ipath, *item.images, rows, cols, data.norm_lo, data.norm_hi);
    write_idx_labels(lpath, *item.labels);
    manifest.outputs.push_back(ipath);
    manifest.outputs.push_back(lpath);
  }
  manifest.extra = {{"provenance", data.provenance},
                    {"train_size", data.train_size()},
                    {"test_size", data.test_size()}};
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

int cmd_dataset_inspect(const ExperimentConfig& cfg, const std::string& images,
                        const std::string& labels) {
  WallClock clock;
  LabeledImages li = load_idx(images, labels);
  std::vector<size_t> hist;
  for (int y : li.labels) {
    if (size_t(y) >= hist.size()) hist.resize(size_t(y) + 1, 0);
    hist[size_t(y)]++;
  }
  double lo = li.images[0], hi = li.images[0];
  for (size_t i = 0; i < li.images.size(); ++i) {
    lo = std::min(lo, li.images[i]);
    hi = std::max(hi, li.images[i]);
  }
  std::printf("images: %zu of %zux%zu, pixel range [%g, %g]\n", li.labels.size(), li.rows,
              li.cols, lo, hi);
  for (size_t c = 0; c < hist.size(); ++c)
    std::printf("label %zu: %zu samples\n", c, hist[c]);

  RunManifest manifest;
  manifest.command = "dataset inspect";
  manifest.resolved_config = config_to_json(cfg);
  manifest.seeds = cfg.seeds;
  manifest.extra = {{"images", images}, {"labels", labels}, {"count", li.labels.size()}};
  manifest.wall_seconds = clock.seconds();
  write_manifest(out_path(cfg, "manifest.json"), manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snnkit: LIF-network training, temporal Fisher analysis, robustness, "
               "and TIC-informed pruning"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string checkpoint, axis;
  std::vector<std::string> values;
  size_t small_hidden = 16, large_hidden = 64;
  std::vector<int> timesteps;
  std::string inspect_images, inspect_labels;

  CLI::App* train = app.add_subcommand("train", "train models, recording IC per epoch");
  add_common(train, args);

  CLI::App* fisher = app.add_subcommand("fisher", "per-timestep Fisher profile");
  add_common(fisher, args);
  fisher->add_option("--checkpoint", checkpoint, "profile this checkpoint instead of training");

  CLI::App* ablate = app.add_subcommand("ablate", "IC-vs-epoch sweep over one factor");
  add_common(ablate, args);
  ablate->add_option("--axis", axis,
                     "timestep|time_constant|weight_decay|learning_rate|dataset|architecture")
      ->required();
  ablate->add_option("--values", values, "axis values (repeatable)")->required();

  CLI::App* robust = app.add_subcommand("robust", "corruption/attack accuracy table");
  add_common(robust, args);

  CLI::App* deficit = app.add_subcommand("deficit", "time-windowed deficit sweep");
  add_common(deficit, args);

  CLI::App* prune = app.add_subcommand("prune", "iterative magnitude pruning");
  add_common(prune, args);

  CLI::App* capacity = app.add_subcommand("capacity", "capacity vs timestep study");
  add_common(capacity, args);
  capacity->add_option("--small", small_hidden, "small net hidden width");
  capacity->add_option("--large", large_hidden, "large net hidden width");
  capacity->add_option("--timesteps", timesteps, "timestep values (repeatable)")->required();

  CLI::App* dataset = app.add_subcommand("dataset", "dataset utilities");
  dataset->require_subcommand(1);
  CLI::App* gen = dataset->add_subcommand("gen", "synthesize blobs and write IDX files");
  add_common(gen, args);
  CLI::App* inspect = dataset->add_subcommand("inspect", "summarize an IDX pair");
  add_common(inspect, args);
  inspect->add_option("--images", inspect_images, "IDX image file")->required();
  inspect->add_option("--labels", inspect_labels, "IDX label file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve_config(args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  try {
    if (*train) return cmd_train(cfg);
    if (*fisher) return cmd_fisher(cfg, checkpoint);
    if (*ablate) return cmd_ablate(cfg, axis, values);
    if (*robust) return cmd_robust(cfg);
    if (*deficit) return cmd_deficit(cfg);
    if (*prune) return cmd_prune(cfg);
    if (*capacity) return cmd_capacity(cfg, small_hidden, large_hidden, timesteps);
    if (*gen) return cmd_dataset_gen(cfg);
    if (*inspect) return cmd_dataset_inspect(cfg, inspect_images, inspect_labels);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
