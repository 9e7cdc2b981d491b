#include <algorithm>
#include <functional>
#include <utility>

#include "snnkit/error.hpp"
#include "snnkit/harness.hpp"
#include "snnkit/rng.hpp"

namespace snnkit {

TrainRun run_training(const ExperimentConfig& cfg, uint64_t seed, bool record_ic) {
  TrainRun run;
  run.data = dataset_from_config(cfg, seed);
  SpikingNetwork net = network_from_config(cfg, run.data, seed);

  TrainOptions opts;
  opts.epochs = cfg.optimizer.epochs;
  opts.optimizer = cfg.optimizer.sgd;
  opts.loss = cfg.loss;
  opts.seed = seed;

  if (record_ic) {
    size_t n = std::min(cfg.fisher.subset, run.data.test_size());
    if (n == 0) throw DomainError("run_training: empty fisher subset");
    FisherOptions fopts;
    fopts.estimator = cfg.fisher.estimator;
    fopts.mc_draws = cfg.fisher.mc_draws;
    fopts.seed = derive_seed(seed, "fisher-mc");
    IcRecorder recorder(run.data.test_images.row_slice(0, n), cfg.fisher.epoch_stride,
                        fopts);
    opts.epoch_hook = std::ref(recorder);
    TrainResult result = train(net, run.data, opts);
    run.net = std::move(result.net);
    run.report = std::move(result.report);
    run.ic_series = recorder.series();
  } else {
    TrainResult result = train(net, run.data, opts);
    run.net = std::move(result.net);
    run.report = std::move(result.report);
  }
  return run;
}

SweepAxis sweep_axis_from(const std::string& name) {
  if (name == "timestep") return SweepAxis::kTimestep;
  if (name == "time_constant") return SweepAxis::kTimeConstant;
  if (name == "weight_decay") return SweepAxis::kWeightDecay;
  if (name == "learning_rate") return SweepAxis::kLearningRate;
  if (name == "dataset") return SweepAxis::kDataset;
  if (name == "architecture") return SweepAxis::kArchitecture;
  throw DomainError("unknown sweep axis '" + name + "'");
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kTimestep: return "timestep";
    case SweepAxis::kTimeConstant: return "time_constant";
    case SweepAxis::kWeightDecay: return "weight_decay";
    case SweepAxis::kLearningRate: return "learning_rate";
    case SweepAxis::kDataset: return "dataset";
    case SweepAxis::kArchitecture: return "architecture";
  }
  return "?";
}

namespace {

const char* sweep_axis_path(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kTimestep: return "network.timesteps";
    case SweepAxis::kTimeConstant: return "network.time_constant";
    case SweepAxis::kWeightDecay: return "optimizer.weight_decay";
    case SweepAxis::kLearningRate: return "optimizer.lr";
    case SweepAxis::kDataset: return "dataset.pattern";
    case SweepAxis::kArchitecture: return "network.hidden";
  }
  return "?";
}

}  // namespace

std::vector<AblationCell> run_ablation_grid(const ExperimentConfig& base, SweepAxis axis,
                                            const std::vector<std::string>& values,
                                            uint64_t seed) {
  if (values.empty()) throw DomainError("run_ablation_grid: empty value list");
  std::vector<AblationCell> cells;
  for (const std::string& value : values) {
    AblationCell cell;
    cell.value = value;
    try {
      nlohmann::json j = config_to_json(base);
      std::string text = value;
      // a bare width for the architecture axis means one hidden layer
      if (axis == SweepAxis::kArchitecture && !text.empty() && text[0] != '[')
        text = "[" + text + "]";
      apply_override(j, std::string(sweep_axis_path(axis)) + "=" + text);
      ExperimentConfig cfg = parse_config(j);
      TrainRun run = run_training(cfg, seed, /*record_ic=*/true);
      cell.series = std::move(run.ic_series);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

CapacityResult run_capacity_study(const ExperimentConfig& base, size_t small_hidden,
                                  size_t large_hidden, const std::vector<int>& timesteps,
                                  uint64_t seed) {
  if (timesteps.empty()) throw DomainError("run_capacity_study: empty timestep list");
  for (int t : timesteps)
    if (t < 1) throw DomainError("run_capacity_study: timesteps must be >= 1");

  Dataset data = dataset_from_config(base, seed);

  auto build_at = [&](size_t hidden, int t) {
    ExperimentConfig cfg = base;
    cfg.network.hidden = {hidden};
    cfg.network.width_multiplier = 1.0;
    cfg.network.dynamics.timesteps = t;
    return std::make_pair(cfg, network_from_config(cfg, data, seed));
  };

  size_t small_params = build_at(small_hidden, timesteps[0]).second.params().total_size();
  size_t large_params = build_at(large_hidden, timesteps[0]).second.params().total_size();
  if (small_params > large_params)
    throw DomainError("run_capacity_study: small net has more parameters than large net");

  CapacityResult result;
  auto run_net = [&](const char* id, size_t hidden, size_t param_count) {
    std::vector<std::pair<int, double>> acc;
    for (int t : timesteps) {
      auto [cfg, net] = build_at(hidden, t);
      TrainOptions opts;
      opts.epochs = cfg.optimizer.epochs;
      opts.optimizer = cfg.optimizer.sgd;
      opts.loss = cfg.loss;
      opts.seed = seed;
      TrainResult trained = train(net, data, opts);
      double a = trained.report.epochs.empty() ? 0.0
                                               : trained.report.epochs.back().test_accuracy;
      acc.push_back({t, a});
      result.rows.push_back({id, param_count, t, a});
    }
    std::sort(acc.begin(), acc.end());
    double best = 0.0;
    for (auto& [t, a] : acc) best = std::max(best, a);
    for (auto& [t, a] : acc)
      if (a >= best - 0.01) return t;  // within 1 accuracy point of this net's best
    return acc.back().first;
  };

  result.small_saturation = run_net("small", small_hidden, small_params);
  result.large_saturation = run_net("large", large_hidden, large_params);
  return result;
}

}  // namespace snnkit
