// pybind11 surface over the C++ core. Thin by design: numpy in, numpy out,
// no python-side numerics. See python/snnkit/__init__.py for the package.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/numpy.h>

#include "snnkit/checkpoint.hpp"
#include "snnkit/dataset.hpp"
#include "snnkit/error.hpp"
#include "snnkit/fisher.hpp"
#include "snnkit/harness.hpp"
#include "snnkit/network.hpp"
#include "snnkit/pruning.hpp"
#include "snnkit/robustness.hpp"
#include "snnkit/stbp.hpp"

namespace py = pybind11;
using namespace snnkit;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from(const DoubleArray& arr) {
  std::vector<size_t> shape(size_t(arr.ndim()));
  for (py::ssize_t i = 0; i < arr.ndim(); ++i) shape[size_t(i)] = size_t(arr.shape(i));
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

ReadoutMode readout_from(const std::string& name) {
  if (name == "accumulate") return ReadoutMode::kAccumulateCurrent;
  if (name == "spike_count") return ReadoutMode::kSpikeCount;
  throw DomainError("readout must be 'accumulate' or 'spike_count', got '" + name + "'");
}

SpikeMode spike_mode_from(const std::string& name) {
  if (name == "hard") return SpikeMode::kHard;
  if (name == "smooth") return SpikeMode::kSmooth;
  throw DomainError("spike_mode must be 'hard' or 'smooth', got '" + name + "'");
}

LossConfig loss_from(const std::string& name, double alpha) {
  LossConfig loss;
  if (name == "standard") {
    loss.mode = LossMode::kStandard;
  } else if (name == "alpha") {
    loss.mode = LossMode::kAlphaTarget;
    loss.alpha = alpha;
  } else {
    throw DomainError("loss must be 'standard' or 'alpha', got '" + name + "'");
  }
  return loss;
}

FisherOptions fisher_options_from(const std::string& estimator, int draws, uint64_t seed) {
  FisherOptions opts;
  if (estimator == "exact") {
    opts.estimator = FisherEstimator::kExactExpectation;
  } else if (estimator == "mc") {
    opts.estimator = FisherEstimator::kMonteCarlo;
  } else {
    throw DomainError("estimator must be 'exact' or 'mc', got '" + estimator + "'");
  }
  opts.mc_draws = draws;
  opts.seed = seed;
  return opts;
}

py::dict profile_dict(const FisherProfile& profile) {
  py::dict d;
  d["traces"] = profile.traces;
  d["centroid"] = profile.centroid_defined ? py::object(py::float_(profile.centroid))
                                           : py::object(py::none());
  d["num_samples"] = profile.num_samples;
  d["standard_error"] = profile.mc_standard_error;
  return d;
}

struct PyDataset {
  Dataset data;
};

struct PyModel {
  SpikingNetwork net;
};

PyModel build_model(const std::vector<size_t>& hidden, const std::vector<size_t>& input_shape,
                    size_t classes, int timesteps, double tau, double threshold,
                    const std::string& readout, double surrogate_scale,
                    const std::string& spike_mode, uint64_t seed, double init_scale) {
  NetworkConfig cfg;
  cfg.timesteps = timesteps;
  cfg.time_constant = tau;
  cfg.threshold = threshold;
  cfg.readout = readout_from(readout);
  cfg.surrogate_scale = surrogate_scale;
  cfg.spike_mode = spike_mode_from(spike_mode);
  std::vector<LayerSpec> layers;
  for (size_t width : hidden) {
    LayerSpec l;
    l.out = width;
    layers.push_back(l);
  }
  LayerSpec out;
  out.out = classes;
  out.lif = false;
  layers.push_back(out);
  return PyModel{SpikingNetwork::build(layers, cfg, input_shape, seed, init_scale)};
}

TrainOptions train_options_from(int epochs, double lr, double weight_decay, double momentum,
                                double grad_clip, size_t batch_size, int lr_step_epochs,
                                double lr_step_gamma, const std::string& loss, double alpha,
                                uint64_t seed) {
  TrainOptions opts;
  opts.epochs = epochs;
  opts.optimizer.lr = lr;
  opts.optimizer.weight_decay = weight_decay;
  opts.optimizer.momentum = momentum;
  opts.optimizer.grad_clip = grad_clip;
  opts.optimizer.batch_size = batch_size;
  opts.optimizer.lr_step_epochs = lr_step_epochs;
  opts.optimizer.lr_step_gamma = lr_step_gamma;
  opts.loss = loss_from(loss, alpha);
  opts.seed = seed;
  return opts;
}

py::list report_list(const TrainReport& report) {
  py::list out;
  for (const EpochStats& e : report.epochs) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["train_loss"] = e.train_loss;
    d["test_accuracy"] = e.test_accuracy;
    d["seconds"] = e.seconds;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "spiking-network toolkit core";
  m.attr("__version__") = kVersion;

  py::class_<PyDataset>(m, "Dataset")
      .def_property_readonly("train_images",
                             [](const PyDataset& d) { return array_from(d.data.train_images); })
      .def_property_readonly("test_images",
                             [](const PyDataset& d) { return array_from(d.data.test_images); })
      .def_property_readonly("train_labels",
                             [](const PyDataset& d) { return d.data.train_labels; })
      .def_property_readonly("test_labels",
                             [](const PyDataset& d) { return d.data.test_labels; })
      .def_property_readonly("classes", [](const PyDataset& d) { return d.data.classes; })
      .def_property_readonly("image_shape",
                             [](const PyDataset& d) { return d.data.image_shape; })
      .def_property_readonly("provenance",
                             [](const PyDataset& d) { return d.data.provenance; })
      .def("__repr__", [](const PyDataset& d) {
        return "<snnkit.Dataset " + std::to_string(d.data.train_size()) + "+" +
               std::to_string(d.data.test_size()) + " samples, " +
               std::to_string(d.data.classes) + " classes>";
      });

  m.def(
      "synth_blobs",
      [](size_t classes, size_t train_samples, size_t test_samples, size_t height,
         size_t width, const std::string& pattern, double sigma, double center_jitter,
         double noise, double amplitude, double background, double separation,
         uint64_t seed) {
        BlobSpec spec;
        spec.classes = classes;
        spec.train_samples = train_samples;
        spec.test_samples = test_samples;
        spec.height = height;
        spec.width = width;
        if (pattern == "blob") spec.pattern = BlobSpec::Pattern::kBlob;
        else if (pattern == "stripe") spec.pattern = BlobSpec::Pattern::kStripe;
        else throw DomainError("pattern must be 'blob' or 'stripe', got '" + pattern + "'");
        spec.sigma = sigma;
        spec.center_jitter = center_jitter;
        spec.noise = noise;
        spec.amplitude = amplitude;
        spec.background = background;
        spec.separation = separation;
        return PyDataset{synth_blobs(spec, seed)};
      },
      py::arg("classes") = 2, py::arg("train_samples") = 512, py::arg("test_samples") = 256,
      py::arg("height") = 16, py::arg("width") = 16, py::arg("pattern") = "blob",
      py::arg("sigma") = 2.5, py::arg("center_jitter") = 1.0, py::arg("noise") = 0.15,
      py::arg("amplitude") = 1.0, py::arg("background") = 0.0, py::arg("separation") = 0.55,
      py::arg("seed") = 1);

  m.def(
      "load_idx",
      [](const std::string& train_images, const std::string& train_labels,
         const std::string& test_images, const std::string& test_labels, size_t classes,
         double lo, double hi) {
        return PyDataset{make_dataset(load_idx(train_images, train_labels, lo, hi),
                                      load_idx(test_images, test_labels, lo, hi), classes, lo,
                                      hi)};
      },
      py::arg("train_images"), py::arg("train_labels"), py::arg("test_images"),
      py::arg("test_labels"), py::arg("classes"), py::arg("lo") = 0.0, py::arg("hi") = 1.0);

  py::class_<PyModel>(m, "Model")
      .def(py::init(&build_model), py::arg("hidden"), py::arg("input_shape"),
           py::arg("classes"), py::arg("timesteps") = 8, py::arg("tau") = 2.0,
           py::arg("threshold") = 1.0, py::arg("readout") = "accumulate",
           py::arg("surrogate_scale") = 1.0, py::arg("spike_mode") = "hard",
           py::arg("seed") = 1, py::arg("init_scale") = 1.0)
      .def_property_readonly("timesteps",
                             [](const PyModel& mdl) { return mdl.net.config().timesteps; })
      .def_property_readonly("classes", [](const PyModel& mdl) { return mdl.net.classes(); })
      .def_property_readonly("param_count",
                             [](const PyModel& mdl) { return mdl.net.params().total_size(); })
      .def(
          "fit",
          [](PyModel& mdl, const PyDataset& data, int epochs, double lr, double weight_decay,
             double momentum, double grad_clip, size_t batch_size, int lr_step_epochs,
             double lr_step_gamma, const std::string& loss, double alpha, uint64_t seed) {
            TrainOptions opts =
                train_options_from(epochs, lr, weight_decay, momentum, grad_clip, batch_size,
                                   lr_step_epochs, lr_step_gamma, loss, alpha, seed);
            TrainResult result = train(mdl.net, data.data, opts);
            mdl.net = std::move(result.net);
            return report_list(result.report);
          },
          py::arg("dataset"), py::arg("epochs") = 10, py::arg("lr") = 0.1,
          py::arg("weight_decay") = 0.0, py::arg("momentum") = 0.0,
          py::arg("grad_clip") = 0.0, py::arg("batch_size") = 64,
          py::arg("lr_step_epochs") = 0, py::arg("lr_step_gamma") = 0.1,
          py::arg("loss") = "standard", py::arg("alpha") = 0.0, py::arg("seed") = 0)
      .def(
          "accuracy",
          [](const PyModel& mdl, const DoubleArray& images, const std::vector<int>& labels) {
            return evaluate_accuracy(mdl.net, tensor_from(images), labels);
          },
          py::arg("images"), py::arg("labels"))
      .def(
          "fisher_profile",
          [](const PyModel& mdl, const DoubleArray& images, const std::string& estimator,
             int draws, uint64_t seed) {
            return profile_dict(fisher_profile(mdl.net, tensor_from(images),
                                               fisher_options_from(estimator, draws, seed)));
          },
          py::arg("images"), py::arg("estimator") = "exact", py::arg("draws") = 1,
          py::arg("seed") = 0)
      .def(
          "fisher_trace",
          [](const PyModel& mdl, const DoubleArray& images, int t,
             const std::string& estimator, int draws, uint64_t seed) {
            return fisher_trace(mdl.net, tensor_from(images), t,
                                fisher_options_from(estimator, draws, seed));
          },
          py::arg("images"), py::arg("t"), py::arg("estimator") = "exact",
          py::arg("draws") = 1, py::arg("seed") = 0)
      .def(
          "layerwise_fisher",
          [](const PyModel& mdl, const DoubleArray& images, bool normalize) {
            return layerwise_fisher(mdl.net, tensor_from(images), FisherOptions{}, normalize)
                .values;
          },
          py::arg("images"), py::arg("normalize") = false)
      .def(
          "fgsm",
          [](const PyModel& mdl, const DoubleArray& images, const std::vector<int>& labels,
             double epsilon, double clamp_lo, double clamp_hi) {
            return array_from(
                fgsm(mdl.net, tensor_from(images), labels, epsilon, clamp_lo, clamp_hi));
          },
          py::arg("images"), py::arg("labels"), py::arg("epsilon") = 8.0 / 255.0,
          py::arg("clamp_lo") = 0.0, py::arg("clamp_hi") = 1.0)
      .def(
          "pgd",
          [](const PyModel& mdl, const DoubleArray& images, const std::vector<int>& labels,
             double epsilon, double step_size, int iterations, double clamp_lo,
             double clamp_hi) {
            AttackParams params;
            params.kind = AttackParams::Kind::kPgd;
            params.epsilon = epsilon;
            params.step_size = step_size;
            params.iterations = iterations;
            params.clamp_lo = clamp_lo;
            params.clamp_hi = clamp_hi;
            return array_from(pgd(mdl.net, tensor_from(images), labels, params));
          },
          py::arg("images"), py::arg("labels"), py::arg("epsilon") = 8.0 / 255.0,
          py::arg("step_size") = 4.0 / 255.0, py::arg("iterations") = 10,
          py::arg("clamp_lo") = 0.0, py::arg("clamp_hi") = 1.0)
      .def(
          "deficit",
          [](const PyModel& mdl, const DoubleArray& images, const std::vector<int>& labels,
             int start, int length, double noise_ratio, uint64_t seed) {
            DeficitWindow window;
            window.start = start;
            window.length = length;
            window.noise_ratio = noise_ratio;
            DeficitResult r =
                windowed_deficit_eval(mdl.net, tensor_from(images), labels, window, seed);
            py::dict d;
            d["accuracy"] = r.accuracy;
            d["reference_accuracy"] = r.reference_accuracy;
            d["relative"] = r.relative;
            d["reference_start"] = r.reference_start;
            return d;
          },
          py::arg("images"), py::arg("labels"), py::arg("start"), py::arg("length") = 3,
          py::arg("noise_ratio") = 0.5, py::arg("seed") = 0)
      .def(
          "kl_quadratic",
          [](const PyModel& mdl, const DoubleArray& x, const DoubleArray& delta, int t) {
            KlQuadratic kq = kl_quadratic_check(mdl.net, tensor_from(x), tensor_from(delta), t);
            return py::make_tuple(kq.true_kl, kq.quadratic_form);
          },
          py::arg("x"), py::arg("delta"), py::arg("t"))
      .def("save",
           [](const PyModel& mdl, const std::string& path) { save_checkpoint(mdl.net, path); },
           py::arg("path"))
      .def_static(
          "load",
          [](const std::string& path) { return PyModel{load_checkpoint(path)}; },
          py::arg("path"))
      .def("__repr__", [](const PyModel& mdl) {
        return "<snnkit.Model " + std::to_string(mdl.net.layer_count()) + " layers, T=" +
               std::to_string(mdl.net.config().timesteps) + ", " +
               std::to_string(mdl.net.params().total_size()) + " params>";
      });

  m.def(
      "iterative_prune",
      [](const PyModel& mdl, const PyDataset& data, double fraction, int cycles,
         int retrain_epochs, int first_epochs, int retrain_timesteps, double lr,
         size_t batch_size, const std::string& loss, double alpha, uint64_t seed) {
        PruningSchedule schedule;
        schedule.fraction = fraction;
        schedule.cycles = cycles;
        schedule.retrain_epochs = retrain_epochs;
        schedule.first_epochs = first_epochs;
        schedule.retrain_timesteps = retrain_timesteps;
        schedule.optimizer.lr = lr;
        schedule.optimizer.batch_size = batch_size;
        schedule.loss = loss_from(loss, alpha);
        PruneRunResult result = iterative_prune(mdl.net, data.data, schedule, seed);
        py::list series;
        for (const PruneCycleStats& s : result.series) {
          py::dict d;
          d["cycle"] = s.cycle;
          d["sparsity"] = s.sparsity;
          d["retrain_timesteps"] = s.retrain_timesteps;
          d["accuracy"] = s.accuracy;
          d["epochs_spent"] = s.epochs_spent;
          series.append(d);
        }
        py::dict out;
        out["model"] = PyModel{std::move(result.net)};
        out["series"] = series;
        out["sparsity"] = result.mask.sparsity();
        return out;
      },
      py::arg("model"), py::arg("dataset"), py::arg("fraction") = 0.5, py::arg("cycles") = 5,
      py::arg("retrain_epochs") = 10, py::arg("first_epochs") = 60,
      py::arg("retrain_timesteps") = 0, py::arg("lr") = 0.1, py::arg("batch_size") = 64,
      py::arg("loss") = "standard", py::arg("alpha") = 0.0, py::arg("seed") = 0);

  m.def("information_centroid", &information_centroid, py::arg("traces"));
  m.def("tic_select_timestep",
        py::overload_cast<const std::vector<double>&, double>(&tic_select_timestep),
        py::arg("traces"), py::arg("kappa") = 0.05);
  m.def("compute_efficiency", &compute_efficiency, py::arg("n_first"), py::arg("n_retrain"),
        py::arg("cycles"), py::arg("timesteps"), py::arg("retrain_timesteps"));

  m.def(
      "gaussian_corrupt",
      [](const DoubleArray& x, double ratio, uint64_t seed) {
        return array_from(gaussian_corrupt(tensor_from(x), ratio, seed));
      },
      py::arg("images"), py::arg("ratio"), py::arg("seed") = 0);
  m.def(
      "blur_corrupt",
      [](const DoubleArray& x, size_t factor) {
        return array_from(blur_corrupt(tensor_from(x), factor));
      },
      py::arg("images"), py::arg("factor") = 2);
}
