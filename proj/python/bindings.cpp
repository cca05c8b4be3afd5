/* Copyright 2026 The OrdCon Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ordcon/autodiff.hpp"
#include "ordcon/checkpoint.hpp"
#include "ordcon/config.hpp"
#include "ordcon/errors.hpp"
#include "ordcon/exports.hpp"
#include "ordcon/gradcheck_suite.hpp"
#include "ordcon/metrics.hpp"
#include "ordcon/objectives.hpp"
#include "ordcon/rng.hpp"
#include "ordcon/train.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace ordcon;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() == 1) return Tensor::vector(std::vector<double>(a.data(), a.data() + a.size()));
  if (a.ndim() != 2) throw ShapeError("expected a 1-d or 2-d array");
  return Tensor::matrix(std::size_t(a.shape(0)), std::size_t(a.shape(1)),
                        std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

Tensor inputs_of(const Dataset& d) {
  Tensor x = Tensor::zeros({d.size(), d.input_dim()});
  for (std::size_t i = 0; i < d.size(); ++i)
    std::copy(d.samples[i].x.begin(), d.samples[i].x.end(), x.data() + i * d.input_dim());
  return x;
}

PipelineConfig pipeline_of(const std::string& config) { return run_config_from_json(json::parse(config)).pipeline; }

py::list trace_of(const std::vector<EpochRecord>& trace) {
  py::list out;
  for (const EpochRecord& r : trace) {
    py::dict d;
    d["epoch"] = r.epoch;
    d["stage"] = r.stage;
    d["total"] = r.total;
    d["order"] = r.order;
    d["metric"] = r.metric;
    d["identity"] = r.identity;
    d["l1"] = r.l1;
    d["grl_lambda"] = r.grl_lambda;
    out.append(d);
  }
  return out;
}

LossConfig loss_config(double tau, double lambda_metric, bool soft_weights, bool log_ratio,
                       bool include_positive, bool include_self, bool mirror) {
  LossConfig c;
  c.tau = tau;
  c.lambda_metric = lambda_metric;
  c.soft_weights = soft_weights;
  c.log_ratio = log_ratio;
  c.include_positive_in_denominator = include_positive;
  c.include_self_in_identity = include_self;
  c.mirror_regressive_backward = mirror;
  c.validate();
  return c;
}

// Value and gradients of a named loss on features (and proxies).
py::tuple loss(const std::string& name, const Array& z, const std::vector<int>& labels,
               const std::optional<Array>& proxies, int label_lo, const LossConfig& cfg) {
  ad::Tape tape;
  ad::Var zv = tape.param(to_tensor(z));
  std::optional<ProxyBank> bank;
  BoundBank bb;
  if (proxies) {
    bank.emplace(label_lo, to_tensor(*proxies));
    bb = BoundBank::bind(tape, *bank, true);
  } else if (name != "identity") {
    throw ConfigError(name + ": proxies are required");
  }
  ad::Var out;
  if (name == "progressive") out = progressive_loss(zv, labels, bb, cfg);
  else if (name == "regressive") out = regressive_loss(zv, labels, bb, cfg);
  else if (name == "order") out = order_loss(zv, labels, bb, cfg);
  else if (name == "metric") out = metric_loss(zv, labels, bb, cfg);
  else if (name == "contrast") out = contrast_loss(zv, labels, bb, cfg);
  else if (name == "identity") out = identity_contrastive_loss(zv, labels, cfg);
  else throw ConfigError("unknown loss '" + name + "'");
  tape.backward(out);
  py::object gp = py::none();
  if (bank) gp = to_array(tape.grad(bb.proxies));
  return py::make_tuple(out.value().item(), to_array(tape.grad(zv)), gp);
}

}  // namespace

PYBIND11_MODULE(_impl, m) {
  m.doc() = "Ordinal contrastive representation learning on synthetic data";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<CompatError>(m, "CompatError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());

  m.def(
      "resolve_config",
      [](const std::string& file, const std::vector<std::pair<std::string, std::string>>& overrides,
         const std::optional<std::string>& mode) {
        ConfigSources s;
        s.file = json::parse(file);
        s.overrides = overrides;
        if (mode) s.forced_mode = parse_mode(*mode);
        return resolve_config(s).dump();
      },
      py::arg("file") = "{}", py::arg("overrides") = std::vector<std::pair<std::string, std::string>>{},
      py::arg("mode") = std::nullopt, "Resolved configuration as a JSON string.");
  m.def(
      "apply_ablation",
      [](const std::string& config, const std::string& name) {
        json j = json::parse(config);
        apply_ablation(j, name);
        return j.dump();
      },
      py::arg("config"), py::arg("name"));

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", &Dataset::size)
      .def_property_readonly("input_dim", &Dataset::input_dim)
      .def_property_readonly("x", [](const Dataset& d) { return to_array(inputs_of(d)); })
      .def_property_readonly("y_age",
                             [](const Dataset& d) {
                               std::vector<int> v;
                               for (const Sample& s : d.samples) v.push_back(s.y_age);
                               return v;
                             })
      .def_property_readonly("y_id",
                             [](const Dataset& d) {
                               std::vector<int> v;
                               for (const Sample& s : d.samples) v.push_back(s.y_id);
                               return v;
                             })
      .def_property_readonly("spec", [](const Dataset& d) { return synthetic_spec_to_json(d.spec).dump(); })
      .def("save_csv", [](const Dataset& d, const std::string& path) { save_csv(d, path); });

  m.def(
      "generate",
      [](const std::string& spec) { return generate(synthetic_spec_from_json(json::parse(spec))); },
      py::arg("spec"), "Synthetic dataset from a JSON data section.");
  m.def("load_csv", [](const std::string& path) { return load_csv(path); }, py::arg("path"));
  m.def(
      "split_by_identity",
      [](const Dataset& d, double fraction, std::uint64_t seed) {
        Split s = split_by_identity(d, fraction, seed);
        return py::make_tuple(std::move(s.train), std::move(s.test));
      },
      py::arg("dataset"), py::arg("fraction"), py::arg("seed"));

  m.def(
      "split_seed", [](std::uint64_t train_seed) { return derive_seed(train_seed, stream::kSplit); },
      py::arg("train_seed"), "Seed the pipelines use for the held-out split.");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_property_readonly("mode", [](const Checkpoint& c) { return to_string(c.mode); })
      .def_property_readonly("epoch", [](const Checkpoint& c) { return c.epoch; })
      .def_property_readonly("proxies", [](const Checkpoint& c) { return to_array(c.bank.proxies()); })
      .def_property_readonly("proxy_label_lo", [](const Checkpoint& c) { return c.bank.label_lo(); })
      .def_property_readonly("has_head", [](const Checkpoint& c) { return c.head.has_value(); })
      .def(
          "encode",
          [](const Checkpoint& c, const Array& x) {
            const Features f = encode(c.spec, c.params, to_tensor(x));
            py::object id = py::none();
            if (c.spec.d_id > 0) id = to_array(f.z_id);
            return py::make_tuple(to_array(f.z_age), id);
          },
          py::arg("x"))
      .def("save", [](const Checkpoint& c, const std::string& path) { save_checkpoint(c, path); });
  m.def("load_checkpoint", [](const std::string& path) { return load_checkpoint(path); }, py::arg("path"));

  auto train = [](auto fn) {
    return [fn](const Dataset& d, const std::string& config) {
      TrainResult r = fn(d, pipeline_of(config));
      return py::make_tuple(std::move(r.checkpoint), trace_of(r.trace));
    };
  };
  m.def("pretrain_age",
        train([](const Dataset& d, const PipelineConfig& c) { return pretrain_age(d, c); }),
        py::arg("train"), py::arg("config"));
  m.def("train_l1_baseline",
        train([](const Dataset& d, const PipelineConfig& c) { return train_l1_baseline(d, c); }),
        py::arg("train"), py::arg("config"));
  m.def("train_aifr", train([](const Dataset& d, const PipelineConfig& c) { return train_aifr(d, c); }),
        py::arg("train"), py::arg("config"));
  m.def(
      "finetune_age",
      [](const Checkpoint& ck, const Dataset& d, const std::string& config) {
        TrainResult r = finetune_age(ck, d, pipeline_of(config));
        return py::make_tuple(std::move(r.checkpoint), trace_of(r.trace));
      },
      py::arg("checkpoint"), py::arg("train"), py::arg("config"));
  m.def(
      "evaluate",
      [](const Checkpoint& ck, const Dataset& test, const std::string& config) {
        return metrics_to_json(evaluate(ck, test, pipeline_of(config))).dump();
      },
      py::arg("checkpoint"), py::arg("test"), py::arg("config"), "Metrics as a JSON string.");

  py::class_<LossConfig>(m, "LossConfig");
  m.def("loss_config", &loss_config, py::arg("tau") = 0.1, py::arg("lambda_metric") = 0.8,
        py::arg("soft_weights") = true, py::arg("log_ratio") = false, py::arg("include_positive") = false,
        py::arg("include_self") = false, py::arg("mirror_regressive_backward") = true);
  m.def("loss", &loss, py::arg("name"), py::arg("z"), py::arg("labels"), py::arg("proxies") = std::nullopt,
        py::arg("label_lo") = 0, py::arg("config") = LossConfig{},
        "(value, grad wrt z, grad wrt proxies or None)");
  m.def("grl_lambda", &grl_lambda, py::arg("t"), py::arg("gamma") = 10.0);

  m.def(
      "gradcheck",
      [](int seeds, std::uint64_t root_seed) {
        GradcheckSuiteOptions o;
        o.seeds = seeds;
        o.root_seed = root_seed;
        py::list out;
        for (const GradcheckEntry& e : run_gradcheck_suite(o).entries) {
          py::dict d;
          d["name"] = e.name;
          d["max_rel_error"] = e.max_rel_error;
          d["worst_seed"] = e.worst_seed;
          d["passed"] = e.passed;
          out.append(d);
        }
        return out;
      },
      py::arg("seeds") = 20, py::arg("root_seed") = 0);

  m.def("mae", [](const std::vector<double>& p, const std::vector<double>& y) { return mae(p, y); });
  m.def(
      "order_consistency",
      [](const Array& z, const std::vector<int>& labels, const Array& proxies, int label_lo) {
        return order_consistency(to_tensor(z), labels, ProxyBank(label_lo, to_tensor(proxies)));
      },
      py::arg("z"), py::arg("labels"), py::arg("proxies"), py::arg("label_lo"));
  m.def(
      "rank1_accuracy",
      [](const Array& gallery, const std::vector<int>& gid, const Array& probe, const std::vector<int>& pid) {
        return rank1_accuracy(to_tensor(gallery), gid, to_tensor(probe), pid);
      },
      py::arg("gallery"), py::arg("gallery_ids"), py::arg("probe"), py::arg("probe_ids"));
  m.def(
      "age_probe_accuracy",
      [](const Array& z, const std::vector<int>& groups, std::uint64_t seed) {
        return age_probe_accuracy(to_tensor(z), groups, seed);
      },
      py::arg("z"), py::arg("groups"), py::arg("seed") = 0);
  m.def(
      "pca_project",
      [](const Array& z, std::size_t k) {
        const PcaResult p = pca_project(to_tensor(z), k);
        return py::make_tuple(to_array(p.projected), p.explained_ratio, to_array(p.components));
      },
      py::arg("z"), py::arg("k"), "(projected, explained_ratio, components)");
  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); });
}
