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

#include "ordcon/checkpoint.hpp"

#include "ordcon/config.hpp"
#include "ordcon/errors.hpp"
#include "ordcon/exports.hpp"

namespace ordcon {

using nlohmann::json;

namespace {

json tensor_json(const Tensor& t) { return json{{"shape", t.shape()}, {"values", t.values()}}; }

Tensor tensor_from(const json& j, const std::string& name) {
  try {
    return Tensor(j.at("shape").get<Shape>(), j.at("values").get<std::vector<double>>());
  } catch (const json::exception&) {
    throw CompatError("checkpoint: malformed tensor '" + name + "'");
  } catch (const ShapeError&) {
    throw CompatError("checkpoint: tensor '" + name + "' has inconsistent shape");
  }
}

}  // namespace

json checkpoint_to_json(const Checkpoint& c) {
  json j;
  j["format_version"] = c.format_version;
  j["mode"] = to_string(c.mode);
  j["epoch"] = c.epoch;
  j["spec"] = {{"input_dim", c.spec.input_dim},
               {"hidden_dims", c.spec.hidden_dims},
               {"d_age", c.spec.d_age},
               {"d_id", c.spec.d_id},
               {"activation", to_string(c.spec.activation)},
               {"seed", c.spec.seed}};
  json params = json::array();
  for (const Tensor* t : c.params.tensors()) params.push_back(tensor_json(*t));
  j["params"] = params;
  j["bank"] = {{"label_lo", c.bank.label_lo()}, {"proxies", tensor_json(c.bank.proxies())}};
  if (c.head) {
    j["head"] = {{"weight", tensor_json(c.head->weight)}, {"bias", c.head->bias}};
  } else {
    j["head"] = nullptr;
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format_version")) {
    throw CompatError("checkpoint: missing format_version");
  }
  const int version = j["format_version"].is_number_integer() ? j["format_version"].get<int>() : -1;
  if (version != kCheckpointVersion) {
    throw CompatError("checkpoint: format_version " + j["format_version"].dump() +
                      " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  try {
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.epoch = j.at("epoch").get<int>();
    const json& s = j.at("spec");
    c.spec.input_dim = s.at("input_dim").get<std::size_t>();
    c.spec.hidden_dims = s.at("hidden_dims").get<std::vector<std::size_t>>();
    c.spec.d_age = s.at("d_age").get<std::size_t>();
    c.spec.d_id = s.at("d_id").get<std::size_t>();
    c.spec.activation = parse_activation(s.at("activation").get<std::string>());
    c.spec.seed = s.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw CompatError(std::string("checkpoint: malformed header (") + e.what() + ")");
  } catch (const ConfigError& e) {
    throw CompatError(std::string("checkpoint: ") + e.what());
  }

  const std::size_t layers = c.spec.hidden_dims.size();
  const json& params = j.at("params");
  const std::size_t expected = 2 * layers + 1 + (c.spec.d_id > 0 ? 1 : 0);
  if (!params.is_array() || params.size() != expected) {
    throw CompatError("checkpoint: expected " + std::to_string(expected) + " parameter tensors");
  }
  EncoderParams& p = c.params;
  std::size_t k = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    p.weights.push_back(tensor_from(params[k++], "weight" + std::to_string(l)));
    p.biases.push_back(tensor_from(params[k++], "bias" + std::to_string(l)));
  }
  p.age_head = tensor_from(params[k++], "age_head");
  if (c.spec.d_id > 0) p.id_head = tensor_from(params[k++], "id_head");

  // shapes must agree with the spec
  std::size_t in = c.spec.input_dim;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t out = c.spec.hidden_dims[l];
    if (p.weights[l].shape() != Shape{in, out} || p.biases[l].shape() != Shape{out}) {
      throw CompatError("checkpoint: layer " + std::to_string(l) + " does not match the spec");
    }
    in = out;
  }
  if (p.age_head.shape() != Shape{in, c.spec.d_age}) throw CompatError("checkpoint: age head shape");
  if (c.spec.d_id > 0 && p.id_head.shape() != Shape{in, c.spec.d_id}) {
    throw CompatError("checkpoint: identity head shape");
  }

  try {
    const json& b = j.at("bank");
    Tensor proxies = tensor_from(b.at("proxies"), "proxies");
    if (proxies.rank() != 2 || proxies.cols() != c.spec.d_age) {
      throw CompatError("checkpoint: proxy dimension does not match d_age");
    }
    c.bank = ProxyBank(b.at("label_lo").get<int>(), std::move(proxies));
    if (j.contains("head") && !j["head"].is_null()) {
      RegressionHead h;
      h.weight = tensor_from(j["head"].at("weight"), "head.weight");
      h.bias = j["head"].at("bias").get<double>();
      if (h.weight.shape() != Shape{c.spec.d_age, 1}) throw CompatError("checkpoint: head shape");
      c.head = std::move(h);
    }
  } catch (const json::exception& e) {
    throw CompatError(std::string("checkpoint: malformed body (") + e.what() + ")");
  }
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  atomic_write(path, checkpoint_to_json(c).dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json(path));
}

}  // namespace ordcon
