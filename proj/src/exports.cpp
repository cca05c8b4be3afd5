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

#include "ordcon/exports.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "ordcon/errors.hpp"

namespace ordcon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void atomic_write(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for '" + path.string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into '" + path.string() + "'");
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
}

void export_features(const fs::path& path, const Dataset& d, const Tensor& z) {
  const std::size_t n = d.samples.size();
  const std::size_t dim = z.rank() == 2 ? z.shape()[1] : (n ? z.cols() : 0);
  if (n && z.rows() != n) throw ShapeError("export_features: feature rows do not match samples");
  std::ostringstream os;
  os << "y_age,y_id";
  for (std::size_t k = 0; k < dim; ++k) os << ",z_" << k;
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    os << d.samples[i].y_age << ',' << d.samples[i].y_id;
    for (std::size_t k = 0; k < dim; ++k) os << ',' << fmt(z.at(i, k));
    os << '\n';
  }
  atomic_write(path, os.str());
}

json metrics_to_json(const Metrics& m) {
  json trace = json::array();
  for (const EpochRecord& r : m.loss_trace) {
    trace.push_back({{"epoch", r.epoch},   {"stage", r.stage},       {"total", r.total},
                     {"order", r.order},   {"metric", r.metric},     {"identity", r.identity},
                     {"l1", r.l1},         {"grl_lambda", r.grl_lambda}});
  }
  return json{{"mae", opt(m.mae)},
              {"order_consistency", opt(m.order_consistency)},
              {"rank1", opt(m.rank1)},
              {"age_probe_acc", opt(m.age_probe_acc)},
              {"n_eval", m.n_eval},
              {"loss_trace", std::move(trace)}};
}

void export_metrics(const fs::path& path, const Metrics& m) {
  atomic_write(path, metrics_to_json(m).dump(2) + "\n");
}

void export_loss_trace(const fs::path& path, const std::vector<EpochRecord>& trace) {
  std::ostringstream os;
  os << "epoch,stage,total,order,metric,identity,l1,grl_lambda\n";
  for (const EpochRecord& r : trace) {
    os << r.epoch << ',' << r.stage << ',' << fmt(r.total) << ',' << fmt(r.order) << ','
       << fmt(r.metric) << ',' << fmt(r.identity) << ',' << fmt(r.l1) << ',' << fmt(r.grl_lambda)
       << '\n';
  }
  atomic_write(path, os.str());
}

}  // namespace ordcon
