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

// ordcon: command-line front end.
//
//   ordcon gen-data   --out data.csv [--config c.json] [--seed N] [--data.n_samples 500 ...]
//   ordcon pretrain   --data data.csv --out-dir run/ [--epochs N] [--ablation order-only]
//   ordcon finetune   --checkpoint run/checkpoint.json --data data.csv --out-dir run2/
//   ordcon train-aifr --data data.csv --out-dir run/
//   ordcon eval       --checkpoint run/checkpoint.json --data data.csv [--export-features f.csv]
//   ordcon gradcheck  [--seeds 20]
//   ordcon export     --checkpoint run/checkpoint.json --data data.csv --out f.csv
//
// Any --section.key value pair overrides the configuration. Exit codes:
// 0 ok, 1 check failure, 2 config, 3 I/O, 4 numerical, 5 compatibility.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ordcon/checkpoint.hpp"
#include "ordcon/config.hpp"
#include "ordcon/errors.hpp"
#include "ordcon/exports.hpp"
#include "ordcon/gradcheck_suite.hpp"
#include "ordcon/metrics.hpp"
#include "ordcon/rng.hpp"
#include "ordcon/synthdata.hpp"
#include "ordcon/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ordcon;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfig = 2, kIo = 3, kNumeric = 4, kCompat = 5 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::string ablation = "full";
};

void add_common(CLI::App* sub, Common& c, bool with_training) {
  sub->add_option("--config", c.config_path, "JSON configuration file");
  sub->add_option("--seed", c.seed, "Root seed");
  if (with_training) {
    sub->add_option("--epochs", c.epochs, "Epochs of this stage");
    sub->add_option("--ablation", c.ablation, "full, order-only, metric-only or hard-metric");
  }
  sub->allow_extras();
}

std::vector<std::pair<std::string, std::string>> dotted_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t k = 0; k < extras.size(); ++k) {
    const std::string& a = extras[k];
    if (a.rfind("--", 0) != 0 || a.find('.') == std::string::npos) {
      throw ConfigError("unrecognised argument '" + a + "'");
    }
    std::string key = a.substr(2);
    const std::size_t eq = key.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
    } else {
      if (k + 1 >= extras.size()) throw ConfigError(key + ": missing value");
      out.emplace_back(key, extras[++k]);
    }
  }
  return out;
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON (" + e.what() + ")");
  }
}

// File, then --seed/--epochs/--ablation, then dotted overrides.
RunConfig resolve(const Common& c, const std::vector<std::string>& extras,
                  std::optional<BatchMode> mode, const char* epochs_key, json* resolved_out) {
  ConfigSources src;
  src.file = load_config_file(c.config_path);
  src.forced_mode = mode;
  if (c.seed) src.overrides.emplace_back("seed", std::to_string(*c.seed));
  if (c.epochs) src.overrides.emplace_back(epochs_key, std::to_string(*c.epochs));
  for (auto& kv : dotted_overrides(extras)) src.overrides.push_back(std::move(kv));
  if (c.ablation != "full") {
    json patch = default_config_json(mode.value_or(BatchMode::kAge));
    apply_ablation(patch, c.ablation);
    for (const char* key : {"lambda_metric", "use_order", "soft_weights"}) {
      if (patch["loss"][key] != default_config_json(BatchMode::kAge)["loss"][key]) {
        src.overrides.emplace_back(std::string("loss.") + key, patch["loss"][key].dump());
      }
    }
  }
  // a new root seed rederives the sub-seeds a file may carry
  if (c.seed) {
    for (const auto& [section, key] : {std::pair{"data", "warp_seed"}, std::pair{"data", "sample_seed"},
                                       std::pair{"train", "seed"}}) {
      if (src.file.contains(section) && src.file[section].contains(key)) src.file[section][key] = nullptr;
    }
  }
  json j = resolve_config(src);
  if (resolved_out) *resolved_out = j;
  std::cout << "config: " << j.dump() << "\n";
  return run_config_from_json(j);
}

Split split_for(const Dataset& d, const RunConfig& cfg) {
  return split_by_identity(d, cfg.pipeline.train.holdout_fraction,
                           derive_seed(cfg.pipeline.train.seed, stream::kSplit));
}

void write_run(const fs::path& out_dir, const json& config, const Checkpoint& ck, Metrics m,
               const std::vector<EpochRecord>& trace) {
  m.loss_trace = trace;
  atomic_write(out_dir / "config.json", config.dump(2) + "\n");
  save_checkpoint(ck, out_dir / "checkpoint.json");
  export_metrics(out_dir / "metrics.json", m);
  export_loss_trace(out_dir / "loss_trace.csv", trace);
  std::cout << "metrics: " << metrics_to_json(m).dump() << "\n";
}

// A checkpoint's run config sits next to it; used when --config is absent.
void default_config_from_checkpoint(Common& c, const std::string& checkpoint) {
  if (!c.config_path.empty()) return;
  const fs::path sibling = fs::path(checkpoint).parent_path() / "config.json";
  if (fs::exists(sibling)) c.config_path = sibling.string();
}

void check_threads_env() {
  const char* v = std::getenv("ORDCON_THREADS");
  if (!v) return;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) {
    throw ConfigError("ORDCON_THREADS: expected a positive integer, got '" + std::string(v) + "'");
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Ordinal contrastive representation learning on synthetic data"};
  app.require_subcommand(1);

  Common gen_c;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset CSV and sidecar");
  add_common(gen, gen_c, false);
  gen->add_option("--out", gen_out, "Output CSV")->required();

  Common pre_c;
  std::string pre_data, pre_out;
  auto* pre = app.add_subcommand("pretrain", "Contrastive pretraining of encoder and proxies");
  add_common(pre, pre_c, true);
  pre->add_option("--data", pre_data, "Dataset CSV")->required();
  pre->add_option("--out-dir", pre_out, "Output directory")->required();

  Common fin_c;
  std::string fin_ckpt, fin_data, fin_out;
  auto* fin = app.add_subcommand("finetune", "Fit the age regression head on a pretrained encoder");
  add_common(fin, fin_c, true);
  fin->add_option("--checkpoint", fin_ckpt, "Pretrained checkpoint")->required();
  fin->add_option("--data", fin_data, "Dataset CSV")->required();
  fin->add_option("--out-dir", fin_out, "Output directory")->required();

  Common aifr_c;
  std::string aifr_data, aifr_out;
  auto* aifr = app.add_subcommand("train-aifr", "Identity + age-group training with gradient reversal");
  add_common(aifr, aifr_c, true);
  aifr->add_option("--data", aifr_data, "Dataset CSV")->required();
  aifr->add_option("--out-dir", aifr_out, "Output directory")->required();

  Common ev_c;
  std::string ev_ckpt, ev_data, ev_out, ev_features, ev_space = "age";
  bool ev_all = false;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out split");
  add_common(ev, ev_c, false);
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint")->required();
  ev->add_option("--data", ev_data, "Dataset CSV")->required();
  ev->add_option("--out", ev_out, "Metrics JSON path");
  ev->add_option("--export-features", ev_features, "Also write the evaluated features as CSV");
  ev->add_option("--space", ev_space, "Feature space to export: age or id");
  ev->add_flag("--all", ev_all, "Evaluate on the whole dataset instead of the held-out split");

  int gc_seeds = 20;
  std::uint64_t gc_root = 0;
  std::string gc_flip;
  double gc_eps = GradcheckSuiteOptions{}.eps;
  bool gc_two_point = false;
  auto* gc = app.add_subcommand("gradcheck", "Check every loss gradient against finite differences");
  gc->add_option("--seeds", gc_seeds, "Number of random batches per loss")->check(CLI::PositiveNumber);
  gc->add_option("--seed", gc_root, "Root seed");
  gc->add_option("--eps", gc_eps, "Central-difference step");
  gc->add_flag("--two-point", gc_two_point, "Two-point instead of five-point central differences");
  gc->add_option("--inject-wrong-sign", gc_flip, "Negate the analytic gradient of this check");

  Common ex_c;
  std::string ex_ckpt, ex_data, ex_out, ex_space = "age", ex_proxies;
  std::size_t ex_pca = 0;
  bool ex_all = false;
  auto* ex = app.add_subcommand("export", "Write features (optionally PCA-projected) and proxies");
  add_common(ex, ex_c, false);
  ex->add_option("--checkpoint", ex_ckpt, "Checkpoint")->required();
  ex->add_option("--data", ex_data, "Dataset CSV")->required();
  ex->add_option("--out", ex_out, "Features CSV")->required();
  ex->add_option("--space", ex_space, "Feature space: age or id");
  ex->add_option("--pca", ex_pca, "Project onto the top-k principal components");
  ex->add_option("--proxies", ex_proxies, "Also write the proxies (PCA-projected when --pca)");
  ex->add_flag("--all", ex_all, "Export the whole dataset instead of the held-out split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  check_threads_env();

  if (*gen) {
    const RunConfig cfg = resolve(gen_c, gen->remaining(), std::nullopt, "train.epochs_pretrain", nullptr);
    const Dataset d = generate(cfg.data);
    save_csv(d, gen_out);
    std::cout << "wrote " << d.size() << " samples to " << gen_out << "\n";
    return kOk;
  }

  if (*pre) {
    json resolved;
    const RunConfig cfg = resolve(pre_c, pre->remaining(), BatchMode::kAge, "train.epochs_pretrain", &resolved);
    const Split s = split_for(load_csv(pre_data), cfg);
    TrainResult r = pretrain_age(s.train, cfg.pipeline);
    Metrics m = evaluate(r.checkpoint, s.test, cfg.pipeline);
    write_run(pre_out, resolved, r.checkpoint, m, r.trace);
    return kOk;
  }

  if (*fin) {
    default_config_from_checkpoint(fin_c, fin_ckpt);
    json resolved;
    const RunConfig cfg = resolve(fin_c, fin->remaining(), BatchMode::kAge, "train.epochs_finetune", &resolved);
    const Checkpoint ck = load_checkpoint(fin_ckpt);
    if (ck.mode != BatchMode::kAge) throw CompatError("finetune: checkpoint was trained in aifr mode");
    const Split s = split_for(load_csv(fin_data), cfg);
    if (s.train.input_dim() != ck.spec.input_dim) {
      throw CompatError("checkpoint expects input_dim " + std::to_string(ck.spec.input_dim) +
                        " but data has input_dim " + std::to_string(s.train.input_dim()));
    }
    TrainResult r = finetune_age(ck, s.train, cfg.pipeline);
    Metrics m = evaluate(r.checkpoint, s.test, cfg.pipeline);
    write_run(fin_out, resolved, r.checkpoint, m, r.trace);
    return kOk;
  }

  if (*aifr) {
    json resolved;
    const RunConfig cfg = resolve(aifr_c, aifr->remaining(), BatchMode::kAifr, "train.epochs_pretrain", &resolved);
    const Split s = split_for(load_csv(aifr_data), cfg);
    TrainResult r = train_aifr(s.train, cfg.pipeline);
    Metrics m = evaluate(r.checkpoint, s.test, cfg.pipeline);
    write_run(aifr_out, resolved, r.checkpoint, m, r.trace);
    return kOk;
  }

  if (*ev || *ex) {
    const bool is_eval = ev->parsed();
    Common& c = is_eval ? ev_c : ex_c;
    const std::string& ckpt_path = is_eval ? ev_ckpt : ex_ckpt;
    default_config_from_checkpoint(c, ckpt_path);
    const Checkpoint ck = load_checkpoint(ckpt_path);
    const RunConfig cfg = resolve(c, (is_eval ? ev : ex)->remaining(), ck.mode, "train.epochs_pretrain", nullptr);
    const Dataset data = load_csv(is_eval ? ev_data : ex_data);
    const Dataset eval_set = (is_eval ? ev_all : ex_all) ? data : split_for(data, cfg).test;
    if (eval_set.input_dim() != ck.spec.input_dim) {
      throw CompatError("checkpoint expects input_dim " + std::to_string(ck.spec.input_dim) +
                        " but data has input_dim " + std::to_string(eval_set.input_dim()));
    }
    const std::string& space = is_eval ? ev_space : ex_space;
    if (space != "age" && space != "id") throw ConfigError("--space: expected 'age' or 'id'");
    if (space == "id" && ck.spec.d_id == 0) throw ConfigError("--space id: checkpoint has no identity head");

    auto features = [&]() {
      Tensor x = Tensor::zeros({eval_set.size(), eval_set.input_dim()});
      for (std::size_t i = 0; i < eval_set.size(); ++i) {
        std::copy(eval_set.samples[i].x.begin(), eval_set.samples[i].x.end(),
                  x.data() + i * eval_set.input_dim());
      }
      const Features f = encode(ck.spec, ck.params, x);
      return space == "age" ? f.z_age : f.z_id;
    };

    if (is_eval) {
      const Metrics m = evaluate(ck, eval_set, cfg.pipeline);
      const json mj = metrics_to_json(m);
      std::cout << "metrics: " << mj.dump() << "\n";
      if (!ev_out.empty()) export_metrics(ev_out, m);
      if (!ev_features.empty()) export_features(ev_features, eval_set, features());
      return kOk;
    }

    Tensor z = features();
    std::optional<PcaResult> pca;
    if (ex_pca > 0) {
      pca = pca_project(z, ex_pca);
      z = pca->projected;
    }
    export_features(ex_out, eval_set, z);
    if (!ex_proxies.empty()) {
      if (space != "age") throw ConfigError("--proxies: proxies live in the age space");
      Tensor p = ck.bank.proxies();
      if (pca) {
        const std::size_t k = pca->components.rows();
        const std::size_t d = p.cols();
        Tensor proj = Tensor::zeros({p.rows(), k});
        for (std::size_t r = 0; r < p.rows(); ++r)
          for (std::size_t c2 = 0; c2 < k; ++c2) {
            double acc = 0.0;
            for (std::size_t e = 0; e < d; ++e) acc += (p.at(r, e) - pca->mean[e]) * pca->components.at(c2, e);
            proj.at(r, c2) = acc;
          }
        p = proj;
      }
      std::string out = "label";
      for (std::size_t k = 0; k < p.cols(); ++k) out += ",z_" + std::to_string(k);
      out += "\n";
      for (std::size_t r = 0; r < p.rows(); ++r) {
        out += std::to_string(ck.bank.label_lo() + static_cast<int>(r));
        for (std::size_t k = 0; k < p.cols(); ++k) {
          char buf[64];
          const auto res = std::to_chars(buf, buf + sizeof buf, p.at(r, k));
          out += ",";
          out.append(buf, res.ptr);
        }
        out += "\n";
      }
      atomic_write(ex_proxies, out);
    }
    std::cout << "wrote " << eval_set.size() << " rows to " << ex_out << "\n";
    return kOk;
  }

  if (*gc) {
    const std::vector<std::string> names = gradcheck_names();
    if (!gc_flip.empty() && std::find(names.begin(), names.end(), gc_flip) == names.end()) {
      throw ConfigError("--inject-wrong-sign: unknown check '" + gc_flip + "'");
    }
    GradcheckSuiteOptions o;
    o.seeds = gc_seeds;
    o.root_seed = gc_root;
    o.flip_check = gc_flip;
    o.eps = gc_eps;
    o.five_point = !gc_two_point;
    const GradcheckReport rep = run_gradcheck_suite(o);
    std::printf("%-32s %14s %6s\n", "check", "max_rel_error", "seed");
    for (const GradcheckEntry& e : rep.entries) {
      std::printf("%-32s %14.3e %6d %s\n", e.name.c_str(), e.max_rel_error, e.worst_seed,
                  e.passed ? "ok" : "FAIL");
    }
    for (const GradcheckEntry& e : rep.entries) {
      if (!e.passed) {
        std::fprintf(stderr, "gradcheck failed: %s (seed %d, rel error %.3e)\n", e.name.c_str(),
                     e.worst_seed, e.max_rel_error);
      }
    }
    return rep.passed() ? kOk : kCheckFailed;
  }
  return kConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumeric;
  } catch (const CompatError& e) {
    std::cerr << "compatibility error: " << e.what() << "\n";
    return kCompat;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
}
