// Copyright 2026 The faunsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "faun/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace faun {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw config_error(path.empty() ? message : path + ": " + message);
}

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) {
      fail(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

template <typename T>
void read_field(const json& j, const std::string& path, const char* key,
                T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path + "." + key, std::string("bad value: ") + e.what());
  }
}

void read_scalar(const json& j, const std::string& path, const char* key,
                 Scalar& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number()) fail(path + "." + key, "expected a number");
  out = j.at(key).get<Scalar>();
}

void read_index(const json& j, const std::string& path, const char* key,
                Index& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_integer()) {
    fail(path + "." + key, "expected an integer");
  }
  out = j.at(key).get<Index>();
}

Anchor anchor_from_name(const std::string& name, const std::string& path) {
  if (name == "bottom_right") return Anchor::bottom_right;
  if (name == "bottom_left") return Anchor::bottom_left;
  if (name == "top_left") return Anchor::top_left;
  fail(path, "unknown anchor '" + name + "'");
}

std::string anchor_name(Anchor a) {
  switch (a) {
    case Anchor::bottom_right: return "bottom_right";
    case Anchor::bottom_left: return "bottom_left";
    case Anchor::top_left: return "top_left";
  }
  return "bottom_right";
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::faun: return "faun";
    case Method::retrain: return "retrain";
    case Method::federaser: return "federaser";
    case Method::finetune_only: return "finetune_only";
  }
  return "none";
}

Method method_from_name(const std::string& name) {
  if (name == "none") return Method::none;
  if (name == "faun") return Method::faun;
  if (name == "retrain") return Method::retrain;
  if (name == "federaser") return Method::federaser;
  if (name == "finetune_only") return Method::finetune_only;
  throw config_error("unlearn.method: unknown method '" + name + "'");
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  check_keys(j, "",
             {"dataset", "model", "fl", "attack", "unlearn", "eval", "seed",
              "out_dir"});

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d, "dataset",
               {"kind", "num_classes", "input_dim", "train_examples",
                "test_examples", "class_separation", "train_images",
                "train_labels", "test_images", "test_labels", "proxy_size"});
    if (d.contains("kind")) {
      const auto kind = d.at("kind").get<std::string>();
      if (kind == "synthetic") {
        cfg.dataset.kind = DatasetKind::synthetic;
      } else if (kind == "idx") {
        cfg.dataset.kind = DatasetKind::idx;
      } else {
        fail("dataset.kind", "unknown kind '" + kind + "'");
      }
    }
    read_field(d, "dataset", "num_classes", cfg.dataset.num_classes);
    read_index(d, "dataset", "input_dim", cfg.dataset.input_dim);
    read_index(d, "dataset", "train_examples", cfg.dataset.train_examples);
    read_index(d, "dataset", "test_examples", cfg.dataset.test_examples);
    read_scalar(d, "dataset", "class_separation",
                cfg.dataset.class_separation);
    read_field(d, "dataset", "train_images", cfg.dataset.train_images);
    read_field(d, "dataset", "train_labels", cfg.dataset.train_labels);
    read_field(d, "dataset", "test_images", cfg.dataset.test_images);
    read_field(d, "dataset", "test_labels", cfg.dataset.test_labels);
    read_index(d, "dataset", "proxy_size", cfg.dataset.proxy_size);
  }

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, "model", {"hidden_dims"});
    if (m.contains("hidden_dims")) {
      cfg.model.hidden_dims.clear();
      for (const auto& v : m.at("hidden_dims")) {
        if (!v.is_number_integer()) {
          fail("model.hidden_dims", "expected integers");
        }
        cfg.model.hidden_dims.push_back(v.get<Index>());
      }
    }
  }

  if (j.contains("fl")) {
    const auto& f = j.at("fl");
    check_keys(f, "fl",
               {"clients", "malicious", "rounds", "local_epochs", "batch_size",
                "learning_rate", "momentum", "server_eta", "partition",
                "alpha"});
    read_field(f, "fl", "clients", cfg.fl.clients);
    read_field(f, "fl", "malicious", cfg.fl.malicious);
    read_field(f, "fl", "rounds", cfg.fl.rounds);
    read_field(f, "fl", "local_epochs", cfg.fl.params.local_epochs);
    read_field(f, "fl", "batch_size", cfg.fl.params.batch_size);
    read_scalar(f, "fl", "learning_rate", cfg.fl.params.learning_rate);
    read_scalar(f, "fl", "momentum", cfg.fl.params.momentum);
    read_scalar(f, "fl", "server_eta", cfg.fl.params.server_eta);
    if (f.contains("partition")) {
      const auto mode = f.at("partition").get<std::string>();
      if (mode == "iid") {
        cfg.fl.partition = PartitionMode::iid;
      } else if (mode == "dirichlet") {
        cfg.fl.partition = PartitionMode::dirichlet;
      } else {
        fail("fl.partition", "unknown mode '" + mode + "'");
      }
    }
    read_scalar(f, "fl", "alpha", cfg.fl.alpha);
  }

  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    check_keys(a, "attack",
               {"kind", "trim_scale", "trim_jitter", "poison_ratio",
                "trigger"});
    if (a.contains("kind")) {
      const auto kind = a.at("kind").get<std::string>();
      if (kind == "none") {
        cfg.attack.kind = AttackKind::none;
      } else if (kind == "trim") {
        cfg.attack.kind = AttackKind::trim;
      } else if (kind == "backdoor") {
        cfg.attack.kind = AttackKind::backdoor;
      } else {
        fail("attack.kind", "unknown kind '" + kind + "'");
      }
    }
    read_scalar(a, "attack", "trim_scale", cfg.attack.trim_scale);
    read_scalar(a, "attack", "trim_jitter", cfg.attack.trim_jitter);
    read_scalar(a, "attack", "poison_ratio", cfg.attack.poison_ratio);
    if (a.contains("trigger")) {
      const auto& t = a.at("trigger");
      check_keys(t, "attack.trigger",
                 {"patch_rows", "patch_cols", "anchor", "patch_value",
                  "target_class"});
      read_index(t, "attack.trigger", "patch_rows",
                 cfg.attack.trigger.patch_rows);
      read_index(t, "attack.trigger", "patch_cols",
                 cfg.attack.trigger.patch_cols);
      if (t.contains("anchor")) {
        cfg.attack.trigger.anchor = anchor_from_name(
            t.at("anchor").get<std::string>(), "attack.trigger.anchor");
      }
      read_scalar(t, "attack.trigger", "patch_value",
                  cfg.attack.trigger.patch_value);
      read_field(t, "attack.trigger", "target_class",
                 cfg.attack.trigger.target_class);
    }
  }

  if (j.contains("unlearn")) {
    const auto& u = j.at("unlearn");
    check_keys(u, "unlearn",
               {"method", "epsilon", "pgd_steps", "pgd_step_size", "window",
                "eliminate_rounds", "total_rounds", "federaser_period"});
    if (u.contains("method")) {
      cfg.unlearn.method =
          method_from_name(u.at("method").get<std::string>());
    }
    read_scalar(u, "unlearn", "epsilon", cfg.unlearn.epsilon);
    read_field(u, "unlearn", "pgd_steps", cfg.unlearn.pgd_steps);
    read_scalar(u, "unlearn", "pgd_step_size", cfg.unlearn.pgd_step_size);
    read_field(u, "unlearn", "window", cfg.unlearn.window);
    read_field(u, "unlearn", "eliminate_rounds",
               cfg.unlearn.eliminate_rounds);
    read_field(u, "unlearn", "total_rounds", cfg.unlearn.total_rounds);
    read_field(u, "unlearn", "federaser_period",
               cfg.unlearn.federaser_period);
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    check_keys(e, "eval", {"train_cadence", "unlearn_cadence"});
    read_field(e, "eval", "train_cadence", cfg.eval.train_cadence);
    read_field(e, "eval", "unlearn_cadence", cfg.eval.unlearn_cadence);
  }

  read_field(j, "", "seed", cfg.seed);
  read_field(j, "", "out_dir", cfg.out_dir);

  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = {
      {"kind", c.dataset.kind == DatasetKind::synthetic ? "synthetic" : "idx"},
      {"num_classes", c.dataset.num_classes},
      {"input_dim", c.dataset.input_dim},
      {"train_examples", c.dataset.train_examples},
      {"test_examples", c.dataset.test_examples},
      {"class_separation", c.dataset.class_separation},
      {"proxy_size", c.dataset.proxy_size},
  };
  if (c.dataset.kind == DatasetKind::idx) {
    j["dataset"]["train_images"] = c.dataset.train_images;
    j["dataset"]["train_labels"] = c.dataset.train_labels;
    j["dataset"]["test_images"] = c.dataset.test_images;
    j["dataset"]["test_labels"] = c.dataset.test_labels;
  }
  j["model"] = {{"hidden_dims", c.model.hidden_dims}};
  j["fl"] = {
      {"clients", c.fl.clients},
      {"malicious", c.fl.malicious},
      {"rounds", c.fl.rounds},
      {"local_epochs", c.fl.params.local_epochs},
      {"batch_size", c.fl.params.batch_size},
      {"learning_rate", c.fl.params.learning_rate},
      {"momentum", c.fl.params.momentum},
      {"server_eta", c.fl.params.server_eta},
      {"partition",
       c.fl.partition == PartitionMode::iid ? "iid" : "dirichlet"},
      {"alpha", c.fl.alpha},
  };
  j["attack"] = {
      {"kind", c.attack.kind == AttackKind::none
                   ? "none"
                   : (c.attack.kind == AttackKind::trim ? "trim" : "backdoor")},
      {"trim_scale", c.attack.trim_scale},
      {"trim_jitter", c.attack.trim_jitter},
      {"poison_ratio", c.attack.poison_ratio},
      {"trigger",
       {{"patch_rows", c.attack.trigger.patch_rows},
        {"patch_cols", c.attack.trigger.patch_cols},
        {"anchor", anchor_name(c.attack.trigger.anchor)},
        {"patch_value", c.attack.trigger.patch_value},
        {"target_class", c.attack.trigger.target_class}}},
  };
  j["unlearn"] = {
      {"method", method_name(c.unlearn.method)},
      {"epsilon", c.unlearn.epsilon},
      {"pgd_steps", c.unlearn.pgd_steps},
      {"pgd_step_size", c.unlearn.pgd_step_size},
      {"window", c.unlearn.window},
      {"eliminate_rounds", c.unlearn.eliminate_rounds},
      {"total_rounds", c.unlearn.total_rounds},
      {"federaser_period", c.unlearn.federaser_period},
  };
  j["eval"] = {{"train_cadence", c.eval.train_cadence},
               {"unlearn_cadence", c.eval.unlearn_cadence}};
  j["seed"] = c.seed;
  if (!c.out_dir.empty()) j["out_dir"] = c.out_dir;
  return j;
}

void validate(const ExperimentConfig& c) {
  // dataset
  if (c.dataset.kind == DatasetKind::synthetic) {
    if (c.dataset.num_classes < 2) fail("dataset.num_classes", "must be >= 2");
    if (c.dataset.input_dim < 1) fail("dataset.input_dim", "must be >= 1");
    if (c.dataset.train_examples < c.dataset.num_classes) {
      fail("dataset.train_examples", "must be >= num_classes");
    }
    if (c.dataset.test_examples < 1) {
      fail("dataset.test_examples", "must be >= 1");
    }
    if (c.dataset.class_separation < 0) {
      fail("dataset.class_separation", "must be >= 0");
    }
  } else {
    const std::vector<std::pair<std::string, std::string>> files{
        {"train_images", c.dataset.train_images},
        {"train_labels", c.dataset.train_labels},
        {"test_images", c.dataset.test_images},
        {"test_labels", c.dataset.test_labels}};
    for (const auto& [key, path] : files) {
      if (path.empty()) {
        fail("dataset." + key, "required for idx datasets");
      }
      if (!std::filesystem::exists(path)) {
        fail("dataset." + key, "file not found: " + path);
      }
    }
  }
  if (c.dataset.proxy_size < 1) fail("dataset.proxy_size", "must be >= 1");
  if (c.dataset.kind == DatasetKind::synthetic &&
      c.dataset.proxy_size >= c.dataset.train_examples) {
    fail("dataset.proxy_size", "must be < train_examples");
  }

  // model
  for (Index h : c.model.hidden_dims) {
    if (h < 1) fail("model.hidden_dims", "entries must be >= 1");
  }

  // fl
  if (c.fl.clients < 2) fail("fl.clients", "must be >= 2");
  if (c.fl.malicious < 0) fail("fl.malicious", "must be >= 0");
  if (2 * c.fl.malicious >= c.fl.clients) {
    fail("fl.malicious", "threat model requires malicious < clients / 2");
  }
  if (c.fl.rounds < 1) fail("fl.rounds", "must be >= 1");
  if (c.fl.params.local_epochs < 0) fail("fl.local_epochs", "must be >= 0");
  if (c.fl.params.batch_size < 1) fail("fl.batch_size", "must be >= 1");
  if (!(c.fl.params.learning_rate > 0)) {
    fail("fl.learning_rate", "must be > 0");
  }
  if (c.fl.params.momentum < 0 || c.fl.params.momentum >= 1) {
    fail("fl.momentum", "must be in [0, 1)");
  }
  if (!(c.fl.params.server_eta > 0)) fail("fl.server_eta", "must be > 0");
  if (c.fl.partition == PartitionMode::dirichlet && !(c.fl.alpha > 0)) {
    fail("fl.alpha", "must be > 0");
  }

  // attack
  if (c.attack.kind != AttackKind::none && c.fl.malicious < 1) {
    fail("fl.malicious", "an attack requires at least one malicious client");
  }
  if (c.attack.kind == AttackKind::trim && !(c.attack.trim_scale >= 0)) {
    fail("attack.trim_scale", "must be >= 0");
  }
  if (c.attack.kind == AttackKind::backdoor) {
    if (!(c.attack.poison_ratio > 0) || c.attack.poison_ratio > 1) {
      fail("attack.poison_ratio", "must be in (0, 1]");
    }
    const auto& t = c.attack.trigger;
    if (t.patch_rows < 1 || t.patch_cols < 1) {
      fail("attack.trigger", "patch dims must be >= 1");
    }
    if (t.patch_value < 0 || t.patch_value > 1) {
      fail("attack.trigger.patch_value", "must be in [0, 1]");
    }
    if (t.target_class < 0 || t.target_class >= c.dataset.num_classes) {
      fail("attack.trigger.target_class", "must be a valid class");
    }
    if (c.dataset.kind == DatasetKind::synthetic) {
      const auto side = static_cast<Index>(
          std::lround(std::sqrt(static_cast<Scalar>(c.dataset.input_dim))));
      const Index rows = side * side == c.dataset.input_dim ? side : 1;
      const Index cols =
          side * side == c.dataset.input_dim ? side : c.dataset.input_dim;
      if (t.patch_rows > rows || t.patch_cols > cols) {
        fail("attack.trigger", "patch does not fit the synthetic image grid");
      }
    }
  }

  // unlearn
  if (!(c.unlearn.epsilon > 0)) fail("unlearn.epsilon", "must be > 0");
  if (c.unlearn.pgd_steps < 1) fail("unlearn.pgd_steps", "must be >= 1");
  if (!(c.unlearn.pgd_step_size > 0)) {
    fail("unlearn.pgd_step_size", "must be > 0");
  }
  if (c.unlearn.window < 1) fail("unlearn.window", "must be >= 1");
  if (c.unlearn.total_rounds < 0) fail("unlearn.total_rounds", "must be >= 0");
  if (c.unlearn.eliminate_rounds < 0 ||
      c.unlearn.eliminate_rounds > c.unlearn.total_rounds) {
    fail("unlearn.eliminate_rounds", "must be in [0, total_rounds]");
  }
  if (c.unlearn.federaser_period < 1) {
    fail("unlearn.federaser_period", "must be >= 1");
  }
  const bool needs_malicious = c.unlearn.method == Method::faun ||
                               c.unlearn.method == Method::federaser ||
                               c.unlearn.method == Method::finetune_only;
  if (needs_malicious && c.fl.malicious < 1) {
    fail("unlearn.method", "recovery methods require malicious clients");
  }

  // eval
  if (c.eval.train_cadence < 1) fail("eval.train_cadence", "must be >= 1");
  if (c.eval.unlearn_cadence < 1) fail("eval.unlearn_cadence", "must be >= 1");
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw config_error("override: expected key.path=value, got '" +
                       assignment + "'");
  }
  const std::string key_path = assignment.substr(0, eq);
  const std::string raw_value = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw_value);
  } catch (const json::exception&) {
    value = raw_value;  // plain string
  }

  json* node = &j;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key_path.find('.', pos);
    const std::string part = key_path.substr(
        pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw config_error("override: empty key segment");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("out_dir");
  return fnv1a_hex(j.dump());
}

std::string dataset_hash(const ExperimentConfig& config) {
  const json full = to_json(config);
  json j;
  j["dataset"] = full.at("dataset");
  j["model"] = full.at("model");
  j["fl"] = full.at("fl");
  j["attack"] = full.at("attack");
  j["seed"] = full.at("seed");
  return fnv1a_hex(j.dump());
}

}  // namespace faun
