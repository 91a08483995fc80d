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

#ifndef FAUN_CONFIG_HPP
#define FAUN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "faun/attacks.hpp"
#include "faun/data.hpp"
#include "faun/fl.hpp"
#include "faun/types.hpp"

namespace faun {

enum class DatasetKind { synthetic, idx };
enum class Method { none, faun, retrain, federaser, finetune_only };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct DatasetConfig {
  DatasetKind kind{DatasetKind::synthetic};
  // synthetic
  int num_classes{10};
  Index input_dim{64};
  Index train_examples{6000};
  Index test_examples{1200};
  Scalar class_separation{2.5};
  // idx
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  // server-held clean split
  Index proxy_size{200};
};

struct ModelConfig {
  std::vector<Index> hidden_dims{32};
};

struct FlConfig {
  int clients{20};
  int malicious{6};
  int rounds{60};
  FlParams params;
  PartitionMode partition{PartitionMode::iid};
  Scalar alpha{0.5};
};

struct UnlearnConfig {
  Method method{Method::none};
  Scalar epsilon{1.0};
  int pgd_steps{30};
  Scalar pgd_step_size{0.05};
  int window{10};            // R_m
  int eliminate_rounds{10};  // T_a
  int total_rounds{50};
  int federaser_period{2};
};

struct EvalConfig {
  int train_cadence{5};
  int unlearn_cadence{1};
};

struct ExperimentConfig {
  DatasetConfig dataset;
  ModelConfig model;
  FlConfig fl;
  AttackSpec attack;
  UnlearnConfig unlearn;
  EvalConfig eval;
  std::uint64_t seed{1};
  std::string out_dir;
};

// Strict parse: unknown keys are rejected with their field path; absent keys
// take the defaults above. Validation runs before returning.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

nlohmann::json to_json(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

// `key.path=value` applied to the raw JSON before parsing; the value is
// parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

// FNV-1a over the canonical (sorted-key) serialization. out_dir is excluded:
// it never affects emitted numbers.
std::string config_hash(const ExperimentConfig& config);

// Hash of the run-comparability fields: dataset, model, fl, attack, seed.
std::string dataset_hash(const ExperimentConfig& config);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace faun

#endif  // FAUN_CONFIG_HPP
