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

#ifndef FAUN_EXPERIMENT_HPP
#define FAUN_EXPERIMENT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faun/config.hpp"
#include "faun/metrics.hpp"
#include "faun/unlearn.hpp"

namespace faun {

inline constexpr const char* kVersion = "0.1.0";

// Everything the pipeline needs after data preparation.
struct PreparedExperiment {
  ModelSpec spec;
  ExampleBatch test;
  ExampleBatch proxy;
  std::vector<ClientRecord> clients;   // dense ids, malicious first
  std::vector<ClientRecord> retained;  // benign subset, canonical order
  ExampleBatch member_set;             // malicious clients' original shards
  std::optional<TriggerSpec> trigger;  // set for backdoor runs
};

PreparedExperiment prepare_experiment(const ExperimentConfig& config);

// In-memory result of a full pipeline run; run_experiment additionally
// persists rounds.jsonl / summary.json / manifest.json / trace.csv.
struct ExperimentResult {
  ParamVector poisoned_model;   // model at detection (end of training)
  ParamVector recovered_model;  // == poisoned_model when method = none
  std::vector<MetricsRecord> records;
  EliminationTrace trace;  // faun only
  double train_seconds{0};
  double recover_seconds{0};
  nlohmann::json summary;
};

ExperimentResult run_pipeline(const ExperimentConfig& config);

// Runs the pipeline and writes the artifact files into out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

struct CompareResult {
  std::string table;         // rendered text table
  std::string csv;           // same rows as CSV
  nlohmann::json rows;       // one entry per run
};

// Side-by-side recovery comparison from summary.json files. Refuses to
// compare runs whose dataset hashes differ.
CompareResult compare_runs(const std::vector<std::filesystem::path>& summaries);

}  // namespace faun

#endif  // FAUN_EXPERIMENT_HPP
