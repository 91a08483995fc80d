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

#ifndef FAUN_FL_HPP
#define FAUN_FL_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faun/attacks.hpp"
#include "faun/data.hpp"
#include "faun/model.hpp"
#include "faun/rng.hpp"
#include "faun/types.hpp"

namespace faun {

enum class Role { benign, malicious };

struct ClientRecord {
  int id{0};
  ExampleBatch shard;        // the client's assigned data
  ExampleBatch train_shard;  // what it actually trains on (poisoned for
                             // backdoor clients; otherwise == shard)
  Role role{Role::benign};
  std::optional<AttackSpec> attack;  // present on malicious clients

  AttackKind attack_kind() const {
    return attack ? attack->kind : AttackKind::none;
  }
};

struct FlParams {
  int local_epochs{5};
  int batch_size{16};
  Scalar learning_rate{0.01};
  Scalar momentum{0.9};
  Scalar server_eta{1.0};
};

// Ring buffer of the last `capacity` uploaded updates of one client.
// Rounds are 1-based and strictly increasing.
struct UpdateWindow {
  int client_id{0};
  int capacity{0};
  std::deque<std::pair<int, ParamVector>> entries;

  void push(int round, ParamVector update) {
    if (!entries.empty() && round <= entries.back().first) {
      throw config_error("UpdateWindow: rounds must be strictly increasing");
    }
    entries.emplace_back(round, std::move(update));
    while (static_cast<int>(entries.size()) > capacity) entries.pop_front();
  }
};

enum class Phase { train, unlearn_eliminate, unlearn_finetune, retrain,
                   federaser };

std::string phase_name(Phase phase);

struct RoundContext {
  int round{0};  // 1-based within the phase
  Phase phase{Phase::train};
  const ParamVector& global_model;
};

using RoundObserver = std::function<void(const RoundContext&)>;

// Runs `epochs` passes of mini-batch SGD-with-momentum from the global
// parameters over the client's train shard and returns the pseudo-gradient
// g = (global - local_final) / server_eta, compensated so that the
// reconstruction global - eta * g sits within one ulp of the raw SGD result.
// The client's protocol-level local model IS that reconstruction (only g
// crosses the wire), so a single-client aggregation step reproduces local
// training bit-exactly. `local_model_out`, when given, receives it.
ParamVector local_update(const ClientRecord& client,
                         const ParamVector& global_params,
                         const ModelSpec& spec, const FlParams& fl,
                         std::uint64_t batch_seed,
                         ParamVector* local_model_out = nullptr);

// Unweighted coordinate-wise mean, summed in list order.
ParamVector fedavg(const std::vector<ParamVector>& updates);

// global - eta * fedavg(updates).
ParamVector server_step(const ParamVector& global,
                        const std::vector<ParamVector>& updates, Scalar eta);

struct FederaserCheckpoint {
  int round{0};                           // 1-based training round
  ParamVector global;                     // model entering that round
  std::vector<int> retained_ids;          // canonical id order
  std::vector<ParamVector> retained_updates;
};

struct TrainingOptions {
  int rounds{60};
  int window_capacity{10};
  // History is kept only for clients flagged malicious (the short window);
  // retained-client history is stored only when the FedEraser baseline needs
  // it, at the given round period.
  std::optional<int> federaser_period;
  std::optional<ParamVector> initial_model;  // fresh init when absent
  Stream batch_stream{Stream::client_batch};
  Phase phase{Phase::train};
};

struct TrainingResult {
  ParamVector model;
  std::map<int, UpdateWindow> windows;  // malicious clients only
  std::vector<FederaserCheckpoint> federaser_history;
};

// The federated loop: every client computes its round update (trim clients
// replace theirs with crafted ones), malicious uploads are recorded into the
// per-client windows, and the server applies one aggregation step per round.
TrainingResult run_training(const std::vector<ClientRecord>& clients,
                            const ModelSpec& spec, const FlParams& fl,
                            const TrainingOptions& options,
                            std::uint64_t master_seed,
                            const RoundObserver& observer = nullptr);

// Plain FedAvg rounds over the retained clients starting from `model`.
// Batch seeds are drawn from `batch_stream` at rounds round_base+1, ...,
// which lets callers reproduce any segment of a longer schedule.
ParamVector run_finetune(const ParamVector& model,
                         const std::vector<ClientRecord>& retained,
                         int rounds, const ModelSpec& spec, const FlParams& fl,
                         std::uint64_t master_seed,
                         Stream batch_stream = Stream::unlearn_batch,
                         int round_base = 0, Phase phase = Phase::unlearn_finetune,
                         const RoundObserver& observer = nullptr);

}  // namespace faun

#endif  // FAUN_FL_HPP
