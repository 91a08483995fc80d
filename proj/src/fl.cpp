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

#include "faun/fl.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace faun {

std::string phase_name(Phase phase) {
  switch (phase) {
    case Phase::train: return "train";
    case Phase::unlearn_eliminate: return "unlearn_eliminate";
    case Phase::unlearn_finetune: return "unlearn_finetune";
    case Phase::retrain: return "retrain";
    case Phase::federaser: return "federaser";
  }
  return "unknown";
}

ParamVector local_update(const ClientRecord& client,
                         const ParamVector& global_params,
                         const ModelSpec& spec, const FlParams& fl,
                         std::uint64_t batch_seed,
                         ParamVector* local_model_out) {
  const ExampleBatch& shard = client.train_shard;
  if (shard.n() == 0) {
    throw config_error("local_update: client " + std::to_string(client.id) +
                       " has an empty shard");
  }
  if (fl.batch_size < 1) throw config_error("local_update: batch_size >= 1");
  if (!(fl.server_eta > 0)) throw config_error("local_update: server_eta > 0");

  ParamVector local = global_params;
  auto opt = OptimizerState::make(fl.learning_rate, fl.momentum, local.dim());
  auto engine = make_engine(batch_seed);

  std::vector<int> order(static_cast<std::size_t>(shard.n()));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < fl.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), engine);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(fl.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(fl.batch_size));
      std::vector<int> batch_idx(order.begin() + static_cast<long>(start),
                                 order.begin() + static_cast<long>(end));
      const ExampleBatch mini = shard.select(batch_idx);
      const ParamVector g = gradient(local, spec, mini);
      sgd_step(local, g, opt);
    }
  }

  // Pseudo-gradient with one compensation pass: after it, the reconstruction
  // global - eta * g is within one ulp of the raw SGD result (a coordinate
  // that lands near zero may not be representable as an exact difference).
  ParamVector update = global_params;
  update.values = (global_params.values - local.values) / fl.server_eta;
  for (int iter = 0; iter < 2; ++iter) {
    const Vector rebuilt =
        global_params.values - fl.server_eta * update.values;
    if ((rebuilt.array() == local.values.array()).all()) break;
    const Vector corrected =
        update.values + (rebuilt - local.values) / fl.server_eta;
    if ((corrected.array() == update.values.array()).all()) break;
    update.values = corrected;
  }
  if (local_model_out != nullptr) {
    *local_model_out = global_params;
    local_model_out->values =
        global_params.values - fl.server_eta * update.values;
  }
  return update;
}

ParamVector fedavg(const std::vector<ParamVector>& updates) {
  if (updates.empty()) throw config_error("fedavg: empty update list");
  ParamVector sum = updates.front();
  for (std::size_t i = 1; i < updates.size(); ++i) {
    sum += updates[i];  // dimension checked by operator+=
  }
  sum.values /= static_cast<Scalar>(updates.size());
  return sum;
}

ParamVector server_step(const ParamVector& global,
                        const std::vector<ParamVector>& updates, Scalar eta) {
  ParamVector agg = fedavg(updates);
  if (agg.dim() != global.dim()) {
    throw config_error("server_step: update dimension mismatch");
  }
  ParamVector next = global;
  next.values -= eta * agg.values;
  return next;
}

namespace {

bool is_trim(const ClientRecord& c) {
  return c.role == Role::malicious && c.attack_kind() == AttackKind::trim;
}

}  // namespace

TrainingResult run_training(const std::vector<ClientRecord>& clients,
                            const ModelSpec& spec, const FlParams& fl,
                            const TrainingOptions& options,
                            std::uint64_t master_seed,
                            const RoundObserver& observer) {
  if (clients.empty()) throw config_error("run_training: no clients");
  for (std::size_t i = 1; i < clients.size(); ++i) {
    if (clients[i].id <= clients[i - 1].id) {
      throw config_error(
          "run_training: client ids must be unique and in increasing order");
    }
  }

  TrainingResult result;
  result.model = options.initial_model
                     ? *options.initial_model
                     : init_params(spec, derive_seed(master_seed,
                                                     Stream::model_init));

  std::vector<const ClientRecord*> trim_clients;
  for (const auto& c : clients) {
    if (c.role == Role::malicious) {
      result.windows[c.id] =
          UpdateWindow{c.id, options.window_capacity, {}};
    }
    if (is_trim(c)) trim_clients.push_back(&c);
  }

  for (int r = 1; r <= options.rounds; ++r) {
    std::vector<ParamVector> updates(clients.size());
    std::vector<ParamVector> benign_updates;
    for (std::size_t i = 0; i < clients.size(); ++i) {
      const auto& c = clients[i];
      if (is_trim(c)) continue;
      // Benign clients and backdoor clients run ordinary local training
      // (the latter on their poisoned shard).
      updates[i] = local_update(
          c, result.model, spec, fl,
          derive_seed(master_seed, options.batch_stream,
                      static_cast<std::uint64_t>(r),
                      static_cast<std::uint64_t>(c.id)));
      if (c.role == Role::benign) benign_updates.push_back(updates[i]);
    }

    if (!trim_clients.empty()) {
      // All trim clients share the attack spec bound at setup.
      const AttackSpec& spec_trim = *trim_clients.front()->attack;
      const auto crafted = craft_trim_updates(
          benign_updates, static_cast<int>(trim_clients.size()),
          spec_trim.trim_scale, spec_trim.trim_jitter,
          derive_seed(master_seed, Stream::attack_jitter,
                      static_cast<std::uint64_t>(r)));
      std::size_t next = 0;
      for (std::size_t i = 0; i < clients.size(); ++i) {
        if (is_trim(clients[i])) updates[i] = crafted[next++];
      }
    }

    for (std::size_t i = 0; i < clients.size(); ++i) {
      if (clients[i].role == Role::malicious) {
        result.windows[clients[i].id].push(r, updates[i]);
      }
    }

    if (options.federaser_period &&
        (r - 1) % *options.federaser_period == 0) {
      FederaserCheckpoint cp;
      cp.round = r;
      cp.global = result.model;
      for (std::size_t i = 0; i < clients.size(); ++i) {
        if (clients[i].role == Role::benign) {
          cp.retained_ids.push_back(clients[i].id);
          cp.retained_updates.push_back(updates[i]);
        }
      }
      result.federaser_history.push_back(std::move(cp));
    }

    result.model = server_step(result.model, updates, fl.server_eta);
    if (observer) observer({r, options.phase, result.model});
  }
  return result;
}

ParamVector run_finetune(const ParamVector& model,
                         const std::vector<ClientRecord>& retained,
                         int rounds, const ModelSpec& spec, const FlParams& fl,
                         std::uint64_t master_seed, Stream batch_stream,
                         int round_base, Phase phase,
                         const RoundObserver& observer) {
  if (retained.empty()) throw config_error("run_finetune: no retained clients");
  ParamVector w = model;
  for (int r = 1; r <= rounds; ++r) {
    std::vector<ParamVector> updates;
    updates.reserve(retained.size());
    for (const auto& c : retained) {
      updates.push_back(local_update(
          c, w, spec, fl,
          derive_seed(master_seed, batch_stream,
                      static_cast<std::uint64_t>(round_base + r),
                      static_cast<std::uint64_t>(c.id))));
    }
    w = server_step(w, updates, fl.server_eta);
    if (observer) observer({round_base + r, phase, w});
  }
  return w;
}

}  // namespace faun
