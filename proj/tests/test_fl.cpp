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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "faun/metrics.hpp"
#include "oracles.hpp"

namespace faun {
namespace {

const ModelSpec kSpec{.input_dim = 6, .hidden_dims = {5}, .num_classes = 3};

ClientRecord make_client(int id, Index n, std::uint64_t seed,
                         Role role = Role::benign) {
  ClientRecord c;
  c.id = id;
  c.shard = make_synthetic(3, 6, n, 2.0, seed);
  c.train_shard = c.shard;
  c.role = role;
  return c;
}

ParamVector random_update(Index dim, std::uint64_t seed) {
  ParamVector u;
  u.values.resize(dim);
  auto engine = make_engine(seed);
  std::normal_distribution<Scalar> normal;
  for (Index i = 0; i < dim; ++i) u.values(i) = normal(engine);
  return u;
}

// Replays local_update's documented procedure: per-epoch shuffle with the
// batch-seed engine, mini-batches in order, SGD with momentum.
ParamVector reference_local_sgd(const ClientRecord& client,
                                const ParamVector& global,
                                const ModelSpec& spec, const FlParams& fl,
                                std::uint64_t batch_seed) {
  ParamVector local = global;
  auto opt = OptimizerState::make(fl.learning_rate, fl.momentum, local.dim());
  auto engine = make_engine(batch_seed);
  std::vector<int> order(static_cast<std::size_t>(client.train_shard.n()));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < fl.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), engine);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(fl.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(fl.batch_size));
      const std::vector<int> idx(order.begin() + static_cast<long>(start),
                                 order.begin() + static_cast<long>(end));
      sgd_step(local, gradient(local, spec, client.train_shard.select(idx)),
               opt);
    }
  }
  return local;
}

TEST(LocalUpdate, SingleClientServerStepReproducesLocalTrainingBitExactly) {
  const ClientRecord client = make_client(0, 37, 3);
  const ParamVector global = init_params(kSpec, 5);
  FlParams fl;
  fl.local_epochs = 3;
  fl.batch_size = 8;
  fl.server_eta = 1.0;

  const std::uint64_t batch_seed = derive_seed(9, Stream::client_batch, 1, 0);
  ParamVector local_model;
  const ParamVector update =
      local_update(client, global, kSpec, fl, batch_seed, &local_model);
  const ParamVector stepped = server_step(global, {update}, fl.server_eta);

  // Eq. 1 with a single client lands exactly on the client's local model.
  EXPECT_TRUE((stepped.values.array() == local_model.values.array()).all());

  // And that model is the raw SGD result up to reconstruction rounding.
  const ParamVector raw_sgd =
      reference_local_sgd(client, global, kSpec, fl, batch_seed);
  EXPECT_LT((local_model.values - raw_sgd.values).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(LocalUpdate, ZeroEpochsGiveZeroUpdate) {
  const ClientRecord client = make_client(0, 10, 4);
  const ParamVector global = init_params(kSpec, 6);
  FlParams fl;
  fl.local_epochs = 0;
  const ParamVector update = local_update(client, global, kSpec, fl, 1);
  EXPECT_TRUE((update.values.array() == 0).all());
}

TEST(LocalUpdate, DeterministicUnderSeed) {
  const ClientRecord client = make_client(0, 25, 7);
  const ParamVector global = init_params(kSpec, 8);
  const FlParams fl;
  const ParamVector a = local_update(client, global, kSpec, fl, 42);
  const ParamVector b = local_update(client, global, kSpec, fl, 42);
  EXPECT_TRUE((a.values.array() == b.values.array()).all());
  const ParamVector c = local_update(client, global, kSpec, fl, 43);
  EXPECT_FALSE((a.values.array() == c.values.array()).all());
}

TEST(LocalUpdate, EmptyShardThrows) {
  ClientRecord client;
  client.id = 0;
  client.train_shard.features.resize(0, 6);
  client.train_shard.labels.resize(0);
  EXPECT_THROW(local_update(client, init_params(kSpec, 1), kSpec, {}, 1),
               config_error);
}

TEST(Fedavg, IdenticalUpdatesAverageToThemselves) {
  const ParamVector g = random_update(11, 2);
  const ParamVector avg = fedavg({g, g, g, g});
  EXPECT_LT((avg.values - g.values).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fedavg, OppositePairCancels) {
  const ParamVector g = random_update(11, 3);
  ParamVector neg = g;
  neg.values = -neg.values;
  EXPECT_TRUE((fedavg({g, neg}).values.array() == 0).all());
}

// Scalar-summation oracle.
TEST(Fedavg, ThreeRandomVectorsMatchScalarOracle) {
  const std::vector<ParamVector> updates{random_update(17, 4),
                                         random_update(17, 5),
                                         random_update(17, 6)};
  std::vector<std::vector<Scalar>> raw;
  for (const auto& u : updates) {
    raw.emplace_back(u.values.data(), u.values.data() + u.values.size());
  }
  const auto expected = testing::scalar_mean(raw);
  const ParamVector actual = fedavg(updates);
  for (Index i = 0; i < 17; ++i) {
    EXPECT_NEAR(actual.values(i), expected[static_cast<std::size_t>(i)],
                1e-12);
  }
}

TEST(Fedavg, PermutationInvariantWithinTolerance) {
  std::vector<ParamVector> updates;
  for (int i = 0; i < 9; ++i) updates.push_back(random_update(23, 10 + i));
  const ParamVector canonical = fedavg(updates);

  auto engine = make_engine(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(updates.begin(), updates.end(), engine);
    const ParamVector permuted = fedavg(updates);
    EXPECT_LT((permuted.values - canonical.values).cwiseAbs().maxCoeff(),
              1e-12);
  }

  // Canonical order twice: bit-identical.
  std::sort(updates.begin(), updates.end(),
            [](const ParamVector& a, const ParamVector& b) {
              return a.values(0) < b.values(0);
            });
  const ParamVector once = fedavg(updates);
  const ParamVector twice = fedavg(updates);
  EXPECT_TRUE((once.values.array() == twice.values.array()).all());
}

TEST(Fedavg, EmptyListThrows) {
  EXPECT_THROW(fedavg({}), config_error);
  EXPECT_THROW(fedavg({random_update(4, 1), random_update(5, 2)}),
               config_error);
}

TEST(ServerStep, Identities) {
  const ParamVector global = random_update(9, 20);
  const ParamVector zero = [&] {
    ParamVector z = global;
    z.values.setZero();
    return z;
  }();
  EXPECT_TRUE((server_step(global, {zero, zero}, 0.7).values.array() ==
               global.values.array())
                  .all());

  const ParamVector g = random_update(9, 21);
  EXPECT_TRUE((server_step(global, {g}, 0.0).values.array() ==
               global.values.array())
                  .all());

  const ParamVector stepped = server_step(global, {g}, 1.0);
  EXPECT_TRUE((stepped.values.array() ==
               (global.values - g.values).array())
                  .all());
}

std::vector<ClientRecord> make_population(int n, int malicious,
                                          std::uint64_t seed) {
  std::vector<ClientRecord> clients;
  for (int id = 0; id < n; ++id) {
    clients.push_back(make_client(
        id, 30, seed + static_cast<std::uint64_t>(id),
        id < malicious ? Role::malicious : Role::benign));
    if (id < malicious) {
      AttackSpec attack;
      attack.kind = AttackKind::trim;
      clients.back().attack = attack;
    }
  }
  return clients;
}

TEST(RunTraining, NoMaliciousMeansNoWindows) {
  const auto clients = make_population(4, 0, 100);
  TrainingOptions options;
  options.rounds = 3;
  const TrainingResult result =
      run_training(clients, kSpec, {}, options, 7);
  EXPECT_TRUE(result.windows.empty());
  EXPECT_TRUE(result.federaser_history.empty());
  EXPECT_TRUE(result.model.all_finite());
}

TEST(RunTraining, WindowHoldsOnlyREntriesWhenRBelowCapacity) {
  const auto clients = make_population(4, 1, 200);
  TrainingOptions options;
  options.rounds = 4;
  options.window_capacity = 10;
  const TrainingResult result =
      run_training(clients, kSpec, {}, options, 8);
  const auto& window = result.windows.at(0);
  ASSERT_EQ(window.entries.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(window.entries[static_cast<std::size_t>(i)].first, i + 1);
  }
}

// Full-log cross-check: a capacity >= R run records every round; the
// capacity R_m run must hold exactly its tail (rounds R-R_m+1..R).
TEST(RunTraining, WindowIsExactTailOfFullLog) {
  const auto clients = make_population(5, 2, 300);
  const int rounds = 13;
  const int window = 4;

  TrainingOptions full_options;
  full_options.rounds = rounds;
  full_options.window_capacity = rounds;
  const TrainingResult full = run_training(clients, kSpec, {}, full_options, 9);

  TrainingOptions options;
  options.rounds = rounds;
  options.window_capacity = window;
  const TrainingResult tail = run_training(clients, kSpec, {}, options, 9);

  for (const auto& [id, w] : tail.windows) {
    ASSERT_EQ(w.entries.size(), static_cast<std::size_t>(window));
    const auto& full_entries = full.windows.at(id).entries;
    ASSERT_EQ(full_entries.size(), static_cast<std::size_t>(rounds));
    for (int i = 0; i < window; ++i) {
      const auto& [round, update] = w.entries[static_cast<std::size_t>(i)];
      EXPECT_EQ(round, rounds - window + 1 + i);
      const auto& [full_round, full_update] =
          full_entries[static_cast<std::size_t>(rounds - window + i)];
      EXPECT_EQ(round, full_round);
      EXPECT_TRUE(
          (update.values.array() == full_update.values.array()).all());
    }
  }
}

TEST(RunTraining, BitExactDeterminismUnderSeed) {
  const auto clients = make_population(5, 2, 400);
  TrainingOptions options;
  options.rounds = 6;
  const TrainingResult a = run_training(clients, kSpec, {}, options, 12);
  const TrainingResult b = run_training(clients, kSpec, {}, options, 12);
  EXPECT_TRUE((a.model.values.array() == b.model.values.array()).all());
  for (const auto& [id, w] : a.windows) {
    const auto& other = b.windows.at(id).entries;
    for (std::size_t i = 0; i < w.entries.size(); ++i) {
      EXPECT_TRUE((w.entries[i].second.values.array() ==
                   other[i].second.values.array())
                      .all());
    }
  }
}

TEST(RunTraining, ObserverSeesEveryRoundInOrder) {
  const auto clients = make_population(3, 0, 500);
  TrainingOptions options;
  options.rounds = 5;
  std::vector<int> rounds_seen;
  run_training(clients, kSpec, {}, options, 13,
               [&](const RoundContext& ctx) {
                 rounds_seen.push_back(ctx.round);
                 EXPECT_EQ(ctx.phase, Phase::train);
               });
  EXPECT_EQ(rounds_seen, (std::vector<int>{1, 2, 3, 4, 5}));
}

TEST(RunFinetune, ZeroRoundsReturnsModelUnchanged) {
  const auto clients = make_population(3, 0, 600);
  const ParamVector model = init_params(kSpec, 3);
  const ParamVector out = run_finetune(model, clients, 0, kSpec, {}, 5);
  EXPECT_TRUE((out.values.array() == model.values.array()).all());
}

// Oracle cross-check: with the training batch stream and an injected initial
// model, fine-tuning is the same computation as run_training on the
// retained population.
TEST(RunFinetune, EquivalentToRunTrainingWithInjectedModel) {
  const auto clients = make_population(4, 0, 700);
  const ParamVector initial = init_params(kSpec, 4);
  const std::uint64_t seed = 77;
  const int rounds = 4;

  TrainingOptions options;
  options.rounds = rounds;
  options.initial_model = initial;
  const TrainingResult trained =
      run_training(clients, kSpec, {}, options, seed);

  const ParamVector finetuned =
      run_finetune(initial, clients, rounds, kSpec, {}, seed,
                   Stream::client_batch, 0, Phase::train);

  EXPECT_TRUE(
      (trained.model.values.array() == finetuned.values.array()).all());
}

TEST(RunFinetune, AccuracyTrendsUpOnEasyData) {
  // Separable blobs: accuracy after each of the first rounds is
  // non-decreasing (fresh model, easy problem).
  // One shared corpus, partitioned among clients; test split from the same
  // class geometry.
  const ExampleBatch corpus = make_synthetic(3, 6, 480, 6.0, 800);
  const ProxySplit split = split_proxy(corpus, 300, 801);
  const ExampleBatch test = split.proxy.batch;
  const PartitionPlan plan =
      partition(split.rest, 3, PartitionMode::iid, 0.5, 802);
  std::vector<ClientRecord> clients;
  for (int id = 0; id < 3; ++id) {
    ClientRecord c;
    c.id = id;
    c.shard = extract_shard(split.rest, plan, id);
    c.train_shard = c.shard;
    clients.push_back(std::move(c));
  }
  const ParamVector initial = init_params(kSpec, 5);

  std::vector<Scalar> accs{accuracy(initial, kSpec, test)};
  run_finetune(initial, clients, 5, kSpec, {}, 6, Stream::unlearn_batch, 0,
               Phase::unlearn_finetune, [&](const RoundContext& ctx) {
                 accs.push_back(accuracy(ctx.global_model, kSpec, test));
               });
  // Monotone trend with slack for momentum overshoot within a round.
  for (std::size_t i = 1; i < accs.size(); ++i) {
    EXPECT_GE(accs[i], accs[i - 1] - 0.03) << "round " << i;
  }
  EXPECT_GT(accs.back(), 0.95);
  EXPECT_GT(accs.back(), accs.front());
}

TEST(RunFinetune, NoRetainedClientsThrows) {
  EXPECT_THROW(run_finetune(init_params(kSpec, 1), {}, 3, kSpec, {}, 1),
               config_error);
}

}  // namespace
}  // namespace faun
