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

#ifndef FAUN_UNLEARN_HPP
#define FAUN_UNLEARN_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "faun/fl.hpp"
#include "faun/model.hpp"
#include "faun/types.hpp"
#include "faun/vec_ops.hpp"

namespace faun {

// Recovery hyperparameters. `window` is the per-client history length the
// server retained at detection; `eliminate_rounds` gates the adversarial
// phase; the remaining rounds are plain fine-tuning.
struct FaunConfig {
  Scalar epsilon{1.0};
  int pgd_steps{30};
  Scalar pgd_step_size{0.05};
  int window{10};
  int eliminate_rounds{10};      // T_a
  int total_unlearn_rounds{50};
  ExampleBatch proxy;

  void validate() const {
    if (!(epsilon > 0)) throw config_error("faun: epsilon must be > 0");
    if (pgd_steps < 1) throw config_error("faun: pgd_steps must be >= 1");
    if (!(pgd_step_size > 0)) {
      throw config_error("faun: pgd_step_size must be > 0");
    }
    if (eliminate_rounds < 0 || eliminate_rounds > total_unlearn_rounds) {
      throw config_error("faun: eliminate_rounds must be in [0, total]");
    }
  }
};

// One trace row per (round, malicious client) during elimination rounds and
// one proxy-loss tracking row per fine-tuning round. The CSV export of this
// trace is the artifact's loss-trajectory record.
struct TraceRow {
  int round{0};       // 0-based unlearning round t
  int client_id{-1};  // -1 on fine-tuning rows
  Scalar delta_norm{0};
  Scalar proxy_loss_pre{0};
  Scalar proxy_loss_post{0};
  Scalar gbar_norm{0};
  int lambda{0};
};

struct EliminationTrace {
  std::vector<TraceRow> rows;

  static std::string csv_header() {
    return "t,client_id,delta_norm,proxy_loss_pre,proxy_loss_post,"
           "gbar_norm,lambda";
  }
  void write_csv(const std::string& path) const;
};

// Arithmetic mean of all updates stored in the window.
ParamVector intra_client_average(const UpdateWindow& window);

struct PgdEval {
  Scalar loss;
  Vector grad;  // gradient of the objective w.r.t. delta
};

struct PgdResult {
  Vector delta;
  Scalar best_loss{0};
  Scalar loss_at_start{0};
  int best_step{0};
};

// Projected gradient ascent over the l2 ball of radius epsilon: delta starts
// at zero, every step moves by step_size along the unit-normalized objective
// gradient and projects back, and the best iterate seen (including the
// start) is returned. Guarantees best_loss >= loss_at_start.
template <typename Objective>
PgdResult pgd_ascent(Objective&& objective, Index dim, Scalar epsilon,
                     int steps, Scalar step_size) {
  if (!(epsilon > 0)) throw config_error("pgd_ascent: epsilon must be > 0");
  if (steps < 1) throw config_error("pgd_ascent: steps must be >= 1");
  if (!(step_size > 0)) {
    throw config_error("pgd_ascent: step_size must be > 0");
  }

  Vector delta = Vector::Zero(dim);
  PgdEval ev = objective(delta);
  if (!std::isfinite(ev.loss)) {
    throw numerical_error("pgd_ascent: non-finite loss at step 0");
  }

  PgdResult best;
  best.delta = delta;
  best.best_loss = ev.loss;
  best.loss_at_start = ev.loss;
  best.best_step = 0;

  for (int k = 1; k <= steps; ++k) {
    const Scalar grad_norm = ev.grad.norm();
    if (grad_norm > 0) {
      delta = project_l2_ball(
          (delta + (step_size / grad_norm) * ev.grad).eval(), epsilon);
    }
    ev = objective(delta);
    if (!std::isfinite(ev.loss)) {
      throw numerical_error("pgd_ascent: non-finite loss at step " +
                            std::to_string(k));
    }
    if (ev.loss > best.best_loss) {
      best.delta = delta;
      best.best_loss = ev.loss;
      best.best_step = k;
    }
  }
  return best;
}

struct PgdMaximizeResult {
  ParamVector delta;
  Scalar proxy_loss_pre{0};   // loss at delta = 0
  Scalar proxy_loss_post{0};  // loss at the returned delta
  int best_step{0};
};

// Worst-case refinement of one client's averaged update: maximizes the
// proxy loss of (w_hat - gbar - delta) over the epsilon ball.
PgdMaximizeResult pgd_maximize(const ParamVector& w_hat,
                               const ParamVector& gbar,
                               const ExampleBatch& proxy, Scalar epsilon,
                               int steps, Scalar step_size,
                               const ModelSpec& spec);

struct EliminationResult {
  ParamVector gbar_star;
  std::vector<TraceRow> rows;  // one per malicious client
};

// Builds the round's elimination update: per malicious client, the averaged
// window update plus its PGD perturbation against the current model, then
// the mean over clients (canonical id order).
EliminationResult elimination_update(const ParamVector& w_hat,
                                     const std::map<int, UpdateWindow>& windows,
                                     const FaunConfig& cfg,
                                     const ModelSpec& spec, int round);

// 1 for the first T_a unlearning rounds, 0 afterwards.
Scalar lambda_schedule(int t, int eliminate_rounds);

struct FaunResult {
  ParamVector model;
  EliminationTrace trace;
};

// The full recovery schedule: elimination rounds combine fresh benign
// aggregation with the adversarial elimination term; later rounds are plain
// fine-tuning on the retained clients.
FaunResult faun_unlearn(const ParamVector& poisoned_model,
                        const std::map<int, UpdateWindow>& windows,
                        const std::vector<ClientRecord>& retained,
                        const FaunConfig& cfg, const ModelSpec& spec,
                        const FlParams& fl, std::uint64_t master_seed,
                        const RoundObserver& observer = nullptr);

// Upper-bound baseline: fresh initialization, full training on the retained
// clients only.
ParamVector retrain_from_scratch(const std::vector<ClientRecord>& retained,
                                 const ModelSpec& spec, const FlParams& fl,
                                 int rounds, std::uint64_t master_seed,
                                 const RoundObserver& observer = nullptr);

// FedEraser-style calibrated replay over the sampled training history:
// at each stored round, fresh retained updates are rescaled to the stored
// updates' norms and aggregated.
ParamVector federaser_unlearn(
    const std::vector<FederaserCheckpoint>& history,
    const std::vector<ClientRecord>& retained, const ModelSpec& spec,
    const FlParams& fl, std::uint64_t master_seed,
    const RoundObserver& observer = nullptr);

}  // namespace faun

#endif  // FAUN_UNLEARN_HPP
