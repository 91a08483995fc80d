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

#include "faun/unlearn.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

namespace faun {

void EliminationTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw data_error("trace: cannot write " + path);
  out << csv_header() << "\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.round << ',' << r.client_id << ',' << r.delta_norm << ','
        << r.proxy_loss_pre << ',' << r.proxy_loss_post << ',' << r.gbar_norm
        << ',' << r.lambda << "\n";
  }
}

ParamVector intra_client_average(const UpdateWindow& window) {
  if (window.entries.empty()) {
    throw config_error("intra_client_average: empty window for client " +
                       std::to_string(window.client_id));
  }
  ParamVector sum = window.entries.front().second;
  for (std::size_t i = 1; i < window.entries.size(); ++i) {
    sum += window.entries[i].second;
  }
  sum.values /= static_cast<Scalar>(window.entries.size());
  return sum;
}

PgdMaximizeResult pgd_maximize(const ParamVector& w_hat,
                               const ParamVector& gbar,
                               const ExampleBatch& proxy, Scalar epsilon,
                               int steps, Scalar step_size,
                               const ModelSpec& spec) {
  if (proxy.n() == 0) throw config_error("pgd_maximize: empty proxy dataset");
  if (gbar.dim() != w_hat.dim()) {
    throw config_error("pgd_maximize: update dimension mismatch");
  }

  const Vector center = w_hat.values - gbar.values;
  ParamVector probe = w_hat;  // carries the shape table

  // Ascent in delta is descent through w = center - delta, so the objective
  // gradient w.r.t. delta is the negated model gradient.
  auto objective = [&](const Vector& delta) -> PgdEval {
    probe.values = center - delta;
    LossGrad lg = loss_and_gradient(probe, spec, proxy);
    return {lg.loss, -lg.grad.values};
  };

  const PgdResult r =
      pgd_ascent(objective, w_hat.dim(), epsilon, steps, step_size);

  PgdMaximizeResult out;
  out.delta = w_hat;
  out.delta.values = r.delta;
  out.proxy_loss_pre = r.loss_at_start;
  out.proxy_loss_post = r.best_loss;
  out.best_step = r.best_step;
  return out;
}

EliminationResult elimination_update(const ParamVector& w_hat,
                                     const std::map<int, UpdateWindow>& windows,
                                     const FaunConfig& cfg,
                                     const ModelSpec& spec, int round) {
  if (windows.empty()) {
    throw config_error("elimination_update: no malicious history to unlearn");
  }
  cfg.validate();

  EliminationResult result;
  Vector sum = Vector::Zero(w_hat.dim());
  for (const auto& [client_id, window] : windows) {  // canonical id order
    const ParamVector gbar = intra_client_average(window);
    const PgdMaximizeResult pgd =
        pgd_maximize(w_hat, gbar, cfg.proxy, cfg.epsilon, cfg.pgd_steps,
                     cfg.pgd_step_size, spec);
    sum += gbar.values + pgd.delta.values;

    TraceRow row;
    row.round = round;
    row.client_id = client_id;
    row.delta_norm = pgd.delta.values.norm();
    row.proxy_loss_pre = pgd.proxy_loss_pre;
    row.proxy_loss_post = pgd.proxy_loss_post;
    row.lambda = 1;
    result.rows.push_back(row);
  }

  result.gbar_star = w_hat;  // shape template
  result.gbar_star.values = sum / static_cast<Scalar>(windows.size());
  const Scalar gbar_norm = result.gbar_star.values.norm();
  for (auto& row : result.rows) row.gbar_norm = gbar_norm;
  return result;
}

Scalar lambda_schedule(int t, int eliminate_rounds) {
  return (t >= 0 && t < eliminate_rounds) ? Scalar{1} : Scalar{0};
}

FaunResult faun_unlearn(const ParamVector& poisoned_model,
                        const std::map<int, UpdateWindow>& windows,
                        const std::vector<ClientRecord>& retained,
                        const FaunConfig& cfg, const ModelSpec& spec,
                        const FlParams& fl, std::uint64_t master_seed,
                        const RoundObserver& observer) {
  cfg.validate();
  if (retained.empty()) throw config_error("faun_unlearn: no retained clients");
  if (cfg.eliminate_rounds > 0 && windows.empty()) {
    throw config_error("faun_unlearn: nothing to unlearn (no histories)");
  }

  FaunResult result;
  result.model = poisoned_model;

  for (int t = 0; t < cfg.total_unlearn_rounds; ++t) {
    std::vector<ParamVector> updates;
    updates.reserve(retained.size());
    for (const auto& c : retained) {
      updates.push_back(local_update(
          c, result.model, spec, fl,
          derive_seed(master_seed, Stream::unlearn_batch,
                      static_cast<std::uint64_t>(t + 1),
                      static_cast<std::uint64_t>(c.id))));
    }

    const Scalar lambda = lambda_schedule(t, cfg.eliminate_rounds);
    if (lambda == Scalar{1}) {
      EliminationResult elim =
          elimination_update(result.model, windows, cfg, spec, t);
      result.model = server_step(result.model, updates, fl.server_eta);
      result.model.values -= elim.gbar_star.values;
      result.trace.rows.insert(result.trace.rows.end(), elim.rows.begin(),
                               elim.rows.end());
      if (observer) {
        observer({t + 1, Phase::unlearn_eliminate, result.model});
      }
    } else {
      result.model = server_step(result.model, updates, fl.server_eta);
      // Proxy-loss tracking row for the trajectory export.
      const Scalar proxy_loss =
          forward(result.model, spec, cfg.proxy).loss;
      TraceRow row;
      row.round = t;
      row.proxy_loss_pre = proxy_loss;
      row.proxy_loss_post = proxy_loss;
      result.trace.rows.push_back(row);
      if (observer) {
        observer({t + 1, Phase::unlearn_finetune, result.model});
      }
    }
  }
  return result;
}

ParamVector retrain_from_scratch(const std::vector<ClientRecord>& retained,
                                 const ModelSpec& spec, const FlParams& fl,
                                 int rounds, std::uint64_t master_seed,
                                 const RoundObserver& observer) {
  TrainingOptions options;
  options.rounds = rounds;
  options.phase = Phase::retrain;
  return run_training(retained, spec, fl, options, master_seed, observer)
      .model;
}

ParamVector federaser_unlearn(
    const std::vector<FederaserCheckpoint>& history,
    const std::vector<ClientRecord>& retained, const ModelSpec& spec,
    const FlParams& fl, std::uint64_t master_seed,
    const RoundObserver& observer) {
  if (history.empty()) {
    throw config_error("federaser_unlearn: no stored history");
  }
  if (retained.empty()) {
    throw config_error("federaser_unlearn: no retained clients");
  }

  ParamVector w = history.front().global;
  int step = 0;
  for (const auto& cp : history) {
    std::vector<ParamVector> calibrated;
    calibrated.reserve(retained.size());
    for (const auto& c : retained) {
      const auto it = std::find(cp.retained_ids.begin(),
                                cp.retained_ids.end(), c.id);
      if (it == cp.retained_ids.end()) {
        throw config_error("federaser_unlearn: missing history for client " +
                           std::to_string(c.id) + " at round " +
                           std::to_string(cp.round));
      }
      const auto pos = static_cast<std::size_t>(
          std::distance(cp.retained_ids.begin(), it));
      const ParamVector& historical = cp.retained_updates[pos];

      ParamVector fresh = local_update(
          c, w, spec, fl,
          derive_seed(master_seed, Stream::federaser_batch,
                      static_cast<std::uint64_t>(cp.round),
                      static_cast<std::uint64_t>(c.id)));

      // Historical norm, fresh direction; zero fresh updates stay zero.
      const Scalar fresh_norm = fresh.values.norm();
      if (fresh_norm > 0) {
        fresh.values *= historical.values.norm() / fresh_norm;
      } else {
        fresh.values.setZero();
      }
      calibrated.push_back(std::move(fresh));
    }
    w = server_step(w, calibrated, fl.server_eta);
    ++step;
    if (observer) observer({step, Phase::federaser, w});
  }
  return w;
}

}  // namespace faun
