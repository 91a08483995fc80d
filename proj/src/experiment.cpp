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

#include "faun/experiment.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace faun {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

json record_to_json(const MetricsRecord& r) {
  json j;
  j["round"] = r.round;
  j["phase"] = r.phase;
  j["acc"] = r.acc;
  j["ma"] = r.ma;
  j["asr"] = r.asr ? json(*r.asr) : json(nullptr);
  j["misr"] = r.misr ? json(*r.misr) : json(nullptr);
  j["mean_loss"] = r.mean_loss;
  j["elapsed_ms"] = r.elapsed_ms;
  return j;
}

// Evaluates the model against the prepared test data and appends a record.
class Evaluator {
 public:
  Evaluator(const PreparedExperiment& prep,
            std::vector<MetricsRecord>& records)
      : prep_(prep), records_(records) {}

  void start_phase() { phase_start_ = Clock::now(); }

  void evaluate(int round, Phase phase, const ParamVector& model) {
    MetricsRecord rec;
    rec.round = round;
    rec.phase = phase_name(phase);
    rec.acc = accuracy(model, prep_.spec, prep_.test);
    rec.ma = rec.acc;
    rec.mean_loss = forward(model, prep_.spec, prep_.test).loss;
    if (prep_.trigger) {
      rec.asr =
          attack_success_rate(model, prep_.spec, prep_.test, *prep_.trigger);
    }
    if (prep_.member_set.n() > 0) {
      rec.misr = membership_inference_sr(model, prep_.spec, prep_.member_set,
                                         prep_.test);
    }
    rec.elapsed_ms = seconds_since(phase_start_) * 1e3;
    records_.push_back(std::move(rec));
  }

 private:
  const PreparedExperiment& prep_;
  std::vector<MetricsRecord>& records_;
  Clock::time_point phase_start_;
};

json final_record_json(const std::vector<MetricsRecord>& records,
                       const std::vector<std::string>& phases) {
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    for (const auto& p : phases) {
      if (it->phase == p) {
        json j = record_to_json(*it);
        j.erase("elapsed_ms");  // wall-clock lives next to it in the summary
        return j;
      }
    }
  }
  return json(nullptr);
}

}  // namespace

PreparedExperiment prepare_experiment(const ExperimentConfig& config) {
  validate(config);
  PreparedExperiment prep;

  ExampleBatch pool;
  if (config.dataset.kind == DatasetKind::synthetic) {
    // Train and test must share class geometry: draw one corpus, then carve
    // the test split off class-stratified.
    const ExampleBatch full = make_synthetic(
        config.dataset.num_classes, config.dataset.input_dim,
        config.dataset.train_examples + config.dataset.test_examples,
        config.dataset.class_separation,
        derive_seed(config.seed, Stream::dataset));
    ProxySplit test_split =
        split_proxy(full, config.dataset.test_examples,
                    derive_seed(config.seed, Stream::test_split));
    prep.test = std::move(test_split.proxy.batch);
    pool = std::move(test_split.rest);
  } else {
    pool = load_idx_images(config.dataset.train_images,
                           config.dataset.train_labels,
                           config.dataset.train_examples);
    prep.test = load_idx_images(config.dataset.test_images,
                                config.dataset.test_labels,
                                config.dataset.test_examples);
    if (pool.n() <= config.dataset.proxy_size) {
      throw config_error("dataset: idx train set smaller than proxy_size");
    }
  }

  prep.spec.input_dim = pool.width();
  prep.spec.hidden_dims = config.model.hidden_dims;
  prep.spec.num_classes = config.dataset.kind == DatasetKind::synthetic
                              ? config.dataset.num_classes
                              : pool.labels.maxCoeff() + 1;
  prep.spec.validate();

  ProxySplit proxy_split =
      split_proxy(pool, config.dataset.proxy_size,
                  derive_seed(config.seed, Stream::proxy_split));
  prep.proxy = std::move(proxy_split.proxy.batch);
  const ExampleBatch client_pool = std::move(proxy_split.rest);

  const PartitionPlan plan =
      partition(client_pool, config.fl.clients, config.fl.partition,
                config.fl.alpha, derive_seed(config.seed, Stream::partition));

  // The first `malicious` ids are the detected clients.
  std::vector<int> member_rows;
  for (int id = 0; id < config.fl.clients; ++id) {
    ClientRecord c;
    c.id = id;
    c.shard = extract_shard(client_pool, plan, id);
    c.train_shard = c.shard;
    if (id < config.fl.malicious && config.attack.kind != AttackKind::none) {
      c.role = Role::malicious;
      c.attack = config.attack;
      if (config.attack.kind == AttackKind::backdoor) {
        // Poisoned shard is materialized once and reused every round.
        c.train_shard = poison_backdoor(
            c.shard, config.attack.poison_ratio, config.attack.trigger,
            derive_seed(config.seed, Stream::poison_select,
                        static_cast<std::uint64_t>(id)));
      }
      for (int row : plan.client_indices(id)) member_rows.push_back(row);
    } else if (id < config.fl.malicious) {
      // Malicious set configured but no attack bound: clients behave
      // benignly yet are still the ones removed at detection.
      c.role = Role::malicious;
    }
    prep.clients.push_back(std::move(c));
  }
  for (const auto& c : prep.clients) {
    if (c.role == Role::benign) prep.retained.push_back(c);
  }

  if (!member_rows.empty()) {
    prep.member_set = client_pool.select(member_rows);
  }
  if (config.attack.kind == AttackKind::backdoor) {
    prep.trigger = config.attack.trigger;
  }
  return prep;
}

ExperimentResult run_pipeline(const ExperimentConfig& config) {
  const PreparedExperiment prep = prepare_experiment(config);
  ExperimentResult result;
  Evaluator evaluator(prep, result.records);

  // ---- training (poisoning) phase ----
  TrainingOptions train_options;
  train_options.rounds = config.fl.rounds;
  train_options.window_capacity = config.unlearn.window;
  if (config.unlearn.method == Method::federaser) {
    train_options.federaser_period = config.unlearn.federaser_period;
  }

  const auto train_start = Clock::now();
  evaluator.start_phase();
  TrainingResult training = run_training(
      prep.clients, prep.spec, config.fl.params, train_options, config.seed,
      [&](const RoundContext& ctx) {
        if (ctx.round % config.eval.train_cadence == 0 ||
            ctx.round == config.fl.rounds) {
          evaluator.evaluate(ctx.round, ctx.phase, ctx.global_model);
        }
      });
  result.train_seconds = seconds_since(train_start);
  result.poisoned_model = training.model;
  result.recovered_model = training.model;

  // ---- recovery phase ----
  const auto recover_start = Clock::now();
  evaluator.start_phase();
  const auto unlearn_observer = [&](const RoundContext& ctx) {
    if (ctx.round % config.eval.unlearn_cadence == 0) {
      evaluator.evaluate(ctx.round, ctx.phase, ctx.global_model);
    }
  };

  switch (config.unlearn.method) {
    case Method::none:
      break;
    case Method::faun: {
      FaunConfig fc;
      fc.epsilon = config.unlearn.epsilon;
      fc.pgd_steps = config.unlearn.pgd_steps;
      fc.pgd_step_size = config.unlearn.pgd_step_size;
      fc.window = config.unlearn.window;
      fc.eliminate_rounds = config.unlearn.eliminate_rounds;
      fc.total_unlearn_rounds = config.unlearn.total_rounds;
      fc.proxy = prep.proxy;
      FaunResult fr =
          faun_unlearn(training.model, training.windows, prep.retained, fc,
                       prep.spec, config.fl.params, config.seed,
                       unlearn_observer);
      result.recovered_model = std::move(fr.model);
      result.trace = std::move(fr.trace);
      break;
    }
    case Method::retrain:
      result.recovered_model = retrain_from_scratch(
          prep.retained, prep.spec, config.fl.params, config.fl.rounds,
          config.seed, unlearn_observer);
      break;
    case Method::finetune_only:
      result.recovered_model = run_finetune(
          training.model, prep.retained, config.unlearn.total_rounds,
          prep.spec, config.fl.params, config.seed, Stream::unlearn_batch, 0,
          Phase::unlearn_finetune, unlearn_observer);
      break;
    case Method::federaser:
      result.recovered_model = federaser_unlearn(
          training.federaser_history, prep.retained, prep.spec,
          config.fl.params, config.seed, unlearn_observer);
      break;
  }
  result.recover_seconds = seconds_since(recover_start);

  // ---- summary ----
  json summary;
  summary["version"] = kVersion;
  summary["config_hash"] = config_hash(config);
  summary["dataset_hash"] = dataset_hash(config);
  summary["method"] = method_name(config.unlearn.method);
  summary["seed"] = config.seed;
  summary["misr_convention"] =
      "raw balanced accuracy of the optimal-threshold loss attack; "
      "0.5 = random guessing, >= 0.5 by construction";
  summary["phases"]["train"] = {
      {"rounds", config.fl.rounds},
      {"wall_clock_s", result.train_seconds},
      {"final", final_record_json(result.records, {"train"})},
  };
  if (config.unlearn.method != Method::none) {
    int recover_rounds = 0;
    switch (config.unlearn.method) {
      case Method::faun:
      case Method::finetune_only:
        recover_rounds = config.unlearn.total_rounds;
        break;
      case Method::retrain:
        recover_rounds = config.fl.rounds;
        break;
      case Method::federaser:
        recover_rounds =
            (config.fl.rounds + config.unlearn.federaser_period - 1) /
            config.unlearn.federaser_period;
        break;
      default:
        break;
    }
    summary["phases"]["recover"] = {
        {"rounds", recover_rounds},
        {"wall_clock_s", result.recover_seconds},
        {"final",
         final_record_json(result.records,
                           {"unlearn_eliminate", "unlearn_finetune", "retrain",
                            "federaser"})},
    };
  }
  result.summary = std::move(summary);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir) {
  const std::string started = utc_timestamp();
  std::filesystem::create_directories(out_dir);

  ExperimentResult result = run_pipeline(config);

  {
    std::ofstream rounds(out_dir / "rounds.jsonl");
    if (!rounds) {
      throw data_error("cannot write " + (out_dir / "rounds.jsonl").string());
    }
    for (const auto& r : result.records) {
      rounds << record_to_json(r).dump() << "\n";
    }
  }
  {
    std::ofstream summary(out_dir / "summary.json");
    summary << result.summary.dump(2) << "\n";
  }
  if (config.unlearn.method == Method::faun) {
    result.trace.write_csv((out_dir / "trace.csv").string());
  }
  {
    json manifest;
    manifest["version"] = kVersion;
    manifest["config_hash"] = config_hash(config);
    manifest["started_at"] = started;
    manifest["finished_at"] = utc_timestamp();
    manifest["phase_rounds"]["train"] = config.fl.rounds;
    if (config.unlearn.method != Method::none) {
      manifest["phase_rounds"]["recover"] =
          result.summary["phases"]["recover"]["rounds"];
    }
    manifest["wall_clock_s"]["train"] = result.train_seconds;
    manifest["wall_clock_s"]["recover"] = result.recover_seconds;
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << "\n";
  }
  {
    std::ofstream cfg(out_dir / "config.json");
    cfg << to_json(config).dump(2) << "\n";
  }
  return result;
}

CompareResult compare_runs(
    const std::vector<std::filesystem::path>& summaries) {
  if (summaries.size() < 2) {
    throw config_error("compare: need at least 2 summary files");
  }

  std::vector<json> loaded;
  for (const auto& path : summaries) {
    std::ifstream in(path);
    if (!in) throw data_error("compare: cannot open " + path.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw data_error("compare: " + path.string() + " is not valid JSON: " +
                       e.what());
    }
    loaded.push_back(std::move(j));
  }

  const std::string base_hash = loaded.front().value("dataset_hash", "");
  for (std::size_t i = 1; i < loaded.size(); ++i) {
    const std::string h = loaded[i].value("dataset_hash", "");
    if (h != base_hash) {
      throw config_error(
          "compare: dataset hashes differ (" + summaries.front().string() +
          " has " + base_hash + ", " + summaries[i].string() + " has " + h +
          "); runs over different data are not comparable");
    }
  }

  CompareResult out;
  out.rows = json::array();
  std::ostringstream table;
  std::ostringstream csv;
  const char* header_fmt = "%-14s %8s %8s %8s %8s %10s %8s\n";
  char line[160];
  std::snprintf(line, sizeof(line), header_fmt, "method", "acc", "misr",
                "asr", "ma", "time_s", "rounds");
  table << line;
  csv << "method,acc,misr,asr,ma,time_s,rounds\n";

  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const json& s = loaded[i];
    const json& phases = s.at("phases");
    const json& phase = phases.contains("recover") ? phases.at("recover")
                                                   : phases.at("train");
    const json& fin = phase.at("final");
    const auto num = [&](const char* key) -> std::string {
      if (!fin.contains(key) || fin.at(key).is_null()) return "-";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", fin.at(key).get<double>());
      return buf;
    };
    const double time_s = phase.value("wall_clock_s", 0.0);
    const int rounds = phase.value("rounds", 0);
    const std::string method = s.value("method", "?");

    char tbuf[32];
    std::snprintf(tbuf, sizeof(tbuf), "%.2f", time_s);
    std::snprintf(line, sizeof(line), header_fmt, method.c_str(),
                  num("acc").c_str(), num("misr").c_str(), num("asr").c_str(),
                  num("ma").c_str(), tbuf, std::to_string(rounds).c_str());
    table << line;
    csv << method << ',' << num("acc") << ',' << num("misr") << ','
        << num("asr") << ',' << num("ma") << ',' << tbuf << ',' << rounds
        << "\n";

    json row;
    row["method"] = method;
    row["final"] = fin;
    row["time_s"] = time_s;
    row["rounds"] = rounds;
    row["path"] = summaries[i].string();
    out.rows.push_back(std::move(row));
  }
  out.table = table.str();
  out.csv = csv.str();
  return out;
}

}  // namespace faun
