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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "faun/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Non-zero exits carry a structured error record on stderr.
int report_error(const std::string& type, const std::string& message) {
  json err;
  err["error"]["type"] = type;
  err["error"]["message"] = message;
  std::cerr << err.dump() << std::endl;
  return 1;
}

fs::path resolve_out_dir(const std::string& cli_out,
                         const faun::ExperimentConfig& config,
                         const std::string& config_path) {
  if (!cli_out.empty()) return cli_out;
  if (!config.out_dir.empty()) return config.out_dir;
  fs::path root = "runs";
  if (const char* env = std::getenv("FAUNSIM_OUT_ROOT")) root = env;
  return root / fs::path(config_path).stem();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"faunsim: federated poisoning / unlearning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;

  auto* run = app.add_subcommand("run", "run one experiment end to end");
  run->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "master seed override");
  run->add_option("--override", overrides,
                  "config override key.path=value (repeatable)");

  auto* validate_cmd =
      app.add_subcommand("validate", "parse and validate a config");
  validate_cmd->add_option("config", config_path, "experiment config (JSON)")
      ->required();

  std::vector<std::string> summary_paths;
  std::string csv_path;
  auto* compare = app.add_subcommand("compare", "compare run summaries");
  compare->add_option("summaries", summary_paths, "summary.json files")
      ->required()
      ->expected(-1);
  compare->add_option("--csv", csv_path, "also write the table as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      std::ifstream in(config_path);
      if (!in) {
        return report_error("config", "cannot open " + config_path);
      }
      json raw;
      in >> raw;
      for (const auto& o : overrides) faun::apply_override(raw, o);
      if (seed >= 0) raw["seed"] = seed;
      const faun::ExperimentConfig config = faun::parse_config(raw);

      const fs::path dir = resolve_out_dir(out_dir, config, config_path);
      const auto result = faun::run_experiment(config, dir);

      json done;
      done["out_dir"] = dir.string();
      done["config_hash"] = faun::config_hash(config);
      done["summary"] = result.summary;
      std::cout << done.dump(2) << std::endl;
      return 0;
    }

    if (validate_cmd->parsed()) {
      const faun::ExperimentConfig config = faun::load_config(config_path);
      json ok;
      ok["valid"] = true;
      ok["config_hash"] = faun::config_hash(config);
      ok["effective_config"] = faun::to_json(config);
      std::cout << ok.dump(2) << std::endl;
      return 0;
    }

    if (compare->parsed()) {
      std::vector<fs::path> paths(summary_paths.begin(), summary_paths.end());
      const auto cmp = faun::compare_runs(paths);
      std::cout << cmp.table;
      if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) {
          return report_error("io", "cannot write " + csv_path);
        }
        out << cmp.csv;
      }
      return 0;
    }
  } catch (const faun::config_error& e) {
    return report_error("config", e.what());
  } catch (const faun::data_error& e) {
    return report_error("data", e.what());
  } catch (const faun::numerical_error& e) {
    return report_error("numerical", e.what());
  } catch (const json::exception& e) {
    return report_error("json", e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
