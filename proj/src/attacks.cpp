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

#include "faun/attacks.hpp"

#include <random>

#include "faun/rng.hpp"

namespace faun {

std::vector<ParamVector> craft_trim_updates(
    const std::vector<ParamVector>& benign_updates, int num_malicious,
    Scalar trim_scale, Scalar trim_jitter, std::uint64_t seed) {
  if (benign_updates.empty()) {
    throw config_error("craft_trim_updates: no benign updates available");
  }
  if (num_malicious < 0) {
    throw config_error("craft_trim_updates: num_malicious must be >= 0");
  }
  if (!(trim_scale >= 0)) {
    throw config_error("craft_trim_updates: trim_scale must be >= 0");
  }

  const Index dim = benign_updates.front().dim();
  Vector mu = Vector::Zero(dim);
  for (const auto& u : benign_updates) {
    if (u.dim() != dim) {
      throw config_error("craft_trim_updates: update dimension mismatch");
    }
    mu += u.values;
  }
  mu /= static_cast<Scalar>(benign_updates.size());

  Vector var = Vector::Zero(dim);
  for (const auto& u : benign_updates) {
    var.array() += (u.values - mu).array().square();
  }
  var /= static_cast<Scalar>(benign_updates.size());
  const Vector sigma = var.cwiseSqrt();

  const Vector base =
      -(mu.array() + trim_scale * sigma.array() * mu.array().sign());

  std::vector<ParamVector> out;
  out.reserve(static_cast<std::size_t>(num_malicious));
  for (int i = 0; i < num_malicious; ++i) {
    auto engine =
        make_engine(splitmix64(seed + static_cast<std::uint64_t>(i)));
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    ParamVector u = benign_updates.front();  // shape template
    u.values = base;
    if (trim_jitter != 0) {
      for (Index j = 0; j < dim; ++j) {
        u.values(j) += trim_jitter * sigma(j) * normal(engine);
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace faun
