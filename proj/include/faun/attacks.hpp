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

#ifndef FAUN_ATTACKS_HPP
#define FAUN_ATTACKS_HPP

#include <cstdint>
#include <vector>

#include "faun/data.hpp"
#include "faun/types.hpp"

namespace faun {

enum class AttackKind { none, trim, backdoor };

struct AttackSpec {
  AttackKind kind{AttackKind::none};
  // trim
  Scalar trim_scale{1.5};
  Scalar trim_jitter{0.01};
  // backdoor
  TriggerSpec trigger;
  Scalar poison_ratio{0.1};
};

// Directed mean-plus-deviation corruption: every malicious update is
//   -(mu + trim_scale * sigma .* sign(mu)) + trim_jitter * sigma .* noise
// where mu/sigma are the coordinate-wise mean and (population) standard
// deviation of the same-round benign updates. The sign flip drives the
// aggregate away from the benign descent direction; the jitter keeps the
// malicious updates from being identical.
std::vector<ParamVector> craft_trim_updates(
    const std::vector<ParamVector>& benign_updates, int num_malicious,
    Scalar trim_scale, Scalar trim_jitter, std::uint64_t seed);

}  // namespace faun

#endif  // FAUN_ATTACKS_HPP
