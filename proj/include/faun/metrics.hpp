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

#ifndef FAUN_METRICS_HPP
#define FAUN_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "faun/data.hpp"
#include "faun/model.hpp"
#include "faun/types.hpp"

namespace faun {

// Per-round evaluation snapshot. `ma` is the backdoor-scenario name for
// clean accuracy and always equals `acc`; asr/misr are absent when the run
// has no trigger / no malicious data.
struct MetricsRecord {
  int round{0};
  std::string phase;
  Scalar acc{0};
  Scalar ma{0};
  std::optional<Scalar> asr;
  std::optional<Scalar> misr;
  Scalar mean_loss{0};
  double elapsed_ms{0};
};

// Argmax class predictions; ties break toward the lowest class index.
LabelVector predict(const ParamVector& params, const ModelSpec& spec,
                    const ExampleBatch& batch);

Scalar accuracy(const ParamVector& params, const ModelSpec& spec,
                const ExampleBatch& test);

// Softmax cross-entropy per example.
Vector per_example_losses(const ParamVector& params, const ModelSpec& spec,
                          const ExampleBatch& batch);

// Fraction of trigger-stamped test inputs classified as the target class,
// computed over the test examples whose true label differs from the target.
Scalar attack_success_rate(const ParamVector& params, const ModelSpec& spec,
                           const ExampleBatch& clean_test,
                           const TriggerSpec& trigger);

// Loss-threshold membership inference: a "member" prediction is loss < tau,
// tau swept over all midpoints of the pooled sorted losses plus the two
// degenerate thresholds, and the reported value is the best balanced
// accuracy. By construction the result is in [0.5, 1].
Scalar misr_from_losses(std::vector<Scalar> member_losses,
                        std::vector<Scalar> nonmember_losses);

// Balanced loss-threshold attack on the model: the larger set is subsampled
// (evenly strided) to the smaller's size before the sweep.
Scalar membership_inference_sr(const ParamVector& params,
                               const ModelSpec& spec,
                               const ExampleBatch& member_set,
                               const ExampleBatch& nonmember_set);

}  // namespace faun

#endif  // FAUN_METRICS_HPP
