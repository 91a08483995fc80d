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

#include "faun/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace faun {
namespace {

// Evenly strided subsample of size k from n rows (k <= n).
std::vector<int> strided_subsample(Index n, Index k) {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    idx.push_back(static_cast<int>(i * n / k));
  }
  return idx;
}

}  // namespace

LabelVector predict(const ParamVector& params, const ModelSpec& spec,
                    const ExampleBatch& batch) {
  const Matrix logits = forward(params, spec, batch).logits;
  LabelVector pred(logits.rows());
  for (Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = static_cast<int>(j);
    }
    pred(i) = best;
  }
  return pred;
}

Scalar accuracy(const ParamVector& params, const ModelSpec& spec,
                const ExampleBatch& test) {
  if (test.n() == 0) throw config_error("accuracy: empty test set");
  const LabelVector pred = predict(params, spec, test);
  Index correct = 0;
  for (Index i = 0; i < test.n(); ++i) {
    if (pred(i) == test.labels(i)) ++correct;
  }
  return static_cast<Scalar>(correct) / static_cast<Scalar>(test.n());
}

Vector per_example_losses(const ParamVector& params, const ModelSpec& spec,
                          const ExampleBatch& batch) {
  const Matrix logits = forward(params, spec, batch).logits;
  Vector losses(batch.n());
  for (Index i = 0; i < batch.n(); ++i) {
    const Scalar row_max = logits.row(i).maxCoeff();
    const Scalar lse =
        std::log((logits.row(i).array() - row_max).exp().sum()) + row_max;
    losses(i) = lse - logits(i, batch.labels(i));
  }
  return losses;
}

Scalar attack_success_rate(const ParamVector& params, const ModelSpec& spec,
                           const ExampleBatch& clean_test,
                           const TriggerSpec& trigger) {
  std::vector<int> eligible;
  for (Index i = 0; i < clean_test.n(); ++i) {
    if (clean_test.labels(i) != trigger.target_class) {
      eligible.push_back(static_cast<int>(i));
    }
  }
  if (eligible.empty()) {
    throw config_error(
        "attack_success_rate: every test example carries the target label");
  }
  const ExampleBatch stamped =
      stamp_trigger_all(clean_test.select(eligible), trigger);
  const LabelVector pred = predict(params, spec, stamped);
  Index hits = 0;
  for (Index i = 0; i < pred.size(); ++i) {
    if (pred(i) == trigger.target_class) ++hits;
  }
  return static_cast<Scalar>(hits) / static_cast<Scalar>(pred.size());
}

Scalar misr_from_losses(std::vector<Scalar> member_losses,
                        std::vector<Scalar> nonmember_losses) {
  if (member_losses.empty() || nonmember_losses.empty()) {
    throw config_error("misr: both loss sets must be non-empty");
  }
  std::sort(member_losses.begin(), member_losses.end());
  std::sort(nonmember_losses.begin(), nonmember_losses.end());

  std::vector<Scalar> pooled;
  pooled.reserve(member_losses.size() + nonmember_losses.size());
  pooled.insert(pooled.end(), member_losses.begin(), member_losses.end());
  pooled.insert(pooled.end(), nonmember_losses.begin(),
                nonmember_losses.end());
  std::sort(pooled.begin(), pooled.end());

  // Candidate thresholds: midpoints of adjacent pooled losses plus the two
  // degenerate extremes (predict nobody / everybody a member), which pin the
  // result at >= 0.5.
  std::vector<Scalar> candidates;
  candidates.push_back(pooled.front() - Scalar{1});
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i) {
    if (pooled[i] != pooled[i + 1]) {
      candidates.push_back((pooled[i] + pooled[i + 1]) / 2);
    }
  }
  candidates.push_back(pooled.back() + Scalar{1});

  const auto frac_below = [](const std::vector<Scalar>& sorted, Scalar tau) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), tau);
    return static_cast<Scalar>(std::distance(sorted.begin(), it)) /
           static_cast<Scalar>(sorted.size());
  };

  Scalar best = 0;
  for (const Scalar tau : candidates) {
    const Scalar tpr = frac_below(member_losses, tau);
    const Scalar tnr = 1 - frac_below(nonmember_losses, tau);
    best = std::max(best, (tpr + tnr) / 2);
  }
  return best;
}

Scalar membership_inference_sr(const ParamVector& params,
                               const ModelSpec& spec,
                               const ExampleBatch& member_set,
                               const ExampleBatch& nonmember_set) {
  if (member_set.n() == 0 || nonmember_set.n() == 0) {
    throw config_error("misr: both sets must be non-empty");
  }
  ExampleBatch members = member_set;
  ExampleBatch nonmembers = nonmember_set;
  if (members.n() > nonmembers.n()) {
    members = members.select(strided_subsample(members.n(), nonmembers.n()));
  } else if (nonmembers.n() > members.n()) {
    nonmembers =
        nonmembers.select(strided_subsample(nonmembers.n(), members.n()));
  }

  const Vector ml = per_example_losses(params, spec, members);
  const Vector nl = per_example_losses(params, spec, nonmembers);
  return misr_from_losses(
      std::vector<Scalar>(ml.data(), ml.data() + ml.size()),
      std::vector<Scalar>(nl.data(), nl.data() + nl.size()));
}

}  // namespace faun
