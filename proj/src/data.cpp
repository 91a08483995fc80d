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

#include "faun/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "faun/rng.hpp"

namespace faun {
namespace {

std::vector<int> shuffled_indices(Index n, std::mt19937_64& engine) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), engine);
  return idx;
}

// Largest-remainder apportionment of `total` into parts proportional to
// `weights`. Guarantees sum(counts) == total.
std::vector<Index> apportion(const std::vector<Scalar>& weights, Index total) {
  const Scalar wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<Index> counts(weights.size(), 0);
  std::vector<std::pair<Scalar, std::size_t>> remainders;
  Index assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const Scalar share =
        wsum > 0 ? weights[i] / wsum * static_cast<Scalar>(total) : 0.0;
    counts[i] = static_cast<Index>(std::floor(share));
    assigned += counts[i];
    remainders.push_back({share - std::floor(share), i});
  }
  std::sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (Index k = 0; k < total - assigned; ++k) {
    counts[remainders[static_cast<std::size_t>(k)].second] += 1;
  }
  return counts;
}

struct PatchBounds {
  Index row0, row1, col0, col1;  // half-open
};

PatchBounds patch_bounds(const ExampleBatch& batch, const TriggerSpec& t) {
  if (!batch.is_image()) {
    throw config_error("trigger: batch has no image geometry");
  }
  const Index R = batch.image_rows;
  const Index C = batch.image_cols;
  if (t.patch_rows < 1 || t.patch_cols < 1 || t.patch_rows > R ||
      t.patch_cols > C) {
    throw config_error("trigger: patch does not fit inside image bounds");
  }
  switch (t.anchor) {
    case Anchor::bottom_right:
      return {R - t.patch_rows, R, C - t.patch_cols, C};
    case Anchor::bottom_left:
      return {R - t.patch_rows, R, 0, t.patch_cols};
    case Anchor::top_left:
      return {0, t.patch_rows, 0, t.patch_cols};
  }
  throw config_error("trigger: unknown anchor");
}

void stamp_row(ExampleBatch& batch, Index row, const PatchBounds& pb,
               Scalar value) {
  for (Index r = pb.row0; r < pb.row1; ++r) {
    for (Index c = pb.col0; c < pb.col1; ++c) {
      batch.features(row, r * batch.image_cols + c) = value;
    }
  }
}

}  // namespace

ExampleBatch ExampleBatch::select(const std::vector<int>& indices) const {
  ExampleBatch out;
  out.features.resize(static_cast<Index>(indices.size()), width());
  out.labels.resize(static_cast<Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = features.row(indices[i]);
    out.labels(static_cast<Index>(i)) = labels(indices[i]);
  }
  out.image_rows = image_rows;
  out.image_cols = image_cols;
  return out;
}

std::vector<int> PartitionPlan::client_indices(int client) const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == client) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

std::vector<Index> PartitionPlan::client_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(num_clients), 0);
  for (int c : assignment) sizes[static_cast<std::size_t>(c)] += 1;
  return sizes;
}

ExampleBatch make_synthetic(int num_classes, Index input_dim, Index n,
                            Scalar class_separation, std::uint64_t seed) {
  if (num_classes < 2) throw config_error("make_synthetic: num_classes >= 2");
  if (input_dim < 1) throw config_error("make_synthetic: input_dim >= 1");
  if (n < num_classes) {
    throw config_error("make_synthetic: n must be >= num_classes");
  }
  if (class_separation < 0) {
    throw config_error("make_synthetic: class_separation must be >= 0");
  }

  auto engine = make_engine(seed);
  std::normal_distribution<Scalar> normal(0.0, 1.0);

  // Class means: separation times a random unit direction each.
  Matrix means(num_classes, input_dim);
  for (int k = 0; k < num_classes; ++k) {
    Vector dir(input_dim);
    for (Index j = 0; j < input_dim; ++j) dir(j) = normal(engine);
    const Scalar norm = dir.norm();
    if (norm > 0) dir *= class_separation / norm;
    means.row(k) = dir.transpose();
  }

  // Class-balanced counts: the first n % num_classes classes get one extra.
  std::vector<Index> counts(static_cast<std::size_t>(num_classes),
                            n / num_classes);
  for (Index k = 0; k < n % num_classes; ++k) counts[k] += 1;

  ExampleBatch batch;
  batch.features.resize(n, input_dim);
  batch.labels.resize(n);
  Index row = 0;
  for (int k = 0; k < num_classes; ++k) {
    for (Index i = 0; i < counts[static_cast<std::size_t>(k)]; ++i, ++row) {
      for (Index j = 0; j < input_dim; ++j) {
        batch.features(row, j) = means(k, j) + normal(engine);
      }
      batch.labels(row) = k;
    }
  }

  const auto side = static_cast<Index>(std::lround(std::sqrt(
      static_cast<Scalar>(input_dim))));
  if (side * side == input_dim) {
    batch.image_rows = side;
    batch.image_cols = side;
  } else {
    batch.image_rows = 1;
    batch.image_cols = input_dim;
  }
  return batch;
}

PartitionPlan partition(const ExampleBatch& batch, int num_clients,
                        PartitionMode mode, Scalar alpha, std::uint64_t seed) {
  const Index n = batch.n();
  if (num_clients < 2) throw config_error("partition: num_clients must be >= 2");
  if (static_cast<Index>(num_clients) > n) {
    throw config_error("partition: more clients than examples");
  }
  if (mode == PartitionMode::dirichlet && !(alpha > 0)) {
    throw config_error("partition: dirichlet alpha must be > 0");
  }

  PartitionPlan plan;
  plan.mode = mode;
  plan.alpha = alpha;
  plan.num_clients = num_clients;
  plan.assignment.assign(static_cast<std::size_t>(n), -1);

  auto engine = make_engine(seed);

  if (mode == PartitionMode::iid) {
    // Round-robin over a global shuffle: shard sizes within +-1.
    const auto perm = shuffled_indices(n, engine);
    for (Index i = 0; i < n; ++i) {
      plan.assignment[static_cast<std::size_t>(perm[i])] =
          static_cast<int>(i % num_clients);
    }
  } else {
    const int num_classes = batch.labels.maxCoeff() + 1;
    std::gamma_distribution<Scalar> gamma(alpha, 1.0);
    for (int k = 0; k < num_classes; ++k) {
      std::vector<int> class_idx;
      for (Index i = 0; i < n; ++i) {
        if (batch.labels(i) == k) class_idx.push_back(static_cast<int>(i));
      }
      if (class_idx.empty()) continue;
      std::shuffle(class_idx.begin(), class_idx.end(), engine);

      std::vector<Scalar> props(static_cast<std::size_t>(num_clients));
      for (auto& p : props) p = gamma(engine);
      const auto counts =
          apportion(props, static_cast<Index>(class_idx.size()));

      std::size_t pos = 0;
      for (int c = 0; c < num_clients; ++c) {
        for (Index j = 0; j < counts[static_cast<std::size_t>(c)]; ++j) {
          plan.assignment[static_cast<std::size_t>(class_idx[pos++])] = c;
        }
      }
    }

    // Empty-client repair: steal one example from the largest shard.
    auto sizes = plan.client_sizes();
    for (int c = 0; c < num_clients; ++c) {
      while (sizes[static_cast<std::size_t>(c)] == 0) {
        const int donor = static_cast<int>(std::distance(
            sizes.begin(), std::max_element(sizes.begin(), sizes.end())));
        for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
          if (plan.assignment[i] == donor) {
            plan.assignment[i] = c;
            sizes[static_cast<std::size_t>(donor)] -= 1;
            sizes[static_cast<std::size_t>(c)] += 1;
            break;
          }
        }
      }
    }
  }
  return plan;
}

ExampleBatch extract_shard(const ExampleBatch& batch, const PartitionPlan& plan,
                           int client) {
  return batch.select(plan.client_indices(client));
}

ExampleBatch poison_backdoor(const ExampleBatch& batch, Scalar ratio,
                             const TriggerSpec& trigger, std::uint64_t seed) {
  if (!(ratio > 0) || ratio > 1) {
    throw config_error("poison_backdoor: ratio must be in (0, 1]");
  }
  const auto pb = patch_bounds(batch, trigger);
  const Index n = batch.n();
  const auto k = static_cast<Index>(std::llround(ratio * static_cast<Scalar>(n)));

  ExampleBatch out = batch;
  auto engine = make_engine(seed);
  auto perm = shuffled_indices(n, engine);
  for (Index i = 0; i < k; ++i) {
    const Index row = perm[static_cast<std::size_t>(i)];
    stamp_row(out, row, pb, trigger.patch_value);
    out.labels(row) = trigger.target_class;
  }
  return out;
}

ExampleBatch stamp_trigger_all(const ExampleBatch& batch,
                               const TriggerSpec& trigger) {
  if (batch.n() == 0) return batch;
  const auto pb = patch_bounds(batch, trigger);
  ExampleBatch out = batch;
  for (Index i = 0; i < out.n(); ++i) {
    stamp_row(out, i, pb, trigger.patch_value);
  }
  return out;
}

ProxySplit split_proxy(const ExampleBatch& batch, Index proxy_size,
                       std::uint64_t seed) {
  const Index n = batch.n();
  if (proxy_size >= n) {
    throw config_error("split_proxy: proxy_size must be < n");
  }
  if (proxy_size < 1) throw config_error("split_proxy: proxy_size must be >= 1");

  auto engine = make_engine(seed);
  const int num_classes = batch.labels.maxCoeff() + 1;

  std::vector<std::vector<int>> by_class(
      static_cast<std::size_t>(num_classes));
  for (Index i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(batch.labels(i))].push_back(
        static_cast<int>(i));
  }

  std::vector<Scalar> class_weights;
  for (const auto& v : by_class) {
    class_weights.push_back(static_cast<Scalar>(v.size()));
  }
  auto take = apportion(class_weights, proxy_size);

  // A class cannot contribute more than it has; push overflow to the
  // largest remaining classes.
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (take[k] > static_cast<Index>(by_class[k].size())) {
      Index overflow = take[k] - static_cast<Index>(by_class[k].size());
      take[k] = static_cast<Index>(by_class[k].size());
      for (std::size_t j = 0; j < by_class.size() && overflow > 0; ++j) {
        if (take[j] < static_cast<Index>(by_class[j].size())) {
          take[j] += 1;
          overflow -= 1;
        }
      }
    }
  }

  ProxySplit out;
  std::vector<char> in_proxy(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& idx = by_class[k];
    std::shuffle(idx.begin(), idx.end(), engine);
    for (Index j = 0; j < take[k]; ++j) {
      in_proxy[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] = 1;
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (in_proxy[static_cast<std::size_t>(i)]) {
      out.proxy_indices.push_back(static_cast<int>(i));
    } else {
      out.rest_indices.push_back(static_cast<int>(i));
    }
  }
  out.proxy.batch = batch.select(out.proxy_indices);
  out.proxy.size = out.proxy.batch.n();
  out.rest = batch.select(out.rest_indices);
  return out;
}

}  // namespace faun
