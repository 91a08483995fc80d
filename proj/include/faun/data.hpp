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

#ifndef FAUN_DATA_HPP
#define FAUN_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "faun/types.hpp"

namespace faun {

// A batch of labeled examples. image_rows/image_cols describe the row-major
// pixel grid when the features are image-shaped (0 otherwise); trigger
// stamping requires them.
struct ExampleBatch {
  Matrix features;  // n x input_dim
  LabelVector labels;
  Index image_rows{0};
  Index image_cols{0};

  Index n() const { return features.rows(); }
  Index width() const { return features.cols(); }
  bool is_image() const { return image_rows > 0 && image_cols > 0; }

  ExampleBatch select(const std::vector<int>& indices) const;
};

enum class Anchor { bottom_right, bottom_left, top_left };

// Backdoor trigger: a constant-valued pixel patch at a fixed corner plus the
// attacker's target class.
struct TriggerSpec {
  Index patch_rows{3};
  Index patch_cols{3};
  Anchor anchor{Anchor::bottom_right};
  Scalar patch_value{1.0};
  int target_class{0};
};

enum class PartitionMode { iid, dirichlet };

struct PartitionPlan {
  std::vector<int> assignment;  // per-example client index
  PartitionMode mode{PartitionMode::iid};
  Scalar alpha{0.5};
  int num_clients{0};

  std::vector<int> client_indices(int client) const;
  std::vector<Index> client_sizes() const;
};

// Small clean server-held split, disjoint from every client shard.
struct ProxyDataset {
  ExampleBatch batch;
  Index size{0};
};

struct ProxySplit {
  ProxyDataset proxy;
  ExampleBatch rest;
  std::vector<int> proxy_indices;  // positions in the source batch
  std::vector<int> rest_indices;
};

// Class-balanced Gaussian blobs: each class mean sits at class_separation
// times a random unit direction, unit-variance noise per coordinate. When
// input_dim is a perfect square the batch is tagged with the corresponding
// square image geometry so triggers can be stamped on it.
ExampleBatch make_synthetic(int num_classes, Index input_dim, Index n,
                            Scalar class_separation, std::uint64_t seed);

// IDX-format image/label loader (magic 0x00000803 / 0x00000801, big-endian
// dims). Plain or gzip-compressed files are both accepted. Pixels are scaled
// to [0,1]; at most `limit` examples are kept, in file order.
ExampleBatch load_idx_images(const std::string& images_path,
                             const std::string& labels_path, Index limit);

PartitionPlan partition(const ExampleBatch& batch, int num_clients,
                        PartitionMode mode, Scalar alpha, std::uint64_t seed);

ExampleBatch extract_shard(const ExampleBatch& batch, const PartitionPlan& plan,
                           int client);

// Stamps the trigger on round(ratio * n) uniformly chosen rows and overwrites
// their labels with the trigger's target class; all other rows untouched.
ExampleBatch poison_backdoor(const ExampleBatch& batch, Scalar ratio,
                             const TriggerSpec& trigger, std::uint64_t seed);

// Stamps every example; labels preserved. Idempotent.
ExampleBatch stamp_trigger_all(const ExampleBatch& batch,
                               const TriggerSpec& trigger);

// Class-stratified disjoint split: `proxy_size` examples for the server,
// the remainder untouched. Per-class proxy counts are within +-1 of the
// proportional share.
ProxySplit split_proxy(const ExampleBatch& batch, Index proxy_size,
                       std::uint64_t seed);

}  // namespace faun

#endif  // FAUN_DATA_HPP
