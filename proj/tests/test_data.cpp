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

#include <gtest/gtest.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "faun/metrics.hpp"
#include "faun/model.hpp"
#include "faun/rng.hpp"

namespace faun {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    dir_ = fs::temp_directory_path() /
           ("faun_data_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  ~TempDir() { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
};

void put_u32_be(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

std::string idx_image_bytes(std::uint32_t count, std::uint32_t rows,
                            std::uint32_t cols, unsigned char fill_base) {
  std::string bytes;
  put_u32_be(bytes, 0x00000803);
  put_u32_be(bytes, count);
  put_u32_be(bytes, rows);
  put_u32_be(bytes, cols);
  for (std::uint32_t i = 0; i < count * rows * cols; ++i) {
    bytes.push_back(static_cast<char>((fill_base + i) % 256));
  }
  return bytes;
}

std::string idx_label_bytes(const std::vector<unsigned char>& labels) {
  std::string bytes;
  put_u32_be(bytes, 0x00000801);
  put_u32_be(bytes, static_cast<std::uint32_t>(labels.size()));
  for (unsigned char l : labels) bytes.push_back(static_cast<char>(l));
  return bytes;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_gzip(const fs::path& path, const std::string& bytes) {
  gzFile f = gzopen(path.string().c_str(), "wb");
  ASSERT_NE(f, nullptr);
  ASSERT_EQ(gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())),
            static_cast<int>(bytes.size()));
  gzclose(f);
}

// Small full-batch trainer used by the separation checks.
ParamVector train_linear(const ExampleBatch& batch, int num_classes,
                         int steps) {
  const ModelSpec spec{.input_dim = batch.width(),
                       .hidden_dims = {},
                       .num_classes = num_classes};
  ParamVector params = zero_params(spec);
  auto opt = OptimizerState::make(0.5, 0.9, params.dim());
  for (int s = 0; s < steps; ++s) {
    sgd_step(params, gradient(params, spec, batch), opt);
  }
  return params;
}

TEST(MakeSynthetic, ZeroSeparationGivesChanceAccuracyOnHeldOut) {
  const int k = 4;
  const ExampleBatch train = make_synthetic(k, 8, 2000, 0.0, 1);
  const ExampleBatch held_out = make_synthetic(k, 8, 2000, 0.0, 2);
  const ModelSpec spec{.input_dim = 8, .hidden_dims = {}, .num_classes = k};
  const ParamVector params = train_linear(train, k, 200);
  const Scalar acc = accuracy(params, spec, held_out);
  EXPECT_NEAR(acc, 1.0 / k, 0.05);
}

TEST(MakeSynthetic, LargeSeparationIsLinearlySeparable) {
  const int k = 5;
  const ExampleBatch train = make_synthetic(k, 16, 1000, 10.0, 3);
  const ModelSpec spec{.input_dim = 16, .hidden_dims = {}, .num_classes = k};
  const ParamVector params = train_linear(train, k, 200);
  EXPECT_GT(accuracy(params, spec, train), 0.99);
}

TEST(MakeSynthetic, DeterministicAndBalanced) {
  const ExampleBatch a = make_synthetic(3, 10, 101, 2.0, 9);
  const ExampleBatch b = make_synthetic(3, 10, 101, 2.0, 9);
  EXPECT_TRUE((a.features.array() == b.features.array()).all());
  EXPECT_EQ(a.labels, b.labels);

  std::vector<int> counts(3, 0);
  for (Index i = 0; i < a.n(); ++i) counts[a.labels(i)] += 1;
  EXPECT_EQ(*std::max_element(counts.begin(), counts.end()) -
                *std::min_element(counts.begin(), counts.end()),
            1);  // 101 = 34 + 34 + 33

  // 10 is not a perfect square: row geometry.
  EXPECT_EQ(a.image_rows, 1);
  EXPECT_EQ(a.image_cols, 10);
  EXPECT_EQ(make_synthetic(2, 64, 10, 1.0, 1).image_rows, 8);
}

TEST(LoadIdx, ReadsImagesAndLabelsWithLimit) {
  TempDir tmp;
  std::vector<unsigned char> labels(30);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = static_cast<unsigned char>(i % 10);
  }
  write_file(tmp.path("img"), idx_image_bytes(30, 28, 28, 0));
  write_file(tmp.path("lbl"), idx_label_bytes(labels));

  const ExampleBatch b =
      load_idx_images(tmp.path("img").string(), tmp.path("lbl").string(), 10);
  EXPECT_EQ(b.n(), 10);
  EXPECT_EQ(b.width(), 784);
  EXPECT_EQ(b.image_rows, 28);
  EXPECT_EQ(b.image_cols, 28);
  EXPECT_GE(b.labels.minCoeff(), 0);
  EXPECT_LE(b.labels.maxCoeff(), 9);
  EXPECT_GE(b.features.minCoeff(), 0.0);
  EXPECT_LE(b.features.maxCoeff(), 1.0);
  // First pixel of the first image is byte 0 -> 0.0; byte 255 appears too.
  EXPECT_DOUBLE_EQ(b.features(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(b.features(0, 255), 1.0);
}

TEST(LoadIdx, GzipCompressedFilesLoadIdentically) {
  TempDir tmp;
  const std::vector<unsigned char> labels{1, 2, 3, 4, 5};
  const std::string img = idx_image_bytes(5, 4, 4, 7);
  const std::string lbl = idx_label_bytes(labels);
  write_file(tmp.path("img"), img);
  write_file(tmp.path("lbl"), lbl);
  write_gzip(tmp.path("img.gz"), img);
  write_gzip(tmp.path("lbl.gz"), lbl);

  const ExampleBatch plain =
      load_idx_images(tmp.path("img").string(), tmp.path("lbl").string(), 5);
  const ExampleBatch gz = load_idx_images(tmp.path("img.gz").string(),
                                          tmp.path("lbl.gz").string(), 5);
  EXPECT_TRUE((plain.features.array() == gz.features.array()).all());
  EXPECT_EQ(plain.labels, gz.labels);
}

TEST(LoadIdx, LimitZeroGivesEmptyBatch) {
  TempDir tmp;
  write_file(tmp.path("img"), idx_image_bytes(3, 2, 2, 0));
  write_file(tmp.path("lbl"), idx_label_bytes({0, 1, 2}));
  const ExampleBatch b =
      load_idx_images(tmp.path("img").string(), tmp.path("lbl").string(), 0);
  EXPECT_EQ(b.n(), 0);
}

TEST(LoadIdx, CorruptedMagicNamesOffset) {
  TempDir tmp;
  std::string img = idx_image_bytes(3, 2, 2, 0);
  img[0] = 0x7f;  // corrupt the magic
  write_file(tmp.path("img"), img);
  write_file(tmp.path("lbl"), idx_label_bytes({0, 1, 2}));
  try {
    load_idx_images(tmp.path("img").string(), tmp.path("lbl").string(), 3);
    FAIL() << "expected data_error";
  } catch (const data_error& e) {
    EXPECT_NE(std::string(e.what()).find("offset 0"), std::string::npos);
  }
}

TEST(LoadIdx, TruncatedPayloadAndCountMismatch) {
  TempDir tmp;
  std::string img = idx_image_bytes(3, 2, 2, 0);
  img.resize(img.size() - 5);
  write_file(tmp.path("img"), img);
  write_file(tmp.path("lbl"), idx_label_bytes({0, 1, 2}));
  EXPECT_THROW(load_idx_images(tmp.path("img").string(),
                               tmp.path("lbl").string(), 3),
               data_error);

  write_file(tmp.path("img2"), idx_image_bytes(3, 2, 2, 0));
  write_file(tmp.path("lbl2"), idx_label_bytes({0, 1}));
  EXPECT_THROW(load_idx_images(tmp.path("img2").string(),
                               tmp.path("lbl2").string(), 3),
               data_error);
}

TEST(Partition, EveryExampleAssignedExactlyOnce) {
  const ExampleBatch batch = make_synthetic(4, 6, 503, 1.0, 5);
  for (const auto mode : {PartitionMode::iid, PartitionMode::dirichlet}) {
    const PartitionPlan plan = partition(batch, 7, mode, 0.5, 11);
    EXPECT_EQ(plan.assignment.size(), 503u);
    std::vector<Index> sizes = plan.client_sizes();
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), Index{0}), 503);
    for (int c : plan.assignment) {
      EXPECT_GE(c, 0);
      EXPECT_LT(c, 7);
    }
    for (Index s : sizes) EXPECT_GT(s, 0);
  }
}

TEST(Partition, IidShardSizesWithinOne) {
  const ExampleBatch batch = make_synthetic(4, 6, 503, 1.0, 5);
  const PartitionPlan plan = partition(batch, 7, PartitionMode::iid, 0.5, 3);
  const auto sizes = plan.client_sizes();
  EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) -
                *std::min_element(sizes.begin(), sizes.end()),
            1);
}

// Multiset-union property: client shards reassemble the source dataset.
TEST(Partition, ShardsReassembleSource) {
  const ExampleBatch batch = make_synthetic(3, 4, 101, 1.0, 6);
  const PartitionPlan plan =
      partition(batch, 5, PartitionMode::dirichlet, 0.5, 7);
  std::multiset<Scalar> source, reassembled;
  for (Index i = 0; i < batch.n(); ++i) source.insert(batch.features(i, 0));
  for (int c = 0; c < 5; ++c) {
    const ExampleBatch shard = extract_shard(batch, plan, c);
    for (Index i = 0; i < shard.n(); ++i) {
      reassembled.insert(shard.features(i, 0));
    }
  }
  EXPECT_EQ(source, reassembled);
}

TEST(Partition, HugeAlphaApproachesGlobalProportions) {
  const ExampleBatch batch = make_synthetic(4, 6, 4000, 1.0, 8);
  const PartitionPlan plan =
      partition(batch, 8, PartitionMode::dirichlet, 1e6, 13);
  // Global proportions are 1/4 per class.
  for (int c = 0; c < 8; ++c) {
    const ExampleBatch shard = extract_shard(batch, plan, c);
    std::vector<Scalar> class_frac(4, 0.0);
    for (Index i = 0; i < shard.n(); ++i) class_frac[shard.labels(i)] += 1;
    for (auto& f : class_frac) f /= static_cast<Scalar>(shard.n());
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(class_frac[k], 0.25, 0.05) << "client " << c;
    }
  }
}

// Empirical sampling check: alpha = 0.1 concentrates shards on few classes.
TEST(Partition, SmallAlphaConcentratesMass) {
  const ExampleBatch batch = make_synthetic(10, 6, 2000, 1.0, 9);
  std::vector<Scalar> stats;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PartitionPlan plan =
        partition(batch, 10, PartitionMode::dirichlet, 0.1, seed);
    Scalar max_frac = 0;
    for (int c = 0; c < 10; ++c) {
      const ExampleBatch shard = extract_shard(batch, plan, c);
      std::vector<Scalar> counts(10, 0.0);
      for (Index i = 0; i < shard.n(); ++i) counts[shard.labels(i)] += 1;
      max_frac = std::max(
          max_frac, *std::max_element(counts.begin(), counts.end()) /
                        static_cast<Scalar>(shard.n()));
    }
    stats.push_back(max_frac);
  }
  std::sort(stats.begin(), stats.end());
  EXPECT_GE(stats[stats.size() / 2], 0.7);  // median over seeds
}

TEST(Partition, MoreClientsThanExamplesThrows) {
  const ExampleBatch batch = make_synthetic(2, 4, 5, 1.0, 1);
  EXPECT_THROW(partition(batch, 6, PartitionMode::iid, 0.5, 1), config_error);
}

TEST(PoisonBackdoor, ExactCountAndTargetLabels) {
  const ExampleBatch batch = make_synthetic(4, 64, 100, 1.0, 10);
  TriggerSpec trigger;  // 3x3 bottom-right, value 1.0, target 0
  const ExampleBatch poisoned = poison_backdoor(batch, 0.1, trigger, 17);

  int modified = 0;
  for (Index i = 0; i < poisoned.n(); ++i) {
    if ((poisoned.features.row(i).array() != batch.features.row(i).array())
            .any()) {
      ++modified;
      EXPECT_EQ(poisoned.labels(i), trigger.target_class);
      // The stamped pixels are exactly patch_value.
      for (Index r = 5; r < 8; ++r) {
        for (Index c = 5; c < 8; ++c) {
          EXPECT_DOUBLE_EQ(poisoned.features(i, r * 8 + c), 1.0);
        }
      }
    } else {
      EXPECT_EQ(poisoned.labels(i), batch.labels(i));
    }
  }
  EXPECT_EQ(modified, 10);
}

TEST(PoisonBackdoor, RatioOneRelabelsEverything) {
  const ExampleBatch batch = make_synthetic(4, 16, 40, 1.0, 11);
  TriggerSpec trigger;
  trigger.target_class = 2;
  const ExampleBatch poisoned = poison_backdoor(batch, 1.0, trigger, 3);
  for (Index i = 0; i < poisoned.n(); ++i) {
    EXPECT_EQ(poisoned.labels(i), 2);
  }
}

// Property sweep: |modified rows| == round(ratio * n) for n in 1..50.
TEST(PoisonBackdoor, CountExactnessSweep) {
  TriggerSpec trigger;
  trigger.patch_rows = 1;
  trigger.patch_cols = 1;
  for (Index n = 1; n <= 50; ++n) {
    const ExampleBatch batch = make_synthetic(2, 9, std::max<Index>(n, 2), 0.5, n);
    const ExampleBatch head = batch.select([&] {
      std::vector<int> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      return idx;
    }());
    for (const Scalar ratio : {0.1, 0.33, 0.5, 0.77, 1.0}) {
      const ExampleBatch poisoned = poison_backdoor(head, ratio, trigger, 5);
      int modified = 0;
      for (Index i = 0; i < n; ++i) {
        if ((poisoned.features.row(i).array() !=
             head.features.row(i).array())
                .any() ||
            poisoned.labels(i) != head.labels(i)) {
          ++modified;
        }
      }
      // A row already equal to the stamped version counts as unmodified;
      // with continuous features that never happens.
      EXPECT_EQ(modified, static_cast<int>(std::llround(ratio * n)))
          << "n=" << n << " ratio=" << ratio;
    }
  }
}

TEST(PoisonBackdoor, PatchOutOfBoundsThrows) {
  const ExampleBatch batch = make_synthetic(2, 4, 10, 1.0, 1);  // 2x2 image
  TriggerSpec trigger;  // 3x3 patch
  EXPECT_THROW(poison_backdoor(batch, 0.5, trigger, 1), config_error);
}

TEST(StampTriggerAll, EmptyBatchPassesThrough) {
  ExampleBatch empty;
  empty.features.resize(0, 16);
  empty.labels.resize(0);
  empty.image_rows = 4;
  empty.image_cols = 4;
  TriggerSpec trigger;
  trigger.patch_rows = 2;
  trigger.patch_cols = 2;
  EXPECT_EQ(stamp_trigger_all(empty, trigger).n(), 0);
}

TEST(StampTriggerAll, IdempotentAndTouchesExactlyPatchPixels) {
  const ExampleBatch batch = make_synthetic(3, 25, 20, 1.0, 12);
  TriggerSpec trigger;
  trigger.patch_rows = 2;
  trigger.patch_cols = 3;
  trigger.anchor = Anchor::top_left;
  const ExampleBatch once = stamp_trigger_all(batch, trigger);
  const ExampleBatch twice = stamp_trigger_all(once, trigger);
  EXPECT_TRUE((once.features.array() == twice.features.array()).all());
  EXPECT_EQ(once.labels, batch.labels);

  for (Index i = 0; i < batch.n(); ++i) {
    int diff = 0;
    for (Index j = 0; j < batch.width(); ++j) {
      if (once.features(i, j) != batch.features(i, j)) ++diff;
    }
    EXPECT_LE(diff, 6);  // continuous features never equal 1.0 exactly,
    EXPECT_GE(diff, 5);  // but allow one coincidental match
  }
}

TEST(SplitProxy, DisjointStratifiedDeterministic) {
  const ExampleBatch batch = make_synthetic(5, 6, 2000, 1.0, 13);
  const ProxySplit a = split_proxy(batch, 200, 21);
  const ProxySplit b = split_proxy(batch, 200, 21);

  EXPECT_EQ(a.proxy.size, 200);
  EXPECT_EQ(a.rest.n(), 1800);
  EXPECT_EQ(a.proxy_indices, b.proxy_indices);

  std::set<int> proxy_set(a.proxy_indices.begin(), a.proxy_indices.end());
  for (int idx : a.rest_indices) {
    EXPECT_FALSE(proxy_set.contains(idx));
  }
  EXPECT_EQ(proxy_set.size() + a.rest_indices.size(), 2000u);

  // Stratification: 2000 examples over 5 classes -> 40 proxy rows per class.
  std::vector<int> counts(5, 0);
  for (Index i = 0; i < a.proxy.batch.n(); ++i) {
    counts[a.proxy.batch.labels(i)] += 1;
  }
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(counts[k], 40, 1);
}

TEST(SplitProxy, ProxyTooLargeThrows) {
  const ExampleBatch batch = make_synthetic(2, 4, 50, 1.0, 14);
  EXPECT_THROW(split_proxy(batch, 50, 1), config_error);
  EXPECT_THROW(split_proxy(batch, 60, 1), config_error);
}

}  // namespace
}  // namespace faun
