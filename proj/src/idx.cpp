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

#include <zlib.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "faun/data.hpp"

namespace faun {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;  // unsigned byte, 3 dims
constexpr std::uint32_t kLabelMagic = 0x00000801;  // unsigned byte, 1 dim

// gzread transparently handles both gzip-compressed and plain files.
class IdxReader {
 public:
  explicit IdxReader(const std::string& path) : path_(path) {
    file_ = gzopen(path.c_str(), "rb");
    if (file_ == nullptr) {
      throw data_error("idx: cannot open " + path);
    }
  }
  ~IdxReader() {
    if (file_ != nullptr) gzclose(file_);
  }
  IdxReader(const IdxReader&) = delete;
  IdxReader& operator=(const IdxReader&) = delete;

  std::uint32_t read_u32_be() {
    unsigned char buf[4];
    read_exact(buf, 4);
    return (static_cast<std::uint32_t>(buf[0]) << 24) |
           (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) |
           static_cast<std::uint32_t>(buf[3]);
  }

  void read_exact(void* dst, std::size_t len) {
    const int got = gzread(file_, dst, static_cast<unsigned>(len));
    if (got < 0 || static_cast<std::size_t>(got) != len) {
      throw data_error("idx: truncated payload in " + path_ + " at offset " +
                       std::to_string(offset_) + " (wanted " +
                       std::to_string(len) + " bytes, got " +
                       std::to_string(got < 0 ? 0 : got) + ")");
    }
    offset_ += len;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::string path_;
  gzFile file_{nullptr};
  std::size_t offset_{0};  // offset in the decompressed stream
};

}  // namespace

ExampleBatch load_idx_images(const std::string& images_path,
                             const std::string& labels_path, Index limit) {
  if (limit < 0) throw config_error("load_idx_images: limit must be >= 0");

  IdxReader images(images_path);
  const std::uint32_t img_magic = images.read_u32_be();
  if (img_magic != kImageMagic) {
    throw data_error("idx: bad image magic in " + images_path +
                     " at offset 0 (got 0x" +
                     [&] {
                       char buf[16];
                       std::snprintf(buf, sizeof(buf), "%08x", img_magic);
                       return std::string(buf);
                     }() +
                     ", expected 0x00000803)");
  }
  const std::uint32_t img_count = images.read_u32_be();
  const std::uint32_t rows = images.read_u32_be();
  const std::uint32_t cols = images.read_u32_be();
  if (rows == 0 || cols == 0) {
    throw data_error("idx: zero image dimensions in " + images_path);
  }

  IdxReader labels(labels_path);
  const std::uint32_t lbl_magic = labels.read_u32_be();
  if (lbl_magic != kLabelMagic) {
    throw data_error("idx: bad label magic in " + labels_path +
                     " at offset 0");
  }
  const std::uint32_t lbl_count = labels.read_u32_be();
  if (lbl_count != img_count) {
    throw data_error("idx: label/image count mismatch (" +
                     std::to_string(lbl_count) + " vs " +
                     std::to_string(img_count) + ")");
  }

  const Index n = std::min<Index>(limit, static_cast<Index>(img_count));
  const Index width = static_cast<Index>(rows) * static_cast<Index>(cols);

  ExampleBatch batch;
  batch.features.resize(n, width);
  batch.labels.resize(n);
  batch.image_rows = static_cast<Index>(rows);
  batch.image_cols = static_cast<Index>(cols);

  std::vector<unsigned char> pixel_row(static_cast<std::size_t>(width));
  for (Index i = 0; i < n; ++i) {
    images.read_exact(pixel_row.data(), pixel_row.size());
    for (Index j = 0; j < width; ++j) {
      batch.features(i, j) =
          static_cast<Scalar>(pixel_row[static_cast<std::size_t>(j)]) / 255.0;
    }
    unsigned char label = 0;
    labels.read_exact(&label, 1);
    batch.labels(i) = static_cast<int>(label);
  }
  return batch;
}

}  // namespace faun
