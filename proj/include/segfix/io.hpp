// Copyright 2026 The SegFix Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "segfix/grid.hpp"

namespace segfix {

namespace fs = std::filesystem;

// Every failure reading or writing a file is reported through IoError.
class IoError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const fs::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const fs::path& path, std::string_view bytes);

// ---------------------------------------------------------------------------
// PNG label maps: single-channel 8- or 16-bit. 255 (8-bit) or 65535 (16-bit)
// stands for the ignore id. Maps whose classes fit below 255 are written as
// 8-bit, others as 16-bit.

struct GrayImage {
  int height = 0;
  int width = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;
};

GrayImage decode_gray_png(std::string_view bytes);
std::string encode_gray_png(const GrayImage& image);

// num_classes = 0 infers max(non-ignore value) + 1.
LabelMap decode_label_png(std::string_view bytes, int num_classes = 0,
                          ClassId ignore_id = kDefaultIgnoreId);
std::string encode_label_png(const LabelMap& labels);
LabelMap read_label_png(const fs::path& path, int num_classes = 0,
                        ClassId ignore_id = kDefaultIgnoreId);
void write_label_png(const LabelMap& labels, const fs::path& path);

// Binary masks: nonzero is true on read; written as 0 / 255.
Mask read_mask_png(const fs::path& path);
void write_mask_png(const Mask& mask, const fs::path& path);

// ---------------------------------------------------------------------------
// NPY v1.0, C order, little-endian: '<f4' (H, W), '|u1' (H, W) and '<i2'
// (H, W, 2) holding (ox, oy) offsets.

using NpyArray = std::variant<FloatGrid, Grid2D<std::uint8_t>, Grid2D<Offset>>;

std::string encode_npy(const FloatGrid& grid);
std::string encode_npy(const Grid2D<std::uint8_t>& grid);
std::string encode_npy(const Grid2D<Offset>& grid);
NpyArray decode_npy(std::string_view bytes);

NpyArray read_npy(const fs::path& path);
FloatGrid read_npy_float(const fs::path& path);
Grid2D<std::uint8_t> read_npy_u8(const fs::path& path);
Grid2D<Offset> read_npy_offsets(const fs::path& path);

void write_npy(const FloatGrid& grid, const fs::path& path);
void write_npy(const Grid2D<std::uint8_t>& grid, const fs::path& path);
void write_npy(const Grid2D<Offset>& grid, const fs::path& path);

// ---------------------------------------------------------------------------
// Dataset manifest (JSON). Relative paths resolve against the manifest's
// directory.

struct ManifestRecord {
  std::string id;
  fs::path gt_labels;
  std::optional<fs::path> coarse_labels;
  std::optional<fs::path> boundary;
  std::optional<fs::path> directions;
  std::optional<fs::path> offsets;
  std::optional<fs::path> instances;
  std::optional<fs::path> coarse_instances;
};

struct DatasetManifest {
  int num_classes = 0;
  ClassId ignore_id = kDefaultIgnoreId;
  std::vector<ManifestRecord> records;
};

// Collects every violation (bad JSON, schema errors, duplicate ids, missing
// files) into one IoError.
DatasetManifest parse_manifest(std::string_view json_text, const fs::path& base_dir);
DatasetManifest load_manifest(const fs::path& path);
// Paths are written relative to the manifest's directory when possible.
void write_manifest(const DatasetManifest& manifest, const fs::path& path);

// ---------------------------------------------------------------------------
// Instance sets: a JSON index plus one mask PNG per instance, named
// {id}_inst{n}.png next to the index.

InstanceSet read_instances(const fs::path& index_path);
void write_instances(const InstanceSet& instances, const fs::path& index_path,
                     std::string_view id);

}  // namespace segfix
