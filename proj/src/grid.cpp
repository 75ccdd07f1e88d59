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

#include "segfix/grid.hpp"

#include <fmt/format.h>

namespace segfix {

PixelCoord clamp_coord(int row, int col, int height, int width) {
  return {std::clamp(row, 0, height - 1), std::clamp(col, 0, width - 1)};
}

LabelMap::LabelMap(Grid2D<ClassId> grid, int num_classes, ClassId ignore_id)
    : grid_(std::move(grid)), num_classes_(num_classes), ignore_id_(ignore_id) {
  if (grid_.empty()) throw Error("label map has no pixels");
  if (num_classes < 1) {
    throw Error(fmt::format("num_classes must be >= 1, got {}", num_classes));
  }
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const ClassId v = grid_[i];
    if (v != ignore_id_ && v >= num_classes_) {
      throw Error(fmt::format(
          "label {} at ({}, {}) is not below num_classes {} and is not the "
          "ignore id {}",
          v, i / grid_.width(), i % grid_.width(), num_classes_, ignore_id_));
    }
  }
}

InstanceSet::InstanceSet(int height, int width, std::vector<Instance> instances)
    : height_(height), width_(width), instances_(std::move(instances)) {
  if (height < 1 || width < 1) {
    throw Error(fmt::format("instance set size must be positive, got {}x{}",
                            height, width));
  }
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    if (!instances_[i].mask.same_shape(height, width)) {
      throw Error(fmt::format("instance {} mask is {}x{}, expected {}x{}", i,
                              instances_[i].mask.height(),
                              instances_[i].mask.width(), height, width));
    }
  }
}

Grid2D<std::int32_t> InstanceSet::owner_map() const {
  Grid2D<std::int32_t> owner(height_, width_, -1);
  for (std::size_t k = 0; k < instances_.size(); ++k) {
    const auto& m = instances_[k].mask;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) owner[i] = static_cast<std::int32_t>(k);
    }
  }
  return owner;
}

}  // namespace segfix
