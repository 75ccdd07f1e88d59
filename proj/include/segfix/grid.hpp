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

#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace segfix {

// Base error for every recoverable failure raised by the library. Callers
// that only care about "something about the input was wrong" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ClassId = std::uint16_t;
inline constexpr ClassId kDefaultIgnoreId = 255;

// Row-major dense 2-D grid. Row 0 is the top of the image.
template <typename T>
class Grid2D {
 public:
  using value_type = T;

  Grid2D() = default;
  Grid2D(int height, int width, T fill = T{})
      : height_(height), width_(width) {
    if (height < 1 || width < 1) {
      throw Error("grid dimensions must be positive, got " +
                  std::to_string(height) + "x" + std::to_string(width));
    }
    data_.assign(static_cast<std::size_t>(height) * width, fill);
  }
  Grid2D(int height, int width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (height < 1 || width < 1) {
      throw Error("grid dimensions must be positive, got " +
                  std::to_string(height) + "x" + std::to_string(width));
    }
    if (data_.size() != static_cast<std::size_t>(height) * width) {
      throw Error("grid data length " + std::to_string(data_.size()) +
                  " does not match " + std::to_string(height) + "x" +
                  std::to_string(width));
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool same_shape(int h, int w) const { return h == height_ && w == width_; }
  template <typename U>
  bool same_shape(const Grid2D<U>& other) const {
    return other.height() == height_ && other.width() == width_;
  }

  T& operator()(int row, int col) {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  const T& operator()(int row, int col) const {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * width_,
            static_cast<std::size_t>(width_)};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

// Boolean grids are stored one byte per pixel (0 or 1).
using Mask = Grid2D<std::uint8_t>;
using FloatGrid = Grid2D<float>;

struct PixelCoord {
  int row = 0;
  int col = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

// Row-major displacement (down = +row, right = +col).
struct PixelDelta {
  int drow = 0;
  int dcol = 0;
  friend bool operator==(const PixelDelta&, const PixelDelta&) = default;
};

// Displacement in the mathematical convention: x grows to the right, y grows
// upward. This is the convention direction tables and offset files use.
struct Offset {
  std::int16_t ox = 0;
  std::int16_t oy = 0;
  bool is_zero() const { return ox == 0 && oy == 0; }
  friend bool operator==(const Offset&, const Offset&) = default;
};

PixelCoord clamp_coord(int row, int col, int height, int width);

constexpr PixelDelta math_offset_to_pixel_delta(int ox, int oy) {
  return {-oy, ox};
}
constexpr PixelDelta math_offset_to_pixel_delta(Offset o) {
  return math_offset_to_pixel_delta(o.ox, o.oy);
}
constexpr Offset pixel_delta_to_math_offset(PixelDelta d) {
  return {static_cast<std::int16_t>(d.dcol), static_cast<std::int16_t>(-d.drow)};
}

// Dense class-id map. Every value is either < num_classes or ignore_id.
class LabelMap {
 public:
  LabelMap(Grid2D<ClassId> grid, int num_classes,
           ClassId ignore_id = kDefaultIgnoreId);

  const Grid2D<ClassId>& grid() const { return grid_; }
  int height() const { return grid_.height(); }
  int width() const { return grid_.width(); }
  int num_classes() const { return num_classes_; }
  ClassId ignore_id() const { return ignore_id_; }

  ClassId operator()(int row, int col) const { return grid_(row, col); }
  ClassId operator[](std::size_t i) const { return grid_[i]; }
  bool is_ignore(std::size_t i) const { return grid_[i] == ignore_id_; }
  template <typename U>
  bool same_shape(const Grid2D<U>& other) const {
    return grid_.same_shape(other);
  }
  bool same_shape(const LabelMap& other) const {
    return grid_.same_shape(other.grid_);
  }

  // Returns a copy holding `grid` with this map's class count and ignore id.
  LabelMap with_grid(Grid2D<ClassId> grid) const {
    return LabelMap(std::move(grid), num_classes_, ignore_id_);
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  Grid2D<ClassId> grid_;
  int num_classes_ = 0;
  ClassId ignore_id_ = kDefaultIgnoreId;
};

struct Instance {
  ClassId category = 0;
  Mask mask;
  friend bool operator==(const Instance&, const Instance&) = default;
};

// A list of instance masks sharing one image size. Masks may overlap; the
// later instance wins wherever an owner has to be picked.
class InstanceSet {
 public:
  InstanceSet(int height, int width, std::vector<Instance> instances = {});

  int height() const { return height_; }
  int width() const { return width_; }
  const std::vector<Instance>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }

  // Owner index per pixel: -1 for background, otherwise the index of the
  // last instance covering the pixel.
  Grid2D<std::int32_t> owner_map() const;

  friend bool operator==(const InstanceSet&, const InstanceSet&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Instance> instances_;
};

}  // namespace segfix
