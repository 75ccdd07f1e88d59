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

#include <array>
#include <cstdint>
#include <span>

#include "segfix/distance_transform.hpp"
#include "segfix/grid.hpp"

namespace segfix {

// 9-tap separable Sobel: the derivative is [-1, 0, 1] convolved three times
// with [1, 2, 1]; the smoothing vector is the order-8 binomial row.
inline constexpr std::array<double, 9> kSobelDerivative = {-1, -6, -14, -14, 0,
                                                           14, 14, 6,   1};
inline constexpr std::array<double, 9> kSobelSmoothing = {1,  8,  28, 56, 70,
                                                          56, 28, 8,  1};

inline constexpr int kDefaultNumDirections = 8;

struct Gradient {
  FloatGrid gx;  // derivative toward +col
  FloatGrid gy;  // derivative toward -row (math "up")
};

// Cross-correlation with the 9x9 Sobel pair, replicate padding at borders.
Gradient sobel_gradient_9(const DistanceMap& d);

// Degrees in [0, 360).
using AngleField = FloatGrid;

// atan2(gy, gx) in degrees mapped into [0, 360); 0 when both are zero.
double angle_degrees(double gx, double gy);
AngleField angle_from_gradient(const FloatGrid& gx, const FloatGrid& gy);

// Throws unless m is 4, 8 or 16.
void check_num_directions(int m);

// m = 4: floor(theta / 90); m = 8: round(theta / 45) mod 8;
// m = 16: round(theta / 22.5) mod 16.
int quantize_angle(double theta_degrees, int m);

// Same rule as quantize_angle(angle_degrees(gx, gy), m), evaluated on the
// angle relative to the gradient's quadrant so that rotating the gradient by
// 90 degrees shifts the category by exactly m / 4.
int quantize_gradient(double gx, double gy, int m);

struct QuantizedDirectionMap {
  Grid2D<std::uint8_t> categories;
  int num_directions = kDefaultNumDirections;

  int height() const { return categories.height(); }
  int width() const { return categories.width(); }
  friend bool operator==(const QuantizedDirectionMap&,
                         const QuantizedDirectionMap&) = default;
};

QuantizedDirectionMap quantize_directions(const AngleField& angles, int m);

// Unit offset for one direction category, math convention.
Offset direction_to_offset(int category, int m);
std::span<const Offset> offset_table(int m);

struct OffsetField {
  // Stored offsets, already multiplied by `scale`.
  Grid2D<Offset> offsets;
  int scale = 1;

  int height() const { return offsets.height(); }
  int width() const { return offsets.width(); }
  friend bool operator==(const OffsetField&, const OffsetField&) = default;
};

OffsetField build_offset_field(const QuantizedDirectionMap& q,
                               const BoundaryMask& b, int scale);

// Re-expresses `field` with a different scale: each offset is divided by the
// current scale and multiplied by `scale`.
OffsetField rescale_offsets(const OffsetField& field, int scale);

// Nonzero offsets, as a mask.
Mask nonzero_offsets(const OffsetField& field);

struct GroundTruth {
  DistanceMap distance;  // fused, sentinel on ignored pixels
  BoundaryMask boundary;
  QuantizedDirectionMap directions;
};

// Per-region EDT, per-region Sobel on that region's own distance map, and
// quantization of the own-region gradient at each region pixel.
GroundTruth region_gt_pipeline(const RegionMap& regions, int num_regions,
                               double gamma, int m);

GroundTruth gt_direction_pipeline(const LabelMap& labels,
                                  double gamma = kDefaultGamma,
                                  int m = kDefaultNumDirections);

// Regions are the instance owners (later instances win) plus background.
GroundTruth instance_gt_pipeline(const InstanceSet& instances,
                                 double gamma = kDefaultGamma,
                                 int m = kDefaultNumDirections);

}  // namespace segfix
