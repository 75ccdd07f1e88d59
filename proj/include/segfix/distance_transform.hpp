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

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "segfix/grid.hpp"

namespace segfix {

// Value stored where no pixel outside the class exists. Finite so that the
// gradient filters downstream never see inf/nan.
inline constexpr float kDistanceSentinel = 1.0e6f;
inline constexpr double kDefaultGamma = 5.0;

// Per-pixel Euclidean distance in pixel units.
using DistanceMap = FloatGrid;

struct BoundaryMask {
  Mask mask;
  double gamma = kDefaultGamma;

  int height() const { return mask.height(); }
  int width() const { return mask.width(); }
  bool operator()(int r, int c) const { return mask(r, c) != 0; }
  std::size_t count() const;
};

// One binary map per class id present in `labels`, ordered by class id.
// Ignore pixels are false in every map.
std::vector<std::pair<ClassId, Mask>> decompose_labels(const LabelMap& labels);

// Squared distance from every true pixel to the nearest false pixel, computed
// exactly in integer arithmetic. False pixels hold 0. When the mask has no
// false pixel at all every entry is -1.
Grid2D<std::int64_t> edt_squared(const Mask& mask);

// Exact Euclidean distance to the nearest false pixel (0 on false pixels);
// kDistanceSentinel everywhere when no false pixel exists.
DistanceMap edt_exact(const Mask& mask);

struct EdtWithWitness {
  DistanceMap distance;
  // Row-major index of a nearest false pixel; the pixel itself when false,
  // -1 when the mask has no false pixel.
  Grid2D<std::int32_t> nearest;
};
EdtWithWitness edt_with_witness(const Mask& mask);

// fused(p) = per_class[labels(p)](p); ignore pixels get the sentinel.
DistanceMap fuse_distance(
    const std::vector<std::pair<ClassId, DistanceMap>>& per_class,
    const LabelMap& labels);

// decompose + per-class EDT + fuse in one call.
DistanceMap fused_distance(const LabelMap& labels);

// mask(p) = d(p) < gamma. Ignore pixels carry the sentinel, so they are never
// boundary for any practical gamma.
BoundaryMask boundary_from_distance(const DistanceMap& d, double gamma);

// ---------------------------------------------------------------------------
// Region machinery shared by the semantic and instance pipelines. A region
// map assigns every pixel a region id in [0, num_regions) or -1 (ignored).
// Each region's distance map measures the distance to the nearest pixel that
// is not in the region (ignored pixels included).

using RegionMap = Grid2D<std::int32_t>;

struct Box {
  int row0 = 0;
  int col0 = 0;
  int height = 0;
  int width = 0;
};

struct RegionDistance {
  int region = 0;
  // Sub-rectangle of the image the local grids cover: the region's bounding
  // box grown by the requested margin and clipped to the image. Distances are
  // exact on every region pixel and 0 on every other pixel of the box.
  Box box;
  DistanceMap distance;
  // Global row-major index of a nearest non-region pixel; filled only when
  // requested, -1 where no such pixel exists.
  Grid2D<std::int32_t> nearest;
};

RegionMap region_map_from_labels(const LabelMap& labels);

// Calls `fn` once per non-empty region, in increasing region id order.
void visit_region_distances(
    const RegionMap& regions, int num_regions, int margin, bool want_nearest,
    const std::function<void(const RegionDistance&)>& fn);

struct FusedRegionDistance {
  DistanceMap distance;            // sentinel on ignored pixels
  Grid2D<std::int32_t> nearest;    // empty unless requested
};
FusedRegionDistance fuse_region_distances(const RegionMap& regions,
                                          int num_regions, bool want_nearest);

}  // namespace segfix
