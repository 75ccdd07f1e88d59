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

#include "segfix/refinement.hpp"

#include <fmt/format.h>

namespace segfix {
namespace {

void require_shape(int h, int w, const OffsetField& offsets, std::string_view what) {
  if (!offsets.offsets.same_shape(h, w)) {
    throw Error(fmt::format("{} is {}x{} but offsets are {}x{}", what, h, w,
                            offsets.height(), offsets.width()));
  }
}

template <typename T>
Grid2D<T> gather(const Grid2D<T>& src, const OffsetField& offsets) {
  const int h = src.height();
  const int w = src.width();
  Grid2D<T> out = src;
  for (int r = 0; r < h; ++r) {
    const Offset* o = &offsets.offsets(r, 0);
    for (int c = 0; c < w; ++c) {
      if (o[c].is_zero()) continue;
      const PixelDelta d = math_offset_to_pixel_delta(o[c]);
      const PixelCoord t = clamp_coord(r + d.drow, c + d.dcol, h, w);
      out(r, c) = src(t.row, t.col);
    }
  }
  return out;
}

template <typename T>
Grid2D<T> gather(const Grid2D<T>& src, const Grid2D<std::int32_t>& sources) {
  Grid2D<T> out = src;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[sources[i]];
  return out;
}

}  // namespace

RefinementScheme parse_scheme(std::string_view name) {
  if (name == "rescale") return RefinementScheme::kRescale;
  if (name == "iterative") return RefinementScheme::kIterative;
  throw Error(fmt::format("unknown refinement scheme '{}' (expected rescale or iterative)",
                          name));
}

std::string_view scheme_name(RefinementScheme scheme) {
  return scheme == RefinementScheme::kRescale ? "rescale" : "iterative";
}

void RefinementConfig::validate() const {
  if (scale < 1) throw Error(fmt::format("refinement scale must be >= 1, got {}", scale));
  if (max_iterations < 1) {
    throw Error(fmt::format("max_iterations must be >= 1, got {}", max_iterations));
  }
}

LabelMap refine_labels(const LabelMap& coarse, const OffsetField& offsets) {
  require_shape(coarse.height(), coarse.width(), offsets, "coarse label map");
  return coarse.with_grid(gather(coarse.grid(), offsets));
}

Grid2D<std::int32_t> iterative_sources(const OffsetField& offsets, const Mask& boundary,
                                       int max_iterations) {
  const int h = offsets.height();
  const int w = offsets.width();
  if (!boundary.same_shape(h, w)) {
    throw Error(fmt::format("boundary mask is {}x{} but offsets are {}x{}",
                            boundary.height(), boundary.width(), h, w));
  }
  if (offsets.scale < 1) {
    throw Error(fmt::format("offset field has invalid scale {}", offsets.scale));
  }
  Grid2D<std::int32_t> src(h, w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      PixelCoord p{r, c};
      for (int it = 0; it < max_iterations && boundary(p.row, p.col); ++it) {
        const Offset o = offsets.offsets(p.row, p.col);
        const PixelDelta d = math_offset_to_pixel_delta(o.ox / offsets.scale,
                                                        o.oy / offsets.scale);
        p = clamp_coord(p.row + d.drow, p.col + d.dcol, h, w);
      }
      src(r, c) = p.row * w + p.col;
    }
  }
  return src;
}

LabelMap refine_iterative(const LabelMap& coarse, const OffsetField& offsets,
                          const BoundaryMask& boundary, const RefinementConfig& cfg) {
  cfg.validate();
  require_shape(coarse.height(), coarse.width(), offsets, "coarse label map");
  return coarse.with_grid(
      gather(coarse.grid(), iterative_sources(offsets, boundary.mask, cfg.max_iterations)));
}

LabelMap refine(const LabelMap& coarse, const OffsetField& offsets,
                const BoundaryMask& boundary, const RefinementConfig& cfg) {
  cfg.validate();
  if (cfg.scheme == RefinementScheme::kIterative) {
    return refine_iterative(coarse, offsets, boundary, cfg);
  }
  return refine_labels(coarse, rescale_offsets(offsets, cfg.scale));
}

InstanceSet refine_instances(const InstanceSet& predictions, const OffsetField& offsets,
                             const RefinementConfig& cfg) {
  cfg.validate();
  require_shape(predictions.height(), predictions.width(), offsets, "instance set");
  std::vector<Instance> out;
  out.reserve(predictions.size());
  if (cfg.scheme == RefinementScheme::kIterative) {
    const auto sources =
        iterative_sources(offsets, nonzero_offsets(offsets), cfg.max_iterations);
    for (const auto& inst : predictions.instances()) {
      out.push_back({inst.category, gather(inst.mask, sources)});
    }
  } else {
    const OffsetField scaled = rescale_offsets(offsets, cfg.scale);
    for (const auto& inst : predictions.instances()) {
      out.push_back({inst.category, gather(inst.mask, scaled)});
    }
  }
  return InstanceSet(predictions.height(), predictions.width(), std::move(out));
}

double offset_consistency(const LabelMap& labels, const OffsetField& offsets) {
  require_shape(labels.height(), labels.width(), offsets, "label map");
  const int h = labels.height();
  const int w = labels.width();
  std::int64_t n = 0, same = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Offset o = offsets.offsets(r, c);
      if (o.is_zero()) continue;
      const PixelDelta d = math_offset_to_pixel_delta(o);
      const PixelCoord t = clamp_coord(r + d.drow, c + d.dcol, h, w);
      ++n;
      same += labels(t.row, t.col) == labels(r, c);
    }
  }
  return n == 0 ? 1.0 : static_cast<double>(same) / static_cast<double>(n);
}

}  // namespace segfix
