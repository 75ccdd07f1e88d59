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

#include <string_view>

#include "segfix/direction_field.hpp"
#include "segfix/grid.hpp"

namespace segfix {

enum class RefinementScheme {
  kRescale,    // every offset multiplied by `scale`, one lookup
  kIterative,  // unit hops until an off-boundary pixel is reached
};

RefinementScheme parse_scheme(std::string_view name);
std::string_view scheme_name(RefinementScheme scheme);

struct RefinementConfig {
  RefinementScheme scheme = RefinementScheme::kRescale;
  int scale = 2;
  int max_iterations = 10;

  void validate() const;
};

// refined(p) = coarse(clamp(p + offset(p))) wherever offset(p) != 0, using the
// offsets exactly as stored. Reads only `coarse`.
LabelMap refine_labels(const LabelMap& coarse, const OffsetField& offsets);

// Builds the source pixel of every output pixel under the iterative scheme:
// starting at p, hop p <- clamp(p + unit_offset(p)) while p is a boundary
// pixel, at most max_iterations times.
Grid2D<std::int32_t> iterative_sources(const OffsetField& offsets,
                                       const Mask& boundary, int max_iterations);

LabelMap refine_iterative(const LabelMap& coarse, const OffsetField& offsets,
                          const BoundaryMask& boundary, const RefinementConfig& cfg);

// Scheme dispatch. Under kRescale the offsets are re-expressed at cfg.scale
// and `boundary` is unused.
LabelMap refine(const LabelMap& coarse, const OffsetField& offsets,
                const BoundaryMask& boundary, const RefinementConfig& cfg);

// Each mask is refined on its own with the shared offsets. The iterative
// scheme treats nonzero-offset pixels as the boundary.
InstanceSet refine_instances(const InstanceSet& predictions, const OffsetField& offsets,
                             const RefinementConfig& cfg);

// Fraction of nonzero-offset pixels whose target pixel carries the same
// label as the pixel itself; 1.0 when no offset is nonzero.
double offset_consistency(const LabelMap& labels, const OffsetField& offsets);

}  // namespace segfix
