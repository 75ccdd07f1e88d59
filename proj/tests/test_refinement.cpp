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

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "segfix/refinement.hpp"
#include "segfix/synth.hpp"

using namespace segfix;
using segfix::testing::labels_from;

namespace {

OffsetField zero_field(int h, int w, int scale = 1) {
  return OffsetField{Grid2D<Offset>(h, w, Offset{}), scale};
}

// vertical split at column `split`: class 0 on the left, class 1 on the right
LabelMap split_map(int h, int w, int split) {
  Grid2D<ClassId> g(h, w, 0);
  for (int r = 0; r < h; ++r)
    for (int c = split; c < w; ++c) g(r, c) = 1;
  return LabelMap(g, 2);
}

}  // namespace

TEST_CASE("scheme names") {
  CHECK(parse_scheme("rescale") == RefinementScheme::kRescale);
  CHECK(parse_scheme("iterative") == RefinementScheme::kIterative);
  CHECK(scheme_name(RefinementScheme::kIterative) == "iterative");
  CHECK_THROWS_AS(parse_scheme("bilinear"), Error);
  CHECK_THROWS_AS((RefinementConfig{.scale = 0}.validate()), Error);
  CHECK_THROWS_AS((RefinementConfig{.max_iterations = 0}.validate()), Error);
  CHECK_NOTHROW(RefinementConfig{}.validate());
}

TEST_CASE("road boundary pixel takes the car label one step to the right") {
  constexpr ClassId road = 0, car = 13;
  const LabelMap coarse = labels_from(3, 3, {road, road, road, road, road, car, road, road, car}, 19);
  auto offsets = zero_field(3, 3);
  offsets.offsets(1, 1) = Offset{1, 0};
  const LabelMap refined = refine_labels(coarse, offsets);
  CHECK(refined(1, 1) == car);
  for (int i = 0; i < 9; ++i)
    if (i != 4) CHECK(refined.grid()[i] == coarse.grid()[i]);
  CHECK(coarse(1, 1) == road);  // input untouched
}

TEST_CASE("zero offsets are the identity") {
  const LabelMap l = generate_labels({.seed = 3, .height = 40, .width = 30});
  CHECK(refine_labels(l, zero_field(40, 30)).grid() == l.grid());
  const BoundaryMask b{Mask(40, 30, 1), 5.0};
  CHECK(refine(l, zero_field(40, 30), b, {.scheme = RefinementScheme::kIterative}).grid() ==
        l.grid());
}

TEST_CASE("offsets leaving the image sample the clamped border pixel") {
  const LabelMap l = labels_from(2, 3, {0, 1, 2, 3, 4, 5}, 6);
  auto offsets = zero_field(2, 3);
  offsets.offsets(0, 0) = Offset{-2, 2};   // up-left, off the corner
  offsets.offsets(1, 1) = Offset{2, -2};   // down-right
  offsets.offsets(0, 2) = Offset{2, 0};    // right
  const LabelMap out = refine_labels(l, offsets);
  CHECK(out(0, 0) == 0);
  CHECK(out(1, 1) == 5);
  CHECK(out(0, 2) == 2);
}

TEST_CASE("shape mismatches are errors") {
  const LabelMap l(Grid2D<ClassId>(4, 4, 0), 1);
  CHECK_THROWS_AS(refine_labels(l, zero_field(4, 5)), Error);
  CHECK_THROWS_AS(refine_iterative(l, zero_field(4, 4), BoundaryMask{Mask(3, 4, 0), 5.0},
                                   {.scheme = RefinementScheme::kIterative}),
                  Error);
  CHECK_THROWS_AS(refine_instances(InstanceSet(4, 4, {{0, Mask(4, 4, 1)}}), zero_field(5, 4), {}),
                  Error);
  CHECK_THROWS_AS(offset_consistency(l, zero_field(1, 1)), Error);
}

TEST_CASE("iterative walk across a width-3 band stops at the first interior pixel") {
  constexpr int h = 4, w = 12;
  auto offsets = zero_field(h, w);
  Mask band(h, w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 5; c <= 7; ++c) {
      band(r, c) = 1;
      offsets.offsets(r, c) = Offset{-1, 0};
    }
  }
  const auto src = iterative_sources(offsets, band, 10);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int want = (c >= 5 && c <= 7) ? r * w + 4 : r * w + c;
      CHECK(src(r, c) == want);
    }
  }
}

TEST_CASE("iterative hops use unit offsets whatever the stored scale") {
  auto offsets = zero_field(1, 8, 3);
  Mask band(1, 8, 0);
  band(0, 6) = band(0, 5) = 1;
  offsets.offsets(0, 6) = offsets.offsets(0, 5) = Offset{-3, 0};
  const auto src = iterative_sources(offsets, band, 10);
  CHECK(src(0, 6) == 4);
  CHECK(src(0, 5) == 4);
}

TEST_CASE("off-boundary pixels are not moved by the iterative scheme") {
  auto offsets = zero_field(3, 3);
  for (auto& o : offsets.offsets.values()) o = Offset{1, 1};
  const auto src = iterative_sources(offsets, Mask(3, 3, 0), 10);
  for (int i = 0; i < 9; ++i) CHECK(src[i] == i);
}

TEST_CASE("a two-pixel cycle ends after max_iterations") {
  auto offsets = zero_field(1, 4);
  Mask band(1, 4, 0);
  band(0, 1) = band(0, 2) = 1;
  offsets.offsets(0, 1) = Offset{1, 0};
  offsets.offsets(0, 2) = Offset{-1, 0};
  const LabelMap coarse = labels_from(1, 4, {0, 1, 2, 3}, 4);
  const BoundaryMask b{band, 5.0};
  const auto even = refine_iterative(coarse, offsets, b,
                                     {.scheme = RefinementScheme::kIterative, .max_iterations = 10});
  CHECK(even(0, 1) == 1);
  CHECK(even(0, 2) == 2);
  const auto odd = refine_iterative(coarse, offsets, b,
                                    {.scheme = RefinementScheme::kIterative, .max_iterations = 3});
  CHECK(odd(0, 1) == 2);
  CHECK(odd(0, 2) == 1);
}

TEST_CASE("rescale and iterative agree on a straight band no wider than the scale") {
  constexpr int h = 8, w = 16;
  // prediction bleeds class 1 two columns into class 0
  const LabelMap coarse = split_map(h, w, 6);
  auto offsets = zero_field(h, w);
  Mask band(h, w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c : {6, 7}) {
      band(r, c) = 1;
      offsets.offsets(r, c) = Offset{-1, 0};
    }
    for (int c : {8, 9}) {
      band(r, c) = 1;
      offsets.offsets(r, c) = Offset{1, 0};
    }
  }
  const BoundaryMask b{band, 5.0};
  const auto a = refine(coarse, offsets, b, {.scheme = RefinementScheme::kRescale, .scale = 2});
  const auto it = refine(coarse, offsets, b, {.scheme = RefinementScheme::kIterative, .scale = 2});
  CHECK(a.grid() == it.grid());
  CHECK(a.grid() == split_map(h, w, 8).grid());
}

TEST_CASE("pixels with zero offset are bit-identical after refinement") {
  std::mt19937 rng(4);
  const LabelMap l = generate_labels({.seed = 8, .height = 50, .width = 60});
  auto offsets = zero_field(50, 60, 2);
  std::uniform_int_distribution<int> pick(0, 9), comp(-4, 4);
  for (auto& o : offsets.offsets.values())
    if (pick(rng) == 0) o = Offset{static_cast<std::int16_t>(comp(rng)), static_cast<std::int16_t>(comp(rng))};
  const auto out = refine_labels(l, offsets);
  for (std::size_t i = 0; i < out.grid().size(); ++i)
    if (offsets.offsets[i].is_zero()) CHECK(out.grid()[i] == l.grid()[i]);
  CHECK(refine_labels(l, offsets).grid() == out.grid());
}

TEST_CASE("ground truth is a fixed point of its own offsets") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const LabelMap l = generate_labels({.seed = seed});
    const auto gt = gt_direction_pipeline(l, 5.0, 8);
    const auto offsets = build_offset_field(gt.directions, gt.boundary, 2);
    const auto refined = refine_labels(l, offsets);
    std::size_t agree = 0;
    for (int r = 0; r < l.height(); ++r) {
      for (int c = 0; c < l.width(); ++c) {
        agree += refined(r, c) == l(r, c);
        const auto d = math_offset_to_pixel_delta(offsets.offsets(r, c));
        const auto t = clamp_coord(r + d.drow, c + d.dcol, l.height(), l.width());
        if (l(t.row, t.col) == l(r, c)) CHECK(refined(r, c) == l(r, c));
      }
    }
    CHECK(static_cast<double>(agree) / l.grid().size() >= 0.99);
  }
}

TEST_CASE("offset consistency") {
  const LabelMap l = split_map(2, 4, 2);
  auto offsets = zero_field(2, 4);
  CHECK(offset_consistency(l, offsets) == 1.0);
  offsets.offsets(0, 1) = Offset{-1, 0};  // same class
  offsets.offsets(1, 1) = Offset{1, 0};   // crosses the split
  CHECK(offset_consistency(l, offsets) == 0.5);
}

TEST_CASE("instance refinement") {
  Mask disc(33, 33, 0);
  for (int r = 0; r < 33; ++r)
    for (int c = 0; c < 33; ++c)
      if ((r - 16) * (r - 16) + (c - 16) * (c - 16) <= 121) disc(r, c) = 1;
  const InstanceSet set(33, 33, {{7, disc}});

  SUBCASE("zero offsets leave instances unchanged") {
    for (auto scheme : {RefinementScheme::kRescale, RefinementScheme::kIterative}) {
      const auto out = refine_instances(set, zero_field(33, 33), {.scheme = scheme});
      REQUIRE(out.size() == 1);
      CHECK(out.instances()[0].category == 7);
      CHECK(out.instances()[0].mask == disc);
    }
  }
  SUBCASE("a disc refined with its own ground-truth offsets is preserved") {
    const auto gt = instance_gt_pipeline(set, 5.0, 8);
    const auto offsets = build_offset_field(gt.directions, gt.boundary, 1);
    for (auto scheme : {RefinementScheme::kRescale, RefinementScheme::kIterative}) {
      const auto out = refine_instances(set, offsets, {.scheme = scheme, .scale = 2});
      std::size_t same = 0;
      for (std::size_t i = 0; i < disc.size(); ++i) same += out.instances()[0].mask[i] == disc[i];
      CHECK(static_cast<double>(same) / disc.size() >= 0.99);
    }
  }
  SUBCASE("a one-pixel protrusion is shaved off") {
    Mask m(8, 8, 0);
    for (int r = 2; r <= 5; ++r)
      for (int c = 2; c <= 5; ++c) m(r, c) = 1;
    m(1, 3) = 1;
    auto offsets = zero_field(8, 8);
    offsets.offsets(1, 3) = Offset{0, 1};  // points up, away from the body
    const auto out = refine_instances(InstanceSet(8, 8, {{1, m}}), offsets, {.scale = 1});
    Mask want = m;
    want(1, 3) = 0;
    CHECK(out.instances()[0].mask == want);
  }
  SUBCASE("categories and ordering are preserved") {
    Mask small(33, 33, 0);
    small(0, 0) = 1;
    const InstanceSet two(33, 33, {{4, small}, {2, disc}});
    const auto out = refine_instances(two, zero_field(33, 33), {});
    REQUIRE(out.size() == 2);
    CHECK(out.instances()[0].category == 4);
    CHECK(out.instances()[1].category == 2);
  }
}
