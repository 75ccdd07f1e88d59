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

#include <cmath>

#include "oracles.hpp"
#include "segfix/distance_transform.hpp"

using namespace segfix;
using segfix::testing::labels_from;
using segfix::testing::mask_from;

TEST_CASE("decompose_labels produces one map per present class") {
  const auto maps = decompose_labels(labels_from(1, 3, {0, 0, 1}, 2));
  REQUIRE(maps.size() == 2);
  CHECK(maps[0].first == 0);
  CHECK(maps[0].second == mask_from(1, 3, {1, 1, 0}));
  CHECK(maps[1].second == mask_from(1, 3, {0, 0, 1}));

  CHECK(decompose_labels(labels_from(2, 2, {255, 255, 255, 255}, 2)).empty());

  const auto diag = decompose_labels(labels_from(2, 2, {0, 1, 1, 0}, 2));
  REQUIRE(diag.size() == 2);
  CHECK(diag[0].second == mask_from(2, 2, {1, 0, 0, 1}));
  CHECK(diag[1].second == mask_from(2, 2, {0, 1, 1, 0}));
}

TEST_CASE("ignore pixels are false in every decomposed map") {
  const auto maps = decompose_labels(labels_from(1, 4, {0, 255, 1, 0}, 2));
  for (const auto& [id, m] : maps) CHECK(m[1] == 0);
}

TEST_CASE("edt_exact small cases") {
  const auto d = edt_exact(mask_from(1, 4, {1, 0, 1, 1}));
  CHECK(d[0] == 1.0f);
  CHECK(d[1] == 0.0f);
  CHECK(d[2] == 1.0f);
  CHECK(d[3] == 2.0f);

  const auto all = edt_exact(Mask(3, 3, 1));
  for (float v : all.values()) CHECK(v == kDistanceSentinel);

  const auto none = edt_exact(Mask(3, 3, 0));
  for (float v : none.values()) CHECK(v == 0.0f);
}

TEST_CASE("edt_exact matches the all-pairs oracle exactly") {
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    const double density = 0.5 + 0.45 * (seed % 5) / 4.0;  // sparse to sparse-background
    const Mask m = segfix::testing::random_mask(seed, 32, 32, density);
    const auto want = segfix::testing::brute_edt_squared(m);
    const auto got = edt_squared(m);
    CHECK(got == want);
    const auto d = edt_exact(m);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (want[i] < 0) {
        CHECK(d[i] == kDistanceSentinel);
      } else {
        CHECK(d[i] == static_cast<float>(std::sqrt(static_cast<double>(want[i]))));
      }
    }
  }
}

TEST_CASE("edt handles non-square and single-site masks") {
  Mask m(5, 11, 1);
  m(4, 10) = 0;
  const auto got = edt_squared(m);
  CHECK(got == segfix::testing::brute_edt_squared(m));
  CHECK(got(0, 0) == 16 + 100);

  const Mask column = segfix::testing::random_mask(99, 40, 1, 0.8);
  CHECK(edt_squared(column) == segfix::testing::brute_edt_squared(column));
}

TEST_CASE("edt witness points at a nearest false pixel") {
  for (std::uint32_t seed = 0; seed < 10; ++seed) {
    const Mask m = segfix::testing::random_mask(seed + 100, 24, 19, 0.85);
    const auto want = segfix::testing::brute_edt_squared(m);
    const auto res = edt_with_witness(m);
    for (int r = 0; r < m.height(); ++r) {
      for (int c = 0; c < m.width(); ++c) {
        const std::int32_t n = res.nearest(r, c);
        REQUIRE(n >= 0);
        const int nr = n / m.width(), nc = n % m.width();
        CHECK(m(nr, nc) == 0);
        const std::int64_t d2 = std::int64_t{r - nr} * (r - nr) + std::int64_t{c - nc} * (c - nc);
        CHECK(d2 == want(r, c));
      }
    }
  }
}

TEST_CASE("edt is transpose-symmetric") {
  for (std::uint32_t seed = 0; seed < 10; ++seed) {
    const Mask m = segfix::testing::random_mask(seed + 7, 17, 29, 0.9);
    CHECK(edt_exact(segfix::testing::transpose(m)) ==
          segfix::testing::transpose(edt_exact(m)));
  }
}

TEST_CASE("fuse_distance small cases") {
  const auto labels = labels_from(1, 3, {0, 0, 1}, 2);
  std::vector<std::pair<ClassId, DistanceMap>> per_class;
  for (const auto& [id, m] : decompose_labels(labels)) per_class.emplace_back(id, edt_exact(m));
  const auto fused = fuse_distance(per_class, labels);
  CHECK(fused[0] == 2.0f);
  CHECK(fused[1] == 1.0f);
  CHECK(fused[2] == 1.0f);
  CHECK(fused_distance(labels) == fused);

  const auto single = fused_distance(LabelMap(Grid2D<ClassId>(4, 4, 1), 3));
  for (float v : single.values()) CHECK(v == kDistanceSentinel);

  per_class.pop_back();
  CHECK_THROWS_WITH_AS(fuse_distance(per_class, labels), "no distance map for class 1", Error);
}

TEST_CASE("fused distance matches the brute-force pairwise oracle") {
  for (std::uint32_t seed = 0; seed < 12; ++seed) {
    const LabelMap labels = seed % 2 ? segfix::testing::random_labels(seed, 16, 16, 3)
                                     : segfix::testing::blocky_labels(seed, 16, 16, 4, 6);
    const auto want = segfix::testing::brute_fused_squared(labels);
    const auto got = fused_distance(labels);
    std::vector<std::pair<ClassId, DistanceMap>> per_class;
    for (const auto& [id, m] : decompose_labels(labels)) per_class.emplace_back(id, edt_exact(m));
    CHECK(fuse_distance(per_class, labels) == got);
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (want[i] < 0) {
        CHECK(got[i] == kDistanceSentinel);
      } else {
        CHECK(got[i] == static_cast<float>(std::sqrt(static_cast<double>(want[i]))));
      }
    }
  }
}

TEST_CASE("fused distance treats ignore pixels as the sentinel and as non-class") {
  const auto labels = labels_from(1, 5, {0, 0, 255, 1, 1}, 2);
  const auto d = fused_distance(labels);
  CHECK(d[2] == kDistanceSentinel);
  CHECK(d[1] == 1.0f);
  CHECK(d[0] == 2.0f);
  CHECK(d[3] == 1.0f);
}

TEST_CASE("pixels 4-adjacent to another class have fused distance exactly 1") {
  for (std::uint32_t seed = 0; seed < 8; ++seed) {
    const LabelMap l = segfix::testing::blocky_labels(seed + 50, 40, 33, 5, 12);
    const auto d = fused_distance(l);
    for (int r = 0; r < l.height(); ++r) {
      for (int c = 0; c < l.width(); ++c) {
        bool adjacent = false;
        const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const int rr = r + dr[k], cc = c + dc[k];
          if (rr >= 0 && rr < l.height() && cc >= 0 && cc < l.width() && l(rr, cc) != l(r, c))
            adjacent = true;
        }
        if (adjacent) CHECK(d(r, c) == 1.0f);
        else CHECK(d(r, c) > 1.0f);
      }
    }
  }
}

TEST_CASE("boundary_from_distance thresholds strictly") {
  Grid2D<ClassId> half(4, 4, 0);
  for (int r = 0; r < 4; ++r) half(r, 2) = half(r, 3) = 1;
  const auto all = boundary_from_distance(fused_distance(LabelMap(half, 2)), 5.0);
  CHECK(all.count() == 16);

  const auto none =
      boundary_from_distance(fused_distance(LabelMap(Grid2D<ClassId>(5, 5, 0), 1)), 5.0);
  CHECK(none.count() == 0);

  const auto b = boundary_from_distance(fused_distance(labels_from(1, 3, {0, 0, 1}, 2)), 1.5);
  CHECK(b.mask == mask_from(1, 3, {0, 1, 1}));
  // distance exactly equal to gamma is not boundary
  const auto eq = boundary_from_distance(fused_distance(labels_from(1, 3, {0, 0, 1}, 2)), 2.0);
  CHECK(eq.mask == mask_from(1, 3, {0, 1, 1}));

  CHECK_THROWS_AS(boundary_from_distance(DistanceMap(2, 2, 1.0f), 0.0), Error);
  CHECK_THROWS_AS(boundary_from_distance(DistanceMap(2, 2, 1.0f), -1.0), Error);
}

TEST_CASE("boundary masks are monotone in gamma") {
  for (std::uint32_t seed = 0; seed < 6; ++seed) {
    const auto d = fused_distance(segfix::testing::blocky_labels(seed, 48, 48, 4, 10));
    for (double g1 : {0.5, 1.0, 1.5, 2.0, 3.0, 5.0}) {
      for (double g2 : {g1, g1 + 0.5, g1 * 2, 10.0}) {
        const auto a = boundary_from_distance(d, g1);
        const auto b = boundary_from_distance(d, g2);
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (a.mask[i]) CHECK(b.mask[i]);
        }
      }
    }
  }
}

TEST_CASE("region distances agree with full-image transforms") {
  const LabelMap l = segfix::testing::blocky_labels(3, 30, 41, 6, 14);
  const RegionMap regions = region_map_from_labels(l);
  visit_region_distances(regions, l.num_classes(), 4, true, [&](const RegionDistance& rd) {
    Mask own(l.height(), l.width(), 0);
    for (std::size_t i = 0; i < own.size(); ++i) own[i] = regions[i] == rd.region;
    const auto full = edt_exact(own);
    for (int r = 0; r < rd.box.height; ++r) {
      for (int c = 0; c < rd.box.width; ++c) {
        CHECK(rd.distance(r, c) == full(rd.box.row0 + r, rd.box.col0 + c));
      }
    }
  });
}
