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

#include "segfix/distance_transform.hpp"

#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace segfix {
namespace {

// Exact rational threshold used by the lower envelope. den > 0.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

bool ratio_le(const Ratio& a, const Ratio& b) {
  return a.num * b.den <= b.num * a.den;
}

// Separable exact EDT over a contiguous h*w mask (Felzenszwalb-Huttenlocher
// lower envelope, integer arithmetic). d2 receives squared distances; nearest,
// when non-empty, receives the local index of a nearest false pixel.
// Returns false when the mask contains no false pixel (outputs untouched).
bool edt_core(std::span<const std::uint8_t> mask, int h, int w,
              std::span<std::int64_t> d2, std::span<std::int32_t> nearest) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<std::int32_t> near_row(n);
  bool any_false = false;

  // Column pass: nearest false row in the same column, -1 if none.
  for (int c = 0; c < w; ++c) near_row[c] = mask[c] ? -1 : 0;
  for (int r = 1; r < h; ++r) {
    const std::uint8_t* m = mask.data() + static_cast<std::size_t>(r) * w;
    const std::int32_t* up = near_row.data() + static_cast<std::size_t>(r - 1) * w;
    std::int32_t* cur = near_row.data() + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) cur[c] = m[c] ? up[c] : r;
  }
  std::vector<std::int32_t> below(w, -1);
  for (int r = h - 1; r >= 0; --r) {
    const std::uint8_t* m = mask.data() + static_cast<std::size_t>(r) * w;
    std::int32_t* cur = near_row.data() + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < w; ++c) {
      if (!m[c]) {
        below[c] = r;
        any_false = true;
      } else if (below[c] >= 0 && (cur[c] < 0 || below[c] - r < r - cur[c])) {
        cur[c] = below[c];
      }
    }
  }
  if (!any_false) return false;

  // Row pass: lower envelope of parabolas f(v) + (q - v)^2 over the columns
  // that contain at least one false pixel.
  std::vector<std::int64_t> f(w);
  std::vector<int> v(w);
  std::vector<Ratio> z(w + 1);
  for (int r = 0; r < h; ++r) {
    const std::int32_t* nr = near_row.data() + static_cast<std::size_t>(r) * w;
    int k = -1;
    for (int q = 0; q < w; ++q) {
      if (nr[q] < 0) continue;
      const std::int64_t dr = r - nr[q];
      f[q] = dr * dr;
      if (k < 0) {
        k = 0;
        v[0] = q;
        continue;
      }
      Ratio s;
      for (;;) {
        const std::int64_t p = v[k];
        s = {(f[q] + std::int64_t{q} * q) - (f[p] + p * p), 2 * (q - p)};
        if (k > 0 && ratio_le(s, z[k])) {
          --k;
        } else {
          break;
        }
      }
      ++k;
      v[k] = q;
      z[k] = s;
    }
    const int last = k;
    std::int64_t* out = d2.data() + static_cast<std::size_t>(r) * w;
    std::int32_t* wit =
        nearest.empty() ? nullptr : nearest.data() + static_cast<std::size_t>(r) * w;
    // any_false guarantees at least one site per row.
    k = 0;
    for (int q = 0; q < w; ++q) {
      while (k < last && z[k + 1].num < std::int64_t{q} * z[k + 1].den) ++k;
      const std::int64_t dq = q - v[k];
      out[q] = dq * dq + f[v[k]];
      if (wit) wit[q] = nr[v[k]] * w + v[k];
    }
  }
  return true;
}

float root(std::int64_t d2) {
  return static_cast<float>(std::sqrt(static_cast<double>(d2)));
}

}  // namespace

std::size_t BoundaryMask::count() const {
  std::size_t n = 0;
  for (auto v : mask.values()) n += v != 0;
  return n;
}

std::vector<std::pair<ClassId, Mask>> decompose_labels(const LabelMap& labels) {
  std::map<ClassId, Mask> maps;
  const auto& g = labels.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const ClassId v = g[i];
    if (v == labels.ignore_id()) continue;
    auto it = maps.find(v);
    if (it == maps.end()) {
      it = maps.emplace(v, Mask(g.height(), g.width(), 0)).first;
    }
    it->second[i] = 1;
  }
  return {std::make_move_iterator(maps.begin()),
          std::make_move_iterator(maps.end())};
}

Grid2D<std::int64_t> edt_squared(const Mask& mask) {
  Grid2D<std::int64_t> d2(mask.height(), mask.width(), 0);
  if (!edt_core(mask.values(), mask.height(), mask.width(), d2.values(), {})) {
    std::fill(d2.values().begin(), d2.values().end(), -1);
  }
  return d2;
}

DistanceMap edt_exact(const Mask& mask) {
  const auto d2 = edt_squared(mask);
  DistanceMap out(mask.height(), mask.width(), 0.0f);
  for (std::size_t i = 0; i < d2.size(); ++i) {
    out[i] = d2[i] < 0 ? kDistanceSentinel : root(d2[i]);
  }
  return out;
}

EdtWithWitness edt_with_witness(const Mask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  Grid2D<std::int64_t> d2(h, w, 0);
  EdtWithWitness out{DistanceMap(h, w, 0.0f), Grid2D<std::int32_t>(h, w, -1)};
  if (!edt_core(mask.values(), h, w, d2.values(), out.nearest.values())) {
    std::fill(out.distance.values().begin(), out.distance.values().end(),
              kDistanceSentinel);
    return out;
  }
  for (std::size_t i = 0; i < d2.size(); ++i) out.distance[i] = root(d2[i]);
  return out;
}

DistanceMap fuse_distance(
    const std::vector<std::pair<ClassId, DistanceMap>>& per_class,
    const LabelMap& labels) {
  std::map<ClassId, const DistanceMap*> lookup;
  for (const auto& [id, d] : per_class) {
    if (!labels.same_shape(d)) {
      throw Error(fmt::format("distance map for class {} is {}x{}, labels are {}x{}",
                              id, d.height(), d.width(), labels.height(),
                              labels.width()));
    }
    lookup[id] = &d;
  }
  DistanceMap fused(labels.height(), labels.width(), kDistanceSentinel);
  const auto& g = labels.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (labels.is_ignore(i)) continue;
    auto it = lookup.find(g[i]);
    if (it == lookup.end()) {
      throw Error(fmt::format("no distance map for class {}", g[i]));
    }
    fused[i] = (*it->second)[i];
  }
  return fused;
}

DistanceMap fused_distance(const LabelMap& labels) {
  return fuse_region_distances(region_map_from_labels(labels),
                               labels.num_classes(), false)
      .distance;
}

BoundaryMask boundary_from_distance(const DistanceMap& d, double gamma) {
  if (!(gamma > 0.0)) {
    throw Error(fmt::format("boundary threshold gamma must be > 0, got {}", gamma));
  }
  BoundaryMask b{Mask(d.height(), d.width(), 0), gamma};
  for (std::size_t i = 0; i < d.size(); ++i) b.mask[i] = d[i] < gamma;
  return b;
}

RegionMap region_map_from_labels(const LabelMap& labels) {
  const auto& g = labels.grid();
  RegionMap regions(g.height(), g.width(), -1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!labels.is_ignore(i)) regions[i] = g[i];
  }
  return regions;
}

void visit_region_distances(
    const RegionMap& regions, int num_regions, int margin, bool want_nearest,
    const std::function<void(const RegionDistance&)>& fn) {
  const int h = regions.height();
  const int w = regions.width();
  // The grown box must contain a ring of non-region pixels around the
  // region (or the image edge) for the local transform to be exact.
  margin = std::max(margin, 1);

  struct Extent {
    int r0 = std::numeric_limits<int>::max(), c0 = std::numeric_limits<int>::max();
    int r1 = -1, c1 = -1;
  };
  std::vector<Extent> ext(num_regions);
  for (int r = 0; r < h; ++r) {
    const auto row = regions.row(r);
    for (int c = 0; c < w; ++c) {
      const std::int32_t id = row[c];
      if (id < 0) continue;
      if (id >= num_regions) {
        throw Error(fmt::format("region id {} out of range [0, {})", id, num_regions));
      }
      auto& e = ext[id];
      e.r0 = std::min(e.r0, r);
      e.r1 = std::max(e.r1, r);
      e.c0 = std::min(e.c0, c);
      e.c1 = std::max(e.c1, c);
    }
  }

  std::vector<std::uint8_t> local_mask;
  std::vector<std::int64_t> local_d2;
  std::vector<std::int32_t> local_near;
  for (int id = 0; id < num_regions; ++id) {
    const auto& e = ext[id];
    if (e.r1 < 0) continue;
    const int r0 = std::max(0, e.r0 - margin);
    const int c0 = std::max(0, e.c0 - margin);
    const int r1 = std::min(h - 1, e.r1 + margin);
    const int c1 = std::min(w - 1, e.c1 + margin);
    RegionDistance rd;
    rd.region = id;
    rd.box = {r0, c0, r1 - r0 + 1, c1 - c0 + 1};
    const int bh = rd.box.height;
    const int bw = rd.box.width;
    const std::size_t bn = static_cast<std::size_t>(bh) * bw;

    local_mask.resize(bn);
    for (int r = 0; r < bh; ++r) {
      const std::int32_t* src = &regions(r0 + r, c0);
      std::uint8_t* dst = local_mask.data() + static_cast<std::size_t>(r) * bw;
      for (int c = 0; c < bw; ++c) dst[c] = src[c] == id;
    }
    local_d2.assign(bn, 0);
    if (want_nearest) local_near.assign(bn, -1);
    const bool ok = edt_core(local_mask, bh, bw, local_d2,
                             want_nearest ? std::span<std::int32_t>(local_near)
                                          : std::span<std::int32_t>());

    rd.distance = DistanceMap(bh, bw, 0.0f);
    if (want_nearest) rd.nearest = Grid2D<std::int32_t>(bh, bw, -1);
    for (std::size_t i = 0; i < bn; ++i) {
      if (!local_mask[i]) continue;
      if (!ok) {
        rd.distance[i] = kDistanceSentinel;
        continue;
      }
      rd.distance[i] = root(local_d2[i]);
      if (want_nearest) {
        const std::int32_t li = local_near[i];
        rd.nearest[i] = (r0 + li / bw) * w + (c0 + li % bw);
      }
    }
    fn(rd);
  }
}

FusedRegionDistance fuse_region_distances(const RegionMap& regions,
                                          int num_regions, bool want_nearest) {
  const int w = regions.width();
  FusedRegionDistance out;
  out.distance = DistanceMap(regions.height(), w, kDistanceSentinel);
  if (want_nearest) out.nearest = Grid2D<std::int32_t>(regions.height(), w, -1);
  visit_region_distances(
      regions, num_regions, 1, want_nearest, [&](const RegionDistance& rd) {
        for (int r = 0; r < rd.box.height; ++r) {
          for (int c = 0; c < rd.box.width; ++c) {
            const int gr = rd.box.row0 + r;
            const int gc = rd.box.col0 + c;
            if (regions(gr, gc) != rd.region) continue;
            out.distance(gr, gc) = rd.distance(r, c);
            if (want_nearest) out.nearest(gr, gc) = rd.nearest(r, c);
          }
        }
      });
  return out;
}

}  // namespace segfix
