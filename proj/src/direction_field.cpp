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

#include "segfix/direction_field.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

namespace segfix {
namespace {

constexpr std::array<Offset, 4> kOffsets4 = {{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};
constexpr std::array<Offset, 8> kOffsets8 = {
    {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
// Radius-2 ring: round(2 cos(k * 22.5deg)), round(2 sin(k * 22.5deg)).
constexpr std::array<Offset, 16> kOffsets16 = {
    {{2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}, {-1, 2}, {-1, 1}, {-2, 1},
     {-2, 0}, {-2, -1}, {-1, -1}, {-1, -2}, {0, -2}, {1, -2}, {1, -1}, {2, -1}}};

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr int kRadius = 4;

// Quadrant index k and the vector rotated back by -90k degrees, so that
// u > 0 and v >= 0. Requires (gx, gy) != (0, 0).
struct Quadrant {
  int k;
  double u;
  double v;
};

Quadrant quadrant_of(double gx, double gy) {
  if (gx > 0 && gy >= 0) return {0, gx, gy};
  if (gx <= 0 && gy > 0) return {1, gy, -gx};
  if (gx < 0 && gy <= 0) return {2, -gx, -gy};
  return {3, -gy, gx};
}

// Gradients of an h*w float image. Symmetric taps are paired so that
// transposing or rotating the input permutes the outputs exactly.
void sobel_core(std::span<const float> in, int h, int w, std::vector<double>& gx,
                std::vector<double>& gy) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const auto& s = kSobelSmoothing;
  const auto& d = kSobelDerivative;
  std::vector<double> vs(n), hs(n);
  gx.resize(n);
  gy.resize(n);

  auto row_ptr = [w](auto* base, int r) {
    return base + static_cast<std::size_t>(r) * w;
  };

  // Vertical smoothing.
  for (int r = 0; r < h; ++r) {
    const float* rows[2 * kRadius + 1];
    for (int i = -kRadius; i <= kRadius; ++i) {
      rows[i + kRadius] = row_ptr(in.data(), std::clamp(r + i, 0, h - 1));
    }
    double* out = row_ptr(vs.data(), r);
    for (int c = 0; c < w; ++c) {
      double acc = s[4] * rows[4][c];
      acc += s[5] * (double{rows[5][c]} + rows[3][c]);
      acc += s[6] * (double{rows[6][c]} + rows[2][c]);
      acc += s[7] * (double{rows[7][c]} + rows[1][c]);
      acc += s[8] * (double{rows[8][c]} + rows[0][c]);
      out[c] = acc;
    }
  }

  std::vector<double> pad(static_cast<std::size_t>(w) + 2 * kRadius);
  auto load_padded = [&](const auto* src) {
    for (int c = 0; c < w; ++c) pad[c + kRadius] = src[c];
    for (int i = 0; i < kRadius; ++i) {
      pad[i] = src[0];
      pad[w + kRadius + i] = src[w - 1];
    }
  };

  // Horizontal smoothing, then horizontal derivative of the vertical smooth.
  for (int r = 0; r < h; ++r) {
    load_padded(row_ptr(in.data(), r));
    const double* p = pad.data() + kRadius;
    double* out = row_ptr(hs.data(), r);
    for (int c = 0; c < w; ++c) {
      double acc = s[4] * p[c];
      acc += s[5] * (p[c + 1] + p[c - 1]);
      acc += s[6] * (p[c + 2] + p[c - 2]);
      acc += s[7] * (p[c + 3] + p[c - 3]);
      acc += s[8] * (p[c + 4] + p[c - 4]);
      out[c] = acc;
    }
    load_padded(row_ptr(vs.data(), r));
    double* gxr = row_ptr(gx.data(), r);
    for (int c = 0; c < w; ++c) {
      double acc = d[5] * (p[c + 1] - p[c - 1]);
      acc += d[6] * (p[c + 2] - p[c - 2]);
      acc += d[7] * (p[c + 3] - p[c - 3]);
      acc += d[8] * (p[c + 4] - p[c - 4]);
      gxr[c] = acc;
    }
  }

  // Vertical derivative of the horizontal smooth, negated so +y is up.
  for (int r = 0; r < h; ++r) {
    const double* rows[2 * kRadius + 1];
    for (int i = -kRadius; i <= kRadius; ++i) {
      rows[i + kRadius] = row_ptr(hs.data(), std::clamp(r + i, 0, h - 1));
    }
    double* out = row_ptr(gy.data(), r);
    for (int c = 0; c < w; ++c) {
      double acc = d[5] * (rows[3][c] - rows[5][c]);
      acc += d[6] * (rows[2][c] - rows[6][c]);
      acc += d[7] * (rows[1][c] - rows[7][c]);
      acc += d[8] * (rows[0][c] - rows[8][c]);
      out[c] = acc;
    }
  }
}

}  // namespace

Gradient sobel_gradient_9(const DistanceMap& dist) {
  std::vector<double> gx, gy;
  sobel_core(dist.values(), dist.height(), dist.width(), gx, gy);
  Gradient g{FloatGrid(dist.height(), dist.width()),
             FloatGrid(dist.height(), dist.width())};
  for (std::size_t i = 0; i < gx.size(); ++i) {
    g.gx[i] = static_cast<float>(gx[i]);
    g.gy[i] = static_cast<float>(gy[i]);
  }
  return g;
}

double angle_degrees(double gx, double gy) {
  if (gx == 0 && gy == 0) return 0.0;
  const Quadrant q = quadrant_of(gx, gy);
  double a = 90.0 * q.k + std::atan2(q.v, q.u) * kRadToDeg;
  if (a >= 360.0) a -= 360.0;
  return a;
}

AngleField angle_from_gradient(const FloatGrid& gx, const FloatGrid& gy) {
  if (!gx.same_shape(gy)) {
    throw Error(fmt::format("gradient shapes differ: {}x{} vs {}x{}", gx.height(),
                            gx.width(), gy.height(), gy.width()));
  }
  AngleField out(gx.height(), gx.width(), 0.0f);
  for (std::size_t i = 0; i < gx.size(); ++i) {
    float a = static_cast<float>(angle_degrees(gx[i], gy[i]));
    if (a >= 360.0f) a = 0.0f;
    out[i] = a;
  }
  return out;
}

void check_num_directions(int m) {
  if (m != 4 && m != 8 && m != 16) {
    throw Error(fmt::format("unsupported direction count {} (expected 4, 8 or 16)", m));
  }
}

int quantize_angle(double theta, int m) {
  check_num_directions(m);
  theta = std::fmod(theta, 360.0);
  if (theta < 0) theta += 360.0;
  if (m == 4) return std::min(3, static_cast<int>(std::floor(theta / 90.0)));
  const double width = 360.0 / m;
  return static_cast<int>(std::lround(theta / width)) % m;
}

int quantize_gradient(double gx, double gy, int m) {
  check_num_directions(m);
  if (gx == 0 && gy == 0) return 0;
  const Quadrant q = quadrant_of(gx, gy);
  const double local = std::atan2(q.v, q.u) * kRadToDeg;  // [0, 90]
  const int per_quadrant = m / 4;
  int cat;
  if (m == 4) {
    cat = q.k + (local >= 90.0 ? 1 : 0);
  } else {
    cat = per_quadrant * q.k + static_cast<int>(std::lround(local / (90.0 / per_quadrant)));
  }
  return cat % m;
}

QuantizedDirectionMap quantize_directions(const AngleField& angles, int m) {
  check_num_directions(m);
  QuantizedDirectionMap q{Grid2D<std::uint8_t>(angles.height(), angles.width(), 0), m};
  for (std::size_t i = 0; i < angles.size(); ++i) {
    q.categories[i] = static_cast<std::uint8_t>(quantize_angle(angles[i], m));
  }
  return q;
}

std::span<const Offset> offset_table(int m) {
  check_num_directions(m);
  switch (m) {
    case 4: return kOffsets4;
    case 8: return kOffsets8;
    default: return kOffsets16;
  }
}

Offset direction_to_offset(int category, int m) {
  const auto table = offset_table(m);
  if (category < 0 || category >= m) {
    throw Error(fmt::format("direction category {} out of range for m = {}", category, m));
  }
  return table[category];
}

OffsetField build_offset_field(const QuantizedDirectionMap& q, const BoundaryMask& b,
                               int scale) {
  if (scale < 1) throw Error(fmt::format("offset scale must be >= 1, got {}", scale));
  if (!q.categories.same_shape(b.mask)) {
    throw Error(fmt::format("direction map is {}x{} but boundary mask is {}x{}",
                            q.height(), q.width(), b.height(), b.width()));
  }
  const auto table = offset_table(q.num_directions);
  OffsetField f{Grid2D<Offset>(q.height(), q.width()), scale};
  for (std::size_t i = 0; i < f.offsets.size(); ++i) {
    if (!b.mask[i]) continue;
    const std::uint8_t cat = q.categories[i];
    if (cat >= q.num_directions) {
      throw Error(fmt::format("direction category {} out of range for m = {}", cat,
                              q.num_directions));
    }
    const Offset o = table[cat];
    f.offsets[i] = {static_cast<std::int16_t>(o.ox * scale),
                    static_cast<std::int16_t>(o.oy * scale)};
  }
  return f;
}

OffsetField rescale_offsets(const OffsetField& field, int scale) {
  if (scale < 1) throw Error(fmt::format("offset scale must be >= 1, got {}", scale));
  if (field.scale < 1) {
    throw Error(fmt::format("offset field has invalid scale {}", field.scale));
  }
  OffsetField out{field.offsets, scale};
  for (auto& o : out.offsets.values()) {
    if (o.ox % field.scale != 0 || o.oy % field.scale != 0) {
      throw Error(fmt::format("offset ({}, {}) is not a multiple of scale {}", o.ox,
                              o.oy, field.scale));
    }
    o = {static_cast<std::int16_t>(o.ox / field.scale * scale),
         static_cast<std::int16_t>(o.oy / field.scale * scale)};
  }
  return out;
}

Mask nonzero_offsets(const OffsetField& field) {
  Mask m(field.height(), field.width(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = !field.offsets[i].is_zero();
  return m;
}

GroundTruth region_gt_pipeline(const RegionMap& regions, int num_regions, double gamma,
                               int m) {
  check_num_directions(m);
  if (!(gamma > 0.0)) {
    throw Error(fmt::format("boundary threshold gamma must be > 0, got {}", gamma));
  }
  const int h = regions.height();
  const int w = regions.width();
  DistanceMap distance(h, w, kDistanceSentinel);
  QuantizedDirectionMap dirs{Grid2D<std::uint8_t>(h, w, 0), m};

  std::vector<double> gx, gy;
  visit_region_distances(
      regions, num_regions, kRadius, false, [&](const RegionDistance& rd) {
        sobel_core(rd.distance.values(), rd.box.height, rd.box.width, gx, gy);
        for (int r = 0; r < rd.box.height; ++r) {
          const int gr = rd.box.row0 + r;
          const std::int32_t* reg = &regions(gr, rd.box.col0);
          for (int c = 0; c < rd.box.width; ++c) {
            if (reg[c] != rd.region) continue;
            const std::size_t li = static_cast<std::size_t>(r) * rd.box.width + c;
            distance(gr, rd.box.col0 + c) = rd.distance[li];
            dirs.categories(gr, rd.box.col0 + c) =
                static_cast<std::uint8_t>(quantize_gradient(gx[li], gy[li], m));
          }
        }
      });
  BoundaryMask boundary = boundary_from_distance(distance, gamma);
  return {std::move(distance), std::move(boundary), std::move(dirs)};
}

GroundTruth gt_direction_pipeline(const LabelMap& labels, double gamma, int m) {
  return region_gt_pipeline(region_map_from_labels(labels), labels.num_classes(), gamma,
                            m);
}

GroundTruth instance_gt_pipeline(const InstanceSet& instances, double gamma, int m) {
  if (instances.empty()) throw Error("instance set is empty");
  RegionMap regions = instances.owner_map();
  for (auto& v : regions.values()) v += 1;  // background becomes region 0
  return region_gt_pipeline(regions, static_cast<int>(instances.size()) + 1, gamma, m);
}

}  // namespace segfix
