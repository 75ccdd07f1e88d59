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

#include "segfix/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "segfix/direction_field.hpp"
#include "segfix/distance_transform.hpp"
#include "segfix/metrics.hpp"
#include "segfix/parallel.hpp"

namespace segfix {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Polygons are cyclic with angular gaps below 84 degrees, so their inradius is
// at least cos(42deg) of the circumradius; this bounds the width from below.
constexpr double kPolygonWidthRatio = 0.74;

void paint_rect(Grid2D<ClassId>& g, int top, int left, int hh, int ww, ClassId cls) {
  for (int r = top; r < top + hh; ++r) {
    for (int c = left; c < left + ww; ++c) g(r, c) = cls;
  }
}

void paint_disc(Grid2D<ClassId>& g, int top, int left, int diameter, ClassId cls) {
  const double cy = top + (diameter - 1) / 2.0;
  const double cx = left + (diameter - 1) / 2.0;
  const double r2 = diameter * diameter / 4.0;
  for (int r = top; r < top + diameter; ++r) {
    for (int c = left; c < left + diameter; ++c) {
      const double dy = r - cy, dx = c - cx;
      if (dy * dy + dx * dx <= r2) g(r, c) = cls;
    }
  }
}

void paint_polygon(Grid2D<ClassId>& g, SplitMix64& rng, int top, int left, int diameter,
                   ClassId cls) {
  const int n = rng.uniform_int(6, 9);
  std::array<double, 9> weights{};
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    weights[i] = 1.0 + 0.5 * rng.uniform();
    sum += weights[i];
  }
  const double cy = top + (diameter - 1) / 2.0;
  const double cx = left + (diameter - 1) / 2.0;
  const double radius = diameter / 2.0;
  double theta = 2.0 * std::numbers::pi * rng.uniform();
  std::array<double, 9> vx{}, vy{};
  for (int i = 0; i < n; ++i) {
    vx[i] = cx + radius * std::cos(theta);
    vy[i] = cy + radius * std::sin(theta);
    theta += 2.0 * std::numbers::pi * weights[i] / sum;
  }
  for (int r = top; r < top + diameter; ++r) {
    for (int c = left; c < left + diameter; ++c) {
      bool inside = true;
      for (int i = 0; i < n && inside; ++i) {
        const int j = (i + 1) % n;
        const double cross = (vx[j] - vx[i]) * (r - vy[i]) - (vy[j] - vy[i]) * (c - vx[i]);
        inside = cross >= 0;
      }
      if (inside) g(r, c) = cls;
    }
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed + (index + 1) * kGolden);
}

std::uint64_t SplitMix64::next() {
  const std::uint64_t out = splitmix64(state_);
  state_ += kGolden;
  return out;
}

int SplitMix64::uniform_int(int lo, int hi) {
  const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
  const auto wide = static_cast<unsigned __int128>(next()) * range;
  return lo + static_cast<int>(wide >> 64);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

void SynthConfig::validate() const {
  if (height < 1 || width < 1) {
    throw Error(fmt::format("synthetic size must be positive, got {}x{}", height, width));
  }
  if (num_classes < 2) {
    throw Error(fmt::format("synthetic maps need at least 2 classes, got {}", num_classes));
  }
  if (num_classes > kDefaultIgnoreId) {
    throw Error(fmt::format("synthetic maps support at most {} classes", kDefaultIgnoreId));
  }
  if (num_shapes < 0) throw Error("num_shapes must be >= 0");
  if (min_shape_extent < 4) {
    throw Error(fmt::format("min_shape_extent must be >= 4, got {}", min_shape_extent));
  }
  if (max_shape_extent != 0 && max_shape_extent < min_shape_extent) {
    throw Error("max_shape_extent must be >= min_shape_extent");
  }
  if (num_shapes > 0 && min_shape_extent > std::min(height, width)) {
    throw Error(fmt::format("shapes of extent {} cannot fit in a {}x{} image",
                            min_shape_extent, height, width));
  }
}

LabelMap generate_labels(const SynthConfig& cfg) {
  cfg.validate();
  Grid2D<ClassId> g(cfg.height, cfg.width, 0);
  SplitMix64 rng(cfg.seed);
  const int side = std::min(cfg.height, cfg.width);
  const int max_ext = std::min(
      side, cfg.max_shape_extent > 0 ? cfg.max_shape_extent
                                     : std::max(cfg.min_shape_extent, side / 2));
  for (int s = 0; s < cfg.num_shapes; ++s) {
    int kind = rng.uniform_int(0, 2);
    const auto cls = static_cast<ClassId>(rng.uniform_int(1, cfg.num_classes - 1));
    if (kind == 0) {
      const int hh = rng.uniform_int(cfg.min_shape_extent, max_ext);
      const int ww = rng.uniform_int(cfg.min_shape_extent, max_ext);
      const int top = rng.uniform_int(0, cfg.height - hh);
      const int left = rng.uniform_int(0, cfg.width - ww);
      paint_rect(g, top, left, hh, ww, cls);
      continue;
    }
    int lo = cfg.min_shape_extent;
    if (kind == 2) {
      lo = static_cast<int>(std::ceil(lo / kPolygonWidthRatio));
      if (lo > side) {  // polygon too wide for the image; paint a disc
        kind = 1;
        lo = cfg.min_shape_extent;
      }
    }
    const int d = rng.uniform_int(lo, std::max(lo, max_ext));
    const int top = rng.uniform_int(0, cfg.height - d);
    const int left = rng.uniform_int(0, cfg.width - d);
    if (kind == 1) {
      paint_disc(g, top, left, d, cls);
    } else {
      paint_polygon(g, rng, top, left, d, cls);
    }
  }
  return LabelMap(std::move(g), cfg.num_classes);
}

CorruptionProfile parse_profile(std::string_view name) {
  if (name == "uniform") return CorruptionProfile::kUniform;
  if (name == "linear") return CorruptionProfile::kLinear;
  throw Error(fmt::format("unknown corruption profile '{}' (expected uniform or linear)",
                          name));
}

std::string_view profile_name(CorruptionProfile p) {
  return p == CorruptionProfile::kUniform ? "uniform" : "linear";
}

void CorruptionConfig::validate() const {
  if (band_width < 1) throw Error(fmt::format("band_width must be >= 1, got {}", band_width));
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    throw Error(fmt::format("flip_probability must be in [0, 1], got {}", flip_probability));
  }
}

double CorruptionConfig::probability_at(double distance) const {
  if (!(distance < band_width)) return 0.0;
  if (profile == CorruptionProfile::kUniform || band_width <= 1) return flip_probability;
  const double t = (band_width - distance) / (band_width - 1.0);
  return flip_probability * std::clamp(t, 0.0, 1.0);
}

InstanceSet instances_from_labels(const LabelMap& labels, ClassId background) {
  const int h = labels.height();
  const int w = labels.width();
  Grid2D<std::int32_t> comp(h, w, -1);
  std::vector<Instance> out;
  std::vector<std::int32_t> stack;
  for (int i0 = 0; i0 < h * w; ++i0) {
    const ClassId cls = labels.grid()[i0];
    if (comp[i0] >= 0 || cls == background || labels.is_ignore(i0)) continue;
    const auto id = static_cast<std::int32_t>(out.size());
    Mask m(h, w, 0);
    stack.assign(1, i0);
    comp[i0] = id;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      m[i] = 1;
      const int r = i / w, c = i % w;
      const int nb[4] = {r > 0 ? i - w : -1, r + 1 < h ? i + w : -1, c > 0 ? i - 1 : -1,
                         c + 1 < w ? i + 1 : -1};
      for (int j : nb) {
        if (j < 0 || comp[j] >= 0 || labels.grid()[j] != cls) continue;
        comp[j] = id;
        stack.push_back(j);
      }
    }
    out.push_back({cls, std::move(m)});
  }
  return InstanceSet(h, w, std::move(out));
}

InstanceSet instances_following(const InstanceSet& reference, const LabelMap& labels) {
  const int h = labels.height();
  const int w = labels.width();
  if (reference.height() != h || reference.width() != w) {
    throw Error(fmt::format("instances are {}x{} but labels are {}x{}", reference.width(),
                            reference.height(), w, h));
  }
  const auto& inst = reference.instances();
  const Grid2D<std::int32_t> owner = reference.owner_map();
  std::vector<Mask> masks(inst.size(), Mask(h, w, 0));
  std::vector<ClassId> categories;
  for (const auto& i : inst) categories.push_back(i.category);
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  for (const ClassId c : categories) {
    Mask outside(h, w, 1);
    for (std::size_t i = 0; i < outside.size(); ++i) {
      if (owner[i] >= 0 && inst[owner[i]].category == c) outside[i] = 0;
    }
    const auto nearest = edt_with_witness(outside).nearest;
    for (std::size_t i = 0; i < outside.size(); ++i) {
      if (labels.grid()[i] != c || labels.is_ignore(i) || nearest[i] < 0) continue;
      masks[owner[nearest[i]]][i] = 1;
    }
  }
  std::vector<Instance> out;
  for (std::size_t k = 0; k < inst.size(); ++k) out.push_back({inst[k].category, std::move(masks[k])});
  return InstanceSet(h, w, std::move(out));
}

LabelMap corrupt_boundary(const LabelMap& labels, const CorruptionConfig& cfg) {
  cfg.validate();
  const auto fused =
      fuse_region_distances(region_map_from_labels(labels), labels.num_classes(), true);
  Grid2D<ClassId> out = labels.grid();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (labels.is_ignore(i)) continue;
    const double p = cfg.probability_at(fused.distance[i]);
    if (p <= 0.0) continue;
    const std::int32_t src = fused.nearest[i];
    if (src < 0 || labels.is_ignore(static_cast<std::size_t>(src))) continue;
    const double u =
        static_cast<double>(splitmix64(cfg.seed ^ splitmix64(i)) >> 11) * 0x1.0p-53;
    if (u < p) out[i] = labels[static_cast<std::size_t>(src)];
  }
  return labels.with_grid(std::move(out));
}

double ExperimentReport::mean_miou_before() const {
  double s = 0;
  for (const auto& im : images) s += im.miou_before;
  return images.empty() ? 0.0 : s / static_cast<double>(images.size());
}

double ExperimentReport::mean_miou_after() const {
  double s = 0;
  for (const auto& im : images) s += im.miou_after;
  return images.empty() ? 0.0 : s / static_cast<double>(images.size());
}

std::vector<double> ExperimentReport::mean_bf_before() const {
  std::vector<double> out(thresholds.size(), 0.0);
  for (const auto& im : images) {
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += im.bf_before[t];
  }
  for (auto& v : out) v /= images.empty() ? 1.0 : static_cast<double>(images.size());
  return out;
}

std::vector<double> ExperimentReport::mean_bf_after() const {
  std::vector<double> out(thresholds.size(), 0.0);
  for (const auto& im : images) {
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += im.bf_after[t];
  }
  for (auto& v : out) v /= images.empty() ? 1.0 : static_cast<double>(images.size());
  return out;
}

int ExperimentReport::images_improved() const {
  int n = 0;
  for (const auto& im : images) n += im.miou_after > im.miou_before;
  return n;
}

ExperimentReport oracle_experiment(const SynthConfig& synth,
                                   const CorruptionConfig& corrupt, double gamma, int m,
                                   const RefinementConfig& refinement, int n_images,
                                   int jobs, const std::vector<double>& thresholds) {
  synth.validate();
  corrupt.validate();
  refinement.validate();
  check_num_directions(m);
  if (n_images < 0) throw Error("n_images must be >= 0");

  ExperimentReport report;
  report.thresholds = thresholds;
  report.images.resize(static_cast<std::size_t>(n_images));
  parallel_for(report.images.size(), jobs, [&](std::size_t i) {
    SynthConfig sc = synth;
    sc.seed = derive_seed(synth.seed, i);
    CorruptionConfig cc = corrupt;
    cc.seed = derive_seed(corrupt.seed, i);

    const LabelMap gt = generate_labels(sc);
    const LabelMap coarse = corrupt_boundary(gt, cc);
    const GroundTruth truth = gt_direction_pipeline(gt, gamma, m);
    const OffsetField unit = build_offset_field(truth.directions, truth.boundary, 1);
    const LabelMap refined = refine(coarse, unit, truth.boundary, refinement);

    ImageOutcome& out = report.images[i];
    out.seed = sc.seed;
    out.miou_before = miou(coarse, gt).mean;
    out.miou_after = miou(refined, gt).mean;
    for (double theta : thresholds) {
      out.bf_before.push_back(boundary_fscore(coarse, gt, theta).mean);
      out.bf_after.push_back(boundary_fscore(refined, gt, theta).mean);
    }
    for (std::size_t p = 0; p < gt.grid().size(); ++p) {
      out.corrupted_pixels += coarse[p] != gt[p];
      out.changed_pixels += refined[p] != coarse[p];
    }
    out.boundary_pixels = static_cast<std::int64_t>(truth.boundary.count());
    out.offset_consistency =
        offset_consistency(gt, rescale_offsets(unit, refinement.scale));
  });
  return report;
}

}  // namespace segfix
