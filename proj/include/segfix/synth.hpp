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
#include <string_view>
#include <vector>

#include "segfix/grid.hpp"
#include "segfix/refinement.hpp"

namespace segfix {

// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

// Sub-seed for item `index` of a run: splitmix64(seed + (index + 1) * golden),
// golden = 0x9E3779B97F4A7C15. Stable across platforms and thread counts.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Sequential splitmix64 stream with the few draws the generator needs.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  // Uniform in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);
  // Uniform in [0, 1).
  double uniform();

 private:
  std::uint64_t state_;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int height = 128;
  int width = 128;
  int num_classes = 5;
  int num_shapes = 12;
  int min_shape_extent = 8;
  // 0 selects min(height, width) / 2.
  int max_shape_extent = 0;

  void validate() const;
};

// Background 0 plus num_shapes rectangles, discs and convex polygons, each
// with a class drawn from [1, num_classes), painted in order.
LabelMap generate_labels(const SynthConfig& cfg);

// 4-connected components of every non-background class, numbered in raster
// order of their first pixel.
InstanceSet instances_from_labels(const LabelMap& labels, ClassId background = 0);

// Instances of `labels` shaped after `reference`: each pixel of class c goes
// to the nearest reference instance of category c. Used to turn a corrupted
// label map into matching corrupted instances.
InstanceSet instances_following(const InstanceSet& reference, const LabelMap& labels);

enum class CorruptionProfile {
  kUniform,  // flip_probability everywhere inside the band
  kLinear,   // flip_probability at distance 1, falling linearly to 0 at band_width
};

CorruptionProfile parse_profile(std::string_view name);
std::string_view profile_name(CorruptionProfile p);

struct CorruptionConfig {
  std::uint64_t seed = 0;
  int band_width = 2;
  double flip_probability = 0.5;
  CorruptionProfile profile = CorruptionProfile::kUniform;

  void validate() const;
  double probability_at(double distance) const;
};

// Pixels with fused distance < band_width are, with the configured
// probability, relabelled to the class of their nearest other-class pixel.
// One independent draw per pixel, keyed on (seed, pixel index).
LabelMap corrupt_boundary(const LabelMap& labels, const CorruptionConfig& cfg);

struct ImageOutcome {
  std::uint64_t seed = 0;
  double miou_before = 0;
  double miou_after = 0;
  std::vector<double> bf_before;  // one per threshold
  std::vector<double> bf_after;
  std::int64_t corrupted_pixels = 0;
  std::int64_t changed_pixels = 0;
  std::int64_t boundary_pixels = 0;
  double offset_consistency = 0;
};

struct ExperimentReport {
  std::vector<double> thresholds;
  std::vector<ImageOutcome> images;

  double mean_miou_before() const;
  double mean_miou_after() const;
  double mean_miou_delta() const { return mean_miou_after() - mean_miou_before(); }
  std::vector<double> mean_bf_before() const;
  std::vector<double> mean_bf_after() const;
  int images_improved() const;
};

inline const std::vector<double> kDefaultBfThresholds = {0.0003, 0.0006, 0.0009};

// Generate, corrupt, derive ground-truth offsets, refine and score n_images
// maps. Image i uses derive_seed(synth.seed, i) and derive_seed(corrupt.seed, i).
ExperimentReport oracle_experiment(const SynthConfig& synth,
                                   const CorruptionConfig& corrupt, double gamma, int m,
                                   const RefinementConfig& refinement, int n_images,
                                   int jobs = 1,
                                   const std::vector<double>& thresholds =
                                       kDefaultBfThresholds);

}  // namespace segfix
