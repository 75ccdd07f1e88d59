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
#include <map>
#include <string>
#include <vector>

#include "segfix/direction_field.hpp"
#include "segfix/distance_transform.hpp"
#include "segfix/grid.hpp"

namespace segfix {

// Rows are ground-truth classes, columns predicted classes. Ground-truth
// ignore pixels are skipped; predicted ignore pixels are counted as misses.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  void accumulate(const LabelMap& pred, const LabelMap& gt);
  void merge(const ConfusionMatrix& other);

  int num_classes() const { return k_; }
  std::int64_t at(int gt_class, int pred_class) const {
    return counts_[static_cast<std::size_t>(gt_class) * k_ + pred_class];
  }
  std::int64_t missed(int gt_class) const { return missed_[gt_class]; }
  std::int64_t total() const;

  std::int64_t true_positives(int c) const { return at(c, c); }
  std::int64_t false_positives(int c) const;
  std::int64_t false_negatives(int c) const;

 private:
  int k_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> missed_;
};

struct MetricsReport {
  std::string metric;
  std::map<int, double> per_class;
  double mean = 0.0;
  std::map<std::string, double> params;
};

// Per-class IoU; classes absent from both maps are left out of the mean.
MetricsReport miou_from_confusion(const ConfusionMatrix& cm);
MetricsReport miou(const LabelMap& pred, const LabelMap& gt);

// Distance slack in pixels for a relative threshold: ceil(theta * diagonal),
// at least 1.
int boundary_slack_pixels(double theta, int height, int width);

// Contour pixels of one class: pixels of that class with an in-image
// 4-neighbour carrying a different non-ignore label. Pixels ignored in
// `valid_gt` (when given) are never contour pixels.
Mask class_contour(const LabelMap& labels, ClassId cls, const LabelMap* valid_gt = nullptr);

struct ContourCounts {
  std::int64_t pred_total = 0;
  std::int64_t pred_matched = 0;
  std::int64_t gt_total = 0;
  std::int64_t gt_matched = 0;

  void merge(const ContourCounts& o) {
    pred_total += o.pred_total;
    pred_matched += o.pred_matched;
    gt_total += o.gt_total;
    gt_matched += o.gt_matched;
  }
  // 2PR / (P + R); 1 when both contours are empty, 0 when only one is.
  double fscore() const;
};

struct BoundaryMatch {
  int slack = 1;
  std::map<int, ContourCounts> per_class;  // every class in pred or gt
  std::vector<int> gt_classes;             // classes present in gt
};

BoundaryMatch boundary_match(const LabelMap& pred, const LabelMap& gt, int slack);

// Standard contour-matching BF measure with slack derived from theta. Mean is
// over classes present in the ground truth (1.0 when there are none).
MetricsReport boundary_fscore(const LabelMap& pred, const LabelMap& gt, double theta);
MetricsReport boundary_fscore_from_match(const BoundaryMatch& match, double theta);

// Pixel-exact F1; 1.0 when both masks are empty.
double mask_fscore(const Mask& pred, const Mask& gt);
double mask_fscore(const BoundaryMask& pred, const BoundaryMask& gt);

// Fraction of region pixels whose categories agree; 1.0 on an empty region.
double direction_accuracy(const QuantizedDirectionMap& pred,
                          const QuantizedDirectionMap& gt, const BoundaryMask& region);

// Bin i covers [edges[i], edges[i+1]); the last bin is open-ended and
// distances below edges[0] land in bin 0.
struct ErrorHistogram {
  std::vector<double> bin_edges;
  std::vector<std::int64_t> counts;

  std::int64_t total() const;
  void merge(const ErrorHistogram& other);
};

void check_bin_edges(const std::vector<double>& edges);
ErrorHistogram empty_histogram(const std::vector<double>& edges);
// `gt_distance` is the fused distance of `gt`.
ErrorHistogram error_distance_histogram(const LabelMap& pred, const LabelMap& gt,
                                        const DistanceMap& gt_distance,
                                        const std::vector<double>& edges);
ErrorHistogram error_distance_histogram(const LabelMap& pred, const LabelMap& gt,
                                        const std::vector<double>& edges);

// Pixel counts behind the boundary-proportion table, mergeable across images.
struct ProportionCounts {
  std::vector<double> widths;
  bool inclusive = false;
  std::map<int, std::int64_t> class_pixels;
  std::map<int, std::vector<std::int64_t>> class_hits;  // per width

  void merge(const ProportionCounts& other);
  std::map<int, std::vector<double>> per_class() const;
  std::vector<double> overall() const;
};

// For every width w and class c, counts class-c pixels with fused distance
// < w (<= w when `inclusive`).
ProportionCounts boundary_pixel_proportions(const LabelMap& gt,
                                            const std::vector<double>& widths,
                                            bool inclusive = false);

}  // namespace segfix
