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

#include "segfix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace segfix {
namespace {

void require_same(const LabelMap& pred, const LabelMap& gt) {
  if (!pred.same_shape(gt)) {
    throw Error(fmt::format("prediction is {}x{} but ground truth is {}x{}",
                            pred.height(), pred.width(), gt.height(), gt.width()));
  }
  if (pred.num_classes() != gt.num_classes()) {
    throw Error(fmt::format("prediction has {} classes but ground truth has {}",
                            pred.num_classes(), gt.num_classes()));
  }
}

std::vector<int> classes_present(const LabelMap& labels) {
  std::vector<char> seen(labels.num_classes(), 0);
  for (auto v : labels.grid().values()) {
    if (v != labels.ignore_id()) seen[v] = 1;
  }
  std::vector<int> out;
  for (int c = 0; c < labels.num_classes(); ++c) {
    if (seen[c]) out.push_back(c);
  }
  return out;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : k_(num_classes),
      counts_(static_cast<std::size_t>(num_classes) * num_classes, 0),
      missed_(num_classes, 0) {
  if (num_classes < 1) throw Error("confusion matrix needs at least one class");
}

void ConfusionMatrix::accumulate(const LabelMap& pred, const LabelMap& gt) {
  require_same(pred, gt);
  if (gt.num_classes() != k_) {
    throw Error(fmt::format("confusion matrix has {} classes, maps have {}", k_,
                            gt.num_classes()));
  }
  const auto& p = pred.grid();
  const auto& g = gt.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (gt.is_ignore(i)) continue;
    if (pred.is_ignore(i)) {
      ++missed_[g[i]];
    } else {
      ++counts_[static_cast<std::size_t>(g[i]) * k_ + p[i]];
    }
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw Error("cannot merge confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  for (int c = 0; c < k_; ++c) missed_[c] += other.missed_[c];
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (auto v : counts_) t += v;
  for (auto v : missed_) t += v;
  return t;
}

std::int64_t ConfusionMatrix::false_positives(int c) const {
  std::int64_t fp = 0;
  for (int g = 0; g < k_; ++g) {
    if (g != c) fp += at(g, c);
  }
  return fp;
}

std::int64_t ConfusionMatrix::false_negatives(int c) const {
  std::int64_t fn = missed_[c];
  for (int p = 0; p < k_; ++p) {
    if (p != c) fn += at(c, p);
  }
  return fn;
}

MetricsReport miou_from_confusion(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.metric = "miou";
  double sum = 0.0;
  for (int c = 0; c < cm.num_classes(); ++c) {
    const std::int64_t tp = cm.true_positives(c);
    const std::int64_t denom = tp + cm.false_positives(c) + cm.false_negatives(c);
    if (denom == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    r.per_class[c] = iou;
    sum += iou;
  }
  r.mean = r.per_class.empty() ? 1.0 : sum / static_cast<double>(r.per_class.size());
  return r;
}

MetricsReport miou(const LabelMap& pred, const LabelMap& gt) {
  ConfusionMatrix cm(gt.num_classes());
  cm.accumulate(pred, gt);
  return miou_from_confusion(cm);
}

int boundary_slack_pixels(double theta, int height, int width) {
  if (!(theta > 0.0)) {
    throw Error(fmt::format("boundary F-score threshold must be > 0, got {}", theta));
  }
  const double diagonal = std::hypot(static_cast<double>(height), static_cast<double>(width));
  // The epsilon keeps products such as 0.003 * 1000 from rounding up a pixel.
  const double px = std::ceil(theta * diagonal - 1e-9);
  return std::max(1, static_cast<int>(px));
}

Mask class_contour(const LabelMap& labels, ClassId cls, const LabelMap* valid_gt) {
  const int h = labels.height();
  const int w = labels.width();
  const auto& g = labels.grid();
  const ClassId ign = labels.ignore_id();
  Mask out(h, w, 0);
  auto differs = [&](int r, int c) {
    const ClassId v = g(r, c);
    return v != cls && v != ign;
  };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (g(r, c) != cls) continue;
      if (valid_gt && (*valid_gt)(r, c) == valid_gt->ignore_id()) continue;
      if ((r > 0 && differs(r - 1, c)) || (r + 1 < h && differs(r + 1, c)) ||
          (c > 0 && differs(r, c - 1)) || (c + 1 < w && differs(r, c + 1))) {
        out(r, c) = 1;
      }
    }
  }
  return out;
}

double ContourCounts::fscore() const {
  if (pred_total == 0 && gt_total == 0) return 1.0;
  if (pred_total == 0 || gt_total == 0) return 0.0;
  const double p = static_cast<double>(pred_matched) / static_cast<double>(pred_total);
  const double r = static_cast<double>(gt_matched) / static_cast<double>(gt_total);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

BoundaryMatch boundary_match(const LabelMap& pred, const LabelMap& gt, int slack) {
  require_same(pred, gt);
  if (slack < 1) throw Error(fmt::format("boundary slack must be >= 1, got {}", slack));
  BoundaryMatch m;
  m.slack = slack;
  m.gt_classes = classes_present(gt);
  std::set<int> classes(m.gt_classes.begin(), m.gt_classes.end());
  for (int c : classes_present(pred)) classes.insert(c);

  const std::int64_t slack2 = std::int64_t{slack} * slack;
  // Counts pixels of `from` within slack of any pixel of `to`.
  auto count_matched = [&](const Mask& from, const Mask& to) {
    Mask background(to.height(), to.width(), 1);
    bool any = false;
    for (std::size_t i = 0; i < to.size(); ++i) {
      if (to[i]) {
        background[i] = 0;
        any = true;
      }
    }
    std::int64_t total = 0, matched = 0;
    if (!any) {
      for (auto v : from.values()) total += v != 0;
      return std::pair{total, matched};
    }
    const auto d2 = edt_squared(background);
    for (std::size_t i = 0; i < from.size(); ++i) {
      if (!from[i]) continue;
      ++total;
      matched += d2[i] <= slack2;
    }
    return std::pair{total, matched};
  };

  for (int c : classes) {
    const auto cls = static_cast<ClassId>(c);
    const Mask pc = class_contour(pred, cls, &gt);
    const Mask gc = class_contour(gt, cls, &gt);
    ContourCounts cc;
    std::tie(cc.pred_total, cc.pred_matched) = count_matched(pc, gc);
    std::tie(cc.gt_total, cc.gt_matched) = count_matched(gc, pc);
    m.per_class[c] = cc;
  }
  return m;
}

MetricsReport boundary_fscore_from_match(const BoundaryMatch& match, double theta) {
  MetricsReport r;
  r.metric = "boundary_fscore";
  r.params["theta"] = theta;
  r.params["slack_px"] = match.slack;
  double sum = 0.0;
  for (int c : match.gt_classes) {
    auto it = match.per_class.find(c);
    const double f = it == match.per_class.end() ? 1.0 : it->second.fscore();
    r.per_class[c] = f;
    sum += f;
  }
  r.mean = r.per_class.empty() ? 1.0 : sum / static_cast<double>(r.per_class.size());
  return r;
}

MetricsReport boundary_fscore(const LabelMap& pred, const LabelMap& gt, double theta) {
  const int slack = boundary_slack_pixels(theta, gt.height(), gt.width());
  return boundary_fscore_from_match(boundary_match(pred, gt, slack), theta);
}

double mask_fscore(const Mask& pred, const Mask& gt) {
  if (!pred.same_shape(gt)) {
    throw Error(fmt::format("predicted mask is {}x{} but ground truth is {}x{}",
                            pred.height(), pred.width(), gt.height(), gt.width()));
  }
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

double mask_fscore(const BoundaryMask& pred, const BoundaryMask& gt) {
  return mask_fscore(pred.mask, gt.mask);
}

double direction_accuracy(const QuantizedDirectionMap& pred,
                          const QuantizedDirectionMap& gt, const BoundaryMask& region) {
  if (pred.num_directions != gt.num_directions) {
    throw Error(fmt::format("direction counts differ: {} vs {}", pred.num_directions,
                            gt.num_directions));
  }
  if (!pred.categories.same_shape(gt.categories) ||
      !pred.categories.same_shape(region.mask)) {
    throw Error("direction maps and region mask must share one shape");
  }
  std::int64_t n = 0, agree = 0;
  for (std::size_t i = 0; i < region.mask.size(); ++i) {
    if (!region.mask[i]) continue;
    ++n;
    agree += pred.categories[i] == gt.categories[i];
  }
  return n == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(n);
}

std::int64_t ErrorHistogram::total() const {
  std::int64_t t = 0;
  for (auto v : counts) t += v;
  return t;
}

void ErrorHistogram::merge(const ErrorHistogram& other) {
  if (other.bin_edges != bin_edges) throw Error("cannot merge histograms with different bins");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

void check_bin_edges(const std::vector<double>& edges) {
  if (edges.empty()) throw Error("histogram needs at least one bin edge");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!std::isfinite(edges[i]) || edges[i] < 0) {
      throw Error(fmt::format("bin edge {} must be finite and non-negative", edges[i]));
    }
    if (i > 0 && !(edges[i] > edges[i - 1])) {
      throw Error(fmt::format("bin edges must be strictly increasing ({} after {})",
                              edges[i], edges[i - 1]));
    }
  }
}

ErrorHistogram empty_histogram(const std::vector<double>& edges) {
  check_bin_edges(edges);
  return {edges, std::vector<std::int64_t>(edges.size(), 0)};
}

ErrorHistogram error_distance_histogram(const LabelMap& pred, const LabelMap& gt,
                                        const DistanceMap& gt_distance,
                                        const std::vector<double>& edges) {
  ErrorHistogram hist = empty_histogram(edges);
  if (!pred.same_shape(gt) || !gt.same_shape(gt_distance)) {
    throw Error(fmt::format("prediction is {}x{} but ground truth is {}x{}",
                            pred.height(), pred.width(), gt.height(), gt.width()));
  }
  for (std::size_t i = 0; i < gt.grid().size(); ++i) {
    if (gt.is_ignore(i) || pred[i] == gt[i]) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), double{gt_distance[i]});
    const std::size_t bin = it == edges.begin() ? 0 : (it - edges.begin()) - 1;
    ++hist.counts[bin];
  }
  return hist;
}

ErrorHistogram error_distance_histogram(const LabelMap& pred, const LabelMap& gt,
                                        const std::vector<double>& edges) {
  check_bin_edges(edges);
  return error_distance_histogram(pred, gt, fused_distance(gt), edges);
}

void ProportionCounts::merge(const ProportionCounts& other) {
  if (other.widths != widths || other.inclusive != inclusive) {
    throw Error("cannot merge proportion tables with different widths");
  }
  for (const auto& [c, n] : other.class_pixels) class_pixels[c] += n;
  for (const auto& [c, hits] : other.class_hits) {
    auto& mine = class_hits[c];
    mine.resize(widths.size(), 0);
    for (std::size_t i = 0; i < hits.size(); ++i) mine[i] += hits[i];
  }
}

std::map<int, std::vector<double>> ProportionCounts::per_class() const {
  std::map<int, std::vector<double>> out;
  for (const auto& [c, n] : class_pixels) {
    auto& row = out[c];
    const auto& hits = class_hits.at(c);
    for (std::size_t i = 0; i < widths.size(); ++i) {
      row.push_back(n == 0 ? 0.0 : static_cast<double>(hits[i]) / static_cast<double>(n));
    }
  }
  return out;
}

std::vector<double> ProportionCounts::overall() const {
  std::vector<double> out(widths.size(), 0.0);
  std::int64_t total = 0;
  std::vector<std::int64_t> hits(widths.size(), 0);
  for (const auto& [c, n] : class_pixels) {
    total += n;
    const auto& h = class_hits.at(c);
    for (std::size_t i = 0; i < widths.size(); ++i) hits[i] += h[i];
  }
  for (std::size_t i = 0; i < widths.size(); ++i) {
    out[i] = total == 0 ? 0.0 : static_cast<double>(hits[i]) / static_cast<double>(total);
  }
  return out;
}

ProportionCounts boundary_pixel_proportions(const LabelMap& gt,
                                            const std::vector<double>& widths,
                                            bool inclusive) {
  for (double w : widths) {
    if (!(w > 0.0)) throw Error(fmt::format("boundary width must be > 0, got {}", w));
  }
  ProportionCounts pc;
  pc.widths = widths;
  pc.inclusive = inclusive;
  const DistanceMap d = fused_distance(gt);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (gt.is_ignore(i)) continue;
    const int c = gt[i];
    ++pc.class_pixels[c];
    auto& hits = pc.class_hits[c];
    hits.resize(widths.size(), 0);
    for (std::size_t k = 0; k < widths.size(); ++k) {
      hits[k] += inclusive ? d[i] <= widths[k] : d[i] < widths[k];
    }
  }
  return pc;
}

}  // namespace segfix
