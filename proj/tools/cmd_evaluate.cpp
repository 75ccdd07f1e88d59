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

// eval, histogram and stats.

#include <set>

#include <fmt/format.h>
#include <spdlog/logger.h>

#include "cli_internal.hpp"
#include "segfix/direction_field.hpp"
#include "segfix/metrics.hpp"

namespace segfix::cli {
namespace {

struct EvalImage {
  explicit EvalImage(int num_classes) : cm(num_classes) {}
  ConfusionMatrix cm;
  double miou = 0;
  std::vector<BoundaryMatch> matches;  // one per threshold
  std::vector<MetricsReport> bf;
  std::optional<double> mask;
  std::optional<double> direction;
};

fs::path pred_npy(const PredictionSource& src, const ManifestRecord& rec,
                  std::string_view suffix) {
  return fs::path(src.pred_dir) / (rec.id + std::string(suffix));
}

// Every prediction file the run will read, checked before any work starts.
std::vector<std::string> missing_predictions(const DatasetManifest& m,
                                             const PredictionSource& src, bool labels,
                                             bool boundary, bool directions) {
  std::vector<std::string> missing;
  for (const auto& rec : m.records) {
    std::vector<fs::path> need;
    if (labels) {
      if (src.coarse && !rec.coarse_labels) {
        missing.push_back(rec.id + ": record has no coarse_labels");
        continue;
      }
      need.push_back(prediction_path(src, rec));
    }
    if (boundary) need.push_back(pred_npy(src, rec, "_boundary.npy"));
    if (directions) need.push_back(pred_npy(src, rec, "_dir.npy"));
    for (const auto& p : need) {
      if (!fs::exists(p)) missing.push_back(fmt::format("{}: missing prediction {}", rec.id, p.string()));
    }
  }
  return missing;
}

void require_pred_dir(const PredictionSource& src) {
  if (src.coarse && !src.pred_dir.empty()) {
    throw UsageError("--coarse and --pred-dir are mutually exclusive");
  }
  if (!src.coarse && src.pred_dir.empty()) throw UsageError("--pred-dir or --coarse is required");
}

bool has(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

Json bf_json(const MetricsReport& rep) {
  return {{"theta", rep.params.at("theta")}, {"mean", rep.mean},
          {"per_class", per_class_json(rep.per_class)}};
}

}  // namespace

int cmd_eval(const EvalOptions& opt, Context& ctx) {
  require_pred_dir(opt.pred);
  const bool want_miou = has(opt.metrics, "miou");
  const bool want_bf = has(opt.metrics, "bf");
  const bool want_mask = has(opt.metrics, "mask");
  const bool want_dir = has(opt.metrics, "direction");
  if (opt.pred.coarse && (want_mask || want_dir)) {
    throw UsageError("mask and direction metrics need --pred-dir");
  }
  const DatasetManifest manifest = load_records(opt.manifest);
  const auto missing =
      missing_predictions(manifest, opt.pred, want_miou || want_bf, want_mask, want_dir);
  if (!missing.empty()) {
    report_failures(ctx, "eval", missing);
    return kExitData;
  }

  std::vector<std::string> failures;
  const auto results = for_each_record<EvalImage>(
      manifest, opt.jobs, failures, [&](const ManifestRecord& rec) {
        const LabelMap gt = read_label_png(rec.gt_labels, manifest.num_classes, manifest.ignore_id);
        EvalImage img(manifest.num_classes);
        if (want_miou || want_bf) {
          const LabelMap pred = read_label_png(prediction_path(opt.pred, rec),
                                               manifest.num_classes, manifest.ignore_id);
          if (want_miou) {
            img.cm.accumulate(pred, gt);
            img.miou = miou_from_confusion(img.cm).mean;
          }
          if (want_bf) {
            for (double theta : opt.bf_thresholds) {
              img.matches.push_back(boundary_match(
                  pred, gt, boundary_slack_pixels(theta, gt.height(), gt.width())));
              img.bf.push_back(boundary_fscore_from_match(img.matches.back(), theta));
            }
          }
        }
        if (want_mask || want_dir) {
          std::optional<GroundTruth> built;
          auto ground_truth = [&]() -> const GroundTruth& {
            if (!built) built = gt_direction_pipeline(gt, opt.gamma, opt.num_dirs);
            return *built;
          };
          const BoundaryMask gt_boundary =
              rec.boundary ? BoundaryMask{read_npy_u8(*rec.boundary), opt.gamma}
                           : ground_truth().boundary;
          if (want_mask) {
            const Mask pred_boundary = read_npy_u8(pred_npy(opt.pred, rec, "_boundary.npy"));
            img.mask = mask_fscore(pred_boundary, gt_boundary.mask);
          }
          if (want_dir) {
            const QuantizedDirectionMap gt_dir =
                rec.directions ? QuantizedDirectionMap{read_npy_u8(*rec.directions), opt.num_dirs}
                               : ground_truth().directions;
            const QuantizedDirectionMap pred_dir{read_npy_u8(pred_npy(opt.pred, rec, "_dir.npy")),
                                                 opt.num_dirs};
            img.direction = direction_accuracy(pred_dir, gt_dir, gt_boundary);
          }
        }
        ctx.log->info("eval {} done", rec.id);
        return img;
      });
  if (!failures.empty()) {
    report_failures(ctx, "eval", failures);
    return kExitData;
  }

  const std::size_t n = results.size();
  Json doc = header("eval");
  doc["source"] = opt.pred.coarse ? "coarse_labels" : "pred_dir";
  doc["num_images"] = n;
  Json metrics = Json::object();
  if (want_miou) {
    ConfusionMatrix all(manifest.num_classes);
    double per_image = 0;
    for (const auto& r : results) {
      all.merge(r->cm);
      per_image += r->miou;
    }
    const MetricsReport rep = miou_from_confusion(all);
    metrics["miou"] = {{"mean", rep.mean},
                       {"mean_per_image", per_image / n},
                       {"per_class", per_class_json(rep.per_class)}};
    ctx.out << fmt::format("mIoU            {:.4f}\n", rep.mean);
  }
  if (want_bf) {
    Json thresholds = Json::array();
    for (std::size_t t = 0; t < opt.bf_thresholds.size(); ++t) {
      MetricsReport rep;
      rep.metric = "boundary_fscore";
      rep.params["theta"] = opt.bf_thresholds[t];
      if (opt.bf_pooling == "pooled") {
        BoundaryMatch merged;
        std::set<int> gt_classes;
        for (const auto& r : results) {
          for (const auto& [c, counts] : r->matches[t].per_class) merged.per_class[c].merge(counts);
          gt_classes.insert(r->matches[t].gt_classes.begin(), r->matches[t].gt_classes.end());
        }
        merged.gt_classes.assign(gt_classes.begin(), gt_classes.end());
        rep = boundary_fscore_from_match(merged, opt.bf_thresholds[t]);
        rep.params.erase("slack_px");
      } else {
        std::map<int, std::pair<double, int>> sums;
        double mean = 0;
        for (const auto& r : results) {
          mean += r->bf[t].mean;
          for (const auto& [c, v] : r->bf[t].per_class) {
            sums[c].first += v;
            sums[c].second += 1;
          }
        }
        rep.mean = mean / n;
        for (const auto& [c, s] : sums) rep.per_class[c] = s.first / s.second;
      }
      thresholds.push_back(bf_json(rep));
      ctx.out << fmt::format("BF@{:<12g} {:.4f}\n", opt.bf_thresholds[t], rep.mean);
    }
    metrics["bf"] = {{"pooling", opt.bf_pooling}, {"thresholds", std::move(thresholds)}};
  }
  if (want_mask) {
    double s = 0;
    for (const auto& r : results) s += *r->mask;
    metrics["mask"] = {{"mean", s / n}};
    ctx.out << fmt::format("mask F          {:.4f}\n", s / n);
  }
  if (want_dir) {
    double s = 0;
    for (const auto& r : results) s += *r->direction;
    metrics["direction"] = {{"mean", s / n}};
    ctx.out << fmt::format("direction acc   {:.4f}\n", s / n);
  }
  doc["metrics"] = std::move(metrics);

  Json images = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = *results[i];
    Json img = {{"id", manifest.records[i].id}};
    if (want_miou) img["miou"] = r.miou;
    if (want_bf) {
      Json bf = Json::array();
      for (const auto& rep : r.bf) {
        bf.push_back({{"theta", rep.params.at("theta")},
                      {"slack_px", static_cast<int>(rep.params.at("slack_px"))},
                      {"mean", rep.mean}});
      }
      img["bf"] = std::move(bf);
    }
    if (want_mask) img["mask"] = *r.mask;
    if (want_dir) img["direction"] = *r.direction;
    images.push_back(std::move(img));
  }
  doc["images"] = std::move(images);
  emit_json(opt.out, doc);
  ctx.out << fmt::format("eval: {} images\n", n);
  return kExitOk;
}

int cmd_histogram(const HistogramOptions& opt, Context& ctx) {
  require_pred_dir(opt.pred);
  const DatasetManifest manifest = load_records(opt.manifest);
  const auto missing = missing_predictions(manifest, opt.pred, true, false, false);
  if (!missing.empty()) {
    report_failures(ctx, "histogram", missing);
    return kExitData;
  }
  std::vector<std::string> failures;
  const auto results = for_each_record<ErrorHistogram>(
      manifest, opt.jobs, failures, [&](const ManifestRecord& rec) {
        const LabelMap gt = read_label_png(rec.gt_labels, manifest.num_classes, manifest.ignore_id);
        const LabelMap pred =
            read_label_png(prediction_path(opt.pred, rec), manifest.num_classes, manifest.ignore_id);
        return error_distance_histogram(pred, gt, opt.bins);
      });
  if (!failures.empty()) {
    report_failures(ctx, "histogram", failures);
    return kExitData;
  }

  ErrorHistogram total = empty_histogram(opt.bins);
  Json per_image = Json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    total.merge(*results[i]);
    per_image.push_back({{"id", manifest.records[i].id}, {"counts", results[i]->counts}});
  }
  Json bins = Json::array();
  for (std::size_t b = 0; b < total.counts.size(); ++b) {
    Json bin = {{"lo", total.bin_edges[b]}};
    bin["hi"] = b + 1 < total.bin_edges.size() ? Json(total.bin_edges[b + 1]) : Json(nullptr);
    bin["count"] = total.counts[b];
    bins.push_back(std::move(bin));
  }
  Json doc = header("histogram");
  doc["num_images"] = results.size();
  doc["bin_edges"] = total.bin_edges;
  doc["counts"] = total.counts;
  doc["total"] = total.total();
  doc["bins"] = std::move(bins);
  doc["images"] = std::move(per_image);
  emit_json(opt.out, doc);

  ctx.out << fmt::format("histogram: {} error pixels over {} images\n", total.total(),
                         results.size());
  for (std::size_t b = 0; b < total.counts.size(); ++b) {
    const std::string hi =
        b + 1 < total.bin_edges.size() ? fmt::format("{:g})", total.bin_edges[b + 1]) : "inf)";
    ctx.out << fmt::format("  [{:g}, {:<6} {}\n", total.bin_edges[b], hi, total.counts[b]);
  }
  return kExitOk;
}

int cmd_stats(const StatsOptions& opt, Context& ctx) {
  const DatasetManifest manifest = load_records(opt.manifest);
  std::vector<std::string> failures;
  const auto results = for_each_record<ProportionCounts>(
      manifest, opt.jobs, failures, [&](const ManifestRecord& rec) {
        return boundary_pixel_proportions(
            read_label_png(rec.gt_labels, manifest.num_classes, manifest.ignore_id), opt.widths,
            opt.inclusive);
      });
  if (!failures.empty()) {
    report_failures(ctx, "stats", failures);
    return kExitData;
  }
  ProportionCounts total;
  total.widths = opt.widths;
  total.inclusive = opt.inclusive;
  for (const auto& r : results) total.merge(*r);

  Json per_class = Json::object();
  for (const auto& [c, row] : total.per_class()) per_class[std::to_string(c)] = row;
  Json pixels = Json::object();
  for (const auto& [c, n] : total.class_pixels) pixels[std::to_string(c)] = n;
  Json doc = header("stats");
  doc["num_images"] = results.size();
  doc["widths"] = opt.widths;
  doc["inclusive"] = opt.inclusive;
  doc["overall"] = total.overall();
  doc["per_class"] = std::move(per_class);
  doc["class_pixels"] = std::move(pixels);
  emit_json(opt.out, doc);

  ctx.out << fmt::format("stats: {} images, distance {} width\n", results.size(),
                         opt.inclusive ? "<=" : "<");
  std::string head = "  class ";
  for (double w : opt.widths) head += fmt::format(" {:>7g}px", w);
  ctx.out << head << "\n";
  auto row = [&](std::string name, const std::vector<double>& v) {
    std::string line = fmt::format("  {:<6}", name);
    for (double x : v) line += fmt::format(" {:>8.2f}%", 100.0 * x);
    ctx.out << line << "\n";
  };
  for (const auto& [c, v] : total.per_class()) row(std::to_string(c), v);
  row("all", total.overall());
  return kExitOk;
}

}  // namespace segfix::cli
