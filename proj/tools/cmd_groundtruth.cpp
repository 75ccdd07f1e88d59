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

// gen-gt and refine.

#include <fmt/format.h>
#include <spdlog/logger.h>

#include "cli_internal.hpp"
#include "segfix/direction_field.hpp"
#include "segfix/refinement.hpp"

namespace segfix::cli {
namespace {

struct GenGtResult {
  int height = 0;
  int width = 0;
  std::int64_t boundary_pixels = 0;
  fs::path boundary, directions, offsets;
};

struct RefineResult {
  int height = 0;
  int width = 0;
  std::int64_t changed_pixels = 0;
  std::int64_t nonzero_offsets = 0;
  fs::path output;
};

fs::path offsets_file(const RefineOptions& opt, const ManifestRecord& rec) {
  if (!opt.offsets_dir.empty()) return fs::path(opt.offsets_dir) / (rec.id + "_offset.npy");
  if (!rec.offsets) throw DataError("no --offsets-dir and the record has no offsets entry");
  return *rec.offsets;
}

fs::path boundary_file(const RefineOptions& opt, const ManifestRecord& rec) {
  if (!opt.offsets_dir.empty()) return fs::path(opt.offsets_dir) / (rec.id + "_boundary.npy");
  if (!rec.boundary) throw DataError("no --offsets-dir and the record has no boundary entry");
  return *rec.boundary;
}

template <typename T>
std::int64_t count_changed(const Grid2D<T>& a, const Grid2D<T>& b) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

}  // namespace

int cmd_gen_gt(const GenGtOptions& opt, Context& ctx) {
  const DatasetManifest manifest = load_records(opt.manifest);
  const bool instance = opt.mode == "instance";
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);

  std::vector<std::string> failures;
  const auto results = for_each_record<GenGtResult>(
      manifest, opt.jobs, failures, [&](const ManifestRecord& rec) {
        GroundTruth gt = [&] {
          if (instance) {
            if (!rec.instances) throw DataError("record has no instances entry");
            return instance_gt_pipeline(read_instances(*rec.instances), opt.gamma, opt.num_dirs);
          }
          return gt_direction_pipeline(
              read_label_png(rec.gt_labels, manifest.num_classes, manifest.ignore_id),
              opt.gamma, opt.num_dirs);
        }();
        const OffsetField offsets = build_offset_field(gt.directions, gt.boundary, 1);
        GenGtResult r;
        r.height = gt.distance.height();
        r.width = gt.distance.width();
        r.boundary_pixels = gt.boundary.count();
        r.boundary = dir / (rec.id + "_boundary.npy");
        r.directions = dir / (rec.id + "_dir.npy");
        r.offsets = dir / (rec.id + "_offset.npy");
        write_npy(gt.boundary.mask, r.boundary);
        write_npy(gt.directions.categories, r.directions);
        write_npy(offsets.offsets, r.offsets);
        ctx.log->info("gen-gt {}: {}x{}, {} boundary pixels", rec.id, r.width, r.height,
                      r.boundary_pixels);
        return r;
      });

  Json doc = header("gen-gt");
  doc["mode"] = opt.mode;
  doc["gamma"] = opt.gamma;
  doc["num_dirs"] = opt.num_dirs;
  doc["offset_scale"] = 1;
  Json records = Json::array();
  DatasetManifest updated = manifest;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) continue;
    const auto& r = *results[i];
    ++ok;
    records.push_back({{"id", manifest.records[i].id},
                       {"height", r.height},
                       {"width", r.width},
                       {"boundary_pixels", r.boundary_pixels},
                       {"files",
                        {r.boundary.filename().string(), r.directions.filename().string(),
                         r.offsets.filename().string()}}});
    updated.records[i].boundary = r.boundary;
    updated.records[i].directions = r.directions;
    updated.records[i].offsets = r.offsets;
  }
  doc["records"] = std::move(records);
  doc["failures"] = failures;
  emit_json(opt.out, doc);
  if (!opt.write_manifest.empty() && failures.empty()) write_manifest(updated, opt.write_manifest);

  ctx.out << fmt::format("gen-gt: wrote {} files for {} of {} records to {}\n", 3 * ok, ok,
                         manifest.records.size(), dir.string());
  report_failures(ctx, "gen-gt", failures);
  return failures.empty() ? kExitOk : kExitData;
}

int cmd_refine(const RefineOptions& opt, Context& ctx) {
  const DatasetManifest manifest = load_records(opt.manifest);
  const RefinementConfig cfg{parse_scheme(opt.scheme), opt.scale, opt.max_iterations};
  const bool instance = opt.mode == "instance";
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);

  std::vector<std::string> failures;
  const auto results = for_each_record<RefineResult>(
      manifest, opt.jobs, failures, [&](const ManifestRecord& rec) {
        const OffsetField offsets{read_npy_offsets(offsets_file(opt, rec)), 1};
        RefineResult r;
        r.height = offsets.height();
        r.width = offsets.width();
        for (const Offset o : offsets.offsets.values()) r.nonzero_offsets += !o.is_zero();
        if (instance) {
          if (!rec.coarse_instances) throw DataError("record has no coarse_instances entry");
          const InstanceSet coarse = read_instances(*rec.coarse_instances);
          const InstanceSet refined = refine_instances(coarse, offsets, cfg);
          for (std::size_t k = 0; k < coarse.size(); ++k) {
            r.changed_pixels +=
                count_changed(coarse.instances()[k].mask, refined.instances()[k].mask);
          }
          r.output = dir / (rec.id + "_refined_instances.json");
          write_instances(refined, r.output, rec.id + "_refined");
        } else {
          if (!rec.coarse_labels) throw DataError("record has no coarse_labels entry");
          const LabelMap coarse =
              read_label_png(*rec.coarse_labels, manifest.num_classes, manifest.ignore_id);
          if (!offsets.offsets.same_shape(coarse.height(), coarse.width())) {
            throw DataError(fmt::format("coarse labels are {}x{} but offsets are {}x{}",
                                        coarse.width(), coarse.height(), offsets.width(),
                                        offsets.height()));
          }
          BoundaryMask boundary{Mask(coarse.height(), coarse.width(), 0), 0.0};
          if (cfg.scheme == RefinementScheme::kIterative) {
            boundary.mask = read_npy_u8(boundary_file(opt, rec));
          }
          const LabelMap refined = refine(coarse, offsets, boundary, cfg);
          r.changed_pixels = count_changed(coarse.grid(), refined.grid());
          r.output = dir / (rec.id + "_refined.png");
          write_label_png(refined, r.output);
        }
        ctx.log->info("refine {}: {} pixels changed", rec.id, r.changed_pixels);
        return r;
      });

  Json doc = header("refine");
  doc["mode"] = opt.mode;
  doc["scheme"] = opt.scheme;
  doc["scale"] = opt.scale;
  doc["max_iterations"] = opt.max_iterations;
  Json records = Json::array();
  std::int64_t changed = 0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) continue;
    const auto& r = *results[i];
    ++ok;
    changed += r.changed_pixels;
    records.push_back({{"id", manifest.records[i].id},
                       {"height", r.height},
                       {"width", r.width},
                       {"nonzero_offsets", r.nonzero_offsets},
                       {"changed_pixels", r.changed_pixels},
                       {"output", r.output.filename().string()}});
  }
  doc["records"] = std::move(records);
  doc["changed_pixels"] = changed;
  doc["failures"] = failures;
  emit_json(opt.out, doc);

  ctx.out << fmt::format("refine: {} of {} records refined ({}), {} pixels changed\n", ok,
                         manifest.records.size(), opt.scheme, changed);
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i]) {
      ctx.out << fmt::format("  {}: {} changed\n", manifest.records[i].id,
                             results[i]->changed_pixels);
    }
  }
  report_failures(ctx, "refine", failures);
  return failures.empty() ? kExitOk : kExitData;
}

}  // namespace segfix::cli
