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

// synth and oracle-exp.

#include <fmt/format.h>
#include <spdlog/logger.h>

#include "cli_internal.hpp"
#include "segfix/synth.hpp"

namespace segfix::cli {
namespace {

SynthConfig synth_config(const ShapeOptions& s) {
  const auto [h, w] = parse_size(s.size);
  SynthConfig cfg{s.seed, h, w, s.classes, s.shapes, s.min_extent, s.max_extent};
  try {
    cfg.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

CorruptionConfig corrupt_config(const CorruptOptions& c, std::uint64_t seed) {
  CorruptionConfig cfg;
  cfg.seed = c.corrupt_seed ? *c.corrupt_seed : splitmix64(seed);
  cfg.band_width = c.band_width;
  cfg.flip_probability = c.flip;
  try {
    cfg.profile = parse_profile(c.profile);
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

Json synth_json(const SynthConfig& cfg) {
  return {{"seed", cfg.seed},           {"height", cfg.height},
          {"width", cfg.width},         {"num_classes", cfg.num_classes},
          {"num_shapes", cfg.num_shapes}, {"min_shape_extent", cfg.min_shape_extent},
          {"max_shape_extent", cfg.max_shape_extent}};
}

Json corrupt_json(const CorruptionConfig& cfg) {
  return {{"seed", cfg.seed},
          {"band_width", cfg.band_width},
          {"flip_probability", cfg.flip_probability},
          {"profile", profile_name(cfg.profile)}};
}

struct SynthRecord {
  ManifestRecord record;
  std::uint64_t seed = 0;
  std::int64_t corrupted_pixels = 0;
};

}  // namespace

int cmd_synth(const SynthOptions& opt, Context& ctx) {
  const SynthConfig base = synth_config(opt.shape);
  const CorruptionConfig corrupt = corrupt_config(opt.corrupt, base.seed);
  if (opt.shape.count < 1) throw UsageError("--count must be at least 1");
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);

  std::vector<SynthRecord> out(static_cast<std::size_t>(opt.shape.count));
  parallel_for(out.size(), opt.jobs, [&](std::size_t i) {
    SynthConfig cfg = base;
    cfg.seed = derive_seed(base.seed, i);
    const LabelMap gt = generate_labels(cfg);
    SynthRecord& r = out[i];
    r.seed = cfg.seed;
    r.record.id = fmt::format("synth_{:04d}", i);
    r.record.gt_labels = dir / (r.record.id + "_gt.png");
    write_label_png(gt, r.record.gt_labels);
    std::optional<InstanceSet> instances;
    if (opt.instances) {
      instances = instances_from_labels(gt);
      r.record.instances = dir / (r.record.id + "_instances.json");
      write_instances(*instances, *r.record.instances, r.record.id);
    }
    if (opt.with_coarse) {
      CorruptionConfig c = corrupt;
      c.seed = derive_seed(corrupt.seed, i);
      const LabelMap coarse = corrupt_boundary(gt, c);
      for (std::size_t p = 0; p < gt.grid().size(); ++p) {
        r.corrupted_pixels += coarse.grid()[p] != gt.grid()[p];
      }
      r.record.coarse_labels = dir / (r.record.id + "_coarse.png");
      write_label_png(coarse, *r.record.coarse_labels);
      if (opt.instances) {
        r.record.coarse_instances = dir / (r.record.id + "_coarse_instances.json");
        write_instances(instances_following(*instances, coarse), *r.record.coarse_instances,
                        r.record.id + "_coarse");
      }
    }
    ctx.log->info("synth {} seed {:#x}", r.record.id, r.seed);
  });

  DatasetManifest manifest{base.num_classes, kDefaultIgnoreId, {}};
  Json records = Json::array();
  for (const auto& r : out) {
    manifest.records.push_back(r.record);
    Json j = {{"id", r.record.id}, {"seed", r.seed}};
    if (opt.with_coarse) j["corrupted_pixels"] = r.corrupted_pixels;
    records.push_back(std::move(j));
  }
  const fs::path manifest_path = dir / opt.manifest_name;
  write_manifest(manifest, manifest_path);

  Json doc = header("synth");
  doc["config"] = synth_json(base);
  doc["config"]["count"] = opt.shape.count;
  if (opt.with_coarse) doc["corruption"] = corrupt_json(corrupt);
  doc["manifest"] = manifest_path.filename().string();
  doc["records"] = std::move(records);
  emit_json(opt.out, doc);
  ctx.out << fmt::format("synth: {} images ({}x{}, {} classes) -> {}\n", opt.shape.count,
                         base.width, base.height, base.num_classes, manifest_path.string());
  return kExitOk;
}

int cmd_oracle_exp(const OracleOptions& opt, Context& ctx) {
  const SynthConfig synth = synth_config(opt.shape);
  const CorruptionConfig corrupt = corrupt_config(opt.corrupt, synth.seed);
  if (opt.shape.count < 1) throw UsageError("--count must be at least 1");
  const RefinementConfig refine{parse_scheme(opt.scheme), opt.scale, opt.max_iterations};

  const ExperimentReport rep = oracle_experiment(synth, corrupt, opt.gamma, opt.num_dirs,
                                                 refine, opt.shape.count, opt.jobs,
                                                 opt.bf_thresholds);
  const auto bf_before = rep.mean_bf_before();
  const auto bf_after = rep.mean_bf_after();
  std::vector<double> bf_delta(bf_before.size());
  for (std::size_t t = 0; t < bf_before.size(); ++t) bf_delta[t] = bf_after[t] - bf_before[t];

  Json doc = header("oracle-exp");
  doc["config"] = {{"synth", synth_json(synth)},
                   {"corruption", corrupt_json(corrupt)},
                   {"gamma", opt.gamma},
                   {"num_dirs", opt.num_dirs},
                   {"scheme", scheme_name(refine.scheme)},
                   {"scale", refine.scale},
                   {"max_iterations", refine.max_iterations},
                   {"count", opt.shape.count},
                   {"bf_thresholds", rep.thresholds}};
  doc["aggregate"] = {{"mean_miou_before", rep.mean_miou_before()},
                      {"mean_miou_after", rep.mean_miou_after()},
                      {"mean_miou_delta", rep.mean_miou_delta()},
                      {"mean_bf_before", bf_before},
                      {"mean_bf_after", bf_after},
                      {"mean_bf_delta", bf_delta},
                      {"images_improved", rep.images_improved()}};
  Json images = Json::array();
  for (const auto& img : rep.images) {
    images.push_back({{"seed", img.seed},
                      {"miou_before", img.miou_before},
                      {"miou_after", img.miou_after},
                      {"bf_before", img.bf_before},
                      {"bf_after", img.bf_after},
                      {"corrupted_pixels", img.corrupted_pixels},
                      {"changed_pixels", img.changed_pixels},
                      {"boundary_pixels", img.boundary_pixels},
                      {"offset_consistency", img.offset_consistency}});
  }
  doc["images"] = std::move(images);
  emit_json(opt.out, doc);

  ctx.out << fmt::format("oracle-exp: {} images, m={}, {} x{}\n", rep.images.size(),
                         opt.num_dirs, scheme_name(refine.scheme), refine.scale);
  ctx.out << fmt::format("  mIoU  {:.2f} -> {:.2f} ({:+.2f})\n", 100 * rep.mean_miou_before(),
                         100 * rep.mean_miou_after(), 100 * rep.mean_miou_delta());
  for (std::size_t t = 0; t < bf_before.size(); ++t) {
    ctx.out << fmt::format("  BF@{:g}  {:.2f} -> {:.2f} ({:+.2f})\n", rep.thresholds[t],
                           100 * bf_before[t], 100 * bf_after[t], 100 * bf_delta[t]);
  }
  ctx.out << fmt::format("  improved on {}/{} images\n", rep.images_improved(),
                         rep.images.size());
  return kExitOk;
}

}  // namespace segfix::cli
