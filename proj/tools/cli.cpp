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

#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>

#include "cli_internal.hpp"

namespace segfix::cli {

DatasetManifest load_records(const std::string& path) {
  DatasetManifest m = load_manifest(path);
  if (m.records.empty()) throw UsageError(fmt::format("manifest {} has no records", path));
  return m;
}

void emit_json(const std::string& path, const Json& doc) {
  if (path.empty()) return;
  write_file_atomic(path, doc.dump(2) + "\n");
}

Json header(std::string_view command) {
  Json j;
  j["schema"] = 1;
  j["command"] = command;
  return j;
}

Json per_class_json(const std::map<int, double>& values) {
  Json j = Json::object();
  for (const auto& [c, v] : values) j[std::to_string(c)] = v;
  return j;
}

std::string expand_pattern(std::string_view pattern, std::string_view id) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size();) {
    if (pattern.substr(i, 4) == "{id}") {
      out += id;
      i += 4;
    } else {
      out += pattern[i++];
    }
  }
  return out;
}

fs::path prediction_path(const PredictionSource& src, const ManifestRecord& rec) {
  if (src.coarse) {
    if (!rec.coarse_labels) throw DataError("record has no coarse_labels");
    return *rec.coarse_labels;
  }
  return fs::path(src.pred_dir) / expand_pattern(src.pred_pattern, rec.id);
}

std::pair<int, int> parse_size(const std::string& text) {
  auto number = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
      throw UsageError(fmt::format("invalid --size '{}' (expected N or WxH)", text));
    }
    return v;
  };
  const auto x = text.find('x');
  if (x == std::string::npos) {
    const int n = number(text);
    return {n, n};
  }
  const int w = number(std::string_view(text).substr(0, x));
  const int h = number(std::string_view(text).substr(x + 1));
  return {h, w};
}

void report_failures(Context& ctx, std::string_view command,
                     const std::vector<std::string>& failures) {
  if (failures.empty()) return;
  ctx.err << fmt::format("{}: {} record(s) failed:\n", command, failures.size());
  for (const auto& f : failures) ctx.err << "  " << f << "\n";
}

namespace {

// SEGFIX_LOG = trace | debug | info | warn | error | off (default warn).
std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("segfix", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SEGFIX_LOG"); env && *env) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      log->warn("unknown SEGFIX_LOG level '{}', using warn", env);
    } else {
      log->set_level(level);
    }
  }
  return log;
}

void add_jobs_out(CLI::App* cmd, int& jobs, std::string& out) {
  cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 256));
  cmd->add_option("--out", out, "Write the JSON report to this path");
}

void add_prediction(CLI::App* cmd, PredictionSource& p) {
  cmd->add_option("--pred-dir", p.pred_dir, "Directory holding predicted label PNGs");
  cmd->add_option("--pred-pattern", p.pred_pattern, "Prediction file name; {id} is the record id");
  cmd->add_flag("--coarse", p.coarse, "Score the manifest's coarse_labels instead of --pred-dir");
}

void add_shape(CLI::App* cmd, ShapeOptions& s) {
  cmd->add_option("--seed", s.seed, "Base seed");
  cmd->add_option("--size", s.size, "Image size, N or WxH");
  cmd->add_option("--classes", s.classes, "Number of classes including background 0");
  cmd->add_option("--shapes", s.shapes, "Shapes per image");
  cmd->add_option("--min-extent", s.min_extent, "Minimum shape extent in pixels");
  cmd->add_option("--max-extent", s.max_extent, "Maximum shape extent (0 = half the short side)");
  cmd->add_option("--count", s.count, "Number of images")->check(CLI::PositiveNumber);
}

void add_corrupt(CLI::App* cmd, CorruptOptions& c) {
  cmd->add_option("--band-width", c.band_width, "Corruption band width in pixels");
  cmd->add_option("--flip", c.flip, "Flip probability inside the band");
  cmd->add_option("--profile", c.profile, "Flip profile across the band")
      ->check(CLI::IsMember({"uniform", "linear"}));
  cmd->add_option("--corrupt-seed", c.corrupt_seed, "Corruption seed (default: --seed)");
}

void check_directions(CLI::Option* opt) { opt->check(CLI::IsMember(std::vector<int>{4, 8, 16})); }

void require_sorted(const std::vector<double>& v, std::string_view flag) {
  if (v.empty()) throw UsageError(fmt::format("{} needs at least one value", flag));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0)) throw UsageError(fmt::format("{} values must be positive", flag));
    if (i > 0 && !(v[i] > v[i - 1])) {
      throw UsageError(fmt::format("{} must be strictly increasing", flag));
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boundary refinement toolkit for segmentation label maps", "segfix"};
  app.require_subcommand(1);
  app.fallthrough(false);

  GenGtOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-gt", "Ground-truth boundary, direction and offset maps");
  gen_cmd->add_option("--manifest", gen.manifest, "Dataset manifest")->required();
  gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--gamma", gen.gamma, "Boundary distance threshold")
      ->check(CLI::PositiveNumber);
  check_directions(gen_cmd->add_option("--num-dirs", gen.num_dirs, "Direction categories"));
  gen_cmd->add_option("--mode", gen.mode, "semantic or instance")
      ->check(CLI::IsMember({"semantic", "instance"}));
  gen_cmd->add_option("--write-manifest", gen.write_manifest,
                      "Also write a manifest that references the generated files");
  add_jobs_out(gen_cmd, gen.jobs, gen.out);

  RefineOptions ref;
  auto* ref_cmd = app.add_subcommand("refine", "Refine coarse predictions with offset maps");
  ref_cmd->add_option("--manifest", ref.manifest, "Dataset manifest")->required();
  ref_cmd->add_option("--offsets-dir", ref.offsets_dir,
                      "Directory with {id}_offset.npy (default: manifest offsets)");
  ref_cmd->add_option("--out-dir", ref.out_dir, "Output directory")->required();
  ref_cmd->add_option("--scheme", ref.scheme, "rescale or iterative")
      ->check(CLI::IsMember({"rescale", "iterative"}));
  ref_cmd->add_option("--scale", ref.scale, "Offset scale")->check(CLI::PositiveNumber);
  ref_cmd->add_option("--max-iterations", ref.max_iterations, "Iterative scheme hop limit")
      ->check(CLI::PositiveNumber);
  ref_cmd->add_option("--mode", ref.mode, "semantic or instance")
      ->check(CLI::IsMember({"semantic", "instance"}));
  add_jobs_out(ref_cmd, ref.jobs, ref.out);

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  ev_cmd->add_option("--manifest", ev.manifest, "Dataset manifest")->required();
  add_prediction(ev_cmd, ev.pred);
  ev_cmd->add_option("--metrics", ev.metrics, "Comma list of miou, bf, mask, direction")
      ->delimiter(',')
      ->check(CLI::IsMember({"miou", "bf", "mask", "direction"}));
  ev_cmd->add_option("--bf-thresholds", ev.bf_thresholds, "Relative BF thresholds")
      ->delimiter(',');
  ev_cmd->add_option("--bf-pooling", ev.bf_pooling, "macro (per image) or pooled")
      ->check(CLI::IsMember({"macro", "pooled"}));
  ev_cmd->add_option("--gamma", ev.gamma, "Gamma for ground truth built on the fly")
      ->check(CLI::PositiveNumber);
  check_directions(ev_cmd->add_option("--num-dirs", ev.num_dirs, "Direction categories"));
  add_jobs_out(ev_cmd, ev.jobs, ev.out);

  HistogramOptions hist;
  auto* hist_cmd = app.add_subcommand("histogram", "Error pixels by distance to the boundary");
  hist_cmd->add_option("--manifest", hist.manifest, "Dataset manifest")->required();
  add_prediction(hist_cmd, hist.pred);
  hist_cmd->add_option("--bins", hist.bins, "Bin edges in pixels")->delimiter(',');
  add_jobs_out(hist_cmd, hist.jobs, hist.out);

  StatsOptions st;
  auto* st_cmd = app.add_subcommand("stats", "Proportion of pixels near class boundaries");
  st_cmd->add_option("--manifest", st.manifest, "Dataset manifest")->required();
  st_cmd->add_option("--widths", st.widths, "Band widths in pixels")->delimiter(',');
  st_cmd->add_flag("--inclusive", st.inclusive, "Count distance <= width instead of <");
  add_jobs_out(st_cmd, st.jobs, st.out);

  SynthOptions syn;
  auto* syn_cmd = app.add_subcommand("synth", "Write a synthetic dataset and its manifest");
  add_shape(syn_cmd, syn.shape);
  add_corrupt(syn_cmd, syn.corrupt);
  syn_cmd->add_flag("--corrupt", syn.with_coarse, "Also write boundary-corrupted coarse maps");
  syn_cmd->add_flag("--instances", syn.instances, "Also write connected-component instances");
  syn_cmd->add_option("--out-dir", syn.out_dir, "Output directory")->required();
  syn_cmd->add_option("--manifest-name", syn.manifest_name, "Manifest file name");
  add_jobs_out(syn_cmd, syn.jobs, syn.out);

  OracleOptions orc;
  auto* orc_cmd = app.add_subcommand("oracle-exp", "Refine corrupted synthetic maps with ground-truth offsets");
  add_shape(orc_cmd, orc.shape);
  orc.shape.count = 100;
  add_corrupt(orc_cmd, orc.corrupt);
  orc_cmd->add_option("--gamma", orc.gamma, "Boundary distance threshold")
      ->check(CLI::PositiveNumber);
  check_directions(orc_cmd->add_option("--num-dirs", orc.num_dirs, "Direction categories"));
  orc_cmd->add_option("--scheme", orc.scheme, "rescale or iterative")
      ->check(CLI::IsMember({"rescale", "iterative"}));
  orc_cmd->add_option("--scale", orc.scale, "Offset scale")->check(CLI::PositiveNumber);
  orc_cmd->add_option("--max-iterations", orc.max_iterations, "Iterative scheme hop limit")
      ->check(CLI::PositiveNumber);
  orc_cmd->add_option("--bf-thresholds", orc.bf_thresholds, "Relative BF thresholds")
      ->delimiter(',');
  add_jobs_out(orc_cmd, orc.jobs, orc.out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  Context ctx{out, err, make_logger(err)};
  try {
    if (*gen_cmd) return cmd_gen_gt(gen, ctx);
    if (*ref_cmd) return cmd_refine(ref, ctx);
    if (*ev_cmd) {
      for (double t : ev.bf_thresholds) {
        if (!(t > 0)) throw UsageError("--bf-thresholds values must be positive");
      }
      return cmd_eval(ev, ctx);
    }
    if (*hist_cmd) {
      require_sorted(hist.bins, "--bins");
      return cmd_histogram(hist, ctx);
    }
    if (*st_cmd) {
      require_sorted(st.widths, "--widths");
      return cmd_stats(st, ctx);
    }
    if (*syn_cmd) return cmd_synth(syn, ctx);
    if (*orc_cmd) {
      for (double t : orc.bf_thresholds) {
        if (!(t > 0)) throw UsageError("--bf-thresholds values must be positive");
      }
      return cmd_oracle_exp(orc, ctx);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace segfix::cli
