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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <spdlog/logger.h>

#include "cli.hpp"
#include "segfix/grid.hpp"
#include "segfix/io.hpp"
#include "segfix/parallel.hpp"

namespace segfix::cli {

using Json = nlohmann::ordered_json;

// Bad flags or flag combinations; exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Unreadable or inconsistent data; exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::shared_ptr<spdlog::logger> log;
};

struct GenGtOptions {
  std::string manifest;
  std::string out_dir;
  std::string mode = "semantic";
  std::string write_manifest;
  double gamma = 5.0;
  int num_dirs = 8;
  int jobs = 1;
  std::string out;
};

struct RefineOptions {
  std::string manifest;
  std::string offsets_dir;
  std::string out_dir;
  std::string scheme = "rescale";
  std::string mode = "semantic";
  int scale = 2;
  int max_iterations = 10;
  int jobs = 1;
  std::string out;
};

struct PredictionSource {
  std::string pred_dir;
  std::string pred_pattern = "{id}_refined.png";
  bool coarse = false;
};

struct EvalOptions {
  std::string manifest;
  PredictionSource pred;
  std::vector<std::string> metrics = {"miou", "bf"};
  std::vector<double> bf_thresholds = {0.0003, 0.0006, 0.0009};
  std::string bf_pooling = "macro";
  double gamma = 5.0;
  int num_dirs = 8;
  int jobs = 1;
  std::string out;
};

struct HistogramOptions {
  std::string manifest;
  PredictionSource pred;
  std::vector<double> bins = {1, 2, 3, 4, 5, 10, 20};
  int jobs = 1;
  std::string out;
};

struct StatsOptions {
  std::string manifest;
  std::vector<double> widths = {1, 2, 3, 4, 5};
  bool inclusive = false;
  int jobs = 1;
  std::string out;
};

struct ShapeOptions {
  std::uint64_t seed = 0;
  std::string size = "128";
  int classes = 5;
  int shapes = 12;
  int min_extent = 8;
  int max_extent = 0;
  int count = 1;
};

struct CorruptOptions {
  int band_width = 2;
  double flip = 0.5;
  std::string profile = "uniform";
  std::optional<std::uint64_t> corrupt_seed;
};

struct SynthOptions {
  ShapeOptions shape;
  CorruptOptions corrupt;
  bool with_coarse = false;
  bool instances = false;
  std::string out_dir;
  std::string manifest_name = "manifest.json";
  int jobs = 1;
  std::string out;
};

struct OracleOptions {
  ShapeOptions shape;
  CorruptOptions corrupt;
  double gamma = 5.0;
  int num_dirs = 8;
  std::string scheme = "rescale";
  int scale = 2;
  int max_iterations = 10;
  std::vector<double> bf_thresholds = {0.0003, 0.0006, 0.0009};
  int jobs = 1;
  std::string out;
};

int cmd_gen_gt(const GenGtOptions& opt, Context& ctx);
int cmd_refine(const RefineOptions& opt, Context& ctx);
int cmd_eval(const EvalOptions& opt, Context& ctx);
int cmd_histogram(const HistogramOptions& opt, Context& ctx);
int cmd_stats(const StatsOptions& opt, Context& ctx);
int cmd_synth(const SynthOptions& opt, Context& ctx);
int cmd_oracle_exp(const OracleOptions& opt, Context& ctx);

// --- shared helpers -------------------------------------------------------

// Loads and validates a manifest; an empty record list is a usage error.
DatasetManifest load_records(const std::string& path);

void emit_json(const std::string& path, const Json& doc);
Json header(std::string_view command);
Json per_class_json(const std::map<int, double>& values);

// "{id}" in `pattern` is replaced by the record id.
std::string expand_pattern(std::string_view pattern, std::string_view id);
fs::path prediction_path(const PredictionSource& src, const ManifestRecord& rec);

// (height, width) from "N" or "WxH".
std::pair<int, int> parse_size(const std::string& text);

void report_failures(Context& ctx, std::string_view command,
                     const std::vector<std::string>& failures);

// Runs fn(record) for every record on `jobs` threads. Failing records are
// listed in `failures` (in record order) and leave an empty slot.
template <typename R, typename Fn>
std::vector<std::optional<R>> for_each_record(const DatasetManifest& m, int jobs,
                                              std::vector<std::string>& failures, Fn&& fn) {
  std::vector<std::optional<R>> results(m.records.size());
  std::vector<std::string> errors(m.records.size());
  parallel_for(m.records.size(), jobs, [&](std::size_t i) {
    try {
      results[i] = fn(m.records[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) failures.push_back(m.records[i].id + ": " + errors[i]);
  }
  return results;
}

}  // namespace segfix::cli
