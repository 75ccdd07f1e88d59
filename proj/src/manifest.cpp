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

#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "segfix/io.hpp"

namespace segfix {
namespace {

using nlohmann::json;

const std::set<std::string> kRecordKeys = {"id",         "gt_labels", "coarse_labels",
                                           "boundary",   "directions", "offsets",
                                           "instances",  "coarse_instances"};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string relative_or_absolute(const fs::path& p, const fs::path& base) {
  std::error_code ec;
  const fs::path rel = fs::relative(p, base, ec);
  if (ec || rel.empty() || rel.native().starts_with("..")) {
    return fs::absolute(p).lexically_normal().generic_string();
  }
  return rel.generic_string();
}

}  // namespace

DatasetManifest parse_manifest(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw IoError(fmt::format("malformed manifest JSON: {}", e.what()));
  }
  std::vector<std::string> problems;
  DatasetManifest m;
  if (!doc.is_object()) throw IoError("manifest must be a JSON object");

  if (doc.contains("schema") && doc["schema"] != 1) {
    problems.push_back(fmt::format("unsupported schema {}", doc["schema"].dump()));
  }
  if (!doc.contains("num_classes") || !doc["num_classes"].is_number_integer() ||
      doc["num_classes"].get<std::int64_t>() < 1 ||
      doc["num_classes"].get<std::int64_t>() > 65535) {
    problems.push_back("'num_classes' must be an integer in [1, 65535]");
  } else {
    m.num_classes = doc["num_classes"].get<int>();
  }
  if (doc.contains("ignore_id")) {
    if (!doc["ignore_id"].is_number_integer() || doc["ignore_id"].get<std::int64_t>() < 0 ||
        doc["ignore_id"].get<std::int64_t>() > 65535) {
      problems.push_back("'ignore_id' must be an integer in [0, 65535]");
    } else {
      m.ignore_id = static_cast<ClassId>(doc["ignore_id"].get<int>());
    }
  }
  if (!doc.contains("records") || !doc["records"].is_array()) {
    problems.push_back("'records' must be an array");
  } else {
    std::set<std::string> seen;
    std::size_t index = 0;
    for (const auto& rec : doc["records"]) {
      const std::string where = fmt::format("record {}", index++);
      if (!rec.is_object()) {
        problems.push_back(where + " is not an object");
        continue;
      }
      for (const auto& [key, value] : rec.items()) {
        if (!kRecordKeys.count(key)) problems.push_back(fmt::format("{}: unknown key '{}'", where, key));
      }
      ManifestRecord r;
      if (!rec.contains("id") || !rec["id"].is_string() || rec["id"].get<std::string>().empty()) {
        problems.push_back(where + ": 'id' must be a non-empty string");
      } else {
        r.id = rec["id"].get<std::string>();
        if (!seen.insert(r.id).second) problems.push_back(fmt::format("duplicate id '{}'", r.id));
      }
      auto path_field = [&](const char* key, bool required) -> std::optional<fs::path> {
        if (!rec.contains(key)) {
          if (required) problems.push_back(fmt::format("{}: missing '{}'", where, key));
          return std::nullopt;
        }
        if (!rec[key].is_string()) {
          problems.push_back(fmt::format("{}: '{}' must be a string path", where, key));
          return std::nullopt;
        }
        fs::path p = resolve(base_dir, rec[key].get<std::string>());
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) {
          problems.push_back(fmt::format("{}: {} file not found: {}", where, key, p.string()));
        }
        return p;
      };
      if (auto p = path_field("gt_labels", true)) r.gt_labels = *p;
      r.coarse_labels = path_field("coarse_labels", false);
      r.boundary = path_field("boundary", false);
      r.directions = path_field("directions", false);
      r.offsets = path_field("offsets", false);
      r.instances = path_field("instances", false);
      r.coarse_instances = path_field("coarse_instances", false);
      m.records.push_back(std::move(r));
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid manifest:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw IoError(msg);
  }
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_manifest(text, path.parent_path());
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  json doc;
  doc["schema"] = 1;
  doc["num_classes"] = manifest.num_classes;
  doc["ignore_id"] = manifest.ignore_id;
  doc["records"] = json::array();
  for (const auto& r : manifest.records) {
    json rec;
    rec["id"] = r.id;
    rec["gt_labels"] = relative_or_absolute(r.gt_labels, base);
    auto opt = [&](const char* key, const std::optional<fs::path>& p) {
      if (p) rec[key] = relative_or_absolute(*p, base);
    };
    opt("coarse_labels", r.coarse_labels);
    opt("boundary", r.boundary);
    opt("directions", r.directions);
    opt("offsets", r.offsets);
    opt("instances", r.instances);
    opt("coarse_instances", r.coarse_instances);
    doc["records"].push_back(std::move(rec));
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

InstanceSet read_instances(const fs::path& index_path) {
  const std::string text = read_file(index_path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(fmt::format("{}: malformed instance index: {}", index_path.string(), e.what()));
  }
  const fs::path base = index_path.parent_path();
  try {
    if (!doc.is_object() || !doc.contains("height") || !doc.contains("width") ||
        !doc.contains("instances") || !doc["instances"].is_array()) {
      throw IoError("instance index needs 'height', 'width' and an 'instances' array");
    }
    const int h = doc["height"].get<int>();
    const int w = doc["width"].get<int>();
    std::vector<Instance> instances;
    for (const auto& item : doc["instances"]) {
      if (!item.is_object() || !item.contains("category") || !item.contains("mask")) {
        throw IoError("every instance needs 'category' and 'mask'");
      }
      const int cat = item["category"].get<int>();
      if (cat < 0 || cat > 65535) throw IoError(fmt::format("instance category {} out of range", cat));
      instances.push_back({static_cast<ClassId>(cat),
                           read_mask_png(resolve(base, item["mask"].get<std::string>()))});
    }
    return InstanceSet(h, w, std::move(instances));
  } catch (const json::exception& e) {
    throw IoError(fmt::format("{}: {}", index_path.string(), e.what()));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError(fmt::format("{}: {}", index_path.string(), e.what()));
  }
}

void write_instances(const InstanceSet& instances, const fs::path& index_path,
                     std::string_view id) {
  const fs::path base = index_path.parent_path();
  json doc;
  doc["schema"] = 1;
  doc["height"] = instances.height();
  doc["width"] = instances.width();
  doc["instances"] = json::array();
  for (std::size_t n = 0; n < instances.size(); ++n) {
    const std::string name = fmt::format("{}_inst{}.png", id, n);
    write_mask_png(instances.instances()[n].mask, base / name);
    doc["instances"].push_back({{"category", instances.instances()[n].category}, {"mask", name}});
  }
  write_file_atomic(index_path, doc.dump(2) + "\n");
}

}  // namespace segfix
