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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"
#include "segfix/direction_field.hpp"
#include "segfix/distance_transform.hpp"
#include "segfix/io.hpp"
#include "segfix/metrics.hpp"
#include "segfix/refinement.hpp"
#include "segfix/synth.hpp"

using namespace segfix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() /
           ("segfix_accept_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

double ratio(std::int64_t a, std::int64_t b) { return b ? static_cast<double>(a) / b : 0.0; }

// ---------------------------------------------------------------------------

Outcome edt_exactness() {
  Stopwatch sw;
  int bad = 0;
  for (std::uint32_t i = 0; i < 50; ++i) {
    const double density = 0.05 + 0.9 * (i % 10) / 9.0;
    const Mask m = testing::random_mask(1000 + i, 32, 32, density);
    const auto want = testing::brute_edt_squared(m);
    const DistanceMap got = edt_exact(m);
    const auto got_sq = edt_squared(m);
    for (std::size_t p = 0; p < m.size(); ++p) {
      if (want[p] < 0) continue;  // no background anywhere
      const auto expect = static_cast<float>(std::sqrt(static_cast<double>(want[p])));
      bad += got_sq[p] != want[p] || got[p] != expect;
    }
  }
  const double t = sw.seconds();
  return {bad == 0 && t < 5.0, fmt::format("{} mismatching pixels over 50 masks, {:.2f} s", bad, t)};
}

Outcome sobel_equivalence() {
  std::mt19937 rng(77);
  std::uniform_real_distribution<float> u(0.0f, 20.0f);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    DistanceMap d(16, 16);
    for (auto& v : d.values()) v = u(rng);
    const auto g = sobel_gradient_9(d);
    for (int r = 4; r < 12; ++r) {
      for (int c = 4; c < 12; ++c) {
        const auto want = testing::dense_sobel_at(d, r, c);
        worst = std::max(worst, std::abs(g.gx(r, c) - want[0]) / std::max(std::abs(want[0]), 1.0));
        worst = std::max(worst, std::abs(g.gy(r, c) - want[1]) / std::max(std::abs(want[1]), 1.0));
      }
    }
  }
  return {worst <= 1e-4, fmt::format("max relative error {:.3g}", worst)};
}

Outcome gt_consistency() {
  Stopwatch sw;
  std::int64_t boundary = 0, consistent = 0;
  double worst_fixed = 1.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const LabelMap l = generate_labels({.seed = derive_seed(2024, i)});
    const auto gt = gt_direction_pipeline(l, 5.0, 8);
    const auto offsets = build_offset_field(gt.directions, gt.boundary, 2);
    for (int r = 0; r < l.height(); ++r) {
      for (int c = 0; c < l.width(); ++c) {
        if (!gt.boundary(r, c)) continue;
        const auto d = math_offset_to_pixel_delta(offsets.offsets(r, c));
        const auto t = clamp_coord(r + d.drow, c + d.dcol, l.height(), l.width());
        ++boundary;
        consistent += l(t.row, t.col) == l(r, c);
      }
    }
    const LabelMap refined = refine_labels(l, offsets);
    std::int64_t agree = 0;
    for (std::size_t p = 0; p < l.grid().size(); ++p) agree += refined.grid()[p] == l.grid()[p];
    worst_fixed = std::min(worst_fixed, ratio(agree, static_cast<std::int64_t>(l.grid().size())));
  }
  const double t = sw.seconds();
  const double rate = ratio(consistent, boundary);
  return {rate >= 0.99 && worst_fixed >= 0.99 && t < 30.0,
          fmt::format("consistency {:.4f} over {} boundary pixels, worst fixed point {:.4f}, "
                      "{:.2f} s",
                      rate, boundary, worst_fixed, t)};
}

Outcome oracle_improvement() {
  Stopwatch sw;
  const SynthConfig synth{.seed = 7};
  const CorruptionConfig corrupt{.seed = 70, .band_width = 2, .flip_probability = 0.5};
  const RefinementConfig refine{.scheme = RefinementScheme::kRescale, .scale = 2};
  const auto m8 = oracle_experiment(synth, corrupt, 5.0, 8, refine, 100);
  const auto m4 = oracle_experiment(synth, corrupt, 5.0, 4, refine, 100);
  const double t = sw.seconds();
  const int improved = m8.images_improved();
  const double bf_delta = m8.mean_bf_after()[0] - m8.mean_bf_before()[0];
  const double d8 = m8.mean_miou_delta(), d4 = m4.mean_miou_delta();
  const double spread = std::abs(d8 - d4) / std::max(std::abs(d8), std::abs(d4));
  return {improved == 100 && bf_delta >= 0.05 && spread <= 0.2 && t < 60.0,
          fmt::format("{}/100 improved, mIoU {:.4f} -> {:.4f}, BF delta {:+.2f} points, "
                      "m4/m8 mIoU deltas {:.4f}/{:.4f} ({:.1f}% apart), {:.2f} s",
                      improved, m8.mean_miou_before(), m8.mean_miou_after(), 100 * bf_delta, d4,
                      d8, 100 * spread, t)};
}

LabelMap split_map(int h, int w, int split) {
  Grid2D<ClassId> g(h, w, 0);
  for (int r = 0; r < h; ++r)
    for (int c = split; c < w; ++c) g(r, c) = 1;
  return LabelMap(std::move(g), 2);
}

Outcome metric_identities() {
  int failures = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const LabelMap l = generate_labels({.seed = derive_seed(99, i)});
    failures += miou(l, l).mean != 1.0;
    for (double theta : kDefaultBfThresholds) failures += boundary_fscore(l, l, theta).mean != 1.0;
    const auto gt = gt_direction_pipeline(l, 5.0, 8);
    failures += mask_fscore(gt.boundary, gt.boundary) != 1.0;
    failures += direction_accuracy(gt.directions, gt.directions, gt.boundary) != 1.0;
  }
  const LabelMap gt = split_map(1024, 2048, 1000);
  const double one = boundary_fscore(split_map(1024, 2048, 1001), gt, 0.0003).mean;
  const double two = boundary_fscore(split_map(1024, 2048, 1002), gt, 0.0003).mean;
  return {failures == 0 && one == 1.0 && two == 0.0,
          fmt::format("{} identity failures over 20 maps, shift 1: F={}, shift 2: F={}", failures,
                      one, two)};
}

Outcome histogram_shape() {
  const std::vector<double> edges = {1, 2, 3};
  ErrorHistogram total = empty_histogram(edges);
  for (std::uint64_t i = 0; i < 100; ++i) {
    const LabelMap gt = generate_labels({.seed = derive_seed(1, i)});
    const LabelMap coarse = corrupt_boundary(
        gt, {.seed = derive_seed(2, i), .band_width = 4, .flip_probability = 0.5});
    total.merge(error_distance_histogram(coarse, gt, edges));
  }
  const auto& n = total.counts;
  return {n[0] > n[1] && n[1] > n[2] && n[2] > 0,
          fmt::format("[1,2)={} [2,3)={} [3,inf)={}", n[0], n[1], n[2])};
}

Outcome slack_mapping() {
  const int a = boundary_slack_pixels(0.0003, 1024, 2048);
  const int b = boundary_slack_pixels(0.0006, 1024, 2048);
  const int c = boundary_slack_pixels(0.0009, 1024, 2048);
  return {a == 1 && b == 2 && c == 3, fmt::format("slack {}/{}/{} px", a, b, c)};
}

Outcome cli_performance() {
  TempDir tmp;
  if (run_cli({"synth", "--seed", "5", "--size", "2048x1024", "--classes", "19", "--shapes", "80",
               "--count", "1", "--corrupt", "--out-dir", tmp / "ds"})
          .code != 0)
    return {false, "synth failed"};
  const std::string manifest = tmp / "ds/manifest.json";
  Stopwatch gen;
  const auto g = run_cli({"gen-gt", "--manifest", manifest, "--out-dir", tmp / "gt", "--jobs", "1"});
  const double t_gen = gen.seconds();
  Stopwatch ref;
  const auto r = run_cli({"refine", "--manifest", manifest, "--offsets-dir", tmp / "gt",
                          "--out-dir", tmp / "ref", "--scale", "2", "--jobs", "1"});
  const double t_ref = ref.seconds();
  if (g.code != 0 || r.code != 0) return {false, "gen-gt or refine failed: " + g.err + r.err};
  return {t_gen < 2.0 && t_ref < 0.2,
          fmt::format("gen-gt {:.3f} s, refine {:.3f} s on 2048x1024 with 19 classes", t_gen,
                      t_ref)};
}

Outcome jobs_determinism() {
  TempDir base;
  std::vector<std::string> differing;
  int runs = 0;
  auto both = [&](const std::string& name, std::vector<std::string> args) {
    std::string stdout_text[2];
    std::map<std::string, std::string> files[2];
    for (int k = 0; k < 2; ++k) {
      const std::string out = base / fmt::format("{}_{}", name, k);
      fs::create_directories(out);
      std::vector<std::string> a = args;
      for (auto& s : a)
        if (s.starts_with("@OUT")) s = out + s.substr(4);
      a.insert(a.end(), {"--jobs", k == 0 ? "1" : "8"});
      const auto res = run_cli(a);
      if (res.code != 0) {
        differing.push_back(name + " (exit " + std::to_string(res.code) + ")");
        return;
      }
      stdout_text[k] = res.out;
      for (auto pos = stdout_text[k].find(out); pos != std::string::npos;
           pos = stdout_text[k].find(out, pos))
        stdout_text[k].replace(pos, out.size(), "@OUT");
      files[k] = snapshot(out);
    }
    ++runs;
    if (stdout_text[0] != stdout_text[1] || files[0] != files[1] || files[0].empty()) {
      std::string what = stdout_text[0] != stdout_text[1] ? " stdout" : "";
      for (const auto& [file, bytes] : files[0]) {
        if (!files[1].contains(file) || files[1].at(file) != bytes) what += " " + file;
      }
      differing.push_back(name + " (" + (what.empty() ? "file sets" : what.substr(1)) + ")");
    }
  };
  const std::string ds = base / "ds";
  if (run_cli({"synth", "--seed", "3", "--count", "16", "--corrupt", "--instances", "--out-dir",
               ds})
          .code != 0)
    return {false, "synth failed"};
  const std::string manifest = ds + "/manifest.json";
  const std::string gt = base / "gt";
  if (run_cli({"gen-gt", "--manifest", manifest, "--out-dir", gt}).code != 0)
    return {false, "gen-gt failed"};
  const std::string refined = base / "ref";
  if (run_cli({"refine", "--manifest", manifest, "--offsets-dir", gt, "--out-dir", refined})
          .code != 0)
    return {false, "refine failed"};

  both("synth", {"synth", "--seed", "3", "--count", "16", "--corrupt", "--instances", "--out-dir",
                 "@OUT"});
  both("gen-gt", {"gen-gt", "--manifest", manifest, "--out-dir", "@OUT", "--write-manifest",
                  "@OUT/m.json", "--out", "@OUT/report.json"});
  both("gen-gt-instance", {"gen-gt", "--manifest", manifest, "--mode", "instance", "--out-dir",
                           "@OUT", "--out", "@OUT/report.json"});
  both("refine", {"refine", "--manifest", manifest, "--offsets-dir", gt, "--out-dir", "@OUT",
                  "--out", "@OUT/report.json"});
  both("refine-iterative", {"refine", "--manifest", manifest, "--offsets-dir", gt, "--scheme",
                            "iterative", "--out-dir", "@OUT", "--out", "@OUT/report.json"});
  both("eval", {"eval", "--manifest", manifest, "--pred-dir", refined, "--metrics", "miou,bf",
                "--out", "@OUT/report.json"});
  both("eval-boundary", {"eval", "--manifest", manifest, "--pred-dir", gt, "--metrics",
                         "mask,direction", "--out", "@OUT/report.json"});
  both("histogram", {"histogram", "--manifest", manifest, "--pred-dir", refined, "--out",
                     "@OUT/report.json"});
  both("stats", {"stats", "--manifest", manifest, "--out", "@OUT/report.json"});
  both("oracle-exp", {"oracle-exp", "--seed", "3", "--count", "16", "--out", "@OUT/report.json"});
  std::string list;
  for (const auto& d : differing) list += (list.empty() ? "" : ", ") + d;
  return {differing.empty() && runs == 10,
          differing.empty() ? fmt::format("{} runs byte-identical at --jobs 1 and 8", runs)
                            : "differing: " + list};
}

Outcome io_round_trips() {
  TempDir tmp;
  std::mt19937 rng(4242);
  auto dim = [&] { return std::uniform_int_distribution<int>(1, 40)(rng); };
  int failures = 0;
  for (int i = 0; i < 200; ++i) {
    const int h = dim(), w = dim();
    const int k = i % 2 ? 300 : 19;
    Grid2D<ClassId> g(h, w);
    for (auto& v : g.values()) {
      const int x = std::uniform_int_distribution<int>(0, k)(rng);
      v = x == k ? (k > 255 ? 500 : 255) : static_cast<ClassId>(x);
    }
    const LabelMap labels(std::move(g), k, k > 255 ? 500 : 255);
    write_label_png(labels, tmp / "l.png");
    const LabelMap back = read_label_png(tmp / "l.png", k, labels.ignore_id());
    for (std::size_t p = 0; p < labels.grid().size(); ++p) {
      failures += labels.is_ignore(p) ? !back.is_ignore(p) : back.grid()[p] != labels.grid()[p];
    }

    Mask m(h, w);
    FloatGrid f(h, w);
    Grid2D<std::uint8_t> u(h, w);
    Grid2D<Offset> o(h, w);
    for (std::size_t p = 0; p < m.size(); ++p) {
      m[p] = rng() & 1;
      f[p] = std::uniform_real_distribution<float>(-1e6f, 1e6f)(rng);
      u[p] = static_cast<std::uint8_t>(rng());
      o[p] = {static_cast<std::int16_t>(rng()), static_cast<std::int16_t>(rng())};
    }
    write_mask_png(m, tmp / "m.png");
    failures += read_mask_png(tmp / "m.png") != m;
    write_npy(f, tmp / "f.npy");
    failures += read_npy_float(tmp / "f.npy") != f;
    write_npy(u, tmp / "u.npy");
    failures += read_npy_u8(tmp / "u.npy") != u;
    write_npy(o, tmp / "o.npy");
    failures += read_npy_offsets(tmp / "o.npy") != o;

    DatasetManifest dm;
    dm.num_classes = k;
    dm.ignore_id = labels.ignore_id();
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int r = 0; r < n; ++r) {
      ManifestRecord rec;
      rec.id = fmt::format("img_{}_{}", i, r);
      rec.gt_labels = tmp.path / "l.png";
      if (rng() & 1) rec.coarse_labels = tmp.path / "l.png";
      if (rng() & 1) rec.offsets = tmp.path / "o.npy";
      dm.records.push_back(rec);
    }
    write_manifest(dm, tmp / "manifest.json");
    const DatasetManifest dm2 = load_manifest(tmp / "manifest.json");
    failures += dm2.num_classes != dm.num_classes || dm2.ignore_id != dm.ignore_id ||
                dm2.records.size() != dm.records.size();
    for (std::size_t r = 0; r < std::min(dm.records.size(), dm2.records.size()); ++r) {
      const auto& a = dm.records[r];
      const auto& b = dm2.records[r];
      failures += a.id != b.id || !fs::equivalent(a.gt_labels, b.gt_labels) ||
                  a.coarse_labels.has_value() != b.coarse_labels.has_value() ||
                  a.offsets.has_value() != b.offsets.has_value();
    }

    const LabelMap sem = generate_labels({.seed = static_cast<std::uint64_t>(i),
                                          .height = h + 8,
                                          .width = w + 8,
                                          .num_shapes = 4,
                                          .min_shape_extent = 4});
    const InstanceSet inst = instances_from_labels(sem);
    write_instances(inst, tmp / "inst.json", "inst");
    failures += read_instances(tmp / "inst.json") != inst;
  }

  // Malformed inputs must raise the library error type, never crash.
  const std::string good_png = encode_label_png(testing::blocky_labels(1, 9, 7, 3, 3));
  const std::string good_npy = encode_npy(FloatGrid(5, 6, 1.5f));
  std::vector<std::pair<std::string, std::string>> malformed = {
      {"empty png", ""},
      {"bad png signature", "\x89PNX" + good_png.substr(4)},
      {"truncated png", good_png.substr(0, good_png.size() / 2)},
      {"empty npy", ""},
      {"bad npy magic", "\x93NUMPX" + good_npy.substr(6)},
      {"truncated npy", good_npy.substr(0, good_npy.size() - 3)},
      {"truncated npy header", good_npy.substr(0, 20)},
  };
  auto npy_with_header = [&](const std::string& dict) {
    std::string header = dict;
    while ((10 + header.size() + 1) % 64) header += ' ';
    header += '\n';
    std::string out = "\x93NUMPY";
    out += '\x01';
    out += '\x00';
    out += static_cast<char>(header.size() & 0xff);
    out += static_cast<char>(header.size() >> 8);
    return out + header + std::string(5 * 6 * 4, '\0');
  };
  malformed.emplace_back("fortran order",
                         npy_with_header("{'descr': '<f4', 'fortran_order': True, 'shape': (5, 6), }"));
  malformed.emplace_back("big endian",
                         npy_with_header("{'descr': '>f4', 'fortran_order': False, 'shape': (5, 6), }"));
  malformed.emplace_back("float64",
                         npy_with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (5, 6), }"));
  malformed.emplace_back("rank 3",
                         npy_with_header("{'descr': '<f4', 'fortran_order': False, 'shape': (5, 2, 3), }"));
  malformed.emplace_back("bad dict",
                         npy_with_header("{'descr': '<f4', 'fortran_order': False, 'shape': (5, 6)"));
  int not_rejected = 0;
  std::string which;
  for (const auto& [name, bytes] : malformed) {
    const bool is_png = name.find("png") != std::string::npos;
    try {
      if (is_png) {
        (void)decode_label_png(bytes, 3);
      } else {
        (void)decode_npy(bytes);
      }
      ++not_rejected;
      which += " " + name;
    } catch (const IoError&) {
    }
  }
  // Random byte mutations: either decoded or rejected with IoError.
  int mutations = 0;
  for (int i = 0; i < 2000; ++i) {
    std::string bytes = i % 2 ? good_png : good_npy;
    const int edits = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int e = 0; e < edits; ++e) {
      const auto pos = std::uniform_int_distribution<std::size_t>(0, bytes.size() - 1)(rng);
      bytes[pos] = static_cast<char>(rng());
    }
    if (rng() % 4 == 0) bytes.resize(std::uniform_int_distribution<std::size_t>(0, bytes.size())(rng));
    try {
      if (i % 2) {
        (void)decode_label_png(bytes);
      } else {
        (void)decode_npy(bytes);
      }
    } catch (const IoError&) {
    }
    ++mutations;
  }
  // Manifest violations.
  int manifest_accepted = 0;
  for (const char* text : {"", "{", "[]", R"({"num_classes": 3})",
                           R"({"num_classes": 3, "records": [{"id": "a"}]})",
                           R"({"num_classes": 0, "records": []})"}) {
    try {
      (void)parse_manifest(text, tmp.path);
      ++manifest_accepted;
    } catch (const Error&) {
    }
  }
  return {failures == 0 && not_rejected == 0 && manifest_accepted == 0 && mutations == 2000,
          fmt::format("{} round-trip failures over 200 x 7 formats, {} malformed inputs accepted{}, "
                      "{} malformed manifests accepted, {} mutated inputs handled",
                      failures, not_rejected, which, manifest_accepted, mutations)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"edt-exact", edt_exactness},
      {"sobel-separable", sobel_equivalence},
      {"gt-consistency", gt_consistency},
      {"oracle-improvement", oracle_improvement},
      {"metric-identities", metric_identities},
      {"error-histogram", histogram_shape},
      {"bf-slack", slack_mapping},
      {"cli-performance", cli_performance},
      {"jobs-determinism", jobs_determinism},
      {"io-round-trip", io_round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("{} {:2d} {}: {}", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                             o.detail)
              << std::endl;
  }
  std::cout << fmt::format("{}/{} criteria passed", criteria.size() - failed, criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
