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

#include <bit>
#include <cctype>
#include <cstring>

#include <fmt/format.h>

#include "segfix/io.hpp"

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are read and written as little-endian");

namespace segfix {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kPreambleLen = 10;  // magic + version + header length
constexpr std::int64_t kMaxElements = std::int64_t{1} << 31;

std::string make_header(std::string_view descr, std::initializer_list<int> shape) {
  std::string dims;
  for (int d : shape) dims += fmt::format("{}, ", d);
  dims.resize(dims.size() - 2);
  if (shape.size() == 1) dims += ",";
  std::string dict =
      fmt::format("{{'descr': '{}', 'fortran_order': False, 'shape': ({}), }}", descr, dims);
  // Pad with spaces so the payload starts on a 64-byte boundary; the header
  // ends with a newline.
  const std::size_t unpadded = kPreambleLen + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';
  if (dict.size() > 0xFFFF) throw IoError("NPY header too long for format 1.0");
  std::string out(kMagic, kMagicLen);
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(dict.size() & 0xFF);
  out += static_cast<char>((dict.size() >> 8) & 0xFF);
  out += dict;
  return out;
}

template <typename T>
std::string encode(std::string_view descr, std::initializer_list<int> shape,
                   std::span<const T> values) {
  std::string out = make_header(descr, shape);
  const std::size_t n = values.size_bytes();
  const std::size_t off = out.size();
  out.resize(off + n);
  std::memcpy(out.data() + off, values.data(), n);
  return out;
}

// Minimal reader for the Python-literal dict NPY headers carry.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : s_(text) {}

  struct Header {
    std::string descr;
    bool fortran_order = false;
    std::vector<std::int64_t> shape;
  };

  Header parse() {
    Header h;
    bool have_descr = false, have_order = false, have_shape = false;
    expect('{');
    for (;;) {
      skip_ws();
      if (peek() == '}') {
        ++i_;
        break;
      }
      const std::string key = parse_string();
      expect(':');
      skip_ws();
      if (key == "descr") {
        h.descr = parse_string();
        have_descr = true;
      } else if (key == "fortran_order") {
        h.fortran_order = parse_bool();
        have_order = true;
      } else if (key == "shape") {
        h.shape = parse_tuple();
        have_shape = true;
      } else {
        throw IoError(fmt::format("NPY header has unexpected key '{}'", key));
      }
      skip_ws();
      if (peek() == ',') {
        ++i_;
        continue;
      }
      expect('}');
      break;
    }
    skip_ws();
    if (i_ != s_.size()) throw IoError("NPY header has trailing characters");
    if (!have_descr || !have_order || !have_shape) {
      throw IoError("NPY header is missing 'descr', 'fortran_order' or 'shape'");
    }
    return h;
  }

 private:
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) throw IoError(fmt::format("malformed NPY header: expected '{}'", c));
    ++i_;
  }
  std::string parse_string() {
    skip_ws();
    const char q = peek();
    if (q != '\'' && q != '"') throw IoError("malformed NPY header: expected a string");
    ++i_;
    const std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != q) ++i_;
    if (i_ >= s_.size()) throw IoError("malformed NPY header: unterminated string");
    return std::string(s_.substr(start, i_++ - start));
  }
  bool parse_bool() {
    if (s_.substr(i_, 4) == "True") {
      i_ += 4;
      return true;
    }
    if (s_.substr(i_, 5) == "False") {
      i_ += 5;
      return false;
    }
    throw IoError("malformed NPY header: fortran_order must be True or False");
  }
  std::vector<std::int64_t> parse_tuple() {
    expect('(');
    std::vector<std::int64_t> dims;
    for (;;) {
      skip_ws();
      if (peek() == ')') {
        ++i_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) {
        throw IoError("malformed NPY header: shape entries must be integers");
      }
      std::int64_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + (s_[i_++] - '0');
        if (v > kMaxElements) throw IoError("NPY shape dimension too large");
      }
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') ++i_;
      else if (peek() != ')') throw IoError("malformed NPY header: bad shape tuple");
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    s += (i ? ", " : "") + std::to_string(shape[i]);
  }
  return s + ")";
}

template <typename T>
std::vector<T> payload(std::string_view data, std::int64_t count) {
  const std::size_t need = static_cast<std::size_t>(count) * sizeof(T);
  if (data.size() != need) {
    throw IoError(fmt::format("NPY payload is {} bytes, expected {}", data.size(), need));
  }
  std::vector<T> out(static_cast<std::size_t>(count));
  std::memcpy(out.data(), data.data(), need);
  return out;
}

template <typename T>
T read_typed(const fs::path& path, std::string_view expected) {
  const std::string bytes = read_file(path);
  NpyArray a;
  try {
    a = decode_npy(bytes);
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (auto* g = std::get_if<T>(&a)) return std::move(*g);
  throw IoError(fmt::format("{}: expected a {} array", path.string(), expected));
}

}  // namespace

std::string encode_npy(const FloatGrid& grid) {
  return encode<float>("<f4", {grid.height(), grid.width()}, grid.values());
}

std::string encode_npy(const Grid2D<std::uint8_t>& grid) {
  return encode<std::uint8_t>("|u1", {grid.height(), grid.width()}, grid.values());
}

std::string encode_npy(const Grid2D<Offset>& grid) {
  static_assert(sizeof(Offset) == 4);
  return encode<Offset>("<i2", {grid.height(), grid.width(), 2}, grid.values());
}

NpyArray decode_npy(std::string_view bytes) {
  if (bytes.size() < kPreambleLen || bytes.substr(0, kMagicLen) != std::string_view(kMagic, kMagicLen)) {
    throw IoError("not an NPY file (bad magic)");
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    throw IoError(fmt::format("unsupported NPY format version {}.{} (only 1.0)", major, minor));
  }
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < kPreambleLen + header_len) throw IoError("truncated NPY header");
  const auto header =
      HeaderParser(bytes.substr(kPreambleLen, header_len)).parse();
  const std::string_view data = bytes.substr(kPreambleLen + header_len);

  if (header.fortran_order) throw IoError("Fortran-order NPY arrays are not supported");
  std::int64_t count = 1;
  for (auto d : header.shape) {
    if (d < 1) throw IoError(fmt::format("NPY shape {} has an empty dimension", shape_string(header.shape)));
    count *= d;
    if (count > kMaxElements) throw IoError("NPY array too large");
  }
  const auto& shape = header.shape;
  const std::string& descr = header.descr;
  auto need_rank = [&](std::size_t rank, std::string_view what) {
    if (shape.size() != rank) {
      throw IoError(fmt::format("{} array must have rank {}, got shape {}", what, rank,
                                shape_string(shape)));
    }
  };

  if (descr == "<f4") {
    need_rank(2, "float32");
    return FloatGrid(static_cast<int>(shape[0]), static_cast<int>(shape[1]),
                     payload<float>(data, count));
  }
  if (descr == "|u1" || descr == "<u1" || descr == "u1" || descr == "|b1") {
    need_rank(2, "uint8");
    auto v = payload<std::uint8_t>(data, count);
    if (descr == "|b1") {
      for (auto& x : v) x = x != 0;
    }
    return Grid2D<std::uint8_t>(static_cast<int>(shape[0]), static_cast<int>(shape[1]),
                                std::move(v));
  }
  if (descr == "<i2") {
    need_rank(3, "offset");
    if (shape[2] != 2) {
      throw IoError(fmt::format("offset array must have trailing axis 2, got shape {}",
                                shape_string(shape)));
    }
    return Grid2D<Offset>(static_cast<int>(shape[0]), static_cast<int>(shape[1]),
                          payload<Offset>(data, count / 2));
  }
  if (!descr.empty() && descr[0] == '>') {
    throw IoError(fmt::format("big-endian NPY dtype '{}' is not supported", descr));
  }
  throw IoError(fmt::format("unsupported NPY dtype '{}' (expected <f4, |u1 or <i2)", descr));
}

NpyArray read_npy(const fs::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_npy(bytes);
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

FloatGrid read_npy_float(const fs::path& path) {
  return read_typed<FloatGrid>(path, "float32 (H, W)");
}

Grid2D<std::uint8_t> read_npy_u8(const fs::path& path) {
  return read_typed<Grid2D<std::uint8_t>>(path, "uint8 (H, W)");
}

Grid2D<Offset> read_npy_offsets(const fs::path& path) {
  return read_typed<Grid2D<Offset>>(path, "int16 (H, W, 2)");
}

void write_npy(const FloatGrid& grid, const fs::path& path) {
  write_file_atomic(path, encode_npy(grid));
}

void write_npy(const Grid2D<std::uint8_t>& grid, const fs::path& path) {
  write_file_atomic(path, encode_npy(grid));
}

void write_npy(const Grid2D<Offset>& grid, const fs::path& path) {
  write_file_atomic(path, encode_npy(grid));
}

}  // namespace segfix
