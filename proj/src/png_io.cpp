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

#include <png.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "segfix/io.hpp"

namespace segfix {
namespace {

constexpr std::uint32_t kMaxPngSide = 1u << 15;

struct ReadSource {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

struct ErrorSink {
  char message[256];
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg ? msg : "unknown");
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
  if (n > src->size - src->pos) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->data + src->pos, n);
  src->pos += n;
}

void write_to_string(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}

void flush_noop(png_structp) {}

std::string describe_color_type(int color_type) {
  switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: return "grayscale";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "grayscale+alpha (2 channels)";
    case PNG_COLOR_TYPE_RGB: return "RGB (3 channels)";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA (4 channels)";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    default: return fmt::format("color type {}", color_type);
  }
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("error reading {}", path.string()));
  return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot create {}", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError(fmt::format("error writing {}", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(fmt::format("cannot move {} into place: {}", path.string(), ec.message()));
  }
}

GrayImage decode_gray_png(std::string_view bytes) {
  if (bytes.size() < 8 ||
      png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
    throw IoError("not a PNG file (bad signature)");
  }
  // Everything touched after setjmp is created before it, so longjmp never
  // skips a constructor or destructor.
  ErrorSink sink{};
  ReadSource src{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
  GrayImage image;
  std::vector<png_bytep> rows;
  std::vector<std::uint8_t> narrow;
  int color_type = -1;
  int bit_depth = 0;

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, on_png_error, on_png_warning);
  if (!png) throw IoError("cannot allocate PNG reader");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("cannot allocate PNG reader");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(fmt::format("corrupt PNG: {}", sink.message));
  }
  png_set_read_fn(png, &src, read_from_memory);
  png_set_user_limits(png, kMaxPngSide, kMaxPngSide);
  png_read_info(png, info);
  color_type = png_get_color_type(png, info);
  bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_GRAY && (bit_depth == 8 || bit_depth == 16)) {
    if (bit_depth == 16) png_set_swap(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    image.height = static_cast<int>(png_get_image_height(png, info));
    image.width = static_cast<int>(png_get_image_width(png, info));
    image.bit_depth = bit_depth;
    // deflate cannot expand by more than about 1032:1, so a header that
    // claims more pixels than the stream could hold is rejected before any
    // large allocation
    const std::uint64_t raw = (static_cast<std::uint64_t>(image.width) * (bit_depth / 8) + 1) *
                              static_cast<std::uint64_t>(image.height);
    if (raw > static_cast<std::uint64_t>(bytes.size()) * 1100) {
      png_error(png, "image dimensions exceed what the file can hold");
    }
    image.pixels.resize(static_cast<std::size_t>(image.height) * image.width);
    rows.resize(image.height);
    const std::size_t stride = static_cast<std::size_t>(image.width) * (bit_depth / 8);
    if (png_get_rowbytes(png, info) != stride) png_error(png, "unexpected row size");
    if (bit_depth == 16) {
      for (int r = 0; r < image.height; ++r) {
        rows[r] = reinterpret_cast<png_bytep>(image.pixels.data() +
                                              static_cast<std::size_t>(r) * image.width);
      }
    } else {
      narrow.resize(image.pixels.size());
      for (int r = 0; r < image.height; ++r) {
        rows[r] = narrow.data() + static_cast<std::size_t>(r) * image.width;
      }
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (color_type != PNG_COLOR_TYPE_GRAY) {
    throw IoError(fmt::format(
        "label PNG must be single-channel grayscale, file is {}",
        describe_color_type(color_type)));
  }
  if (bit_depth != 8 && bit_depth != 16) {
    throw IoError(fmt::format("label PNG must be 8- or 16-bit, file is {}-bit", bit_depth));
  }
  if (bit_depth == 8) {
    std::copy(narrow.begin(), narrow.end(), image.pixels.begin());
  }
  return image;
}

std::string encode_gray_png(const GrayImage& image) {
  if (image.bit_depth != 8 && image.bit_depth != 16) {
    throw IoError(fmt::format("cannot write {}-bit PNG", image.bit_depth));
  }
  if (image.height < 1 || image.width < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.height) * image.width) {
    throw IoError("PNG image has inconsistent dimensions");
  }
  std::vector<std::uint8_t> packed;
  if (image.bit_depth == 8) {
    packed.resize(image.pixels.size());
    for (std::size_t i = 0; i < packed.size(); ++i) {
      if (image.pixels[i] > 255) throw IoError("8-bit PNG pixel value exceeds 255");
      packed[i] = static_cast<std::uint8_t>(image.pixels[i]);
    }
  }
  ErrorSink sink{};
  std::string out;
  std::vector<png_bytep> rows(image.height);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, on_png_error, on_png_warning);
  if (!png) throw IoError("cannot allocate PNG writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("cannot allocate PNG writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(fmt::format("PNG encoding failed: {}", sink.message));
  }
  png_set_write_fn(png, &out, write_to_string, flush_noop);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (image.bit_depth == 16) png_set_swap(png);
  for (int r = 0; r < image.height; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * image.width;
    rows[r] = image.bit_depth == 8
                  ? packed.data() + off
                  : reinterpret_cast<png_bytep>(
                        const_cast<std::uint16_t*>(image.pixels.data() + off));
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

LabelMap decode_label_png(std::string_view bytes, int num_classes, ClassId ignore_id) {
  GrayImage img = decode_gray_png(bytes);
  const std::uint16_t sentinel = img.bit_depth == 8 ? 255 : 65535;
  Grid2D<ClassId> g(img.height, img.width, 0);
  int max_label = -1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::uint16_t v = img.pixels[i];
    if (v == sentinel) {
      g[i] = ignore_id;
      continue;
    }
    g[i] = v;
    if (v != ignore_id) max_label = std::max<int>(max_label, v);
  }
  if (num_classes == 0) num_classes = std::max(1, max_label + 1);
  if (max_label >= num_classes) {
    throw IoError(fmt::format("label PNG contains class {} but num_classes is {}",
                              max_label, num_classes));
  }
  return LabelMap(std::move(g), num_classes, ignore_id);
}

std::string encode_label_png(const LabelMap& labels) {
  const bool eight_bit = labels.num_classes() <= 255;
  const std::uint16_t sentinel = eight_bit ? 255 : 65535;
  if (!eight_bit && labels.num_classes() > 65535) {
    throw IoError("label maps with more than 65535 classes cannot be stored as PNG");
  }
  GrayImage img{labels.height(), labels.width(), eight_bit ? 8 : 16,
                std::vector<std::uint16_t>(labels.grid().size())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = labels.is_ignore(i) ? sentinel : labels[i];
  }
  return encode_gray_png(img);
}

LabelMap read_label_png(const fs::path& path, int num_classes, ClassId ignore_id) {
  const std::string bytes = read_file(path);
  try {
    return decode_label_png(bytes, num_classes, ignore_id);
  } catch (const Error& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_label_png(const LabelMap& labels, const fs::path& path) {
  write_file_atomic(path, encode_label_png(labels));
}

Mask read_mask_png(const fs::path& path) {
  const std::string bytes = read_file(path);
  GrayImage img;
  try {
    img = decode_gray_png(bytes);
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
  Mask m(img.height, img.width, 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = img.pixels[i] != 0;
  return m;
}

void write_mask_png(const Mask& mask, const fs::path& path) {
  GrayImage img{mask.height(), mask.width(), 8, std::vector<std::uint16_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) img.pixels[i] = mask[i] ? 255 : 0;
  write_file_atomic(path, encode_gray_png(img));
}

}  // namespace segfix
