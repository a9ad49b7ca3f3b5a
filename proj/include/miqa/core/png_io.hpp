/* Copyright 2026 The MIQA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <png.h>

#include <cstring>
#include <utility>
#include <vector>

#include "miqa/core/fs.hpp"
#include "miqa/core/types.hpp"

namespace miqa {

namespace detail {

struct PngImageGuard {
  png_image img;
  PngImageGuard() {
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImageGuard() { png_image_free(&img); }
  PngImageGuard(const PngImageGuard&) = delete;
  PngImageGuard& operator=(const PngImageGuard&) = delete;
};

inline std::vector<std::uint8_t> png_decode(const fs::path& path, std::uint32_t format, int& w, int& h) {
  const auto bytes = read_file_bytes(path);
  PngImageGuard g;
  if (!png_image_begin_read_from_memory(&g.img, bytes.data(), bytes.size())) {
    throw ParseError("'" + path.string() + "': " + g.img.message);
  }
  g.img.format = format;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(g.img));
  if (!png_image_finish_read(&g.img, nullptr, pixels.data(), 0, nullptr)) {
    throw ParseError("'" + path.string() + "': " + g.img.message);
  }
  w = static_cast<int>(g.img.width);
  h = static_cast<int>(g.img.height);
  return pixels;
}

inline std::vector<std::uint8_t> png_encode(const std::uint8_t* data, int w, int h, std::uint32_t format) {
  PngImageGuard g;
  g.img.width = static_cast<png_uint_32>(w);
  g.img.height = static_cast<png_uint_32>(h);
  g.img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&g.img, nullptr, &size, 0, data, 0, nullptr)) {
    throw Error(std::string("png sizing failed: ") + g.img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&g.img, out.data(), &size, 0, data, 0, nullptr)) {
    throw Error(std::string("png encoding failed: ") + g.img.message);
  }
  out.resize(size);
  return out;
}

}  // namespace detail

inline ImageBuffer read_png(const fs::path& path) {
  int w = 0, h = 0;
  auto px = detail::png_decode(path, PNG_FORMAT_RGB, w, h);
  return ImageBuffer(w, h, std::move(px));
}

inline RoiMask read_mask_png(const fs::path& path) {
  int w = 0, h = 0;
  auto px = detail::png_decode(path, PNG_FORMAT_GRAY, w, h);
  try {
    return RoiMask(w, h, std::move(px));
  } catch (const ValidationError& e) {
    throw ValidationError("mask '" + path.string() + "': " + e.what());
  }
}

inline std::pair<int, int> png_dimensions(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  detail::PngImageGuard g;
  if (!png_image_begin_read_from_memory(&g.img, bytes.data(), bytes.size())) {
    throw ParseError("'" + path.string() + "': " + g.img.message);
  }
  return {static_cast<int>(g.img.width), static_cast<int>(g.img.height)};
}

inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
  return detail::png_encode(img.bytes().data(), img.width(), img.height(), PNG_FORMAT_RGB);
}

inline std::vector<std::uint8_t> encode_png(const RoiMask& mask) {
  return detail::png_encode(mask.bytes().data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

inline void write_png(const fs::path& path, const ImageBuffer& img) { write_file_atomic(path, encode_png(img)); }
inline void write_png(const fs::path& path, const RoiMask& mask) { write_file_atomic(path, encode_png(mask)); }

}  // namespace miqa
