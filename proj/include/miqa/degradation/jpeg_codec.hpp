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

// In-memory baseline JPEG round trip through libjpeg. Both sides use the
// integer slow DCT so the output is bit-reproducible.

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <jpeglib.h>

#include "miqa/core/types.hpp"

namespace miqa::jpeg {

namespace detail {

struct ErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void on_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<ErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline void on_message(j_common_ptr) {}

// Returns false and fills `msg` on failure. No C++ objects with non-trivial
// destructors live in the frames between setjmp and longjmp.
inline bool encode(const std::uint8_t* rgb, int w, int h, int quality, unsigned char** out,
                   unsigned long* out_size, char* msg) {
  jpeg_compress_struct cinfo;
  ErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_error;
  err.pub.output_message = on_message;
  if (setjmp(err.jump)) {
    std::strcpy(msg, err.message);
    jpeg_destroy_compress(&cinfo);
    return false;
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, out, out_size);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);  // YCbCr with 2x2 luma sampling, i.e. 4:2:0
  cinfo.dct_method = JDCT_ISLOW;
  cinfo.optimize_coding = FALSE;
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const auto stride = static_cast<std::size_t>(w) * 3;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(rgb + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  return true;
}

inline bool decode(const unsigned char* data, unsigned long size, std::uint8_t* rgb, int w, int h, char* msg) {
  jpeg_decompress_struct cinfo;
  ErrorMgr err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = on_error;
  err.pub.output_message = on_message;
  if (setjmp(err.jump)) {
    std::strcpy(msg, err.message);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data, size);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_decompress(&cinfo);
  if (static_cast<int>(cinfo.output_width) != w || static_cast<int>(cinfo.output_height) != h ||
      cinfo.output_components != 3) {
    std::strcpy(msg, "unexpected decoded geometry");
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  const auto stride = static_cast<std::size_t>(w) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

}  // namespace detail

// Encodes at `quality` (1..100) and decodes back.
inline ImageBuffer round_trip(const ImageBuffer& img, int quality) {
  unsigned char* buf = nullptr;
  unsigned long size = 0;
  char msg[JMSG_LENGTH_MAX] = {};
  if (!detail::encode(img.bytes().data(), img.width(), img.height(), quality, &buf, &size, msg)) {
    std::free(buf);
    throw Error(std::string("jpeg encode: ") + msg);
  }
  ImageBuffer out(img.width(), img.height());
  const bool ok = detail::decode(buf, size, out.bytes().data(), img.width(), img.height(), msg);
  std::free(buf);
  if (!ok) throw Error(std::string("jpeg decode: ") + msg);
  return out;
}

}  // namespace miqa::jpeg
