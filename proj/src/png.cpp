// Copyright (c) 2026 The Cantor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cantor/png.hpp"

#include <zlib.h>

#include <fstream>
#include <stdexcept>

namespace cantor {
namespace {

void put_be32(std::string& out, std::uint32_t v) {
  out += static_cast<char>(v >> 24);
  out += static_cast<char>(v >> 16);
  out += static_cast<char>(v >> 8);
  out += static_cast<char>(v);
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_be32(out, static_cast<std::uint32_t>(crc32(
                    0L, reinterpret_cast<const Bytef*>(body.data()),
                    static_cast<uInt>(body.size()))));
}

}  // namespace

Image::Image(int w, int h, std::uint8_t fill)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("image size must be positive");
}

void Image::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  std::uint8_t* p = px(x, y);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

std::string encode_png(
    const Image& img,
    const std::vector<std::pair<std::string, std::string>>& text) {
  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB, no interlace
  put_chunk(out, "IHDR", ihdr);
  for (const auto& [key, value] : text) put_chunk(out, "tEXt", key + '\0' + value);

  std::string raw;
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  raw.reserve((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw += '\0';  // filter: none
    raw.append(reinterpret_cast<const char*>(img.px(0, y)), stride);
  }
  uLongf cap = compressBound(static_cast<uLong>(raw.size()));
  std::string z(cap, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &cap,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw std::runtime_error("png: deflate failed");
  z.resize(cap);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", "");
  return out;
}

void write_png(const std::string& path, const Image& img,
               const std::vector<std::pair<std::string, std::string>>& text) {
  const std::string bytes = encode_png(img, text);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace cantor
