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

// Minimal 8-bit RGB PNG encoder.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cantor {

struct Image {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 255);
  std::uint8_t* px(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* px(int x, int y) const {
    return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// PNG byte stream with optional tEXt chunks (keyword, text).
std::string encode_png(const Image& img,
                       const std::vector<std::pair<std::string, std::string>>&
                           text = {});
void write_png(const std::string& path, const Image& img,
               const std::vector<std::pair<std::string, std::string>>& text = {});

}  // namespace cantor
