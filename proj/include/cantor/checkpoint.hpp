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

// Versioned binary container of named tensor and text blocks.
//
// Layout (little endian):
//   "CNTRCKPT" u32 version u32 block_count
//   per block: u8 kind u32 name_len name payload u32 crc32
//     kind 0 (tensor): i32 rows i32 cols rows*cols float64
//     kind 1 (text):   u64 length bytes
//   the crc covers kind through the end of the payload.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cantor/tensor.hpp"

namespace cantor {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Checkpoint {
 public:
  struct Block {
    std::string name;
    bool is_text = false;
    Tensor tensor;
    std::string text;
  };

  /// Adds or replaces a block, keeping first-insertion order.
  void put(const std::string& name, Tensor t);
  void put_text(const std::string& name, std::string text);
  bool has(const std::string& name) const;
  /// Throw CheckpointError naming the block when missing or of the wrong kind.
  const Tensor& tensor(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  const std::vector<Block>& blocks() const { return blocks_; }

  std::string serialize() const;
  /// Rejects bad magic, version mismatch, truncation and checksum failures.
  static Checkpoint deserialize(const std::string& bytes);

 private:
  Block* find(const std::string& name);
  const Block* find(const std::string& name) const;
  std::vector<Block> blocks_;
};

/// Writes via a temporary file and rename.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cantor
