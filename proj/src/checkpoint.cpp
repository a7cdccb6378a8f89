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

#include "cantor/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cantor {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

constexpr char kMagic[8] = {'C', 'N', 'T', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
void put_raw(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::uint32_t crc(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

class Reader {
 public:
  explicit Reader(const std::string& b) : b_(b) {}
  template <typename T>
  T get(const std::string& what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  const char* at(std::size_t p) const { return b_.data() + p; }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n, const std::string& what) {
    if (b_.size() - pos_ < n)
      throw CheckpointError("checkpoint truncated while reading " + what);
  }
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint::Block* Checkpoint::find(const std::string& name) {
  for (auto& b : blocks_)
    if (b.name == name) return &b;
  return nullptr;
}

const Checkpoint::Block* Checkpoint::find(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return &b;
  return nullptr;
}

void Checkpoint::put(const std::string& name, Tensor t) {
  Block* b = find(name);
  if (!b) b = &blocks_.emplace_back();
  b->name = name;
  b->is_text = false;
  b->tensor = std::move(t);
  b->text.clear();
}

void Checkpoint::put_text(const std::string& name, std::string text) {
  Block* b = find(name);
  if (!b) b = &blocks_.emplace_back();
  b->name = name;
  b->is_text = true;
  b->tensor = Tensor();
  b->text = std::move(text);
}

bool Checkpoint::has(const std::string& name) const { return find(name); }

const Tensor& Checkpoint::tensor(const std::string& name) const {
  const Block* b = find(name);
  if (!b) throw CheckpointError("checkpoint has no block '" + name + "'");
  if (b->is_text)
    throw CheckpointError("checkpoint block '" + name + "' is not a tensor");
  return b->tensor;
}

const std::string& Checkpoint::text(const std::string& name) const {
  const Block* b = find(name);
  if (!b) throw CheckpointError("checkpoint has no block '" + name + "'");
  if (!b->is_text)
    throw CheckpointError("checkpoint block '" + name + "' is not text");
  return b->text;
}

std::string Checkpoint::serialize() const {
  std::string out(kMagic, sizeof kMagic);
  put_raw(out, kCheckpointVersion);
  put_raw(out, static_cast<std::uint32_t>(blocks_.size()));
  for (const auto& b : blocks_) {
    const std::size_t start = out.size();
    put_raw(out, static_cast<std::uint8_t>(b.is_text ? 1 : 0));
    put_raw(out, static_cast<std::uint32_t>(b.name.size()));
    out += b.name;
    if (b.is_text) {
      put_raw(out, static_cast<std::uint64_t>(b.text.size()));
      out += b.text;
    } else {
      put_raw(out, static_cast<std::int32_t>(b.tensor.rows()));
      put_raw(out, static_cast<std::int32_t>(b.tensor.cols()));
      out.append(reinterpret_cast<const char*>(b.tensor.data()),
                 b.tensor.size() * sizeof(double));
    }
    put_raw(out, crc(out.data() + start, out.size() - start));
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic, "magic") != std::string(kMagic, sizeof kMagic))
    throw CheckpointError("not a checkpoint file (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto count = r.get<std::uint32_t>("block count");
  Checkpoint ck;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.pos();
    const std::string where = "block " + std::to_string(i);
    const auto kind = r.get<std::uint8_t>(where + " kind");
    const auto name_len = r.get<std::uint32_t>(where + " name length");
    if (name_len > 4096) throw CheckpointError(where + ": corrupt name length");
    const std::string name = r.bytes(name_len, where + " name");
    const std::string label = "block '" + name + "'";
    Block b;
    b.name = name;
    if (kind == 1) {
      const auto len = r.get<std::uint64_t>(label + " length");
      if (len > bytes.size()) throw CheckpointError(label + ": corrupt length");
      b.is_text = true;
      b.text = r.bytes(len, label);
    } else if (kind == 0) {
      const auto rows = r.get<std::int32_t>(label + " shape");
      const auto cols = r.get<std::int32_t>(label + " shape");
      if (rows < 0 || cols < 0 ||
          static_cast<std::uint64_t>(rows) * cols * 8 > bytes.size())
        throw CheckpointError(label + ": corrupt shape");
      b.tensor = Tensor(rows, cols);
      const std::string raw = r.bytes(b.tensor.size() * sizeof(double), label);
      std::memcpy(b.tensor.data(), raw.data(), raw.size());
    } else {
      throw CheckpointError(label + ": unknown block kind");
    }
    const std::uint32_t want = crc(r.at(start), r.pos() - start);
    if (r.get<std::uint32_t>(label + " checksum") != want)
      throw CheckpointError(label + ": checksum mismatch");
    if (ck.has(name)) throw CheckpointError(label + ": duplicate block");
    ck.blocks_.push_back(std::move(b));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after last block");
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write " + tmp);
    const std::string bytes = ckpt.serialize();
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw CheckpointError("cannot rename " + tmp + " to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return Checkpoint::deserialize(ss.str());
}

}  // namespace cantor
