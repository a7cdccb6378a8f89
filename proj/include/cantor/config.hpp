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

// Flat "key = value" configuration files with typed bindings.

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cantor {

/// Raised for malformed files, unknown keys and unparsable values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binds keys to fields of caller-owned structs. Every key carries a default
/// (the field's value at bind time) and a one-line description.
class ConfigTable {
 public:
  void bind(const std::string& key, int& field, const std::string& doc);
  void bind(const std::string& key, double& field, const std::string& doc);
  void bind(const std::string& key, bool& field, const std::string& doc);
  void bind(const std::string& key, std::string& field, const std::string& doc);
  void bind(const std::string& key, std::uint64_t& field,
            const std::string& doc);

  /// Sets one key from its text form.
  void set(const std::string& key, const std::string& value);
  /// Parses "key = value" lines; '#' starts a comment. Later lines win.
  void parse(const std::string& text, const std::string& origin = "<string>");
  void parse_file(const std::string& path);
  /// Current values, one "key = value" line per key, in binding order.
  std::string dump() const;
  /// Keys, defaults and descriptions.
  std::string describe() const;
  bool has(const std::string& key) const;

 private:
  struct Entry {
    std::string key, doc, default_text;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  const Entry* find(const std::string& key) const;
  std::vector<Entry> entries_;
};

}  // namespace cantor
