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

#include "cantor/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cantor {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

void ConfigTable::bind(const std::string& key, int& field,
                       const std::string& doc) {
  if (find(key)) throw std::logic_error("config key bound twice: " + key);
  entries_.push_back({key, doc, std::to_string(field),
                      [&field, key](const std::string& v) {
                        field = parse_number<int>(key, v);
                      },
                      [&field] { return std::to_string(field); }});
}

void ConfigTable::bind(const std::string& key, double& field,
                       const std::string& doc) {
  if (find(key)) throw std::logic_error("config key bound twice: " + key);
  entries_.push_back({key, doc, format_double(field),
                      [&field, key](const std::string& v) {
                        field = parse_number<double>(key, v);
                      },
                      [&field] { return format_double(field); }});
}

void ConfigTable::bind(const std::string& key, std::uint64_t& field,
                       const std::string& doc) {
  if (find(key)) throw std::logic_error("config key bound twice: " + key);
  entries_.push_back({key, doc, std::to_string(field),
                      [&field, key](const std::string& v) {
                        field = parse_number<std::uint64_t>(key, v);
                      },
                      [&field] { return std::to_string(field); }});
}

void ConfigTable::bind(const std::string& key, bool& field,
                       const std::string& doc) {
  if (find(key)) throw std::logic_error("config key bound twice: " + key);
  entries_.push_back(
      {key, doc, field ? "true" : "false",
       [&field, key](const std::string& v) {
         if (v == "true" || v == "1") {
           field = true;
         } else if (v == "false" || v == "0") {
           field = false;
         } else {
           throw ConfigError("config key '" + key + "': expected true/false, got '" +
                             v + "'");
         }
       },
       [&field] { return std::string(field ? "true" : "false"); }});
}

void ConfigTable::bind(const std::string& key, std::string& field,
                       const std::string& doc) {
  if (find(key)) throw std::logic_error("config key bound twice: " + key);
  entries_.push_back({key, doc, field,
                      [&field](const std::string& v) { field = v; },
                      [&field] { return field; }});
}

const ConfigTable::Entry* ConfigTable::find(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.key == key) return &e;
  return nullptr;
}

bool ConfigTable::has(const std::string& key) const { return find(key); }

void ConfigTable::set(const std::string& key, const std::string& value) {
  const Entry* e = find(key);
  if (!e) throw ConfigError("unknown config key '" + key + "'");
  e->set(value);
}

void ConfigTable::parse(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set(key, value);
    } catch (const ConfigError& err) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " +
                        err.what());
    }
  }
}

void ConfigTable::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  parse(ss.str(), path);
}

std::string ConfigTable::dump() const {
  std::string out;
  for (const auto& e : entries_) out += e.key + " = " + e.get() + "\n";
  return out;
}

std::string ConfigTable::describe() const {
  std::string out;
  for (const auto& e : entries_)
    out += e.key + " (default " + e.default_text + "): " + e.doc + "\n";
  return out;
}

}  // namespace cantor
