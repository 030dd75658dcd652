// Copyright 2026 The scikg Authors
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

#ifndef SCIKG_CONFIG_HPP_
#define SCIKG_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace scikg {

// `key = value` lines with # comments.  Keys are validated against the
// declared registry; validate() reports every problem at once.
class Config {
 public:
  Config() = default;

  static Config load(const std::string& path);
  static Config from_string(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_real(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_seed() const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;

  // All problems, empty when the config is well-formed.
  std::vector<std::string> validate() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Sorted key=value lines covering every known key with defaults applied,
  // for run logging.
  std::string resolved() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace scikg

#endif  // SCIKG_CONFIG_HPP_
