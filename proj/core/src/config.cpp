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

#include "scikg/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "scikg/common.hpp"

namespace scikg {
namespace {

enum class Kind { Int, Real, Bool, Enum, IntList, Text };

struct KeySpec {
  const char* key;
  Kind kind;
  const char* fallback;
  std::vector<const char*> choices;
};

const std::vector<KeySpec>& registry() {
  static const std::vector<KeySpec> kKeys = {
      {"seed", Kind::Int, "1", {}},
      {"threads", Kind::Int, "1", {}},
      {"crf.l2", Kind::Real, "0.0001", {}},
      {"crf.max_epochs", Kind::Int, "100", {}},
      {"crf.step", Kind::Real, "1", {}},
      {"crf.min_step", Kind::Real, "1e-12", {}},
      {"crf.tolerance", Kind::Real, "1e-07", {}},
      {"ssl.strategy", Kind::Enum, "graphinterp", {"graphinterp", "graphfeat"}},
      {"ssl.training", Kind::Enum, "ulm", {"ulm", "hard"}},
      {"ssl.mode", Kind::Enum, "inductive", {"inductive", "transductive"}},
      {"ssl.rounds", Kind::Int, "2", {}},
      {"ssl.alpha", Kind::Real, "0.5", {}},
      {"ssl.eta", Kind::Real, "0.9", {}},
      {"ssl.knn_k", Kind::Int, "10", {}},
      {"ssl.pca_dim", Kind::Int, "100", {}},
      {"ssl.mu", Kind::Real, "1", {}},
      {"ssl.nu", Kind::Real, "0.1", {}},
      {"ssl.propagation_iters", Kind::Int, "100", {}},
      {"ssl.propagation_tol", Kind::Real, "1e-06", {}},
      {"kg.window", Kind::Enum, "sentence", {"sentence", "document"}},
      {"kg.min_confidence", Kind::Real, "0.5", {}},
      {"embed.dim", Kind::Int, "50", {}},
      {"embed.margin", Kind::Real, "1", {}},
      {"embed.negatives", Kind::Int, "5", {}},
      {"embed.learning_rate", Kind::Real, "0.05", {}},
      {"embed.lr_decay", Kind::Real, "0", {}},
      {"embed.epochs", Kind::Int, "100", {}},
      {"embed.l2", Kind::Real, "1e-05", {}},
      {"embed.use_paths", Kind::Bool, "false", {}},
      {"embed.max_path_len", Kind::Int, "3", {}},
      {"rank.ks", Kind::IntList, "1,3,10", {}},
      {"rank.mode", Kind::Enum, "filtered", {"raw", "filtered"}},
  };
  return kKeys;
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& spec : registry())
    if (key == spec.key) return &spec;
  return nullptr;
}

bool parse_long(const std::string& text, long* out) {
  try {
    std::size_t used = 0;
    long v = std::stol(text, &used);
    if (used != text.size()) return false;
    if (out) *out = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_real(const std::string& text, double* out) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) return false;
    if (out) *out = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_bool(const std::string& text, bool* out) {
  std::string t = to_lower(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") {
    if (out) *out = true;
    return true;
  }
  if (t == "false" || t == "0" || t == "no" || t == "off") {
    if (out) *out = false;
    return true;
  }
  return false;
}

bool parse_int_list(const std::string& text, std::vector<int>* out) {
  std::vector<int> values;
  for (const auto& part : split(text, ',')) {
    long v = 0;
    if (!parse_long(trim(part), &v)) return false;
    values.push_back(static_cast<int>(v));
  }
  if (values.empty()) return false;
  if (out) *out = values;
  return true;
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str(), path);
}

Config Config::from_string(const std::string& text, const std::string& origin) {
  Config config;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << origin << ":" << lineno << ": expected key = value";
      problems.push_back(msg.str());
      continue;
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      std::ostringstream msg;
      msg << origin << ":" << lineno << ": empty key";
      problems.push_back(msg.str());
      continue;
    }
    config.entries_[key] = value;
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "config parse failed:";
    for (const auto& p : problems) msg << "\n  " << p;
    throw std::runtime_error(msg.str());
  }
  return config;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_real(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  double v = 0.0;
  if (!parse_real(it->second, &v))
    throw std::runtime_error("config key " + key + ": not a number: " + it->second);
  return v;
}

long Config::get_int(const std::string& key, long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  long v = 0;
  if (!parse_long(it->second, &v))
    throw std::runtime_error("config key " + key + ": not an integer: " + it->second);
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  bool v = false;
  if (!parse_bool(it->second, &v))
    throw std::runtime_error("config key " + key + ": not a boolean: " + it->second);
  return v;
}

std::uint64_t Config::get_seed() const {
  auto it = entries_.find("seed");
  if (it == entries_.end()) return 1;
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key seed: not an unsigned integer: " + it->second);
  }
}

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<int> v;
  if (!parse_int_list(it->second, &v))
    throw std::runtime_error("config key " + key + ": not a comma-separated integer list: " +
                             it->second);
  return v;
}

std::vector<std::string> Config::validate() const {
  std::vector<std::string> problems;
  for (const auto& [key, value] : entries_) {
    const KeySpec* spec = find_spec(key);
    if (!spec) {
      problems.push_back("unknown config key: " + key);
      continue;
    }
    switch (spec->kind) {
      case Kind::Int:
        if (!parse_long(value, nullptr))
          problems.push_back(key + ": not an integer: " + value);
        break;
      case Kind::Real:
        if (!parse_real(value, nullptr)) problems.push_back(key + ": not a number: " + value);
        break;
      case Kind::Bool:
        if (!parse_bool(value, nullptr)) problems.push_back(key + ": not a boolean: " + value);
        break;
      case Kind::IntList:
        if (!parse_int_list(value, nullptr))
          problems.push_back(key + ": not a comma-separated integer list: " + value);
        break;
      case Kind::Enum: {
        bool ok = false;
        for (const char* choice : spec->choices) ok = ok || value == choice;
        if (!ok) {
          std::ostringstream msg;
          msg << key << ": '" << value << "' is not one of {";
          for (std::size_t i = 0; i < spec->choices.size(); ++i)
            msg << (i ? ", " : "") << spec->choices[i];
          msg << "}";
          problems.push_back(msg.str());
        }
        break;
      }
      case Kind::Text:
        break;
    }
  }

  auto in_unit_interval = [&](const char* key) {
    if (!has(key)) return;
    double v = 0.0;
    if (parse_real(entries_.at(key), &v) && (v < 0.0 || v > 1.0))
      problems.push_back(std::string(key) + ": must lie in [0, 1]");
  };
  in_unit_interval("ssl.alpha");
  in_unit_interval("ssl.eta");
  in_unit_interval("kg.min_confidence");

  auto at_least = [&](const char* key, long floor) {
    if (!has(key)) return;
    long v = 0;
    if (parse_long(entries_.at(key), &v) && v < floor) {
      std::ostringstream msg;
      msg << key << ": must be at least " << floor;
      problems.push_back(msg.str());
    }
  };
  at_least("threads", 1);
  at_least("ssl.knn_k", 1);
  at_least("ssl.rounds", 0);
  at_least("embed.dim", 2);
  at_least("embed.negatives", 1);
  at_least("embed.max_path_len", 1);

  return problems;
}

std::string Config::resolved() const {
  std::map<std::string, std::string> merged;
  for (const auto& spec : registry()) merged[spec.key] = spec.fallback;
  for (const auto& [key, value] : entries_) merged[key] = value;
  std::ostringstream out;
  for (const auto& [key, value] : merged) out << key << " = " << value << "\n";
  return out.str();
}

}  // namespace scikg
