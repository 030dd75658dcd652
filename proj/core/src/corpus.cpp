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

#include "scikg/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "scikg/common.hpp"

namespace scikg {
namespace {

using nlohmann::json;

std::vector<std::string> read_string_array(const json& j, const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) return out;
  for (const auto& e : *it) {
    if (e.is_string()) out.push_back(e.get<std::string>());
  }
  return out;
}

// Removes every occurrence of `id` in-place; returns how many were removed.
std::size_t strip_self(std::vector<std::string>& ids, const std::string& id) {
  std::size_t before = ids.size();
  ids.erase(std::remove(ids.begin(), ids.end(), id), ids.end());
  return before - ids.size();
}

}  // namespace

PaperLoadResult load_papers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  PaperLoadResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) {
      result.issues.push_back({lineno, "not a JSON object"});
      continue;
    }

    PaperRecord r;
    if (j.contains("id") && j["id"].is_string()) r.id = j["id"].get<std::string>();
    if (r.id.empty()) {
      result.issues.push_back({lineno, "record missing id"});
      continue;
    }
    if (seen.count(r.id)) {
      result.issues.push_back({lineno, "duplicate id " + r.id});
      continue;
    }
    if (j.contains("abstract") && j["abstract"].is_string())
      r.abstract_text = j["abstract"].get<std::string>();
    if (r.abstract_text.empty()) {
      result.issues.push_back({lineno, "record " + r.id + " missing abstract"});
      continue;
    }
    if (j.contains("year") && j["year"].is_number())
      r.year = static_cast<int>(j["year"].get<double>());
    if (r.year < 1900 || r.year > 2100) {
      std::ostringstream msg;
      msg << "record " << r.id << " year " << r.year << " outside [1900, 2100]";
      result.issues.push_back({lineno, msg.str()});
      continue;
    }

    if (j.contains("title") && j["title"].is_string()) r.title = j["title"].get<std::string>();
    if (j.contains("venue") && j["venue"].is_string()) r.venue = j["venue"].get<std::string>();
    r.authors = read_string_array(j, "authors");
    r.in_citations = read_string_array(j, "inCitations");
    r.out_citations = read_string_array(j, "outCitations");

    if (strip_self(r.in_citations, r.id) + strip_self(r.out_citations, r.id) > 0)
      result.issues.push_back({lineno, "record " + r.id + ": self-citation removed"});

    seen.insert(r.id);
    result.papers.push_back(std::move(r));
  }
  return result;
}

void save_papers(const std::string& path, const std::vector<PaperRecord>& papers) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& p : papers) {
    json j;  // json object keys serialize sorted, keeping output canonical
    j["id"] = p.id;
    j["title"] = p.title;
    j["abstract"] = p.abstract_text;
    j["authors"] = p.authors;
    j["venue"] = p.venue;
    j["year"] = p.year;
    j["inCitations"] = p.in_citations;
    j["outCitations"] = p.out_citations;
    out << j.dump() << '\n';
  }
}

namespace {

constexpr std::string_view kLeadPunct = "([{\"'";
constexpr std::string_view kTrailPunct = ")]}\"',;:!?";

void emit_chunk(const std::string& chunk, std::vector<std::string>& out) {
  std::string word = chunk;
  std::vector<std::string> lead;
  std::vector<std::string> trail;
  while (word.size() > 1 && kLeadPunct.find(word.front()) != std::string_view::npos) {
    lead.emplace_back(1, word.front());
    word.erase(word.begin());
  }
  while (word.size() > 1) {
    char c = word.back();
    if (kTrailPunct.find(c) != std::string_view::npos) {
      trail.emplace_back(1, c);
      word.pop_back();
    } else if (c == '.') {
      // A final period splits off unless the word has an interior period,
      // which keeps dotted abbreviations such as "U.S." whole.
      if (word.find('.') + 1 < word.size()) break;
      trail.emplace_back(1, c);
      word.pop_back();
    } else {
      break;
    }
  }
  for (auto& t : lead) out.push_back(std::move(t));
  if (!word.empty()) out.push_back(std::move(word));
  for (auto it = trail.rbegin(); it != trail.rend(); ++it) out.push_back(std::move(*it));
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string chunk;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!chunk.empty()) {
        emit_chunk(chunk, out);
        chunk.clear();
      }
    } else {
      chunk.push_back(c);
    }
  }
  if (!chunk.empty()) emit_chunk(chunk, out);
  return out;
}

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Words whose trailing period rarely closes a sentence.
const std::set<std::string>& abbreviations() {
  static const std::set<std::string> kAbbrev = {
      "al",  "cf",  "dr",  "e.g", "eq",  "eqs",  "et", "etc", "fig",
      "figs", "i.e", "mr", "ms",  "no",  "prof", "resp", "sec", "vs"};
  return kAbbrev;
}

bool ends_with_abbreviation(const std::string& text, std::size_t dot) {
  std::size_t end = dot;
  std::size_t begin = end;
  while (begin > 0) {
    char c = text[begin - 1];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.') {
      --begin;
    } else {
      break;
    }
  }
  if (begin == end) return false;
  std::string word = to_lower(text.substr(begin, end - begin));
  if (word.size() == 1 && std::isupper(static_cast<unsigned char>(text[begin])))
    return true;  // middle initial, "J."
  return abbreviations().count(word) > 0;
}

}  // namespace

std::vector<std::vector<std::string>> split_sentences(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::size_t start = 0;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminal(text[i])) continue;
    if (text[i] == '.' && ends_with_abbreviation(text, i)) continue;
    std::size_t j = i;
    while (j + 1 < n && (is_terminal(text[j + 1]) || text[j + 1] == ')' ||
                         text[j + 1] == ']' || text[j + 1] == '"' || text[j + 1] == '\''))
      ++j;
    std::size_t next = j + 1;
    while (next < n && std::isspace(static_cast<unsigned char>(text[next]))) ++next;
    if (next == n) {
      i = j;
      continue;  // trailing punctuation, closed below
    }
    if (next == j + 1) continue;  // no whitespace, e.g. "3.5"
    char c = text[next];
    if (!std::isupper(static_cast<unsigned char>(c)) &&
        !std::isdigit(static_cast<unsigned char>(c)) && c != '(' && c != '"')
      continue;
    auto tokens = tokenize(text.substr(start, j + 1 - start));
    if (!tokens.empty()) out.push_back(std::move(tokens));
    start = next;
    i = j;
  }
  if (start < n) {
    auto tokens = tokenize(text.substr(start));
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

namespace {

char iob_prefix(const std::string& tag) {
  if (tag == "O") return 'O';
  if (tag.size() > 2 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I')) return tag[0];
  throw std::invalid_argument("malformed IOB tag: " + tag);
}

std::string iob_category(const std::string& tag) { return tag.substr(2); }

}  // namespace

bool iob_consistent(const std::vector<std::string>& tags) {
  std::string open;  // category of the span currently open, empty for none
  for (const auto& tag : tags) {
    char p = iob_prefix(tag);
    if (p == 'O') {
      open.clear();
    } else if (p == 'B') {
      open = iob_category(tag);
    } else {
      if (open.empty() || open != iob_category(tag)) return false;
    }
  }
  return true;
}

SpanDecodeResult tags_to_spans(const std::vector<std::string>& tags,
                               const std::string& doc_id, int sentence_index) {
  SpanDecodeResult result;
  int open_start = -1;
  std::string open_cat;
  auto close = [&](int end) {
    if (open_start < 0) return;
    Span s;
    s.doc_id = doc_id;
    s.sentence_index = sentence_index;
    s.start = open_start;
    s.end = end;
    s.category = open_cat;
    result.spans.push_back(std::move(s));
    open_start = -1;
    open_cat.clear();
  };
  for (std::size_t t = 0; t < tags.size(); ++t) {
    char p = iob_prefix(tags[t]);
    if (p == 'O') {
      close(static_cast<int>(t));
    } else if (p == 'B') {
      close(static_cast<int>(t));
      open_start = static_cast<int>(t);
      open_cat = iob_category(tags[t]);
    } else {
      std::string cat = iob_category(tags[t]);
      if (open_start >= 0 && open_cat == cat) continue;
      // Stray continuation tag: treat it as the start of a new span.
      ++result.repairs;
      close(static_cast<int>(t));
      open_start = static_cast<int>(t);
      open_cat = std::move(cat);
    }
  }
  close(static_cast<int>(tags.size()));
  return result;
}

std::vector<std::string> spans_to_tags(const std::vector<Span>& spans, std::size_t length) {
  std::vector<std::string> tags(length, "O");
  std::vector<char> used(length, 0);
  for (const auto& s : spans) {
    if (s.start < 0 || s.end <= s.start || static_cast<std::size_t>(s.end) > length)
      throw std::invalid_argument("span outside sentence bounds");
    for (int t = s.start; t < s.end; ++t) {
      if (used[t]) throw std::invalid_argument("overlapping spans");
      used[t] = 1;
      tags[t] = (t == s.start ? "B-" : "I-") + s.category;
    }
  }
  return tags;
}

std::vector<LabeledSentence> read_conll(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CoNLL file: " + path);

  std::vector<LabeledSentence> out;
  LabeledSentence current;
  std::string doc_id;
  int sent_index = 0;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (current.sentence.tokens.empty()) return;
    current.sentence.doc_id = doc_id;
    current.sentence.index = sent_index++;
    out.push_back(std::move(current));
    current = LabeledSentence{};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.rfind("-DOCSTART-", 0) == 0) {
      flush();
      doc_id = trim(line.substr(10));
      sent_index = 0;
      continue;
    }
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": expected token<TAB>pos<TAB>tag, got "
          << fields.size() << " fields";
      throw std::runtime_error(msg.str());
    }
    iob_prefix(fields[2]);  // validates tag shape early
    current.sentence.tokens.push_back(fields[0]);
    current.sentence.pos_tags.push_back(fields[1]);
    current.tags.push_back(fields[2]);
  }
  flush();
  return out;
}

void write_conll(const std::string& path, const std::vector<LabeledSentence>& sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write CoNLL file: " + path);
  std::string doc_id;
  bool first = true;
  for (const auto& s : sentences) {
    if (first || s.sentence.doc_id != doc_id) {
      doc_id = s.sentence.doc_id;
      if (!doc_id.empty()) out << "-DOCSTART- " << doc_id << "\n\n";
    } else {
      out << "\n";
    }
    first = false;
    for (std::size_t t = 0; t < s.sentence.tokens.size(); ++t) {
      const std::string& pos =
          t < s.sentence.pos_tags.size() ? s.sentence.pos_tags[t] : std::string("X");
      out << s.sentence.tokens[t] << '\t' << pos << '\t' << s.tags[t] << '\n';
    }
  }
}

LabelMap LabelMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label map: " + path);
  LabelMap lm;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split(t, '\t');
    if (fields.size() != 2) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": expected From<TAB>To";
      throw std::runtime_error(msg.str());
    }
    lm.add(trim(fields[0]), trim(fields[1]));
  }
  return lm;
}

void LabelMap::add(const std::string& from, const std::string& to) { map_[from] = to; }

std::optional<std::string> LabelMap::apply(const std::string& category) const {
  auto it = map_.find(category);
  if (it == map_.end()) return category;
  if (it->second == "-") return std::nullopt;
  return it->second;
}

std::vector<Span> LabelMap::apply(const std::vector<Span>& spans) const {
  std::vector<Span> out;
  for (const auto& s : spans) {
    auto mapped = apply(s.category);
    if (!mapped) continue;
    Span copy = s;
    copy.category = *mapped;
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace scikg
