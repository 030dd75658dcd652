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

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace scikg {

// One bibliographic record from a JSONL corpus file.  Every line is a JSON
// object; the loader reports malformed lines instead of aborting.
struct PaperRecord {
  std::string id;
  std::string title;
  std::string abstract_text;
  std::vector<std::string> authors;
  std::string venue;
  int year = 0;
  std::vector<std::string> in_citations;   // ids of citing papers
  std::vector<std::string> out_citations;  // ids of cited papers
};

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::string> pos_tags;  // same length as tokens, "X" when unknown
  std::string doc_id;
  int index = 0;  // position of the sentence within its document
};

struct LabeledSentence {
  Sentence sentence;
  std::vector<std::string> tags;  // IOB, e.g. "B-Task", "I-Task", "O"
};

// Half-open token interval [start, end) inside one sentence.
struct Span {
  std::string doc_id;
  int sentence_index = 0;
  int start = 0;
  int end = 0;
  std::string category;
  double confidence = 1.0;
};

struct LoadIssue {
  std::size_t line = 0;  // 1-based line number, 0 when not line-specific
  std::string message;
};

struct PaperLoadResult {
  std::vector<PaperRecord> papers;
  std::vector<LoadIssue> issues;
};

// Reads a JSONL corpus.  Records missing an id or abstract, records with an
// out-of-range year and duplicated ids are dropped and reported as issues.
// Self-citations are removed from the citation lists and reported.
PaperLoadResult load_papers(const std::string& path);

// Writes records one JSON object per line with sorted keys, so equal inputs
// always produce byte-identical files.
void save_papers(const std::string& path, const std::vector<PaperRecord>& papers);

// Whitespace/punctuation tokenizer.  Hyphenated compounds stay one token;
// sentence-final punctuation becomes its own token.
std::vector<std::string> tokenize(const std::string& text);

// Splits raw text into sentences and tokenizes each.  Uses terminal
// punctuation followed by an uppercase/digit start, with a small
// abbreviation guard list (e.g., "et al.", "e.g.").
std::vector<std::vector<std::string>> split_sentences(const std::string& text);

bool iob_consistent(const std::vector<std::string>& tags);

struct SpanDecodeResult {
  std::vector<Span> spans;
  std::size_t repairs = 0;  // count of I-X tags promoted to span starts
};

// Decodes an IOB sequence into spans.  A stray I-X (no preceding B-X/I-X of
// the same category) opens a new span and is counted as a repair.
SpanDecodeResult tags_to_spans(const std::vector<std::string>& tags,
                               const std::string& doc_id = std::string(),
                               int sentence_index = 0);

// Inverse of tags_to_spans for well-formed input.  Throws std::invalid_argument
// when spans overlap or fall outside [0, length).
std::vector<std::string> spans_to_tags(const std::vector<Span>& spans, std::size_t length);

// CoNLL-style file: one "token<TAB>pos<TAB>tag" row per token, blank line
// between sentences, and "-DOCSTART- <id>" lines starting a new document.
std::vector<LabeledSentence> read_conll(const std::string& path);
void write_conll(const std::string& path, const std::vector<LabeledSentence>& sentences);

// Collapses annotation-scheme category labels onto the working label set,
// e.g. Process -> Method.  Mapping to "-" drops the span.  Unmapped labels
// pass through unchanged.
class LabelMap {
 public:
  static LabelMap load(const std::string& path);  // TSV rows "From<TAB>To"
  static LabelMap identity() { return LabelMap(); }

  void add(const std::string& from, const std::string& to);
  // nullopt means the category is dropped.
  std::optional<std::string> apply(const std::string& category) const;

  // Applies the map to a span list, dropping and renaming as configured.
  std::vector<Span> apply(const std::vector<Span>& spans) const;

 private:
  std::map<std::string, std::string> map_;  // "-" value encodes a drop
};

}  // namespace scikg
