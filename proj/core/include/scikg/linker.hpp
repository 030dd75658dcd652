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
//
// Rule-based entity linking: surface variants of the same scientific term
// ("POS tagging" / "PoS tagging" / "part-of-speech tagging") are merged into
// one canonical entity through normalization keys and parenthesized-acronym
// detection, then clustered with union-find.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scikg/common.hpp"
#include "scikg/corpus.hpp"

namespace scikg {

struct Mention {
  std::string surface;  // the token run of the span, space-joined
  Span span;
  std::string doc_id;
};

struct AcronymPair {
  std::string long_form;
  std::string acronym;
};

struct EntityCluster {
  std::string canonical_id;
  std::string canonical_form;
  std::vector<std::string> variants;  // distinct surfaces, sorted
  std::string category;
  std::size_t mention_count = 0;
};

// Deterministic normalization key: case-folded, hyphens/underscores turned
// into spaces, whitespace collapsed, per-token plural "s" stripped for
// tokens longer than 3 characters, and a small suffix table collapsing
// derivational families ("tagger"/"tagging" → "tag").
std::string normalize_surface(const std::string& surface);

// Emits (long form, acronym) pairs for the pattern "<span> ( <span> )" when
// the initials of the long form's words (stop-words skipped) match the
// acronym's letters case-insensitively.  Purely numeric "acronyms" never
// match.  A trailing plural "s" on the acronym is tolerated.
std::vector<AcronymPair> detect_acronym(const Sentence& sentence,
                                        const std::vector<Span>& spans);

// Union-find over two edge types: equal normalization keys and detected
// acronym pairs.  Canonical form: most frequent variant, then longest, then
// lexicographically smallest.  Cluster category by mention majority, ties
// toward Method.  Output ordered by canonical_id ("e0001", ...), assigned in
// first-mention order.
std::vector<EntityCluster> link_mentions(const std::vector<Mention>& mentions,
                                         const std::vector<AcronymPair>& acronym_pairs);

// Pairwise evaluation: a predicted positive pair is two distinct surfaces
// sharing a cluster.
Prf evaluate_linking(const std::vector<EntityCluster>& clusters,
                     const std::vector<std::pair<std::string, std::string>>& gold_pairs);

// TSV rows canonical_id<TAB>canonical_form<TAB>category<TAB>variant, one row
// per variant.
void write_clusters(const std::string& path, const std::vector<EntityCluster>& clusters);
std::vector<EntityCluster> read_clusters(const std::string& path);

}  // namespace scikg
