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

#include "scikg/linker.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace scikg {
namespace {

// Derivational suffix table: longest matching suffix wins, one application
// per token, and the stem must keep at least 4 characters.  The doubled-
// consonant rows fold agent/gerund forms onto their stem ("trimmer",
// "trimming" → "trim"); shorter bases like "tagger"/"tagging" still collapse
// with each other through the bare "er"/"ing" rows.
struct SuffixRule {
  std::string_view suffix;
  std::string_view replacement;
};

constexpr SuffixRule kSuffixTable[] = {
    {"bbing", "b"}, {"bber", "b"}, {"dding", "d"}, {"dder", "d"},
    {"gging", "g"}, {"gger", "g"}, {"mming", "m"}, {"mmer", "m"},
    {"nning", "n"}, {"nner", "n"}, {"pping", "p"}, {"pper", "p"},
    {"rring", "r"}, {"rrer", "r"}, {"ssing", "ss"}, {"sser", "ss"},
    {"tting", "t"}, {"tter", "t"}, {"ing", ""},    {"er", ""},
    {"e", ""},
};

std::string stem_token(std::string token) {
  if (token.size() > 3 && token.back() == 's') token.pop_back();
  for (const auto& rule : kSuffixTable) {
    if (token.size() < rule.suffix.size()) continue;
    std::size_t stem_len = token.size() - rule.suffix.size();
    if (std::string_view(token).substr(stem_len) != rule.suffix) continue;
    if (stem_len + rule.replacement.size() < 4) continue;
    token = token.substr(0, stem_len) + std::string(rule.replacement);
    break;
  }
  return token;
}

const std::set<std::string>& stop_words() {
  static const std::set<std::string> kStop = {"a",  "an", "and", "for", "in",
                                              "of", "on", "the", "to",  "with"};
  return kStop;
}

}  // namespace

std::string normalize_surface(const std::string& surface) {
  std::string folded;
  folded.reserve(surface.size());
  for (unsigned char c : surface) {
    if (c == '-' || c == '_') {
      folded.push_back(' ');
    } else {
      folded.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  std::string key;
  for (const auto& token : split(folded, ' ')) {
    std::string t = trim(token);
    if (t.empty()) continue;
    if (!key.empty()) key.push_back(' ');
    key += stem_token(std::move(t));
  }
  return key;
}

namespace {

std::string join_tokens(const Sentence& sentence, int begin, int end) {
  std::string out;
  for (int t = begin; t < end; ++t) {
    if (!out.empty()) out.push_back(' ');
    out += sentence.tokens[t];
  }
  return out;
}

bool initials_match(const std::string& long_form, const std::string& acronym) {
  std::string letters;
  for (unsigned char c : acronym) {
    if (std::isdigit(c)) return false;  // digits never form initials
    if (std::isalpha(c)) letters.push_back(static_cast<char>(std::tolower(c)));
  }
  if (letters.size() < 2) return false;

  std::string all_initials;
  std::string content_initials;
  for (const auto& word : split(long_form, ' ')) {
    if (word.empty() || !std::isalpha(static_cast<unsigned char>(word[0]))) continue;
    char initial = static_cast<char>(std::tolower(static_cast<unsigned char>(word[0])));
    all_initials.push_back(initial);
    if (!stop_words().count(to_lower(word))) content_initials.push_back(initial);
  }
  if (content_initials.empty()) content_initials = all_initials;

  auto matches = [&](const std::string& initials) {
    if (initials == letters) return true;
    // "CRFs" style plural acronym
    return letters.size() > 2 && letters.back() == 's' &&
           initials == letters.substr(0, letters.size() - 1);
  };
  return matches(content_initials) || matches(all_initials);
}

}  // namespace

std::vector<AcronymPair> detect_acronym(const Sentence& sentence,
                                        const std::vector<Span>& spans) {
  const int n = static_cast<int>(sentence.tokens.size());
  std::vector<Span> sorted = spans;
  std::sort(sorted.begin(), sorted.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });

  std::vector<AcronymPair> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      if (i == j) continue;
      const Span& lhs = sorted[i];
      const Span& rhs = sorted[j];
      if (rhs.start != lhs.end + 1) continue;
      if (lhs.end >= n || sentence.tokens[lhs.end] != "(") continue;
      if (rhs.end >= n || sentence.tokens[rhs.end] != ")") continue;
      std::string long_form = join_tokens(sentence, lhs.start, lhs.end);
      std::string acronym = join_tokens(sentence, rhs.start, rhs.end);
      if (initials_match(long_form, acronym)) out.push_back({long_form, acronym});
    }
  }
  std::sort(out.begin(), out.end(), [](const AcronymPair& a, const AcronymPair& b) {
    return std::tie(a.long_form, a.acronym) < std::tie(b.long_form, b.acronym);
  });
  return out;
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<EntityCluster> link_mentions(const std::vector<Mention>& mentions,
                                         const std::vector<AcronymPair>& acronym_pairs) {
  // One union-find node per distinct normalization key, in first-seen order.
  std::vector<std::string> keys;
  std::map<std::string, std::size_t> key_index;
  auto key_node = [&](const std::string& surface) {
    std::string key = normalize_surface(surface);
    auto it = key_index.find(key);
    if (it != key_index.end()) return it->second;
    std::size_t id = keys.size();
    keys.push_back(key);
    key_index.emplace(std::move(key), id);
    return id;
  };

  std::vector<std::size_t> mention_node;
  mention_node.reserve(mentions.size());
  for (const auto& m : mentions) mention_node.push_back(key_node(m.surface));

  UnionFind uf(keys.size());
  for (const auto& pair : acronym_pairs) {
    // Only join keys that actually occur among the mentions; a pair whose
    // side never surfaced as a mention has nothing to merge.
    std::string lk = normalize_surface(pair.long_form);
    std::string ak = normalize_surface(pair.acronym);
    auto li = key_index.find(lk);
    auto ai = key_index.find(ak);
    if (li != key_index.end() && ai != key_index.end()) uf.unite(li->second, ai->second);
  }

  // Group mentions by root, keeping first-appearance order of roots.
  std::map<std::size_t, std::size_t> root_order;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t mi = 0; mi < mentions.size(); ++mi) {
    std::size_t root = uf.find(mention_node[mi]);
    auto it = root_order.find(root);
    if (it == root_order.end()) {
      it = root_order.emplace(root, groups.size()).first;
      groups.emplace_back();
    }
    groups[it->second].push_back(mi);
  }

  std::vector<EntityCluster> clusters;
  clusters.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    EntityCluster cluster;
    std::map<std::string, std::size_t> surface_counts;
    std::map<std::string, std::size_t> category_counts;
    for (std::size_t mi : groups[g]) {
      ++surface_counts[mentions[mi].surface];
      ++category_counts[mentions[mi].span.category];
    }
    cluster.mention_count = groups[g].size();
    for (const auto& [surface, count] : surface_counts) cluster.variants.push_back(surface);

    // most frequent, then longest, then lexicographically smallest
    cluster.canonical_form = cluster.variants.front();
    std::size_t best_count = surface_counts[cluster.canonical_form];
    for (const auto& v : cluster.variants) {
      std::size_t count = surface_counts[v];
      if (count > best_count ||
          (count == best_count && (v.size() > cluster.canonical_form.size() ||
                                   (v.size() == cluster.canonical_form.size() &&
                                    v < cluster.canonical_form)))) {
        cluster.canonical_form = v;
        best_count = count;
      }
    }

    std::size_t best_votes = 0;
    cluster.category = "Method";
    for (const auto& [category, votes] : category_counts) {
      if (votes > best_votes) {
        cluster.category = category;
        best_votes = votes;
      } else if (votes == best_votes && category == "Method") {
        cluster.category = category;
      }
    }

    std::ostringstream id;
    id << "e" << std::setw(4) << std::setfill('0') << g + 1;
    cluster.canonical_id = id.str();
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

Prf evaluate_linking(const std::vector<EntityCluster>& clusters,
                     const std::vector<std::pair<std::string, std::string>>& gold_pairs) {
  auto canonical_pair = [](const std::string& a, const std::string& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  };

  std::set<std::pair<std::string, std::string>> predicted;
  for (const auto& cluster : clusters) {
    for (std::size_t i = 0; i < cluster.variants.size(); ++i)
      for (std::size_t j = i + 1; j < cluster.variants.size(); ++j)
        predicted.insert(canonical_pair(cluster.variants[i], cluster.variants[j]));
  }
  std::set<std::pair<std::string, std::string>> gold;
  for (const auto& [a, b] : gold_pairs)
    if (a != b) gold.insert(canonical_pair(a, b));

  std::size_t matched = 0;
  for (const auto& p : predicted)
    if (gold.count(p)) ++matched;
  return make_prf(matched, predicted.size(), gold.size());
}

void write_clusters(const std::string& path, const std::vector<EntityCluster>& clusters) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write cluster table: " + path);
  for (const auto& c : clusters)
    for (const auto& v : c.variants)
      out << c.canonical_id << '\t' << c.canonical_form << '\t' << c.category << '\t'
          << v << '\n';
}

std::vector<EntityCluster> read_clusters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cluster table: " + path);
  std::vector<EntityCluster> clusters;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4) {
      std::ostringstream msg;
      msg << path << ":" << lineno
          << ": expected canonical_id<TAB>canonical_form<TAB>category<TAB>variant";
      throw std::runtime_error(msg.str());
    }
    auto it = index.find(fields[0]);
    if (it == index.end()) {
      it = index.emplace(fields[0], clusters.size()).first;
      EntityCluster c;
      c.canonical_id = fields[0];
      c.canonical_form = fields[1];
      c.category = fields[2];
      clusters.push_back(std::move(c));
    }
    clusters[it->second].variants.push_back(fields[3]);
    // occurrence counts are not part of the table; variant count is the floor
    clusters[it->second].mention_count = clusters[it->second].variants.size();
  }
  return clusters;
}

}  // namespace scikg
