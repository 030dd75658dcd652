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

#ifndef SCIKG_RANK_HPP_
#define SCIKG_RANK_HPP_

#include <map>
#include <string>
#include <vector>

#include "scikg/embed.hpp"
#include "scikg/kg.hpp"

namespace scikg {

struct RankingQuery {
  std::string known;
  std::string relation;
  int resource = 0;
  bool target_is_tail = true;
  std::string category_filter;  // empty = any category
  bool filtered = true;
  std::string gold;  // never removed by the filter; may be empty for discovery
};

struct ScoredCandidate {
  std::string entity;
  double score = 0.0;
};

struct ScoreOptions {
  bool use_paths = false;
  int max_path_len = 3;
};

// Candidates in descending score order, ties broken by entity id.  Filtered
// mode removes candidates that complete a stored triple, except the gold.
std::vector<ScoredCandidate> rank_candidates(const EmbeddingModel& model, const KgStore& store,
                                             const RankingQuery& query,
                                             const ScoreOptions& options = {});

// 1 + number of strictly higher-scored candidates; ties do not penalize.
int rank_of(const std::vector<ScoredCandidate>& candidates, const std::string& gold);

struct RankingReport {
  std::vector<int> per_query_ranks;
  double mrr = 0.0;
  std::map<int, double> hits_at_k;
  std::size_t query_count = 0;
};

// Queries both slots of every test triple.
RankingReport evaluate_ranking(const EmbeddingModel& model, const KgStore& store,
                               const std::vector<Triple>& test_triples,
                               const std::vector<int>& ks, const ScoreOptions& options = {},
                               bool filtered = true);

std::string report_json(const RankingReport& report);
std::string report_table(const RankingReport& report);

struct Recommendation {
  std::string entity_id;
  std::string canonical_form;
  double score = 0.0;
  std::string evidence;
};

// Term surface resolves through the linker; candidates follow the relation's
// category pattern (a Task-Method query from a Method ranks Tasks).
std::vector<Recommendation> recommend(const EmbeddingModel& model, const KgStore& store,
                                      const std::string& surface, const std::string& relation,
                                      int top_n, const ScoreOptions& options = {});

// rank<TAB>entity<TAB>score<TAB>evidence
void write_recommendations(const std::string& path, const std::vector<Recommendation>& recs);

// Candidates ordered by the number of distinct documents in which they
// co-occur with the query entity, restricted to the relation's partner
// category; zero-count candidates excluded.
std::vector<std::pair<std::string, int>> ground_truth_from_frequency(
    const KgStore& store, const std::vector<LinkedMention>& mentions,
    const std::string& query_entity, const std::string& relation);

// Rank correlation over the items common to both orderings; fewer than two
// common items yields 0.
double spearman_correlation(const std::vector<std::string>& ranking_a,
                            const std::vector<std::string>& ranking_b);

}  // namespace scikg

#endif  // SCIKG_RANK_HPP_
