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

#include "scikg/rank.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace scikg {

using nlohmann::json;

namespace {

double query_score(const EmbeddingModel& model, const KgStore& store, const RankingQuery& q,
                   const std::string& candidate, const ScoreOptions& options) {
  const std::string& head = q.target_is_tail ? q.known : candidate;
  const std::string& tail = q.target_is_tail ? candidate : q.known;
  if (options.use_paths)
    return combined_score(model, store, head, q.relation, q.resource, tail,
                          options.max_path_len);
  return bilinear_score(model, head, q.relation, q.resource, tail);
}

// Slot categories for the core relation names; anything else is unrestricted.
std::pair<std::string, std::string> slot_categories(const std::string& relation) {
  if (relation == kTaskTask) return {"Task", "Task"};
  if (relation == kMethodMethod) return {"Method", "Method"};
  if (relation == kTaskMethod) return {"Task", "Method"};
  return {"", ""};
}

}  // namespace

std::vector<ScoredCandidate> rank_candidates(const EmbeddingModel& model, const KgStore& store,
                                             const RankingQuery& query,
                                             const ScoreOptions& options) {
  std::vector<std::string> pool;
  for (const auto& e : store.entities()) {
    if (e.id == query.known) continue;
    if (!query.category_filter.empty() && e.category != query.category_filter) continue;
    if (query.filtered && e.id != query.gold) {
      const std::string& head = query.target_is_tail ? query.known : e.id;
      const std::string& tail = query.target_is_tail ? e.id : query.known;
      if (store.find_triple(head, query.relation, query.resource, tail)) continue;
    }
    pool.push_back(e.id);
  }
  if (!query.gold.empty() && query.gold != query.known &&
      std::find(pool.begin(), pool.end(), query.gold) == pool.end())
    pool.push_back(query.gold);
  if (pool.empty()) {
    std::ostringstream msg;
    msg << "empty candidate set for " << query.relation << " query from " << query.known;
    throw std::runtime_error(msg.str());
  }

  std::vector<ScoredCandidate> out;
  out.reserve(pool.size());
  for (const auto& id : pool) out.push_back({id, query_score(model, store, query, id, options)});
  std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  return out;
}

int rank_of(const std::vector<ScoredCandidate>& candidates, const std::string& gold) {
  const ScoredCandidate* target = nullptr;
  for (const auto& c : candidates)
    if (c.entity == gold) {
      target = &c;
      break;
    }
  if (!target) throw std::invalid_argument("gold entity not in candidate list: " + gold);
  int higher = 0;
  for (const auto& c : candidates)
    if (c.score > target->score) ++higher;
  return 1 + higher;
}

RankingReport evaluate_ranking(const EmbeddingModel& model, const KgStore& store,
                               const std::vector<Triple>& test_triples,
                               const std::vector<int>& ks, const ScoreOptions& options,
                               bool filtered) {
  RankingReport report;
  for (const auto& t : test_triples) {
    auto [head_category, tail_category] = slot_categories(t.relation);

    RankingQuery tail_query{t.head, t.relation, t.resource, true,
                            tail_category, filtered,   t.tail};
    report.per_query_ranks.push_back(
        rank_of(rank_candidates(model, store, tail_query, options), t.tail));

    RankingQuery head_query{t.tail, t.relation, t.resource, false,
                            head_category, filtered,    t.head};
    report.per_query_ranks.push_back(
        rank_of(rank_candidates(model, store, head_query, options), t.head));
  }

  report.query_count = report.per_query_ranks.size();
  double rr_sum = 0.0;
  for (int r : report.per_query_ranks) rr_sum += 1.0 / r;
  report.mrr = report.query_count ? rr_sum / static_cast<double>(report.query_count) : 0.0;
  for (int k : ks) {
    std::size_t within = 0;
    for (int r : report.per_query_ranks)
      if (r <= k) ++within;
    report.hits_at_k[k] =
        report.query_count ? static_cast<double>(within) / report.query_count : 0.0;
  }
  return report;
}

std::string report_json(const RankingReport& report) {
  json j;
  j["mrr"] = report.mrr;
  j["hits"] = json::object();
  for (const auto& [k, v] : report.hits_at_k) j["hits"][std::to_string(k)] = v;
  j["query_count"] = report.query_count;
  j["ranks"] = report.per_query_ranks;
  return j.dump(2) + "\n";
}

std::string report_table(const RankingReport& report) {
  std::ostringstream out;
  out << "queries   " << report.query_count << "\n";
  out << "MRR       " << format_real(report.mrr) << "\n";
  for (const auto& [k, v] : report.hits_at_k)
    out << "Hits@" << k << (k < 10 ? "    " : "   ") << format_real(v) << "\n";
  return out.str();
}

namespace {

std::string summarize_paths(const KgStore& store, const std::string& head,
                            const std::string& tail, int max_path_len) {
  std::vector<RelationPath> paths = enumerate_paths(store, head, tail, max_path_len);
  if (paths.empty()) return "-";
  std::stable_sort(paths.begin(), paths.end(), [](const RelationPath& a, const RelationPath& b) {
    return a.walk_probability > b.walk_probability;
  });
  std::ostringstream out;
  int shown = 0;
  for (const auto& p : paths) {
    if (shown == 3) break;
    if (shown) out << ";";
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
      if (i) out << ">";
      if (!p.steps[i].forward) out << "~";
      out << p.steps[i].relation;
    }
    out << "(p=" << format_real(p.walk_probability) << ")";
    ++shown;
  }
  return out.str();
}

}  // namespace

std::vector<Recommendation> recommend(const EmbeddingModel& model, const KgStore& store,
                                      const std::string& surface, const std::string& relation,
                                      int top_n, const ScoreOptions& options) {
  if (top_n < 1) throw std::invalid_argument("top_n must be at least 1");
  auto resolved = store.resolve(surface);
  if (!resolved) throw std::runtime_error("term does not resolve to a known entity: '" + surface + "'");
  const KgEntity* entity = store.find_entity(*resolved);

  auto [head_category, tail_category] = slot_categories(relation);
  RankingQuery query;
  query.known = *resolved;
  query.relation = relation;
  query.resource = 0;
  query.filtered = true;
  if (relation == kTaskMethod && entity->category == "Method") {
    query.target_is_tail = false;
    query.category_filter = head_category;
  } else {
    query.target_is_tail = true;
    query.category_filter = tail_category;
  }

  std::vector<ScoredCandidate> ranked = rank_candidates(model, store, query, options);
  std::vector<Recommendation> out;
  for (const auto& c : ranked) {
    if (static_cast<int>(out.size()) == top_n) break;
    Recommendation rec;
    rec.entity_id = c.entity;
    rec.canonical_form = store.find_entity(c.entity)->canonical_form;
    rec.score = c.score;
    if (options.use_paths) {
      const std::string& head = query.target_is_tail ? query.known : c.entity;
      const std::string& tail = query.target_is_tail ? c.entity : query.known;
      rec.evidence = summarize_paths(store, head, tail, options.max_path_len);
    } else {
      rec.evidence = "-";
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_recommendations(const std::string& path, const std::vector<Recommendation>& recs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write recommendation list: " + path);
  for (std::size_t i = 0; i < recs.size(); ++i)
    out << i + 1 << '\t' << recs[i].canonical_form << '\t' << format_real(recs[i].score) << '\t'
        << recs[i].evidence << '\n';
}

std::vector<std::pair<std::string, int>> ground_truth_from_frequency(
    const KgStore& store, const std::vector<LinkedMention>& mentions,
    const std::string& query_entity, const std::string& relation) {
  const KgEntity* query = store.find_entity(query_entity);
  if (!query) throw std::invalid_argument("unknown entity id: " + query_entity);

  auto [head_category, tail_category] = slot_categories(relation);
  std::string partner_category;
  if (!head_category.empty()) {
    if (relation == kTaskMethod)
      partner_category = query->category == "Task" ? "Method" : "Task";
    else
      partner_category = tail_category;
  }

  std::map<std::string, std::set<std::string>> docs_by_entity;
  for (const auto& m : mentions) docs_by_entity[m.entity_id].insert(m.doc_id);

  const auto query_docs_it = docs_by_entity.find(query_entity);
  if (query_docs_it == docs_by_entity.end()) return {};
  const std::set<std::string>& query_docs = query_docs_it->second;

  std::vector<std::pair<std::string, int>> out;
  for (const auto& [entity_id, docs] : docs_by_entity) {
    if (entity_id == query_entity) continue;
    const KgEntity* e = store.find_entity(entity_id);
    if (!e) continue;
    if (!partner_category.empty() && e->category != partner_category) continue;
    int shared = 0;
    for (const auto& d : docs)
      if (query_docs.count(d)) ++shared;
    if (shared > 0) out.emplace_back(entity_id, shared);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

double spearman_correlation(const std::vector<std::string>& ranking_a,
                            const std::vector<std::string>& ranking_b) {
  std::set<std::string> in_b(ranking_b.begin(), ranking_b.end());
  std::vector<std::string> common;
  std::set<std::string> seen;
  for (const auto& item : ranking_a)
    if (in_b.count(item) && seen.insert(item).second) common.push_back(item);
  const std::size_t n = common.size();
  if (n < 2) return 0.0;

  std::map<std::string, int> pos_a, pos_b;
  int next = 0;
  for (const auto& item : common) pos_a[item] = next++;
  next = 0;
  for (const auto& item : ranking_b)
    if (pos_a.count(item) && !pos_b.count(item)) pos_b[item] = next++;

  double d2_sum = 0.0;
  for (const auto& item : common) {
    double d = pos_a[item] - pos_b[item];
    d2_sum += d * d;
  }
  double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2_sum / (nn * (nn * nn - 1.0));
}

}  // namespace scikg
