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

#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "scikg/rank.hpp"
#include "test_util.hpp"

using namespace scikg;
using testutil::TempDir;

namespace {

EntityCluster cluster(const std::string& id, const std::string& form,
                      const std::string& category) {
  EntityCluster c;
  c.canonical_id = id;
  c.canonical_form = form;
  c.category = category;
  c.variants = {form};
  c.mention_count = 1;
  return c;
}

void put_entity(EmbeddingModel& m, const std::string& id, const Eigen::VectorXd& v) {
  m.entity_index[id] = m.entity_ids.size();
  m.entity_ids.push_back(id);
  m.entity_vectors.conservativeResize(static_cast<Eigen::Index>(m.entity_ids.size()), m.dim);
  m.entity_vectors.row(static_cast<Eigen::Index>(m.entity_ids.size()) - 1) = v.transpose();
}

void put_relation(EmbeddingModel& m, const std::string& name, int resource,
                  const Eigen::MatrixXd& q) {
  RelationKey key{name, resource};
  m.relation_index[key] = m.relation_keys.size();
  m.relation_keys.push_back(key);
  m.relation_matrices.push_back(q);
}

// Five tasks plus a high-scoring Method decoy; identity Task-Task matrix so
// scores are plain dot products.
struct FiveTaskFixture {
  KgStore store;
  EmbeddingModel model;

  FiveTaskFixture() {
    std::vector<EntityCluster> clusters;
    for (int i = 1; i <= 5; ++i)
      clusters.push_back(cluster("e000" + std::to_string(i), "task " + std::to_string(i),
                                 "Task"));
    clusters.push_back(cluster("e0006", "decoy", "Method"));
    store = KgStore::from_clusters(clusters);

    model.dim = 2;
    put_entity(model, "e0001", Eigen::Vector2d(1.0, 0.0));
    put_entity(model, "e0002", Eigen::Vector2d(1.0, 1.0));
    put_entity(model, "e0003", Eigen::Vector2d(3.0, 0.0));
    put_entity(model, "e0004", Eigen::Vector2d(0.0, 5.0));
    put_entity(model, "e0005", Eigen::Vector2d(0.0, 7.0));
    put_entity(model, "e0006", Eigen::Vector2d(100.0, 100.0));
    put_relation(model, kTaskTask, 0, Eigen::MatrixXd::Identity(2, 2));
  }
};

LinkedMention lm(const std::string& doc, const std::string& entity,
                 const std::string& category) {
  return LinkedMention{doc, 0, entity, category, 1.0};
}

}  // namespace

TEST_SUITE_BEGIN("rank");

TEST_CASE("rank counts only strictly higher scores") {
  std::vector<ScoredCandidate> candidates = {
      {"a", 3.0}, {"b", 2.0}, {"c", 2.0}, {"d", 1.0}};
  CHECK(rank_of(candidates, "a") == 1);
  CHECK(rank_of(candidates, "b") == 2);
  CHECK(rank_of(candidates, "c") == 2);  // tied, not penalized
  CHECK(rank_of(candidates, "d") == 4);
  CHECK_THROWS_AS(rank_of(candidates, "zzz"), std::invalid_argument);
}

TEST_CASE("candidates come back sorted with ties broken by id") {
  FiveTaskFixture fx;
  RankingQuery query;
  query.known = "e0001";
  query.relation = kTaskTask;
  query.category_filter = "Task";
  query.gold = "e0002";
  auto ranked = rank_candidates(fx.model, fx.store, query);
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].entity == "e0003");  // score 3
  CHECK(ranked[1].entity == "e0002");  // score 1
  CHECK(ranked[2].entity == "e0004");  // 0, tie resolved by id
  CHECK(ranked[3].entity == "e0005");
  CHECK(ranked[2].score == ranked[3].score);

  // All-equal scores order purely by id.
  EmbeddingModel flat;
  flat.dim = 2;
  for (int i = 1; i <= 6; ++i)
    put_entity(flat, "e000" + std::to_string(i), Eigen::Vector2d(1.0, 1.0));
  put_relation(flat, kTaskTask, 0, Eigen::MatrixXd::Identity(2, 2));
  auto tied = rank_candidates(flat, fx.store, query);
  for (std::size_t i = 1; i < tied.size(); ++i) CHECK(tied[i - 1].entity < tied[i].entity);
}

TEST_CASE("the filter drops stored completions but never the gold") {
  FiveTaskFixture fx;
  fx.store.add_triple("e0001", kTaskTask, 0, "e0002", 1.0);  // the gold pair itself
  fx.store.add_triple("e0001", kTaskTask, 0, "e0003", 1.0);  // a known neighbor

  RankingQuery query;
  query.known = "e0001";
  query.relation = kTaskTask;
  query.category_filter = "Task";
  query.gold = "e0002";
  auto filtered = rank_candidates(fx.model, fx.store, query);
  std::set<std::string> ids;
  for (const auto& c : filtered) ids.insert(c.entity);
  CHECK(ids == std::set<std::string>{"e0002", "e0004", "e0005"});
  CHECK(rank_of(filtered, "e0002") == 1);  // e0003 is out of the way

  query.filtered = false;
  auto raw = rank_candidates(fx.model, fx.store, query);
  CHECK(raw.size() == 4);
  CHECK(rank_of(raw, "e0002") == 2);

  RankingQuery lonely;
  lonely.known = "e0001";
  lonely.relation = kTaskTask;
  lonely.category_filter = "Material";  // matches nothing
  CHECK_THROWS_AS(rank_candidates(fx.model, fx.store, lonely), std::runtime_error);
}

TEST_CASE("filtered rank never exceeds the raw rank") {
  Rng rng(41);
  std::vector<EntityCluster> clusters;
  for (int i = 1; i <= 10; ++i) {
    std::string id = i < 10 ? "e000" + std::to_string(i) : "e0010";
    clusters.push_back(cluster(id, "term " + std::to_string(i), "Task"));
  }
  KgStore store = KgStore::from_clusters(clusters);
  EmbeddingModel model;
  model.dim = 3;
  for (const auto& e : store.entities())
    put_entity(model, e.id,
               Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));
  put_relation(model, kTaskTask, 0, Eigen::MatrixXd::Identity(3, 3));
  for (int i = 0; i < 12; ++i) {
    const auto& entities = store.entities();
    std::string a = entities[rng.below(entities.size())].id;
    std::string b = entities[rng.below(entities.size())].id;
    if (a == b || store.find_triple(a, kTaskTask, 0, b)) continue;
    store.add_triple(a, kTaskTask, 0, b, 1.0);
  }

  for (int trial = 0; trial < 20; ++trial) {
    const auto& entities = store.entities();
    RankingQuery query;
    query.known = entities[rng.below(entities.size())].id;
    query.relation = kTaskTask;
    do {
      query.gold = entities[rng.below(entities.size())].id;
    } while (query.gold == query.known);
    int filtered_rank = rank_of(rank_candidates(model, store, query), query.gold);
    query.filtered = false;
    int raw_rank = rank_of(rank_candidates(model, store, query), query.gold);
    CHECK(filtered_rank <= raw_rank);
  }
}

TEST_CASE("ranks two and four make an MRR of exactly 0.375") {
  FiveTaskFixture fx;
  std::vector<Triple> test = {{"e0001", kTaskTask, 0, "e0002", 1.0}};
  RankingReport report = evaluate_ranking(fx.model, fx.store, test, {1, 3, 10});
  CHECK(report.per_query_ranks == std::vector<int>{2, 4});
  CHECK(report.query_count == 2);
  CHECK(report.mrr == 0.375);
  CHECK(report.hits_at_k.at(1) == 0.0);
  CHECK(report.hits_at_k.at(3) == 0.5);
  CHECK(report.hits_at_k.at(10) == 1.0);
}

TEST_CASE("rank eleven contributes nothing at cutoff ten") {
  std::vector<EntityCluster> clusters;
  char id[6];
  for (int i = 1; i <= 13; ++i) {
    std::snprintf(id, sizeof id, "e%04d", i);
    clusters.push_back(cluster(id, "term " + std::to_string(i), "Task"));
  }
  KgStore store = KgStore::from_clusters(clusters);
  EmbeddingModel model;
  model.dim = 2;
  put_entity(model, "e0001", Eigen::Vector2d(1.0, 0.0));
  put_entity(model, "e0002", Eigen::Vector2d(0.0, 1.0));
  for (int i = 3; i <= 13; ++i) {
    std::snprintf(id, sizeof id, "e%04d", i);
    put_entity(model, id, Eigen::Vector2d(1.0, 1.0));
  }
  put_relation(model, kTaskTask, 0, Eigen::MatrixXd::Identity(2, 2));

  std::vector<Triple> test = {{"e0001", kTaskTask, 0, "e0002", 1.0}};
  RankingReport report = evaluate_ranking(model, store, test, {10, 12});
  CHECK(report.per_query_ranks == std::vector<int>{12, 12});
  CHECK(report.hits_at_k.at(10) == 0.0);
  CHECK(report.hits_at_k.at(12) == 1.0);
  CHECK(report.mrr == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("universal ties rank everything first") {
  FiveTaskFixture fx;
  EmbeddingModel flat;
  flat.dim = 2;
  for (int i = 1; i <= 6; ++i)
    put_entity(flat, "e000" + std::to_string(i), Eigen::Vector2d(1.0, 1.0));
  put_relation(flat, kTaskTask, 0, Eigen::MatrixXd::Identity(2, 2));
  std::vector<Triple> test = {{"e0001", kTaskTask, 0, "e0002", 1.0},
                              {"e0003", kTaskTask, 0, "e0004", 1.0}};
  RankingReport report = evaluate_ranking(flat, fx.store, test, {1});
  CHECK(report.mrr == 1.0);
  CHECK(report.hits_at_k.at(1) == 1.0);
}

TEST_CASE("reports serialize with the metric fields") {
  FiveTaskFixture fx;
  std::vector<Triple> test = {{"e0001", kTaskTask, 0, "e0002", 1.0}};
  RankingReport report = evaluate_ranking(fx.model, fx.store, test, {1, 10});
  std::string j = report_json(report);
  CHECK(j.find("\"mrr\"") != std::string::npos);
  CHECK(j.find("\"hits\"") != std::string::npos);
  CHECK(j.find("\"query_count\": 2") != std::string::npos);
  std::string table = report_table(report);
  CHECK(table.find("MRR") != std::string::npos);
  CHECK(table.find("Hits@1 ") != std::string::npos);
  CHECK(table.find("Hits@10") != std::string::npos);
}

TEST_CASE("recommendations follow the relation's category pattern") {
  KgStore store = KgStore::from_clusters(
      {cluster("e0001", "POS tagging", "Task"), cluster("e0002", "parsing", "Task"),
       cluster("e0003", "CRF", "Method"), cluster("e0004", "HMM", "Method")});
  EmbeddingModel model;
  model.dim = 2;
  put_entity(model, "e0001", Eigen::Vector2d(1.0, 0.0));
  put_entity(model, "e0002", Eigen::Vector2d(0.0, 1.0));
  put_entity(model, "e0003", Eigen::Vector2d(2.0, 0.0));
  put_entity(model, "e0004", Eigen::Vector2d(1.0, 0.0));
  put_relation(model, kTaskTask, 0, Eigen::MatrixXd::Identity(2, 2));
  put_relation(model, kTaskMethod, 0, Eigen::MatrixXd::Identity(2, 2));

  // From a Task, candidates are Methods ranked by score.
  auto recs = recommend(model, store, "pos-tagging", kTaskMethod, 10);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].canonical_form == "CRF");
  CHECK(recs[0].score == 2.0);
  CHECK(recs[0].evidence == "-");
  CHECK(recs[1].canonical_form == "HMM");

  // From a Method, the same relation ranks Tasks instead.
  auto from_method = recommend(model, store, "CRF", kTaskMethod, 10);
  REQUIRE(from_method.size() == 2);
  CHECK(from_method[0].canonical_form == "POS tagging");
  CHECK(from_method[1].canonical_form == "parsing");

  CHECK(recommend(model, store, "CRF", kTaskMethod, 1).size() == 1);
  CHECK_THROWS_WITH_AS(recommend(model, store, "quantum foo", kTaskMethod, 5),
                       doctest::Contains("does not resolve"), std::runtime_error);
  CHECK_THROWS_AS(recommend(model, store, "CRF", kTaskMethod, 0), std::invalid_argument);
}

TEST_CASE("path evidence lists the connecting relation chains") {
  KgStore store = KgStore::from_clusters(
      {cluster("e0001", "POS tagging", "Task"), cluster("e0002", "parsing", "Task"),
       cluster("e0003", "CRF", "Method"), cluster("e0004", "HMM", "Method")});
  store.add_triple("e0001", kTaskTask, 0, "e0002", 1.0);
  store.add_triple("e0002", kTaskMethod, 0, "e0003", 1.0);

  EmbeddingModel model;
  model.dim = 2;
  put_entity(model, "e0001", Eigen::Vector2d(1.0, 0.0));
  put_entity(model, "e0002", Eigen::Vector2d(0.0, 1.0));
  put_entity(model, "e0003", Eigen::Vector2d(2.0, 0.0));
  put_entity(model, "e0004", Eigen::Vector2d(1.0, 0.0));
  put_relation(model, kTaskTask, 0, Eigen::MatrixXd::Identity(2, 2));
  put_relation(model, kTaskMethod, 0, Eigen::MatrixXd::Identity(2, 2));
  model.path_length_weights[{0, 1}] = 1.0;
  model.path_length_weights[{0, 2}] = 1.0;

  ScoreOptions options;
  options.use_paths = true;
  options.max_path_len = 2;
  auto recs = recommend(model, store, "POS tagging", kTaskMethod, 10, options);
  REQUIRE(recs.size() == 2);
  bool saw_chain = false;
  for (const auto& rec : recs) {
    if (rec.canonical_form == "CRF") {
      CHECK(rec.evidence.find("Task-Task>Task-Method(p=") != std::string::npos);
      saw_chain = true;
    } else {
      CHECK(rec.evidence == "-");
    }
  }
  CHECK(saw_chain);
}

TEST_CASE("recommendation files use rank-entity-score-evidence rows") {
  TempDir dir("recs");
  std::vector<Recommendation> recs = {{"e0003", "CRF", 0.25, "-"},
                                      {"e0004", "HMM", -1.5, "Task-Task(p=0.5)"}};
  auto path = dir.file("out.tsv");
  write_recommendations(path, recs);
  CHECK(testutil::read_file(path) ==
        "1\tCRF\t0.25\t-\n"
        "2\tHMM\t-1.5\tTask-Task(p=0.5)\n");
}

TEST_CASE("frequency ground truth counts shared documents") {
  KgStore store = KgStore::from_clusters(
      {cluster("e0001", "q", "Task"), cluster("e0002", "m1", "Method"),
       cluster("e0003", "m2", "Method"), cluster("e0004", "t2", "Task"),
       cluster("e0005", "m3", "Method"), cluster("e0006", "m4", "Method"),
       cluster("e0007", "silent", "Task")});
  std::vector<LinkedMention> mentions = {
      lm("d1", "e0001", "Task"),   lm("d2", "e0001", "Task"),
      lm("d3", "e0001", "Task"),   lm("d1", "e0002", "Method"),
      lm("d2", "e0002", "Method"), lm("d3", "e0002", "Method"),
      lm("d4", "e0002", "Method"), lm("d1", "e0003", "Method"),
      lm("d1", "e0004", "Task"),   lm("d5", "e0005", "Method"),
      lm("d2", "e0006", "Method"), lm("d1", "zzz", "Method")};

  auto truth = ground_truth_from_frequency(store, mentions, "e0001", kTaskMethod);
  REQUIRE(truth.size() == 3);
  CHECK(truth[0] == std::pair<std::string, int>{"e0002", 3});
  CHECK(truth[1] == std::pair<std::string, int>{"e0003", 1});  // tie broken by id
  CHECK(truth[2] == std::pair<std::string, int>{"e0006", 1});

  auto tasks = ground_truth_from_frequency(store, mentions, "e0001", kTaskTask);
  REQUIRE(tasks.size() == 1);
  CHECK(tasks[0].first == "e0004");

  CHECK(ground_truth_from_frequency(store, mentions, "e0007", kTaskTask).empty());
  CHECK_THROWS_AS(ground_truth_from_frequency(store, mentions, "nope", kTaskTask),
                  std::invalid_argument);
}

TEST_CASE("spearman correlation spans agreement to reversal") {
  std::vector<std::string> abc = {"a", "b", "c"};
  CHECK(spearman_correlation(abc, abc) == 1.0);
  CHECK(spearman_correlation(abc, {"c", "b", "a"}) == -1.0);
  CHECK(spearman_correlation(abc, {"x", "y"}) == 0.0);
  CHECK(spearman_correlation(abc, {"a"}) == 0.0);
  CHECK(spearman_correlation({}, {}) == 0.0);

  // Only the common items count; extras are ignored.
  CHECK(spearman_correlation({"x", "y", "z", "w"}, {"y", "x", "q"}) == -1.0);
  CHECK(spearman_correlation({"x", "x", "y"}, {"x", "y"}) == 1.0);
}

TEST_SUITE_END();
