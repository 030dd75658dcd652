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

#ifndef SCIKG_EMBED_HPP_
#define SCIKG_EMBED_HPP_

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scikg/kg.hpp"
#include "scikg/rng.hpp"

namespace scikg {

using RelationKey = std::pair<std::string, int>;  // (name, resource)

struct EmbeddingModel {
  int dim = 0;
  std::vector<std::string> entity_ids;
  std::map<std::string, std::size_t> entity_index;
  Eigen::MatrixXd entity_vectors;  // one row per entity

  std::vector<RelationKey> relation_keys;
  std::map<RelationKey, std::size_t> relation_index;
  std::vector<Eigen::MatrixXd> relation_matrices;  // dim x dim each

  std::map<std::pair<int, int>, double> path_length_weights;  // (resource, length)

  bool has_entity(const std::string& id) const { return entity_index.count(id) > 0; }
  Eigen::VectorXd entity(const std::string& id) const;
  const Eigen::MatrixXd& relation(const std::string& name, int resource) const;
  double path_weight(int resource, int length) const;
};

// Entity vectors are drawn isotropically and scaled by 1/sqrt(dim); relation
// matrices start at identity plus 0.01-scale noise; every path length weight
// starts at 1.
EmbeddingModel init_model(const KgStore& store, int dim, int max_path_len, Rng& rng);

double bilinear_score(const EmbeddingModel& model, const std::string& e_x,
                      const std::string& relation, int resource, const std::string& e_y);

double ranking_loss(double pos_score, double neg_score, double margin);

// Ordered product of the path's relation matrices; steps traversed against a
// directed relation contribute the transpose.
Eigen::MatrixXd path_embedding(const EmbeddingModel& model, const RelationPath& path);

Eigen::MatrixXd path_feature(const EmbeddingModel& model, const KgStore& store,
                             const std::string& e_x, const std::string& e_y, int max_path_len);
Eigen::MatrixXd path_feature_from_paths(const EmbeddingModel& model,
                                        const std::vector<RelationPath>& paths);

// bilinear score plus the element-wise inner product of the path feature
// matrix with the queried relation's matrix
double combined_score(const EmbeddingModel& model, const KgStore& store, const std::string& e_x,
                      const std::string& relation, int resource, const std::string& e_y,
                      int max_path_len);

// Every entity sharing the replaced argument's category, excluding
// replacements that land on a stored triple.
std::vector<Triple> enumerate_corruptions(const KgStore& store, const Triple& triple,
                                          bool corrupt_head);

// Replaces exactly one argument, drawn uniformly from the valid candidates of
// a fair-coin slot; falls back to the other slot when the first is exhausted
// and throws when both are.
Triple corrupt(const KgStore& store, const Triple& triple, Rng& rng);

struct EmbedConfig {
  int dim = 50;
  double margin = 1.0;
  int negatives_per_positive = 5;
  double learning_rate = 0.05;
  double lr_decay = 0.0;
  int epochs = 100;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  bool use_paths = false;
  int max_path_len = 3;
};

struct PairGradients {
  double loss = 0.0;
  std::map<std::string, Eigen::VectorXd> d_entities;
  std::map<RelationKey, Eigen::MatrixXd> d_relations;
  std::map<std::pair<int, int>, double> d_path_weights;
};

// Hinge loss for one positive/corrupted pair with its subgradients; path
// lists may be supplied to reuse cached enumerations.
PairGradients pair_loss_gradients(const EmbeddingModel& model, const KgStore& store,
                                  const Triple& pos, const Triple& neg, double margin,
                                  bool use_paths, int max_path_len,
                                  const std::vector<RelationPath>* pos_paths = nullptr,
                                  const std::vector<RelationPath>* neg_paths = nullptr);

struct EmbedTrainResult {
  EmbeddingModel model;
  std::vector<double> epoch_loss;
  std::vector<std::string> warnings;
};

// SGD over resource-0 triples sampled proportionally to weight, each paired
// with sampled corruptions.
EmbedTrainResult train_embeddings(const KgStore& store, const EmbedConfig& config);

struct ClusterResult {
  std::vector<int> assignment;
  Eigen::MatrixXd centroids;  // one row per cluster
  std::vector<std::vector<int>> exemplars;
  double inertia = 0.0;
};

ClusterResult cluster_relations(const std::vector<Eigen::VectorXd>& points, int k,
                                std::uint64_t seed, int restarts = 8,
                                int exemplars_per_cluster = 3);

// Model directory layout: manifest.json plus raw arrays.  Each array file is
// magic "SKGB", uint32 LE rank, uint32 LE extents, then float32 LE values in
// row-major order.
void save_model(const EmbeddingModel& model, const std::string& dir);
EmbeddingModel load_model(const std::string& dir);

}  // namespace scikg

#endif  // SCIKG_EMBED_HPP_
