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
// Graph-based semi-supervised learning for the span tagger.
//
// Every token of the selected sentences becomes a graph node described by a
// dense feature vector (context word embeddings, the closest verb's
// embedding, POS and capitalization one-hots), projected with PCA and
// connected to its nearest neighbors.  Measure propagation then smooths tag
// distributions over the graph: labeled nodes anchor the empirical
// distribution r, all nodes carry the tagger's marginal p̃ as a prior, and
// neighboring nodes are pulled together.  The propagated distributions q
// re-enter the tagger either interpolated with its marginals (GraphInterp)
// or as extra emission features through a learned mixing matrix (GraphFeat).

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "scikg/corpus.hpp"
#include "scikg/tagger.hpp"

namespace scikg {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim) : dim_(dim) {}

  // Text file, one token plus `dim` reals per line, whitespace separated.
  static EmbeddingTable load(const std::string& path);

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  void insert(const std::string& token, Eigen::VectorXd vector);
  // Zero vector for out-of-vocabulary tokens.
  Eigen::VectorXd lookup(const std::string& token) const;

 private:
  int dim_ = 0;
  std::map<std::string, Eigen::VectorXd> vectors_;
};

// Number of POS / capitalization one-hot slots in a token feature vector.
inline constexpr int kPosFeatureDim = 43;
inline constexpr int kCapFeatureDim = 4;

// Dense node features for one token: five context embeddings (positions
// t-2..t+2, zero-padded at the edges), the embedding of the closest verb
// (zero when the sentence has none), a POS one-hot and a capitalization
// one-hot.  Dimension 6d+47.
Eigen::VectorXd token_features(const Sentence& sentence, int position,
                               const EmbeddingTable& table);

// Rows = points.  Projects mean-centered data onto its top principal
// components; output dimension = min(target_dim, rank).
Eigen::MatrixXd pca_project(const Eigen::MatrixXd& points, int target_dim = 100);

struct GraphEdge {
  int u = 0;
  int v = 0;  // u < v
  double distance = 0.0;
  double similarity = 0.0;
};

struct TokenRef {
  int sentence = -1;  // index into the caller's sentence list
  int position = 0;
};

struct SimilarityGraph {
  int num_nodes = 0;
  std::vector<GraphEdge> edges;
  // Per node: (neighbor, similarity) pairs, ascending neighbor index.
  std::vector<std::vector<std::pair<int, double>>> neighbors;
  std::vector<TokenRef> refs;

  std::vector<char> labeled;  // 1 for nodes with an observed label
  Eigen::MatrixXd r;          // empirical label distributions (labeled rows)
  Eigen::MatrixXd p_tilde;    // tagger marginals, every row stochastic
  Eigen::MatrixXd q;          // propagated distributions

  void attach_distributions(int num_tags);
  void add_edge(int u, int v, double distance, double similarity);
};

// Exact symmetric kNN graph: an edge u-v exists iff v is among the k nearest
// neighbors of u or vice versa.  Neighbor ties resolve toward the lower
// index.  Stored similarity is exp(−d²/σ²) with σ the median of all kNN
// distances (σ² clamped to 1 when the median is 0).
SimilarityGraph build_knn_graph(const Eigen::MatrixXd& points, int k, int threads = 1);

struct PropagateOptions {
  double mu = 1.0;   // smoothness weight
  double nu = 0.1;   // tagger-prior weight
  int max_iterations = 100;
  double tolerance = 1e-6;  // relative objective-delta stop
};

struct PropagateResult {
  // Objective after each accepted sweep, starting value included.
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
};

// Objective: Σ_labeled KL(r‖q) + μ Σ_edges s·(KL(q_u‖q_v) + KL(q_v‖q_u))
//            + ν Σ_nodes KL(q‖p̃).
double propagation_objective(const SimilarityGraph& graph, double mu, double nu);

// Minimizes the objective over q with multiplicative (mirror-descent) sweeps
// computed from the previous iteration's snapshot, renormalizing each row;
// the step size backtracks so the objective never increases.  Nodes whose
// objective decouples into a single KL term (no incident edges, or μ = 0)
// are set to their exact minimizer instead.  Throws when ν = 0 leaves an
// unlabeled node without any active term.
PropagateResult propagate(SimilarityGraph& graph, const PropagateOptions& options);

// Eq-style interpolation of tagger marginals with propagated distributions.
Eigen::VectorXd graph_interp(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                             double alpha);
Eigen::MatrixXd graph_interp(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                             double alpha);

// Adjusted emission scores: row t = P_t + Q_t·M.
Eigen::MatrixXd graph_feat(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& q,
                           const Eigen::MatrixXd& mix);

// Writes nodes.tsv (node id, sentence, position, partition) and edges.tsv
// ("u v distance similarity") under the given directory path prefix.
void dump_graph(const SimilarityGraph& graph, const std::string& nodes_path,
                const std::string& edges_path);

// --- Self-training loop -------------------------------------------------

enum class SslStrategy { GraphInterp, GraphFeat };
enum class SslTraining { Hard, Ulm };
enum class SslMode { Inductive, Transductive };

struct SelfTrainConfig {
  SslStrategy strategy = SslStrategy::GraphInterp;
  SslTraining training = SslTraining::Ulm;
  SslMode mode = SslMode::Inductive;
  int rounds = 2;
  double alpha = 0.5;  // GraphInterp mixing coefficient
  double eta = 0.9;    // lattice confidence threshold
  int knn_k = 10;
  int pca_dim = 100;
  PropagateOptions propagation;
  CrfTrainConfig crf;
  int threads = 1;
};

struct SelfTrainRound {
  double propagation_objective = 0.0;
  double train_objective = 0.0;
  Prf dev_f1;
};

struct SelfTrainResult {
  CrfModel model;
  Prf supervised_dev_f1;
  std::vector<SelfTrainRound> rounds;
  // Propagated distributions for dev sentences, transductive mode only;
  // indexed like dev, rows per token.
  std::vector<Eigen::MatrixXd> dev_q;
};

// Trains a supervised baseline, then alternates propagation over the token
// graph with retraining on estimated labels.  In transductive mode the dev
// tokens join the graph (still never the training set); GraphFeat requires
// propagated distributions at evaluation time and therefore rejects
// inductive mode.
SelfTrainResult self_train(const std::vector<LabeledSentence>& labeled,
                           const std::vector<Sentence>& unlabeled,
                           const std::vector<LabeledSentence>& dev,
                           const EmbeddingTable& table, const TagAlphabet& tags,
                           const SelfTrainConfig& config);

// Decodes dev sentences with the strategy's evaluation rule and scores
// span F1 (classification mode) against the gold spans.
Prf evaluate_tagger(const CrfModel& model, const std::vector<LabeledSentence>& dev,
                    const std::vector<Eigen::MatrixXd>* dev_q = nullptr);

}  // namespace scikg
