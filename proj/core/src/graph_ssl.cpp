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

#include "scikg/graph_ssl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace scikg {

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding table: " + path);
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream row(line);
    std::string token;
    row >> token;
    std::vector<double> values;
    double v;
    while (row >> v) values.push_back(v);
    if (table.dim_ == 0) table.dim_ = static_cast<int>(values.size());
    if (values.empty() || static_cast<int>(values.size()) != table.dim_) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": expected token plus " << table.dim_
          << " values";
      throw std::runtime_error(msg.str());
    }
    table.vectors_[token] =
        Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
  }
  return table;
}

void EmbeddingTable::insert(const std::string& token, Eigen::VectorXd vector) {
  if (dim_ == 0) dim_ = static_cast<int>(vector.size());
  if (vector.size() != dim_)
    throw std::invalid_argument("embedding dimension mismatch for " + token);
  vectors_[token] = std::move(vector);
}

Eigen::VectorXd EmbeddingTable::lookup(const std::string& token) const {
  auto it = vectors_.find(token);
  if (it != vectors_.end()) return it->second;
  return Eigen::VectorXd::Zero(dim_);
}

namespace {

// Fixed POS inventory for the one-hot block: the Penn Treebank word tags
// plus the seven common punctuation tags.
const std::vector<std::string>& pos_inventory() {
  static const std::vector<std::string> kTags = {
      "CC", "CD",  "DT",  "EX",  "FW",  "IN",   "JJ",  "JJR", "JJS", "LS",
      "MD", "NN",  "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB",
      "RBR", "RBS", "RP", "SYM", "TO",  "UH",   "VB",  "VBD", "VBG", "VBN",
      "VBP", "VBZ", "WDT", "WP", "WP$", "WRB",  ".",   ",",   ":",   "(",
      ")",  "``",  "''"};
  return kTags;
}

int capitalization_class(const std::string& token) {
  bool all_alpha = !token.empty();
  bool all_lower = true;
  bool all_upper = true;
  for (unsigned char c : token) {
    if (!std::isalpha(c)) all_alpha = false;
    if (!std::islower(c)) all_lower = false;
    if (!std::isupper(c)) all_upper = false;
  }
  if (!all_alpha) return 3;
  if (all_lower) return 0;
  if (token.size() >= 2 && all_upper) return 2;
  bool rest_lower = true;
  for (std::size_t i = 1; i < token.size(); ++i)
    if (!std::islower(static_cast<unsigned char>(token[i]))) rest_lower = false;
  if (std::isupper(static_cast<unsigned char>(token[0])) && rest_lower) return 1;
  return 3;
}

bool is_verb_pos(const std::string& pos) {
  return !pos.empty() && pos[0] == 'V';
}

}  // namespace

Eigen::VectorXd token_features(const Sentence& sentence, int position,
                               const EmbeddingTable& table) {
  const int d = table.dim();
  const int n = static_cast<int>(sentence.tokens.size());
  if (position < 0 || position >= n)
    throw std::invalid_argument("token position outside sentence");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(6 * d + kPosFeatureDim + kCapFeatureDim);

  int offset = 0;
  for (int delta = -2; delta <= 2; ++delta) {
    int p = position + delta;
    if (p >= 0 && p < n) out.segment(offset, d) = table.lookup(sentence.tokens[p]);
    offset += d;
  }

  int verb = -1;
  for (int i = 0; i < n; ++i) {
    if (i >= static_cast<int>(sentence.pos_tags.size())) break;
    if (!is_verb_pos(sentence.pos_tags[i])) continue;
    if (verb < 0 || std::abs(i - position) < std::abs(verb - position)) verb = i;
  }
  if (verb >= 0) out.segment(offset, d) = table.lookup(sentence.tokens[verb]);
  offset += d;

  const std::string pos_tag =
      position < static_cast<int>(sentence.pos_tags.size()) ? sentence.pos_tags[position]
                                                            : std::string("X");
  const auto& inventory = pos_inventory();
  for (std::size_t i = 0; i < inventory.size(); ++i) {
    if (inventory[i] == pos_tag) {
      out[offset + static_cast<int>(i)] = 1.0;
      break;
    }
  }
  offset += kPosFeatureDim;

  out[offset + capitalization_class(sentence.tokens[position])] = 1.0;
  return out;
}

Eigen::MatrixXd pca_project(const Eigen::MatrixXd& points, int target_dim) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw std::invalid_argument("PCA needs at least 2 points");
  if (target_dim < 1) throw std::invalid_argument("target dimension must be positive");

  Eigen::RowVectorXd mean = points.colwise().mean();
  Eigen::MatrixXd centered = points.rowwise() - mean;
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("PCA eigendecomposition failed");
  const Eigen::VectorXd& eigenvalues = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& eigenvectors = solver.eigenvectors();

  const double top = eigenvalues(eigenvalues.size() - 1);
  const double cutoff = std::max(top, 0.0) * 1e-12;
  int rank = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues(i) > cutoff && eigenvalues(i) > 0.0) ++rank;
  if (rank == 0) return Eigen::MatrixXd::Zero(n, 1);

  const int out_dim = std::min(target_dim, rank);
  Eigen::MatrixXd components(points.cols(), out_dim);
  for (int c = 0; c < out_dim; ++c)
    components.col(c) = eigenvectors.col(eigenvectors.cols() - 1 - c);
  return centered * components;
}

void SimilarityGraph::attach_distributions(int num_tags) {
  labeled.assign(num_nodes, 0);
  r = Eigen::MatrixXd::Zero(num_nodes, num_tags);
  p_tilde = Eigen::MatrixXd::Zero(num_nodes, num_tags);
  q = Eigen::MatrixXd::Zero(num_nodes, num_tags);
}

void SimilarityGraph::add_edge(int u, int v, double distance, double similarity) {
  if (u == v) throw std::invalid_argument("self edge");
  if (u > v) std::swap(u, v);
  edges.push_back({u, v, distance, similarity});
  if (static_cast<int>(neighbors.size()) < num_nodes) neighbors.resize(num_nodes);
  neighbors[u].emplace_back(v, similarity);
  neighbors[v].emplace_back(u, similarity);
}

SimilarityGraph build_knn_graph(const Eigen::MatrixXd& points, int k, int threads) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) throw std::invalid_argument("graph needs at least 2 points");
  if (k < 1 || k >= n)
    throw std::invalid_argument("k must be in [1, node count)");

  Eigen::VectorXd sq = points.rowwise().squaredNorm();
  std::vector<std::vector<int>> knn(n);

  constexpr int kChunk = 256;
  const int nchunks = (n + kChunk - 1) / kChunk;
  auto run_chunk = [&](int chunk) {
    const int begin = chunk * kChunk;
    const int rows = std::min(kChunk, n - begin);
    // Pairwise squared distances for this block of rows.
    Eigen::MatrixXd dots = points.middleRows(begin, rows) * points.transpose();
    std::vector<std::pair<double, int>> cand;
    for (int r = 0; r < rows; ++r) {
      const int u = begin + r;
      cand.clear();
      cand.reserve(n - 1);
      for (int v = 0; v < n; ++v) {
        if (v == u) continue;
        double d2 = std::max(0.0, sq[u] + sq[v] - 2.0 * dots(r, v));
        cand.emplace_back(d2, v);
      }
      // (distance, index) ordering makes ties resolve to the lower index.
      std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
      std::sort(cand.begin(), cand.begin() + k);
      knn[u].reserve(k);
      for (int j = 0; j < k; ++j) knn[u].push_back(cand[j].second);
    }
  };

  int workers = std::clamp(threads, 1, nchunks);
  if (workers <= 1) {
    for (int c = 0; c < nchunks; ++c) run_chunk(c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int c = next.fetch_add(1); c < nchunks; c = next.fetch_add(1)) run_chunk(c);
      });
    for (auto& t : pool) t.join();
  }

  auto sqdist = [&](int u, int v) {
    return std::max(0.0, (points.row(u) - points.row(v)).squaredNorm());
  };

  std::vector<double> knn_dists;
  knn_dists.reserve(static_cast<std::size_t>(n) * k);
  std::set<std::pair<int, int>> edge_set;
  for (int u = 0; u < n; ++u) {
    for (int v : knn[u]) {
      knn_dists.push_back(std::sqrt(sqdist(u, v)));
      edge_set.emplace(std::min(u, v), std::max(u, v));
    }
  }

  std::sort(knn_dists.begin(), knn_dists.end());
  double sigma = knn_dists[(knn_dists.size() - 1) / 2];
  double sigma2 = sigma * sigma;
  if (sigma2 <= 0.0) sigma2 = 1.0;

  SimilarityGraph graph;
  graph.num_nodes = n;
  graph.neighbors.resize(n);
  for (const auto& [u, v] : edge_set) {
    double d = std::sqrt(sqdist(u, v));
    graph.add_edge(u, v, d, std::exp(-d * d / sigma2));
  }
  for (auto& adj : graph.neighbors)
    std::sort(adj.begin(), adj.end());
  return graph;
}

namespace {

constexpr double kDistributionFloor = 1e-12;
constexpr double kTinyMass = 1e-300;

// x·log(x/y) with the 0·log 0 = 0 convention.
double xlogxy(double x, double y) {
  if (x <= 0.0) return 0.0;
  return x * std::log(x / y);
}

double kl(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += xlogxy(a[i], b[i]);
  return s;
}

}  // namespace

double propagation_objective(const SimilarityGraph& graph, double mu, double nu) {
  double obj = 0.0;
  for (int u = 0; u < graph.num_nodes; ++u)
    if (graph.labeled[u]) obj += kl(graph.r.row(u), graph.q.row(u));
  for (const auto& e : graph.edges)
    obj += mu * e.similarity *
           (kl(graph.q.row(e.u), graph.q.row(e.v)) + kl(graph.q.row(e.v), graph.q.row(e.u)));
  for (int u = 0; u < graph.num_nodes; ++u)
    obj += nu * kl(graph.q.row(u), graph.p_tilde.row(u));
  return obj;
}

PropagateResult propagate(SimilarityGraph& graph, const PropagateOptions& options) {
  const int n = graph.num_nodes;
  const int m = static_cast<int>(graph.q.cols());
  if (n < 0) throw std::invalid_argument("negative node count");
  if (m < 1 || graph.p_tilde.rows() != n || graph.r.rows() != n)
    throw std::invalid_argument("distributions not attached");
  if (options.mu < 0.0 || options.nu < 0.0)
    throw std::invalid_argument("propagation weights must be nonnegative");

  if (options.nu == 0.0) {
    for (int u = 0; u < n; ++u) {
      if (!graph.labeled[u] && graph.neighbors[u].empty()) {
        std::ostringstream msg;
        msg << "node " << u
            << " is unlabeled, has no edges, and nu = 0: its distribution is "
               "unconstrained by the objective";
        throw std::invalid_argument(msg.str());
      }
    }
  }

  // Numeric floor on priors so KL terms stay finite.  Untouched rows pass
  // through bit-identical.
  for (int u = 0; u < n; ++u) {
    bool raised = false;
    for (int i = 0; i < m; ++i) {
      if (graph.p_tilde(u, i) < kDistributionFloor) {
        graph.p_tilde(u, i) = kDistributionFloor;
        raised = true;
      }
    }
    if (raised) graph.p_tilde.row(u) /= graph.p_tilde.row(u).sum();
  }

  // Nodes whose objective reduces to a single KL term get their exact
  // minimizer and are excluded from the sweeps.
  std::vector<char> fixed(n, 0);
  std::vector<int> active;
  for (int u = 0; u < n; ++u) {
    const bool coupled = options.mu > 0.0 && !graph.neighbors[u].empty();
    if (!coupled && graph.labeled[u] && options.nu == 0.0) {
      graph.q.row(u) = graph.r.row(u);
      fixed[u] = 1;
    } else if (!coupled && !graph.labeled[u]) {
      graph.q.row(u) = graph.p_tilde.row(u);
      fixed[u] = 1;
    } else {
      active.push_back(u);
      if (graph.labeled[u]) {
        // Small prior admixture keeps the support full so smoothness terms
        // against full-support neighbors stay finite.
        graph.q.row(u) = (1.0 - 1e-6) * graph.r.row(u) + 1e-6 * graph.p_tilde.row(u);
      } else {
        graph.q.row(u) = graph.p_tilde.row(u);
      }
    }
  }

  PropagateResult result;
  double obj = propagation_objective(graph, options.mu, options.nu);
  result.objective.push_back(obj);
  if (active.empty()) {
    result.converged = true;
    return result;
  }

  // Per-row step scale.  Each KL term contributes curvature proportional to
  // its coefficient, so rows dominated by a large nu or a heavy neighborhood
  // take correspondingly smaller raw steps.  Without this a single shared
  // step size stalls as soon as the coefficients span several orders of
  // magnitude.
  std::vector<double> row_weight(n, 1.0);
  for (int u : active) {
    double c = options.nu;
    if (graph.labeled[u]) c += 1.0;
    for (const auto& [v, s] : graph.neighbors[u]) c += 2.0 * options.mu * s;
    row_weight[u] = std::max(c, 1e-12);
  }

  Eigen::MatrixXd grad(n, m);
  Eigen::MatrixXd trial = graph.q;
  double eta = 1.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // Gradient of the objective in the active rows, from the snapshot.  Taken
    // with respect to the softmax logits rather than the simplex coordinates:
    // the extra q factor cancels the 1/q poles of the KL terms, so rows near
    // a vertex keep bounded gradients and the line search stays workable.
    for (int u : active) {
      for (int i = 0; i < m; ++i) {
        double g = 0.0;
        double qui = graph.q(u, i);
        if (graph.labeled[u]) g -= graph.r(u, i) / qui;
        for (const auto& [v, s] : graph.neighbors[u]) {
          double qvi = graph.q(v, i);
          g += options.mu * s * ((std::log(qui / qvi) + 1.0) - qvi / qui);
        }
        if (options.nu > 0.0)
          g += options.nu * (std::log(qui / graph.p_tilde(u, i)) + 1.0);
        grad(u, i) = g;
      }
      double dot = 0.0;
      for (int i = 0; i < m; ++i) dot += graph.q(u, i) * grad(u, i);
      for (int i = 0; i < m; ++i) grad(u, i) = graph.q(u, i) * (grad(u, i) - dot);
    }

    // Multiplicative update with backtracking on the full objective.
    double next_obj = obj;
    bool moved = false;
    while (eta > 1e-14) {
      for (int u : active) {
        const double step = eta / row_weight[u];
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
          trial(u, i) = std::log(graph.q(u, i)) - step * grad(u, i);
          mx = std::max(mx, trial(u, i));
        }
        double sum = 0.0;
        for (int i = 0; i < m; ++i) {
          trial(u, i) = std::max(std::exp(trial(u, i) - mx), kTinyMass);
          sum += trial(u, i);
        }
        for (int i = 0; i < m; ++i) trial(u, i) /= sum;
      }
      std::swap(graph.q, trial);
      double cand = propagation_objective(graph, options.mu, options.nu);
      if (cand <= obj * (1.0 + 1e-15) + 1e-15) {
        next_obj = cand;
        moved = true;
        break;
      }
      std::swap(graph.q, trial);  // revert
      eta *= 0.5;
    }
    if (!moved) break;

    result.iterations = iter + 1;
    result.objective.push_back(next_obj);
    double delta = obj - next_obj;
    obj = next_obj;
    if (delta <= options.tolerance * (1.0 + std::abs(obj))) {
      result.converged = true;
      break;
    }
    eta = std::min(eta * 1.5, 1.0);
  }
  return result;
}

Eigen::VectorXd graph_interp(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                             double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha outside [0, 1]");
  if (p.size() != q.size()) throw std::invalid_argument("distribution size mismatch");
  return alpha * p + (1.0 - alpha) * q;
}

Eigen::MatrixXd graph_interp(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                             double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha outside [0, 1]");
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw std::invalid_argument("distribution shape mismatch");
  return alpha * p + (1.0 - alpha) * q;
}

Eigen::MatrixXd graph_feat(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& q,
                           const Eigen::MatrixXd& mix) {
  if (q.rows() != scores.rows() || q.cols() != scores.cols() ||
      mix.rows() != scores.cols() || mix.cols() != scores.cols())
    throw std::invalid_argument("graph_feat shape mismatch");
  return scores + q * mix;
}

void dump_graph(const SimilarityGraph& graph, const std::string& nodes_path,
                const std::string& edges_path) {
  std::ofstream nodes(nodes_path, std::ios::binary);
  if (!nodes) throw std::runtime_error("cannot write " + nodes_path);
  nodes << "node\tsentence\tposition\tpartition\n";
  for (int u = 0; u < graph.num_nodes; ++u) {
    const TokenRef& ref =
        u < static_cast<int>(graph.refs.size()) ? graph.refs[u] : TokenRef{};
    nodes << u << '\t' << ref.sentence << '\t' << ref.position << '\t'
          << (graph.labeled.empty() || !graph.labeled[u] ? "unlabeled" : "labeled")
          << '\n';
  }
  std::ofstream edges(edges_path, std::ios::binary);
  if (!edges) throw std::runtime_error("cannot write " + edges_path);
  for (const auto& e : graph.edges)
    edges << e.u << ' ' << e.v << ' ' << format_real(e.distance) << ' '
          << format_real(e.similarity) << '\n';
}

namespace {

std::vector<int> argmax_rows(const Eigen::MatrixXd& rows) {
  std::vector<int> out(rows.rows());
  for (Eigen::Index t = 0; t < rows.rows(); ++t) {
    int best = 0;
    for (Eigen::Index i = 1; i < rows.cols(); ++i)
      if (rows(t, i) > rows(t, best)) best = static_cast<int>(i);
    out[t] = best;
  }
  return out;
}

}  // namespace

Prf evaluate_tagger(const CrfModel& model, const std::vector<LabeledSentence>& dev,
                    const std::vector<Eigen::MatrixXd>* dev_q) {
  std::vector<Span> gold;
  std::vector<Span> predicted;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    const auto& s = dev[i];
    auto gold_decoded =
        tags_to_spans(s.tags, s.sentence.doc_id, static_cast<int>(i));
    gold.insert(gold.end(), gold_decoded.spans.begin(), gold_decoded.spans.end());

    const Eigen::MatrixXd* q = nullptr;
    if (dev_q != nullptr && model.has_graph_mix() && i < dev_q->size()) q = &(*dev_q)[i];
    TaggedSentence tagged = tag_sentence(model, s.sentence, q);
    auto pred_decoded =
        tags_to_spans(tagged.tags, s.sentence.doc_id, static_cast<int>(i));
    predicted.insert(predicted.end(), pred_decoded.spans.begin(),
                     pred_decoded.spans.end());
  }
  return span_f1(gold, predicted, SpanMatch::Classification);
}

SelfTrainResult self_train(const std::vector<LabeledSentence>& labeled,
                           const std::vector<Sentence>& unlabeled,
                           const std::vector<LabeledSentence>& dev,
                           const EmbeddingTable& table, const TagAlphabet& tags,
                           const SelfTrainConfig& config) {
  if (config.strategy == SslStrategy::GraphFeat && config.mode == SslMode::Inductive)
    throw std::invalid_argument(
        "GraphFeat scores evaluation sentences through their propagated "
        "distributions, which only exist for graph members; it can only be "
        "run in transductive mode");
  if (labeled.empty()) throw std::invalid_argument("no labeled sentences");

  const bool transductive = config.mode == SslMode::Transductive;
  const bool use_graph_feat = config.strategy == SslStrategy::GraphFeat;
  const int m = tags.size();

  CrfTrainConfig crf_config = config.crf;
  crf_config.threads = config.threads;
  crf_config.train_graph_mix = use_graph_feat;

  SelfTrainResult result;
  {
    CrfTrainConfig supervised_config = config.crf;
    supervised_config.threads = config.threads;
    CrfModel model = train_crf(labeled, tags, supervised_config);
    result.supervised_dev_f1 = evaluate_tagger(model, dev);
    result.model = std::move(model);
  }
  if (unlabeled.empty() && !(transductive && !dev.empty())) return result;

  // Graph membership: labeled tokens always; unlabeled-pool tokens always;
  // dev tokens only in transductive mode.  The pool sentences (everything
  // after the labeled block, dev included when transductive) receive
  // estimated labels and re-enter training; dev gold tags are never used.
  std::vector<const Sentence*> sentences;
  std::vector<const std::vector<std::string>*> gold_tags;  // null for pool
  for (const auto& s : labeled) {
    sentences.push_back(&s.sentence);
    gold_tags.push_back(&s.tags);
  }
  const std::size_t pool_begin = sentences.size();
  for (const auto& s : unlabeled) {
    sentences.push_back(&s);
    gold_tags.push_back(nullptr);
  }
  std::size_t dev_begin = sentences.size();
  if (transductive) {
    for (const auto& s : dev) {
      sentences.push_back(&s.sentence);
      gold_tags.push_back(nullptr);
    }
  }

  // One node per token; features projected with PCA, then the kNN graph.
  std::vector<TokenRef> refs;
  std::size_t num_tokens = 0;
  for (const auto* s : sentences) num_tokens += s->tokens.size();
  const int feat_dim = 6 * table.dim() + kPosFeatureDim + kCapFeatureDim;
  Eigen::MatrixXd features(num_tokens, feat_dim);
  {
    std::size_t row = 0;
    for (std::size_t si = 0; si < sentences.size(); ++si) {
      for (int t = 0; t < static_cast<int>(sentences[si]->tokens.size()); ++t) {
        features.row(row) = token_features(*sentences[si], t, table);
        refs.push_back({static_cast<int>(si), t});
        ++row;
      }
    }
  }
  Eigen::MatrixXd projected = pca_project(features, config.pca_dim);
  const int k = std::min<int>(config.knn_k, static_cast<int>(num_tokens) - 1);
  SimilarityGraph graph = build_knn_graph(projected, k, config.threads);
  graph.refs = refs;
  graph.attach_distributions(m);
  for (int node = 0; node < graph.num_nodes; ++node) {
    const TokenRef& ref = graph.refs[node];
    const auto* gold = gold_tags[ref.sentence];
    if (gold != nullptr) {
      graph.labeled[node] = 1;
      graph.r(node, tags.id((*gold)[ref.position])) = 1.0;
    }
  }

  // Node rows grouped back per sentence for marginal filling and Q slicing.
  std::vector<std::vector<int>> sentence_nodes(sentences.size());
  for (int node = 0; node < graph.num_nodes; ++node)
    sentence_nodes[graph.refs[node].sentence].push_back(node);

  CrfModel model = result.model;
  // Per-sentence propagated distributions from the previous round; GraphFeat
  // models consume them when scoring.
  std::vector<Eigen::MatrixXd> prev_q(sentences.size());

  auto sentence_q = [&](const Eigen::MatrixXd& q, std::size_t si) {
    Eigen::MatrixXd out(sentence_nodes[si].size(), m);
    for (std::size_t t = 0; t < sentence_nodes[si].size(); ++t)
      out.row(t) = q.row(sentence_nodes[si][t]);
    return out;
  };

  for (int round = 0; round < config.rounds; ++round) {
    SelfTrainRound diag;

    // Tagger marginals as the propagation prior.
    std::vector<Eigen::MatrixXd> marginals(sentences.size());
    for (std::size_t si = 0; si < sentences.size(); ++si) {
      const Eigen::MatrixXd* q_in =
          use_graph_feat && model.has_graph_mix() && prev_q[si].size() > 0 ? &prev_q[si]
                                                                           : nullptr;
      Eigen::MatrixXd scores = model.emission_scores(*sentences[si], q_in);
      marginals[si] = token_marginals(scores, model.transitions());
      for (std::size_t t = 0; t < sentence_nodes[si].size(); ++t)
        graph.p_tilde.row(sentence_nodes[si][t]) = marginals[si].row(t);
    }

    PropagateResult prop = propagate(graph, config.propagation);
    diag.propagation_objective = prop.objective.back();
    for (std::size_t si = 0; si < sentences.size(); ++si)
      prev_q[si] = sentence_q(graph.q, si);

    // Estimated-label lattices for the pool sentences.
    std::vector<TrainInstance> instances;
    instances.reserve(sentences.size());
    for (std::size_t si = 0; si < pool_begin; ++si) {
      TrainInstance inst;
      inst.sentence = *sentences[si];
      inst.lattice = ConstrainedLattice::sequence(tags.ids(*gold_tags[si]));
      if (use_graph_feat) inst.graph_q = prev_q[si];
      instances.push_back(std::move(inst));
    }
    for (std::size_t si = pool_begin; si < sentences.size(); ++si) {
      Eigen::MatrixXd posterior;
      if (use_graph_feat) {
        // Posterior from the adjusted lattice P̃ = P + QM under the current
        // model (M is zero-initialized on the first round).
        Eigen::MatrixXd scores = model.emission_scores(*sentences[si]);
        if (model.has_graph_mix())
          scores = graph_feat(scores, prev_q[si], model.graph_mix());
        posterior = token_marginals(scores, model.transitions());
      } else {
        posterior = graph_interp(marginals[si], prev_q[si], config.alpha);
      }
      std::vector<int> predicted = argmax_rows(posterior);
      TrainInstance inst;
      inst.sentence = *sentences[si];
      inst.lattice = config.training == SslTraining::Hard
                         ? ConstrainedLattice::sequence(predicted)
                         : build_lattice(posterior, predicted, config.eta);
      if (use_graph_feat) inst.graph_q = prev_q[si];
      instances.push_back(std::move(inst));
    }

    CrfTrainResult train_stats;
    model = train_crf_constrained(instances, tags, crf_config, &train_stats);
    diag.train_objective = train_stats.objective.back();

    if (transductive) {
      result.dev_q.assign(dev.size(), Eigen::MatrixXd());
      for (std::size_t di = 0; di < dev.size(); ++di)
        result.dev_q[di] = prev_q[dev_begin + di];
      diag.dev_f1 = evaluate_tagger(model, dev, &result.dev_q);
    } else {
      diag.dev_f1 = evaluate_tagger(model, dev);
    }
    result.rounds.push_back(diag);
  }

  result.model = std::move(model);
  return result;
}

}  // namespace scikg
