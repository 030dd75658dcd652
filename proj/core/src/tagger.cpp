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

#include "scikg/tagger.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace scikg {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const std::vector<double>& vals) {
  double mx = kNegInf;
  for (double v : vals) mx = std::max(mx, v);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : vals) s += std::exp(v - mx);
  return mx + std::log(s);
}

void check_shapes(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions) {
  if (scores.rows() < 1) throw std::invalid_argument("empty score lattice");
  const Eigen::Index m = scores.cols();
  if (transitions.rows() != m + 2 || transitions.cols() != m + 2)
    throw std::invalid_argument("transition matrix must be (m+2)x(m+2)");
  if (!scores.allFinite() || !transitions.allFinite())
    throw std::invalid_argument("scores must be finite");
}

void check_lattice(const ConstrainedLattice& lattice, Eigen::Index n, Eigen::Index m) {
  if (lattice.length() != n) throw std::invalid_argument("lattice length mismatch");
  for (const auto& allowed : lattice.allowed) {
    if (allowed.empty()) throw std::invalid_argument("empty allowed set");
    for (int id : allowed)
      if (id < 0 || id >= m) throw std::invalid_argument("tag id outside alphabet");
  }
}

}  // namespace

TagAlphabet TagAlphabet::for_categories(const std::vector<std::string>& categories) {
  std::vector<std::string> tags{"O"};
  for (const auto& c : categories) {
    tags.push_back("B-" + c);
    tags.push_back("I-" + c);
  }
  return from_tags(tags);
}

TagAlphabet TagAlphabet::from_tags(const std::vector<std::string>& tags) {
  TagAlphabet out;
  out.tags_ = tags;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!out.index_.emplace(tags[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate tag: " + tags[i]);
  }
  return out;
}

int TagAlphabet::id(const std::string& tag) const {
  auto it = index_.find(tag);
  if (it == index_.end()) throw std::out_of_range("tag not in alphabet: " + tag);
  return it->second;
}

std::vector<int> TagAlphabet::ids(const std::vector<std::string>& tags) const {
  std::vector<int> out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(id(t));
  return out;
}

ConstrainedLattice ConstrainedLattice::unconstrained(int length, int num_tags) {
  ConstrainedLattice out;
  std::vector<int> all(num_tags);
  for (int i = 0; i < num_tags; ++i) all[i] = i;
  out.allowed.assign(length, all);
  return out;
}

ConstrainedLattice ConstrainedLattice::sequence(const std::vector<int>& tag_ids) {
  ConstrainedLattice out;
  out.allowed.reserve(tag_ids.size());
  for (int id : tag_ids) out.allowed.push_back({id});
  return out;
}

bool ConstrainedLattice::fully_constrained() const {
  for (const auto& a : allowed)
    if (a.size() != 1) return false;
  return true;
}

bool ConstrainedLattice::fully_unconstrained(int num_tags) const {
  for (const auto& a : allowed)
    if (static_cast<int>(a.size()) != num_tags) return false;
  return true;
}

ConstrainedLattice build_lattice(const Eigen::MatrixXd& marginals,
                                 const std::vector<int>& predicted, double eta) {
  const Eigen::Index n = marginals.rows();
  const int m = static_cast<int>(marginals.cols());
  if (static_cast<Eigen::Index>(predicted.size()) != n)
    throw std::invalid_argument("predicted sequence length mismatch");
  ConstrainedLattice out;
  out.allowed.reserve(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    if (marginals(t, predicted[t]) > eta) {
      out.allowed.push_back({predicted[t]});
    } else {
      std::vector<int> all(m);
      for (int i = 0; i < m; ++i) all[i] = i;
      out.allowed.push_back(std::move(all));
    }
  }
  return out;
}

double sequence_score(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                      const std::vector<int>& tag_ids) {
  check_shapes(scores, transitions);
  const Eigen::Index n = scores.rows();
  const int m = static_cast<int>(scores.cols());
  if (static_cast<Eigen::Index>(tag_ids.size()) != n)
    throw std::invalid_argument("tag sequence length mismatch");
  for (int id : tag_ids)
    if (id < 0 || id >= m) throw std::invalid_argument("tag id outside alphabet");

  const int start = m;
  const int end = m + 1;
  double score = transitions(start, tag_ids[0]);
  for (Eigen::Index t = 0; t < n; ++t) {
    score += scores(t, tag_ids[t]);
    if (t + 1 < n) score += transitions(tag_ids[t], tag_ids[t + 1]);
  }
  score += transitions(tag_ids[n - 1], end);
  return score;
}

namespace {

// Forward chart over a constrained lattice.  Disallowed cells stay -inf.
struct ForwardChart {
  Eigen::MatrixXd alpha;  // n×m
  double log_z = 0.0;
};

ForwardChart forward_pass(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                          const ConstrainedLattice& lattice) {
  const Eigen::Index n = scores.rows();
  const int m = static_cast<int>(scores.cols());
  const int start = m;
  const int end = m + 1;

  ForwardChart chart;
  chart.alpha.setConstant(n, m, kNegInf);
  for (int j : lattice.allowed[0])
    chart.alpha(0, j) = transitions(start, j) + scores(0, j);

  std::vector<double> buf;
  for (Eigen::Index t = 1; t < n; ++t) {
    for (int j : lattice.allowed[t]) {
      buf.clear();
      for (int i : lattice.allowed[t - 1])
        buf.push_back(chart.alpha(t - 1, i) + transitions(i, j));
      chart.alpha(t, j) = logsumexp(buf) + scores(t, j);
    }
  }

  buf.clear();
  for (int j : lattice.allowed[n - 1])
    buf.push_back(chart.alpha(n - 1, j) + transitions(j, end));
  chart.log_z = logsumexp(buf);
  return chart;
}

Eigen::MatrixXd backward_pass(const Eigen::MatrixXd& scores,
                              const Eigen::MatrixXd& transitions,
                              const ConstrainedLattice& lattice) {
  const Eigen::Index n = scores.rows();
  const int m = static_cast<int>(scores.cols());
  const int end = m + 1;

  Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(n, m, kNegInf);
  for (int j : lattice.allowed[n - 1]) beta(n - 1, j) = transitions(j, end);

  std::vector<double> buf;
  for (Eigen::Index t = n - 2; t >= 0; --t) {
    for (int i : lattice.allowed[t]) {
      buf.clear();
      for (int j : lattice.allowed[t + 1])
        buf.push_back(transitions(i, j) + scores(t + 1, j) + beta(t + 1, j));
      beta(t, i) = logsumexp(buf);
    }
  }
  return beta;
}

}  // namespace

double constrained_log_partition(const Eigen::MatrixXd& scores,
                                 const Eigen::MatrixXd& transitions,
                                 const ConstrainedLattice& lattice) {
  check_shapes(scores, transitions);
  check_lattice(lattice, scores.rows(), scores.cols());
  return forward_pass(scores, transitions, lattice).log_z;
}

double log_partition(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions) {
  check_shapes(scores, transitions);
  // The unconstrained partition function is the constrained one over the
  // all-allowed lattice; sharing the code path keeps the two bit-identical.
  auto lattice = ConstrainedLattice::unconstrained(static_cast<int>(scores.rows()),
                                                   static_cast<int>(scores.cols()));
  return forward_pass(scores, transitions, lattice).log_z;
}

double sequence_probability(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                            const std::vector<int>& tag_ids) {
  return std::exp(sequence_score(scores, transitions, tag_ids) -
                  log_partition(scores, transitions));
}

Eigen::MatrixXd token_marginals(const Eigen::MatrixXd& scores,
                                const Eigen::MatrixXd& transitions) {
  check_shapes(scores, transitions);
  auto lattice = ConstrainedLattice::unconstrained(static_cast<int>(scores.rows()),
                                                   static_cast<int>(scores.cols()));
  ForwardChart chart = forward_pass(scores, transitions, lattice);
  Eigen::MatrixXd beta = backward_pass(scores, transitions, lattice);
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index t = 0; t < scores.rows(); ++t)
    for (Eigen::Index i = 0; i < scores.cols(); ++i)
      out(t, i) = std::exp(chart.alpha(t, i) + beta(t, i) - chart.log_z);
  return out;
}

std::vector<int> viterbi_decode(const Eigen::MatrixXd& scores,
                                const Eigen::MatrixXd& transitions) {
  check_shapes(scores, transitions);
  const Eigen::Index n = scores.rows();
  const int m = static_cast<int>(scores.cols());
  const int start = m;
  const int end = m + 1;

  Eigen::MatrixXd delta(n, m);
  Eigen::MatrixXi back(n, m);
  for (int j = 0; j < m; ++j) {
    delta(0, j) = transitions(start, j) + scores(0, j);
    back(0, j) = -1;
  }
  for (Eigen::Index t = 1; t < n; ++t) {
    for (int j = 0; j < m; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (int i = 0; i < m; ++i) {
        double cand = delta(t - 1, i) + transitions(i, j);
        if (cand > best) {  // strict: ties keep the lowest tag id
          best = cand;
          arg = i;
        }
      }
      delta(t, j) = best + scores(t, j);
      back(t, j) = arg;
    }
  }

  double best = kNegInf;
  int arg = 0;
  for (int j = 0; j < m; ++j) {
    double cand = delta(n - 1, j) + transitions(j, end);
    if (cand > best) {
      best = cand;
      arg = j;
    }
  }

  std::vector<int> out(n);
  out[n - 1] = arg;
  for (Eigen::Index t = n - 1; t > 0; --t) out[t - 1] = back(t, out[t]);
  return out;
}

double ulm_log_likelihood(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                          const ConstrainedLattice& lattice) {
  return constrained_log_partition(scores, transitions, lattice) -
         log_partition(scores, transitions);
}

double ulm_likelihood(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                      const ConstrainedLattice& lattice) {
  return std::exp(ulm_log_likelihood(scores, transitions, lattice));
}

namespace {

std::string cap_shape(const std::string& token) {
  std::string shape;
  char last = 0;
  for (unsigned char c : token) {
    char cls = std::isupper(c) ? 'A' : std::islower(c) ? 'a' : std::isdigit(c) ? '9' : '-';
    if (cls != last) shape.push_back(cls);
    last = cls;
  }
  return shape;
}

const std::string& context_token(const Sentence& s, int pos) {
  static const std::string kBos = "<s>";
  static const std::string kEos = "</s>";
  if (pos < 0) return kBos;
  if (pos >= static_cast<int>(s.tokens.size())) return kEos;
  return s.tokens[pos];
}

}  // namespace

std::vector<std::vector<std::string>> sentence_features(const Sentence& sentence) {
  const int n = static_cast<int>(sentence.tokens.size());
  std::vector<std::vector<std::string>> out(n);
  for (int t = 0; t < n; ++t) {
    const std::string& tok = sentence.tokens[t];
    auto& feats = out[t];
    feats.push_back("bias");
    feats.push_back("w=" + tok);
    feats.push_back("lw=" + to_lower(tok));
    const std::string& pos =
        t < static_cast<int>(sentence.pos_tags.size()) ? sentence.pos_tags[t] : "X";
    feats.push_back("pos=" + pos);
    feats.push_back("shape=" + cap_shape(tok));
    feats.push_back("w[-2]=" + context_token(sentence, t - 2));
    feats.push_back("w[-1]=" + context_token(sentence, t - 1));
    feats.push_back("w[+1]=" + context_token(sentence, t + 1));
    feats.push_back("w[+2]=" + context_token(sentence, t + 2));
    for (std::size_t k = 1; k <= 3 && k <= tok.size(); ++k) {
      feats.push_back("p" + std::to_string(k) + "=" + tok.substr(0, k));
      feats.push_back("s" + std::to_string(k) + "=" + tok.substr(tok.size() - k));
    }
  }
  return out;
}

CrfModel::CrfModel(TagAlphabet tags) : tags_(std::move(tags)) {
  weights_.resize(0, tags_.size());
  transitions_ = Eigen::MatrixXd::Zero(tags_.size() + 2, tags_.size() + 2);
}

int CrfModel::feature_id(const std::string& name) const {
  auto it = feature_index_.find(name);
  return it == feature_index_.end() ? -1 : it->second;
}

int CrfModel::add_feature(const std::string& name) {
  auto it = feature_index_.find(name);
  if (it != feature_index_.end()) return it->second;
  int id = static_cast<int>(feature_names_.size());
  feature_names_.push_back(name);
  feature_index_.emplace(name, id);
  weights_.conservativeResize(id + 1, Eigen::NoChange);
  weights_.row(id).setZero();
  return id;
}

void CrfModel::set_weight(const std::string& feature, const std::string& tag, double value) {
  weights_(add_feature(feature), tags_.id(tag)) = value;
}

void CrfModel::enable_graph_mix() {
  if (has_graph_mix_) return;
  has_graph_mix_ = true;
  graph_mix_ = Eigen::MatrixXd::Zero(tags_.size(), tags_.size());
}

Eigen::MatrixXd CrfModel::emission_scores(const Sentence& sentence,
                                          const Eigen::MatrixXd* graph_q) const {
  const int n = static_cast<int>(sentence.tokens.size());
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n, tags_.size());
  auto features = sentence_features(sentence);
  for (int t = 0; t < n; ++t) {
    for (const auto& name : features[t]) {
      int id = feature_id(name);
      if (id >= 0) scores.row(t) += weights_.row(id);
    }
  }
  if (graph_q != nullptr && has_graph_mix_) {
    if (graph_q->rows() != n || graph_q->cols() != tags_.size())
      throw std::invalid_argument("propagated distribution shape mismatch");
    scores += *graph_q * graph_mix_;
  }
  return scores;
}

void CrfModel::save(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "scikg-crf";
  j["version"] = 1;
  j["feature_template"] = feature_template_version();
  j["tags"] = tags_.tags();
  j["features"] = feature_names_;
  auto matrix_to_json = [](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      rows[r].resize(m.cols());
      for (Eigen::Index c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
    }
    return rows;
  };
  j["weights"] = matrix_to_json(weights_);
  j["transitions"] = matrix_to_json(transitions_);
  if (has_graph_mix_)
    j["graph_mix"] = matrix_to_json(graph_mix_);
  else
    j["graph_mix"] = nullptr;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << j.dump(2) << '\n';
}

CrfModel CrfModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw std::runtime_error("model file is not valid JSON: " + path);
  if (j.value("format", "") != "scikg-crf")
    throw std::runtime_error("not a tagger model file: " + path);
  if (j.value("version", 0) != 1)
    throw std::runtime_error("unsupported tagger model version in " + path);

  CrfModel model(TagAlphabet::from_tags(j.at("tags").get<std::vector<std::string>>()));
  auto features = j.at("features").get<std::vector<std::string>>();
  for (const auto& f : features) model.add_feature(f);

  auto matrix_from_json = [](const nlohmann::json& rows) {
    Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c].get<double>();
    return m;
  };
  Eigen::MatrixXd w = matrix_from_json(j.at("weights"));
  if (w.rows() != model.feature_count() || w.cols() != model.tags().size())
    throw std::runtime_error("weight matrix shape mismatch in " + path);
  model.weights() = w;
  Eigen::MatrixXd t = matrix_from_json(j.at("transitions"));
  if (t.rows() != model.tags().size() + 2 || t.cols() != model.tags().size() + 2)
    throw std::runtime_error("transition matrix shape mismatch in " + path);
  model.transitions() = t;
  if (!j.at("graph_mix").is_null()) {
    model.enable_graph_mix();
    Eigen::MatrixXd g = matrix_from_json(j.at("graph_mix"));
    if (g.rows() != model.tags().size() || g.cols() != model.tags().size())
      throw std::runtime_error("mixing matrix shape mismatch in " + path);
    model.graph_mix() = g;
  }
  return model;
}

namespace {

struct SentenceGrads {
  Eigen::MatrixXd weights;
  Eigen::MatrixXd transitions;
  Eigen::MatrixXd graph_mix;
};

// Expected transition counts under the lattice, added into `grad` with the
// given sign.  Start/end transitions are included.
void add_edge_expectations(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                           const ConstrainedLattice& lattice, const ForwardChart& chart,
                           const Eigen::MatrixXd& beta, double sign,
                           Eigen::MatrixXd& grad) {
  const Eigen::Index n = scores.rows();
  const int m = static_cast<int>(scores.cols());
  const int start = m;
  const int end = m + 1;
  for (int j : lattice.allowed[0])
    grad(start, j) += sign * std::exp(chart.alpha(0, j) + beta(0, j) - chart.log_z);
  for (Eigen::Index t = 0; t + 1 < n; ++t) {
    for (int i : lattice.allowed[t]) {
      for (int j : lattice.allowed[t + 1]) {
        double lp = chart.alpha(t, i) + transitions(i, j) + scores(t + 1, j) +
                    beta(t + 1, j) - chart.log_z;
        grad(i, j) += sign * std::exp(lp);
      }
    }
  }
  for (int j : lattice.allowed[n - 1])
    grad(j, end) += sign * std::exp(chart.alpha(n - 1, j) + beta(n - 1, j) - chart.log_z);
}

// Token marginals under the lattice (zero outside allowed sets).
Eigen::MatrixXd lattice_marginals(const ConstrainedLattice& lattice,
                                  const ForwardChart& chart, const Eigen::MatrixXd& beta) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(chart.alpha.rows(), chart.alpha.cols());
  for (Eigen::Index t = 0; t < out.rows(); ++t)
    for (int i : lattice.allowed[t])
      out(t, i) = std::exp(chart.alpha(t, i) + beta(t, i) - chart.log_z);
  return out;
}

// Adds one sentence's NLL and gradient contribution.
double accumulate_sentence(const CrfModel& model, const TrainInstance& inst,
                           SentenceGrads* grads) {
  Eigen::MatrixXd scores = model.emission_scores(
      inst.sentence, inst.graph_q ? &*inst.graph_q : nullptr);
  const Eigen::Index n = scores.rows();
  const int m = static_cast<int>(scores.cols());
  check_lattice(inst.lattice, n, m);
  auto full = ConstrainedLattice::unconstrained(static_cast<int>(n), m);

  ForwardChart full_chart = forward_pass(scores, model.transitions(), full);
  ForwardChart cons_chart = forward_pass(scores, model.transitions(), inst.lattice);
  double value = full_chart.log_z - cons_chart.log_z;
  if (grads == nullptr) return value;

  Eigen::MatrixXd full_beta = backward_pass(scores, model.transitions(), full);
  Eigen::MatrixXd cons_beta = backward_pass(scores, model.transitions(), inst.lattice);

  // d(objective)/dP = full marginals − lattice marginals
  Eigen::MatrixXd dP = lattice_marginals(full, full_chart, full_beta) -
                       lattice_marginals(inst.lattice, cons_chart, cons_beta);

  auto features = sentence_features(inst.sentence);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (const auto& name : features[t]) {
      int id = model.feature_id(name);
      if (id >= 0) grads->weights.row(id) += dP.row(t);
    }
  }
  if (model.has_graph_mix() && inst.graph_q) grads->graph_mix += inst.graph_q->transpose() * dP;

  add_edge_expectations(scores, model.transitions(), full, full_chart, full_beta, +1.0,
                        grads->transitions);
  add_edge_expectations(scores, model.transitions(), inst.lattice, cons_chart, cons_beta,
                        -1.0, grads->transitions);
  return value;
}

SentenceGrads zero_grads(const CrfModel& model) {
  SentenceGrads g;
  g.weights = Eigen::MatrixXd::Zero(model.feature_count(), model.tags().size());
  g.transitions = Eigen::MatrixXd::Zero(model.tags().size() + 2, model.tags().size() + 2);
  g.graph_mix = Eigen::MatrixXd::Zero(model.tags().size(), model.tags().size());
  return g;
}

constexpr int kMaxBlocks = 32;

}  // namespace

double crf_objective(const CrfModel& model, const std::vector<TrainInstance>& data,
                     double l2, CrfGradients* gradients, int threads) {
  if (data.empty()) throw std::invalid_argument("empty training data");

  const int nblocks = static_cast<int>(std::min<std::size_t>(kMaxBlocks, data.size()));
  std::vector<double> block_values(nblocks, 0.0);
  std::vector<SentenceGrads> block_grads;
  if (gradients != nullptr) {
    block_grads.reserve(nblocks);
    for (int b = 0; b < nblocks; ++b) block_grads.push_back(zero_grads(model));
  }

  auto run_block = [&](int b) {
    std::size_t begin = data.size() * b / nblocks;
    std::size_t end = data.size() * (b + 1) / nblocks;
    for (std::size_t s = begin; s < end; ++s)
      block_values[b] += accumulate_sentence(model, data[s],
                                             gradients ? &block_grads[b] : nullptr);
  };

  int workers = std::clamp(threads, 1, nblocks);
  if (workers <= 1) {
    for (int b = 0; b < nblocks; ++b) run_block(b);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) run_block(b);
      });
    }
    for (auto& t : pool) t.join();
  }

  // Fixed-order reduction keeps the result independent of the thread count.
  double value = 0.0;
  for (int b = 0; b < nblocks; ++b) value += block_values[b];
  if (gradients != nullptr) {
    CrfGradients total;
    total.weights = Eigen::MatrixXd::Zero(model.feature_count(), model.tags().size());
    total.transitions =
        Eigen::MatrixXd::Zero(model.tags().size() + 2, model.tags().size() + 2);
    total.graph_mix = Eigen::MatrixXd::Zero(model.tags().size(), model.tags().size());
    for (int b = 0; b < nblocks; ++b) {
      total.weights += block_grads[b].weights;
      total.transitions += block_grads[b].transitions;
      total.graph_mix += block_grads[b].graph_mix;
    }
    total.weights += l2 * model.weights();
    total.transitions += l2 * model.transitions();
    if (model.has_graph_mix()) total.graph_mix += l2 * model.graph_mix();
    *gradients = std::move(total);
  }
  value += 0.5 * l2 * model.weights().squaredNorm();
  value += 0.5 * l2 * model.transitions().squaredNorm();
  if (model.has_graph_mix()) value += 0.5 * l2 * model.graph_mix().squaredNorm();
  return value;
}

namespace {

CrfModel apply_step(const CrfModel& model, const CrfGradients& g, double step,
                    bool with_graph_mix) {
  CrfModel out = model;
  out.weights() -= step * g.weights;
  out.transitions() -= step * g.transitions;
  if (with_graph_mix && out.has_graph_mix()) out.graph_mix() -= step * g.graph_mix;
  return out;
}

}  // namespace

CrfModel train_crf_constrained(const std::vector<TrainInstance>& data,
                               const TagAlphabet& tags, const CrfTrainConfig& config,
                               CrfTrainResult* result) {
  if (data.empty()) throw std::invalid_argument("empty training data");

  CrfModel model(tags);
  if (config.train_graph_mix) model.enable_graph_mix();
  for (const auto& inst : data)
    for (const auto& feats : sentence_features(inst.sentence))
      for (const auto& name : feats) model.add_feature(name);

  CrfTrainResult local;
  CrfTrainResult& stats = result != nullptr ? *result : local;
  stats.objective.clear();
  stats.epochs = 0;

  CrfGradients grads;
  double obj = crf_objective(model, data, config.l2, &grads, config.threads);
  stats.objective.push_back(obj);

  double step = config.initial_step;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    CrfModel cand;
    CrfGradients cand_grads;
    double cand_obj = 0.0;
    bool accepted = false;
    while (true) {
      cand = apply_step(model, grads, step, config.train_graph_mix);
      cand_obj = crf_objective(cand, data, config.l2, &cand_grads, config.threads);
      if (cand_obj <= obj) {
        accepted = true;
        break;
      }
      if (step <= config.min_step) break;
      step *= 0.5;
    }
    if (!accepted) break;
    double prev = obj;
    model = std::move(cand);
    grads = std::move(cand_grads);
    obj = cand_obj;
    stats.objective.push_back(obj);
    stats.epochs = epoch + 1;
    if (prev - obj <= config.tolerance * (1.0 + std::abs(prev))) break;
    step *= 1.2;
  }
  return model;
}

CrfModel train_crf(const std::vector<LabeledSentence>& data, const TagAlphabet& tags,
                   const CrfTrainConfig& config, CrfTrainResult* result) {
  std::vector<TrainInstance> instances;
  instances.reserve(data.size());
  for (const auto& s : data) {
    TrainInstance inst;
    inst.sentence = s.sentence;
    inst.lattice = ConstrainedLattice::sequence(tags.ids(s.tags));
    instances.push_back(std::move(inst));
  }
  return train_crf_constrained(instances, tags, config, result);
}

Eigen::VectorXd pack_parameters(const CrfModel& model) {
  const Eigen::Index fw = model.weights().size();
  const Eigen::Index ft = model.transitions().size();
  const Eigen::Index fm = model.has_graph_mix() ? model.graph_mix().size() : 0;
  Eigen::VectorXd out(fw + ft + fm);
  out.head(fw) = Eigen::Map<const Eigen::VectorXd>(model.weights().data(), fw);
  out.segment(fw, ft) = Eigen::Map<const Eigen::VectorXd>(model.transitions().data(), ft);
  if (fm > 0)
    out.tail(fm) = Eigen::Map<const Eigen::VectorXd>(model.graph_mix().data(), fm);
  return out;
}

void unpack_parameters(const Eigen::VectorXd& flat, CrfModel* model) {
  const Eigen::Index fw = model->weights().size();
  const Eigen::Index ft = model->transitions().size();
  const Eigen::Index fm = model->has_graph_mix() ? model->graph_mix().size() : 0;
  if (flat.size() != fw + ft + fm)
    throw std::invalid_argument("parameter vector size mismatch");
  Eigen::Map<Eigen::VectorXd>(model->weights().data(), fw) = flat.head(fw);
  Eigen::Map<Eigen::VectorXd>(model->transitions().data(), ft) = flat.segment(fw, ft);
  if (fm > 0) Eigen::Map<Eigen::VectorXd>(model->graph_mix().data(), fm) = flat.tail(fm);
}

Eigen::VectorXd pack_gradients(const CrfGradients& gradients, bool with_graph_mix) {
  const Eigen::Index fw = gradients.weights.size();
  const Eigen::Index ft = gradients.transitions.size();
  const Eigen::Index fm = with_graph_mix ? gradients.graph_mix.size() : 0;
  Eigen::VectorXd out(fw + ft + fm);
  out.head(fw) = Eigen::Map<const Eigen::VectorXd>(gradients.weights.data(), fw);
  out.segment(fw, ft) =
      Eigen::Map<const Eigen::VectorXd>(gradients.transitions.data(), ft);
  if (fm > 0)
    out.tail(fm) = Eigen::Map<const Eigen::VectorXd>(gradients.graph_mix.data(), fm);
  return out;
}

TaggedSentence tag_sentence(const CrfModel& model, const Sentence& sentence,
                            const Eigen::MatrixXd* graph_q) {
  TaggedSentence out;
  if (sentence.tokens.empty()) return out;
  Eigen::MatrixXd scores = model.emission_scores(sentence, graph_q);
  out.marginals = token_marginals(scores, model.transitions());
  out.tag_ids = viterbi_decode(scores, model.transitions());
  out.tags.reserve(out.tag_ids.size());
  for (int id : out.tag_ids) out.tags.push_back(model.tags().tag(id));
  auto decoded = tags_to_spans(out.tags, sentence.doc_id, sentence.index);
  out.spans = std::move(decoded.spans);
  for (auto& span : out.spans) {
    double conf = 1.0;
    for (int t = span.start; t < span.end; ++t)
      conf = std::min(conf, out.marginals(t, out.tag_ids[t]));
    span.confidence = conf;
  }
  return out;
}

Prf span_f1(const std::vector<Span>& gold, const std::vector<Span>& predicted,
            SpanMatch mode) {
  auto key = [mode](const Span& s) {
    std::string k = s.doc_id + '\x1f' + std::to_string(s.sentence_index) + '\x1f' +
                    std::to_string(s.start) + '\x1f' + std::to_string(s.end);
    if (mode == SpanMatch::Classification) k += '\x1f' + s.category;
    return k;
  };
  std::map<std::string, std::size_t> gold_counts;
  for (const auto& s : gold) ++gold_counts[key(s)];
  std::size_t matched = 0;
  for (const auto& s : predicted) {
    auto it = gold_counts.find(key(s));
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++matched;
    }
  }
  return make_prf(matched, predicted.size(), gold.size());
}

}  // namespace scikg
