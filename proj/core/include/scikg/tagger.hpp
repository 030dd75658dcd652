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
// Linear-chain CRF span tagger.
//
// A sentence of n tokens is scored against a tag alphabet of m IOB tags
// through an emission lattice P (n×m, unnormalized scores) and a transition
// matrix T ((m+2)×(m+2), the two extra ids being the virtual start tag before
// position 0 and the virtual end tag after position n-1).  The score of a tag
// sequence is the sum of its transition and emission entries; sequence
// probabilities are the global softmax over all m^n sequences, computed with
// the forward algorithm in log space.
//
// Partially labeled training is supported through constrained lattices: each
// position carries a set of allowed tags, and the likelihood of the lattice
// is the total probability mass of the sequences that stay inside it.  A
// fully constrained lattice recovers ordinary supervised training; a fully
// unconstrained one carries no information (likelihood 1).

#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scikg/common.hpp"
#include "scikg/corpus.hpp"

namespace scikg {

class TagAlphabet {
 public:
  TagAlphabet() = default;

  // O first, then B-/I- pairs in the given category order.
  static TagAlphabet for_categories(const std::vector<std::string>& categories);
  // Explicit tag list, order preserved.
  static TagAlphabet from_tags(const std::vector<std::string>& tags);

  int id(const std::string& tag) const;  // throws std::out_of_range if unknown
  const std::string& tag(int id) const { return tags_.at(id); }
  int size() const { return static_cast<int>(tags_.size()); }
  int start_id() const { return size(); }
  int end_id() const { return size() + 1; }
  const std::vector<std::string>& tags() const { return tags_; }

  std::vector<int> ids(const std::vector<std::string>& tags) const;

  bool operator==(const TagAlphabet& other) const { return tags_ == other.tags_; }

 private:
  std::vector<std::string> tags_;
  std::map<std::string, int> index_;
};

// Allowed tag ids per position, each set non-empty and ascending.
struct ConstrainedLattice {
  std::vector<std::vector<int>> allowed;

  static ConstrainedLattice unconstrained(int length, int num_tags);
  static ConstrainedLattice sequence(const std::vector<int>& tag_ids);

  int length() const { return static_cast<int>(allowed.size()); }
  bool fully_constrained() const;
  bool fully_unconstrained(int num_tags) const;
};

// Position t is pinned to predicted[t] iff marginals(t, predicted[t]) > eta;
// otherwise every tag stays allowed.
ConstrainedLattice build_lattice(const Eigen::MatrixXd& marginals,
                                 const std::vector<int>& predicted, double eta);

// --- Inference over a score lattice ------------------------------------
//
// `scores` is n×m and `transitions` is (m+2)×(m+2); both must be finite.
// All functions below throw std::invalid_argument on shape mismatch.

double sequence_score(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                      const std::vector<int>& tag_ids);

double log_partition(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions);

// log Σ exp(score) over only the sequences inside the lattice.
double constrained_log_partition(const Eigen::MatrixXd& scores,
                                 const Eigen::MatrixXd& transitions,
                                 const ConstrainedLattice& lattice);

double sequence_probability(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                            const std::vector<int>& tag_ids);

// Forward-backward token posteriors; rows sum to 1.
Eigen::MatrixXd token_marginals(const Eigen::MatrixXd& scores,
                                const Eigen::MatrixXd& transitions);

// Highest-scoring sequence; ties resolved toward the lowest tag id.
std::vector<int> viterbi_decode(const Eigen::MatrixXd& scores,
                                const Eigen::MatrixXd& transitions);

// Probability mass of the constrained lattice, in (0, 1].
double ulm_likelihood(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                      const ConstrainedLattice& lattice);
// constrained_log_partition − log_partition; ≤ 0, and exactly 0 for a fully
// unconstrained lattice (both terms are the same computation).
double ulm_log_likelihood(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& transitions,
                          const ConstrainedLattice& lattice);

// --- Feature templates --------------------------------------------------

// Emission feature names per token position: token identity, lowercased
// token, POS, capitalization shape, a 2-token context window, and prefixes/
// suffixes up to length 3.
std::vector<std::vector<std::string>> sentence_features(const Sentence& sentence);

// --- Model --------------------------------------------------------------

class CrfModel {
 public:
  CrfModel() = default;
  explicit CrfModel(TagAlphabet tags);

  const TagAlphabet& tags() const { return tags_; }

  int feature_id(const std::string& name) const;  // -1 when absent
  int add_feature(const std::string& name);
  int feature_count() const { return static_cast<int>(feature_names_.size()); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  void set_weight(const std::string& feature, const std::string& tag, double value);

  Eigen::MatrixXd& weights() { return weights_; }              // F×m
  const Eigen::MatrixXd& weights() const { return weights_; }
  Eigen::MatrixXd& transitions() { return transitions_; }      // (m+2)×(m+2)
  const Eigen::MatrixXd& transitions() const { return transitions_; }

  // Optional mixing matrix turning propagated tag distributions into
  // additive emission scores: P̃_t = P_t + q_t·M.
  void enable_graph_mix();
  bool has_graph_mix() const { return has_graph_mix_; }
  Eigen::MatrixXd& graph_mix() { return graph_mix_; }          // m×m
  const Eigen::MatrixXd& graph_mix() const { return graph_mix_; }

  // n×m emission lattice.  Features absent from the model contribute 0.
  // When graph_q is given (n×m propagated distributions) and the mixing
  // matrix is enabled, its contribution is added.
  Eigen::MatrixXd emission_scores(const Sentence& sentence,
                                  const Eigen::MatrixXd* graph_q = nullptr) const;

  void save(const std::string& path) const;
  static CrfModel load(const std::string& path);

  std::string feature_template_version() const { return "linear-v1"; }

 private:
  TagAlphabet tags_;
  std::vector<std::string> feature_names_;
  std::map<std::string, int> feature_index_;
  Eigen::MatrixXd weights_;
  Eigen::MatrixXd transitions_;
  bool has_graph_mix_ = false;
  Eigen::MatrixXd graph_mix_;
};

// --- Training -----------------------------------------------------------

struct TrainInstance {
  Sentence sentence;
  ConstrainedLattice lattice;
  // Propagated tag distributions for this sentence (n×m), consumed only by
  // models with an enabled mixing matrix.
  std::optional<Eigen::MatrixXd> graph_q;
};

struct CrfTrainConfig {
  int max_epochs = 100;
  double l2 = 1e-4;
  double initial_step = 1.0;
  double min_step = 1e-12;
  double tolerance = 1e-7;  // relative objective-decrease stopping threshold
  int threads = 1;
  bool train_graph_mix = false;
};

struct CrfTrainResult {
  // Accepted objective value per epoch, including the starting point.
  std::vector<double> objective;
  int epochs = 0;
};

// Gradients with the same shapes as the model parameters.
struct CrfGradients {
  Eigen::MatrixXd weights;
  Eigen::MatrixXd transitions;
  Eigen::MatrixXd graph_mix;
};

// Regularized negative log-likelihood of the constrained lattices:
//   Σ_s [log Z_full(s) − log Z_lattice(s)] + l2/2·‖θ‖².
// The data term of the gradient is expected-minus-observed feature counts,
// where "observed" generalizes to the expectation under the lattice.
// Per-sentence terms are accumulated in a fixed block order so results do
// not depend on the thread count.
double crf_objective(const CrfModel& model, const std::vector<TrainInstance>& data,
                     double l2, CrfGradients* gradients, int threads = 1);

// Supervised training: every sentence becomes a fully constrained lattice.
CrfModel train_crf(const std::vector<LabeledSentence>& data, const TagAlphabet& tags,
                   const CrfTrainConfig& config, CrfTrainResult* result = nullptr);

// Partially supervised training over explicit lattices.  Batch gradient
// descent with step-size halving whenever a step would increase the
// objective, so the recorded trajectory is non-increasing.
CrfModel train_crf_constrained(const std::vector<TrainInstance>& data,
                               const TagAlphabet& tags, const CrfTrainConfig& config,
                               CrfTrainResult* result = nullptr);

// Flat parameter vector [weights | transitions | graph_mix], used by
// finite-difference gradient checks.
Eigen::VectorXd pack_parameters(const CrfModel& model);
void unpack_parameters(const Eigen::VectorXd& flat, CrfModel* model);
Eigen::VectorXd pack_gradients(const CrfGradients& gradients, bool with_graph_mix);

// --- Tagging ------------------------------------------------------------

struct TaggedSentence {
  std::vector<int> tag_ids;
  std::vector<std::string> tags;
  Eigen::MatrixXd marginals;  // n×m
  // Decoded spans; confidence is the minimum token marginal of the decoded
  // tag over the span.
  std::vector<Span> spans;
};

TaggedSentence tag_sentence(const CrfModel& model, const Sentence& sentence,
                            const Eigen::MatrixXd* graph_q = nullptr);

// --- Evaluation ---------------------------------------------------------

enum class SpanMatch {
  Identification,  // boundaries only
  Classification,  // boundaries and category
};

Prf span_f1(const std::vector<Span>& gold, const std::vector<Span>& predicted,
            SpanMatch mode);

}  // namespace scikg
