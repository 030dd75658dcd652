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

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "scikg/rng.hpp"
#include "scikg/tagger.hpp"
#include "test_util.hpp"

using namespace scikg;
using testutil::TempDir;

namespace {

// --- Brute-force oracle over all m^n tag sequences ----------------------

std::vector<std::vector<int>> all_sequences(int n, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> seq(n, 0);
  while (true) {
    out.push_back(seq);
    int pos = n - 1;
    while (pos >= 0 && ++seq[pos] == m) seq[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

double oracle_score(const Eigen::MatrixXd& P, const Eigen::MatrixXd& T,
                    const std::vector<int>& y) {
  const int n = static_cast<int>(y.size());
  const int m = static_cast<int>(P.cols());
  double s = T(m, y[0]);
  for (int t = 0; t < n; ++t) {
    s += P(t, y[t]);
    if (t + 1 < n) s += T(y[t], y[t + 1]);
  }
  return s + T(y[n - 1], m + 1);
}

double logsumexp(const std::vector<double>& xs) {
  double mx = xs[0];
  for (double x : xs) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

double oracle_log_partition(const Eigen::MatrixXd& P, const Eigen::MatrixXd& T) {
  std::vector<double> scores;
  for (const auto& y : all_sequences(static_cast<int>(P.rows()), static_cast<int>(P.cols())))
    scores.push_back(oracle_score(P, T, y));
  return logsumexp(scores);
}

Eigen::MatrixXd oracle_marginals(const Eigen::MatrixXd& P, const Eigen::MatrixXd& T) {
  const int n = static_cast<int>(P.rows());
  const int m = static_cast<int>(P.cols());
  double logz = oracle_log_partition(P, T);
  Eigen::MatrixXd marg = Eigen::MatrixXd::Zero(n, m);
  for (const auto& y : all_sequences(n, m)) {
    double p = std::exp(oracle_score(P, T, y) - logz);
    for (int t = 0; t < n; ++t) marg(t, y[t]) += p;
  }
  return marg;
}

bool lattice_allows(const ConstrainedLattice& lattice, const std::vector<int>& y) {
  for (std::size_t t = 0; t < y.size(); ++t) {
    const auto& allowed = lattice.allowed[t];
    if (std::find(allowed.begin(), allowed.end(), y[t]) == allowed.end()) return false;
  }
  return true;
}

Eigen::MatrixXd random_scores(Rng& rng, int rows, int cols, double lo, double hi) {
  Eigen::MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = lo + (hi - lo) * rng.next_double();
  return M;
}

Sentence make_sentence(std::vector<std::string> tokens, const std::string& doc = "d") {
  Sentence s;
  s.pos_tags.assign(tokens.size(), "X");
  s.tokens = std::move(tokens);
  s.doc_id = doc;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("tagger");

TEST_CASE("tag alphabet layout") {
  auto tags = TagAlphabet::for_categories({"Task", "Method"});
  CHECK(tags.size() == 5);
  CHECK(tags.tag(0) == "O");
  CHECK(tags.id("B-Task") == 1);
  CHECK(tags.id("I-Task") == 2);
  CHECK(tags.id("B-Method") == 3);
  CHECK(tags.id("I-Method") == 4);
  CHECK(tags.start_id() == 5);
  CHECK(tags.end_id() == 6);
  CHECK_THROWS_AS(tags.id("B-Typo"), std::out_of_range);

  auto same = TagAlphabet::from_tags({"O", "B-Task", "I-Task", "B-Method", "I-Method"});
  CHECK(tags == same);
}

TEST_CASE("sequence_score sums emissions and transitions by hand") {
  // n=2, m=2, transitions all zero: the score is the two emission entries.
  Eigen::MatrixXd P(2, 2);
  P << 1, 0, 0, 1;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(4, 4);
  CHECK(sequence_score(P, T, {0, 1}) == doctest::Approx(2.0).epsilon(1e-15));

  T(2, 0) = 0.5;   // start -> tag 0
  T(0, 1) = 0.25;  // tag 0 -> tag 1
  T(1, 3) = 0.125; // tag 1 -> end
  CHECK(sequence_score(P, T, {0, 1}) == doctest::Approx(2.875).epsilon(1e-15));
}

TEST_CASE("log_partition matches enumeration on integer lattices") {
  Rng rng(101);
  Eigen::MatrixXd P(3, 3), T(5, 5);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) P(r, c) = static_cast<double>(rng.below(5)) - 2.0;
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) T(r, c) = static_cast<double>(rng.below(5)) - 2.0;
  CHECK(log_partition(P, T) ==
        doctest::Approx(oracle_log_partition(P, T)).epsilon(1e-10));
}

TEST_CASE("sequence probabilities sum to one") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 2 + static_cast<int>(rng.below(3));  // up to 4
    int m = 2 + static_cast<int>(rng.below(2));  // up to 3
    Eigen::MatrixXd P = random_scores(rng, n, m, -3.0, 3.0);
    Eigen::MatrixXd T = random_scores(rng, m + 2, m + 2, -3.0, 3.0);
    double total = 0.0;
    for (const auto& y : all_sequences(n, m)) total += sequence_probability(P, T, y);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("token marginals match brute-force marginalization") {
  Rng rng(55);
  Eigen::MatrixXd P = random_scores(rng, 4, 3, -3.0, 3.0);
  Eigen::MatrixXd T = random_scores(rng, 5, 5, -3.0, 3.0);
  Eigen::MatrixXd got = token_marginals(P, T);
  Eigen::MatrixXd want = oracle_marginals(P, T);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9);
  for (int t = 0; t < 4; ++t) CHECK(got.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("strong transition drags the next token's marginal") {
  // Two tokens; emissions prefer tag 0 at position 0, indifferent at 1.
  Eigen::MatrixXd P(2, 2);
  P << 5, 0, 0, 0;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(4, 4);
  T(0, 1) = 50.0;  // tag 0 -> tag 1 dominates everything
  Eigen::MatrixXd marg = token_marginals(P, T);
  CHECK(marg(0, 0) > 0.98);
  CHECK(marg(1, 1) > 0.98);
}

TEST_CASE("viterbi reaches the enumerated maximum") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd P = random_scores(rng, 4, 3, -3.0, 3.0);
    Eigen::MatrixXd T = random_scores(rng, 5, 5, -3.0, 3.0);
    auto best = viterbi_decode(P, T);
    double best_score = sequence_score(P, T, best);
    double max_score = -1e300;
    for (const auto& y : all_sequences(4, 3))
      max_score = std::max(max_score, oracle_score(P, T, y));
    CHECK(best_score == doctest::Approx(max_score).epsilon(1e-12));
  }
}

TEST_CASE("viterbi ties resolve toward the lowest tag id") {
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(5, 5);
  CHECK(viterbi_decode(P, T) == std::vector<int>{0, 0, 0});
}

TEST_CASE("single-token preference") {
  Eigen::MatrixXd P(1, 3);
  P << 0, 0, 1;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(5, 5);
  CHECK(viterbi_decode(P, T) == std::vector<int>{2});
}

TEST_CASE("constrained partition matches enumeration over allowed sequences") {
  Rng rng(77);
  Eigen::MatrixXd P = random_scores(rng, 3, 3, -3.0, 3.0);
  Eigen::MatrixXd T = random_scores(rng, 5, 5, -3.0, 3.0);

  // One free position among pinned ones.
  ConstrainedLattice lattice;
  lattice.allowed = {{1}, {0, 1, 2}, {2}};
  std::vector<double> scores;
  for (const auto& y : all_sequences(3, 3))
    if (lattice_allows(lattice, y)) scores.push_back(oracle_score(P, T, y));
  REQUIRE(scores.size() == 3);
  CHECK(constrained_log_partition(P, T, lattice) ==
        doctest::Approx(logsumexp(scores)).epsilon(1e-10));

  double mass = 0.0;
  for (const auto& y : all_sequences(3, 3))
    if (lattice_allows(lattice, y)) mass += sequence_probability(P, T, y);
  CHECK(ulm_likelihood(P, T, lattice) == doctest::Approx(mass).epsilon(1e-10));
}

TEST_CASE("unconstrained lattice likelihood is exactly one") {
  Rng rng(13);
  Eigen::MatrixXd P = random_scores(rng, 4, 3, -3.0, 3.0);
  Eigen::MatrixXd T = random_scores(rng, 5, 5, -3.0, 3.0);
  auto lattice = ConstrainedLattice::unconstrained(4, 3);
  CHECK(lattice.fully_unconstrained(3));
  // Both partition terms run the same computation, so the difference is 0.0
  // to the bit, not merely within rounding.
  CHECK(ulm_log_likelihood(P, T, lattice) == 0.0);
  CHECK(ulm_likelihood(P, T, lattice) == 1.0);
}

TEST_CASE("fully constrained lattice recovers the sequence probability") {
  Rng rng(14);
  Eigen::MatrixXd P = random_scores(rng, 4, 3, -3.0, 3.0);
  Eigen::MatrixXd T = random_scores(rng, 5, 5, -3.0, 3.0);
  std::vector<int> y = {2, 0, 1, 1};
  auto lattice = ConstrainedLattice::sequence(y);
  CHECK(lattice.fully_constrained());
  CHECK(ulm_likelihood(P, T, lattice) ==
        doctest::Approx(sequence_probability(P, T, y)).epsilon(1e-12));
}

TEST_CASE("build_lattice pins only confident positions") {
  Eigen::MatrixXd marginals(2, 2);
  marginals << 0.95, 0.05, 0.6, 0.4;
  auto lattice = build_lattice(marginals, {0, 0}, 0.8);
  CHECK(lattice.allowed[0] == std::vector<int>{0});
  CHECK(lattice.allowed[1] == std::vector<int>{0, 1});
}

TEST_CASE("single feature produces a single emission entry") {
  auto tags = TagAlphabet::for_categories({"Method"});
  CrfModel model(tags);
  model.set_weight("w=CRF", "B-Method", 2.0);
  Eigen::MatrixXd P = model.emission_scores(make_sentence({"CRF"}));
  REQUIRE(P.rows() == 1);
  REQUIRE(P.cols() == 3);
  CHECK(P(0, tags.id("B-Method")) == 2.0);
  CHECK(P(0, tags.id("O")) == 0.0);
  CHECK(P(0, tags.id("I-Method")) == 0.0);
}

TEST_CASE("graph mixing adds q through the mixing matrix") {
  // n=1, m=2: P=[1,0], q=[0.2,0.8], M=[[1,0],[0,2]] -> adjusted [1.2,1.6].
  auto tags = TagAlphabet::from_tags({"O", "B-Task"});
  CrfModel model(tags);
  model.set_weight("w=x", "O", 1.0);
  model.enable_graph_mix();
  model.graph_mix() << 1, 0, 0, 2;
  Eigen::MatrixXd q(1, 2);
  q << 0.2, 0.8;
  Eigen::MatrixXd P = model.emission_scores(make_sentence({"x"}), &q);
  CHECK(P(0, 0) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(P(0, 1) == doctest::Approx(1.6).epsilon(1e-15));
}

TEST_CASE("objective gradient matches central finite differences") {
  auto tags = TagAlphabet::for_categories({"Task"});
  std::vector<LabeledSentence> data;
  data.push_back({make_sentence({"POS", "tagging", "works"}), {"B-Task", "I-Task", "O"}});
  data.push_back({make_sentence({"works", "on", "parsing"}), {"O", "O", "B-Task"}});

  CrfTrainConfig config;
  config.max_epochs = 0;
  CrfModel model = train_crf(data, tags, config);

  std::vector<TrainInstance> instances;
  for (const auto& s : data)
    instances.push_back({s.sentence, ConstrainedLattice::sequence(tags.ids(s.tags)), {}});

  // Randomize the parameters so the gradient is not at a symmetric point.
  Eigen::VectorXd theta = pack_parameters(model);
  Rng rng(99);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal() * 0.3;
  unpack_parameters(theta, &model);

  const double l2 = 0.01;
  CrfGradients grads;
  crf_objective(model, instances, l2, &grads);
  Eigen::VectorXd g = pack_gradients(grads, false);

  const double h = 1e-5;
  Rng pick(5);
  for (int probe = 0; probe < 20; ++probe) {
    Eigen::Index i = static_cast<Eigen::Index>(pick.below(theta.size()));
    Eigen::VectorXd up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    CrfModel mu_model = model, md_model = model;
    unpack_parameters(up, &mu_model);
    unpack_parameters(down, &md_model);
    double fd = (crf_objective(mu_model, instances, l2, nullptr) -
                 crf_objective(md_model, instances, l2, nullptr)) /
                (2.0 * h);
    double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-8});
    CHECK(std::abs(fd - g[i]) / denom < 1e-4);
  }
}

TEST_CASE("ULM gradient matches finite differences on a mixed lattice") {
  auto tags = TagAlphabet::for_categories({"Task"});
  std::vector<TrainInstance> instances;
  TrainInstance inst;
  inst.sentence = make_sentence({"graph", "based", "learning"});
  ConstrainedLattice lattice;
  lattice.allowed = {{1}, {0, 1, 2}, {0, 2}};  // one pinned, two partial
  inst.lattice = lattice;
  instances.push_back(inst);

  CrfTrainConfig config;
  config.max_epochs = 0;
  CrfModel model = train_crf_constrained(instances, tags, config);

  Eigen::VectorXd theta = pack_parameters(model);
  Rng rng(123);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal() * 0.3;
  unpack_parameters(theta, &model);

  CrfGradients grads;
  crf_objective(model, instances, 0.0, &grads);
  Eigen::VectorXd g = pack_gradients(grads, false);

  const double h = 1e-5;
  Rng pick(6);
  for (int probe = 0; probe < 20; ++probe) {
    Eigen::Index i = static_cast<Eigen::Index>(pick.below(theta.size()));
    Eigen::VectorXd up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    CrfModel mu_model = model, md_model = model;
    unpack_parameters(up, &mu_model);
    unpack_parameters(down, &md_model);
    double fd = (crf_objective(mu_model, instances, 0.0, nullptr) -
                 crf_objective(md_model, instances, 0.0, nullptr)) /
                (2.0 * h);
    double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-8});
    CHECK(std::abs(fd - g[i]) / denom < 1e-4);
  }
}

TEST_CASE("objective is independent of the thread count") {
  auto tags = TagAlphabet::for_categories({"Task", "Method"});
  std::vector<TrainInstance> instances;
  Rng rng(17);
  for (int s = 0; s < 9; ++s) {
    TrainInstance inst;
    std::vector<std::string> toks;
    for (int t = 0; t < 4; ++t) toks.push_back("tok" + std::to_string(rng.below(30)));
    inst.sentence = make_sentence(toks);
    inst.lattice = ConstrainedLattice::unconstrained(4, tags.size());
    instances.push_back(inst);
  }
  CrfTrainConfig config;
  config.max_epochs = 0;
  CrfModel model = train_crf_constrained(instances, tags, config);
  Eigen::VectorXd theta = pack_parameters(model);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal() * 0.2;
  unpack_parameters(theta, &model);

  CrfGradients g1, g4;
  double o1 = crf_objective(model, instances, 0.01, &g1, 1);
  double o4 = crf_objective(model, instances, 0.01, &g4, 4);
  CHECK(o1 == o4);
  CHECK((pack_gradients(g1, false) - pack_gradients(g4, false)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("training fits a separable sentence and never increases the objective") {
  auto tags = TagAlphabet::for_categories({"Method"});
  std::vector<LabeledSentence> data;
  data.push_back({make_sentence({"use", "CRF", "models"}), {"O", "B-Method", "O"}});

  CrfTrainConfig config;
  config.max_epochs = 200;
  config.l2 = 1e-4;
  CrfTrainResult result;
  CrfModel model = train_crf(data, tags, config, &result);

  for (std::size_t i = 1; i < result.objective.size(); ++i)
    CHECK(result.objective[i] <= result.objective[i - 1]);

  // Below 0.1 nats for the whole sentence once separable features converge.
  CHECK(result.objective.back() < 0.1);

  auto tagged = tag_sentence(model, data[0].sentence);
  CHECK(tagged.tags == data[0].tags);
  REQUIRE(tagged.spans.size() == 1);
  CHECK(tagged.spans[0].category == "Method");
  CHECK(tagged.spans[0].confidence > 0.5);
}

TEST_CASE("duplicated data with doubled regularization doubles the objective") {
  auto tags = TagAlphabet::for_categories({"Task"});
  std::vector<TrainInstance> one, two;
  TrainInstance inst;
  inst.sentence = make_sentence({"semantic", "parsing"});
  inst.lattice = ConstrainedLattice::sequence({1, 2});
  one.push_back(inst);
  two.push_back(inst);
  two.push_back(inst);

  CrfTrainConfig config;
  config.max_epochs = 0;
  CrfModel model = train_crf_constrained(one, tags, config);
  Eigen::VectorXd theta = pack_parameters(model);
  Rng rng(3);
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.normal() * 0.4;
  unpack_parameters(theta, &model);

  double obj1 = crf_objective(model, one, 0.02, nullptr);
  double obj2 = crf_objective(model, two, 0.04, nullptr);
  CHECK(obj2 == doctest::Approx(2.0 * obj1).epsilon(1e-12));
}

TEST_CASE("model serialization round-trips emission scores exactly") {
  TempDir dir("crf-model");
  auto tags = TagAlphabet::for_categories({"Task", "Method"});
  std::vector<LabeledSentence> data;
  data.push_back({make_sentence({"neural", "machine", "translation"}),
                  {"B-Task", "I-Task", "I-Task"}});
  CrfTrainConfig config;
  config.max_epochs = 5;
  CrfModel model = train_crf(data, tags, config);

  auto path = dir.file("model.json");
  model.save(path);
  CrfModel loaded = CrfModel::load(path);

  CHECK(loaded.tags() == model.tags());
  CHECK(loaded.feature_count() == model.feature_count());
  Sentence probe = make_sentence({"machine", "translation", "quality"});
  Eigen::MatrixXd a = model.emission_scores(probe);
  Eigen::MatrixXd b = loaded.emission_scores(probe);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.transitions() - loaded.transitions()).cwiseAbs().maxCoeff() == 0.0);

  // A second save emits identical bytes.
  loaded.save(dir.file("again.json"));
  CHECK(testutil::read_file(path) == testutil::read_file(dir.file("again.json")));
}

TEST_CASE("span F1 by hand") {
  std::vector<Span> gold = {{"d", 0, 0, 2, "Task", 1.0}, {"d", 0, 3, 4, "Method", 1.0}};

  SUBCASE("perfect prediction") {
    Prf prf = span_f1(gold, gold, SpanMatch::Classification);
    CHECK(prf.f1 == 1.0);
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall == 1.0);
  }

  SUBCASE("one of two found, no false positives") {
    std::vector<Span> pred = {{"d", 0, 0, 2, "Task", 1.0}};
    Prf prf = span_f1(gold, pred, SpanMatch::Classification);
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall == 0.5);
    CHECK(prf.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  SUBCASE("identification ignores the category") {
    std::vector<Span> pred = {{"d", 0, 0, 2, "Method", 1.0}};
    CHECK(span_f1(gold, pred, SpanMatch::Classification).matched == 0);
    CHECK(span_f1(gold, pred, SpanMatch::Identification).matched == 1);
  }
}

TEST_SUITE_END();
