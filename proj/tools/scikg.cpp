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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scikg/config.hpp"
#include "scikg/corpus.hpp"
#include "scikg/embed.hpp"
#include "scikg/graph_ssl.hpp"
#include "scikg/kg.hpp"
#include "scikg/linker.hpp"
#include "scikg/rank.hpp"
#include "scikg/rng.hpp"
#include "scikg/tagger.hpp"

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// shared plumbing

struct Cli {
  scikg::Config config;
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void finalize() {
    if (!config_path.empty()) config = scikg::Config::load(config_path);
    for (const auto& [key, value] : overrides) config.set(key, value);
    auto problems = config.validate();
    if (!problems.empty()) {
      std::ostringstream msg;
      msg << "configuration invalid:";
      for (const auto& p : problems) msg << "\n  " << p;
      throw std::runtime_error(msg.str());
    }
    std::cerr << "resolved configuration (seed " << config.get_seed() << "):\n"
              << config.resolved();
  }
};

// Registers a flag that overrides one config key when given on the command
// line, so precedence is: built-in default < config file < flag.
void add_override(CLI::App* cmd, Cli& cli, const std::string& flag, const std::string& key,
                  const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&cli, key](const std::string& value) { cli.overrides[key] = value; }, help);
}

void add_common_overrides(CLI::App* cmd, Cli& cli) {
  cmd->add_option("--config", cli.config_path, "key = value configuration file");
  add_override(cmd, cli, "--seed", "seed", "seed for every stochastic component");
  add_override(cmd, cli, "--threads", "threads", "worker thread count");
}

// ---------------------------------------------------------------------------
// span table: doc<TAB>sentence<TAB>start<TAB>end<TAB>category<TAB>confidence<TAB>surface

struct SpanRow {
  scikg::Span span;
  std::string surface;
};

void write_spans(const std::string& path, const std::vector<SpanRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write span table: " + path);
  for (const auto& row : rows)
    out << row.span.doc_id << '\t' << row.span.sentence_index << '\t' << row.span.start << '\t'
        << row.span.end << '\t' << row.span.category << '\t'
        << scikg::format_real(row.span.confidence) << '\t' << row.surface << '\n';
}

std::vector<SpanRow> read_spans(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open span table: " + path);
  std::vector<SpanRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (scikg::trim(line).empty()) continue;
    auto fields = scikg::split(line, '\t');
    if (fields.size() != 7) {
      std::ostringstream msg;
      msg << path << ":" << lineno
          << ": expected doc<TAB>sentence<TAB>start<TAB>end<TAB>category<TAB>confidence<TAB>"
             "surface";
      throw std::runtime_error(msg.str());
    }
    SpanRow row;
    row.span.doc_id = fields[0];
    try {
      row.span.sentence_index = std::stoi(fields[1]);
      row.span.start = std::stoi(fields[2]);
      row.span.end = std::stoi(fields[3]);
      row.span.confidence = std::stod(fields[5]);
    } catch (const std::exception&) {
      std::ostringstream msg;
      msg << path << ":" << lineno << ": malformed numeric field";
      throw std::runtime_error(msg.str());
    }
    row.span.category = fields[4];
    row.surface = fields[6];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string join_tokens(const std::vector<std::string>& tokens, int begin, int end) {
  std::string out;
  for (int t = begin; t < end; ++t) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[t];
  }
  return out;
}

scikg::TagAlphabet alphabet_from_data(const std::vector<scikg::LabeledSentence>& data) {
  std::set<std::string> categories;
  for (const auto& s : data)
    for (const auto& tag : s.tags)
      if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I')) categories.insert(tag.substr(2));
  return scikg::TagAlphabet::for_categories(
      std::vector<std::string>(categories.begin(), categories.end()));
}

scikg::CrfTrainConfig crf_config_from(const scikg::Config& config) {
  scikg::CrfTrainConfig crf;
  crf.max_epochs = static_cast<int>(config.get_int("crf.max_epochs", 100));
  crf.l2 = config.get_real("crf.l2", 1e-4);
  crf.initial_step = config.get_real("crf.step", 1.0);
  crf.min_step = config.get_real("crf.min_step", 1e-12);
  crf.tolerance = config.get_real("crf.tolerance", 1e-7);
  crf.threads = static_cast<int>(config.get_int("threads", 1));
  return crf;
}

scikg::EmbedConfig embed_config_from(const scikg::Config& config) {
  scikg::EmbedConfig ec;
  ec.dim = static_cast<int>(config.get_int("embed.dim", 50));
  ec.margin = config.get_real("embed.margin", 1.0);
  ec.negatives_per_positive = static_cast<int>(config.get_int("embed.negatives", 5));
  ec.learning_rate = config.get_real("embed.learning_rate", 0.05);
  ec.lr_decay = config.get_real("embed.lr_decay", 0.0);
  ec.epochs = static_cast<int>(config.get_int("embed.epochs", 100));
  ec.l2 = config.get_real("embed.l2", 1e-5);
  ec.seed = config.get_seed();
  ec.use_paths = config.get_bool("embed.use_paths", false);
  ec.max_path_len = static_cast<int>(config.get_int("embed.max_path_len", 3));
  return ec;
}

void report_prf(std::ostream& out, const char* label, const scikg::Prf& prf) {
  out << label << " P " << scikg::format_real(prf.precision) << "  R "
      << scikg::format_real(prf.recall) << "  F1 " << scikg::format_real(prf.f1) << "  ("
      << prf.matched << "/" << prf.predicted << " predicted, " << prf.gold << " gold)\n";
}

std::vector<SpanRow> linked_span_rows(const std::vector<scikg::LabeledSentence>& data) {
  std::vector<SpanRow> rows;
  for (const auto& s : data) {
    auto decoded = scikg::tags_to_spans(s.tags, s.sentence.doc_id, s.sentence.index);
    for (const auto& span : decoded.spans)
      rows.push_back({span, join_tokens(s.sentence.tokens, span.start, span.end)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_train_tagger(const Cli& cli, const std::string& train_path, const std::string& dev_path,
                     const std::string& model_out) {
  auto train = scikg::read_conll(train_path);
  if (train.empty()) throw std::runtime_error("no training sentences in " + train_path);
  scikg::TagAlphabet tags = alphabet_from_data(train);

  scikg::CrfTrainResult result;
  scikg::CrfModel model = scikg::train_crf(train, tags, crf_config_from(cli.config), &result);
  model.save(model_out);
  std::cerr << "trained " << result.epochs << " epochs, objective "
            << scikg::format_real(result.objective.back()) << "\n";

  if (!dev_path.empty()) {
    auto dev = scikg::read_conll(dev_path);
    report_prf(std::cout, "dev", scikg::evaluate_tagger(model, dev));
  }
  std::cout << "model written to " << model_out << "\n";
  return 0;
}

int cmd_tag(const std::string& model_path, const std::string& input_path,
            const std::string& spans_out, const std::string& conll_out) {
  scikg::CrfModel model = scikg::CrfModel::load(model_path);
  auto data = scikg::read_conll(input_path);

  std::vector<SpanRow> rows;
  std::vector<scikg::LabeledSentence> tagged;
  for (const auto& s : data) {
    scikg::TaggedSentence result = scikg::tag_sentence(model, s.sentence);
    for (const auto& span : result.spans)
      rows.push_back({span, join_tokens(s.sentence.tokens, span.start, span.end)});
    if (!conll_out.empty()) tagged.push_back({s.sentence, result.tags});
  }
  write_spans(spans_out, rows);
  if (!conll_out.empty()) scikg::write_conll(conll_out, tagged);
  std::cout << rows.size() << " spans written to " << spans_out << "\n";
  return 0;
}

// Builds the token graph for the propagate / self-train commands.
struct GraphInputs {
  std::vector<scikg::LabeledSentence> labeled;
  std::vector<scikg::Sentence> pool;
  scikg::EmbeddingTable table;
};

int cmd_propagate(const Cli& cli, const GraphInputs& inputs, const std::string& model_path,
                  const std::string& nodes_out, const std::string& edges_out,
                  const std::string& q_out) {
  const auto& config = cli.config;
  scikg::TagAlphabet tags = alphabet_from_data(inputs.labeled);
  std::optional<scikg::CrfModel> model;
  if (!model_path.empty()) {
    model = scikg::CrfModel::load(model_path);
    tags = model->tags();
  }
  const int m = tags.size();

  std::vector<const scikg::Sentence*> sentences;
  std::vector<const std::vector<std::string>*> gold;
  for (const auto& s : inputs.labeled) {
    sentences.push_back(&s.sentence);
    gold.push_back(&s.tags);
  }
  for (const auto& s : inputs.pool) {
    sentences.push_back(&s);
    gold.push_back(nullptr);
  }

  std::vector<Eigen::VectorXd> features;
  std::vector<scikg::TokenRef> refs;
  for (std::size_t si = 0; si < sentences.size(); ++si)
    for (std::size_t t = 0; t < sentences[si]->tokens.size(); ++t) {
      features.push_back(
          scikg::token_features(*sentences[si], static_cast<int>(t), inputs.table));
      refs.push_back({static_cast<int>(si), static_cast<int>(t)});
    }
  if (features.empty()) throw std::runtime_error("no tokens to build a graph from");

  Eigen::MatrixXd points(static_cast<Eigen::Index>(features.size()), features[0].size());
  for (std::size_t i = 0; i < features.size(); ++i) points.row(i) = features[i].transpose();
  points = scikg::pca_project(points, static_cast<int>(config.get_int("ssl.pca_dim", 100)));

  int k = std::min<int>(static_cast<int>(config.get_int("ssl.knn_k", 10)),
                        static_cast<int>(features.size()) - 1);
  if (k < 1) throw std::runtime_error("not enough tokens for a kNN graph");
  scikg::SimilarityGraph graph = scikg::build_knn_graph(
      points, k, static_cast<int>(config.get_int("threads", 1)));
  graph.refs = refs;
  graph.attach_distributions(m);

  for (int u = 0; u < graph.num_nodes; ++u) {
    const scikg::TokenRef& ref = refs[u];
    if (gold[ref.sentence]) {
      graph.labeled[u] = 1;
      graph.r(u, tags.id((*gold[ref.sentence])[ref.position])) = 1.0;
    }
  }
  for (std::size_t si = 0, node = 0; si < sentences.size(); ++si) {
    Eigen::MatrixXd marginals;
    if (model) {
      marginals = scikg::token_marginals(model->emission_scores(*sentences[si]),
                                         model->transitions());
    } else {
      marginals = Eigen::MatrixXd::Constant(sentences[si]->tokens.size(), m, 1.0 / m);
    }
    for (Eigen::Index t = 0; t < marginals.rows(); ++t, ++node)
      graph.p_tilde.row(node) = marginals.row(t);
  }

  scikg::PropagateOptions options;
  options.mu = config.get_real("ssl.mu", 1.0);
  options.nu = config.get_real("ssl.nu", 0.1);
  options.max_iterations = static_cast<int>(config.get_int("ssl.propagation_iters", 100));
  options.tolerance = config.get_real("ssl.propagation_tol", 1e-6);
  scikg::PropagateResult result = scikg::propagate(graph, options);

  scikg::dump_graph(graph, nodes_out, edges_out);
  std::ofstream q_file(q_out, std::ios::binary);
  if (!q_file) throw std::runtime_error("cannot write distributions: " + q_out);
  q_file << "node";
  for (const auto& tag : tags.tags()) q_file << '\t' << tag;
  q_file << '\n';
  for (int u = 0; u < graph.num_nodes; ++u) {
    q_file << u;
    for (int i = 0; i < m; ++i) q_file << '\t' << scikg::format_real(graph.q(u, i));
    q_file << '\n';
  }

  std::cout << "propagation: " << result.iterations << " iterations, objective "
            << scikg::format_real(result.objective.back())
            << (result.converged ? " (converged)" : " (iteration cap)") << "\n";
  return 0;
}

int cmd_self_train(const Cli& cli, const GraphInputs& inputs, const std::string& dev_path,
                   const std::string& model_out) {
  const auto& config = cli.config;
  auto dev = scikg::read_conll(dev_path);
  scikg::TagAlphabet tags = alphabet_from_data(inputs.labeled);

  scikg::SelfTrainConfig ssl;
  std::string strategy = config.get_string("ssl.strategy", "graphinterp");
  ssl.strategy = strategy == "graphfeat" ? scikg::SslStrategy::GraphFeat
                                         : scikg::SslStrategy::GraphInterp;
  ssl.training = config.get_string("ssl.training", "ulm") == "hard" ? scikg::SslTraining::Hard
                                                                    : scikg::SslTraining::Ulm;
  ssl.mode = config.get_string("ssl.mode", "inductive") == "transductive"
                 ? scikg::SslMode::Transductive
                 : scikg::SslMode::Inductive;
  ssl.rounds = static_cast<int>(config.get_int("ssl.rounds", 2));
  ssl.alpha = config.get_real("ssl.alpha", 0.5);
  ssl.eta = config.get_real("ssl.eta", 0.9);
  ssl.knn_k = static_cast<int>(config.get_int("ssl.knn_k", 10));
  ssl.pca_dim = static_cast<int>(config.get_int("ssl.pca_dim", 100));
  ssl.propagation.mu = config.get_real("ssl.mu", 1.0);
  ssl.propagation.nu = config.get_real("ssl.nu", 0.1);
  ssl.propagation.max_iterations =
      static_cast<int>(config.get_int("ssl.propagation_iters", 100));
  ssl.propagation.tolerance = config.get_real("ssl.propagation_tol", 1e-6);
  ssl.crf = crf_config_from(config);
  ssl.threads = static_cast<int>(config.get_int("threads", 1));

  scikg::SelfTrainResult result =
      scikg::self_train(inputs.labeled, inputs.pool, dev, inputs.table, tags, ssl);

  report_prf(std::cout, "supervised", result.supervised_dev_f1);
  for (std::size_t r = 0; r < result.rounds.size(); ++r) {
    std::cout << "round " << r + 1 << ": propagation objective "
              << scikg::format_real(result.rounds[r].propagation_objective)
              << ", train objective " << scikg::format_real(result.rounds[r].train_objective)
              << "\n";
    std::ostringstream label;
    label << "round " << r + 1 << " dev";
    report_prf(std::cout, label.str().c_str(), result.rounds[r].dev_f1);
  }
  result.model.save(model_out);
  std::cout << "model written to " << model_out << "\n";
  return 0;
}

int cmd_link(const std::string& tokens_path, const std::string& spans_path,
             const std::string& clusters_out, const std::string& gold_pairs_path) {
  auto data = scikg::read_conll(tokens_path);
  auto rows = read_spans(spans_path);

  std::map<std::pair<std::string, int>, std::size_t> sentence_index;
  for (std::size_t i = 0; i < data.size(); ++i)
    sentence_index[{data[i].sentence.doc_id, data[i].sentence.index}] = i;

  std::vector<scikg::Mention> mentions;
  std::map<std::size_t, std::vector<scikg::Span>> spans_by_sentence;
  for (const auto& row : rows) {
    mentions.push_back({row.surface, row.span, row.span.doc_id});
    auto it = sentence_index.find({row.span.doc_id, row.span.sentence_index});
    if (it != sentence_index.end()) spans_by_sentence[it->second].push_back(row.span);
  }

  std::vector<scikg::AcronymPair> pairs;
  for (const auto& [si, spans] : spans_by_sentence) {
    auto found = scikg::detect_acronym(data[si].sentence, spans);
    pairs.insert(pairs.end(), found.begin(), found.end());
  }

  auto clusters = scikg::link_mentions(mentions, pairs);
  scikg::write_clusters(clusters_out, clusters);
  std::cout << clusters.size() << " entities from " << mentions.size() << " mentions ("
            << pairs.size() << " acronym pairs) written to " << clusters_out << "\n";

  if (!gold_pairs_path.empty()) {
    std::ifstream in(gold_pairs_path);
    if (!in) throw std::runtime_error("cannot open gold pair table: " + gold_pairs_path);
    std::vector<std::pair<std::string, std::string>> gold;
    std::string line;
    while (std::getline(in, line)) {
      if (scikg::trim(line).empty()) continue;
      auto fields = scikg::split(line, '\t');
      if (fields.size() != 2)
        throw std::runtime_error("gold pair rows need exactly two TAB fields");
      gold.emplace_back(fields[0], fields[1]);
    }
    report_prf(std::cout, "linking", scikg::evaluate_linking(clusters, gold));
  }
  return 0;
}

scikg::Window window_from(const scikg::Config& config) {
  return config.get_string("kg.window", "sentence") == "document" ? scikg::Window::Document
                                                                  : scikg::Window::Sentence;
}

std::vector<scikg::LinkedMention> resolve_mentions(const scikg::KgStore& store,
                                                   const std::vector<SpanRow>& rows,
                                                   std::size_t* unresolved) {
  std::vector<scikg::LinkedMention> mentions;
  for (const auto& row : rows) {
    auto id = store.resolve(row.surface);
    if (!id) {
      if (unresolved) ++*unresolved;
      continue;
    }
    const scikg::KgEntity* entity = store.find_entity(*id);
    mentions.push_back({row.span.doc_id, row.span.sentence_index, *id, entity->category,
                        row.span.confidence});
  }
  return mentions;
}

int cmd_build_kg(const Cli& cli, const std::string& clusters_path, const std::string& spans_path,
                 const std::string& store_out) {
  auto clusters = scikg::read_clusters(clusters_path);
  scikg::KgStore store = scikg::KgStore::from_clusters(clusters);

  std::size_t unresolved = 0;
  auto mentions = resolve_mentions(store, read_spans(spans_path), &unresolved);
  if (unresolved)
    std::cerr << unresolved << " span surfaces did not resolve to any entity; skipped\n";

  auto triples = scikg::extract_cooccurrence(store, mentions, window_from(cli.config),
                                             cli.config.get_real("kg.min_confidence", 0.5));
  for (const auto& t : triples)
    store.add_triple(t.head, t.relation, t.resource, t.tail, t.weight);
  store.save(store_out);
  std::cout << store.entities().size() << " entities, " << store.triples().size()
            << " triples written to " << store_out << "\n";
  return 0;
}

int cmd_ingest_aux(const std::string& store_dir, const std::string& aux_path,
                   const std::string& resource_name, const std::string& label_map_path) {
  scikg::KgStore store = scikg::KgStore::load(store_dir);
  std::optional<scikg::LabelMap> label_map;
  if (!label_map_path.empty()) label_map = scikg::LabelMap::load(label_map_path);

  std::size_t before = store.triples().size();
  auto resource =
      scikg::ingest_auxiliary(store, aux_path, resource_name, label_map ? &*label_map : nullptr);
  if (!resource) {
    std::cout << "no rows ingested; store unchanged\n";
    return 0;
  }
  store.save(store_dir);
  std::cout << store.triples().size() - before << " triples ingested as resource " << *resource
            << " (" << resource_name << ")\n";
  return 0;
}

int cmd_train_embed(const Cli& cli, const std::string& store_dir, const std::string& model_out) {
  scikg::KgStore store = scikg::KgStore::load(store_dir);
  scikg::EmbedTrainResult result = scikg::train_embeddings(store, embed_config_from(cli.config));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  scikg::save_model(result.model, model_out);
  std::cout << "trained " << result.epoch_loss.size() << " epochs, final mean loss "
            << scikg::format_real(result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back())
            << "\nmodel written to " << model_out << "\n";
  return 0;
}

int cmd_recommend(const Cli& cli, const std::string& store_dir, const std::string& model_dir,
                  const std::string& term, const std::string& relation, int top_n,
                  const std::string& out_path) {
  scikg::KgStore store = scikg::KgStore::load(store_dir);
  scikg::EmbeddingModel model = scikg::load_model(model_dir);
  scikg::ScoreOptions options;
  options.use_paths = cli.config.get_bool("embed.use_paths", false);
  options.max_path_len = static_cast<int>(cli.config.get_int("embed.max_path_len", 3));

  auto recs = scikg::recommend(model, store, term, relation, top_n, options);
  if (!out_path.empty()) {
    scikg::write_recommendations(out_path, recs);
    std::cout << recs.size() << " recommendations written to " << out_path << "\n";
  } else {
    for (std::size_t i = 0; i < recs.size(); ++i)
      std::cout << i + 1 << '\t' << recs[i].canonical_form << '\t'
                << scikg::format_real(recs[i].score) << '\t' << recs[i].evidence << '\n';
  }
  return 0;
}

int cmd_evaluate(const Cli& cli, const std::string& store_dir, const std::string& model_dir,
                 const std::string& test_path, const std::string& report_out) {
  scikg::KgStore store = scikg::KgStore::load(store_dir);
  scikg::EmbeddingModel model = scikg::load_model(model_dir);
  auto test = scikg::read_triples(test_path);

  scikg::ScoreOptions options;
  options.use_paths = cli.config.get_bool("embed.use_paths", false);
  options.max_path_len = static_cast<int>(cli.config.get_int("embed.max_path_len", 3));
  std::vector<int> ks = cli.config.get_int_list("rank.ks", {1, 3, 10});
  bool filtered = cli.config.get_string("rank.mode", "filtered") == "filtered";

  scikg::RankingReport report =
      scikg::evaluate_ranking(model, store, test, ks, options, filtered);
  std::cout << scikg::report_table(report);
  if (!report_out.empty()) {
    std::ofstream out(report_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report: " + report_out);
    out << scikg::report_json(report);
    std::cout << "report written to " << report_out << "\n";
  }
  return 0;
}

int cmd_split(const Cli& cli, const std::string& corpus_path, const std::string& clusters_path,
              const std::string& spans_path, int cutoff, const std::string& dev_venue,
              const std::vector<std::string>& holdout_terms, const std::string& out_dir) {
  auto loaded = scikg::load_papers(corpus_path);
  for (const auto& issue : loaded.issues)
    std::cerr << corpus_path << ":" << issue.line << ": " << issue.message << "\n";

  auto clusters = scikg::read_clusters(clusters_path);
  scikg::KgStore store = scikg::KgStore::from_clusters(clusters);
  auto mentions = resolve_mentions(store, read_spans(spans_path), nullptr);

  std::map<std::string, std::vector<scikg::LinkedMention>> by_doc;
  for (const auto& m : mentions) by_doc[m.doc_id].push_back(m);
  double min_confidence = cli.config.get_real("kg.min_confidence", 0.5);
  scikg::Window window = window_from(cli.config);
  std::map<std::string, std::vector<scikg::Triple>> doc_triples;
  for (const auto& [doc, doc_mentions] : by_doc)
    doc_triples[doc] = scikg::extract_cooccurrence(store, doc_mentions, window, min_confidence);

  std::vector<std::string> holdout_ids;
  for (const auto& term : holdout_terms) {
    auto id = store.resolve(term);
    if (id) {
      holdout_ids.push_back(*id);
    } else {
      std::cerr << "warning: holdout term '" << term << "' does not resolve to an entity\n";
    }
  }

  scikg::SplitResult result =
      scikg::temporal_split(loaded.papers, doc_triples, cutoff, dev_venue, holdout_ids);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

  fs::create_directories(out_dir);
  scikg::write_triples((fs::path(out_dir) / "train.tsv").string(), result.train);
  scikg::write_triples((fs::path(out_dir) / "dev.tsv").string(), result.dev);
  scikg::write_triples((fs::path(out_dir) / "test.tsv").string(), result.test);
  std::cout << result.train.size() << " train, " << result.dev.size() << " dev, "
            << result.test.size() << " test triples written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scientific knowledge graph pipeline"};
  app.require_subcommand(1);
  Cli cli;

  // train-tagger
  std::string train_path, dev_path, model_path, input_path, spans_path, conll_out;
  auto* train_tagger =
      app.add_subcommand("train-tagger", "train a supervised sequence tagger");
  train_tagger->add_option("--train", train_path, "training CoNLL file")->required();
  train_tagger->add_option("--dev", dev_path, "development CoNLL file for span F1");
  train_tagger->add_option("--model-out", model_path, "output model path")->required();
  add_common_overrides(train_tagger, cli);
  add_override(train_tagger, cli, "--l2", "crf.l2", "L2 regularization strength");
  add_override(train_tagger, cli, "--max-epochs", "crf.max_epochs", "gradient descent epochs");
  add_override(train_tagger, cli, "--step", "crf.step", "initial step size");
  add_override(train_tagger, cli, "--tolerance", "crf.tolerance", "relative stopping threshold");

  // tag
  auto* tag = app.add_subcommand("tag", "decode spans with a trained tagger");
  tag->add_option("--model", model_path, "trained model path")->required();
  tag->add_option("--input", input_path, "CoNLL file to tag")->required();
  tag->add_option("--spans-out", spans_path, "output span table")->required();
  tag->add_option("--conll-out", conll_out, "optional retagged CoNLL output");
  add_common_overrides(tag, cli);

  // propagate
  std::string labeled_path, pool_path, embeddings_path, nodes_out, edges_out, q_out;
  auto* propagate = app.add_subcommand("propagate", "build the token graph and propagate labels");
  propagate->add_option("--labeled", labeled_path, "labeled CoNLL file")->required();
  propagate->add_option("--pool", pool_path, "unlabeled CoNLL file (tags ignored)");
  propagate->add_option("--embeddings", embeddings_path, "token embedding table")->required();
  propagate->add_option("--model", model_path, "tagger supplying the marginal prior");
  propagate->add_option("--nodes-out", nodes_out, "node table output")->required();
  propagate->add_option("--edges-out", edges_out, "edge table output")->required();
  propagate->add_option("--q-out", q_out, "propagated distribution output")->required();
  add_common_overrides(propagate, cli);
  add_override(propagate, cli, "--knn-k", "ssl.knn_k", "neighbors per node");
  add_override(propagate, cli, "--pca-dim", "ssl.pca_dim", "feature projection dimension");
  add_override(propagate, cli, "--mu", "ssl.mu", "smoothness weight");
  add_override(propagate, cli, "--nu", "ssl.nu", "prior weight");

  // self-train
  auto* self_train = app.add_subcommand("self-train", "semi-supervised tagger training");
  self_train->add_option("--labeled", labeled_path, "labeled CoNLL file")->required();
  self_train->add_option("--unlabeled", pool_path, "unlabeled CoNLL file (tags ignored)");
  self_train->add_option("--dev", dev_path, "development CoNLL file")->required();
  self_train->add_option("--embeddings", embeddings_path, "token embedding table")->required();
  self_train->add_option("--model-out", model_path, "output model path")->required();
  add_common_overrides(self_train, cli);
  add_override(self_train, cli, "--strategy", "ssl.strategy", "graphinterp or graphfeat");
  add_override(self_train, cli, "--training", "ssl.training", "ulm or hard");
  add_override(self_train, cli, "--mode", "ssl.mode", "inductive or transductive");
  add_override(self_train, cli, "--rounds", "ssl.rounds", "self-training rounds");
  add_override(self_train, cli, "--alpha", "ssl.alpha", "interpolation coefficient");
  add_override(self_train, cli, "--eta", "ssl.eta", "lattice confidence threshold");
  add_override(self_train, cli, "--knn-k", "ssl.knn_k", "neighbors per node");
  add_override(self_train, cli, "--pca-dim", "ssl.pca_dim", "feature projection dimension");
  add_override(self_train, cli, "--mu", "ssl.mu", "smoothness weight");
  add_override(self_train, cli, "--nu", "ssl.nu", "prior weight");

  // link
  std::string tokens_path, clusters_path, gold_pairs_path;
  auto* link = app.add_subcommand("link", "cluster span surfaces into entities");
  link->add_option("--tokens", tokens_path, "CoNLL file giving sentence context")->required();
  link->add_option("--spans", spans_path, "span table to link")->required();
  link->add_option("--clusters-out", clusters_path, "output entity table")->required();
  link->add_option("--gold-pairs", gold_pairs_path, "surface pair table for evaluation");
  add_common_overrides(link, cli);

  // build-kg
  std::string store_dir;
  auto* build_kg = app.add_subcommand("build-kg", "extract co-occurrence triples into a store");
  build_kg->add_option("--clusters", clusters_path, "entity table from link")->required();
  build_kg->add_option("--spans", spans_path, "span table")->required();
  build_kg->add_option("--store-out", store_dir, "output store directory")->required();
  add_common_overrides(build_kg, cli);
  add_override(build_kg, cli, "--window", "kg.window", "sentence or document");
  add_override(build_kg, cli, "--min-confidence", "kg.min_confidence",
               "span confidence threshold");

  // ingest-aux
  std::string aux_path, resource_name, label_map_path;
  auto* ingest_aux = app.add_subcommand("ingest-aux", "merge auxiliary relation edges");
  ingest_aux->add_option("--store", store_dir, "store directory to update")->required();
  ingest_aux->add_option("--aux", aux_path, "auxiliary relation TSV")->required();
  ingest_aux->add_option("--resource", resource_name, "auxiliary resource name")->required();
  ingest_aux->add_option("--label-map", label_map_path, "relation label mapping table");
  add_common_overrides(ingest_aux, cli);

  // train-embed
  std::string embed_model_dir;
  auto* train_embed = app.add_subcommand("train-embed", "train bilinear embeddings");
  train_embed->add_option("--store", store_dir, "knowledge store directory")->required();
  train_embed->add_option("--model-out", embed_model_dir, "output model directory")->required();
  add_common_overrides(train_embed, cli);
  add_override(train_embed, cli, "--dim", "embed.dim", "embedding dimension");
  add_override(train_embed, cli, "--margin", "embed.margin", "ranking margin");
  add_override(train_embed, cli, "--negatives", "embed.negatives", "corruptions per positive");
  add_override(train_embed, cli, "--learning-rate", "embed.learning_rate", "SGD step size");
  add_override(train_embed, cli, "--epochs", "embed.epochs", "training epochs");
  add_override(train_embed, cli, "--use-paths", "embed.use_paths",
               "score with path features");
  add_override(train_embed, cli, "--max-path-len", "embed.max_path_len",
               "path enumeration depth");

  // recommend
  std::string term, relation = scikg::kTaskMethod, out_path;
  int top_n = 30;
  auto* recommend = app.add_subcommand("recommend", "rank related terms for a query");
  recommend->add_option("--store", store_dir, "knowledge store directory")->required();
  recommend->add_option("--model", embed_model_dir, "embedding model directory")->required();
  recommend->add_option("--term", term, "query term surface")->required();
  recommend->add_option("--relation", relation, "relation name (default Task-Method)");
  recommend->add_option("--top", top_n, "number of candidates to keep");
  recommend->add_option("--out", out_path, "output TSV (stdout when omitted)");
  add_common_overrides(recommend, cli);
  add_override(recommend, cli, "--use-paths", "embed.use_paths", "score with path features");
  add_override(recommend, cli, "--max-path-len", "embed.max_path_len",
               "path enumeration depth");

  // evaluate
  std::string test_path, report_out;
  auto* evaluate = app.add_subcommand("evaluate", "rank held-out triples and report MRR/Hits");
  evaluate->add_option("--store", store_dir, "training store for the filter")->required();
  evaluate->add_option("--model", embed_model_dir, "embedding model directory")->required();
  evaluate->add_option("--test", test_path, "held-out triple TSV")->required();
  evaluate->add_option("--report-out", report_out, "JSON report output");
  add_common_overrides(evaluate, cli);
  add_override(evaluate, cli, "--ks", "rank.ks", "Hits@k thresholds, comma separated");
  add_override(evaluate, cli, "--mode", "rank.mode", "raw or filtered");
  add_override(evaluate, cli, "--use-paths", "embed.use_paths", "score with path features");

  // split
  std::string corpus_path, out_dir, dev_venue;
  int cutoff = 0;
  std::vector<std::string> holdout_terms;
  auto* split_cmd = app.add_subcommand("split", "temporal train/dev/test triple split");
  split_cmd->add_option("--corpus", corpus_path, "paper metadata JSONL")->required();
  split_cmd->add_option("--clusters", clusters_path, "entity table")->required();
  split_cmd->add_option("--spans", spans_path, "span table")->required();
  split_cmd->add_option("--cutoff", cutoff, "cutoff year")->required();
  split_cmd->add_option("--dev-venue", dev_venue, "venue kept for the dev split");
  split_cmd->add_option("--holdout", holdout_terms, "held-out term surfaces")
      ->delimiter(',');
  split_cmd->add_option("--out-dir", out_dir, "output directory")->required();
  add_common_overrides(split_cmd, cli);
  add_override(split_cmd, cli, "--window", "kg.window", "sentence or document");
  add_override(split_cmd, cli, "--min-confidence", "kg.min_confidence",
               "span confidence threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    cli.finalize();
    if (*train_tagger) return cmd_train_tagger(cli, train_path, dev_path, model_path);
    if (*tag) return cmd_tag(model_path, input_path, spans_path, conll_out);
    if (*propagate || *self_train) {
      GraphInputs inputs;
      inputs.labeled = scikg::read_conll(labeled_path);
      if (inputs.labeled.empty())
        throw std::runtime_error("no labeled sentences in " + labeled_path);
      if (!pool_path.empty())
        for (auto& s : scikg::read_conll(pool_path)) inputs.pool.push_back(s.sentence);
      inputs.table = scikg::EmbeddingTable::load(embeddings_path);
      if (*propagate)
        return cmd_propagate(cli, inputs, model_path, nodes_out, edges_out, q_out);
      return cmd_self_train(cli, inputs, dev_path, model_path);
    }
    if (*link) return cmd_link(tokens_path, spans_path, clusters_path, gold_pairs_path);
    if (*build_kg) return cmd_build_kg(cli, clusters_path, spans_path, store_dir);
    if (*ingest_aux) return cmd_ingest_aux(store_dir, aux_path, resource_name, label_map_path);
    if (*train_embed) return cmd_train_embed(cli, store_dir, embed_model_dir);
    if (*recommend)
      return cmd_recommend(cli, store_dir, embed_model_dir, term, relation, top_n, out_path);
    if (*evaluate) return cmd_evaluate(cli, store_dir, embed_model_dir, test_path, report_out);
    if (*split_cmd)
      return cmd_split(cli, corpus_path, clusters_path, spans_path, cutoff, dev_venue,
                       holdout_terms, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
