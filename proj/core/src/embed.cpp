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

#include "scikg/embed.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace scikg {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::VectorXd EmbeddingModel::entity(const std::string& id) const {
  auto it = entity_index.find(id);
  if (it == entity_index.end()) throw std::invalid_argument("no embedding for entity: " + id);
  return entity_vectors.row(it->second).transpose();
}

const Eigen::MatrixXd& EmbeddingModel::relation(const std::string& name, int resource) const {
  auto it = relation_index.find({name, resource});
  if (it == relation_index.end()) {
    std::ostringstream msg;
    msg << "no matrix for relation " << name << "@" << resource;
    throw std::invalid_argument(msg.str());
  }
  return relation_matrices[it->second];
}

double EmbeddingModel::path_weight(int resource, int length) const {
  auto it = path_length_weights.find({resource, length});
  if (it == path_length_weights.end()) {
    std::ostringstream msg;
    msg << "no path length weight for resource " << resource << " length " << length;
    throw std::invalid_argument(msg.str());
  }
  return it->second;
}

EmbeddingModel init_model(const KgStore& store, int dim, int max_path_len, Rng& rng) {
  if (dim < 2) throw std::invalid_argument("embedding dim must be at least 2");
  EmbeddingModel model;
  model.dim = dim;

  const auto& entities = store.entities();
  model.entity_vectors.resize(static_cast<Eigen::Index>(entities.size()), dim);
  double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < entities.size(); ++i) {
    model.entity_ids.push_back(entities[i].id);
    model.entity_index[entities[i].id] = i;
    for (int j = 0; j < dim; ++j) model.entity_vectors(i, j) = rng.normal() * scale;
  }

  for (const auto& rel : store.relations()) {
    RelationKey key{rel.name, rel.resource};
    model.relation_index[key] = model.relation_keys.size();
    model.relation_keys.push_back(key);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) += 0.01 * rng.normal();
    model.relation_matrices.push_back(std::move(m));
  }

  for (int resource : store.resource_ids())
    for (int len = 1; len <= max_path_len; ++len)
      model.path_length_weights[{resource, len}] = 1.0;
  return model;
}

double bilinear_score(const EmbeddingModel& model, const std::string& e_x,
                      const std::string& relation, int resource, const std::string& e_y) {
  Eigen::VectorXd vx = model.entity(e_x);
  Eigen::VectorXd vy = model.entity(e_y);
  return vx.dot(model.relation(relation, resource) * vy);
}

double ranking_loss(double pos_score, double neg_score, double margin) {
  return std::max(neg_score - pos_score + margin, 0.0);
}

Eigen::MatrixXd path_embedding(const EmbeddingModel& model, const RelationPath& path) {
  if (path.steps.empty()) throw std::invalid_argument("path has no steps");
  Eigen::MatrixXd product;
  bool first = true;
  for (const auto& step : path.steps) {
    const Eigen::MatrixXd& q = model.relation(step.relation, step.resource);
    Eigen::MatrixXd factor = step.forward ? q : Eigen::MatrixXd(q.transpose());
    if (first) {
      product = std::move(factor);
      first = false;
    } else {
      product = product * factor;
    }
  }
  return product;
}

Eigen::MatrixXd path_feature_from_paths(const EmbeddingModel& model,
                                        const std::vector<RelationPath>& paths) {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(model.dim, model.dim);
  for (const auto& path : paths) {
    double w = model.path_weight(path.resource, static_cast<int>(path.steps.size()));
    f += w * path.walk_probability * path_embedding(model, path);
  }
  return f;
}

Eigen::MatrixXd path_feature(const EmbeddingModel& model, const KgStore& store,
                             const std::string& e_x, const std::string& e_y, int max_path_len) {
  return path_feature_from_paths(model, enumerate_paths(store, e_x, e_y, max_path_len));
}

double combined_score(const EmbeddingModel& model, const KgStore& store, const std::string& e_x,
                      const std::string& relation, int resource, const std::string& e_y,
                      int max_path_len) {
  double base = bilinear_score(model, e_x, relation, resource, e_y);
  Eigen::MatrixXd f = path_feature(model, store, e_x, e_y, max_path_len);
  return base + f.cwiseProduct(model.relation(relation, resource)).sum();
}

std::vector<Triple> enumerate_corruptions(const KgStore& store, const Triple& triple,
                                          bool corrupt_head) {
  const std::string& slot = corrupt_head ? triple.head : triple.tail;
  const KgEntity* original = store.find_entity(slot);
  if (!original) throw std::invalid_argument("unknown entity id: " + slot);

  std::vector<Triple> out;
  for (const auto& e : store.entities()) {
    if (e.category != original->category || e.id == slot) continue;
    Triple candidate = triple;
    (corrupt_head ? candidate.head : candidate.tail) = e.id;
    if (candidate.resource == 0 && candidate.head == candidate.tail) continue;
    if (store.find_triple(candidate.head, candidate.relation, candidate.resource,
                          candidate.tail))
      continue;
    out.push_back(std::move(candidate));
  }
  return out;
}

Triple corrupt(const KgStore& store, const Triple& triple, Rng& rng) {
  bool head_first = rng.coin();
  std::vector<Triple> candidates = enumerate_corruptions(store, triple, head_first);
  if (candidates.empty()) candidates = enumerate_corruptions(store, triple, !head_first);
  if (candidates.empty()) {
    std::ostringstream msg;
    msg << "no valid corruption exists for (" << triple.head << ", " << triple.relation << "@"
        << triple.resource << ", " << triple.tail << ")";
    throw std::runtime_error(msg.str());
  }
  return candidates[rng.below(candidates.size())];
}

namespace {

// Contribution of one scored triple (sign +1 for the corrupted triple, -1 for
// the positive) to the hinge subgradient.
void accumulate_score_gradients(const EmbeddingModel& model, const KgStore& store,
                                const Triple& t, double sign, bool use_paths, int max_path_len,
                                const std::vector<RelationPath>* paths, PairGradients* out) {
  const Eigen::MatrixXd& q = model.relation(t.relation, t.resource);
  Eigen::VectorXd vx = model.entity(t.head);
  Eigen::VectorXd vy = model.entity(t.tail);
  RelationKey rkey{t.relation, t.resource};

  auto entity_grad = [&](const std::string& id) -> Eigen::VectorXd& {
    auto it = out->d_entities.find(id);
    if (it == out->d_entities.end())
      it = out->d_entities.emplace(id, Eigen::VectorXd::Zero(model.dim)).first;
    return it->second;
  };
  auto relation_grad = [&](const RelationKey& key) -> Eigen::MatrixXd& {
    auto it = out->d_relations.find(key);
    if (it == out->d_relations.end())
      it = out->d_relations.emplace(key, Eigen::MatrixXd::Zero(model.dim, model.dim)).first;
    return it->second;
  };

  entity_grad(t.head) += sign * (q * vy);
  entity_grad(t.tail) += sign * (q.transpose() * vx);
  relation_grad(rkey) += sign * (vx * vy.transpose());

  if (!use_paths) return;
  std::vector<RelationPath> local;
  if (!paths) {
    local = enumerate_paths(store, t.head, t.tail, max_path_len);
    paths = &local;
  }
  if (paths->empty()) return;

  relation_grad(rkey) += sign * path_feature_from_paths(model, *paths);

  for (const auto& path : *paths) {
    int length = static_cast<int>(path.steps.size());
    double w = model.path_weight(path.resource, length);

    std::vector<Eigen::MatrixXd> factors;
    factors.reserve(path.steps.size());
    for (const auto& step : path.steps) {
      const Eigen::MatrixXd& m = model.relation(step.relation, step.resource);
      factors.push_back(step.forward ? m : Eigen::MatrixXd(m.transpose()));
    }
    std::vector<Eigen::MatrixXd> prefix(factors.size() + 1);
    std::vector<Eigen::MatrixXd> suffix(factors.size() + 1);
    prefix[0] = Eigen::MatrixXd::Identity(model.dim, model.dim);
    suffix[factors.size()] = Eigen::MatrixXd::Identity(model.dim, model.dim);
    for (std::size_t i = 0; i < factors.size(); ++i) prefix[i + 1] = prefix[i] * factors[i];
    for (std::size_t i = factors.size(); i-- > 0;) suffix[i] = factors[i] * suffix[i + 1];

    double phi_dot_q = prefix[factors.size()].cwiseProduct(q).sum();
    out->d_path_weights[{path.resource, length}] += sign * path.walk_probability * phi_dot_q;

    double c = sign * w * path.walk_probability;
    for (std::size_t i = 0; i < path.steps.size(); ++i) {
      const PathStep& step = path.steps[i];
      RelationKey skey{step.relation, step.resource};
      if (step.forward) {
        relation_grad(skey) += c * (prefix[i].transpose() * q * suffix[i + 1].transpose());
      } else {
        relation_grad(skey) += c * (suffix[i + 1] * q.transpose() * prefix[i]);
      }
    }
  }
}

double score_triple(const EmbeddingModel& model, const KgStore& store, const Triple& t,
                    bool use_paths, int max_path_len, const std::vector<RelationPath>* paths) {
  double s = bilinear_score(model, t.head, t.relation, t.resource, t.tail);
  if (!use_paths) return s;
  Eigen::MatrixXd f = paths ? path_feature_from_paths(model, *paths)
                            : path_feature(model, store, t.head, t.tail, max_path_len);
  return s + f.cwiseProduct(model.relation(t.relation, t.resource)).sum();
}

}  // namespace

PairGradients pair_loss_gradients(const EmbeddingModel& model, const KgStore& store,
                                  const Triple& pos, const Triple& neg, double margin,
                                  bool use_paths, int max_path_len,
                                  const std::vector<RelationPath>* pos_paths,
                                  const std::vector<RelationPath>* neg_paths) {
  PairGradients out;
  double pos_score = score_triple(model, store, pos, use_paths, max_path_len, pos_paths);
  double neg_score = score_triple(model, store, neg, use_paths, max_path_len, neg_paths);
  out.loss = ranking_loss(pos_score, neg_score, margin);
  if (out.loss <= 0.0) return out;
  accumulate_score_gradients(model, store, neg, +1.0, use_paths, max_path_len, neg_paths, &out);
  accumulate_score_gradients(model, store, pos, -1.0, use_paths, max_path_len, pos_paths, &out);
  return out;
}

EmbedTrainResult train_embeddings(const KgStore& store, const EmbedConfig& config) {
  if (!(config.margin > 0.0)) throw std::invalid_argument("margin must be positive");
  if (config.negatives_per_positive < 1)
    throw std::invalid_argument("need at least one corruption per positive");
  if (config.epochs < 0) throw std::invalid_argument("negative epoch count");

  std::vector<Triple> positives = store.triples_for_resource(0);
  if (positives.empty()) throw std::invalid_argument("store has no core triples to train on");

  EmbedTrainResult result;
  if (config.dim > 512) {
    std::ostringstream msg;
    msg << "embedding dim " << config.dim << " is larger than practicable; expect slow training";
    result.warnings.push_back(msg.str());
  }

  Rng rng(config.seed);
  result.model = init_model(store, config.dim, config.max_path_len, rng);
  EmbeddingModel& model = result.model;

  std::vector<double> cumulative(positives.size());
  double total = 0.0;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    total += positives[i].weight;
    cumulative[i] = total;
  }

  std::map<std::pair<std::string, std::string>, std::vector<RelationPath>> path_cache;
  auto paths_for = [&](const Triple& t) -> const std::vector<RelationPath>* {
    if (!config.use_paths) return nullptr;
    auto key = std::make_pair(t.head, t.tail);
    auto it = path_cache.find(key);
    if (it == path_cache.end())
      it = path_cache.emplace(key, enumerate_paths(store, t.head, t.tail, config.max_path_len))
               .first;
    return &it->second;
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double lr = config.learning_rate / (1.0 + config.lr_decay * epoch);
    double loss_sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t n = 0; n < positives.size(); ++n) {
      double u = rng.next_double() * total;
      std::size_t idx =
          std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
      if (idx >= positives.size()) idx = positives.size() - 1;
      const Triple& pos = positives[idx];

      for (int j = 0; j < config.negatives_per_positive; ++j) {
        Triple neg = corrupt(store, pos, rng);
        PairGradients grads =
            pair_loss_gradients(model, store, pos, neg, config.margin, config.use_paths,
                                config.max_path_len, paths_for(pos), paths_for(neg));
        loss_sum += grads.loss;
        ++pairs;
        if (grads.loss <= 0.0) continue;

        for (const auto& [id, g] : grads.d_entities) {
          auto row = model.entity_vectors.row(model.entity_index.at(id));
          row -= lr * (g.transpose() + config.l2 * row);
        }
        for (const auto& [key, g] : grads.d_relations) {
          Eigen::MatrixXd& q = model.relation_matrices[model.relation_index.at(key)];
          q -= lr * (g + config.l2 * q);
        }
        for (const auto& [key, g] : grads.d_path_weights) {
          double& w = model.path_length_weights.at(key);
          w -= lr * (g + config.l2 * w);
        }
      }
    }
    result.epoch_loss.push_back(pairs ? loss_sum / static_cast<double>(pairs) : 0.0);
  }
  return result;
}

ClusterResult cluster_relations(const std::vector<Eigen::VectorXd>& points, int k,
                                std::uint64_t seed, int restarts, int exemplars_per_cluster) {
  const int n = static_cast<int>(points.size());
  if (n == 0) throw std::invalid_argument("no points to cluster");
  if (k < 1 || k > n) throw std::invalid_argument("cluster count must be in [1, sample count]");
  if (restarts < 1) throw std::invalid_argument("need at least one restart");
  const int d = static_cast<int>(points[0].size());
  for (const auto& p : points)
    if (p.size() != d) throw std::invalid_argument("points differ in dimension");

  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i) x.row(i) = points[i].transpose();

  Rng base(seed);
  ClusterResult best;
  bool have_best = false;

  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng = base.fork(restart);

    Eigen::MatrixXd centroids(k, d);
    centroids.row(0) = x.row(static_cast<int>(rng.below(n)));
    Eigen::VectorXd d2 = (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      double mass = d2.sum();
      int pick;
      if (mass > 0.0) {
        double u = rng.next_double() * mass;
        double acc = 0.0;
        pick = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += d2(i);
          if (u < acc) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<int>(rng.below(n));
      }
      centroids.row(c) = x.row(pick);
      d2 = d2.cwiseMin((x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }

    std::vector<int> assignment(n, -1);
    double inertia = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      bool changed = false;
      inertia = 0.0;
      for (int i = 0; i < n; ++i) {
        int bestc = 0;
        double bestd = (x.row(i) - centroids.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
          double dist = (x.row(i) - centroids.row(c)).squaredNorm();
          if (dist < bestd) {
            bestd = dist;
            bestc = c;
          }
        }
        if (assignment[i] != bestc) {
          assignment[i] = bestc;
          changed = true;
        }
        inertia += bestd;
      }
      if (!changed) break;

      for (int c = 0; c < k; ++c) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
        int count = 0;
        for (int i = 0; i < n; ++i) {
          if (assignment[i] == c) {
            sum += x.row(i);
            ++count;
          }
        }
        if (count > 0) centroids.row(c) = sum / count;
      }
    }

    if (!have_best || inertia < best.inertia) {
      best.assignment = assignment;
      best.centroids = centroids;
      best.inertia = inertia;
      have_best = true;
    }
  }

  best.exemplars.assign(k, {});
  for (int c = 0; c < k; ++c) {
    std::vector<std::pair<double, int>> members;
    for (int i = 0; i < n; ++i)
      if (best.assignment[i] == c)
        members.emplace_back((x.row(i) - best.centroids.row(c)).squaredNorm(), i);
    std::sort(members.begin(), members.end());
    for (int j = 0; j < static_cast<int>(members.size()) && j < exemplars_per_cluster; ++j)
      best.exemplars[c].push_back(members[j].second);
  }
  return best;
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw std::runtime_error("truncated array file");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_array(const std::string& path, const std::vector<std::uint32_t>& shape,
                 const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write array file: " + path);
  out.write("SKGB", 4);
  write_u32(out, static_cast<std::uint32_t>(shape.size()));
  std::size_t expected = 1;
  for (std::uint32_t extent : shape) {
    write_u32(out, extent);
    expected *= extent;
  }
  if (expected != values.size()) throw std::logic_error("array shape does not match data");
  for (double v : values) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(out, bits);
  }
}

std::vector<double> read_array(const std::string& path, std::vector<std::uint32_t>* shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open array file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SKGB", 4) != 0)
    throw std::runtime_error("bad array magic in " + path);
  std::uint32_t rank = read_u32(in);
  if (rank > 8) throw std::runtime_error("implausible array rank in " + path);
  shape->clear();
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    shape->push_back(read_u32(in));
    count *= shape->back();
  }
  std::vector<double> values;
  values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = read_u32(in);
    float f;
    std::memcpy(&f, &bits, 4);
    values.push_back(f);
  }
  return values;
}

}  // namespace

void save_model(const EmbeddingModel& model, const std::string& dir) {
  fs::create_directories(dir);

  std::vector<double> entity_values;
  entity_values.reserve(model.entity_ids.size() * model.dim);
  for (Eigen::Index i = 0; i < model.entity_vectors.rows(); ++i)
    for (int j = 0; j < model.dim; ++j) entity_values.push_back(model.entity_vectors(i, j));
  write_array((fs::path(dir) / "entities.bin").string(),
              {static_cast<std::uint32_t>(model.entity_ids.size()),
               static_cast<std::uint32_t>(model.dim)},
              entity_values);

  std::vector<double> relation_values;
  relation_values.reserve(model.relation_keys.size() * model.dim * model.dim);
  for (const auto& m : model.relation_matrices)
    for (int i = 0; i < model.dim; ++i)
      for (int j = 0; j < model.dim; ++j) relation_values.push_back(m(i, j));
  write_array((fs::path(dir) / "relations.bin").string(),
              {static_cast<std::uint32_t>(model.relation_keys.size()),
               static_cast<std::uint32_t>(model.dim), static_cast<std::uint32_t>(model.dim)},
              relation_values);

  json manifest;
  manifest["format"] = "scikg-embed";
  manifest["version"] = 1;
  manifest["dim"] = model.dim;
  manifest["entities"] = model.entity_ids;
  json rels = json::array();
  for (const auto& [name, resource] : model.relation_keys)
    rels.push_back({{"name", name}, {"resource", resource}});
  manifest["relations"] = rels;
  json weights = json::array();
  for (const auto& [key, w] : model.path_length_weights)
    weights.push_back({{"resource", key.first}, {"length", key.second}, {"weight", w}});
  manifest["path_weights"] = weights;
  manifest["files"] = {{"entity_vectors", "entities.bin"}, {"relation_matrices", "relations.bin"}};

  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest.json in " + dir);
  out << manifest.dump(2) << '\n';
}

EmbeddingModel load_model(const std::string& dir) {
  std::ifstream manifest_in(fs::path(dir) / "manifest.json");
  if (!manifest_in) throw std::runtime_error("cannot open manifest.json in " + dir);
  json manifest = json::parse(manifest_in);
  if (manifest.value("format", "") != "scikg-embed" || manifest.value("version", 0) != 1)
    throw std::runtime_error("unsupported model format in " + dir);

  EmbeddingModel model;
  model.dim = manifest.at("dim").get<int>();
  for (const auto& id : manifest.at("entities")) {
    model.entity_index[id.get<std::string>()] = model.entity_ids.size();
    model.entity_ids.push_back(id.get<std::string>());
  }
  for (const auto& r : manifest.at("relations")) {
    RelationKey key{r.at("name").get<std::string>(), r.at("resource").get<int>()};
    model.relation_index[key] = model.relation_keys.size();
    model.relation_keys.push_back(key);
  }
  for (const auto& w : manifest.at("path_weights"))
    model.path_length_weights[{w.at("resource").get<int>(), w.at("length").get<int>()}] =
        w.at("weight").get<double>();

  auto file = [&](const char* key) {
    return (fs::path(dir) / manifest.at("files").at(key).get<std::string>()).string();
  };

  std::vector<std::uint32_t> shape;
  std::vector<double> entity_values = read_array(file("entity_vectors"), &shape);
  if (shape.size() != 2 || shape[0] != model.entity_ids.size() ||
      shape[1] != static_cast<std::uint32_t>(model.dim))
    throw std::runtime_error("entity array shape does not match manifest in " + dir);
  model.entity_vectors.resize(static_cast<Eigen::Index>(shape[0]), model.dim);
  for (std::uint32_t i = 0; i < shape[0]; ++i)
    for (int j = 0; j < model.dim; ++j)
      model.entity_vectors(i, j) = entity_values[i * model.dim + j];

  std::vector<double> relation_values = read_array(file("relation_matrices"), &shape);
  if (shape.size() != 3 || shape[0] != model.relation_keys.size() ||
      shape[1] != static_cast<std::uint32_t>(model.dim) ||
      shape[2] != static_cast<std::uint32_t>(model.dim))
    throw std::runtime_error("relation array shape does not match manifest in " + dir);
  for (std::uint32_t r = 0; r < shape[0]; ++r) {
    Eigen::MatrixXd m(model.dim, model.dim);
    for (int i = 0; i < model.dim; ++i)
      for (int j = 0; j < model.dim; ++j)
        m(i, j) = relation_values[(static_cast<std::size_t>(r) * model.dim + i) * model.dim + j];
    model.relation_matrices.push_back(std::move(m));
  }
  return model;
}

}  // namespace scikg
