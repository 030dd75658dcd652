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

#include "scikg/kg.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace scikg {

namespace fs = std::filesystem;
using nlohmann::json;

KgStore::KgStore() {
  register_relation(kTaskTask, 0, false);
  register_relation(kTaskMethod, 0, true);
  register_relation(kMethodMethod, 0, false);
}

KgStore KgStore::from_clusters(const std::vector<EntityCluster>& clusters) {
  KgStore store;
  for (const auto& c : clusters) {
    std::vector<std::string> aliases;
    aliases.reserve(c.variants.size() + 1);
    aliases.push_back(normalize_surface(c.canonical_form));
    for (const auto& v : c.variants) aliases.push_back(normalize_surface(v));
    store.add_entity(c.canonical_form, c.category, false, aliases, c.canonical_id);
  }
  return store;
}

std::string KgStore::add_entity(const std::string& canonical_form, const std::string& category,
                                bool external, const std::vector<std::string>& aliases,
                                const std::string& id) {
  std::string eid = id;
  if (eid.empty()) {
    std::ostringstream os;
    os << "x" << std::setw(4) << std::setfill('0') << next_external_++;
    eid = os.str();
  }
  if (entity_index_.count(eid)) throw std::invalid_argument("duplicate entity id: " + eid);
  entity_index_[eid] = entities_.size();
  entities_.push_back({eid, canonical_form, category, external});
  alias_to_id_.emplace(normalize_surface(canonical_form), eid);
  for (const auto& a : aliases)
    if (!a.empty()) alias_to_id_.emplace(a, eid);
  return eid;
}

const KgEntity* KgStore::find_entity(const std::string& id) const {
  auto it = entity_index_.find(id);
  return it == entity_index_.end() ? nullptr : &entities_[it->second];
}

std::optional<std::string> KgStore::resolve(const std::string& surface) const {
  auto it = alias_to_id_.find(normalize_surface(surface));
  if (it == alias_to_id_.end()) return std::nullopt;
  return it->second;
}

void KgStore::register_relation(const std::string& name, int resource, bool directed) {
  auto key = std::make_pair(name, resource);
  auto it = relation_index_.find(key);
  if (it != relation_index_.end()) {
    if (relations_[it->second].directed != directed) {
      std::ostringstream msg;
      msg << "relation " << name << "@" << resource << " re-registered with different direction";
      throw std::invalid_argument(msg.str());
    }
    return;
  }
  relation_index_[key] = relations_.size();
  relations_.push_back({name, resource, directed});
}

const RelationType* KgStore::find_relation(const std::string& name, int resource) const {
  auto it = relation_index_.find(std::make_pair(name, resource));
  return it == relation_index_.end() ? nullptr : &relations_[it->second];
}

void KgStore::add_triple(const std::string& head, const std::string& relation, int resource,
                         const std::string& tail, double weight) {
  if (!(weight > 0.0)) throw std::invalid_argument("triple weight must be positive");
  const RelationType* rel = find_relation(relation, resource);
  if (!rel) {
    std::ostringstream msg;
    msg << "unknown relation: " << relation << "@" << resource;
    throw std::invalid_argument(msg.str());
  }
  if (!find_entity(head)) throw std::invalid_argument("unknown entity id: " + head);
  if (!find_entity(tail)) throw std::invalid_argument("unknown entity id: " + tail);
  if (resource == 0 && head == tail)
    throw std::invalid_argument("core relations reject self-loops: " + head);

  std::string h = head;
  std::string t = tail;
  if (!rel->directed && t < h) std::swap(h, t);

  auto key = std::make_tuple(h, relation, resource, t);
  auto it = triple_index_.find(key);
  if (it != triple_index_.end()) {
    triples_[it->second].weight += weight;
  } else {
    triple_index_[key] = triples_.size();
    triples_.push_back({h, relation, resource, t, weight});
  }
  invalidate_adjacency();
}

const Triple* KgStore::find_triple(const std::string& a, const std::string& relation,
                                   int resource, const std::string& b) const {
  const RelationType* rel = find_relation(relation, resource);
  if (!rel) return nullptr;
  std::string h = a;
  std::string t = b;
  if (!rel->directed && t < h) std::swap(h, t);
  auto it = triple_index_.find(std::make_tuple(h, relation, resource, t));
  return it == triple_index_.end() ? nullptr : &triples_[it->second];
}

std::vector<Triple> KgStore::triples_for_resource(int resource) const {
  std::vector<Triple> out;
  for (const auto& t : triples_)
    if (t.resource == resource) out.push_back(t);
  return out;
}

std::vector<int> KgStore::resource_ids() const {
  std::set<int> ids = {0};
  for (const auto& r : relations_) ids.insert(r.resource);
  return std::vector<int>(ids.begin(), ids.end());
}

int KgStore::resource_for_name(const std::string& resource_name) {
  auto it = resource_names_.find(resource_name);
  if (it != resource_names_.end()) return it->second;
  int next = 1;
  for (const auto& [name, id] : resource_names_) next = std::max(next, id + 1);
  resource_names_[resource_name] = next;
  return next;
}

int KgStore::outdegree(const std::string& node, const std::string& relation, int resource,
                       bool forward) const {
  int count = 0;
  for (const auto& e : adjacency(node))
    if (e.relation == relation && e.resource == resource && e.forward == forward) ++count;
  return count;
}

const std::vector<KgStore::AdjEdge>& KgStore::adjacency(const std::string& node) const {
  static const std::vector<AdjEdge> kEmpty;
  if (adjacency_.empty() && !triples_.empty()) {
    for (const auto& t : triples_) {
      const RelationType* rel = find_relation(t.relation, t.resource);
      adjacency_[t.head].push_back({t.tail, t.relation, t.resource, true});
      if (rel->directed) {
        adjacency_[t.tail].push_back({t.head, t.relation, t.resource, false});
      } else if (t.tail != t.head) {
        adjacency_[t.tail].push_back({t.head, t.relation, t.resource, true});
      }
    }
    for (auto& [_, edges] : adjacency_) {
      std::sort(edges.begin(), edges.end(), [](const AdjEdge& a, const AdjEdge& b) {
        return std::make_tuple(a.relation, a.resource, !a.forward, a.neighbor) <
               std::make_tuple(b.relation, b.resource, !b.forward, b.neighbor);
      });
    }
  }
  auto it = adjacency_.find(node);
  return it == adjacency_.end() ? kEmpty : it->second;
}

void KgStore::save(const std::string& dir) const {
  fs::create_directories(dir);

  {
    std::ofstream out(fs::path(dir) / "entities.tsv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write entities.tsv in " + dir);
    for (const auto& e : entities_)
      out << e.id << '\t' << e.canonical_form << '\t' << e.category << '\t'
          << (e.external ? 1 : 0) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "aliases.tsv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write aliases.tsv in " + dir);
    for (const auto& [alias, id] : alias_to_id_) out << alias << '\t' << id << '\n';
  }
  write_triples((fs::path(dir) / "triples.tsv").string(), triples_);

  json manifest;
  manifest["format"] = "scikg-kg";
  manifest["version"] = 1;
  manifest["files"] = {{"entities", "entities.tsv"},
                       {"aliases", "aliases.tsv"},
                       {"triples", "triples.tsv"}};
  json rels = json::array();
  for (const auto& r : relations_)
    rels.push_back({{"name", r.name}, {"resource", r.resource}, {"directed", r.directed}});
  manifest["relations"] = rels;
  manifest["resources"] = json::object();
  for (const auto& [name, id] : resource_names_) manifest["resources"][name] = id;
  manifest["next_external"] = next_external_;

  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest.json in " + dir);
  out << manifest.dump(2) << '\n';
}

KgStore KgStore::load(const std::string& dir) {
  std::ifstream manifest_in(fs::path(dir) / "manifest.json");
  if (!manifest_in) throw std::runtime_error("cannot open manifest.json in " + dir);
  json manifest = json::parse(manifest_in);
  if (manifest.value("format", "") != "scikg-kg" || manifest.value("version", 0) != 1)
    throw std::runtime_error("unsupported store format in " + dir);

  KgStore store;
  for (const auto& r : manifest.at("relations"))
    store.register_relation(r.at("name").get<std::string>(), r.at("resource").get<int>(),
                            r.at("directed").get<bool>());
  for (const auto& [name, id] : manifest.at("resources").items())
    store.resource_names_[name] = id.get<int>();
  store.next_external_ = manifest.value("next_external", 1);

  auto file = [&](const char* key) {
    return (fs::path(dir) / manifest.at("files").at(key).get<std::string>()).string();
  };

  {
    std::ifstream in(file("entities"));
    if (!in) throw std::runtime_error("cannot open entity table in " + dir);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      auto fields = split(line, '\t');
      if (fields.size() != 4) {
        std::ostringstream msg;
        msg << "entities.tsv:" << lineno << ": expected 4 fields";
        throw std::runtime_error(msg.str());
      }
      store.add_entity(fields[1], fields[2], fields[3] == "1", {}, fields[0]);
    }
  }
  {
    std::ifstream in(file("aliases"));
    if (!in) throw std::runtime_error("cannot open alias table in " + dir);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      auto fields = split(line, '\t');
      if (fields.size() != 2 || !store.find_entity(fields[1])) {
        std::ostringstream msg;
        msg << "aliases.tsv:" << lineno << ": malformed alias row";
        throw std::runtime_error(msg.str());
      }
      store.alias_to_id_.emplace(fields[0], fields[1]);
    }
  }
  for (const auto& t : read_triples(file("triples")))
    store.add_triple(t.head, t.relation, t.resource, t.tail, t.weight);
  return store;
}

std::vector<Triple> extract_cooccurrence(const KgStore& store,
                                         const std::vector<LinkedMention>& mentions,
                                         Window window, double min_confidence) {
  std::map<std::pair<std::string, int>, std::set<std::string>> windows;
  for (const auto& m : mentions) {
    if (m.confidence < min_confidence) continue;
    if (!store.find_entity(m.entity_id))
      throw std::invalid_argument("unknown entity id in mention: " + m.entity_id);
    int slot = window == Window::Sentence ? m.sentence_index : 0;
    windows[{m.doc_id, slot}].insert(m.entity_id);
  }

  std::map<std::tuple<std::string, std::string, std::string>, double> counts;
  for (const auto& [_, present] : windows) {
    for (auto it = present.begin(); it != present.end(); ++it) {
      for (auto jt = std::next(it); jt != present.end(); ++jt) {
        const KgEntity* a = store.find_entity(*it);
        const KgEntity* b = store.find_entity(*jt);
        std::string head, tail, relation;
        if (a->category == "Task" && b->category == "Task") {
          relation = kTaskTask;
          head = *it;
          tail = *jt;
        } else if (a->category == "Method" && b->category == "Method") {
          relation = kMethodMethod;
          head = *it;
          tail = *jt;
        } else if (a->category == "Task" && b->category == "Method") {
          relation = kTaskMethod;
          head = *it;
          tail = *jt;
        } else if (a->category == "Method" && b->category == "Task") {
          relation = kTaskMethod;
          head = *jt;
          tail = *it;
        } else {
          continue;
        }
        counts[{head, relation, tail}] += 1.0;
      }
    }
  }

  std::vector<Triple> out;
  out.reserve(counts.size());
  for (const auto& [key, weight] : counts)
    out.push_back({std::get<0>(key), std::get<1>(key), 0, std::get<2>(key), weight});
  return out;
}

std::optional<int> ingest_auxiliary(KgStore& store, const std::string& path,
                                    const std::string& resource_name,
                                    const LabelMap* label_map) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open auxiliary relation file: " + path);

  struct Row {
    std::string head, label, tail;
    double weight;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    std::ostringstream msg;
    msg << path << ":" << lineno << ": ";
    if (fields.size() != 4) {
      msg << "expected head<TAB>relation<TAB>tail<TAB>weight";
      throw std::runtime_error(msg.str());
    }
    double weight = 0.0;
    try {
      std::size_t used = 0;
      weight = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      msg << "weight is not a number: " << fields[3];
      throw std::runtime_error(msg.str());
    }
    if (!(weight > 0.0)) {
      msg << "weight must be positive";
      throw std::runtime_error(msg.str());
    }
    std::string label = trim(fields[1]);
    if (label_map) {
      auto mapped = label_map->apply(label);
      if (!mapped) continue;
      label = *mapped;
    }
    if (label.empty()) {
      msg << "empty relation label";
      throw std::runtime_error(msg.str());
    }
    rows.push_back({trim(fields[0]), label, trim(fields[2]), weight});
  }
  if (rows.empty()) return std::nullopt;

  int resource = store.resource_for_name(resource_name);
  auto entity_for = [&](const std::string& surface) {
    if (auto id = store.resolve(surface)) return *id;
    return store.add_entity(surface, "External", true, {normalize_surface(surface)});
  };
  for (const auto& row : rows) {
    std::string head = entity_for(row.head);
    std::string tail = entity_for(row.tail);
    store.register_relation(row.label, resource, true);
    store.add_triple(head, row.label, resource, tail, row.weight);
  }
  return resource;
}

double walk_probability(const KgStore& store, const std::vector<std::string>& nodes,
                        const std::vector<PathStep>& steps) {
  if (steps.empty() || nodes.size() != steps.size() + 1)
    throw std::invalid_argument("walk needs one more node than steps");
  double prob = 1.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    bool edge_exists = false;
    for (const auto& e : store.adjacency(nodes[i])) {
      if (e.relation == steps[i].relation && e.resource == steps[i].resource &&
          e.forward == steps[i].forward && e.neighbor == nodes[i + 1]) {
        edge_exists = true;
        break;
      }
    }
    if (!edge_exists) {
      std::ostringstream msg;
      msg << "path step " << i << " (" << nodes[i] << " -" << steps[i].relation << "-> "
          << nodes[i + 1] << ") not present in store";
      throw std::invalid_argument(msg.str());
    }
    int deg = store.outdegree(nodes[i], steps[i].relation, steps[i].resource, steps[i].forward);
    if (deg <= 0) throw std::runtime_error("corrupt store: zero outdegree at " + nodes[i]);
    prob /= deg;
  }
  return prob;
}

std::vector<RelationPath> enumerate_paths(const KgStore& store, const std::string& e_x,
                                          const std::string& e_y, int max_len, PathMode mode,
                                          int num_walks, Rng* rng) {
  if (max_len < 1) throw std::invalid_argument("max_len must be at least 1");
  if (!store.find_entity(e_x)) throw std::invalid_argument("unknown entity id: " + e_x);
  if (!store.find_entity(e_y)) throw std::invalid_argument("unknown entity id: " + e_y);
  if (mode == PathMode::Sampled && (num_walks < 1 || rng == nullptr))
    throw std::invalid_argument("sampled mode needs num_walks >= 1 and an rng");

  std::map<std::pair<int, std::vector<PathStep>>, double> merged;

  auto record = [&](int resource, const std::vector<std::string>& nodes,
                    const std::vector<PathStep>& steps) {
    merged[{resource, steps}] += walk_probability(store, nodes, steps);
  };

  for (int resource : store.resource_ids()) {
    auto usable = [&](const KgStore::AdjEdge& e) {
      return e.resource == 0 || e.resource == resource;
    };
    auto counts_as_aux = [&](const std::vector<PathStep>& steps) {
      if (resource == 0) return true;
      for (const auto& s : steps)
        if (s.resource == resource) return true;
      return false;
    };

    if (mode == PathMode::Exhaustive) {
      std::vector<std::string> nodes = {e_x};
      std::vector<PathStep> steps;
      std::set<std::string> visited = {e_x};

      auto dfs = [&](auto&& self, const std::string& u) -> void {
        for (const auto& e : store.adjacency(u)) {
          if (!usable(e) || visited.count(e.neighbor)) continue;
          nodes.push_back(e.neighbor);
          steps.push_back({e.relation, e.resource, e.forward});
          if (e.neighbor == e_y) {
            if (counts_as_aux(steps)) record(resource, nodes, steps);
          } else if (static_cast<int>(steps.size()) < max_len) {
            visited.insert(e.neighbor);
            self(self, e.neighbor);
            visited.erase(e.neighbor);
          }
          nodes.pop_back();
          steps.pop_back();
        }
      };
      dfs(dfs, e_x);
    } else {
      std::set<std::pair<std::vector<std::string>, std::vector<PathStep>>> seen;
      Rng walk_rng = rng->fork(resource);
      int min_len = std::min(2, max_len);
      for (int w = 0; w < num_walks; ++w) {
        int len = min_len + static_cast<int>(walk_rng.below(
                                static_cast<std::uint64_t>(max_len - min_len + 1)));
        std::vector<std::string> nodes = {e_x};
        std::vector<PathStep> steps;
        bool dead = false;
        for (int s = 0; s < len && !dead; ++s) {
          std::vector<const KgStore::AdjEdge*> options;
          for (const auto& e : store.adjacency(nodes.back()))
            if (usable(e)) options.push_back(&e);
          if (options.empty()) {
            dead = true;
            break;
          }
          const auto* pick =
              options[walk_rng.below(static_cast<std::uint64_t>(options.size()))];
          nodes.push_back(pick->neighbor);
          steps.push_back({pick->relation, pick->resource, pick->forward});
        }
        if (dead || nodes.back() != e_y || !counts_as_aux(steps)) continue;
        if (seen.emplace(nodes, steps).second) record(resource, nodes, steps);
      }
    }
  }

  std::vector<RelationPath> out;
  out.reserve(merged.size());
  for (const auto& [key, prob] : merged)
    out.push_back({e_x, e_y, key.second, key.first, prob});
  std::sort(out.begin(), out.end(), [](const RelationPath& a, const RelationPath& b) {
    return std::make_tuple(a.resource, a.steps.size(), std::cref(a.steps)) <
           std::make_tuple(b.resource, b.steps.size(), std::cref(b.steps));
  });
  return out;
}

SplitResult temporal_split(const std::vector<PaperRecord>& papers,
                           const std::map<std::string, std::vector<Triple>>& doc_triples,
                           int cutoff_year, const std::string& dev_venue,
                           const std::vector<std::string>& holdout_entities) {
  std::map<std::string, const PaperRecord*> by_id;
  for (const auto& p : papers) by_id[p.id] = &p;

  using Key = std::tuple<std::string, std::string, int, std::string>;
  auto key_of = [](const Triple& t) {
    return Key{t.head, t.relation, t.resource, t.tail};
  };
  std::map<Key, double> train, dev, post;

  SplitResult result;
  for (const auto& [doc, triples] : doc_triples) {
    auto it = by_id.find(doc);
    if (it == by_id.end()) {
      result.warnings.push_back("document " + doc + " has no paper record; skipped");
      continue;
    }
    const PaperRecord& paper = *it->second;
    std::map<Key, double>* bucket = nullptr;
    if (paper.year < cutoff_year) {
      bucket = &train;
    } else if (paper.year == cutoff_year) {
      if (paper.venue == dev_venue) bucket = &dev;
    } else {
      bucket = &post;
    }
    if (!bucket) continue;
    for (const auto& t : triples) (*bucket)[key_of(t)] += t.weight;
  }

  std::set<std::string> holdout(holdout_entities.begin(), holdout_entities.end());
  std::set<std::string> seen_in_post;
  std::map<Key, double> test;
  for (const auto& [key, weight] : post) {
    const auto& [head, relation, resource, tail] = key;
    bool touches = holdout.count(head) || holdout.count(tail);
    if (holdout.count(head)) seen_in_post.insert(head);
    if (holdout.count(tail)) seen_in_post.insert(tail);
    if (!touches || train.count(key)) continue;
    test[key] += weight;
  }
  for (const auto& h : holdout)
    if (!seen_in_post.count(h))
      result.warnings.push_back("holdout entity '" + h + "' absent from test-period corpus");

  auto to_vector = [](const std::map<Key, double>& bucket) {
    std::vector<Triple> out;
    out.reserve(bucket.size());
    for (const auto& [key, weight] : bucket) {
      const auto& [head, relation, resource, tail] = key;
      out.push_back({head, relation, resource, tail, weight});
    }
    return out;
  };
  result.train = to_vector(train);
  result.dev = to_vector(dev);
  result.test = to_vector(test);
  return result;
}

void write_triples(const std::string& path, const std::vector<Triple>& triples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write triple table: " + path);
  for (const auto& t : triples)
    out << t.head << '\t' << t.relation << '\t' << t.tail << '\t' << t.resource << '\t'
        << format_real(t.weight) << '\n';
}

std::vector<Triple> read_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open triple table: " + path);
  std::vector<Triple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    std::ostringstream msg;
    msg << path << ":" << lineno << ": ";
    if (fields.size() != 5) {
      msg << "expected head<TAB>relation<TAB>tail<TAB>resource<TAB>weight";
      throw std::runtime_error(msg.str());
    }
    try {
      std::size_t used = 0;
      int resource = std::stoi(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("");
      double weight = std::stod(fields[4], &used);
      if (used != fields[4].size()) throw std::invalid_argument("");
      out.push_back({fields[0], fields[1], resource, fields[2], weight});
    } catch (const std::exception&) {
      msg << "malformed numeric field";
      throw std::runtime_error(msg.str());
    }
  }
  return out;
}

}  // namespace scikg
