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

#ifndef SCIKG_KG_HPP_
#define SCIKG_KG_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scikg/corpus.hpp"
#include "scikg/linker.hpp"
#include "scikg/rng.hpp"

namespace scikg {

struct KgEntity {
  std::string id;
  std::string canonical_form;
  std::string category;
  bool external = false;
};

struct RelationType {
  std::string name;
  int resource = 0;  // 0 = core, k >= 1 = auxiliary resource
  bool directed = false;
};

struct Triple {
  std::string head;
  std::string relation;
  int resource = 0;
  std::string tail;
  double weight = 1.0;
};

// One step of a relation path. `forward` is false when a directed relation
// is traversed tail-to-head.
struct PathStep {
  std::string relation;
  int resource = 0;
  bool forward = true;

  bool operator==(const PathStep&) const = default;
  auto operator<=>(const PathStep&) const = default;
};

struct RelationPath {
  std::string start;
  std::string end;
  std::vector<PathStep> steps;
  int resource = 0;
  double walk_probability = 0.0;
};

inline constexpr const char* kTaskTask = "Task-Task";
inline constexpr const char* kTaskMethod = "Task-Method";
inline constexpr const char* kMethodMethod = "Method-Method";

// A span grounded in a linked entity, positioned by document and sentence.
struct LinkedMention {
  std::string doc_id;
  int sentence_index = 0;
  std::string entity_id;
  std::string category;
  double confidence = 1.0;
};

enum class Window { Sentence, Document };
enum class PathMode { Exhaustive, Sampled };

class KgStore {
 public:
  KgStore();

  // Entities keep their linker ids; external ones get x-prefixed ids.
  static KgStore from_clusters(const std::vector<EntityCluster>& clusters);

  std::string add_entity(const std::string& canonical_form, const std::string& category,
                         bool external, const std::vector<std::string>& aliases,
                         const std::string& id = "");
  const KgEntity* find_entity(const std::string& id) const;
  // Maps a raw surface to an entity id through the shared normalization.
  std::optional<std::string> resolve(const std::string& surface) const;

  void register_relation(const std::string& name, int resource, bool directed);
  const RelationType* find_relation(const std::string& name, int resource) const;

  // Symmetric triples are canonicalized (smaller entity id first); weights
  // accumulate across calls.  Core relations reject self-loops.
  void add_triple(const std::string& head, const std::string& relation, int resource,
                  const std::string& tail, double weight);
  const Triple* find_triple(const std::string& a, const std::string& relation, int resource,
                            const std::string& b) const;

  const std::vector<KgEntity>& entities() const { return entities_; }
  const std::vector<RelationType>& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }
  std::vector<Triple> triples_for_resource(int resource) const;
  std::vector<int> resource_ids() const;

  int resource_for_name(const std::string& resource_name);
  const std::map<std::string, int>& resource_names() const { return resource_names_; }

  // Number of edges at `node` usable as a step of `relation` in the given
  // direction.  Symmetric relations count every incident edge.
  int outdegree(const std::string& node, const std::string& relation, int resource,
                bool forward) const;

  void save(const std::string& dir) const;
  static KgStore load(const std::string& dir);

 private:
  friend std::vector<RelationPath> enumerate_paths(const KgStore&, const std::string&,
                                                   const std::string&, int, PathMode, int, Rng*);
  friend double walk_probability(const KgStore&, const std::vector<std::string>&,
                                 const std::vector<PathStep>&);

  struct AdjEdge {
    std::string neighbor;
    std::string relation;
    int resource = 0;
    bool forward = true;
  };

  const std::vector<AdjEdge>& adjacency(const std::string& node) const;
  void invalidate_adjacency() { adjacency_.clear(); }

  std::vector<KgEntity> entities_;
  std::map<std::string, std::size_t> entity_index_;
  std::map<std::string, std::string> alias_to_id_;
  std::vector<RelationType> relations_;
  std::map<std::pair<std::string, int>, std::size_t> relation_index_;
  std::vector<Triple> triples_;
  std::map<std::tuple<std::string, std::string, int, std::string>, std::size_t> triple_index_;
  std::map<std::string, int> resource_names_;  // auxiliary resource name -> id
  int next_external_ = 1;
  mutable std::map<std::string, std::vector<AdjEdge>> adjacency_;
};

// Counts each co-occurring entity pair once per window; spans below
// min_confidence are dropped.  Relation type follows the entity categories;
// pairs outside {Task,Method}x{Task,Method} produce nothing.
std::vector<Triple> extract_cooccurrence(const KgStore& store,
                                         const std::vector<LinkedMention>& mentions,
                                         Window window, double min_confidence);

// TSV rows: head_surface <TAB> relation_label <TAB> tail_surface <TAB> weight.
// Returns the resource id, or nullopt when the file held no rows.
std::optional<int> ingest_auxiliary(KgStore& store, const std::string& path,
                                    const std::string& resource_name,
                                    const LabelMap* label_map = nullptr);

// Exhaustive mode: all simple paths of length <= max_len per resource, where
// resource k's edge set is core plus resource-k edges and a resource-k path
// uses at least one k edge.  Sampled mode: num_walks random walks per
// resource with lengths in [min(2,max_len), max_len]; only walks ending at
// e_y are kept.  Paths identical after dropping intermediate nodes are
// merged, probabilities summed.
std::vector<RelationPath> enumerate_paths(const KgStore& store, const std::string& e_x,
                                          const std::string& e_y, int max_len,
                                          PathMode mode = PathMode::Exhaustive,
                                          int num_walks = 0, Rng* rng = nullptr);

// Product over steps of 1/outdegree(node restricted to the step's relation
// and direction).  `nodes` is the full node sequence including endpoints.
double walk_probability(const KgStore& store, const std::vector<std::string>& nodes,
                        const std::vector<PathStep>& steps);

struct SplitResult {
  std::vector<Triple> train;
  std::vector<Triple> dev;
  std::vector<Triple> test;
  std::vector<std::string> warnings;
};

// train: papers before cutoff_year.  dev: cutoff-year papers in dev_venue.
// test: papers after cutoff_year, triples touching a holdout entity, minus
// any triple already in train.
SplitResult temporal_split(const std::vector<PaperRecord>& papers,
                           const std::map<std::string, std::vector<Triple>>& doc_triples,
                           int cutoff_year, const std::string& dev_venue,
                           const std::vector<std::string>& holdout_entities);

void write_triples(const std::string& path, const std::vector<Triple>& triples);
std::vector<Triple> read_triples(const std::string& path);

}  // namespace scikg

#endif  // SCIKG_KG_HPP_
