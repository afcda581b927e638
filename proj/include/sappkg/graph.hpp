// Copyright 2024 The sappkg authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sappkg/binning.hpp"
#include "sappkg/relations.hpp"
#include "sappkg/rng.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// One directed fact (head, relation, tail). `relation` is a dense index into
// the owning graph's relation list, not necessarily the canonical id.
struct Triple {
  int head = 0;
  int relation = 0;
  int tail = 0;

  bool operator==(const Triple&) const = default;
};

inline std::uint64_t pack_triple(int h, int r, int t) {
  return (static_cast<std::uint64_t>(h) << 38) |
         (static_cast<std::uint64_t>(r) << 32) |
         static_cast<std::uint64_t>(t);
}

// Directed app-app knowledge graph: entity vocabulary, active relations,
// deduplicated triple set, and the outgoing adjacency used as the
// neighborhood by the deep model. Immutable once built.
class KnowledgeGraph {
 public:
  KnowledgeGraph(std::vector<std::string> entity_ids,
                 std::vector<int> relation_ids, std::vector<Triple> triples)
      : entity_ids_(std::move(entity_ids)),
        relation_ids_(std::move(relation_ids)) {
    for (std::size_t i = 0; i < entity_ids_.size(); ++i) {
      if (!entity_index_.emplace(entity_ids_[i], static_cast<int>(i)).second) {
        throw InputError("duplicate entity id '" + entity_ids_[i] + "'");
      }
    }
    adjacency_.resize(entity_ids_.size());
    triples_.reserve(triples.size());
    for (const Triple& t : triples) add_triple(t);
  }

  std::size_t entity_count() const { return entity_ids_.size(); }
  std::size_t relation_count() const { return relation_ids_.size(); }
  std::size_t triple_count() const { return triples_.size(); }

  const std::vector<std::string>& entity_ids() const { return entity_ids_; }
  const std::vector<Triple>& triples() const { return triples_; }

  // Dense relation index -> canonical relation id (0..11).
  const std::vector<int>& relation_ids() const { return relation_ids_; }
  std::string relation_name(int dense) const {
    return relation_names()[static_cast<std::size_t>(
        relation_ids_[static_cast<std::size_t>(dense)])];
  }

  std::optional<int> entity_index(const std::string& id) const {
    auto it = entity_index_.find(id);
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
  }
  const std::string& entity_id(int idx) const {
    return entity_ids_[static_cast<std::size_t>(idx)];
  }

  // Outgoing (relation, tail) pairs of a head entity.
  const std::vector<std::pair<int, int>>& neighbors(int head) const {
    return adjacency_[static_cast<std::size_t>(head)];
  }

  bool has_triple(int h, int r, int t) const {
    return triple_set_.count(pack_triple(h, r, t)) > 0;
  }
  // Any relation, either direction.
  bool has_link(int a, int b) const {
    return link_set_.count((static_cast<std::uint64_t>(a) << 32) |
                           static_cast<std::uint64_t>(b)) > 0 ||
           link_set_.count((static_cast<std::uint64_t>(b) << 32) |
                           static_cast<std::uint64_t>(a)) > 0;
  }

 private:
  void add_triple(const Triple& t) {
    if (t.head == t.tail) {
      throw InputError("self-loop triple on entity '" + entity_id(t.head) + "'");
    }
    if (t.head < 0 || t.tail < 0 ||
        t.head >= static_cast<int>(entity_ids_.size()) ||
        t.tail >= static_cast<int>(entity_ids_.size()) || t.relation < 0 ||
        t.relation >= static_cast<int>(relation_ids_.size())) {
      throw InputError("triple index out of range");
    }
    if (!triple_set_.insert(pack_triple(t.head, t.relation, t.tail)).second) {
      return;  // exact duplicate
    }
    triples_.push_back(t);
    adjacency_[static_cast<std::size_t>(t.head)].push_back({t.relation, t.tail});
    link_set_.insert((static_cast<std::uint64_t>(t.head) << 32) |
                     static_cast<std::uint64_t>(t.tail));
  }

  std::vector<std::string> entity_ids_;
  std::unordered_map<std::string, int> entity_index_;
  std::vector<int> relation_ids_;
  std::vector<Triple> triples_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
  std::unordered_set<std::uint64_t> triple_set_;
  std::unordered_set<std::uint64_t> link_set_;
};

// ---------------------------------------------------------------------------
// Construction.

// Builds the graph by sampling, for every entity and relation with a present
// bin, up to `edges_per_node` distinct same-bin peers (uniform, without
// replacement). This reproduces the published graph scale, where the edge
// count is about one outgoing edge per node per relation rather than the
// full same-bin clique.
inline KnowledgeGraph build_triples(const std::vector<EntityFeatures>& features,
                                    int edges_per_node, std::uint64_t seed,
                                    const std::vector<int>& active_relations =
                                        std::vector<int>()) {
  if (edges_per_node < 1) throw InputError("edges_per_node must be >= 1");
  if (features.size() < 2) throw InputError("need at least 2 entities");

  std::vector<int> relations = active_relations;
  if (relations.empty()) {
    for (int r = 0; r < kRelationCount; ++r) relations.push_back(r);
  }

  std::vector<std::string> ids;
  ids.reserve(features.size());
  for (const auto& f : features) ids.push_back(f.app_id);

  const int n = static_cast<int>(features.size());
  std::vector<Triple> triples;
  Rng rng(mix64(seed, 0x6b676564ULL));
  for (std::size_t dense = 0; dense < relations.size(); ++dense) {
    const int rel = relations[dense];
    // bin label -> member entity indices, in input order
    std::map<int, std::vector<int>> groups;
    for (int e = 0; e < n; ++e) {
      const auto& b = features[static_cast<std::size_t>(e)].bins[static_cast<std::size_t>(rel)];
      if (b) groups[*b].push_back(e);
    }
    for (const auto& [label, members] : groups) {
      if (members.size() < 2) continue;  // singleton bins emit nothing
      for (int e : members) {
        std::vector<int> peers;
        peers.reserve(members.size() - 1);
        for (int p : members) {
          if (p != e) peers.push_back(p);
        }
        auto chosen = rng.sample_without_replacement(
            std::move(peers), static_cast<std::size_t>(edges_per_node));
        for (int p : chosen) {
          triples.push_back({e, static_cast<int>(dense), p});
        }
      }
    }
  }
  return KnowledgeGraph(std::move(ids), std::move(relations), std::move(triples));
}

// Drops the given canonical relations and nothing else. Entities stay.
inline KnowledgeGraph ablate_relations(const KnowledgeGraph& kg,
                                       const std::vector<int>& dropped) {
  std::vector<int> kept;
  std::vector<int> dense_remap(kg.relation_count(), -1);
  for (std::size_t i = 0; i < kg.relation_count(); ++i) {
    const int canonical = kg.relation_ids()[i];
    if (std::find(dropped.begin(), dropped.end(), canonical) == dropped.end()) {
      dense_remap[i] = static_cast<int>(kept.size());
      kept.push_back(canonical);
    }
  }
  std::vector<Triple> triples;
  for (const Triple& t : kg.triples()) {
    const int nr = dense_remap[static_cast<std::size_t>(t.relation)];
    if (nr >= 0) triples.push_back({t.head, nr, t.tail});
  }
  return KnowledgeGraph(kg.entity_ids(), std::move(kept), std::move(triples));
}

// ---------------------------------------------------------------------------
// Train/valid/test splitting.

struct SplitSet {
  std::vector<Triple> train, valid, test;
  double train_ratio = 0.6, valid_ratio = 0.2, test_ratio = 0.2;
  std::uint64_t seed = 0;
};

// Seeded shuffle + contiguous cut, followed by a swap-repair pass that moves
// triples with train-unseen entities into train (swapping out a triple whose
// entities stay covered), so evaluation never queries an unseen entity.
inline SplitSet split_triples(const KnowledgeGraph& kg, double train_ratio,
                              double valid_ratio, double test_ratio,
                              std::uint64_t seed) {
  if (train_ratio <= 0 || valid_ratio <= 0 || test_ratio <= 0 ||
      std::fabs(train_ratio + valid_ratio + test_ratio - 1.0) > 1e-9) {
    throw InputError("split ratios must be positive and sum to 1");
  }
  const std::size_t n = kg.triple_count();
  if (n < 5) throw InputError("need at least 5 triples to split");

  std::vector<Triple> all = kg.triples();
  Rng rng(mix64(seed, 0x73706c69ULL));
  rng.shuffle(all);

  const auto cut1 = static_cast<std::size_t>(
      std::floor(train_ratio * static_cast<double>(n) + 0.5));
  const auto cut2 = static_cast<std::size_t>(
      std::floor((train_ratio + valid_ratio) * static_cast<double>(n) + 0.5));

  SplitSet s;
  s.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cut1));
  s.valid.assign(all.begin() + static_cast<std::ptrdiff_t>(cut1),
                 all.begin() + static_cast<std::ptrdiff_t>(cut2));
  s.test.assign(all.begin() + static_cast<std::ptrdiff_t>(cut2), all.end());
  s.train_ratio = train_ratio;
  s.valid_ratio = valid_ratio;
  s.test_ratio = test_ratio;
  s.seed = seed;

  // Repair pass. counts[e] = occurrences of e in train.
  std::vector<int> counts(kg.entity_count(), 0);
  for (const Triple& t : s.train) {
    ++counts[static_cast<std::size_t>(t.head)];
    ++counts[static_cast<std::size_t>(t.tail)];
  }
  auto repair = [&](std::vector<Triple>& held) {
    for (Triple& x : held) {
      if (counts[static_cast<std::size_t>(x.head)] > 0 &&
          counts[static_cast<std::size_t>(x.tail)] > 0) {
        continue;
      }
      ++counts[static_cast<std::size_t>(x.head)];
      ++counts[static_cast<std::size_t>(x.tail)];
      bool swapped = false;
      for (Triple& y : s.train) {
        if (counts[static_cast<std::size_t>(y.head)] >= 2 &&
            counts[static_cast<std::size_t>(y.tail)] >= 2) {
          --counts[static_cast<std::size_t>(y.head)];
          --counts[static_cast<std::size_t>(y.tail)];
          std::swap(x, y);
          swapped = true;
          break;
        }
      }
      if (!swapped) {
        // No swap keeps coverage; undo. (Possible only in degenerate graphs.)
        --counts[static_cast<std::size_t>(x.head)];
        --counts[static_cast<std::size_t>(x.tail)];
      }
    }
  };
  repair(s.valid);
  repair(s.test);
  return s;
}

// ---------------------------------------------------------------------------
// Persistence. Triple files are UTF-8 TSV (head_app_id, relation_name,
// tail_app_id), LF line endings, sorted by head id, relation, tail id so two
// serializations of the same graph are byte-identical.

inline std::string serialize_kg(const KnowledgeGraph& kg) {
  std::vector<std::tuple<std::string, int, std::string>> rows;
  rows.reserve(kg.triple_count());
  for (const Triple& t : kg.triples()) {
    rows.emplace_back(kg.entity_id(t.head), t.relation, kg.entity_id(t.tail));
  }
  std::sort(rows.begin(), rows.end(),
            [&](const auto& a, const auto& b) {
              if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
              const int ra = kg.relation_ids()[static_cast<std::size_t>(std::get<1>(a))];
              const int rb = kg.relation_ids()[static_cast<std::size_t>(std::get<1>(b))];
              if (ra != rb) return ra < rb;
              return std::get<2>(a) < std::get<2>(b);
            });
  std::string out;
  for (const auto& [h, r, t] : rows) {
    out += h;
    out += '\t';
    out += kg.relation_name(r);
    out += '\t';
    out += t;
    out += '\n';
  }
  return out;
}

inline void serialize_kg(const KnowledgeGraph& kg, const std::string& path) {
  write_file(path, serialize_kg(kg));
}

// Rebuilds a graph from TSV content. Entities appear in file order, dense
// relation indices follow canonical order of the relations present.
inline KnowledgeGraph deserialize_kg_content(const std::string& content) {
  struct Row {
    std::string h, t;
    int canonical;
  };
  std::vector<Row> rows;
  std::vector<std::string> ids;
  std::unordered_map<std::string, int> index;
  std::array<bool, kRelationCount> seen{};
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3 || cols[0].empty() || cols[2].empty()) {
      throw InputError("malformed triple row at line " + std::to_string(line_no));
    }
    auto rel = relation_id_by_name(cols[1]);
    if (!rel) {
      throw InputError("unknown relation '" + cols[1] + "' at line " +
                       std::to_string(line_no));
    }
    if (cols[0] == cols[2]) {
      throw InputError("self-loop triple at line " + std::to_string(line_no));
    }
    for (const std::string& id : {cols[0], cols[2]}) {
      if (index.emplace(id, static_cast<int>(ids.size())).second) ids.push_back(id);
    }
    seen[static_cast<std::size_t>(*rel)] = true;
    rows.push_back({cols[0], cols[2], *rel});
  }
  std::vector<int> relations;
  std::array<int, kRelationCount> dense{};
  dense.fill(-1);
  for (int r = 0; r < kRelationCount; ++r) {
    if (seen[static_cast<std::size_t>(r)]) {
      dense[static_cast<std::size_t>(r)] = static_cast<int>(relations.size());
      relations.push_back(r);
    }
  }
  std::vector<Triple> triples;
  triples.reserve(rows.size());
  for (const Row& row : rows) {
    triples.push_back({index.at(row.h), dense[static_cast<std::size_t>(row.canonical)],
                       index.at(row.t)});
  }
  return KnowledgeGraph(std::move(ids), std::move(relations), std::move(triples));
}

inline KnowledgeGraph deserialize_kg(const std::string& path) {
  return deserialize_kg_content(read_file(path));
}

// Serializes one split in the same canonical TSV format.
inline std::string serialize_split(const KnowledgeGraph& kg,
                                   const std::vector<Triple>& triples) {
  std::vector<Triple> copy = triples;
  KnowledgeGraph sub(kg.entity_ids(), kg.relation_ids(), std::move(copy));
  return serialize_kg(sub);
}

// Reads a split file against an existing graph, so entity and relation
// indices stay consistent across train/valid/test.
inline std::vector<Triple> parse_triples_against(const KnowledgeGraph& kg,
                                                 const std::string& content) {
  std::array<int, kRelationCount> dense{};
  dense.fill(-1);
  for (std::size_t i = 0; i < kg.relation_count(); ++i) {
    dense[static_cast<std::size_t>(kg.relation_ids()[i])] = static_cast<int>(i);
  }
  std::vector<Triple> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3) {
      throw InputError("malformed triple row at line " + std::to_string(line_no));
    }
    auto rel = relation_id_by_name(cols[1]);
    if (!rel || dense[static_cast<std::size_t>(*rel)] < 0) {
      throw InputError("unknown relation '" + cols[1] + "' at line " +
                       std::to_string(line_no));
    }
    auto h = kg.entity_index(cols[0]);
    auto t = kg.entity_index(cols[2]);
    if (!h || !t) {
      throw InputError("unknown entity at line " + std::to_string(line_no));
    }
    out.push_back({*h, dense[static_cast<std::size_t>(*rel)], *t});
  }
  return out;
}

}  // namespace sappkg
