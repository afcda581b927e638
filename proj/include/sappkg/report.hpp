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

#include <string>
#include <vector>

#include <json.hpp>

#include "sappkg/binning.hpp"
#include "sappkg/graph.hpp"
#include "sappkg/kge_eval.hpp"
#include "sappkg/recommend.hpp"
#include "sappkg/stats.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// All reports are TSV with a one-line header and fixed six-decimal floats,
// so reruns diff clean and tests can hash them.

inline std::string eval_report_tsv(const std::string& model, const EvalReport& r) {
  std::string out =
      "model\tmr\tfiltered_mr\tmrr\tfiltered_mrr"
      "\thits1\tfiltered_hits1\thits3\tfiltered_hits3"
      "\thits5\tfiltered_hits5\thits10\tfiltered_hits10\tqueries\n";
  out += model;
  for (double v : {r.mr, r.filtered_mr, r.mrr, r.filtered_mrr, r.hits1,
                   r.filtered_hits1, r.hits3, r.filtered_hits3, r.hits5,
                   r.filtered_hits5, r.hits10, r.filtered_hits10}) {
    out += "\t" + fmt_double(v);
  }
  out += "\t" + std::to_string(r.query_count) + "\n";
  return out;
}

inline std::string rec_report_tsv(const RecReport& r) {
  std::string out = "k\tprecision\trecall\tmap\tmap_literal\ttp\tfp\tfn\n";
  for (const RecRow& row : r.rows) {
    out += std::to_string(row.k);
    for (double v : {row.precision, row.recall, row.map_std, row.map_literal}) {
      out += "\t" + fmt_double(v);
    }
    out += "\t" + std::to_string(row.tp) + "\t" + std::to_string(row.fp) + "\t" +
           std::to_string(row.fn) + "\n";
  }
  return out;
}

inline std::string stats_tsv(const GraphStats& gs) {
  std::string out =
      "nodes\tedges\tdensity\taverage_degree\tmultiplex_nodes\ttriads_possible"
      "\topen_triads\ttriangles\tdegree_variance\tedge_connectivity\tdiameter"
      "\taverage_shortest_path\n";
  out += std::to_string(gs.nodes);
  out += "\t" + std::to_string(gs.edges);
  out += "\t" + fmt_double(gs.density);
  out += "\t" + fmt_double(gs.average_degree);
  out += "\t" + std::to_string(gs.multiplex_nodes);
  out += "\t" + std::to_string(gs.triads_possible);
  out += "\t" + std::to_string(gs.open_triads);
  out += "\t" + std::to_string(gs.triangles);
  out += "\t" + fmt_double(gs.degree_variance);
  out += "\t" + std::to_string(gs.edge_connectivity);
  out += "\t" + std::to_string(gs.diameter);
  out += "\t" + fmt_double(gs.average_shortest_path) + "\n";
  return out;
}

// Support and relatedness as two blocks; absent entries print as "-".
inline std::string relatedness_tsv(const RelatednessMatrix& m,
                                   const KnowledgeGraph& kg) {
  auto block = [&](const char* title,
                   const std::vector<std::vector<std::optional<double>>>& mat) {
    std::string out = std::string("#") + title + "\nrelation";
    for (std::size_t j = 0; j < kg.relation_count(); ++j) {
      out += "\t" + kg.relation_name(static_cast<int>(j));
    }
    out += "\n";
    for (std::size_t i = 0; i < kg.relation_count(); ++i) {
      out += kg.relation_name(static_cast<int>(i));
      for (std::size_t j = 0; j < kg.relation_count(); ++j) {
        out += "\t";
        out += mat[i][j] ? fmt_double(*mat[i][j], 4) : "-";
      }
      out += "\n";
    }
    return out;
  };
  return block("support", m.support) + block("relatedness", m.relatedness);
}

inline std::string timing_tsv(const std::vector<std::pair<std::string, TimingReport>>& rows) {
  std::string out = "model\tqueries\tmean_ms\n";
  for (const auto& [name, rep] : rows) {
    out += name + "\t" + std::to_string(rep.times_ms.size()) + "\t" +
           fmt_double(rep.mean_ms) + "\n";
  }
  return out;
}

inline std::string timing_sidecar_tsv(const std::vector<int>& entities,
                                      const KnowledgeGraph& kg,
                                      const TimingReport& rep) {
  std::string out = "entity\tms\n";
  for (std::size_t i = 0; i < entities.size(); ++i) {
    out += kg.entity_id(entities[i]) + "\t" + fmt_double(rep.times_ms[i]) + "\n";
  }
  return out;
}

inline std::string train_trace_tsv(const TrainTrace& t) {
  std::string out = "epoch\tloss\tvalid_filtered_mrr\n";
  for (std::size_t i = 0; i < t.epoch_loss.size(); ++i) {
    out += std::to_string(i + 1) + "\t" + fmt_double(t.epoch_loss[i]) + "\t" +
           (t.valid_mrr[i] < 0 ? std::string("-") : fmt_double(t.valid_mrr[i])) + "\n";
  }
  return out;
}

inline std::string deep_trace_tsv(const DeepTrace& t) {
  std::string out = "epoch\tloss\tvalid_loss\n";
  for (std::size_t i = 0; i < t.epoch_loss.size(); ++i) {
    out += std::to_string(i + 1) + "\t" + fmt_double(t.epoch_loss[i]) + "\t" +
           (t.valid_loss[i] < 0 ? std::string("-") : fmt_double(t.valid_loss[i])) + "\n";
  }
  return out;
}

inline std::string recommendation_tsv(const KnowledgeGraph& kg, int anchor,
                                      const std::vector<std::pair<int, double>>& ranked) {
  std::string out = "anchor\trank\tapp\tscore\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out += kg.entity_id(anchor) + "\t" + std::to_string(i + 1) + "\t" +
           kg.entity_id(ranked[i].first) + "\t" + fmt_double(ranked[i].second) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Build manifest: everything needed to reproduce or audit a build.

inline nlohmann::json quantile_map_json(const QuantileMap& qm) {
  return {{"edges", qm.edges},
          {"requested_labels", qm.requested_labels},
          {"labels", qm.labels}};
}

inline nlohmann::json interval_map_json(const IntervalMap& im) {
  return {{"edges", im.edges}, {"labels", im.labels}};
}

inline nlohmann::json binning_spec_json(const BinningSpec& spec) {
  nlohmann::json j;
  j["snapshot_date"] = format_date(spec.snapshot_date);
  j["released_groups"] = spec.options.released_groups;
  j["size_groups"] = spec.options.size_groups;
  j["ratings"] = quantile_map_json(spec.ratings_map);
  j["reviews"] = quantile_map_json(spec.reviews_map);
  j["score_text"] = quantile_map_json(spec.score_map);
  j["installs"] = interval_map_json(spec.installs_map);
  j["released"] = interval_map_json(spec.released_map);
  j["size"] = interval_map_json(spec.size_map);
  nlohmann::json groups;
  for (int r = 0; r < kRelationCount; ++r) {
    groups[relation_names()[static_cast<std::size_t>(r)]] = spec.group_count(r);
  }
  j["relation_groups"] = groups;
  return j;
}

inline std::string build_manifest_json(const KnowledgeGraph& kg,
                                       const SplitSet& splits,
                                       const BinningSpec& spec, int edge_k,
                                       std::uint64_t edge_seed) {
  nlohmann::json j;
  j["edge_k"] = edge_k;
  j["edge_seed"] = edge_seed;
  j["split_seed"] = splits.seed;
  j["split_ratios"] = {splits.train_ratio, splits.valid_ratio, splits.test_ratio};
  j["snapshot_date"] = format_date(spec.snapshot_date);
  j["binning"] = binning_spec_json(spec);
  j["entities"] = kg.entity_ids();
  std::vector<std::string> rels;
  for (std::size_t r = 0; r < kg.relation_count(); ++r) {
    rels.push_back(kg.relation_name(static_cast<int>(r)));
  }
  j["relations"] = rels;
  j["triples"] = kg.triple_count();
  j["splits"] = {{"train", splits.train.size()},
                 {"valid", splits.valid.size()},
                 {"test", splits.test.size()}};
  j["vocab_hash"] = vocab_hash(kg.entity_ids());
  return j.dump(2) + "\n";
}

}  // namespace sappkg
