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
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <unordered_set>
#include <vector>

#include "sappkg/deep.hpp"
#include "sappkg/graph.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// ---------------------------------------------------------------------------
// Loss. One batch groups an anchor with its positive partners and the
// negatives sampled against them.

struct RecBatch {
  int anchor = 0;
  std::vector<int> positives;
  std::vector<int> negatives;
};

// Binary cross-entropy with L2: sum over positives of -log y and negatives
// of -log(1 - y), plus lambda * |theta|^2 over the trainable parameters.
// Predictions are clamped to [eps, 1-eps] so the logs never blow up.
inline double recommendation_loss_grad(const DeepModel& m, const KnowledgeGraph& kg,
                                       const std::vector<RecBatch>& batches,
                                       double lambda, std::vector<double>* grad) {
  constexpr double kEps = 1e-12;
  const int ds = m.shallow_dim();
  const int dd = m.deep_dim;
  double loss = 0.0;
  auto account = [&](int anchor, int other, bool positive) {
    PairForward pf = score_pair_forward(m, kg, anchor, other);
    const double yc = std::clamp(pf.y, kEps, 1.0 - kEps);
    loss += positive ? -std::log(yc) : -std::log(1.0 - yc);
    if (!grad) return;
    // d loss / d raw; the sigmoid cancels most of the log derivative
    const double draw = positive ? -(1.0 - pf.y) : pf.y;
    std::vector<double> root_a(static_cast<std::size_t>(dd));
    std::vector<double> root_b(static_cast<std::size_t>(dd));
    for (int j = 0; j < dd; ++j) {
      root_a[static_cast<std::size_t>(j)] = draw * pf.fused_b[static_cast<std::size_t>(ds + j)];
      root_b[static_cast<std::size_t>(j)] = draw * pf.fused_a[static_cast<std::size_t>(ds + j)];
    }
    propagate_backward(m, pf.tape_a, root_a, *grad);
    propagate_backward(m, pf.tape_b, root_b, *grad);
  };
  for (const RecBatch& b : batches) {
    if (b.positives.empty()) throw InputError("recommendation_loss: batch without positives");
    for (int p : b.positives) account(b.anchor, p, true);
    for (int n : b.negatives) account(b.anchor, n, false);
  }
  if (lambda != 0.0) {
    for (double p : m.params) loss += lambda * p * p;
    if (grad) {
      for (std::size_t i = 0; i < m.params.size(); ++i) {
        (*grad)[i] += 2.0 * lambda * m.params[i];
      }
    }
  }
  return loss;
}

inline double recommendation_loss(const DeepModel& m, const KnowledgeGraph& kg,
                                  const std::vector<RecBatch>& batches,
                                  double lambda) {
  return recommendation_loss_grad(m, kg, batches, lambda, nullptr);
}

// ---------------------------------------------------------------------------
// Training.

struct DeepTrace {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::vector<double> valid_loss;
  int best_epoch = 0;
};

// Directed (head, tail) pairs of a split, deduplicated in first-seen order.
inline std::vector<std::pair<int, int>> split_pairs(const std::vector<Triple>& triples) {
  std::vector<std::pair<int, int>> pairs;
  std::unordered_set<std::uint64_t> seen;
  for (const Triple& t : triples) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(t.head) << 32) | static_cast<std::uint64_t>(t.tail);
    if (seen.insert(key).second) pairs.push_back({t.head, t.tail});
  }
  return pairs;
}

// Uniform unlinked partner for `anchor` (no relation in either direction).
inline int sample_negative_partner(const KnowledgeGraph& kg, int anchor, Rng& rng) {
  const int n = static_cast<int>(kg.entity_count());
  for (int tries = 0; tries < 1024; ++tries) {
    const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (c != anchor && !kg.has_link(anchor, c)) return c;
  }
  std::vector<int> valid;
  for (int c = 0; c < n; ++c) {
    if (c != anchor && !kg.has_link(anchor, c)) valid.push_back(c);
  }
  if (valid.empty()) throw InputError("no unlinked negative partner exists");
  return valid[rng.below(valid.size())];
}

// Algorithm: freeze the TransD store, train the deep parameters with Adam on
// pairwise BCE, negatives drawn 1:1 from unlinked pairs, keep the best
// validation snapshot.
inline DeepModel train_deep(const KnowledgeGraph& kg, const SplitSet& splits,
                            const KgeModel& shallow, const DeepConfig& cfg,
                            DeepTrace* trace = nullptr) {
  cfg.validate();
  DeepModel model = init_deep_model(shallow, kg, cfg);
  const auto train_pairs = split_pairs(splits.train);
  const auto valid_pairs = split_pairs(splits.valid);
  if (train_pairs.empty()) throw InputError("train_deep: no training pairs");

  AdamState adam;
  adam.init(model.params.size(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Rng rng(mix64(cfg.seed, 0x64747261696eULL));

  // Fixed validation batches so epoch losses are comparable.
  std::vector<RecBatch> valid_batches;
  {
    Rng vrng(mix64(cfg.seed, 0x766e6567ULL));
    for (const auto& [h, t] : valid_pairs) {
      RecBatch b;
      b.anchor = h;
      b.positives.push_back(t);
      b.negatives.push_back(sample_negative_partner(kg, h, vrng));
      valid_batches.push_back(b);
    }
  }

  std::vector<std::size_t> order(train_pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> grad(model.params.size(), 0.0);
  std::vector<double> best_params = model.params;
  double best_valid = std::numeric_limits<double>::infinity();
  int best_epoch = 1;

  DeepTrace local;
  DeepTrace& tr = trace ? *trace : local;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      // group this batch's pairs by anchor
      std::map<int, RecBatch> grouped;
      for (std::size_t i = start; i < end; ++i) {
        const auto& [h, t] = train_pairs[order[i]];
        RecBatch& b = grouped[h];
        b.anchor = h;
        b.positives.push_back(t);
        b.negatives.push_back(sample_negative_partner(kg, h, rng));
      }
      std::vector<RecBatch> batch;
      batch.reserve(grouped.size());
      for (auto& [anchor, rb] : grouped) batch.push_back(std::move(rb));
      std::fill(grad.begin(), grad.end(), 0.0);
      const double loss =
          recommendation_loss_grad(model, kg, batch, cfg.l2_weight, &grad);
      if (!std::isfinite(loss)) {
        throw InputError("non-finite deep loss at epoch " + std::to_string(epoch));
      }
      loss_sum += loss;
      ++batches;
      adam.update(model.params, grad, cfg.learning_rate);
    }
    tr.epoch_loss.push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);

    if (!valid_batches.empty()) {
      const double vl = recommendation_loss(model, kg, valid_batches, cfg.l2_weight);
      tr.valid_loss.push_back(vl);
      if (vl < best_valid) {
        best_valid = vl;
        best_params = model.params;
        best_epoch = epoch;
      }
    } else {
      tr.valid_loss.push_back(-1.0);
    }
  }
  if (std::isfinite(best_valid)) {
    model.params = best_params;
    tr.best_epoch = best_epoch;
  } else {
    tr.best_epoch = cfg.epochs;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Recommendation and its evaluation.

// Scores the anchor against every non-excluded entity; ties break toward the
// lower entity index. Returns up to k (entity, score) rows.
inline std::vector<std::pair<int, double>> recommend_top_k(
    const DeepModel& m, const KnowledgeGraph& kg, int anchor, int k,
    const std::unordered_set<int>& exclusions = {}) {
  if (k < 1) throw InputError("recommend_top_k: k must be >= 1");
  std::vector<std::pair<int, double>> scored;
  for (int c = 0; c < static_cast<int>(kg.entity_count()); ++c) {
    if (c == anchor || exclusions.count(c)) continue;
    scored.push_back({c, score_app_pair(m, kg, anchor, c)});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(static_cast<std::size_t>(k));
  return scored;
}

struct RecRow {
  int k = 0;
  double precision = 0.0;
  double recall = 0.0;
  double map_std = 0.0;      // standard MAP@K
  double map_literal = 0.0;  // sum of precision@i / i over the list / |relevant|
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

struct RecReport {
  std::vector<RecRow> rows;   // one per requested K
  std::size_t anchor_count = 0;
};

namespace detail {

// Metrics for one ranked list against a relevant set.
inline void accumulate_rec_row(const std::vector<int>& ranked,
                               const std::set<int>& relevant, int k, RecRow& row) {
  const std::size_t kk = static_cast<std::size_t>(k);
  std::size_t hits = 0;
  double ap = 0.0;
  double literal = 0.0;
  for (std::size_t i = 0; i < std::min(kk, ranked.size()); ++i) {
    if (relevant.count(ranked[i])) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    const double prec_at = static_cast<double>(hits) / static_cast<double>(i + 1);
    literal += prec_at / static_cast<double>(i + 1);
  }
  const std::size_t denom = std::min(relevant.size(), kk);
  row.precision += static_cast<double>(hits) / static_cast<double>(k);
  row.recall += static_cast<double>(hits) / static_cast<double>(relevant.size());
  row.map_std += denom ? ap / static_cast<double>(denom) : 0.0;
  row.map_literal += literal / static_cast<double>(relevant.size());
  row.tp += hits;
  row.fp += kk - hits;
  row.fn += relevant.size() - hits;
}

}  // namespace detail

// Macro-averaged precision/recall/MAP at each K. Relevant sets come from the
// test pairs (undirected); train partners are excluded from the candidate
// list unless they are also test partners.
inline RecReport evaluate_recommendations(
    const DeepModel& m, const KnowledgeGraph& kg,
    const std::vector<std::pair<int, int>>& test_pairs,
    const std::vector<std::pair<int, int>>& train_pairs,
    const std::vector<int>& k_list = {10, 20, 30, 40}) {
  if (test_pairs.empty()) throw InputError("evaluate_recommendations: no test pairs");
  std::map<int, std::set<int>> relevant;
  for (const auto& [h, t] : test_pairs) {
    relevant[h].insert(t);
    relevant[t].insert(h);
  }
  std::map<int, std::set<int>> train_partners;
  for (const auto& [h, t] : train_pairs) {
    train_partners[h].insert(t);
    train_partners[t].insert(h);
  }
  int max_k = 1;
  for (int k : k_list) max_k = std::max(max_k, k);

  RecReport rep;
  rep.rows.resize(k_list.size());
  for (std::size_t i = 0; i < k_list.size(); ++i) rep.rows[i].k = k_list[i];

  for (const auto& [anchor, rel] : relevant) {
    std::unordered_set<int> excl;
    if (auto it = train_partners.find(anchor); it != train_partners.end()) {
      for (int p : it->second) {
        if (!rel.count(p)) excl.insert(p);
      }
    }
    const auto ranked_scored = recommend_top_k(m, kg, anchor, max_k, excl);
    std::vector<int> ranked;
    ranked.reserve(ranked_scored.size());
    for (const auto& [e, s] : ranked_scored) ranked.push_back(e);
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      detail::accumulate_rec_row(ranked, rel, k_list[i], rep.rows[i]);
    }
    ++rep.anchor_count;
  }
  for (RecRow& row : rep.rows) {
    row.precision /= static_cast<double>(rep.anchor_count);
    row.recall /= static_cast<double>(rep.anchor_count);
    row.map_std /= static_cast<double>(rep.anchor_count);
    row.map_literal /= static_cast<double>(rep.anchor_count);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Relation prediction: rank relations for a pair by the shallow TransD
// plausibility of (h, r, t).

inline std::vector<std::pair<int, double>> predict_relations(const KgeModel& shallow,
                                                             int h, int t, int k) {
  if (k > shallow.relation_count) {
    throw InputError("predict_relations: k exceeds the relation count");
  }
  std::vector<std::pair<int, double>> scored;
  for (int r = 0; r < shallow.relation_count; ++r) {
    scored.push_back({r, score_triple(shallow, h, r, t)});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  scored.resize(static_cast<std::size_t>(k));
  return scored;
}

// Precision/recall/MAP over the distinct directed pairs of the test split;
// the truth for a pair is every relation linking it anywhere in the graph.
inline RecReport evaluate_relation_prediction(const KgeModel& shallow,
                                              const KnowledgeGraph& kg,
                                              const std::vector<Triple>& test,
                                              const std::vector<int>& k_list = {1, 3, 5, 7}) {
  if (test.empty()) throw InputError("evaluate_relation_prediction: empty test set");
  const auto pairs = split_pairs(test);
  RecReport rep;
  rep.rows.resize(k_list.size());
  for (std::size_t i = 0; i < k_list.size(); ++i) rep.rows[i].k = k_list[i];
  int max_k = 1;
  for (int k : k_list) max_k = std::min(std::max(max_k, k), shallow.relation_count);

  for (const auto& [h, t] : pairs) {
    std::set<int> truth;
    for (int r = 0; r < static_cast<int>(kg.relation_count()); ++r) {
      if (kg.has_triple(h, r, t)) truth.insert(r);
    }
    if (truth.empty()) continue;
    const auto ranked_scored = predict_relations(shallow, h, t, max_k);
    std::vector<int> ranked;
    for (const auto& [r, s] : ranked_scored) ranked.push_back(r);
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      detail::accumulate_rec_row(ranked, truth, std::min(k_list[i], max_k), rep.rows[i]);
    }
    ++rep.anchor_count;
  }
  if (rep.anchor_count == 0) throw InputError("no test pair has a true relation");
  for (RecRow& row : rep.rows) {
    row.precision /= static_cast<double>(rep.anchor_count);
    row.recall /= static_cast<double>(rep.anchor_count);
    row.map_std /= static_cast<double>(rep.anchor_count);
    row.map_literal /= static_cast<double>(rep.anchor_count);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Inference timing.

struct TimingReport {
  std::vector<double> times_ms;
  double mean_ms = 0.0;
};

// The mean is exactly sum / N of the recorded values.
inline TimingReport timing_from_times(std::vector<double> times_ms) {
  if (times_ms.empty()) throw InputError("timing: no samples");
  TimingReport rep;
  rep.times_ms = std::move(times_ms);
  double sum = 0.0;
  for (double t : rep.times_ms) sum += t;
  rep.mean_ms = sum / static_cast<double>(rep.times_ms.size());
  return rep;
}

// Wall-times one full inference pass per test entity, strictly sequential.
template <typename PerEntityFn>
TimingReport measure_inference(const std::vector<int>& entities, PerEntityFn&& fn) {
  if (entities.empty()) throw InputError("measure_inference: empty test set");
  std::vector<double> times;
  times.reserve(entities.size());
  for (int e : entities) {
    const auto start = std::chrono::steady_clock::now();
    fn(e);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  return timing_from_times(std::move(times));
}

// ---------------------------------------------------------------------------
// Deep checkpoints: the trainable blocks plus a reference to the shallow
// checkpoint they fuse with.

inline void save_deep_model(const DeepModel& m, const std::string& path,
                            const std::string& shallow_ref,
                            const std::map<std::string, std::string>& extra = {}) {
  std::string out = "sappkg-deep-checkpoint v1\n";
  out += "shallow " + shallow_ref + "\n";
  out += "entities " + std::to_string(m.entity_count) + "\n";
  out += "relations " + std::to_string(m.relation_count) + "\n";
  out += "deep_dim " + std::to_string(m.deep_dim) + "\n";
  out += "depth " + std::to_string(m.depth) + "\n";
  out += "sample_size " + std::to_string(m.sample_size) + "\n";
  out += std::string("relu_hidden ") + (m.relu_hidden ? "1" : "0") + "\n";
  out += "sampling_seed " + std::to_string(m.sampling_seed) + "\n";
  for (const auto& [k, v] : extra) out += k + " " + v + "\n";
  for (const auto& b : m.blocks()) {
    out += "block " + b.name + " " + std::to_string(b.count) + "\n";
  }
  out += "end\n";
  for (double v : m.params) detail::append_f64_le(out, v);
  write_file(path, out);
}

inline DeepModel load_deep_model(const std::string& path,
                                 std::map<std::string, std::string>* fields_out = nullptr) {
  const std::string bytes = read_file(path);
  auto ct = detail::parse_checkpoint_header(bytes, "sappkg-deep-checkpoint v1");
  DeepModel m;
  const std::string shallow_ref = ct.fields.at("shallow");
  std::filesystem::path sp(shallow_ref);
  if (sp.is_relative()) sp = std::filesystem::path(path).parent_path() / sp;
  m.shallow = load_model(sp.string());
  m.entity_count = std::stoi(ct.fields.at("entities"));
  m.relation_count = std::stoi(ct.fields.at("relations"));
  m.deep_dim = std::stoi(ct.fields.at("deep_dim"));
  m.depth = std::stoi(ct.fields.at("depth"));
  m.sample_size = std::stoi(ct.fields.at("sample_size"));
  m.relu_hidden = ct.fields.at("relu_hidden") == "1";
  m.sampling_seed = std::stoull(ct.fields.at("sampling_seed"));
  m.params = detail::read_block_data(bytes, ct);
  if (m.params.size() != m.param_count()) {
    throw InputError("deep checkpoint: parameter size mismatch");
  }
  if (fields_out) *fields_out = ct.fields;
  return m;
}

}  // namespace sappkg
