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

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "sappkg/graph.hpp"
#include "sappkg/kge.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// Known-true triples used by the "Filter" setting. Because the similarity
// relations are semantically symmetric while storage is directed, membership
// checks both orientations.
class FilterIndex {
 public:
  FilterIndex() = default;

  void add(const std::vector<Triple>& triples) {
    for (const Triple& t : triples) set_.insert(pack_triple(t.head, t.relation, t.tail));
  }

  bool contains(int h, int r, int t) const {
    return set_.count(pack_triple(h, r, t)) > 0 ||
           set_.count(pack_triple(t, r, h)) > 0;
  }

  std::size_t size() const { return set_.size(); }

 private:
  std::unordered_set<std::uint64_t> set_;
};

inline FilterIndex make_filter(const SplitSet& splits) {
  FilterIndex f;
  f.add(splits.train);
  f.add(splits.valid);
  f.add(splits.test);
  return f;
}

enum class CorruptionSide { kTail, kHead };

struct RankResult {
  Triple query;
  CorruptionSide side = CorruptionSide::kTail;
  long raw_rank = 1;
  long filtered_rank = 1;
};

// Tie-average rank of the truth inside a score table: 1 + #strictly-better +
// round-half-up(#ties / 2). Candidates flagged in `removed` do not count
// (the truth itself is never removed).
inline long rank_from_scores(const std::vector<double>& scores, int truth,
                             const std::vector<char>& removed) {
  const double s = scores[static_cast<std::size_t>(truth)];
  long better = 0, ties = 0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (static_cast<int>(c) == truth || removed[c]) continue;
    if (scores[c] > s) ++better;
    else if (scores[c] == s) ++ties;
  }
  return 1 + better + (ties + 1) / 2;
}

// Scores every entity in the open slot of the query and ranks the truth,
// raw and filtered. `scorer(h, r, t)` must be higher-is-better.
template <typename ScoreFn>
RankResult rank_candidates(ScoreFn&& scorer, const Triple& query,
                           CorruptionSide side, int entity_count,
                           const FilterIndex& filter) {
  std::vector<double> scores(static_cast<std::size_t>(entity_count));
  std::vector<char> removed(static_cast<std::size_t>(entity_count), 0);
  std::vector<char> none(static_cast<std::size_t>(entity_count), 0);
  int truth;
  if (side == CorruptionSide::kTail) {
    truth = query.tail;
    for (int c = 0; c < entity_count; ++c) {
      scores[static_cast<std::size_t>(c)] = scorer(query.head, query.relation, c);
      if (c != truth && filter.contains(query.head, query.relation, c)) {
        removed[static_cast<std::size_t>(c)] = 1;
      }
    }
  } else {
    truth = query.head;
    for (int c = 0; c < entity_count; ++c) {
      scores[static_cast<std::size_t>(c)] = scorer(c, query.relation, query.tail);
      if (c != truth && filter.contains(c, query.relation, query.tail)) {
        removed[static_cast<std::size_t>(c)] = 1;
      }
    }
  }
  RankResult rr;
  rr.query = query;
  rr.side = side;
  rr.raw_rank = rank_from_scores(scores, truth, none);
  rr.filtered_rank = rank_from_scores(scores, truth, removed);
  return rr;
}

// Link-prediction metrics over a query set, raw and filtered variants.
struct EvalReport {
  double mr = 0.0, mrr = 0.0;
  double hits1 = 0.0, hits3 = 0.0, hits5 = 0.0, hits10 = 0.0;
  double filtered_mr = 0.0, filtered_mrr = 0.0;
  double filtered_hits1 = 0.0, filtered_hits3 = 0.0, filtered_hits5 = 0.0,
         filtered_hits10 = 0.0;
  std::size_t query_count = 0;
};

inline EvalReport report_from_ranks(const std::vector<RankResult>& ranks) {
  EvalReport rep;
  rep.query_count = ranks.size();
  if (ranks.empty()) return rep;
  const double q = static_cast<double>(ranks.size());
  for (const RankResult& r : ranks) {
    rep.mr += static_cast<double>(r.raw_rank);
    rep.mrr += 1.0 / static_cast<double>(r.raw_rank);
    rep.hits1 += r.raw_rank <= 1;
    rep.hits3 += r.raw_rank <= 3;
    rep.hits5 += r.raw_rank <= 5;
    rep.hits10 += r.raw_rank <= 10;
    rep.filtered_mr += static_cast<double>(r.filtered_rank);
    rep.filtered_mrr += 1.0 / static_cast<double>(r.filtered_rank);
    rep.filtered_hits1 += r.filtered_rank <= 1;
    rep.filtered_hits3 += r.filtered_rank <= 3;
    rep.filtered_hits5 += r.filtered_rank <= 5;
    rep.filtered_hits10 += r.filtered_rank <= 10;
  }
  rep.mr /= q;
  rep.mrr /= q;
  rep.hits1 /= q;
  rep.hits3 /= q;
  rep.hits5 /= q;
  rep.hits10 /= q;
  rep.filtered_mr /= q;
  rep.filtered_mrr /= q;
  rep.filtered_hits1 /= q;
  rep.filtered_hits3 /= q;
  rep.filtered_hits5 /= q;
  rep.filtered_hits10 /= q;
  return rep;
}

// Both corruption directions per test triple, |Q| = 2 |test|. Query order is
// fixed (tail then head, test order), which keeps metric sums bit-stable.
template <typename ScoreFn>
EvalReport evaluate_link_prediction(ScoreFn&& scorer,
                                    const std::vector<Triple>& test,
                                    int entity_count, const FilterIndex& filter,
                                    std::vector<RankResult>* ranks_out = nullptr) {
  if (test.empty()) throw InputError("evaluate_link_prediction: empty test set");
  std::vector<RankResult> ranks;
  ranks.reserve(2 * test.size());
  for (const Triple& t : test) {
    ranks.push_back(rank_candidates(scorer, t, CorruptionSide::kTail, entity_count, filter));
    ranks.push_back(rank_candidates(scorer, t, CorruptionSide::kHead, entity_count, filter));
  }
  if (ranks_out) *ranks_out = ranks;
  return report_from_ranks(ranks);
}

inline EvalReport evaluate_link_prediction(const KgeModel& model,
                                           const std::vector<Triple>& test,
                                           const FilterIndex& filter,
                                           std::vector<RankResult>* ranks_out = nullptr) {
  return evaluate_link_prediction(
      [&](int h, int r, int t) { return score_triple(model, h, r, t); }, test,
      model.entity_count, filter, ranks_out);
}

}  // namespace sappkg
