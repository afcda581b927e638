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
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "sappkg/checkpoint.hpp"
#include "sappkg/graph.hpp"
#include "sappkg/kge.hpp"
#include "sappkg/kge_train.hpp"
#include "sappkg/rng.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// Deep recommender: a frozen shallow store (TransD entity vectors) fused
// with graph-convolution embeddings. The trainable parameters are the deep
// entity table, the relation embeddings the attention reads, and the
// per-layer transforms.
class DeepModel {
 public:
  KgeModel shallow;  // trained TransD model; its "ent" block is the shallow half
  int entity_count = 0;
  int relation_count = 0;
  int deep_dim = 0;        // d_d
  int depth = 1;           // K
  int sample_size = 7;     // S, neighbors drawn with replacement when |N| > S
  bool relu_hidden = true; // sigma: ReLU for layers below K, identity at K
  std::uint64_t sampling_seed = 0;
  std::vector<double> params;  // ent_d, rel_d, layer_w, layer_b

  struct Block {
    std::string name;
    std::size_t offset;
    std::size_t count;
  };

  std::vector<Block> blocks() const {
    const auto e = static_cast<std::size_t>(entity_count);
    const auto r = static_cast<std::size_t>(relation_count);
    const auto d = static_cast<std::size_t>(deep_dim);
    const auto k = static_cast<std::size_t>(depth);
    std::vector<Block> out;
    std::size_t off = 0;
    auto add = [&](const char* name, std::size_t count) {
      out.push_back({name, off, count});
      off += count;
    };
    add("ent_d", e * d);
    add("rel_d", r * d);
    add("layer_w", k * d * 2 * d);  // each layer maps concat(2d) -> d
    add("layer_b", k * d);
    return out;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks()) n += b.count;
    return n;
  }
  std::size_t block_offset(const char* name) const {
    for (const auto& b : blocks()) {
      if (b.name == name) return b.offset;
    }
    throw InputError(std::string("deep model: no block '") + name + "'");
  }
  const double* block(const char* name) const { return params.data() + block_offset(name); }
  double* block(const char* name) { return params.data() + block_offset(name); }

  const double* deep_embedding(int e) const {
    return block("ent_d") + static_cast<std::size_t>(e) * static_cast<std::size_t>(deep_dim);
  }
  const double* relation_embedding(int r) const {
    return block("rel_d") + static_cast<std::size_t>(r) * static_cast<std::size_t>(deep_dim);
  }
  const double* layer_w(int k) const {  // 1-based layer index
    return block("layer_w") + static_cast<std::size_t>(k - 1) *
                                  static_cast<std::size_t>(deep_dim) * 2 *
                                  static_cast<std::size_t>(deep_dim);
  }
  const double* layer_b(int k) const {
    return block("layer_b") +
           static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(deep_dim);
  }

  int shallow_dim() const { return shallow.dim; }
  int fused_dim() const { return shallow.dim + deep_dim; }
  const double* shallow_embedding(int e) const {
    return shallow.block("ent") +
           static_cast<std::size_t>(e) * static_cast<std::size_t>(shallow.dim);
  }
};

struct DeepConfig {
  int deep_dim = 16;
  int depth = 1;
  int sample_size = 7;
  int batch_size = 10;
  double learning_rate = 0.005;
  double l2_weight = 1e-7;
  int epochs = 200;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

  void validate() const {
    if (deep_dim < 1) throw InputError("deep_dim must be >= 1");
    if (depth < 1) throw InputError("depth must be >= 1");
    if (sample_size < 1) throw InputError("sample_size must be >= 1");
    if (batch_size < 1) throw InputError("batch_size must be >= 1");
    if (epochs < 1) throw InputError("epochs must be >= 1");
  }
};

inline DeepModel init_deep_model(const KgeModel& shallow,
                                 const KnowledgeGraph& kg,
                                 const DeepConfig& cfg) {
  cfg.validate();
  if (shallow.kind != ModelKind::kTransD) {
    throw InputError("deep model expects a TransD shallow store, got " +
                     std::string(model_kind_name(shallow.kind)));
  }
  if (shallow.entity_count != static_cast<int>(kg.entity_count()) ||
      shallow.relation_count != static_cast<int>(kg.relation_count())) {
    throw InputError("shallow model does not match the graph");
  }
  DeepModel m;
  m.shallow = shallow;
  m.entity_count = static_cast<int>(kg.entity_count());
  m.relation_count = static_cast<int>(kg.relation_count());
  m.deep_dim = cfg.deep_dim;
  m.depth = cfg.depth;
  m.sample_size = cfg.sample_size;
  m.sampling_seed = mix64(cfg.seed, 0x7361706dULL);
  m.params.resize(m.param_count());
  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.deep_dim));
  Rng rng(mix64(cfg.seed, 0x64656570ULL));
  for (double& p : m.params) p = rng.uniform(-bound, bound);
  return m;
}

// ---------------------------------------------------------------------------
// Attention and aggregation primitives.

// Softmax attention over a neighborhood: logit per triple is the inner
// product of the anchor embedding with the triple's relation embedding.
inline std::vector<double> attention_weights(const double* anchor_embedding,
                                             const std::vector<int>& triple_relations,
                                             const DeepModel& m) {
  if (triple_relations.empty()) {
    throw InputError("attention_weights: empty neighborhood");
  }
  const int d = m.deep_dim;
  std::vector<double> logits(triple_relations.size());
  for (std::size_t i = 0; i < triple_relations.size(); ++i) {
    const double* rel = m.relation_embedding(triple_relations[i]);
    double dot = 0.0;
    for (int j = 0; j < d; ++j) dot += anchor_embedding[j] * rel[j];
    logits[i] = dot;
  }
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(logits[i] - mx);
    z += w[i];
  }
  for (double& x : w) x /= z;
  return w;
}

// Fixed-size neighborhood draw: everything when |N| <= S (the exact
// computation), otherwise S draws with replacement.
inline std::vector<int> sample_neighborhood(const KnowledgeGraph& kg, int node,
                                            int sample_size, Rng& rng) {
  const auto& nbrs = kg.neighbors(node);
  std::vector<int> picks;
  if (nbrs.empty()) return picks;
  if (static_cast<int>(nbrs.size()) <= sample_size) {
    for (std::size_t i = 0; i < nbrs.size(); ++i) picks.push_back(static_cast<int>(i));
    return picks;
  }
  for (int i = 0; i < sample_size; ++i) {
    picks.push_back(static_cast<int>(rng.below(nbrs.size())));
  }
  return picks;
}

// Attention-weighted sum of sampled tail embeddings, anchored at `anchor`.
// Isolated nodes aggregate to the zero vector.
inline std::vector<double> aggregate_neighborhood(const DeepModel& m,
                                                  const KnowledgeGraph& kg,
                                                  int anchor, int node, Rng& rng) {
  const int d = m.deep_dim;
  std::vector<double> agg(static_cast<std::size_t>(d), 0.0);
  const auto picks = sample_neighborhood(kg, node, m.sample_size, rng);
  if (picks.empty()) return agg;
  const auto& nbrs = kg.neighbors(node);
  std::vector<int> rels(picks.size());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    rels[i] = nbrs[static_cast<std::size_t>(picks[i])].first;
  }
  const auto w = attention_weights(m.deep_embedding(anchor), rels, m);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const double* tail = m.deep_embedding(nbrs[static_cast<std::size_t>(picks[i])].second);
    for (int j = 0; j < d; ++j) agg[static_cast<std::size_t>(j)] += w[i] * tail[j];
  }
  return agg;
}

// sigma(W . (v || v_N) + b); identity sigma when relu == false.
inline std::vector<double> layer_update(const std::vector<double>& v,
                                        const std::vector<double>& v_n,
                                        const double* w, const double* b,
                                        int dim, bool relu) {
  if (static_cast<int>(v.size()) != dim || static_cast<int>(v_n.size()) != dim) {
    throw InputError("layer_update: dimension mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    double acc = b[i];
    for (int j = 0; j < dim; ++j) {
      acc += w[i * 2 * dim + j] * v[static_cast<std::size_t>(j)];
      acc += w[i * 2 * dim + dim + j] * v_n[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = relu ? std::max(0.0, acc) : acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Receptive-field propagation with a tape for backpropagation.

struct PropEntry {
  int node = 0;
  int layer = 0;                 // 1-based; layer K is the root
  std::vector<int> pick_rel;     // sampled triples: relation and tail
  std::vector<int> pick_tail;
  std::vector<double> weights;   // attention over the sample
  std::vector<double> input;     // concat(prev, agg), 2 d_d
  std::vector<double> pre;       // W input + b
  std::vector<double> out;       // sigma(pre)
  int self_child = -1;           // entry of (node, layer-1), -1 when layer == 1
  std::vector<int> tail_child;   // entries of (tail, layer-1), -1 when layer == 1
};

struct PropTape {
  int anchor = 0;
  std::vector<PropEntry> entries;  // children precede parents
  int root = -1;

  const std::vector<double>& root_out() const { return entries[static_cast<std::size_t>(root)].out; }
};

namespace detail {

inline int propagate_node(const DeepModel& m, const KnowledgeGraph& kg,
                          int anchor, int node, int layer, Rng& rng,
                          PropTape& tape,
                          std::map<std::pair<int, int>, int>& memo) {
  const auto key = std::make_pair(node, layer);
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  const int d = m.deep_dim;
  PropEntry e;
  e.node = node;
  e.layer = layer;
  e.self_child = layer > 1
                     ? propagate_node(m, kg, anchor, node, layer - 1, rng, tape, memo)
                     : -1;

  const auto picks = sample_neighborhood(kg, node, m.sample_size, rng);
  const auto& nbrs = kg.neighbors(node);
  for (int p : picks) {
    e.pick_rel.push_back(nbrs[static_cast<std::size_t>(p)].first);
    e.pick_tail.push_back(nbrs[static_cast<std::size_t>(p)].second);
  }
  for (int tail : e.pick_tail) {
    e.tail_child.push_back(
        layer > 1 ? propagate_node(m, kg, anchor, tail, layer - 1, rng, tape, memo)
                  : -1);
  }

  if (!e.pick_rel.empty()) {
    e.weights = attention_weights(m.deep_embedding(anchor), e.pick_rel, m);
  }

  // prev representation of this node and of the sampled tails
  auto repr_of = [&](int child, int ent) -> const double* {
    return child >= 0 ? tape.entries[static_cast<std::size_t>(child)].out.data()
                      : m.deep_embedding(ent);
  };
  const double* prev = repr_of(e.self_child, node);
  std::vector<double> agg(static_cast<std::size_t>(d), 0.0);
  for (std::size_t i = 0; i < e.pick_tail.size(); ++i) {
    const double* tail = repr_of(e.tail_child[i], e.pick_tail[i]);
    for (int j = 0; j < d; ++j) agg[static_cast<std::size_t>(j)] += e.weights[i] * tail[j];
  }
  e.input.resize(static_cast<std::size_t>(2 * d));
  for (int j = 0; j < d; ++j) {
    e.input[static_cast<std::size_t>(j)] = prev[j];
    e.input[static_cast<std::size_t>(d + j)] = agg[static_cast<std::size_t>(j)];
  }
  const double* w = m.layer_w(layer);
  const double* b = m.layer_b(layer);
  const bool relu = m.relu_hidden && layer < m.depth;
  e.pre.resize(static_cast<std::size_t>(d));
  e.out.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    double acc = b[i];
    for (int j = 0; j < 2 * d; ++j) acc += w[i * 2 * d + j] * e.input[static_cast<std::size_t>(j)];
    e.pre[static_cast<std::size_t>(i)] = acc;
    e.out[static_cast<std::size_t>(i)] = relu ? std::max(0.0, acc) : acc;
  }
  tape.entries.push_back(std::move(e));
  const int idx = static_cast<int>(tape.entries.size()) - 1;
  memo[key] = idx;
  return idx;
}

}  // namespace detail

// Depth-K representation of the anchor. Deterministic given the rng seed;
// each (node, layer) is sampled once per propagation.
inline PropTape propagate(const DeepModel& m, const KnowledgeGraph& kg,
                          int anchor, Rng& rng) {
  PropTape tape;
  tape.anchor = anchor;
  std::map<std::pair<int, int>, int> memo;
  tape.root = detail::propagate_node(m, kg, anchor, anchor, m.depth, rng, tape, memo);
  return tape;
}

// Accumulates d(loss)/d(params) given d(loss)/d(root output). Walks the tape
// in reverse: through the layer transform, then splits into the node's own
// representation and the attention-weighted neighbors.
inline void propagate_backward(const DeepModel& m, const PropTape& tape,
                               const std::vector<double>& root_grad,
                               std::vector<double>& grad) {
  const int d = m.deep_dim;
  const std::size_t ent_off = m.block_offset("ent_d");
  const std::size_t rel_off = m.block_offset("rel_d");
  const std::size_t w_off = m.block_offset("layer_w");
  const std::size_t b_off = m.block_offset("layer_b");
  const double* anchor_emb = m.deep_embedding(tape.anchor);

  std::vector<std::vector<double>> entry_grad(
      tape.entries.size(), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  entry_grad[static_cast<std::size_t>(tape.root)] = root_grad;

  for (std::size_t idx = tape.entries.size(); idx-- > 0;) {
    const PropEntry& e = tape.entries[idx];
    const auto& g = entry_grad[idx];
    bool nonzero = false;
    for (double v : g) nonzero = nonzero || v != 0.0;
    if (!nonzero) continue;

    const bool relu = m.relu_hidden && e.layer < m.depth;
    std::vector<double> dpre(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      dpre[static_cast<std::size_t>(i)] =
          relu && e.pre[static_cast<std::size_t>(i)] <= 0.0 ? 0.0
                                                            : g[static_cast<std::size_t>(i)];
    }
    const double* w = m.layer_w(e.layer);
    double* gw = grad.data() + w_off +
                 static_cast<std::size_t>(e.layer - 1) * static_cast<std::size_t>(d) * 2 *
                     static_cast<std::size_t>(d);
    double* gb = grad.data() + b_off +
                 static_cast<std::size_t>(e.layer - 1) * static_cast<std::size_t>(d);
    std::vector<double> dinput(static_cast<std::size_t>(2 * d), 0.0);
    for (int i = 0; i < d; ++i) {
      const double di = dpre[static_cast<std::size_t>(i)];
      if (di == 0.0) continue;
      gb[i] += di;
      for (int j = 0; j < 2 * d; ++j) {
        gw[i * 2 * d + j] += di * e.input[static_cast<std::size_t>(j)];
        dinput[static_cast<std::size_t>(j)] += di * w[i * 2 * d + j];
      }
    }
    // first half: the node's previous representation
    if (e.self_child >= 0) {
      auto& cg = entry_grad[static_cast<std::size_t>(e.self_child)];
      for (int j = 0; j < d; ++j) cg[static_cast<std::size_t>(j)] += dinput[static_cast<std::size_t>(j)];
    } else {
      double* ge = grad.data() + ent_off +
                   static_cast<std::size_t>(e.node) * static_cast<std::size_t>(d);
      for (int j = 0; j < d; ++j) ge[j] += dinput[static_cast<std::size_t>(j)];
    }
    // second half: the aggregated neighbors
    if (e.pick_tail.empty()) continue;
    const double* dagg = dinput.data() + d;
    auto tail_repr = [&](std::size_t i) -> const double* {
      const int child = e.tail_child[i];
      return child >= 0 ? tape.entries[static_cast<std::size_t>(child)].out.data()
                        : m.deep_embedding(e.pick_tail[i]);
    };
    std::vector<double> dw(e.pick_tail.size(), 0.0);
    double wbar = 0.0;
    for (std::size_t i = 0; i < e.pick_tail.size(); ++i) {
      const double* tr = tail_repr(i);
      for (int j = 0; j < d; ++j) dw[i] += dagg[j] * tr[j];
      wbar += e.weights[i] * dw[i];
    }
    for (std::size_t i = 0; i < e.pick_tail.size(); ++i) {
      // tail representation gradient
      if (e.tail_child[i] >= 0) {
        auto& cg = entry_grad[static_cast<std::size_t>(e.tail_child[i])];
        for (int j = 0; j < d; ++j) {
          cg[static_cast<std::size_t>(j)] += e.weights[i] * dagg[j];
        }
      } else {
        double* ge = grad.data() + ent_off +
                     static_cast<std::size_t>(e.pick_tail[i]) * static_cast<std::size_t>(d);
        for (int j = 0; j < d; ++j) ge[j] += e.weights[i] * dagg[j];
      }
      // attention gradient: softmax backprop into relation and anchor embeddings
      const double dlogit = e.weights[i] * (dw[i] - wbar);
      if (dlogit != 0.0) {
        double* gr = grad.data() + rel_off +
                     static_cast<std::size_t>(e.pick_rel[i]) * static_cast<std::size_t>(d);
        double* ga = grad.data() + ent_off +
                     static_cast<std::size_t>(tape.anchor) * static_cast<std::size_t>(d);
        const double* rel = m.relation_embedding(e.pick_rel[i]);
        for (int j = 0; j < d; ++j) {
          gr[j] += dlogit * anchor_emb[j];
          ga[j] += dlogit * rel[j];
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Fusion and pair scoring.

inline std::vector<double> fuse_embeddings(const std::vector<double>& shallow,
                                           const std::vector<double>& deep) {
  std::vector<double> fused;
  fused.reserve(shallow.size() + deep.size());
  fused.insert(fused.end(), shallow.begin(), shallow.end());
  fused.insert(fused.end(), deep.begin(), deep.end());
  return fused;
}

struct PairForward {
  PropTape tape_a, tape_b;   // receptive fields of the two apps
  std::vector<double> fused_a, fused_b;
  double raw = 0.0;          // inner product of fused vectors
  double y = 0.0;            // sigmoid(raw)
};

// Receptive fields are seeded per unordered pair, so score(a, b) and
// score(b, a) sample identically and the score is symmetric.
inline PairForward score_pair_forward(const DeepModel& m, const KnowledgeGraph& kg,
                                      int a, int b) {
  const int lo = std::min(a, b);
  const int hi = std::max(a, b);
  Rng rng(mix64(m.sampling_seed,
                (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint64_t>(hi)));
  PairForward pf;
  const PropTape lo_tape = propagate(m, kg, lo, rng);
  const PropTape hi_tape = lo == hi ? lo_tape : propagate(m, kg, hi, rng);
  const PropTape& ta = a == lo ? lo_tape : hi_tape;
  const PropTape& tb = b == lo ? lo_tape : hi_tape;
  auto fuse = [&](int e, const PropTape& t) {
    std::vector<double> sh(m.shallow_embedding(e), m.shallow_embedding(e) + m.shallow_dim());
    return fuse_embeddings(sh, t.root_out());
  };
  pf.fused_a = fuse(a, ta);
  pf.fused_b = fuse(b, tb);
  pf.tape_a = ta;
  pf.tape_b = tb;
  pf.raw = 0.0;
  for (std::size_t j = 0; j < pf.fused_a.size(); ++j) pf.raw += pf.fused_a[j] * pf.fused_b[j];
  // clamped away from {0, 1} so the score stays an interior probability even
  // when the inner product saturates the sigmoid in double precision
  pf.y = std::clamp(sigmoid(pf.raw), 1e-12, 1.0 - 1e-12);
  return pf;
}

inline double score_app_pair(const DeepModel& m, const KnowledgeGraph& kg, int a, int b) {
  return score_pair_forward(m, kg, a, b).y;
}

}  // namespace sappkg
