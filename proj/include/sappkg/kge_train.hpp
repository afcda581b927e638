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
#include <limits>
#include <string>
#include <vector>

#include "sappkg/graph.hpp"
#include "sappkg/kge.hpp"
#include "sappkg/kge_eval.hpp"
#include "sappkg/rng.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// ---------------------------------------------------------------------------
// Negative sampling.

// Replaces head or tail (uniform coin) with a different entity; corrupted
// self-loops are never produced. With filter_true, resampling avoids
// known-true facts, falling back to exhaustive enumeration (and then to the
// other side) before giving up.
inline Triple corrupt_triple(const Triple& triple, const KnowledgeGraph& kg,
                             Rng& rng, bool filter_true = false) {
  const int n = static_cast<int>(kg.entity_count());
  if (n < 2) throw InputError("corrupt_triple: need at least 2 entities");

  auto attempt = [&](CorruptionSide side) -> std::optional<Triple> {
    const int original = side == CorruptionSide::kTail ? triple.tail : triple.head;
    const int other = side == CorruptionSide::kTail ? triple.head : triple.tail;
    auto ok = [&](int c) {
      if (c == original || c == other) return false;
      if (!filter_true) return true;
      const int h = side == CorruptionSide::kTail ? triple.head : c;
      const int t = side == CorruptionSide::kTail ? c : triple.tail;
      return !kg.has_triple(h, triple.relation, t);
    };
    for (int tries = 0; tries < 64; ++tries) {
      const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (ok(c)) {
        return side == CorruptionSide::kTail
                   ? Triple{triple.head, triple.relation, c}
                   : Triple{c, triple.relation, triple.tail};
      }
    }
    std::vector<int> valid;
    for (int c = 0; c < n; ++c) {
      if (ok(c)) valid.push_back(c);
    }
    if (valid.empty()) return std::nullopt;
    const int c = valid[rng.below(valid.size())];
    return side == CorruptionSide::kTail
               ? Triple{triple.head, triple.relation, c}
               : Triple{c, triple.relation, triple.tail};
  };

  const CorruptionSide first =
      rng.coin() ? CorruptionSide::kHead : CorruptionSide::kTail;
  const CorruptionSide second = first == CorruptionSide::kHead
                                    ? CorruptionSide::kTail
                                    : CorruptionSide::kHead;
  if (auto t = attempt(first)) return *t;
  if (auto t = attempt(second)) return *t;
  throw InputError("corrupt_triple: no valid corruption exists");
}

// ---------------------------------------------------------------------------
// Loss families.

enum class LossFamily {
  kPairwiseMargin,
  kPointwiseLogistic,
  kMulticlass,
  kSelfAdversarial,  // margin variant with softmax-weighted negatives
};

inline const char* loss_family_name(LossFamily f) {
  switch (f) {
    case LossFamily::kPairwiseMargin: return "margin";
    case LossFamily::kPointwiseLogistic: return "logistic";
    case LossFamily::kMulticlass: return "multiclass";
    case LossFamily::kSelfAdversarial: return "self_adversarial";
  }
  return "?";
}

inline LossFamily loss_family_from_name(const std::string& s) {
  if (s == "margin") return LossFamily::kPairwiseMargin;
  if (s == "logistic") return LossFamily::kPointwiseLogistic;
  if (s == "multiclass") return LossFamily::kMulticlass;
  if (s == "self_adversarial") return LossFamily::kSelfAdversarial;
  throw InputError("unknown loss family '" + s + "'");
}

// Grouping from the model-family taxonomy: translation/rotation/tensor
// models pair with margin ranking, the product models with logistic terms,
// TuckER with a multiclass objective.
inline LossFamily default_loss_family(ModelKind kind) {
  switch (kind) {
    case ModelKind::kComplEx:
    case ModelKind::kDistMult:
    case ModelKind::kSimplE: return LossFamily::kPointwiseLogistic;
    case ModelKind::kTuckEr: return LossFamily::kMulticlass;
    default: return LossFamily::kPairwiseMargin;
  }
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> dpos;               // d loss / d positive score
  std::vector<std::vector<double>> dneg;  // d loss / d negative scores
};

// Loss over a batch of positive scores with one negative list each.
// margin      mean over (pos, neg) pairs of max(0, gamma - s+ + s-)
// logistic    mean over pairs of softplus(-s+) + softplus(s-)
// multiclass  mean over positives of cross-entropy against {pos} + negs
// self-adv    margin sigmoids with softmax(adv_temperature * s-) weights;
//             the weights are differentiated exactly, not detached
inline LossGrad batch_loss_grad(LossFamily family,
                                const std::vector<double>& pos,
                                const std::vector<std::vector<double>>& neg,
                                double margin, double adv_temperature = 1.0) {
  if (pos.empty()) throw InputError("batch_loss: empty batch");
  if (neg.size() != pos.size()) {
    throw InputError("batch_loss: need one negative list per positive");
  }
  LossGrad out;
  out.dpos.assign(pos.size(), 0.0);
  out.dneg.resize(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) out.dneg[i].assign(neg[i].size(), 0.0);

  switch (family) {
    case LossFamily::kPairwiseMargin: {
      std::size_t pairs = 0;
      for (const auto& ns : neg) pairs += ns.size();
      if (pairs == 0) throw InputError("batch_loss: no negatives");
      const double inv = 1.0 / static_cast<double>(pairs);
      for (std::size_t i = 0; i < pos.size(); ++i) {
        for (std::size_t j = 0; j < neg[i].size(); ++j) {
          const double v = margin - pos[i] + neg[i][j];
          if (v > 0.0) {
            out.loss += v * inv;
            out.dpos[i] -= inv;
            out.dneg[i][j] += inv;
          }
        }
      }
      return out;
    }
    case LossFamily::kPointwiseLogistic: {
      std::size_t pairs = 0;
      for (const auto& ns : neg) pairs += ns.size();
      if (pairs == 0) throw InputError("batch_loss: no negatives");
      const double inv = 1.0 / static_cast<double>(pairs);
      for (std::size_t i = 0; i < pos.size(); ++i) {
        for (std::size_t j = 0; j < neg[i].size(); ++j) {
          out.loss += (softplus(-pos[i]) + softplus(neg[i][j])) * inv;
          out.dpos[i] -= sigmoid(-pos[i]) * inv;
          out.dneg[i][j] += sigmoid(neg[i][j]) * inv;
        }
      }
      return out;
    }
    case LossFamily::kMulticlass: {
      const double inv = 1.0 / static_cast<double>(pos.size());
      for (std::size_t i = 0; i < pos.size(); ++i) {
        if (neg[i].empty()) throw InputError("batch_loss: no negatives");
        double mx = pos[i];
        for (double s : neg[i]) mx = std::max(mx, s);
        double z = std::exp(pos[i] - mx);
        for (double s : neg[i]) z += std::exp(s - mx);
        const double logz = std::log(z) + mx;
        out.loss += (logz - pos[i]) * inv;
        out.dpos[i] += (std::exp(pos[i] - logz) - 1.0) * inv;
        for (std::size_t j = 0; j < neg[i].size(); ++j) {
          out.dneg[i][j] += std::exp(neg[i][j] - logz) * inv;
        }
      }
      return out;
    }
    case LossFamily::kSelfAdversarial: {
      const double inv = 1.0 / static_cast<double>(pos.size());
      for (std::size_t i = 0; i < pos.size(); ++i) {
        if (neg[i].empty()) throw InputError("batch_loss: no negatives");
        out.loss += -std::log(std::max(sigmoid(margin + pos[i]), 1e-300)) * inv;
        out.dpos[i] += (sigmoid(margin + pos[i]) - 1.0) * inv;
        // softmax weights over this positive's negatives
        const auto& ns = neg[i];
        double mx = -std::numeric_limits<double>::infinity();
        for (double s : ns) mx = std::max(mx, adv_temperature * s);
        std::vector<double> w(ns.size());
        double z = 0.0;
        for (std::size_t j = 0; j < ns.size(); ++j) {
          w[j] = std::exp(adv_temperature * ns[j] - mx);
          z += w[j];
        }
        double wb = 0.0;  // sum_k w_k * b_k
        std::vector<double> b(ns.size());
        for (std::size_t j = 0; j < ns.size(); ++j) {
          w[j] /= z;
          b[j] = std::log(std::max(sigmoid(-ns[j] - margin), 1e-300));
          wb += w[j] * b[j];
        }
        out.loss += -wb * inv;
        for (std::size_t j = 0; j < ns.size(); ++j) {
          const double db = -(1.0 - sigmoid(-ns[j] - margin));  // d b_j / d s_j
          out.dneg[i][j] +=
              (-adv_temperature * w[j] * (b[j] - wb) - w[j] * db) * inv;
        }
      }
      return out;
    }
  }
  return out;
}

inline double batch_loss(LossFamily family, const std::vector<double>& pos,
                         const std::vector<std::vector<double>>& neg,
                         double margin, double adv_temperature = 1.0) {
  return batch_loss_grad(family, pos, neg, margin, adv_temperature).loss;
}

// ---------------------------------------------------------------------------
// Optimizers. Dense updates in fixed order keep runs bit-reproducible.

enum class Optimizer { kSgd, kAdam };

inline Optimizer default_optimizer(LossFamily family) {
  return family == LossFamily::kPointwiseLogistic || family == LossFamily::kMulticlass
             ? Optimizer::kAdam
             : Optimizer::kSgd;
}

struct AdamState {
  std::vector<double> m, v;
  std::int64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void init(std::size_t n, double b1, double b2, double e) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
    beta1 = b1;
    beta2 = b2;
    eps = e;
  }

  void update(std::vector<double>& params, const std::vector<double>& grad,
              double lr) {
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  // < 0 means "use the family default" (margin for translation models,
  // logistic / multiclass for the product models).
  LossFamily loss_family = LossFamily::kPairwiseMargin;
  bool loss_family_set = false;
  double margin = 1.0;
  double adv_temperature = 1.0;
  double learning_rate = -1.0;  // < 0: 0.05 for SGD, 0.01 for Adam
  int batch_size = 32;
  int epochs = 100;
  int negatives_per_positive = 1;
  Optimizer optimizer = Optimizer::kSgd;
  bool optimizer_set = false;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  double l2_weight = 0.0;
  std::uint64_t seed = 0;
  int dim = 16;
  int slices = 2;  // NTN
  bool filter_negatives = false;
  int validation_interval = 1;
  // Global L2 gradient clip per batch; 0 disables. Tames the transient
  // blowups the multiplicative kinds (TransD, RESCAL, NTN) are prone to
  // under plain SGD.
  double grad_clip_norm = 5.0;

  void validate() const {
    if (epochs < 1) throw InputError("epochs must be >= 1");
    if (batch_size < 1) throw InputError("batch_size must be >= 1");
    if (negatives_per_positive < 1) throw InputError("negatives_per_positive must be >= 1");
    if (margin < 0.0) throw InputError("margin must be >= 0");
    if (dim < 1) throw InputError("dim must be >= 1");
    if (validation_interval < 1) throw InputError("validation_interval must be >= 1");
  }

  LossFamily resolved_loss(ModelKind kind) const {
    return loss_family_set ? loss_family : default_loss_family(kind);
  }
  Optimizer resolved_optimizer(ModelKind kind) const {
    return optimizer_set ? optimizer : default_optimizer(resolved_loss(kind));
  }
  double resolved_lr(ModelKind kind) const {
    if (learning_rate >= 0.0) return learning_rate;
    return resolved_optimizer(kind) == Optimizer::kAdam ? 0.01 : 0.05;
  }
};

struct TrainTrace {
  std::vector<double> epoch_loss;       // mean batch loss per epoch
  std::vector<double> valid_mrr;        // filtered MRR where evaluated, else -1
  int best_epoch = 0;                   // 1-based epoch of the kept snapshot
};

// Mini-batch training loop: corrupt negatives, analytic gradients through
// the family loss, optimizer step, constraint re-projection. Keeps the
// best-validation parameters (filtered MRR on the valid split).
inline KgeModel train_model(const KnowledgeGraph& kg, const SplitSet& splits,
                            ModelKind kind, const TrainConfig& cfg,
                            TrainTrace* trace = nullptr) {
  cfg.validate();
  if (splits.train.empty()) throw InputError("train_model: empty train split");

  const LossFamily family = cfg.resolved_loss(kind);
  const Optimizer opt = cfg.resolved_optimizer(kind);
  const double lr = cfg.resolved_lr(kind);

  KgeModel model = init_model(kind, cfg.dim, static_cast<int>(kg.entity_count()),
                              static_cast<int>(kg.relation_count()), cfg.seed,
                              cfg.slices);
  AdamState adam;
  if (opt == Optimizer::kAdam) {
    adam.init(model.params.size(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  }

  FilterIndex valid_filter;
  valid_filter.add(splits.train);
  valid_filter.add(splits.valid);

  Rng rng(mix64(cfg.seed, 0x747261696eULL));
  std::vector<std::size_t> order(splits.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> grad(model.params.size(), 0.0);
  std::vector<double> best_params = model.params;
  double best_mrr = -1.0;
  int best_epoch = 1;

  TrainTrace local;
  TrainTrace& tr = trace ? *trace : local;
  tr.epoch_loss.clear();
  tr.valid_mrr.clear();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Triple> positives, negatives;
      std::vector<double> pos_scores;
      std::vector<std::vector<double>> neg_scores;
      for (std::size_t i = start; i < end; ++i) {
        const Triple& p = splits.train[order[i]];
        positives.push_back(p);
        pos_scores.push_back(score_triple(model, p.head, p.relation, p.tail));
        std::vector<double> ns;
        for (int j = 0; j < cfg.negatives_per_positive; ++j) {
          Triple nt = corrupt_triple(p, kg, rng, cfg.filter_negatives);
          negatives.push_back(nt);
          ns.push_back(score_triple(model, nt.head, nt.relation, nt.tail));
        }
        neg_scores.push_back(std::move(ns));
      }
      LossGrad lg = batch_loss_grad(family, pos_scores, neg_scores, cfg.margin,
                                    cfg.adv_temperature);
      if (!std::isfinite(lg.loss)) {
        throw InputError("non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batches + 1));
      }
      loss_sum += lg.loss;
      ++batches;

      std::fill(grad.begin(), grad.end(), 0.0);
      std::size_t neg_cursor = 0;
      for (std::size_t i = 0; i < positives.size(); ++i) {
        const Triple& p = positives[i];
        if (lg.dpos[i] != 0.0) {
          score_backward(model, p.head, p.relation, p.tail, lg.dpos[i], grad);
        }
        for (std::size_t j = 0; j < lg.dneg[i].size(); ++j, ++neg_cursor) {
          const Triple& nt = negatives[neg_cursor];
          if (lg.dneg[i][j] != 0.0) {
            score_backward(model, nt.head, nt.relation, nt.tail, lg.dneg[i][j], grad);
          }
        }
      }
      if (cfg.l2_weight > 0.0) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
          grad[i] += 2.0 * cfg.l2_weight * model.params[i];
        }
      }
      if (cfg.grad_clip_norm > 0.0) {
        double norm2 = 0.0;
        for (double g : grad) norm2 += g * g;
        if (norm2 > cfg.grad_clip_norm * cfg.grad_clip_norm) {
          const double scale = cfg.grad_clip_norm / std::sqrt(norm2);
          for (double& g : grad) g *= scale;
        }
      }
      if (opt == Optimizer::kAdam) {
        adam.update(model.params, grad, lr);
      } else {
        for (std::size_t i = 0; i < model.params.size(); ++i) {
          model.params[i] -= lr * grad[i];
        }
      }
      project_constraints(model);
    }
    tr.epoch_loss.push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);

    if (!splits.valid.empty() &&
        (epoch % cfg.validation_interval == 0 || epoch == cfg.epochs)) {
      const EvalReport rep =
          evaluate_link_prediction(model, splits.valid, valid_filter);
      tr.valid_mrr.push_back(rep.filtered_mrr);
      if (rep.filtered_mrr > best_mrr) {
        best_mrr = rep.filtered_mrr;
        best_params = model.params;
        best_epoch = epoch;
      }
    } else {
      tr.valid_mrr.push_back(-1.0);
    }
  }

  if (best_mrr >= 0.0) {
    model.params = best_params;
    tr.best_epoch = best_epoch;
  } else {
    tr.best_epoch = cfg.epochs;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Hyperparameter search: seeded random sampling over a discrete space,
// objective = filtered MRR on the valid split. Stands behind the same
// interface a smarter optimizer would.

struct SearchSpace {
  std::vector<double> learning_rates;
  std::vector<int> dims;
  std::vector<double> margins;
  std::vector<int> batch_sizes;
  std::vector<int> negatives;
  std::vector<double> l2_weights;
};

struct TrialResult {
  TrainConfig config;
  double valid_mrr = -1.0;
  std::string error;
};

inline TrainConfig hyperparameter_search(const KnowledgeGraph& kg,
                                         const SplitSet& splits, ModelKind kind,
                                         const SearchSpace& space,
                                         const TrainConfig& base, int budget,
                                         std::uint64_t seed,
                                         std::vector<TrialResult>* log = nullptr) {
  if (budget < 1) throw InputError("hyperparameter_search: budget must be >= 1");
  Rng rng(mix64(seed, 0x736561ULL));
  std::vector<TrialResult> trials;
  int best = -1;
  for (int trial = 0; trial < budget; ++trial) {
    TrainConfig cfg = base;
    if (!space.learning_rates.empty()) {
      cfg.learning_rate = space.learning_rates[rng.below(space.learning_rates.size())];
    }
    if (!space.dims.empty()) cfg.dim = space.dims[rng.below(space.dims.size())];
    if (!space.margins.empty()) cfg.margin = space.margins[rng.below(space.margins.size())];
    if (!space.batch_sizes.empty()) {
      cfg.batch_size = space.batch_sizes[rng.below(space.batch_sizes.size())];
    }
    if (!space.negatives.empty()) {
      cfg.negatives_per_positive = space.negatives[rng.below(space.negatives.size())];
    }
    if (!space.l2_weights.empty()) {
      cfg.l2_weight = space.l2_weights[rng.below(space.l2_weights.size())];
    }
    TrialResult res;
    res.config = cfg;
    try {
      TrainTrace trace;
      KgeModel model = train_model(kg, splits, kind, cfg, &trace);
      FilterIndex filter;
      filter.add(splits.train);
      filter.add(splits.valid);
      res.valid_mrr =
          evaluate_link_prediction(model, splits.valid, filter).filtered_mrr;
    } catch (const std::exception& e) {
      res.error = e.what();
    }
    trials.push_back(res);
    if (res.error.empty() &&
        (best < 0 || res.valid_mrr > trials[static_cast<std::size_t>(best)].valid_mrr)) {
      best = trial;
    }
  }
  if (log) *log = trials;
  if (best < 0) {
    std::string msg = "hyperparameter_search: all trials failed:";
    for (std::size_t i = 0; i < trials.size(); ++i) {
      msg += "\n  trial " + std::to_string(i) + ": " + trials[i].error;
    }
    throw InputError(msg);
  }
  return trials[static_cast<std::size_t>(best)].config;
}

}  // namespace sappkg
