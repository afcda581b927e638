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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sappkg/rng.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// The ten shallow scoring models. Scores are normalized to higher-is-better
// across kinds: distance-based models return the negated distance so ranking
// and loss code never branch on the kind.
enum class ModelKind {
  kNtn,
  kTransE,
  kTransH,
  kTransD,
  kRescal,
  kRotatE,
  kComplEx,
  kDistMult,
  kSimplE,
  kTuckEr,
};

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kNtn: return "ntn";
    case ModelKind::kTransE: return "transe";
    case ModelKind::kTransH: return "transh";
    case ModelKind::kTransD: return "transd";
    case ModelKind::kRescal: return "rescal";
    case ModelKind::kRotatE: return "rotate";
    case ModelKind::kComplEx: return "complex";
    case ModelKind::kDistMult: return "distmult";
    case ModelKind::kSimplE: return "simple";
    case ModelKind::kTuckEr: return "tucker";
  }
  return "?";
}

inline ModelKind model_kind_from_name(const std::string& name) {
  static const std::vector<ModelKind> all = {
      ModelKind::kNtn,    ModelKind::kTransE,   ModelKind::kTransH,
      ModelKind::kTransD, ModelKind::kRescal,   ModelKind::kRotatE,
      ModelKind::kComplEx, ModelKind::kDistMult, ModelKind::kSimplE,
      ModelKind::kTuckEr};
  for (ModelKind k : all) {
    if (name == model_kind_name(k)) return k;
  }
  throw InputError("unknown model kind '" + name + "'");
}

inline const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> all = {
      ModelKind::kNtn,    ModelKind::kTransE,   ModelKind::kTransH,
      ModelKind::kTransD, ModelKind::kRescal,   ModelKind::kRotatE,
      ModelKind::kComplEx, ModelKind::kDistMult, ModelKind::kSimplE,
      ModelKind::kTuckEr};
  return all;
}

// Parameter store for one model. All blocks live in one flat vector so the
// optimizer, the finite-difference checks, and the checkpoint writer can
// treat every kind uniformly; the offsets below carve it up.
class KgeModel {
 public:
  ModelKind kind = ModelKind::kTransE;
  int entity_count = 0;
  int relation_count = 0;
  int dim = 0;           // entity embedding width
  int relation_dim = 0;  // TuckER relation width (== dim elsewhere)
  int slices = 0;        // NTN slice count
  std::vector<double> params;

  struct Block {
    std::string name;
    std::size_t offset;
    std::size_t count;
  };

  std::vector<Block> blocks() const {
    const auto e = static_cast<std::size_t>(entity_count);
    const auto r = static_cast<std::size_t>(relation_count);
    const auto d = static_cast<std::size_t>(dim);
    const auto dr = static_cast<std::size_t>(relation_dim);
    const auto k = static_cast<std::size_t>(slices);
    std::vector<Block> out;
    std::size_t off = 0;
    auto add = [&](const char* name, std::size_t count) {
      out.push_back({name, off, count});
      off += count;
    };
    switch (kind) {
      case ModelKind::kTransE:
      case ModelKind::kDistMult:
        add("ent", e * d);
        add("rel", r * d);
        break;
      case ModelKind::kTransH:
        add("ent", e * d);
        add("rel_d", r * d);
        add("rel_w", r * d);
        break;
      case ModelKind::kTransD:
        add("ent", e * d);
        add("ent_p", e * d);
        add("rel", r * d);
        add("rel_p", r * d);
        break;
      case ModelKind::kRescal:
        add("ent", e * d);
        add("rel_m", r * d * d);
        break;
      case ModelKind::kRotatE:
        add("ent_re", e * d);
        add("ent_im", e * d);
        add("rel_phase", r * d);
        break;
      case ModelKind::kComplEx:
        add("ent_re", e * d);
        add("ent_im", e * d);
        add("rel_re", r * d);
        add("rel_im", r * d);
        break;
      case ModelKind::kSimplE:
        add("ent_h", e * d);
        add("ent_t", e * d);
        add("rel", r * d);
        add("rel_inv", r * d);
        break;
      case ModelKind::kNtn:
        add("ent", e * d);
        add("rel_w", r * k * d * d);
        add("rel_m", r * k * 2 * d);
        add("rel_b", r * k);
        add("rel_u", r * k);
        break;
      case ModelKind::kTuckEr:
        add("ent", e * d);
        add("rel", r * dr);
        add("core", d * dr * d);
        break;
    }
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
    throw InputError(std::string("no block '") + name + "' in " +
                     model_kind_name(kind));
  }

  const double* block(const char* name) const { return params.data() + block_offset(name); }
  double* block(const char* name) { return params.data() + block_offset(name); }
};

// Uniform init in [-6/sqrt(dim), +6/sqrt(dim)], then constraint projection.
inline void project_constraints(KgeModel& m);

inline KgeModel init_model(ModelKind kind, int dim, int entity_count,
                           int relation_count, std::uint64_t seed,
                           int slices = 2, int relation_dim = 0) {
  if (dim < 1) throw InputError("dim must be >= 1");
  if (entity_count < 1 || relation_count < 1) {
    throw InputError("need at least one entity and one relation");
  }
  KgeModel m;
  m.kind = kind;
  m.entity_count = entity_count;
  m.relation_count = relation_count;
  m.dim = dim;
  m.relation_dim = relation_dim > 0 ? relation_dim : dim;
  m.slices = kind == ModelKind::kNtn ? slices : 0;
  m.params.resize(m.param_count());
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  Rng rng(mix64(seed, 0x696e6974ULL));
  for (double& p : m.params) p = rng.uniform(-bound, bound);
  project_constraints(m);
  return m;
}

// TransH hyperplane normals stay unit length; RotatE rotations are stored as
// phases so their modulus is 1 by construction. Projection is idempotent.
inline void project_constraints(KgeModel& m) {
  if (m.kind != ModelKind::kTransH) return;
  double* w = m.block("rel_w");
  const auto d = static_cast<std::size_t>(m.dim);
  for (int r = 0; r < m.relation_count; ++r) {
    double* wr = w + static_cast<std::size_t>(r) * d;
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) norm += wr[j] * wr[j];
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      wr[0] = 1.0;  // degenerate zero normal
    } else if (std::fabs(norm - 1.0) > 1e-12) {
      // the guard makes projection a bitwise fixed point
      for (std::size_t j = 0; j < d; ++j) wr[j] /= norm;
    }
  }
}

// ---------------------------------------------------------------------------
// Scoring. score_triple returns the plausibility; score_backward accumulates
// coeff * d(score)/d(params) into a gradient buffer of params size. Keeping
// the two in one switch per kind makes the finite-difference suite the
// single source of truth for their agreement.

inline double score_triple(const KgeModel& m, int h, int r, int t) {
  const auto d = static_cast<std::size_t>(m.dim);
  const auto hi = static_cast<std::size_t>(h);
  const auto ri = static_cast<std::size_t>(r);
  const auto ti = static_cast<std::size_t>(t);
  switch (m.kind) {
    case ModelKind::kTransE: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* rr = m.block("rel") + ri * d;
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = eh[j] + rr[j] - et[j];
        dist += diff * diff;
      }
      return -dist;
    }
    case ModelKind::kTransH: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* dr = m.block("rel_d") + ri * d;
      const double* wr = m.block("rel_w") + ri * d;
      double wh = 0.0, wt = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        wh += wr[j] * eh[j];
        wt += wr[j] * et[j];
      }
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = (eh[j] - wh * wr[j]) + dr[j] - (et[j] - wt * wr[j]);
        dist += diff * diff;
      }
      return -dist;
    }
    case ModelKind::kTransD: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* hp = m.block("ent_p") + hi * d;
      const double* tp = m.block("ent_p") + ti * d;
      const double* rr = m.block("rel") + ri * d;
      const double* rp = m.block("rel_p") + ri * d;
      double hph = 0.0, tpt = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        hph += hp[j] * eh[j];
        tpt += tp[j] * et[j];
      }
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = (eh[j] + hph * rp[j]) + rr[j] - (et[j] + tpt * rp[j]);
        dist += diff * diff;
      }
      return -dist;
    }
    case ModelKind::kRescal: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* mr = m.block("rel_m") + ri * d * d;
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d; ++j) row += mr[i * d + j] * et[j];
        s += eh[i] * row;
      }
      return s;
    }
    case ModelKind::kRotatE: {
      const double* hre = m.block("ent_re") + hi * d;
      const double* him = m.block("ent_im") + hi * d;
      const double* tre = m.block("ent_re") + ti * d;
      const double* tim = m.block("ent_im") + ti * d;
      const double* ph = m.block("rel_phase") + ri * d;
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double c = std::cos(ph[j]);
        const double s = std::sin(ph[j]);
        const double re = hre[j] * c - him[j] * s - tre[j];
        const double im = hre[j] * s + him[j] * c - tim[j];
        dist += re * re + im * im;
      }
      return -dist;
    }
    case ModelKind::kComplEx: {
      const double* hre = m.block("ent_re") + hi * d;
      const double* him = m.block("ent_im") + hi * d;
      const double* tre = m.block("ent_re") + ti * d;
      const double* tim = m.block("ent_im") + ti * d;
      const double* rre = m.block("rel_re") + ri * d;
      const double* rim = m.block("rel_im") + ri * d;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        s += hre[j] * rre[j] * tre[j] + him[j] * rre[j] * tim[j] +
             hre[j] * rim[j] * tim[j] - him[j] * rim[j] * tre[j];
      }
      return s;
    }
    case ModelKind::kDistMult: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* rr = m.block("rel") + ri * d;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += eh[j] * rr[j] * et[j];
      return s;
    }
    case ModelKind::kSimplE: {
      const double* hh = m.block("ent_h") + hi * d;
      const double* ht = m.block("ent_t") + hi * d;
      const double* th = m.block("ent_h") + ti * d;
      const double* tt = m.block("ent_t") + ti * d;
      const double* rr = m.block("rel") + ri * d;
      const double* rv = m.block("rel_inv") + ri * d;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        s += 0.5 * (hh[j] * rr[j] * tt[j] + th[j] * rv[j] * ht[j]);
      }
      return s;
    }
    case ModelKind::kNtn: {
      const auto k = static_cast<std::size_t>(m.slices);
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* W = m.block("rel_w") + ri * k * d * d;
      const double* M = m.block("rel_m") + ri * k * 2 * d;
      const double* b = m.block("rel_b") + ri * k;
      const double* u = m.block("rel_u") + ri * k;
      double s = 0.0;
      for (std::size_t sl = 0; sl < k; ++sl) {
        double z = b[sl];
        const double* Ws = W + sl * d * d;
        for (std::size_t i = 0; i < d; ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < d; ++j) row += Ws[i * d + j] * et[j];
          z += eh[i] * row;
        }
        const double* Ms = M + sl * 2 * d;
        for (std::size_t j = 0; j < d; ++j) z += Ms[j] * eh[j];
        for (std::size_t j = 0; j < d; ++j) z += Ms[d + j] * et[j];
        s += u[sl] * std::tanh(z);
      }
      return s;
    }
    case ModelKind::kTuckEr: {
      const auto dr = static_cast<std::size_t>(m.relation_dim);
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* rr = m.block("rel") + ri * dr;
      const double* W = m.block("core");
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < dr; ++j) {
          double inner = 0.0;
          for (std::size_t l = 0; l < d; ++l) inner += W[(i * dr + j) * d + l] * et[l];
          s += eh[i] * rr[j] * inner;
        }
      }
      return s;
    }
  }
  return 0.0;
}

inline void score_backward(const KgeModel& m, int h, int r, int t, double coeff,
                           std::vector<double>& grad) {
  const auto d = static_cast<std::size_t>(m.dim);
  const auto hi = static_cast<std::size_t>(h);
  const auto ri = static_cast<std::size_t>(r);
  const auto ti = static_cast<std::size_t>(t);
  switch (m.kind) {
    case ModelKind::kTransE: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* rr = m.block("rel") + ri * d;
      double* geh = grad.data() + m.block_offset("ent") + hi * d;
      double* get = grad.data() + m.block_offset("ent") + ti * d;
      double* grr = grad.data() + m.block_offset("rel") + ri * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = eh[j] + rr[j] - et[j];
        const double g = coeff * -2.0 * diff;
        geh[j] += g;
        grr[j] += g;
        get[j] -= g;
      }
      return;
    }
    case ModelKind::kTransH: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* dr = m.block("rel_d") + ri * d;
      const double* wr = m.block("rel_w") + ri * d;
      double* geh = grad.data() + m.block_offset("ent") + hi * d;
      double* get = grad.data() + m.block_offset("ent") + ti * d;
      double* gdr = grad.data() + m.block_offset("rel_d") + ri * d;
      double* gwr = grad.data() + m.block_offset("rel_w") + ri * d;
      double wh = 0.0, wt = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        wh += wr[j] * eh[j];
        wt += wr[j] * et[j];
      }
      std::vector<double> delta(d);
      double wdelta = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        delta[j] = (eh[j] - wh * wr[j]) + dr[j] - (et[j] - wt * wr[j]);
        wdelta += wr[j] * delta[j];
      }
      // d(-|delta|^2): see the per-parameter forms in the tests.
      for (std::size_t j = 0; j < d; ++j) {
        const double u = eh[j] - et[j];
        geh[j] += coeff * -2.0 * (delta[j] - wr[j] * wdelta);
        get[j] += coeff * 2.0 * (delta[j] - wr[j] * wdelta);
        gdr[j] += coeff * -2.0 * delta[j];
        gwr[j] += coeff * 2.0 * (u * wdelta + (wh - wt) * delta[j]);
      }
      return;
    }
    case ModelKind::kTransD: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* hp = m.block("ent_p") + hi * d;
      const double* tp = m.block("ent_p") + ti * d;
      const double* rr = m.block("rel") + ri * d;
      const double* rp = m.block("rel_p") + ri * d;
      double* geh = grad.data() + m.block_offset("ent") + hi * d;
      double* get = grad.data() + m.block_offset("ent") + ti * d;
      double* ghp = grad.data() + m.block_offset("ent_p") + hi * d;
      double* gtp = grad.data() + m.block_offset("ent_p") + ti * d;
      double* grr = grad.data() + m.block_offset("rel") + ri * d;
      double* grp = grad.data() + m.block_offset("rel_p") + ri * d;
      double hph = 0.0, tpt = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        hph += hp[j] * eh[j];
        tpt += tp[j] * et[j];
      }
      std::vector<double> delta(d);
      double rpdelta = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        delta[j] = (eh[j] + hph * rp[j]) + rr[j] - (et[j] + tpt * rp[j]);
        rpdelta += rp[j] * delta[j];
      }
      for (std::size_t j = 0; j < d; ++j) {
        geh[j] += coeff * -2.0 * (delta[j] + hp[j] * rpdelta);
        get[j] += coeff * 2.0 * (delta[j] + tp[j] * rpdelta);
        ghp[j] += coeff * -2.0 * eh[j] * rpdelta;
        gtp[j] += coeff * 2.0 * et[j] * rpdelta;
        grr[j] += coeff * -2.0 * delta[j];
        grp[j] += coeff * -2.0 * delta[j] * (hph - tpt);
      }
      return;
    }
    case ModelKind::kRescal: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* mr = m.block("rel_m") + ri * d * d;
      double* geh = grad.data() + m.block_offset("ent") + hi * d;
      double* get = grad.data() + m.block_offset("ent") + ti * d;
      double* gmr = grad.data() + m.block_offset("rel_m") + ri * d * d;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          geh[i] += coeff * mr[i * d + j] * et[j];
          get[j] += coeff * mr[i * d + j] * eh[i];
          gmr[i * d + j] += coeff * eh[i] * et[j];
        }
      }
      return;
    }
    case ModelKind::kRotatE: {
      const double* hre = m.block("ent_re") + hi * d;
      const double* him = m.block("ent_im") + hi * d;
      const double* tre = m.block("ent_re") + ti * d;
      const double* tim = m.block("ent_im") + ti * d;
      const double* ph = m.block("rel_phase") + ri * d;
      double* ghre = grad.data() + m.block_offset("ent_re") + hi * d;
      double* ghim = grad.data() + m.block_offset("ent_im") + hi * d;
      double* gtre = grad.data() + m.block_offset("ent_re") + ti * d;
      double* gtim = grad.data() + m.block_offset("ent_im") + ti * d;
      double* gph = grad.data() + m.block_offset("rel_phase") + ri * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double c = std::cos(ph[j]);
        const double s = std::sin(ph[j]);
        const double re = hre[j] * c - him[j] * s - tre[j];
        const double im = hre[j] * s + him[j] * c - tim[j];
        ghre[j] += coeff * -2.0 * (re * c + im * s);
        ghim[j] += coeff * -2.0 * (-re * s + im * c);
        gtre[j] += coeff * 2.0 * re;
        gtim[j] += coeff * 2.0 * im;
        gph[j] += coeff * -2.0 *
                  (re * (-hre[j] * s - him[j] * c) + im * (hre[j] * c - him[j] * s));
      }
      return;
    }
    case ModelKind::kComplEx: {
      const double* hre = m.block("ent_re") + hi * d;
      const double* him = m.block("ent_im") + hi * d;
      const double* tre = m.block("ent_re") + ti * d;
      const double* tim = m.block("ent_im") + ti * d;
      const double* rre = m.block("rel_re") + ri * d;
      const double* rim = m.block("rel_im") + ri * d;
      double* ghre = grad.data() + m.block_offset("ent_re") + hi * d;
      double* ghim = grad.data() + m.block_offset("ent_im") + hi * d;
      double* gtre = grad.data() + m.block_offset("ent_re") + ti * d;
      double* gtim = grad.data() + m.block_offset("ent_im") + ti * d;
      double* grre = grad.data() + m.block_offset("rel_re") + ri * d;
      double* grim = grad.data() + m.block_offset("rel_im") + ri * d;
      for (std::size_t j = 0; j < d; ++j) {
        ghre[j] += coeff * (rre[j] * tre[j] + rim[j] * tim[j]);
        ghim[j] += coeff * (rre[j] * tim[j] - rim[j] * tre[j]);
        gtre[j] += coeff * (hre[j] * rre[j] - him[j] * rim[j]);
        gtim[j] += coeff * (him[j] * rre[j] + hre[j] * rim[j]);
        grre[j] += coeff * (hre[j] * tre[j] + him[j] * tim[j]);
        grim[j] += coeff * (hre[j] * tim[j] - him[j] * tre[j]);
      }
      return;
    }
    case ModelKind::kDistMult: {
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* rr = m.block("rel") + ri * d;
      double* geh = grad.data() + m.block_offset("ent") + hi * d;
      double* get = grad.data() + m.block_offset("ent") + ti * d;
      double* grr = grad.data() + m.block_offset("rel") + ri * d;
      for (std::size_t j = 0; j < d; ++j) {
        geh[j] += coeff * rr[j] * et[j];
        get[j] += coeff * eh[j] * rr[j];
        grr[j] += coeff * eh[j] * et[j];
      }
      return;
    }
    case ModelKind::kSimplE: {
      const double* hh = m.block("ent_h") + hi * d;
      const double* ht = m.block("ent_t") + hi * d;
      const double* th = m.block("ent_h") + ti * d;
      const double* tt = m.block("ent_t") + ti * d;
      const double* rr = m.block("rel") + ri * d;
      const double* rv = m.block("rel_inv") + ri * d;
      double* ghh = grad.data() + m.block_offset("ent_h") + hi * d;
      double* ght = grad.data() + m.block_offset("ent_t") + hi * d;
      double* gth = grad.data() + m.block_offset("ent_h") + ti * d;
      double* gtt = grad.data() + m.block_offset("ent_t") + ti * d;
      double* grr = grad.data() + m.block_offset("rel") + ri * d;
      double* grv = grad.data() + m.block_offset("rel_inv") + ri * d;
      for (std::size_t j = 0; j < d; ++j) {
        ghh[j] += coeff * 0.5 * rr[j] * tt[j];
        gtt[j] += coeff * 0.5 * hh[j] * rr[j];
        grr[j] += coeff * 0.5 * hh[j] * tt[j];
        gth[j] += coeff * 0.5 * rv[j] * ht[j];
        ght[j] += coeff * 0.5 * th[j] * rv[j];
        grv[j] += coeff * 0.5 * th[j] * ht[j];
      }
      return;
    }
    case ModelKind::kNtn: {
      const auto k = static_cast<std::size_t>(m.slices);
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* W = m.block("rel_w") + ri * k * d * d;
      const double* M = m.block("rel_m") + ri * k * 2 * d;
      const double* b = m.block("rel_b") + ri * k;
      const double* u = m.block("rel_u") + ri * k;
      double* geh = grad.data() + m.block_offset("ent") + hi * d;
      double* get = grad.data() + m.block_offset("ent") + ti * d;
      double* gW = grad.data() + m.block_offset("rel_w") + ri * k * d * d;
      double* gM = grad.data() + m.block_offset("rel_m") + ri * k * 2 * d;
      double* gb = grad.data() + m.block_offset("rel_b") + ri * k;
      double* gu = grad.data() + m.block_offset("rel_u") + ri * k;
      for (std::size_t sl = 0; sl < k; ++sl) {
        const double* Ws = W + sl * d * d;
        const double* Ms = M + sl * 2 * d;
        double z = b[sl];
        for (std::size_t i = 0; i < d; ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < d; ++j) row += Ws[i * d + j] * et[j];
          z += eh[i] * row;
        }
        for (std::size_t j = 0; j < d; ++j) z += Ms[j] * eh[j] + Ms[d + j] * et[j];
        const double tz = std::tanh(z);
        gu[sl] += coeff * tz;
        const double dz = coeff * u[sl] * (1.0 - tz * tz);
        gb[sl] += dz;
        double* gWs = gW + sl * d * d;
        double* gMs = gM + sl * 2 * d;
        for (std::size_t i = 0; i < d; ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            row += Ws[i * d + j] * et[j];
            gWs[i * d + j] += dz * eh[i] * et[j];
            get[j] += dz * Ws[i * d + j] * eh[i];
          }
          geh[i] += dz * row;
        }
        for (std::size_t j = 0; j < d; ++j) {
          geh[j] += dz * Ms[j];
          get[j] += dz * Ms[d + j];
          gMs[j] += dz * eh[j];
          gMs[d + j] += dz * et[j];
        }
      }
      return;
    }
    case ModelKind::kTuckEr: {
      const auto dr = static_cast<std::size_t>(m.relation_dim);
      const double* eh = m.block("ent") + hi * d;
      const double* et = m.block("ent") + ti * d;
      const double* rr = m.block("rel") + ri * dr;
      const double* W = m.block("core");
      double* geh = grad.data() + m.block_offset("ent") + hi * d;
      double* get = grad.data() + m.block_offset("ent") + ti * d;
      double* grr = grad.data() + m.block_offset("rel") + ri * dr;
      double* gW = grad.data() + m.block_offset("core");
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < dr; ++j) {
          for (std::size_t l = 0; l < d; ++l) {
            const double w = W[(i * dr + j) * d + l];
            geh[i] += coeff * w * rr[j] * et[l];
            grr[j] += coeff * w * eh[i] * et[l];
            get[l] += coeff * w * eh[i] * rr[j];
            gW[(i * dr + j) * d + l] += coeff * eh[i] * rr[j] * et[l];
          }
        }
      }
      return;
    }
  }
}

}  // namespace sappkg
