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

#include <catch_amalgamated.hpp>

#include "sappkg/kge.hpp"
#include "test_helpers.hpp"

using namespace sappkg;

namespace {

// Builds a model and zeroes it so hand values can be planted.
KgeModel zeroed(ModelKind kind, int dim, int e = 4, int r = 2, int dr = 0) {
  KgeModel m = init_model(kind, dim, e, r, 1, 2, dr);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  return m;
}

void set_vec(KgeModel& m, const char* block, int idx, std::vector<double> v) {
  double* p = m.block(block) + static_cast<std::size_t>(idx) * v.size();
  std::copy(v.begin(), v.end(), p);
}

}  // namespace

TEST_CASE("init_model: deterministic, bounded, right shapes") {
  auto a = init_model(ModelKind::kComplEx, 16, 100, 12, 42);
  auto b = init_model(ModelKind::kComplEx, 16, 100, 12, 42);
  CHECK(a.params == b.params);
  auto c = init_model(ModelKind::kComplEx, 16, 100, 12, 43);
  CHECK(a.params != c.params);
  const double bound = 6.0 / std::sqrt(16.0);
  for (double p : a.params) {
    CHECK(std::fabs(p) <= bound);
    CHECK(std::isfinite(p));
  }
  // dim-16 shapes: E x 16 entity blocks, R x 16 relation blocks
  CHECK(a.param_count() == 2 * 100 * 16 + 2 * 12 * 16);
  auto tucker = init_model(ModelKind::kTuckEr, 16, 100, 12, 1, 2, 8);
  CHECK(tucker.param_count() == 100 * 16 + 12 * 8 + 16 * 8 * 16);
}

TEST_CASE("init_model: TransH normals are unit after init, projection idempotent") {
  auto m = init_model(ModelKind::kTransH, 8, 20, 12, 5);
  const double* w = m.block("rel_w");
  for (int r = 0; r < 12; ++r) {
    double norm = 0.0;
    for (int j = 0; j < 8; ++j) norm += w[r * 8 + j] * w[r * 8 + j];
    CHECK(std::sqrt(norm) == Catch::Approx(1.0).epsilon(1e-6));
  }
  auto before = m.params;
  project_constraints(m);
  CHECK(m.params == before);  // projecting twice equals projecting once
}

TEST_CASE("TransE: exact translation scores zero, miss costs squared distance") {
  auto m = zeroed(ModelKind::kTransE, 2);
  set_vec(m, "ent", 0, {1, 0});  // h
  set_vec(m, "ent", 1, {1, 1});  // t
  set_vec(m, "ent", 2, {0, 0});  // t'
  set_vec(m, "rel", 0, {0, 1});
  CHECK(score_triple(m, 0, 0, 1) == 0.0);   // ||h + r - t||^2 = 0
  CHECK(score_triple(m, 0, 0, 2) == -2.0);  // distance 2, negated
}

TEST_CASE("DistMult: hand arithmetic") {
  auto m = zeroed(ModelKind::kDistMult, 2);
  set_vec(m, "ent", 0, {1, 2});
  set_vec(m, "ent", 1, {3, 1});
  set_vec(m, "rel", 0, {1, 1});
  CHECK(score_triple(m, 0, 0, 1) == 5.0);  // 1*1*3 + 2*1*1
}

TEST_CASE("ComplEx with zero imaginary parts equals DistMult exactly") {
  Rng rng(99);
  for (int iter = 0; iter < 1000; ++iter) {
    const int d = 1 + static_cast<int>(rng.below(6));
    auto cx = zeroed(ModelKind::kComplEx, d, 5, 3);
    auto dm = zeroed(ModelKind::kDistMult, d, 5, 3);
    for (int e = 0; e < 5; ++e) {
      for (int j = 0; j < d; ++j) {
        const double v = rng.normal();
        cx.block("ent_re")[e * d + j] = v;
        dm.block("ent")[e * d + j] = v;
      }
    }
    for (int r = 0; r < 3; ++r) {
      for (int j = 0; j < d; ++j) {
        const double v = rng.normal();
        cx.block("rel_re")[r * d + j] = v;
        dm.block("rel")[r * d + j] = v;
      }
    }
    const int h = static_cast<int>(rng.below(5));
    const int t = static_cast<int>(rng.below(5));
    const int r = static_cast<int>(rng.below(3));
    CHECK(score_triple(cx, h, r, t) == score_triple(dm, h, r, t));
  }
}

TEST_CASE("RotatE: identity rotation with h = t scores zero") {
  Rng rng(7);
  for (int iter = 0; iter < 1000; ++iter) {
    const int d = 1 + static_cast<int>(rng.below(5));
    auto m = zeroed(ModelKind::kRotatE, d, 3, 2);
    for (int e = 0; e < 3; ++e) {
      for (int j = 0; j < d; ++j) {
        m.block("ent_re")[e * d + j] = rng.normal();
        m.block("ent_im")[e * d + j] = rng.normal();
      }
    }
    const int h = static_cast<int>(rng.below(3));
    CHECK(score_triple(m, h, 0, h) == 0.0);
  }
}

TEST_CASE("TransD with zero projections equals TransE exactly") {
  Rng rng(31);
  for (int iter = 0; iter < 1000; ++iter) {
    const int d = 1 + static_cast<int>(rng.below(6));
    auto td = zeroed(ModelKind::kTransD, d, 4, 2);
    auto te = zeroed(ModelKind::kTransE, d, 4, 2);
    for (int e = 0; e < 4; ++e) {
      for (int j = 0; j < d; ++j) {
        const double v = rng.normal();
        td.block("ent")[e * d + j] = v;
        te.block("ent")[e * d + j] = v;
      }
    }
    for (int r = 0; r < 2; ++r) {
      for (int j = 0; j < d; ++j) {
        const double v = rng.normal();
        td.block("rel")[r * d + j] = v;
        te.block("rel")[r * d + j] = v;
      }
    }
    const int h = static_cast<int>(rng.below(4));
    const int t = static_cast<int>(rng.below(4));
    const int r = static_cast<int>(rng.below(2));
    CHECK(score_triple(td, h, r, t) == score_triple(te, h, r, t));
  }
}

TEST_CASE("RESCAL with identity matrix equals the dot product exactly") {
  Rng rng(47);
  for (int iter = 0; iter < 1000; ++iter) {
    const int d = 1 + static_cast<int>(rng.below(6));
    auto m = zeroed(ModelKind::kRescal, d, 4, 2);
    for (int e = 0; e < 4; ++e) {
      for (int j = 0; j < d; ++j) m.block("ent")[e * d + j] = rng.normal();
    }
    for (int r = 0; r < 2; ++r) {
      for (int j = 0; j < d; ++j) m.block("rel_m")[r * d * d + j * d + j] = 1.0;
    }
    const int h = static_cast<int>(rng.below(4));
    const int t = static_cast<int>(rng.below(4));
    double dot = 0.0;
    for (int j = 0; j < d; ++j) {
      dot += m.block("ent")[h * d + j] * m.block("ent")[t * d + j];
    }
    CHECK(score_triple(m, h, 0, t) == dot);
  }
}

TEST_CASE("NTN with zero tensors scores zero everywhere") {
  auto m = zeroed(ModelKind::kNtn, 3, 4, 2);
  // u stays zero too; but even with u set, tanh(0) = 0 kills the slice
  set_vec(m, "rel_u", 0, {1.0, -2.0});
  for (int h = 0; h < 4; ++h) {
    for (int t = 0; t < 4; ++t) {
      CHECK(score_triple(m, h, 0, t) == 0.0);
    }
  }
}

TEST_CASE("TuckER: one-dimensional hand contraction") {
  auto m = zeroed(ModelKind::kTuckEr, 1, 3, 2, 1);
  m.block("core")[0] = 2.0;
  m.block("ent")[0] = 1.0;  // h
  m.block("ent")[1] = 1.0;  // t
  m.block("rel")[0] = 3.0;
  CHECK(score_triple(m, 0, 0, 1) == 6.0);  // W x1 h x2 r x3 t = 2*1*3*1
}

TEST_CASE("TransH: projection makes the score invariant to normal components") {
  // with w = e1, components along e1 are projected away
  auto m = zeroed(ModelKind::kTransH, 2, 3, 1);
  set_vec(m, "rel_w", 0, {1, 0});
  set_vec(m, "rel_d", 0, {0, 1});
  set_vec(m, "ent", 0, {5, 0});   // projects to (0, 0)
  set_vec(m, "ent", 1, {-3, 1});  // projects to (0, 1)
  CHECK(score_triple(m, 0, 0, 1) == 0.0);
}

TEST_CASE("SimplE: averages the forward and inverse products") {
  auto m = zeroed(ModelKind::kSimplE, 1, 3, 1);
  m.block("ent_h")[0] = 2.0;  // head-role of entity 0
  m.block("ent_t")[1] = 3.0;  // tail-role of entity 1
  m.block("rel")[0] = 1.0;
  m.block("ent_h")[1] = 5.0;
  m.block("ent_t")[0] = 1.0;
  m.block("rel_inv")[0] = 2.0;
  // 0.5 * (2*1*3 + 5*2*1) = 0.5 * 16 = 8
  CHECK(score_triple(m, 0, 0, 1) == 8.0);
}

TEST_CASE("all kinds: scores are finite on random parameters") {
  Rng rng(2);
  for (ModelKind kind : all_model_kinds()) {
    auto m = init_model(kind, 4, 6, 3, 11, 2);
    sappkg_test::randomize_params(m, rng);
    for (int iter = 0; iter < 20; ++iter) {
      const int h = static_cast<int>(rng.below(6));
      const int t = static_cast<int>(rng.below(6));
      const int r = static_cast<int>(rng.below(3));
      CHECK(std::isfinite(score_triple(m, h, r, t)));
    }
  }
}
