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
#include "sappkg/kge_train.hpp"
#include "test_helpers.hpp"

using namespace sappkg;
using sappkg_test::finite_difference_check;

namespace {

struct Instance {
  std::vector<Triple> positives;
  std::vector<std::vector<Triple>> negatives;
};

Instance random_instance(Rng& rng, int entities, int relations, int npos,
                         int nneg) {
  Instance inst;
  for (int i = 0; i < npos; ++i) {
    Triple p;
    p.head = static_cast<int>(rng.below(static_cast<std::uint64_t>(entities)));
    p.relation = static_cast<int>(rng.below(static_cast<std::uint64_t>(relations)));
    do {
      p.tail = static_cast<int>(rng.below(static_cast<std::uint64_t>(entities)));
    } while (p.tail == p.head);
    inst.positives.push_back(p);
    std::vector<Triple> ns;
    for (int j = 0; j < nneg; ++j) {
      Triple n = p;
      do {
        n.tail = static_cast<int>(rng.below(static_cast<std::uint64_t>(entities)));
      } while (n.tail == n.head);
      ns.push_back(n);
    }
    inst.negatives.push_back(ns);
  }
  return inst;
}

double instance_loss(const KgeModel& m, const Instance& inst, LossFamily family,
                     double margin) {
  std::vector<double> pos;
  std::vector<std::vector<double>> neg;
  for (std::size_t i = 0; i < inst.positives.size(); ++i) {
    const Triple& p = inst.positives[i];
    pos.push_back(score_triple(m, p.head, p.relation, p.tail));
    std::vector<double> ns;
    for (const Triple& n : inst.negatives[i]) {
      ns.push_back(score_triple(m, n.head, n.relation, n.tail));
    }
    neg.push_back(ns);
  }
  return batch_loss(family, pos, neg, margin);
}

std::vector<double> instance_grad(const KgeModel& m, const Instance& inst,
                                  LossFamily family, double margin) {
  std::vector<double> pos;
  std::vector<std::vector<double>> neg;
  for (std::size_t i = 0; i < inst.positives.size(); ++i) {
    const Triple& p = inst.positives[i];
    pos.push_back(score_triple(m, p.head, p.relation, p.tail));
    std::vector<double> ns;
    for (const Triple& n : inst.negatives[i]) {
      ns.push_back(score_triple(m, n.head, n.relation, n.tail));
    }
    neg.push_back(ns);
  }
  LossGrad lg = batch_loss_grad(family, pos, neg, margin);
  std::vector<double> grad(m.params.size(), 0.0);
  for (std::size_t i = 0; i < inst.positives.size(); ++i) {
    const Triple& p = inst.positives[i];
    score_backward(m, p.head, p.relation, p.tail, lg.dpos[i], grad);
    for (std::size_t j = 0; j < inst.negatives[i].size(); ++j) {
      const Triple& n = inst.negatives[i][j];
      score_backward(m, n.head, n.relation, n.tail, lg.dneg[i][j], grad);
    }
  }
  return grad;
}

// A margin-loss batch sitting on a hinge kink makes central differences
// meaningless; skip those instances.
bool near_margin_kink(const KgeModel& m, const Instance& inst, double margin) {
  for (std::size_t i = 0; i < inst.positives.size(); ++i) {
    const Triple& p = inst.positives[i];
    const double sp = score_triple(m, p.head, p.relation, p.tail);
    for (const Triple& n : inst.negatives[i]) {
      const double sn = score_triple(m, n.head, n.relation, n.tail);
      if (std::fabs(margin - sp + sn) < 1e-3) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("analytic gradients match finite differences for every kind") {
  Rng rng(1234);
  for (ModelKind kind : all_model_kinds()) {
    const LossFamily family = default_loss_family(kind);
    int checked = 0;
    int attempts = 0;
    while (checked < 8 && attempts < 200) {
      ++attempts;
      KgeModel m = init_model(kind, 3, 5, 3, rng.next_u64(), 2, 2);
      sappkg_test::randomize_params(m, rng, 0.6);
      Instance inst = random_instance(rng, 5, 3, 2, 2);
      const double margin = 1.0;
      if ((family == LossFamily::kPairwiseMargin ||
           family == LossFamily::kSelfAdversarial) &&
          near_margin_kink(m, inst, margin)) {
        continue;
      }
      auto grad = instance_grad(m, inst, family, margin);
      auto res = finite_difference_check(
          m.params, [&]() { return instance_loss(m, inst, family, margin); }, grad);
      INFO("kind=" << model_kind_name(kind) << " worst=" << res.worst_index);
      CHECK(res.max_rel_err < 1e-4);
      ++checked;
    }
    CHECK(checked == 8);
  }
}

TEST_CASE("gradients under every loss family, including the optional ones") {
  Rng rng(555);
  for (LossFamily family :
       {LossFamily::kPairwiseMargin, LossFamily::kPointwiseLogistic,
        LossFamily::kMulticlass, LossFamily::kSelfAdversarial}) {
    int checked = 0, attempts = 0;
    while (checked < 5 && attempts < 100) {
      ++attempts;
      KgeModel m = init_model(ModelKind::kRotatE, 3, 5, 2, rng.next_u64());
      sappkg_test::randomize_params(m, rng, 0.5);
      Instance inst = random_instance(rng, 5, 2, 2, 3);
      if ((family == LossFamily::kPairwiseMargin ||
           family == LossFamily::kSelfAdversarial) &&
          near_margin_kink(m, inst, 1.0)) {
        continue;
      }
      auto grad = instance_grad(m, inst, family, 1.0);
      auto res = finite_difference_check(
          m.params, [&]() { return instance_loss(m, inst, family, 1.0); }, grad);
      INFO("family=" << loss_family_name(family));
      CHECK(res.max_rel_err < 1e-4);
      ++checked;
    }
    CHECK(checked == 5);
  }
}

TEST_CASE("batch_loss: spec arithmetic") {
  // satisfied margin
  CHECK(batch_loss(LossFamily::kPairwiseMargin, {5.0}, {{1.0}}, 1.0) == 0.0);
  // flat scores cost exactly the margin
  CHECK(batch_loss(LossFamily::kPairwiseMargin, {0.0}, {{0.0}}, 1.0) == 1.0);
  // multiple pairs average
  CHECK(batch_loss(LossFamily::kPairwiseMargin, {0.0, 5.0}, {{0.0}, {1.0}}, 1.0) ==
        Catch::Approx(0.5));
  // perfectly separated logistic loss vanishes
  CHECK(batch_loss(LossFamily::kPointwiseLogistic, {1e4}, {{-1e4}}, 1.0) ==
        Catch::Approx(0.0).margin(1e-12));
  // empty batch
  CHECK_THROWS_AS(batch_loss(LossFamily::kPairwiseMargin, {}, {}, 1.0), InputError);
  CHECK_THROWS_AS(batch_loss(LossFamily::kMulticlass, {1.0}, {{}}, 1.0), InputError);
}

TEST_CASE("batch_loss: margin and logistic losses are nonnegative") {
  Rng rng(9);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> pos = {rng.normal() * 3};
    std::vector<std::vector<double>> neg = {{rng.normal() * 3, rng.normal() * 3}};
    CHECK(batch_loss(LossFamily::kPairwiseMargin, pos, neg, 1.0) >= 0.0);
    CHECK(batch_loss(LossFamily::kPointwiseLogistic, pos, neg, 1.0) >= 0.0);
    CHECK(batch_loss(LossFamily::kMulticlass, pos, neg, 1.0) >= 0.0);
  }
}
