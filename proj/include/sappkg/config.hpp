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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sappkg/binning.hpp"
#include "sappkg/deep.hpp"
#include "sappkg/kge_train.hpp"
#include "sappkg/synthetic.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// Run configuration for the CLI: one key = value file drives every command,
// flags override keys. Every seed is explicit; stage seeds default to
// mixes of the master seed so one --seed reshuffles the whole pipeline
// reproducibly.
struct RunConfig {
  std::string corpus;            // records file (JSON lines)
  std::string workdir = "out";
  std::optional<Date> snapshot_date;
  int edge_k = 1;
  int released_groups = 13;
  int size_groups = 7;
  double train_ratio = 0.6, valid_ratio = 0.2, test_ratio = 0.2;
  std::uint64_t seed = 42;  // master
  std::optional<std::uint64_t> edge_seed, split_seed, train_seed, deep_seed,
      synthetic_seed;

  // synthetic corpus (used by `build` when no corpus file is given)
  std::size_t synthetic_count = 0;
  std::map<std::string, double> synthetic_mix = {
      {"Photography", 0.34}, {"Productivity", 0.33}, {"Games", 0.33}};
  double synthetic_missing_rate = 0.002;
  std::map<std::string, double> synthetic_missing_overrides;
  std::size_t synthetic_clusters = 0;

  // shallow training
  TrainConfig train;
  std::optional<std::string> loss_name;       // margin|logistic|multiclass|self_adversarial
  std::optional<std::string> optimizer_name;  // sgd|adam

  // deep training
  DeepConfig deep;

  // evaluation / reporting
  std::vector<int> eval_klist = {10, 20, 30, 40};
  std::vector<int> relation_klist = {1, 3, 5, 7};
  int recommend_k = 10;
  int bench_k = 10;
  std::vector<std::string> ablate_models = {"complex", "rotate"};
  std::vector<std::string> bench_models = {"complex", "rotate"};

  std::uint64_t resolve_seed(const std::optional<std::uint64_t>& explicit_seed,
                             std::uint64_t tag) const {
    return explicit_seed ? *explicit_seed : mix64(seed, tag);
  }
  std::uint64_t edge_seed_value() const { return resolve_seed(edge_seed, 0xe53eULL); }
  std::uint64_t split_seed_value() const { return resolve_seed(split_seed, 0x5b117ULL); }
  std::uint64_t train_seed_value() const { return resolve_seed(train_seed, 0x7321aULL); }
  std::uint64_t deep_seed_value() const { return resolve_seed(deep_seed, 0xdee9ULL); }
  std::uint64_t synthetic_seed_value() const {
    return resolve_seed(synthetic_seed, 0x5717ULL);
  }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw InputError("");
    return d;
  } catch (const std::exception&) {
    throw InputError("config: bad number for " + key + ": '" + v + "'");
  }
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    std::int64_t i = std::stoll(v, &pos);
    if (pos != v.size()) throw InputError("");
    return i;
  } catch (const std::exception&) {
    throw InputError("config: bad integer for " + key + ": '" + v + "'");
  }
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const std::string& part : split(v, ',')) {
    out.push_back(static_cast<int>(parse_int(key, trim(part))));
  }
  return out;
}

inline std::map<std::string, double> parse_mix(const std::string& key,
                                               const std::string& v) {
  std::map<std::string, double> out;
  for (const std::string& part : split(v, ',')) {
    const auto kv = split(trim(part), ':');
    if (kv.size() != 2) throw InputError("config: bad mix entry in " + key);
    out[trim(kv[0])] = parse_double(key, trim(kv[1]));
  }
  return out;
}

inline std::vector<std::string> parse_name_list(const std::string& v) {
  std::vector<std::string> out;
  for (const std::string& part : split(v, ',')) {
    const std::string t = trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace detail

inline void apply_config_entry(RunConfig& rc, const std::string& key,
                               const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  if (key == "corpus") rc.corpus = value;
  else if (key == "workdir") rc.workdir = value;
  else if (key == "snapshot_date") rc.snapshot_date = parse_date(value);
  else if (key == "edge_k") rc.edge_k = static_cast<int>(parse_int(key, value));
  else if (key == "released_groups") rc.released_groups = static_cast<int>(parse_int(key, value));
  else if (key == "size_groups") rc.size_groups = static_cast<int>(parse_int(key, value));
  else if (key == "split_ratios") {
    const auto parts = split(value, ',');
    if (parts.size() != 3) throw InputError("config: split_ratios needs three values");
    rc.train_ratio = parse_double(key, trim(parts[0]));
    rc.valid_ratio = parse_double(key, trim(parts[1]));
    rc.test_ratio = parse_double(key, trim(parts[2]));
  } else if (key == "seed") rc.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "edge_seed") rc.edge_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "split_seed") rc.split_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "train_seed") rc.train_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "deep_seed") rc.deep_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "synthetic_seed") rc.synthetic_seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "synthetic_count") rc.synthetic_count = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "synthetic_mix") rc.synthetic_mix = detail::parse_mix(key, value);
  else if (key == "synthetic_missing_rate") rc.synthetic_missing_rate = parse_double(key, value);
  else if (key == "synthetic_clusters") rc.synthetic_clusters = static_cast<std::size_t>(parse_int(key, value));
  else if (key.rfind("synthetic_missing_", 0) == 0) {
    rc.synthetic_missing_overrides[key.substr(18)] = parse_double(key, value);
  } else if (key == "dim") rc.train.dim = static_cast<int>(parse_int(key, value));
  else if (key == "epochs") rc.train.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "batch_size") rc.train.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "learning_rate") rc.train.learning_rate = parse_double(key, value);
  else if (key == "loss") rc.loss_name = value;
  else if (key == "optimizer") rc.optimizer_name = value;
  else if (key == "margin") rc.train.margin = parse_double(key, value);
  else if (key == "negatives") rc.train.negatives_per_positive = static_cast<int>(parse_int(key, value));
  else if (key == "l2") rc.train.l2_weight = parse_double(key, value);
  else if (key == "slices") rc.train.slices = static_cast<int>(parse_int(key, value));
  else if (key == "adv_temperature") rc.train.adv_temperature = parse_double(key, value);
  else if (key == "grad_clip") rc.train.grad_clip_norm = parse_double(key, value);
  else if (key == "validation_interval") rc.train.validation_interval = static_cast<int>(parse_int(key, value));
  else if (key == "filter_negatives") rc.train.filter_negatives = value == "1" || value == "true";
  else if (key == "deep_dim") rc.deep.deep_dim = static_cast<int>(parse_int(key, value));
  else if (key == "deep_depth") rc.deep.depth = static_cast<int>(parse_int(key, value));
  else if (key == "deep_sample_size") rc.deep.sample_size = static_cast<int>(parse_int(key, value));
  else if (key == "deep_batch") rc.deep.batch_size = static_cast<int>(parse_int(key, value));
  else if (key == "deep_lr") rc.deep.learning_rate = parse_double(key, value);
  else if (key == "deep_l2") rc.deep.l2_weight = parse_double(key, value);
  else if (key == "deep_epochs") rc.deep.epochs = static_cast<int>(parse_int(key, value));
  else if (key == "eval_klist") rc.eval_klist = detail::parse_int_list(key, value);
  else if (key == "relation_klist") rc.relation_klist = detail::parse_int_list(key, value);
  else if (key == "recommend_k") rc.recommend_k = static_cast<int>(parse_int(key, value));
  else if (key == "bench_k") rc.bench_k = static_cast<int>(parse_int(key, value));
  else if (key == "ablate_models") rc.ablate_models = detail::parse_name_list(value);
  else if (key == "bench_models") rc.bench_models = detail::parse_name_list(value);
  else throw InputError("config: unknown key '" + key + "'");
}

inline RunConfig load_run_config(const std::string& path) {
  RunConfig rc;
  const std::string content = read_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config: line " + std::to_string(line_no) +
                       " is not key = value");
    }
    apply_config_entry(rc, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return rc;
}

// Train config with the kind-independent knobs resolved from names.
inline TrainConfig resolved_train_config(const RunConfig& rc) {
  TrainConfig tc = rc.train;
  tc.seed = rc.train_seed_value();
  if (rc.loss_name) {
    tc.loss_family = loss_family_from_name(*rc.loss_name);
    tc.loss_family_set = true;
  }
  if (rc.optimizer_name) {
    if (*rc.optimizer_name == "sgd") tc.optimizer = Optimizer::kSgd;
    else if (*rc.optimizer_name == "adam") tc.optimizer = Optimizer::kAdam;
    else throw InputError("config: unknown optimizer '" + *rc.optimizer_name + "'");
    tc.optimizer_set = true;
  }
  return tc;
}

inline SyntheticConfig resolved_synthetic_config(const RunConfig& rc) {
  SyntheticConfig sc;
  sc.seed = rc.synthetic_seed_value();
  sc.count = rc.synthetic_count;
  sc.category_mix = rc.synthetic_mix;
  sc.default_missing_rate = rc.synthetic_missing_rate;
  sc.missing_rates = rc.synthetic_missing_overrides;
  sc.clusters = rc.synthetic_clusters;
  if (rc.snapshot_date) sc.released_base = *rc.snapshot_date;
  return sc;
}

}  // namespace sappkg
