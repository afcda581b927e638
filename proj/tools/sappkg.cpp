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

// Command-line front end wiring the pipeline: build, stats, train, eval,
// ablate, recommend, relations, bench. Every command is a pure function of
// the config file and the input files; reruns are byte-identical.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "sappkg/config.hpp"
#include "sappkg/record.hpp"
#include "sappkg/report.hpp"
#include "sappkg/stats.hpp"
#include "sappkg/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sappkg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

fs::path workdir_path(const RunConfig& rc) { return fs::path(rc.workdir); }

struct Built {
  KnowledgeGraph kg;
  SplitSet splits;
};

Built load_built(const RunConfig& rc) {
  const fs::path wd = workdir_path(rc);
  const fs::path kg_path = wd / "kg.tsv";
  if (!fs::exists(kg_path)) {
    throw InputError("no knowledge graph at " + kg_path.string() +
                     " (run `sappkg build` first)");
  }
  KnowledgeGraph kg = deserialize_kg(kg_path.string());
  SplitSet splits;
  splits.train = parse_triples_against(kg, read_file((wd / "splits/train.tsv").string()));
  splits.valid = parse_triples_against(kg, read_file((wd / "splits/valid.tsv").string()));
  splits.test = parse_triples_against(kg, read_file((wd / "splits/test.tsv").string()));
  splits.train_ratio = rc.train_ratio;
  splits.valid_ratio = rc.valid_ratio;
  splits.test_ratio = rc.test_ratio;
  splits.seed = rc.split_seed_value();
  return {std::move(kg), std::move(splits)};
}

KgeModel load_checkpoint_for(const RunConfig& rc, const KnowledgeGraph& kg,
                             const std::string& kind_name) {
  const fs::path path = workdir_path(rc) / (kind_name + ".ckpt");
  if (!fs::exists(path)) {
    throw InputError("no checkpoint at " + path.string() +
                     " (run `sappkg train " + kind_name + "` first)");
  }
  std::map<std::string, std::string> fields;
  KgeModel model = load_model(path.string(), &fields);
  if (std::string(model_kind_name(model.kind)) != kind_name) {
    throw InputError("checkpoint kind mismatch: file holds " +
                     std::string(model_kind_name(model.kind)) + ", expected " +
                     kind_name);
  }
  if (auto it = fields.find("vocab_hash"); it != fields.end()) {
    if (it->second != std::to_string(vocab_hash(kg.entity_ids()))) {
      throw InputError("checkpoint was trained on a different graph (vocab hash mismatch)");
    }
  }
  return model;
}

DeepModel load_deep_for(const RunConfig& rc, const KnowledgeGraph& kg) {
  const fs::path path = workdir_path(rc) / "deep.ckpt";
  if (!fs::exists(path)) {
    throw InputError("no deep checkpoint at " + path.string() +
                     " (run `sappkg train deep` first)");
  }
  std::map<std::string, std::string> fields;
  DeepModel model = load_deep_model(path.string(), &fields);
  if (auto it = fields.find("vocab_hash"); it != fields.end()) {
    if (it->second != std::to_string(vocab_hash(kg.entity_ids()))) {
      throw InputError("deep checkpoint was trained on a different graph");
    }
  }
  return model;
}

// Undirected train partners per entity, the default recommendation exclusions.
std::unordered_set<int> train_exclusions(const SplitSet& splits, int anchor) {
  std::unordered_set<int> excl;
  for (const Triple& t : splits.train) {
    if (t.head == anchor) excl.insert(t.tail);
    if (t.tail == anchor) excl.insert(t.head);
  }
  return excl;
}

// ---------------------------------------------------------------------------

void cmd_build(const RunConfig& rc) {
  if (!rc.snapshot_date) throw InputError("config: snapshot_date is required");
  const fs::path wd = workdir_path(rc);
  fs::create_directories(wd / "splits");

  std::string corpus_bytes;
  if (!rc.corpus.empty()) {
    if (!fs::exists(rc.corpus)) throw InputError("corpus file not found: " + rc.corpus);
    corpus_bytes = read_file(rc.corpus);
  } else if (rc.synthetic_count > 0) {
    const auto corpus = generate_synthetic_corpus(resolved_synthetic_config(rc));
    corpus_bytes = serialize_app_records(corpus);
    write_file((wd / "corpus.jsonl").string(), corpus_bytes);
  } else {
    throw InputError("config: set either corpus or synthetic_count");
  }

  ParseResult parsed = parse_app_records(corpus_bytes);
  for (const ParseIssue& issue : parsed.issues) {
    std::cerr << "warning: line " << issue.line << ": " << issue.message << "\n";
  }
  const ValidationReport vrep = validate_records(parsed.records);
  std::vector<AppRecord> accepted;
  accepted.reserve(vrep.accepted);
  {
    std::set<std::string> bad;
    for (const auto& [id, reason] : vrep.rejected) {
      bad.insert(id);
      std::cerr << "rejected " << id << ": " << reason << "\n";
    }
    for (const AppRecord& r : parsed.records) {
      if (!bad.count(r.app_id)) accepted.push_back(r);
    }
  }
  if (accepted.size() < 2) throw InputError("need at least 2 valid records");

  BinningOptions opts;
  opts.released_groups = rc.released_groups;
  opts.size_groups = rc.size_groups;
  const BinningSpec spec = fit_binning(accepted, *rc.snapshot_date, opts);
  const auto features = apply_binning(accepted, spec);
  const KnowledgeGraph kg = build_triples(features, rc.edge_k, rc.edge_seed_value());
  const SplitSet splits = split_triples(kg, rc.train_ratio, rc.valid_ratio,
                                        rc.test_ratio, rc.split_seed_value());

  serialize_kg(kg, (wd / "kg.tsv").string());
  write_file((wd / "splits/train.tsv").string(), serialize_split(kg, splits.train));
  write_file((wd / "splits/valid.tsv").string(), serialize_split(kg, splits.valid));
  write_file((wd / "splits/test.tsv").string(), serialize_split(kg, splits.test));
  write_file((wd / "manifest.json").string(),
             build_manifest_json(kg, splits, spec, rc.edge_k, rc.edge_seed_value()));

  std::printf("built %zu entities, %zu triples (train %zu / valid %zu / test %zu)\n",
              kg.entity_count(), kg.triple_count(), splits.train.size(),
              splits.valid.size(), splits.test.size());
}

void cmd_stats(const RunConfig& rc) {
  Built b = load_built(rc);
  const GraphStats gs = graph_statistics(b.kg);
  const RelatednessMatrix rm = relatedness_matrix(b.kg);
  const fs::path wd = workdir_path(rc);
  write_file((wd / "stats.tsv").string(), stats_tsv(gs));
  write_file((wd / "relatedness.tsv").string(), relatedness_tsv(rm, b.kg));
  std::printf("nodes %llu  edges %llu  density %.5f  average degree %.2f\n",
              static_cast<unsigned long long>(gs.nodes),
              static_cast<unsigned long long>(gs.edges), gs.density,
              gs.average_degree);
  std::printf("multiplex nodes %llu  triads possible %llu  open triads %llu\n",
              static_cast<unsigned long long>(gs.multiplex_nodes),
              static_cast<unsigned long long>(gs.triads_possible),
              static_cast<unsigned long long>(gs.open_triads));
  std::printf("degree variance %.3f  edge connectivity %llu  diameter %llu  avg path %.3f\n",
              gs.degree_variance,
              static_cast<unsigned long long>(gs.edge_connectivity),
              static_cast<unsigned long long>(gs.diameter), gs.average_shortest_path);
}

void cmd_train(const RunConfig& rc, const std::string& kind_name) {
  Built b = load_built(rc);
  const fs::path wd = workdir_path(rc);
  if (kind_name == "deep") {
    KgeModel shallow = load_checkpoint_for(rc, b.kg, "transd");
    DeepConfig dc = rc.deep;
    dc.seed = rc.deep_seed_value();
    DeepTrace trace;
    DeepModel model = train_deep(b.kg, b.splits, shallow, dc, &trace);
    save_deep_model(model, (wd / "deep.ckpt").string(), "transd.ckpt",
                    {{"vocab_hash", std::to_string(vocab_hash(b.kg.entity_ids()))}});
    write_file((wd / "deep_trace.tsv").string(), deep_trace_tsv(trace));
    std::printf("trained deep model, best epoch %d of %d\n", trace.best_epoch,
                dc.epochs);
    return;
  }
  const ModelKind kind = model_kind_from_name(kind_name);
  const TrainConfig tc = resolved_train_config(rc);
  TrainTrace trace;
  KgeModel model = train_model(b.kg, b.splits, kind, tc, &trace);
  save_model(model, (wd / (kind_name + ".ckpt")).string(),
             {{"seed", std::to_string(tc.seed)},
              {"vocab_hash", std::to_string(vocab_hash(b.kg.entity_ids()))}});
  write_file((wd / ("trace_" + kind_name + ".tsv")).string(), train_trace_tsv(trace));
  std::printf("trained %s, best epoch %d of %d\n", kind_name.c_str(),
              trace.best_epoch, tc.epochs);
}

void cmd_eval(const RunConfig& rc, const std::string& kind_name) {
  Built b = load_built(rc);
  const fs::path wd = workdir_path(rc);
  if (kind_name == "deep") {
    DeepModel model = load_deep_for(rc, b.kg);
    const auto test_pairs = split_pairs(b.splits.test);
    const auto train_pairs = split_pairs(b.splits.train);
    const RecReport rec = evaluate_recommendations(model, b.kg, test_pairs,
                                                   train_pairs, rc.eval_klist);
    write_file((wd / "rec_deep.tsv").string(), rec_report_tsv(rec));
    std::vector<int> rel_klist;
    for (int k : rc.relation_klist) {
      rel_klist.push_back(std::min(k, static_cast<int>(b.kg.relation_count())));
    }
    const RecReport rel =
        evaluate_relation_prediction(model.shallow, b.kg, b.splits.test, rel_klist);
    write_file((wd / "relpred_deep.tsv").string(), rec_report_tsv(rel));
    std::printf("recommendation eval over %zu anchors, relation prediction over %zu pairs\n",
                rec.anchor_count, rel.anchor_count);
    return;
  }
  KgeModel model = load_checkpoint_for(rc, b.kg, kind_name);
  const FilterIndex filter = make_filter(b.splits);
  const EvalReport rep = evaluate_link_prediction(model, b.splits.test, filter);
  write_file((wd / ("eval_" + kind_name + ".tsv")).string(),
             eval_report_tsv(kind_name, rep));
  std::printf("%s: filtered MR %.2f, filtered MRR %.4f, filtered hits@10 %.4f (%zu queries)\n",
              kind_name.c_str(), rep.filtered_mr, rep.filtered_mrr,
              rep.filtered_hits10, rep.query_count);
}

const std::map<std::string, std::vector<int>>& ablation_groups() {
  static const std::map<std::string, std::vector<int>> groups = {
      {"exp1", {kAdSimilar, kEcSimilar, kIapSimilar, kVSimilar}},
      {"exp2", {kCrSimilar, kGidSimilar}},
      {"exp3", {kRelSimilar, kSSimilar}},
      {"exp4", {kRevSimilar, kInsSimilar, kStSimilar, kRtgSimilar}}};
  return groups;
}

void cmd_ablate(const RunConfig& rc, const std::string& exp) {
  const auto& groups = ablation_groups();
  auto it = groups.find(exp);
  if (it == groups.end()) {
    throw InputError("unknown ablation group '" + exp + "' (use exp1..exp4)");
  }
  Built b = load_built(rc);
  const fs::path wd = workdir_path(rc);
  const fs::path ad = wd / ("ablate_" + exp);
  fs::create_directories(ad / "splits");

  KnowledgeGraph ablated = ablate_relations(b.kg, it->second);
  SplitSet asplits = split_triples(ablated, rc.train_ratio, rc.valid_ratio,
                                   rc.test_ratio, rc.split_seed_value());
  serialize_kg(ablated, (ad / "kg.tsv").string());
  write_file((ad / "splits/train.tsv").string(), serialize_split(ablated, asplits.train));
  write_file((ad / "splits/valid.tsv").string(), serialize_split(ablated, asplits.valid));
  write_file((ad / "splits/test.tsv").string(), serialize_split(ablated, asplits.test));

  std::string out =
      "graph\tmodel\tmr\tfiltered_mr\tmrr\tfiltered_mrr"
      "\thits1\tfiltered_hits1\thits3\tfiltered_hits3"
      "\thits5\tfiltered_hits5\thits10\tfiltered_hits10\n";
  const TrainConfig tc = resolved_train_config(rc);
  for (const std::string& name : rc.ablate_models) {
    const ModelKind kind = model_kind_from_name(name);
    for (const bool full : {true, false}) {
      const KnowledgeGraph& g = full ? b.kg : ablated;
      const SplitSet& s = full ? b.splits : asplits;
      KgeModel model = train_model(g, s, kind, tc);
      const EvalReport rep = evaluate_link_prediction(model, s.test, make_filter(s));
      out += std::string(full ? "full" : exp) + "\t" + name;
      for (double v : {rep.mr, rep.filtered_mr, rep.mrr, rep.filtered_mrr,
                       rep.hits1, rep.filtered_hits1, rep.hits3, rep.filtered_hits3,
                       rep.hits5, rep.filtered_hits5, rep.hits10, rep.filtered_hits10}) {
        out += "\t" + fmt_double(v);
      }
      out += "\n";
    }
  }
  write_file((wd / ("ablate_" + exp + ".tsv")).string(), out);
  std::printf("ablation %s: %zu relations remain, %zu triples\n", exp.c_str(),
              ablated.relation_count(), ablated.triple_count());
}

void cmd_recommend(const RunConfig& rc, const std::string& app_id) {
  Built b = load_built(rc);
  const auto anchor = b.kg.entity_index(app_id);
  if (!anchor) throw InputError("unknown app id '" + app_id + "'");
  DeepModel model = load_deep_for(rc, b.kg);
  auto excl = train_exclusions(b.splits, *anchor);
  const auto ranked = recommend_top_k(model, b.kg, *anchor, rc.recommend_k, excl);
  const std::string tsv = recommendation_tsv(b.kg, *anchor, ranked);
  write_file((workdir_path(rc) / ("recommend_" + app_id + ".tsv")).string(), tsv);
  std::fputs(tsv.c_str(), stdout);
}

void cmd_relations(const RunConfig& rc, const std::string& a, const std::string& bid) {
  Built b = load_built(rc);
  const auto h = b.kg.entity_index(a);
  const auto t = b.kg.entity_index(bid);
  if (!h || !t) throw InputError("unknown app id");
  KgeModel shallow = load_checkpoint_for(rc, b.kg, "transd");
  int k = 1;
  for (int kk : rc.relation_klist) k = std::max(k, kk);
  k = std::min(k, static_cast<int>(b.kg.relation_count()));
  const auto ranked = predict_relations(shallow, *h, *t, k);
  std::string out = "rank\trelation\tscore\ttrue\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out += std::to_string(i + 1) + "\t" + b.kg.relation_name(ranked[i].first) + "\t" +
           fmt_double(ranked[i].second) + "\t" +
           (b.kg.has_triple(*h, ranked[i].first, *t) ? "1" : "0") + "\n";
  }
  write_file((workdir_path(rc) / ("relations_" + a + "_" + bid + ".tsv")).string(), out);
  std::fputs(out.c_str(), stdout);
}

void cmd_bench(const RunConfig& rc) {
  Built b = load_built(rc);
  const fs::path wd = workdir_path(rc);
  if (b.splits.test.empty()) throw InputError("bench: empty test split");
  std::set<int> entity_set;
  for (const Triple& t : b.splits.test) {
    entity_set.insert(t.head);
    entity_set.insert(t.tail);
  }
  const std::vector<int> entities(entity_set.begin(), entity_set.end());

  std::vector<std::pair<std::string, TimingReport>> rows;
  for (const std::string& name : rc.bench_models) {
    TimingReport rep;
    if (name == "deep") {
      DeepModel model = load_deep_for(rc, b.kg);
      rep = measure_inference(entities, [&](int e) {
        recommend_top_k(model, b.kg, e, rc.bench_k);
      });
    } else {
      KgeModel model = load_checkpoint_for(rc, b.kg, name);
      const int n = static_cast<int>(b.kg.entity_count());
      rep = measure_inference(entities, [&](int e) {
        // full entity ranking per relation, the S-model inference pass
        for (int r = 0; r < static_cast<int>(b.kg.relation_count()); ++r) {
          double best = -std::numeric_limits<double>::infinity();
          int best_t = -1;
          for (int cand = 0; cand < n; ++cand) {
            if (cand == e) continue;
            const double s = score_triple(model, e, r, cand);
            if (s > best) {
              best = s;
              best_t = cand;
            }
          }
          (void)best_t;
        }
      });
    }
    write_file((wd / ("bench_times_" + name + ".tsv")).string(),
               timing_sidecar_tsv(entities, b.kg, rep));
    rows.push_back({name, rep});
  }
  write_file((wd / "bench.tsv").string(), timing_tsv(rows));
  for (const auto& [name, rep] : rows) {
    std::printf("%s: %.3f ms mean over %zu entities\n", name.c_str(), rep.mean_ms,
                rep.times_ms.size());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"app-app knowledge graph recommender pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::int64_t> seed_flag;
  std::string workdir_flag;
  app.add_option("--config", config_path, "key = value run configuration file");
  app.add_option("--seed", seed_flag, "override the master seed");
  app.add_option("--workdir", workdir_flag, "override the working directory");

  auto* build = app.add_subcommand("build", "build the graph and splits from a corpus");
  auto* stats = app.add_subcommand("stats", "graph statistics and relation relatedness");
  std::string train_kind;
  auto* train = app.add_subcommand("train", "train a model (kind or 'deep')");
  train->add_option("kind", train_kind)->required();
  std::string eval_kind;
  auto* eval = app.add_subcommand("eval", "evaluate a trained model (kind or 'deep')");
  eval->add_option("kind", eval_kind)->required();
  std::string ablate_exp;
  auto* ablate = app.add_subcommand("ablate", "drop a feature group and retrain");
  ablate->add_option("group", ablate_exp)->required();
  std::string rec_app;
  auto* recommend = app.add_subcommand("recommend", "top-K apps for an anchor app");
  recommend->add_option("app_id", rec_app)->required();
  std::string rel_a, rel_b;
  auto* relations = app.add_subcommand("relations", "rank relations for an app pair");
  relations->add_option("app_a", rel_a)->required();
  relations->add_option("app_b", rel_b)->required();
  auto* bench = app.add_subcommand("bench", "average inference time per model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    RunConfig rc;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) {
        throw InputError("config file not found: " + config_path);
      }
      rc = load_run_config(config_path);
    }
    if (seed_flag) rc.seed = static_cast<std::uint64_t>(*seed_flag);
    if (!workdir_flag.empty()) rc.workdir = workdir_flag;

    if (build->parsed()) cmd_build(rc);
    else if (stats->parsed()) cmd_stats(rc);
    else if (train->parsed()) cmd_train(rc, train_kind);
    else if (eval->parsed()) cmd_eval(rc, eval_kind);
    else if (ablate->parsed()) cmd_ablate(rc, ablate_exp);
    else if (recommend->parsed()) cmd_recommend(rc, rec_app);
    else if (relations->parsed()) cmd_relations(rc, rel_a, rel_b);
    else if (bench->parsed()) cmd_bench(rc);
    return 0;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
