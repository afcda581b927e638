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

#include "sappkg/binning.hpp"
#include "sappkg/synthetic.hpp"

using namespace sappkg;

namespace {

// Independent linear-interpolation percentile, for checking the fitted edges.
double reference_percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double idx = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (idx - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

AppRecord minimal(const std::string& id) {
  AppRecord r;
  r.app_id = id;
  return r;
}

// Corpus with enough numeric coverage for the quantile fits.
std::vector<AppRecord> quantile_corpus() {
  std::vector<AppRecord> corpus;
  for (int i = 1; i <= 100; ++i) {
    AppRecord r = minimal("app" + std::to_string(i));
    r.ratings = i;
    r.reviews = i * 2;
    r.score_text = static_cast<double>(i % 50) / 10.0;
    corpus.push_back(r);
  }
  return corpus;
}

}  // namespace

TEST_CASE("fit_binning: size edges are the fixed published edges") {
  std::vector<AppRecord> corpus;
  for (int i = 0; i < 5; ++i) {
    AppRecord r = quantile_corpus()[static_cast<std::size_t>(i)];
    r.size = "29M";
    corpus.push_back(r);
  }
  auto spec = fit_binning(corpus, Date{2023, 7, 1});
  CHECK(spec.size_map.edges ==
        std::vector<double>{1, 20000, 40000, 60000, 80000, 100000});
  for (const auto& r : corpus) {
    auto f = apply_binning(r, spec);
    REQUIRE(f.bins[kSSimilar].has_value());
    CHECK(*f.bins[kSSimilar] == 2);  // 29M = 29696 KB -> (20000-40000)-2
  }
}

TEST_CASE("fit_binning: quantile edges match an independent percentile routine") {
  auto corpus = quantile_corpus();
  auto spec = fit_binning(corpus, Date{2023, 7, 1});
  std::vector<double> ratings;
  for (const auto& r : corpus) ratings.push_back(static_cast<double>(*r.ratings));
  REQUIRE(spec.ratings_map.edges.size() == 4);
  for (int i = 1; i <= 4; ++i) {
    CHECK(spec.ratings_map.edges[static_cast<std::size_t>(i - 1)] ==
          Catch::Approx(reference_percentile(ratings, i / 5.0)).epsilon(1e-12));
  }
  CHECK(spec.ratings_map.labels == 5);
  CHECK(spec.score_map.requested_labels == 8);
}

TEST_CASE("fit_binning: released bin is 0 when snapshot equals release date") {
  auto corpus = quantile_corpus();
  const Date snap{2023, 7, 1};
  for (auto& r : corpus) r.released = snap;
  auto spec = fit_binning(corpus, snap);
  for (const auto& r : corpus) {
    auto f = apply_binning(r, spec);
    REQUIRE(f.bins[kRelSimilar].has_value());
    CHECK(*f.bins[kRelSimilar] == 0);
  }
}

TEST_CASE("fit_binning: quantile fit fails when an attribute is absent everywhere") {
  std::vector<AppRecord> corpus = {minimal("a"), minimal("b")};
  corpus[0].reviews = 5;
  corpus[1].reviews = 9;
  corpus[0].score_text = 4.0;
  corpus[1].score_text = 3.0;
  // ratings never present
  CHECK_THROWS_WITH(fit_binning(corpus, Date{2023, 7, 1}),
                    Catch::Matchers::ContainsSubstring("ratings"));
}

TEST_CASE("fit_binning: duplicate quantile edges merge and shrink the label count") {
  std::vector<AppRecord> corpus;
  for (int i = 0; i < 100; ++i) {
    AppRecord r = minimal("app" + std::to_string(i));
    r.ratings = 7;  // fully tied
    r.reviews = i;
    r.score_text = 4.0;
    corpus.push_back(r);
  }
  corpus[99].ratings = 8;
  auto spec = fit_binning(corpus, Date{2023, 7, 1});
  CHECK(spec.ratings_map.requested_labels == 5);
  CHECK(spec.ratings_map.labels < 5);
  CHECK(spec.ratings_map.labels == static_cast<int>(spec.ratings_map.edges.size()) + 1);
  // score is a single value: everything collapses into one label
  CHECK(spec.score_map.labels == 1);
}

TEST_CASE("apply_binning: content rating Teen maps to label 1") {
  auto corpus = quantile_corpus();
  auto spec = fit_binning(corpus, Date{2023, 7, 1});
  AppRecord r = minimal("teen.app");
  r.content_rating = ContentRating::kTeen;
  auto f = apply_binning(r, spec);
  REQUIRE(f.bins[kCrSimilar].has_value());
  CHECK(*f.bins[kCrSimilar] == 1);
  CHECK_FALSE(f.bins[kRtgSimilar].has_value());  // missing ratings -> absent bin
}

TEST_CASE("apply_binning: size strings normalize to KB before the lookup") {
  auto spec = fit_binning(quantile_corpus(), Date{2023, 7, 1});
  CHECK(parse_size_kb("29M") == Catch::Approx(29696.0));
  CHECK(spec.size_map.bin(29696.0) == 2);
  CHECK(spec.size_map.bin(0.5) == 0);
  CHECK(parse_size_kb("Varies with device") == 0.0);
  CHECK(spec.size_map.bin(parse_size_kb("Varies with device")) == 0);
  CHECK(spec.size_map.bin(250000.0) == 6);  // > 100 MB is the open top bin
  CHECK(parse_size_kb("512k") == 512.0);
}

TEST_CASE("apply_binning: unknown categorical value names value and attribute") {
  auto spec = fit_binning(quantile_corpus(), Date{2023, 7, 1});
  AppRecord r = minimal("weird.app");
  r.genre_id = "TOOLS";
  CHECK_THROWS_WITH(apply_binning(r, spec),
                    Catch::Matchers::ContainsSubstring("TOOLS") &&
                        Catch::Matchers::ContainsSubstring("genreId"));
  AppRecord r2 = minimal("weird2.app");
  r2.installs = "lots";
  CHECK_THROWS_WITH(apply_binning(r2, spec),
                    Catch::Matchers::ContainsSubstring("lots"));
}

TEST_CASE("apply_binning: installs interval groups") {
  auto spec = fit_binning(quantile_corpus(), Date{2023, 7, 1});
  CHECK(parse_installs("1,000+") == 1000);
  CHECK(spec.installs_map.bin(500) == 0);
  CHECK(spec.installs_map.bin(1000) == 1);
  CHECK(spec.installs_map.bin(50000) == 1);
  CHECK(spec.installs_map.bin(100000) == 2);
  CHECK(spec.installs_map.bin(5000000) == 2);
  CHECK(spec.installs_map.bin(10000000) == 3);
  CHECK(spec.installs_map.bin(500000000) == 3);
}

TEST_CASE("released interval map: 13 groups, monthly edges, open top") {
  auto im = released_interval_map(13);
  CHECK(im.labels == 13);
  CHECK(im.edges.size() == 12);
  CHECK(im.bin(0) == 0);
  CHECK(im.bin(29) == 0);    // within 1 month
  CHECK(im.bin(31) == 1);    // second month
  CHECK(im.bin(364) == 11);
  CHECK(im.bin(366) == 12);  // after a year
  auto seven = released_interval_map(7);  // summary-table variant
  CHECK(seven.labels == 7);
  CHECK(seven.edges.size() == 6);
}

TEST_CASE("quantile bins of 1..100 split at 20/40/60/80") {
  std::vector<double> values;
  for (int i = 1; i <= 100; ++i) values.push_back(i);
  auto qm = fit_quantile_map(values, 5, "ratings");
  CHECK(qm.bin(1) == 0);
  CHECK(qm.bin(20) == 0);
  CHECK(qm.bin(21) == 1);
  CHECK(qm.bin(60) == 2);
  CHECK(qm.bin(100) == 4);
  CHECK(qm.bin(-5) == 0);
  CHECK(qm.bin(1e9) == 4);
}

TEST_CASE("group counts are exposed per relation") {
  auto spec = fit_binning(quantile_corpus(), Date{2023, 7, 1});
  CHECK(spec.group_count(kAdSimilar) == 2);
  CHECK(spec.group_count(kCrSimilar) == 4);
  CHECK(spec.group_count(kGidSimilar) == 3);
  CHECK(spec.group_count(kInsSimilar) == 4);
  CHECK(spec.group_count(kRtgSimilar) == 5);
  CHECK(spec.group_count(kRelSimilar) == 13);
  CHECK(spec.group_count(kRevSimilar) == 5);
  CHECK(spec.group_count(kStSimilar) == 8);
  CHECK(spec.group_count(kSSimilar) == 7);
  CHECK(spec.group_count(kVSimilar) == 2);
}
