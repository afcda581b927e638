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

#include "sappkg/record.hpp"
#include "sappkg/synthetic.hpp"

using namespace sappkg;

namespace {

// A record with all thirteen attributes, written by hand.
const char* kFullLine =
    R"({"appId":"com.example.full","adSupported":true,"contentRating":"Teen",)"
    R"("editorsChoice":false,"genreId":"PHOTOGRAPHY","installs":"1,000+",)"
    R"("offersIAP":true,"ratings":123456,"released":"2021-05-30",)"
    R"("reviews":5432,"scoreText":4.5,"size":"29M","video":false})";

}  // namespace

TEST_CASE("parse_app_records: empty stream yields empty list") {
  auto res = parse_app_records("");
  CHECK(res.records.empty());
  CHECK(res.issues.empty());
}

TEST_CASE("parse_app_records: fully populated record round-trips") {
  auto res = parse_app_records(std::string(kFullLine) + "\n");
  REQUIRE(res.records.size() == 1);
  REQUIRE(res.issues.empty());
  const AppRecord& r = res.records[0];
  CHECK(r.app_id == "com.example.full");
  CHECK(r.ad_supported == true);
  CHECK(r.content_rating == ContentRating::kTeen);
  CHECK(r.editors_choice == false);
  CHECK(r.genre_id == "PHOTOGRAPHY");
  CHECK(r.installs == "1,000+");
  CHECK(r.offers_iap == true);
  CHECK(r.ratings == 123456);
  REQUIRE(r.released.has_value());
  CHECK(r.released->year == 2021);
  CHECK(r.released->month == 5);
  CHECK(r.released->day == 30);
  CHECK(r.reviews == 5432);
  CHECK(r.score_text == 4.5);
  CHECK(r.size == "29M");
  CHECK(r.video == false);

  auto again = parse_app_records(serialize_app_records(res.records));
  REQUIRE(again.records.size() == 1);
  CHECK(again.records[0] == r);
}

TEST_CASE("parse_app_records: duplicate appId is a hard error") {
  const std::string two = R"({"appId":"com.x"})" "\n" R"({"appId":"com.x"})" "\n";
  CHECK_THROWS_WITH(parse_app_records(two),
                    Catch::Matchers::ContainsSubstring("com.x"));
}

TEST_CASE("parse_app_records: malformed lines are collected, not fatal") {
  const std::string mixed = R"({"appId":"com.a"})" "\n"
                            "not json\n"
                            R"({"appId":"com.b","ratings":"abc"})" "\n"
                            R"({"appId":"com.c"})" "\n";
  auto res = parse_app_records(mixed);
  REQUIRE(res.records.size() == 2);
  CHECK(res.records[0].app_id == "com.a");
  CHECK(res.records[1].app_id == "com.c");
  REQUIRE(res.issues.size() == 2);
  CHECK(res.issues[0].line == 2);
  CHECK(res.issues[1].line == 3);
}

TEST_CASE("parse -> serialize -> parse is a fixed point") {
  SyntheticConfig cfg;
  cfg.seed = 21;
  cfg.count = 200;
  auto corpus = generate_synthetic_corpus(cfg);
  auto once = parse_app_records(serialize_app_records(corpus));
  REQUIRE(once.issues.empty());
  auto twice = parse_app_records(serialize_app_records(once.records));
  CHECK(once.records == twice.records);
  CHECK(once.records == corpus);
}

TEST_CASE("validate_records: missing counts at corpus scale") {
  // 1793 records, exactly 4 of them without ratings.
  std::vector<AppRecord> records;
  for (int i = 0; i < 1793; ++i) {
    AppRecord r;
    r.app_id = "app" + std::to_string(i);
    if (i >= 4) r.ratings = 100;
    records.push_back(r);
  }
  auto rep = validate_records(records);
  CHECK(rep.record_count == 1793);
  CHECK(rep.accepted == 1793);
  CHECK(rep.missing.at("ratings") == 4);
}

TEST_CASE("validate_records: bare record is accepted with 12 missing") {
  AppRecord r;
  r.app_id = "com.bare";
  auto rep = validate_records({r});
  CHECK(rep.accepted == 1);
  CHECK(rep.rejected.empty());
  std::size_t missing_total = 0;
  for (const auto& [attr, cnt] : rep.missing) missing_total += cnt;
  CHECK(missing_total == 12);
}

TEST_CASE("validate_records: out-of-range score is rejected with reason") {
  AppRecord r;
  r.app_id = "com.bad";
  r.score_text = 7.2;
  auto rep = validate_records({r});
  CHECK(rep.accepted == 0);
  REQUIRE(rep.rejected.size() == 1);
  CHECK(rep.rejected[0].first == "com.bad");
  CHECK(rep.rejected[0].second == "score out of range");
  CHECK(rep.record_count == rep.accepted + rep.rejected.size());
}

TEST_CASE("generate_synthetic_corpus: deterministic in the seed") {
  SyntheticConfig cfg;
  cfg.seed = 7;
  cfg.count = 10;
  auto a = generate_synthetic_corpus(cfg);
  auto b = generate_synthetic_corpus(cfg);
  CHECK(a == b);
  CHECK(a.size() == 10);
}

TEST_CASE("generate_synthetic_corpus: pure Games mix stays in the family") {
  SyntheticConfig cfg;
  cfg.seed = 3;
  cfg.count = 50;
  cfg.category_mix = {{"Games", 1.0}};
  cfg.missing_rates["genreId"] = 0.0;
  auto corpus = generate_synthetic_corpus(cfg);
  for (const auto& r : corpus) {
    REQUIRE(r.genre_id.has_value());
    CHECK(r.genre_id->rfind("GAME", 0) == 0);
  }
}

TEST_CASE("generate_synthetic_corpus: genre marginals track the mix") {
  SyntheticConfig cfg;
  cfg.seed = 11;
  cfg.count = 2000;
  cfg.category_mix = {{"Photography", 0.31}, {"Productivity", 0.28}, {"Games", 0.41}};
  cfg.missing_rates["genreId"] = 0.0;
  auto corpus = generate_synthetic_corpus(cfg);
  REQUIRE(corpus.size() == 2000);
  std::size_t photo = 0, prod = 0, games = 0;
  for (const auto& r : corpus) {
    REQUIRE(r.genre_id.has_value());
    if (*r.genre_id == "PHOTOGRAPHY") ++photo;
    else if (*r.genre_id == "PRODUCTIVITY") ++prod;
    else ++games;
  }
  // Within 5% of the configured proportion for each genre.
  CHECK(std::fabs(static_cast<double>(photo) / 2000.0 - 0.31) < 0.05 * 0.31);
  CHECK(std::fabs(static_cast<double>(prod) / 2000.0 - 0.28) < 0.05 * 0.28);
  CHECK(std::fabs(static_cast<double>(games) / 2000.0 - 0.41) < 0.05 * 0.41);
}

TEST_CASE("generate_synthetic_corpus: count 0 is empty, bad mix throws") {
  SyntheticConfig cfg;
  cfg.count = 0;
  CHECK(generate_synthetic_corpus(cfg).empty());
  cfg.count = 5;
  cfg.category_mix = {{"Photography", 0.6}, {"Games", 0.6}};
  CHECK_THROWS_AS(generate_synthetic_corpus(cfg), InputError);
}

TEST_CASE("generate_synthetic_corpus: ids unique and records valid") {
  SyntheticConfig cfg;
  cfg.seed = 5;
  cfg.count = 500;
  auto corpus = generate_synthetic_corpus(cfg);
  auto rep = validate_records(corpus);
  CHECK(rep.accepted == corpus.size());
  auto res = parse_app_records(serialize_app_records(corpus));
  CHECK(res.records.size() == corpus.size());  // would throw on duplicate ids
}
