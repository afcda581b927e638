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
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "sappkg/util.hpp"

namespace sappkg {

enum class ContentRating { kEveryone, kTeen, kEveryone10Plus, kMature17Plus };

inline const char* content_rating_name(ContentRating cr) {
  switch (cr) {
    case ContentRating::kEveryone: return "Everyone";
    case ContentRating::kTeen: return "Teen";
    case ContentRating::kEveryone10Plus: return "Everyone 10+";
    case ContentRating::kMature17Plus: return "Mature 17+";
  }
  return "?";
}

inline std::optional<ContentRating> parse_content_rating(const std::string& s) {
  if (s == "Everyone") return ContentRating::kEveryone;
  if (s == "Teen") return ContentRating::kTeen;
  if (s == "Everyone 10+") return ContentRating::kEveryone10Plus;
  if (s == "Mature 17+") return ContentRating::kMature17Plus;
  return std::nullopt;
}

// One app with the thirteen scraped attributes. Everything except the id is
// optional; absent means the store did not report it, and nothing downstream
// imputes a value.
struct AppRecord {
  std::string app_id;
  std::optional<bool> ad_supported;
  std::optional<ContentRating> content_rating;
  std::optional<bool> editors_choice;
  std::optional<std::string> genre_id;
  std::optional<std::string> installs;   // store-formatted, e.g. "1,000+"
  std::optional<bool> offers_iap;
  std::optional<std::int64_t> ratings;
  std::optional<Date> released;
  std::optional<std::int64_t> reviews;
  std::optional<double> score_text;      // mean user rating in [0, 5]
  std::optional<std::string> size;       // store-formatted, e.g. "29M"
  std::optional<bool> video;

  bool operator==(const AppRecord&) const = default;
};

// Attribute names in the scraped field-name spelling, indexed consistently
// with the relation table (see relations.hpp).
inline const std::vector<std::string>& attribute_field_names() {
  static const std::vector<std::string> names = {
      "adSupported", "contentRating", "editorsChoice", "genreId",
      "installs",    "offersIAP",     "ratings",       "released",
      "reviews",     "scoreText",     "size",          "video"};
  return names;
}

struct ParseIssue {
  std::size_t line;  // 1-based
  std::string message;
};

struct ParseResult {
  std::vector<AppRecord> records;
  std::vector<ParseIssue> issues;  // malformed lines, collected not fatal
};

namespace detail {

inline std::optional<bool> json_bool(const nlohmann::json& j, const char* key,
                                     std::string& err) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) {
    err = std::string(key) + " is not a boolean";
    return std::nullopt;
  }
  return it->get<bool>();
}

inline std::optional<std::string> json_string(const nlohmann::json& j,
                                              const char* key,
                                              std::string& err) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    err = std::string(key) + " is not a string";
    return std::nullopt;
  }
  return it->get<std::string>();
}

inline std::optional<std::int64_t> json_count(const nlohmann::json& j,
                                              const char* key,
                                              std::string& err) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer() && !it->is_number_unsigned()) {
    err = std::string(key) + " is not an integer";
    return std::nullopt;
  }
  return it->get<std::int64_t>();
}

// scoreText arrives either as a number or as a numeric string, depending on
// the scraper version.
inline std::optional<double> json_score(const nlohmann::json& j,
                                        const char* key, std::string& err) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    try {
      std::size_t pos = 0;
      double v = std::stod(it->get<std::string>(), &pos);
      if (pos == it->get<std::string>().size()) return v;
    } catch (const std::exception&) {
    }
  }
  err = std::string(key) + " is not numeric";
  return std::nullopt;
}

}  // namespace detail

// Parses one JSON object into a record. Throws InputError on malformed input.
inline AppRecord parse_record_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("record is not an object");
  AppRecord r;
  std::string err;
  auto id = detail::json_string(j, "appId", err);
  if (!err.empty()) throw InputError(err);
  if (!id || id->empty()) throw InputError("appId missing or empty");
  r.app_id = *id;

  r.ad_supported = detail::json_bool(j, "adSupported", err);
  r.editors_choice = detail::json_bool(j, "editorsChoice", err);
  r.offers_iap = detail::json_bool(j, "offersIAP", err);
  r.video = detail::json_bool(j, "video", err);
  r.genre_id = detail::json_string(j, "genreId", err);
  r.installs = detail::json_string(j, "installs", err);
  r.size = detail::json_string(j, "size", err);
  r.ratings = detail::json_count(j, "ratings", err);
  r.reviews = detail::json_count(j, "reviews", err);
  r.score_text = detail::json_score(j, "scoreText", err);

  if (auto cr = detail::json_string(j, "contentRating", err)) {
    auto parsed = parse_content_rating(*cr);
    if (!parsed) throw InputError("unknown contentRating '" + *cr + "'");
    r.content_rating = parsed;
  }
  if (auto rel = detail::json_string(j, "released", err)) {
    r.released = parse_date(*rel);
  }
  if (!err.empty()) throw InputError(err);
  return r;
}

// Parses UTF-8 line-delimited records (one JSON object per line, LF
// terminators). Malformed lines are collected and skipped; a duplicate appId
// is a hard error because every later stage keys on it.
inline ParseResult parse_app_records(const std::string& bytes) {
  ParseResult out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    std::string line = bytes.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? bytes.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      AppRecord r = parse_record_json(j);
      if (!seen.insert(r.app_id).second) {
        throw InputError("duplicate appId '" + r.app_id + "' at line " +
                         std::to_string(line_no));
      }
      out.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      out.issues.push_back({line_no, e.what()});
    } catch (const InputError& e) {
      if (std::string(e.what()).rfind("duplicate appId", 0) == 0) throw;
      out.issues.push_back({line_no, e.what()});
    }
  }
  return out;
}

inline nlohmann::json record_to_json(const AppRecord& r) {
  nlohmann::json j = nlohmann::json::object();
  j["appId"] = r.app_id;
  if (r.ad_supported) j["adSupported"] = *r.ad_supported;
  if (r.content_rating) j["contentRating"] = content_rating_name(*r.content_rating);
  if (r.editors_choice) j["editorsChoice"] = *r.editors_choice;
  if (r.genre_id) j["genreId"] = *r.genre_id;
  if (r.installs) j["installs"] = *r.installs;
  if (r.offers_iap) j["offersIAP"] = *r.offers_iap;
  if (r.ratings) j["ratings"] = *r.ratings;
  if (r.released) j["released"] = format_date(*r.released);
  if (r.reviews) j["reviews"] = *r.reviews;
  if (r.score_text) j["scoreText"] = *r.score_text;
  if (r.size) j["size"] = *r.size;
  if (r.video) j["video"] = *r.video;
  return j;
}

// Fixture-identical output format: one object per line, LF terminated.
inline std::string serialize_app_records(const std::vector<AppRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation. Report-only: nothing here mutates or drops records, callers
// filter on `rejected` themselves.

struct ValidationReport {
  std::size_t record_count = 0;
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> missing;  // attribute -> missing count
  std::vector<std::pair<std::string, std::string>> rejected;  // id, reason
};

inline ValidationReport validate_records(const std::vector<AppRecord>& records) {
  ValidationReport rep;
  rep.record_count = records.size();
  for (const auto& name : attribute_field_names()) rep.missing[name] = 0;
  for (const auto& r : records) {
    std::string reason;
    if (r.app_id.empty()) reason = "empty appId";
    if (reason.empty() && r.score_text &&
        (*r.score_text < 0.0 || *r.score_text > 5.0)) {
      reason = "score out of range";
    }
    if (reason.empty() && r.ratings && *r.ratings < 0) reason = "negative ratings";
    if (reason.empty() && r.reviews && *r.reviews < 0) reason = "negative reviews";
    if (!reason.empty()) {
      rep.rejected.emplace_back(r.app_id, reason);
      continue;
    }
    ++rep.accepted;
    if (!r.ad_supported) ++rep.missing["adSupported"];
    if (!r.content_rating) ++rep.missing["contentRating"];
    if (!r.editors_choice) ++rep.missing["editorsChoice"];
    if (!r.genre_id) ++rep.missing["genreId"];
    if (!r.installs) ++rep.missing["installs"];
    if (!r.offers_iap) ++rep.missing["offersIAP"];
    if (!r.ratings) ++rep.missing["ratings"];
    if (!r.released) ++rep.missing["released"];
    if (!r.reviews) ++rep.missing["reviews"];
    if (!r.score_text) ++rep.missing["scoreText"];
    if (!r.size) ++rep.missing["size"];
    if (!r.video) ++rep.missing["video"];
  }
  return rep;
}

}  // namespace sappkg
