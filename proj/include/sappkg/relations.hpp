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

#include <array>
#include <optional>
#include <string>

#include "sappkg/util.hpp"

namespace sappkg {

// The twelve app-app similarity relations, one per side-information
// attribute. Ids are fixed; files and reports always use the names.
inline constexpr int kRelationCount = 12;

inline constexpr int kAdSimilar = 0;
inline constexpr int kCrSimilar = 1;
inline constexpr int kEcSimilar = 2;
inline constexpr int kGidSimilar = 3;
inline constexpr int kInsSimilar = 4;
inline constexpr int kIapSimilar = 5;
inline constexpr int kRtgSimilar = 6;
inline constexpr int kRelSimilar = 7;
inline constexpr int kRevSimilar = 8;
inline constexpr int kStSimilar = 9;
inline constexpr int kSSimilar = 10;
inline constexpr int kVSimilar = 11;

inline const std::array<std::string, kRelationCount>& relation_names() {
  static const std::array<std::string, kRelationCount> names = {
      "ADSIMILAR", "CRSIMILAR",  "ECSIMILAR", "GIDSIMILAR",
      "INSSIMILAR", "IAPSIMILAR", "RTGSIMILAR", "RELSIMILAR",
      "REVSIMILAR", "STSIMILAR",  "SSIMILAR",  "VSIMILAR"};
  return names;
}

// Source attribute per relation, scraped field-name spelling.
inline const std::array<std::string, kRelationCount>& relation_attributes() {
  static const std::array<std::string, kRelationCount> attrs = {
      "adSupported", "contentRating", "editorsChoice", "genreId",
      "installs",    "offersIAP",     "ratings",       "released",
      "reviews",     "scoreText",     "size",          "video"};
  return attrs;
}

inline std::optional<int> relation_id_by_name(const std::string& name) {
  const auto& names = relation_names();
  for (int i = 0; i < kRelationCount; ++i) {
    if (names[static_cast<std::size_t>(i)] == name) return i;
  }
  return std::nullopt;
}

}  // namespace sappkg
