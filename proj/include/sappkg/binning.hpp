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
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sappkg/record.hpp"
#include "sappkg/relations.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// ---------------------------------------------------------------------------
// Attribute discretization. Three schemes:
//   category: fixed value -> label maps (booleans, content rating, genre)
//   interval: fixed numeric edges (installs, size, released-age)
//   quantile: edges fitted on the corpus (ratings, reviews, scoreText)

// Linear-interpolation percentile of sorted data, q in [0, 1].
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InputError("percentile of empty data");
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct QuantileMap {
  // Right-closed upper edges; bin(v) = first i with v <= edges[i], else the
  // last label. labels = edges.size() + 1 after duplicate-edge merging.
  std::vector<double> edges;
  int requested_labels = 0;
  int labels = 0;

  int bin(double v) const {
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (v <= edges[i]) return static_cast<int>(i);
    }
    return static_cast<int>(edges.size());
  }
};

// Fits a qcut-style map: quantile edges at i/m, duplicates merged (merging is
// the only total behavior when the data is heavily tied).
inline QuantileMap fit_quantile_map(std::vector<double> values, int m,
                                    const std::string& attribute) {
  if (values.empty()) {
    throw InputError("cannot fit quantile bins: attribute '" + attribute +
                     "' has no present values");
  }
  std::sort(values.begin(), values.end());
  QuantileMap qm;
  qm.requested_labels = m;
  for (int i = 1; i < m; ++i) {
    const double e = percentile_sorted(values, static_cast<double>(i) / m);
    if (qm.edges.empty() || e > qm.edges.back()) qm.edges.push_back(e);
  }
  // An edge equal to the maximum would leave the top bin empty.
  while (!qm.edges.empty() && qm.edges.back() >= values.back()) qm.edges.pop_back();
  qm.labels = static_cast<int>(qm.edges.size()) + 1;
  return qm;
}

struct IntervalMap {
  // Left-closed lower edges above bin 0; bin(v) = count of edges <= v.
  std::vector<double> edges;
  int labels = 0;

  int bin(double v) const {
    int b = 0;
    for (double e : edges) {
      if (v >= e) ++b;
      else break;
    }
    return b;
  }
};

// Size bins in KB: (0-1)-0, (1-20000)-1, ..., (80000-100000)-5, >100000-6.
// Fewer groups simply truncate the edge list.
inline IntervalMap size_interval_map(int groups) {
  static const std::vector<double> full_edges = {1,     20000, 40000,
                                                 60000, 80000, 100000};
  if (groups < 2 || groups > 7) throw InputError("size groups must be in [2, 7]");
  IntervalMap im;
  im.edges.assign(full_edges.begin(), full_edges.begin() + (groups - 1));
  im.labels = groups;
  return im;
}

// Install-volume groups; edges at the published group starts, with the gaps
// between groups folded into the lower group.
inline IntervalMap installs_interval_map() {
  IntervalMap im;
  im.edges = {1000, 100000, 10000000};
  im.labels = 4;
  return im;
}

// Age-in-days groups: months 1..(groups-1) plus an "older" bucket.
inline IntervalMap released_interval_map(int groups) {
  if (groups < 2 || groups > 13) throw InputError("released groups must be in [2, 13]");
  IntervalMap im;
  for (int i = 1; i < groups; ++i) {
    im.edges.push_back(std::round(static_cast<double>(i) * 365.25 / 12.0));
  }
  im.labels = groups;
  return im;
}

struct BinningOptions {
  int released_groups = 13;  // 12 months + after-a-year
  int size_groups = 7;
  int ratings_labels = 5;
  int reviews_labels = 5;
  int score_labels = 8;
};

// Fitted discretization for all twelve relations. snapshot_date is the
// reference "today" for released-age and is always an explicit input, never
// the wall clock.
struct BinningSpec {
  Date snapshot_date;
  BinningOptions options;
  QuantileMap ratings_map;
  QuantileMap reviews_map;
  QuantileMap score_map;
  IntervalMap installs_map;
  IntervalMap released_map;
  IntervalMap size_map;

  int group_count(int relation) const {
    switch (relation) {
      case kAdSimilar:
      case kEcSimilar:
      case kIapSimilar:
      case kVSimilar: return 2;
      case kCrSimilar: return 4;
      case kGidSimilar: return 3;
      case kInsSimilar: return installs_map.labels;
      case kRtgSimilar: return ratings_map.labels;
      case kRelSimilar: return released_map.labels;
      case kRevSimilar: return reviews_map.labels;
      case kStSimilar: return score_map.labels;
      case kSSimilar: return size_map.labels;
      default: throw InputError("unknown relation id " + std::to_string(relation));
    }
  }
};

// One bin label per relation; absent where the source attribute is absent.
struct EntityFeatures {
  std::string app_id;
  std::array<std::optional<int>, kRelationCount> bins;
};

// ---------------------------------------------------------------------------
// Raw-value normalization.

// "1,000+" -> 1000. Throws on anything that is not a formatted count.
inline std::int64_t parse_installs(const std::string& s) {
  std::string digits;
  for (char c : s) {
    if (c >= '0' && c <= '9') digits.push_back(c);
    else if (c != ',' && c != '+' && c != ' ') {
      throw InputError("unknown installs value '" + s + "'");
    }
  }
  if (digits.empty()) throw InputError("unknown installs value '" + s + "'");
  return std::stoll(digits);
}

// Store size strings normalized to KB. "Varies with device" and other
// sizeless entries collapse to 0 KB, which the interval map sends to bin 0.
inline double parse_size_kb(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) return 0.0;
  std::string lower;
  for (char c : t) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "varies with device") return 0.0;
  char suffix = lower.back();
  double scale = 1.0;
  std::string num = t;
  if (suffix == 'k') {
    num = t.substr(0, t.size() - 1);
  } else if (suffix == 'm') {
    scale = 1024.0;
    num = t.substr(0, t.size() - 1);
  } else if (suffix == 'g') {
    scale = 1024.0 * 1024.0;
    num = t.substr(0, t.size() - 1);
  }
  try {
    std::size_t pos = 0;
    double v = std::stod(num, &pos);
    if (pos != num.size() || v < 0.0) throw InputError("");
    return v * scale;
  } catch (const std::exception&) {
    throw InputError("unknown size value '" + s + "'");
  }
}

inline int genre_label(const std::string& genre) {
  if (genre == "PHOTOGRAPHY") return 0;
  if (genre == "PRODUCTIVITY") return 1;
  if (genre.rfind("GAME", 0) == 0) return 2;  // all GAME_* collapse to GAMES
  throw InputError("unknown genreId value '" + genre + "'");
}

// ---------------------------------------------------------------------------

// Fits the per-attribute schemes on a corpus. Quantile maps need present
// values; the fixed category/interval maps never fail.
inline BinningSpec fit_binning(const std::vector<AppRecord>& corpus,
                               const Date& snapshot_date,
                               const BinningOptions& options = {}) {
  if (corpus.empty()) throw InputError("fit_binning: empty corpus");
  BinningSpec spec;
  spec.snapshot_date = snapshot_date;
  spec.options = options;
  spec.installs_map = installs_interval_map();
  spec.released_map = released_interval_map(options.released_groups);
  spec.size_map = size_interval_map(options.size_groups);

  std::vector<double> ratings, reviews, scores;
  for (const auto& r : corpus) {
    if (r.ratings) ratings.push_back(static_cast<double>(*r.ratings));
    if (r.reviews) reviews.push_back(static_cast<double>(*r.reviews));
    if (r.score_text) scores.push_back(*r.score_text);
  }
  spec.ratings_map = fit_quantile_map(std::move(ratings), options.ratings_labels, "ratings");
  spec.reviews_map = fit_quantile_map(std::move(reviews), options.reviews_labels, "reviews");
  spec.score_map = fit_quantile_map(std::move(scores), options.score_labels, "scoreText");
  return spec;
}

// Assigns one bin per relation. Missing attribute -> absent bin; an unseen
// categorical value is an error because it would silently break the
// bin-equality predicate.
inline EntityFeatures apply_binning(const AppRecord& r, const BinningSpec& spec) {
  EntityFeatures f;
  f.app_id = r.app_id;
  if (r.ad_supported) f.bins[kAdSimilar] = *r.ad_supported ? 1 : 0;
  if (r.editors_choice) f.bins[kEcSimilar] = *r.editors_choice ? 1 : 0;
  if (r.offers_iap) f.bins[kIapSimilar] = *r.offers_iap ? 1 : 0;
  if (r.video) f.bins[kVSimilar] = *r.video ? 1 : 0;
  if (r.content_rating) f.bins[kCrSimilar] = static_cast<int>(*r.content_rating);
  if (r.genre_id) f.bins[kGidSimilar] = genre_label(*r.genre_id);
  if (r.installs) {
    f.bins[kInsSimilar] =
        spec.installs_map.bin(static_cast<double>(parse_installs(*r.installs)));
  }
  if (r.ratings) {
    f.bins[kRtgSimilar] = spec.ratings_map.bin(static_cast<double>(*r.ratings));
  }
  if (r.reviews) {
    f.bins[kRevSimilar] = spec.reviews_map.bin(static_cast<double>(*r.reviews));
  }
  if (r.score_text) f.bins[kStSimilar] = spec.score_map.bin(*r.score_text);
  if (r.size) f.bins[kSSimilar] = spec.size_map.bin(parse_size_kb(*r.size));
  if (r.released) {
    std::int64_t days =
        days_from_civil(spec.snapshot_date) - days_from_civil(*r.released);
    if (days < 0) days = 0;
    f.bins[kRelSimilar] = spec.released_map.bin(static_cast<double>(days));
  }
  return f;
}

inline std::vector<EntityFeatures> apply_binning(
    const std::vector<AppRecord>& corpus, const BinningSpec& spec) {
  std::vector<EntityFeatures> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) out.push_back(apply_binning(r, spec));
  return out;
}

}  // namespace sappkg
