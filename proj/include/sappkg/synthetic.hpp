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
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sappkg/record.hpp"
#include "sappkg/rng.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// Stand-in for the scraped corpus, which is not redistributable. Marginals
// mimic the published per-attribute summaries; joint structure is not
// modeled unless cluster planting is requested.
struct SyntheticConfig {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  // Genre proportions over {Photography, Productivity, Games}; must sum to 1.
  std::map<std::string, double> category_mix = {
      {"Photography", 0.34}, {"Productivity", 0.33}, {"Games", 0.33}};
  // Probability that an optional attribute is absent. Keyed by scraped field
  // name; attributes not listed fall back to `default_missing_rate`. A rate
  // of 1.0 removes the attribute (and hence its relation) entirely.
  std::map<std::string, double> missing_rates;
  double default_missing_rate = 0.002;
  // Reference date the `released` dates are sampled backwards from.
  Date released_base{2023, 7, 1};
  std::int64_t released_max_days = 2600;
  // When > 0, records are organized into this many latent clusters; records
  // in one cluster share categorical values and get tightly grouped numeric
  // values, so their binned attributes mostly coincide.
  std::size_t clusters = 0;
};

namespace detail {

inline std::string format_installs(std::int64_t v) {
  std::string digits = std::to_string(v);
  std::string grouped;
  int c = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (c > 0 && c % 3 == 0) grouped.push_back(',');
    grouped.push_back(*it);
    ++c;
  }
  std::reverse(grouped.begin(), grouped.end());
  return grouped + "+";
}

inline std::string format_size_kb(double kb) {
  if (kb < 1.0) return "Varies with device";
  if (kb < 1024.0) return std::to_string(static_cast<std::int64_t>(kb)) + "k";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1fM", kb / 1024.0);
  return buf;
}

// The 18 install tiers the store reports.
inline const std::vector<std::int64_t>& install_tiers() {
  static const std::vector<std::int64_t> tiers = {
      1,       5,        10,       50,        100,       500,
      1000,    5000,     10000,    50000,     100000,    500000,
      1000000, 5000000,  10000000, 50000000,  100000000, 500000000};
  return tiers;
}

struct ClusterProfile {
  bool ad, ec, iap, video;
  ContentRating cr;
  std::string genre;
  double log_ratings_mu;     // center for ratings (log space)
  double review_frac;        // reviews as a fraction of ratings
  double score_mu;
  double size_kb_mu;         // center for size in KB (log space)
  std::int64_t released_day; // center offset in days before base
};

}  // namespace detail

// Generates exactly `config.count` records, a pure function of the config.
inline std::vector<AppRecord> generate_synthetic_corpus(const SyntheticConfig& config) {
  double mix_sum = 0.0;
  for (const auto& [genre, p] : config.category_mix) {
    if (p < 0.0) throw InputError("negative proportion for " + genre);
    mix_sum += p;
  }
  if (std::fabs(mix_sum - 1.0) > 1e-9) {
    throw InputError("category_mix proportions sum to " + fmt_double_exact(mix_sum) +
                     ", expected 1");
  }
  if (config.count == 0) return {};

  const auto missing_rate = [&](const char* attr) {
    auto it = config.missing_rates.find(attr);
    return it != config.missing_rates.end() ? it->second
                                            : config.default_missing_rate;
  };

  // Genre counts by largest remainder, so the realized mix is exact up to
  // rounding; a seeded shuffle then interleaves the genres.
  std::vector<std::pair<std::string, double>> mix(config.category_mix.begin(),
                                                  config.category_mix.end());
  std::vector<std::size_t> counts(mix.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double exact = mix[i].second * static_cast<double>(config.count);
    counts[i] = static_cast<std::size_t>(exact);
    assigned += counts[i];
    remainders.push_back({exact - std::floor(exact), i});
  }
  std::sort(remainders.begin(), remainders.end(),
            [](const auto& a, const auto& b) {
              return a.first > b.first || (a.first == b.first && a.second < b.second);
            });
  for (std::size_t i = 0; assigned < config.count; ++i, ++assigned) {
    ++counts[remainders[i % remainders.size()].second];
  }
  std::vector<std::size_t> genre_of;
  genre_of.reserve(config.count);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    genre_of.insert(genre_of.end(), counts[i], i);
  }
  Rng order_rng(mix64(config.seed, 0x6f72646572ULL));
  order_rng.shuffle(genre_of);

  const std::vector<std::string> game_subgenres = {"GAME_ACTION", "GAME_PUZZLE",
                                                   "GAME_CASUAL", "GAME_ARCADE"};
  const std::vector<std::pair<ContentRating, double>> cr_weights = {
      {ContentRating::kEveryone, 1369.0 / 1793.0},
      {ContentRating::kTeen, 267.0 / 1793.0},
      {ContentRating::kEveryone10Plus, 113.0 / 1793.0},
      {ContentRating::kMature17Plus, 44.0 / 1793.0}};

  // Cluster profiles, drawn once from the same marginals.
  std::vector<detail::ClusterProfile> profiles;
  if (config.clusters > 0) {
    Rng crng(mix64(config.seed, 0x636c7573ULL));
    for (std::size_t c = 0; c < config.clusters; ++c) {
      detail::ClusterProfile p;
      p.ad = crng.next_double() < 956.0 / 1793.0;
      p.ec = crng.next_double() < 44.0 / 1793.0;
      p.iap = crng.next_double() < 926.0 / 1793.0;
      p.video = crng.next_double() < 726.0 / 1793.0;
      double u = crng.next_double(), acc = 0.0;
      p.cr = ContentRating::kEveryone;
      for (const auto& [rating, w] : cr_weights) {
        acc += w;
        if (u < acc) { p.cr = rating; break; }
      }
      p.genre = game_subgenres[crng.below(game_subgenres.size())];
      p.log_ratings_mu = crng.uniform(2.0, 14.0);
      p.review_frac = crng.uniform(0.2, 0.5);
      p.score_mu = crng.uniform(2.5, 5.0);
      p.size_kb_mu = crng.uniform(std::log(500.0), std::log(300000.0));
      p.released_day = static_cast<std::int64_t>(
          crng.below(static_cast<std::uint64_t>(config.released_max_days)));
      profiles.push_back(p);
    }
  }

  std::vector<AppRecord> records;
  records.reserve(config.count);
  for (std::size_t i = 0; i < config.count; ++i) {
    Rng rng(mix64(config.seed, 0x726563ULL + i));
    AppRecord r;
    char idbuf[48];
    std::snprintf(idbuf, sizeof(idbuf), "com.synthetic.app%05zu", i);
    r.app_id = idbuf;

    const detail::ClusterProfile* prof =
        profiles.empty() ? nullptr : &profiles[i % profiles.size()];

    const std::string& genre_name = mix[genre_of[i]].first;
    if (rng.next_double() >= missing_rate("genreId")) {
      if (genre_name == "Photography") r.genre_id = "PHOTOGRAPHY";
      else if (genre_name == "Productivity") r.genre_id = "PRODUCTIVITY";
      else r.genre_id = prof ? prof->genre
                             : game_subgenres[rng.below(game_subgenres.size())];
    }
    if (rng.next_double() >= missing_rate("adSupported")) {
      r.ad_supported = prof ? prof->ad : rng.next_double() < 956.0 / 1793.0;
    }
    if (rng.next_double() >= missing_rate("editorsChoice")) {
      r.editors_choice = prof ? prof->ec : rng.next_double() < 44.0 / 1793.0;
    }
    if (rng.next_double() >= missing_rate("offersIAP")) {
      r.offers_iap = prof ? prof->iap : rng.next_double() < 926.0 / 1793.0;
    }
    if (rng.next_double() >= missing_rate("video")) {
      r.video = prof ? prof->video : rng.next_double() < 726.0 / 1793.0;
    }
    if (rng.next_double() >= missing_rate("contentRating")) {
      if (prof) {
        r.content_rating = prof->cr;
      } else {
        double u = rng.next_double(), acc = 0.0;
        r.content_rating = ContentRating::kEveryone;
        for (const auto& [rating, w] : cr_weights) {
          acc += w;
          if (u < acc) { r.content_rating = rating; break; }
        }
      }
    }
    if (rng.next_double() >= missing_rate("installs")) {
      const auto& tiers = detail::install_tiers();
      std::size_t tier;
      if (prof) {
        // Tie install volume to the cluster's rating volume.
        double frac = (prof->log_ratings_mu - 2.0) / 12.0;
        tier = static_cast<std::size_t>(frac * (static_cast<double>(tiers.size()) - 1.0));
      } else {
        tier = static_cast<std::size_t>(rng.below(tiers.size()));
      }
      r.installs = detail::format_installs(tiers[std::min(tier, tiers.size() - 1)]);
    }
    double log_mu = prof ? prof->log_ratings_mu : 9.0;
    double log_sd = prof ? 0.4 : 2.3;
    if (rng.next_double() >= missing_rate("ratings")) {
      double v = std::exp(log_mu + log_sd * rng.normal());
      r.ratings = static_cast<std::int64_t>(std::max(0.0, v));
    }
    if (rng.next_double() >= missing_rate("reviews")) {
      double frac = prof ? prof->review_frac : rng.uniform(0.2, 0.5);
      double v = std::exp(log_mu + log_sd * rng.normal()) * frac;
      r.reviews = static_cast<std::int64_t>(std::max(0.0, v));
    }
    if (rng.next_double() >= missing_rate("scoreText")) {
      double mu = prof ? prof->score_mu : 4.05;
      double sd = prof ? 0.15 : 0.88;
      double v = std::clamp(mu + sd * rng.normal(), 0.0, 5.0);
      r.score_text = std::round(v * 10.0) / 10.0;  // the store shows one decimal
    }
    if (rng.next_double() >= missing_rate("size")) {
      if (!prof && rng.next_double() < 0.01) {
        r.size = "Varies with device";
      } else {
        double mu = prof ? prof->size_kb_mu : std::log(29696.0);
        double sd = prof ? 0.1 : 1.1;
        r.size = detail::format_size_kb(std::exp(mu + sd * rng.normal()));
      }
    }
    if (rng.next_double() >= missing_rate("released")) {
      std::int64_t day_offset;
      if (prof) {
        std::int64_t jitter = static_cast<std::int64_t>(rng.below(15));
        day_offset = std::min(prof->released_day + jitter, config.released_max_days - 1);
      } else {
        day_offset = static_cast<std::int64_t>(
            rng.below(static_cast<std::uint64_t>(config.released_max_days)));
      }
      r.released = civil_from_days(days_from_civil(config.released_base) - day_offset);
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace sappkg
