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
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "sappkg/graph.hpp"
#include "sappkg/util.hpp"

namespace sappkg {

// ---------------------------------------------------------------------------
// Relation support and relatedness.
//
// nodes(r): entities incident to any triple of relation r, as head or tail.
// supp(ri -> rj) = |nodes(ri) ∩ nodes(rj)| / |nodes(ri)|, and relatedness is
// the harmonic mean of the two directions.

inline std::vector<std::vector<char>> relation_incidence(const KnowledgeGraph& kg) {
  std::vector<std::vector<char>> incident(
      kg.relation_count(), std::vector<char>(kg.entity_count(), 0));
  for (const Triple& t : kg.triples()) {
    incident[static_cast<std::size_t>(t.relation)][static_cast<std::size_t>(t.head)] = 1;
    incident[static_cast<std::size_t>(t.relation)][static_cast<std::size_t>(t.tail)] = 1;
  }
  return incident;
}

inline double support(int r_i, int r_j, const KnowledgeGraph& kg) {
  if (r_i < 0 || r_j < 0 || r_i >= static_cast<int>(kg.relation_count()) ||
      r_j >= static_cast<int>(kg.relation_count())) {
    throw InputError("relation index out of range");
  }
  const auto incident = relation_incidence(kg);
  std::size_t ni = 0, both = 0;
  for (std::size_t e = 0; e < kg.entity_count(); ++e) {
    if (incident[static_cast<std::size_t>(r_i)][e]) {
      ++ni;
      if (incident[static_cast<std::size_t>(r_j)][e]) ++both;
    }
  }
  if (ni == 0) {
    throw InputError("support undefined: relation " + kg.relation_name(r_i) +
                     " has no incident nodes");
  }
  return static_cast<double>(both) / static_cast<double>(ni);
}

inline double relatedness_from_supports(double s_ij, double s_ji) {
  if (s_ij == 0.0 && s_ji == 0.0) return 0.0;
  return 2.0 * s_ij * s_ji / (s_ij + s_ji);
}

inline double relatedness(int r_i, int r_j, const KnowledgeGraph& kg) {
  return relatedness_from_supports(support(r_i, r_j, kg), support(r_j, r_i, kg));
}

// Full |R|x|R| matrices. Entries with an undefined support stay absent.
struct RelatednessMatrix {
  std::vector<std::vector<std::optional<double>>> support;      // supp(i -> j)
  std::vector<std::vector<std::optional<double>>> relatedness;  // symmetric
};

inline RelatednessMatrix relatedness_matrix(const KnowledgeGraph& kg) {
  const std::size_t nr = kg.relation_count();
  const auto incident = relation_incidence(kg);
  std::vector<std::size_t> sizes(nr, 0);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t e = 0; e < kg.entity_count(); ++e) {
      if (incident[r][e]) ++sizes[r];
    }
  }
  RelatednessMatrix m;
  m.support.assign(nr, std::vector<std::optional<double>>(nr));
  m.relatedness.assign(nr, std::vector<std::optional<double>>(nr));
  for (std::size_t i = 0; i < nr; ++i) {
    if (sizes[i] == 0) continue;
    for (std::size_t j = 0; j < nr; ++j) {
      std::size_t both = 0;
      for (std::size_t e = 0; e < kg.entity_count(); ++e) {
        if (incident[i][e] && incident[j][e]) ++both;
      }
      m.support[i][j] = static_cast<double>(both) / static_cast<double>(sizes[i]);
    }
  }
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nr; ++j) {
      if (m.support[i][j] && m.support[j][i]) {
        m.relatedness[i][j] =
            relatedness_from_supports(*m.support[i][j], *m.support[j][i]);
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Structural statistics. Closed-form pieces are standalone so they can be
// checked directly against published counts.

inline double graph_density(std::uint64_t nodes, std::uint64_t edges) {
  if (nodes < 2) return 0.0;
  return static_cast<double>(edges) /
         (static_cast<double>(nodes) * static_cast<double>(nodes - 1));
}

inline double average_degree(std::uint64_t nodes, std::uint64_t edges) {
  if (nodes == 0) return 0.0;
  return static_cast<double>(edges) / static_cast<double>(nodes);
}

// C(n, 3), exact in 64-bit for any graph that fits in memory.
inline std::uint64_t triads_possible(std::uint64_t n) {
  if (n < 3) return 0;
  // Divide first where divisible to avoid overflow.
  std::uint64_t a = n, b = n - 1, c = n - 2;
  if (a % 3 == 0) a /= 3;
  else if (b % 3 == 0) b /= 3;
  else c /= 3;
  if (a % 2 == 0) a /= 2;
  else if (b % 2 == 0) b /= 2;
  else c /= 2;
  return a * b * c;
}

struct GraphStats {
  std::uint64_t nodes = 0;
  std::uint64_t edges = 0;  // directed triple count
  double density = 0.0;     // E / (N (N-1))
  double average_degree = 0.0;  // E / N
  // Nodes incident to edges of at least two distinct relations. The source
  // table labels this "multiplex dyads" but its value equals the node count,
  // which only the node-level reading reproduces.
  std::uint64_t multiplex_nodes = 0;
  std::uint64_t triads_possible = 0;  // C(N, 3)
  std::uint64_t open_triads = 0;      // connected triples that are not triangles
  std::uint64_t triangles = 0;
  double degree_variance = 0.0;  // population variance, undirected degree
  std::uint64_t edge_connectivity = 0;  // global min edge cut, undirected
  std::uint64_t diameter = 0;           // largest connected component
  double average_shortest_path = 0.0;   // same component, unordered pairs
};

namespace detail {

// Undirected simple projection as sorted adjacency lists.
inline std::vector<std::vector<int>> undirected_projection(const KnowledgeGraph& kg) {
  std::vector<std::set<int>> adj(kg.entity_count());
  for (const Triple& t : kg.triples()) {
    adj[static_cast<std::size_t>(t.head)].insert(t.tail);
    adj[static_cast<std::size_t>(t.tail)].insert(t.head);
  }
  std::vector<std::vector<int>> out(kg.entity_count());
  for (std::size_t i = 0; i < adj.size(); ++i) {
    out[i].assign(adj[i].begin(), adj[i].end());
  }
  return out;
}

// Stoer-Wagner global minimum cut with unit weights. Returns 0 when the
// graph is disconnected or has fewer than 2 vertices.
inline std::uint64_t stoer_wagner_min_cut(const std::vector<std::vector<int>>& adj) {
  const std::size_t n = adj.size();
  if (n < 2) return 0;
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t u = 0; u < n; ++u) {
    for (int v : adj[u]) w[u][static_cast<std::size_t>(v)] = 1.0;
  }
  std::vector<int> vertices(n);
  for (std::size_t i = 0; i < n; ++i) vertices[i] = static_cast<int>(i);
  double best = std::numeric_limits<double>::infinity();
  while (vertices.size() > 1) {
    std::vector<double> weight(vertices.size(), 0.0);
    std::vector<char> added(vertices.size(), 0);
    int prev = -1, last = -1;
    for (std::size_t it = 0; it < vertices.size(); ++it) {
      int sel = -1;
      for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (!added[i] && (sel < 0 || weight[i] > weight[static_cast<std::size_t>(sel)])) {
          sel = static_cast<int>(i);
        }
      }
      added[static_cast<std::size_t>(sel)] = 1;
      prev = last;
      last = sel;
      for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (!added[i]) {
          weight[i] += w[static_cast<std::size_t>(vertices[static_cast<std::size_t>(sel)])]
                        [static_cast<std::size_t>(vertices[i])];
        }
      }
    }
    best = std::min(best, weight[static_cast<std::size_t>(last)]);
    // Merge `last` into `prev`.
    const int lv = vertices[static_cast<std::size_t>(last)];
    const int pv = vertices[static_cast<std::size_t>(prev)];
    for (std::size_t i = 0; i < n; ++i) {
      w[static_cast<std::size_t>(pv)][i] += w[static_cast<std::size_t>(lv)][i];
      w[i][static_cast<std::size_t>(pv)] += w[i][static_cast<std::size_t>(lv)];
    }
    vertices.erase(vertices.begin() + last);
  }
  return static_cast<std::uint64_t>(best + 0.5);
}

}  // namespace detail

inline GraphStats graph_statistics(const KnowledgeGraph& kg) {
  GraphStats gs;
  gs.nodes = kg.entity_count();
  gs.edges = kg.triple_count();
  gs.density = graph_density(gs.nodes, gs.edges);
  gs.average_degree = average_degree(gs.nodes, gs.edges);
  gs.triads_possible = triads_possible(gs.nodes);

  // Relation multiplexing per node.
  std::vector<std::set<int>> rels(kg.entity_count());
  for (const Triple& t : kg.triples()) {
    rels[static_cast<std::size_t>(t.head)].insert(t.relation);
    rels[static_cast<std::size_t>(t.tail)].insert(t.relation);
  }
  for (const auto& rs : rels) {
    if (rs.size() >= 2) ++gs.multiplex_nodes;
  }

  const auto adj = detail::undirected_projection(kg);
  const std::size_t n = adj.size();

  // Degrees, variance.
  double mean_deg = 0.0;
  for (const auto& nbrs : adj) mean_deg += static_cast<double>(nbrs.size());
  mean_deg /= std::max<std::size_t>(n, 1);
  double var = 0.0;
  for (const auto& nbrs : adj) {
    const double d = static_cast<double>(nbrs.size()) - mean_deg;
    var += d * d;
  }
  gs.degree_variance = n > 0 ? var / static_cast<double>(n) : 0.0;

  // Triangles and open triads. Each triangle is counted once via ordered
  // neighbor scans; open triads = paths of length two minus 3 per triangle.
  std::uint64_t paths2 = 0;
  for (const auto& nbrs : adj) {
    const std::uint64_t d = nbrs.size();
    paths2 += d * (d - 1) / 2;
  }
  std::uint64_t tri = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (int v : adj[u]) {
      if (static_cast<std::size_t>(v) <= u) continue;
      // count common neighbors w > v
      const auto& a = adj[u];
      const auto& b = adj[static_cast<std::size_t>(v)];
      std::size_t i = 0, j = 0;
      while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else {
          if (a[i] > v) ++tri;
          ++i;
          ++j;
        }
      }
    }
  }
  gs.triangles = tri;
  gs.open_triads = paths2 - 3 * tri;

  // Largest connected component.
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  std::size_t best_size = 0;
  int best_comp = -1;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::deque<int> q{static_cast<int>(s)};
    comp[s] = ncomp;
    std::size_t size = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      ++size;
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (comp[static_cast<std::size_t>(v)] < 0) {
          comp[static_cast<std::size_t>(v)] = ncomp;
          q.push_back(v);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_comp = ncomp;
    }
    ++ncomp;
  }

  // BFS from every node of the largest component.
  std::uint64_t diameter = 0;
  std::uint64_t path_sum = 0;
  std::uint64_t path_pairs = 0;
  if (best_size >= 2) {
    std::vector<int> dist(n);
    for (std::size_t s = 0; s < n; ++s) {
      if (comp[s] != best_comp) continue;
      std::fill(dist.begin(), dist.end(), -1);
      std::deque<int> q{static_cast<int>(s)};
      dist[s] = 0;
      while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        for (int v : adj[static_cast<std::size_t>(u)]) {
          if (dist[static_cast<std::size_t>(v)] < 0) {
            dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
            q.push_back(v);
          }
        }
      }
      for (std::size_t t = s + 1; t < n; ++t) {
        if (comp[t] != best_comp) continue;
        diameter = std::max(diameter, static_cast<std::uint64_t>(dist[t]));
        path_sum += static_cast<std::uint64_t>(dist[t]);
        ++path_pairs;
      }
    }
  }
  gs.diameter = diameter;
  gs.average_shortest_path =
      path_pairs > 0 ? static_cast<double>(path_sum) / static_cast<double>(path_pairs) : 0.0;

  gs.edge_connectivity = detail::stoer_wagner_min_cut(adj);
  return gs;
}

}  // namespace sappkg
