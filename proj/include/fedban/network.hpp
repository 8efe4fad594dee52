#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedban/errors.hpp"
#include "fedban/rng.hpp"

namespace fedban {

using Adjacency = std::vector<std::vector<std::uint8_t>>;

inline Adjacency make_adjacency(int M) {
  return Adjacency(M, std::vector<std::uint8_t>(M, 0));
}

inline void add_edge(Adjacency& adj, int i, int j) {
  if (i == j) return;
  adj[i][j] = 1;
  adj[j][i] = 1;
}

inline std::vector<int> bfs_distances(const Adjacency& adj, int src) {
  const int M = int(adj.size());
  std::vector<int> dist(M, -1);
  std::deque<int> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    const int v = q.front();
    q.pop_front();
    for (int u = 0; u < M; ++u)
      if (adj[v][u] && dist[u] < 0) {
        dist[u] = dist[v] + 1;
        q.push_back(u);
      }
  }
  return dist;
}

// Edge (i, j) in the gamma-power iff the shortest-path distance is <= gamma.
inline Adjacency power_graph(const Adjacency& adj, int gamma) {
  const int M = int(adj.size());
  Adjacency power = make_adjacency(M);
  for (int v = 0; v < M; ++v) {
    const auto dist = bfs_distances(adj, v);
    for (int u = 0; u < M; ++u) {
      if (u == v) continue;
      if (dist[u] < 0) throw Disconnected("power_graph: graph not connected");
      if (dist[u] <= gamma) power[v][u] = 1;
    }
  }
  return power;
}

// Greedy sequential coloring of the complement; the color classes are
// disjoint cliques of the input graph covering every vertex.
inline std::vector<std::vector<int>> clique_cover_greedy(
    const Adjacency& power) {
  const int M = int(power.size());
  std::vector<int> color(M, -1);
  int colors_used = 0;
  for (int v = 0; v < M; ++v) {
    std::vector<std::uint8_t> taken(colors_used + 1, 0);
    for (int u = 0; u < v; ++u)
      if (u != v && !power[v][u] && color[u] >= 0) taken[color[u]] = 1;
    int c = 0;
    while (c < colors_used && taken[c]) ++c;
    color[v] = c;
    colors_used = std::max(colors_used, c + 1);
  }
  std::vector<std::vector<int>> cliques(colors_used);
  for (int v = 0; v < M; ++v) cliques[color[v]].push_back(v);
  return cliques;
}

inline int subsample_index(long long t, int gamma) {
  return int(t % gamma);
}

struct Network {
  int M = 0;
  int gamma = 1;
  Adjacency adj;
  Adjacency power_adj;
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<int>> dist;
  int diameter = 0;
  std::vector<std::vector<int>> cliques;
  std::vector<int> clique_id;
};

inline Network make_network(Adjacency adj, int gamma) {
  Network net;
  net.M = int(adj.size());
  net.gamma = gamma;
  net.adj = std::move(adj);
  net.dist.resize(net.M);
  for (int v = 0; v < net.M; ++v) {
    net.dist[v] = bfs_distances(net.adj, v);
    for (int u = 0; u < net.M; ++u) {
      if (net.dist[v][u] < 0)
        throw Disconnected("network: graph not connected");
      net.diameter = std::max(net.diameter, net.dist[v][u]);
    }
  }
  std::vector<std::string> issues;
  if (gamma < 1) issues.push_back("network.gamma: must be >= 1");
  if (net.M > 1 && gamma > net.diameter)
    issues.push_back("network.gamma: must be <= diameter(G)");
  if (!issues.empty()) throw ValidationError(issues);

  net.power_adj = net.M > 1 ? power_graph(net.adj, gamma)
                            : make_adjacency(net.M);
  net.cliques = clique_cover_greedy(net.power_adj);
  net.clique_id.assign(net.M, -1);
  for (int c = 0; c < int(net.cliques.size()); ++c)
    for (int v : net.cliques[c]) net.clique_id[v] = c;
  net.neighbors.resize(net.M);
  for (int v = 0; v < net.M; ++v)
    for (int u = 0; u < net.M; ++u)
      if (net.adj[v][u]) net.neighbors[v].push_back(u);
  return net;
}

// Named generators.

inline Adjacency graph_complete(int M) {
  Adjacency adj = make_adjacency(M);
  for (int i = 0; i < M; ++i)
    for (int j = i + 1; j < M; ++j) add_edge(adj, i, j);
  return adj;
}

inline Adjacency graph_line(int M) {
  Adjacency adj = make_adjacency(M);
  for (int i = 0; i + 1 < M; ++i) add_edge(adj, i, i + 1);
  return adj;
}

inline Adjacency graph_ring(int M) {
  Adjacency adj = graph_line(M);
  if (M > 2) add_edge(adj, M - 1, 0);
  return adj;
}

inline Adjacency graph_star(int M) {
  Adjacency adj = make_adjacency(M);
  for (int i = 1; i < M; ++i) add_edge(adj, 0, i);
  return adj;
}

// Pairing-model random regular graph; retries until simple and connected.
inline Adjacency graph_random_regular(int M, int degree, std::uint64_t seed) {
  if (degree < 1 || degree >= M || (std::int64_t(M) * degree) % 2 != 0)
    throw ValidationError({"network: invalid (M, degree) for regular graph"});
  Rng rng = make_stream(seed, StreamTag::kNetwork);
  for (int attempt = 0; attempt < 5000; ++attempt) {
    std::vector<int> stubs;
    stubs.reserve(std::size_t(M) * degree);
    for (int v = 0; v < M; ++v)
      for (int k = 0; k < degree; ++k) stubs.push_back(v);
    for (std::size_t i = stubs.size(); i > 1; --i)
      std::swap(stubs[i - 1], stubs[rng.below(i)]);
    Adjacency adj = make_adjacency(M);
    bool ok = true;
    for (std::size_t i = 0; i + 1 < stubs.size() && ok; i += 2) {
      const int a = stubs[i], b = stubs[i + 1];
      if (a == b || adj[a][b]) ok = false;
      else add_edge(adj, a, b);
    }
    if (!ok) continue;
    const auto dist = bfs_distances(adj, 0);
    if (std::all_of(dist.begin(), dist.end(), [](int d) { return d >= 0; }))
      return adj;
  }
  throw GenerationFailure("random regular graph: retry budget exhausted");
}

// One "i j" pair per line, 0-indexed; blank lines and '#' comments skipped.
inline Adjacency load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("edge list: cannot open " + path);
  std::vector<std::pair<int, int>> edges;
  int max_v = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    int a = -1, b = -1;
    if (!(ls >> a >> b) || a < 0 || b < 0)
      throw ParseError("edge list: bad line " + std::to_string(lineno) +
                       " in " + path);
    edges.emplace_back(a, b);
    max_v = std::max({max_v, a, b});
  }
  if (max_v < 0) throw ParseError("edge list: no edges in " + path);
  Adjacency adj = make_adjacency(max_v + 1);
  for (auto [a, b] : edges) add_edge(adj, a, b);
  return adj;
}

}  // namespace fedban
