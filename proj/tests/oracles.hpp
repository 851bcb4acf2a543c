#pragma once

// Independent reference implementations used only by tests: an array-based
// Dijkstra, a union-find Kruskal, and union-find connectivity. These stay
// deliberately separate from the library code paths they check.

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "algoexec/graph.hpp"

namespace test_oracles {

inline std::vector<double> dijkstra_simple(const algoexec::Graph& g, int source) {
  const double inf = std::numeric_limits<double>::infinity();
  const int n = g.num_nodes;
  std::vector<double> dist(n, inf);
  std::vector<char> done(n, 0);
  dist[source] = 0.0;
  for (int iter = 0; iter < n; ++iter) {
    int u = -1;
    for (int i = 0; i < n; ++i)
      if (!done[i] && (u == -1 || dist[i] < dist[u])) u = i;
    if (u == -1 || dist[u] == inf) break;
    done[u] = 1;
    for (const auto& e : g.edges) {
      if (e.src != u || e.src == e.dst) continue;
      if (dist[u] + e.weight < dist[e.dst]) dist[e.dst] = dist[u] + e.weight;
    }
  }
  return dist;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

// MST weight of the component containing `source`.
inline double kruskal_component_weight(const algoexec::Graph& g, int source) {
  std::vector<algoexec::Edge> edges;
  for (const auto& e : g.edges)
    if (e.src < e.dst) edges.push_back(e);
  std::sort(edges.begin(), edges.end(),
            [](const auto& a, const auto& b) { return a.weight < b.weight; });
  // build a full spanning forest, then sum the tree containing source
  UnionFind uf(g.num_nodes);
  std::vector<algoexec::Edge> forest;
  for (const auto& e : edges)
    if (uf.unite(e.src, e.dst)) forest.push_back(e);
  const int root = uf.find(source);
  double total = 0.0;
  for (const auto& e : forest)
    if (uf.find(e.src) == root) total += e.weight;
  return total;
}

inline std::vector<char> reachable_from(const algoexec::Graph& g, int source) {
  UnionFind uf(g.num_nodes);
  for (const auto& e : g.edges)
    if (e.src != e.dst) uf.unite(e.src, e.dst);
  std::vector<char> out(g.num_nodes, 0);
  for (int i = 0; i < g.num_nodes; ++i) out[i] = uf.find(i) == uf.find(source);
  return out;
}

}  // namespace test_oracles
