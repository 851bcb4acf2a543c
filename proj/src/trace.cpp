#include "algoexec/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace algoexec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_source(const Graph& g, int source, const char* what) {
  if (source < 0 || source >= g.num_nodes)
    throw std::invalid_argument(std::string(what) + ": source out of range");
}

}  // namespace

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::bfs: return "bfs";
    case Algorithm::bellman_ford: return "bellman_ford";
    case Algorithm::prim: return "prim";
  }
  return "unknown";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "bfs") return Algorithm::bfs;
  if (name == "bellman_ford") return Algorithm::bellman_ford;
  if (name == "prim") return Algorithm::prim;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::vector<double> dijkstra_distances(const Graph& graph, int source) {
  check_source(graph, source, "dijkstra");
  std::vector<std::vector<std::pair<int, double>>> out(graph.num_nodes);
  for (const auto& e : graph.edges) {
    if (e.src != e.dst) out[e.src].push_back({e.dst, e.weight});
  }
  std::vector<double> dist(graph.num_nodes, kInf);
  dist[source] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : out[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        heap.push({dist[v], v});
      }
    }
  }
  return dist;
}

std::vector<int> hop_distances(const Graph& graph, int source) {
  check_source(graph, source, "hop_distances");
  auto adj = neighbors(graph);
  std::vector<int> hops(graph.num_nodes, -1);
  hops[source] = 0;
  std::queue<int> q;
  q.push(source);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (hops[v] == -1) {
        hops[v] = hops[u] + 1;
        q.push(v);
      }
    }
  }
  return hops;
}

double longest_shortest_path(const Graph& graph) {
  double longest = 0.0;
  for (int s = 0; s < graph.num_nodes; ++s) {
    for (double d : dijkstra_distances(graph, s)) {
      if (std::isfinite(d)) longest = std::max(longest, d);
    }
  }
  return longest;
}

AlgoTrace trace_bfs(const Graph& graph, int source) {
  check_source(graph, source, "trace_bfs");
  const int n = graph.num_nodes;
  auto adj = neighbors(graph);

  AlgoTrace trace;
  trace.algorithm = Algorithm::bfs;
  trace.source = source;

  std::vector<double> x(n, 0.0);
  x[source] = 1.0;
  for (;;) {
    std::vector<double> next = x;
    for (int i = 0; i < n; ++i) {
      if (next[i] == 1.0) continue;
      for (int j : adj[i]) {
        if (x[j] == 1.0) {
          next[i] = 1.0;
          break;
        }
      }
    }
    const bool fixpoint = next == x;
    trace.steps.push_back({x, next, {}, -1, fixpoint});
    if (fixpoint) break;
    x = std::move(next);
  }
  return trace;
}

AlgoTrace trace_bellman_ford(const Graph& graph, int source) {
  check_source(graph, source, "trace_bellman_ford");
  const int n = graph.num_nodes;
  auto in = in_edges_by_node(graph);

  AlgoTrace trace;
  trace.algorithm = Algorithm::bellman_ford;
  trace.source = source;
  trace.infinity_value = longest_shortest_path(graph) + 1.0;
  const double inf = trace.infinity_value;

  std::vector<double> x(n, inf);
  x[source] = 0.0;
  for (;;) {
    std::vector<double> next(n);
    std::vector<int> pred(n);
    for (int i = 0; i < n; ++i) {
      // Relaxation keeps the node's own value (the 0-weight self-loop makes
      // this explicit); the predecessor argmin runs over proper in-edges only
      // so fixpoint ties with the self-loop cannot corrupt targets.
      double best = x[i];
      double best_cand = kInf;
      int best_pred = i;
      for (int e : in[i]) {
        const auto& edge = graph.edges[e];
        if (edge.src == i) continue;
        const double cand = x[edge.src] + edge.weight;
        if (cand < best_cand) {
          best_cand = cand;
          best_pred = edge.src;
        }
        if (cand < best) best = cand;
      }
      next[i] = best;
      if (i == source) {
        pred[i] = i;
      } else if (next[i] < inf && best_pred != i) {
        pred[i] = best_pred;
      } else {
        pred[i] = i;  // not yet reached: no target
      }
    }
    const bool fixpoint = next == x;
    trace.steps.push_back({x, next, pred, -1, fixpoint});
    if (fixpoint) break;
    x = std::move(next);
  }
  return trace;
}

AlgoTrace trace_prim(const Graph& graph, int source) {
  check_source(graph, source, "trace_prim");
  const int n = graph.num_nodes;
  auto in = in_edges_by_node(graph);

  AlgoTrace trace;
  trace.algorithm = Algorithm::prim;
  trace.source = source;

  std::vector<double> x(n, 0.0);
  x[source] = 1.0;
  std::vector<int> pred(n);
  for (int i = 0; i < n; ++i) pred[i] = i;

  for (;;) {
    // Lightest edge leaving the partial tree; ties resolved to the lowest
    // candidate node, then lowest tree-side endpoint.
    int next_node = -1;
    double next_cost = kInf;
    for (int j = 0; j < n; ++j) {
      if (x[j] == 1.0) continue;
      for (int e : in[j]) {
        const auto& edge = graph.edges[e];
        if (edge.src == j || x[edge.src] != 1.0) continue;
        if (edge.weight < next_cost || (edge.weight == next_cost && next_node != j && j < next_node)) {
          next_cost = edge.weight;
          next_node = j;
        }
      }
    }
    if (next_node == -1) {
      trace.steps.push_back({x, x, pred, -1, true});
      break;
    }
    int attach = -1;
    double attach_cost = kInf;
    for (int e : in[next_node]) {
      const auto& edge = graph.edges[e];
      if (edge.src == next_node || x[edge.src] != 1.0) continue;
      if (edge.weight < attach_cost) {
        attach_cost = edge.weight;
        attach = edge.src;
      }
    }
    std::vector<double> next = x;
    next[next_node] = 1.0;
    std::vector<int> step_pred = pred;
    step_pred[next_node] = attach;
    trace.steps.push_back({x, next, step_pred, next_node, false});
    x = std::move(next);
    pred = std::move(step_pred);
  }
  return trace;
}

bool pred_defined(const AlgoTrace& trace, int step, int node) {
  const StepRecord& rec = trace.steps[step];
  switch (trace.algorithm) {
    case Algorithm::bfs:
      return false;
    case Algorithm::bellman_ford:
      return rec.y_next[node] < trace.infinity_value;
    case Algorithm::prim:
      return rec.x[node] == 1.0 || node == rec.next_node;
  }
  return false;
}

}  // namespace algoexec
