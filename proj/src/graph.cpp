#include "algoexec/graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

namespace algoexec {

const char* category_name(Category c) {
  switch (c) {
    case Category::ladder: return "ladder";
    case Category::grid: return "grid";
    case Category::tree: return "tree";
    case Category::erdos_renyi: return "erdos_renyi";
    case Category::barabasi_albert: return "barabasi_albert";
    case Category::community: return "community";
    case Category::caveman: return "caveman";
  }
  return "unknown";
}

Category category_from_name(const std::string& name) {
  for (Category c : all_categories()) {
    if (name == category_name(c)) return c;
  }
  throw std::invalid_argument("unknown graph category: " + name);
}

std::vector<Category> all_categories() {
  return {Category::ladder,          Category::grid,      Category::tree,
          Category::erdos_renyi,     Category::barabasi_albert, Category::community,
          Category::caveman};
}

Graph make_graph(int num_nodes, Category category, const std::vector<Edge>& undirected_pairs,
                 std::string graph_id) {
  if (num_nodes <= 0) throw std::invalid_argument("graph must have at least one node");
  Graph g;
  g.num_nodes = num_nodes;
  g.category = category;
  g.graph_id = std::move(graph_id);
  g.edges.reserve(static_cast<std::size_t>(num_nodes) + 2 * undirected_pairs.size());
  for (int i = 0; i < num_nodes; ++i) g.edges.push_back({i, i, 0.0});
  std::vector<Edge> pairs = undirected_pairs;
  for (auto& e : pairs) {
    if (e.src > e.dst) std::swap(e.src, e.dst);
  }
  std::sort(pairs.begin(), pairs.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
  });
  for (const auto& e : pairs) {
    if (e.src == e.dst) throw std::invalid_argument("self-loop passed as undirected pair");
    if (e.src < 0 || e.dst >= num_nodes) throw std::invalid_argument("edge endpoint out of range");
    g.edges.push_back({e.src, e.dst, e.weight});
    g.edges.push_back({e.dst, e.src, e.weight});
  }
  return g;
}

std::vector<std::vector<int>> in_edges_by_node(const Graph& g) {
  std::vector<std::vector<int>> in(g.num_nodes);
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    in[g.edges[e].dst].push_back(e);
  }
  return in;
}

std::vector<std::vector<int>> neighbors(const Graph& g) {
  std::vector<std::vector<int>> adj(g.num_nodes);
  for (const auto& e : g.edges) {
    if (e.src != e.dst) adj[e.src].push_back(e.dst);
  }
  return adj;
}

bool is_connected(const Graph& g) {
  if (g.num_nodes == 0) return false;
  auto adj = neighbors(g);
  std::vector<char> seen(g.num_nodes, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == g.num_nodes;
}

void validate_graph(const Graph& g) {
  if (g.num_nodes <= 0) throw std::invalid_argument(g.graph_id + ": empty graph");
  std::vector<char> has_self(g.num_nodes, 0);
  std::set<std::pair<int, int>> seen;
  std::map<std::pair<int, int>, double> weight_of;
  for (const auto& e : g.edges) {
    if (e.src < 0 || e.src >= g.num_nodes || e.dst < 0 || e.dst >= g.num_nodes)
      throw std::invalid_argument(g.graph_id + ": edge endpoint out of range");
    if (!seen.insert({e.src, e.dst}).second)
      throw std::invalid_argument(g.graph_id + ": duplicate edge record");
    if (e.src == e.dst) {
      has_self[e.src] = 1;
      if (e.weight != 0.0) throw std::invalid_argument(g.graph_id + ": self-loop weight must be 0");
    } else {
      if (e.weight < 0.2 || e.weight > 1.0)
        throw std::invalid_argument(g.graph_id + ": weight outside [0.2, 1]");
      weight_of[{e.src, e.dst}] = e.weight;
    }
  }
  for (int i = 0; i < g.num_nodes; ++i) {
    if (!has_self[i]) throw std::invalid_argument(g.graph_id + ": missing self-loop");
  }
  for (const auto& [key, w] : weight_of) {
    auto rev = weight_of.find({key.second, key.first});
    if (rev == weight_of.end() || rev->second != w)
      throw std::invalid_argument(g.graph_id + ": asymmetric edge pair");
  }
}

}  // namespace algoexec
