#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace algoexec {

enum class Category {
  ladder,
  grid,
  tree,
  erdos_renyi,
  barabasi_albert,
  community,
  caveman,
};

inline constexpr int kNumCategories = 7;

const char* category_name(Category c);
Category category_from_name(const std::string& name);
std::vector<Category> all_categories();

struct Edge {
  int src = 0;
  int dst = 0;
  double weight = 0.0;
};

// Undirected weighted graph stored as directed edge records: one self-loop
// per node (weight 0) plus both directions of every undirected pair, sharing
// one weight. Edge order is canonical: self-loops first, then pairs sorted by
// (min, max) endpoint, each emitting (u,v) then (v,u).
struct Graph {
  int num_nodes = 0;
  std::vector<Edge> edges;
  Category category = Category::ladder;
  std::string graph_id;

  std::size_t num_edges() const { return edges.size(); }
};

// Builds the canonical edge list from undirected pairs (u < v, weighted).
Graph make_graph(int num_nodes, Category category, const std::vector<Edge>& undirected_pairs,
                 std::string graph_id = {});

// In-edge adjacency: for each node, indices into graph.edges of edges (j -> i).
std::vector<std::vector<int>> in_edges_by_node(const Graph& g);

// Neighbor lists over non-self edges.
std::vector<std::vector<int>> neighbors(const Graph& g);

bool is_connected(const Graph& g);

// Throws std::invalid_argument if any structural invariant is violated
// (missing self-loops, asymmetric pairs, weights outside [0.2, 1], duplicates).
void validate_graph(const Graph& g);

}  // namespace algoexec
