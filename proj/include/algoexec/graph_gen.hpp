#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "algoexec/graph.hpp"
#include "algoexec/rng.hpp"

namespace algoexec {

// Structure generators. Each returns a weighted undirected graph in the
// canonical representation (self-loops + symmetric pairs); weights are drawn
// from the supplied rng via assign_weights.
Graph gen_ladder(int n_nodes, Rng& rng);
Graph gen_grid(int rows, int cols, Rng& rng);
Graph gen_grid_auto(int n_nodes, Rng& rng);  // most-square factorization
Graph gen_tree_prufer(int n_nodes, Rng& rng);
Graph gen_erdos_renyi(int n_nodes, Rng& rng);
Graph gen_barabasi_albert(int n_nodes, Rng& rng);
Graph gen_community(int n_nodes, Rng& rng);
Graph gen_caveman(int n_nodes, Rng& rng);

Graph generate(Category category, int n_nodes, Rng& rng);

// Erdos-Renyi edge probability: min(log2(n)/n, 0.5).
double erdos_renyi_probability(int n_nodes);

// Caveman shortcut count: round-half-up of 0.025 * n, at least 1.
int caveman_shortcut_count(int n_nodes);

// Grid factorization: rows = floor(sqrt(n)) decremented until it divides n.
std::pair<int, int> grid_dims(int n_nodes);

// Assigns fresh U[0.2, 1] weights to every undirected pair (shared across the
// symmetric records); self-loop weights stay 0.
void assign_weights(Graph& graph, Rng& rng);

struct GenConfig {
  std::vector<Category> categories = all_categories();
  int train_per_category = 100;
  int val_per_category = 5;
  int test_per_category = 5;
  int train_nodes = 20;
  std::vector<int> test_sizes = {20, 50, 100};
};

struct DatasetSplit {
  std::vector<Graph> train;
  std::vector<Graph> val;
  std::map<int, std::vector<Graph>> test;  // node count -> graphs
  std::uint64_t rng_seed = 0;
};

// Deterministic in (config, seed); each graph consumes an independent
// sub-seed so generation order (or parallelism) cannot change the output.
DatasetSplit build_dataset(const GenConfig& config, std::uint64_t seed);

}  // namespace algoexec
