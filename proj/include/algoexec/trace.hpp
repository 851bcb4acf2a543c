#pragma once

#include <string>
#include <vector>

#include "algoexec/graph.hpp"

namespace algoexec {

enum class Algorithm { bfs, bellman_ford, prim };

const char* algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

// One supervised step of a classical algorithm. `pred` holds the node's own
// index wherever no predecessor target is defined (source excepted: its
// target is itself by definition).
struct StepRecord {
  std::vector<double> x;       // per-node input state x^(t)
  std::vector<double> y_next;  // per-node next-state target x^(t+1)
  std::vector<int> pred;       // predecessor targets (bellman_ford, prim)
  int next_node = -1;          // prim: node added this step; -1 on the final step
  bool terminate = false;      // termination target; true only on the last step
};

struct AlgoTrace {
  Algorithm algorithm = Algorithm::bfs;
  int source = 0;
  double infinity_value = 0.0;  // bellman_ford: finite stand-in for +inf
  std::vector<StepRecord> steps;

  int num_nodes() const { return steps.empty() ? 0 : static_cast<int>(steps.front().x.size()); }
  int length() const { return static_cast<int>(steps.size()); }
};

// Full supervision traces; each runs the textbook update to its fixpoint and
// includes the fixpoint step so exactly one step carries the terminate flag.
AlgoTrace trace_bfs(const Graph& graph, int source);
AlgoTrace trace_bellman_ford(const Graph& graph, int source);
AlgoTrace trace_prim(const Graph& graph, int source);

// Maximum finite shortest-path distance over all ordered node pairs.
double longest_shortest_path(const Graph& graph);

// Single-source weighted shortest paths (binary heap); unreachable -> +inf.
std::vector<double> dijkstra_distances(const Graph& graph, int source);

// Unweighted hop distances; unreachable -> -1.
std::vector<int> hop_distances(const Graph& graph, int source);

// True iff the predecessor target at this step is a real supervision signal
// for node i (used for loss masks and metrics; the source is reported as
// defined and excluded separately).
bool pred_defined(const AlgoTrace& trace, int step, int node);

}  // namespace algoexec
