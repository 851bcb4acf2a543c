#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "algoexec/graph.hpp"
#include "algoexec/rollout.hpp"
#include "algoexec/trace.hpp"

namespace algoexec {

// Supervision traces of one graph. The parallel pair shares one source node
// (they execute simultaneously); Prim draws its own.
struct GraphTraces {
  AlgoTrace bfs;
  AlgoTrace bellman_ford;
  AlgoTrace prim;
};

using TraceSet = std::map<std::string, GraphTraces>;

// Sources are fixed at build time from per-graph sub-seeds, so epochs revisit
// identical traces and parallel generation matches serial.
GraphTraces build_graph_traces(const Graph& graph, std::uint64_t seed);
TraceSet build_traces(const std::vector<Graph>& graphs, std::uint64_t seed);

SupervisedSequence supervision_for(SupervisionKind kind, const GraphTraces& traces);

}  // namespace algoexec
