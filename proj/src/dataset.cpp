#include "algoexec/dataset.hpp"

#include <stdexcept>

#include "algoexec/rng.hpp"

namespace algoexec {

GraphTraces build_graph_traces(const Graph& graph, std::uint64_t seed) {
  Rng parallel_rng(derive_seed(seed, "source/parallel/" + graph.graph_id));
  Rng prim_rng(derive_seed(seed, "source/prim/" + graph.graph_id));
  const int parallel_source = parallel_rng.index(graph.num_nodes);
  const int prim_source = prim_rng.index(graph.num_nodes);
  GraphTraces traces;
  traces.bfs = trace_bfs(graph, parallel_source);
  traces.bellman_ford = trace_bellman_ford(graph, parallel_source);
  traces.prim = trace_prim(graph, prim_source);
  return traces;
}

TraceSet build_traces(const std::vector<Graph>& graphs, std::uint64_t seed) {
  TraceSet set;
  for (const Graph& g : graphs) {
    if (g.graph_id.empty()) throw std::invalid_argument("build_traces: graph without id");
    set[g.graph_id] = build_graph_traces(g, seed);
  }
  return set;
}

SupervisedSequence supervision_for(SupervisionKind kind, const GraphTraces& traces) {
  switch (kind) {
    case SupervisionKind::joint_parallel:
      return build_parallel_supervision(traces.bfs, traces.bellman_ford);
    case SupervisionKind::bfs_phase: return build_bfs_phase_supervision(traces.bfs);
    case SupervisionKind::bf_only: return build_bf_only_supervision(traces.bellman_ford);
    case SupervisionKind::bf_no_algo: return build_bf_no_algo_supervision(traces.bellman_ford);
    case SupervisionKind::prim: return build_prim_supervision(traces.prim);
    case SupervisionKind::prim_no_algo: return build_prim_no_algo_supervision(traces.prim);
  }
  throw std::invalid_argument("unknown supervision kind");
}

}  // namespace algoexec
