#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "algoexec/dataset.hpp"
#include "algoexec/model.hpp"
#include "algoexec/rollout.hpp"

namespace algoexec {

struct ExplainConfig {
  double lr = 0.05;
  int max_iterations = 500;
  double tol = 1e-5;   // loss change over tol_window iterations
  int tol_window = 10;
  bool loss_all_nodes = false;  // default restricts the BCE to the explained node
};

// Soft adjacency-mask explanation of one node's reachability prediction:
// optimizes one scalar per directed edge (model parameters frozen), then
// picks the max-weight proper in-edge as the explaining predecessor.
struct MaskExplanation {
  int target_node = -1;
  std::vector<double> mask;  // raw values; the forward pass applies sigmoid
  int chosen_edge = -1;
  bool converged = false;
  int iterations = 0;
};

MaskExplanation explain_node(const ModelBundle& bundle, const GraphContext& ctx,
                             const SupervisedSequence& sup, int u,
                             const ExplainConfig& config = {});

// Hop-minimal parents are the ground truth for reachability explanations:
// any in-neighbor one hop closer to the source is a correct answer, the
// canonical one (lowest index) defines the chain to follow.
int canonical_parent(const GraphContext& ctx, const std::vector<int>& hops, int node);
bool explanation_matches(const GraphContext& ctx, const std::vector<int>& hops,
                         const MaskExplanation& e);

struct ChainResult {
  int start_node = -1;
  int chain_length = 0;
  bool path_success = true;  // every explanation along the chain matched
  int matched = 0;
  int total = 0;
  std::vector<MaskExplanation> explanations;
};

ChainResult explain_chain(const ModelBundle& bundle, const GraphContext& ctx,
                          const SupervisedSequence& sup, const std::vector<int>& hops, int u,
                          const ExplainConfig& config = {});

struct ExplainInstanceRow {
  std::string graph_id;
  int node = -1;
  int chosen_src = -1;
  int chosen_dst = -1;
  int gt_parent = -1;
  bool match = false;
};

struct ExplainStats {
  int chains = 0;
  int chains_ok = 0;
  int explanations = 0;
  int explanations_matched = 0;
  double path_success_rate() const { return chains > 0 ? static_cast<double>(chains_ok) / chains : 0; }
  double match_rate() const {
    return explanations > 0 ? static_cast<double>(explanations_matched) / explanations : 0;
  }
};

// Runs explanation chains from up to max_nodes_per_graph sampled reachable
// nodes of every graph; rows (one per explanation) are appended when given.
ExplainStats run_explain_corpus(const ModelBundle& bundle, const std::vector<Graph>& graphs,
                                const TraceSet& traces, int max_nodes_per_graph,
                                std::uint64_t seed, const ExplainConfig& config = {},
                                std::vector<ExplainInstanceRow>* rows = nullptr);

}  // namespace algoexec
