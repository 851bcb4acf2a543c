#include "algoexec/explain.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include "algoexec/rng.hpp"
#include "algoexec/trainer.hpp"

namespace algoexec {

MaskExplanation explain_node(const ModelBundle& bundle, const GraphContext& ctx,
                             const SupervisedSequence& sup, int u, const ExplainConfig& config) {
  if (!sup.has_reach()) throw std::invalid_argument("explain_node: needs a reachability task");
  if (u < 0 || u >= ctx.num_nodes) throw std::invalid_argument("explain_node: node out of range");
  if (sup.y_reach.back()[u] != 1.0)
    throw std::invalid_argument("explain_node: node is unreachable in the trace");

  ModelBundle frozen = bundle.clone(/*requires_grad=*/false);
  const int num_edges = ctx.num_edges();
  std::vector<double> init(num_edges, 0.0);
  for (int e = 0; e < num_edges; ++e)
    if (ctx.src[e] == u || ctx.dst[e] == u) init[e] = 1.0;
  Tensor mask(num_edges, 1, std::move(init), /*requires_grad=*/true);

  std::vector<Tensor> mask_params{mask};
  AdamConfig adam_config;
  adam_config.lr = config.lr;
  AdamState adam;
  adam_init(adam, mask_params);

  std::vector<bool> node_mask(ctx.num_nodes, false);
  node_mask[u] = true;
  const std::vector<bool>* bce_mask = config.loss_all_nodes ? nullptr : &node_mask;

  MaskExplanation result;
  result.target_node = u;
  std::deque<double> history;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    Tape tape;
    Rollout roll = rollout_teacher_forced(tape, frozen, ctx, sup, &mask);
    Tensor loss;
    for (int t = 0; t < sup.num_steps; ++t) {
      Tensor target(ctx.num_nodes, 1, sup.y_reach[t]);
      Tensor term = tape.bce_with_logits(roll.steps[t].reach_logits, target, bce_mask);
      loss = loss.defined() ? tape.add(loss, term) : term;
    }
    loss = tape.scale(loss, 1.0 / sup.num_steps);
    loss = tape.add(loss, tape.reduce_sum_all(tape.sigmoid(mask)));
    const double value = loss.scalar();
    tape.backward(loss);
    adam_step(adam_config, adam, mask_params);
    zero_grads(mask_params);
    result.iterations = iter + 1;

    history.push_back(value);
    if (static_cast<int>(history.size()) > config.tol_window + 1) history.pop_front();
    if (static_cast<int>(history.size()) == config.tol_window + 1 &&
        std::abs(history.back() - history.front()) < config.tol) {
      result.converged = true;
      break;
    }
  }

  result.mask = mask.values();
  int best_edge = -1;
  double best_value = 0;
  for (int e : ctx.in_edges[u]) {
    if (!ctx.non_self[e]) continue;  // the self-loop cannot be a predecessor
    if (best_edge == -1 || result.mask[e] > best_value) {
      best_edge = e;
      best_value = result.mask[e];
    }
  }
  result.chosen_edge = best_edge;
  return result;
}

int canonical_parent(const GraphContext& ctx, const std::vector<int>& hops, int node) {
  int parent = -1;
  for (int e : ctx.in_edges[node]) {
    if (!ctx.non_self[e]) continue;
    const int j = ctx.src[e];
    if (hops[j] == hops[node] - 1 && (parent == -1 || j < parent)) parent = j;
  }
  return parent;
}

bool explanation_matches(const GraphContext& ctx, const std::vector<int>& hops,
                         const MaskExplanation& e) {
  if (e.chosen_edge < 0) return false;
  const int j = ctx.src[e.chosen_edge];
  return hops[j] >= 0 && hops[j] == hops[e.target_node] - 1;
}

ChainResult explain_chain(const ModelBundle& bundle, const GraphContext& ctx,
                          const SupervisedSequence& sup, const std::vector<int>& hops, int u,
                          const ExplainConfig& config) {
  if (u < 0 || u >= ctx.num_nodes || hops[u] < 0)
    throw std::invalid_argument("explain_chain: node unreachable");
  ChainResult chain;
  chain.start_node = u;
  chain.chain_length = hops[u];
  int current = u;
  while (hops[current] > 0) {
    MaskExplanation e = explain_node(bundle, ctx, sup, current, config);
    const bool ok = explanation_matches(ctx, hops, e);
    chain.total += 1;
    chain.matched += ok ? 1 : 0;
    chain.path_success = chain.path_success && ok;
    chain.explanations.push_back(std::move(e));
    current = canonical_parent(ctx, hops, current);
    if (current < 0) throw std::logic_error("explain_chain: broken hop structure");
  }
  return chain;
}

ExplainStats run_explain_corpus(const ModelBundle& bundle, const std::vector<Graph>& graphs,
                                const TraceSet& traces, int max_nodes_per_graph,
                                std::uint64_t seed, const ExplainConfig& config,
                                std::vector<ExplainInstanceRow>* rows) {
  ExplainStats stats;
  for (const Graph& g : graphs) {
    auto it = traces.find(g.graph_id);
    if (it == traces.end()) throw std::invalid_argument("missing traces for " + g.graph_id);
    const GraphContext ctx = GraphContext::build(g);
    const SupervisedSequence sup = supervision_for(SupervisionKind::joint_parallel, it->second);
    const std::vector<int> hops = hop_distances(g, it->second.bfs.source);

    std::vector<int> candidates;
    for (int i = 0; i < g.num_nodes; ++i)
      if (hops[i] > 0) candidates.push_back(i);
    Rng rng(derive_seed(seed, "explain/" + g.graph_id));
    rng.shuffle(candidates);
    if (max_nodes_per_graph >= 0 && static_cast<int>(candidates.size()) > max_nodes_per_graph)
      candidates.resize(max_nodes_per_graph);

    for (int u : candidates) {
      ChainResult chain = explain_chain(bundle, ctx, sup, hops, u, config);
      stats.chains += 1;
      stats.chains_ok += chain.path_success ? 1 : 0;
      stats.explanations += chain.total;
      stats.explanations_matched += chain.matched;
      if (rows) {
        for (const MaskExplanation& e : chain.explanations) {
          ExplainInstanceRow row;
          row.graph_id = g.graph_id;
          row.node = e.target_node;
          if (e.chosen_edge >= 0) {
            row.chosen_src = ctx.src[e.chosen_edge];
            row.chosen_dst = ctx.dst[e.chosen_edge];
          }
          row.gt_parent = canonical_parent(ctx, hops, e.target_node);
          row.match = explanation_matches(ctx, hops, e);
          rows->push_back(std::move(row));
        }
      }
    }
  }
  return stats;
}

}  // namespace algoexec
