#include <doctest.h>

#include <cmath>

#include "algoexec/explain.hpp"
#include "algoexec/graph_gen.hpp"
#include "algoexec/trainer.hpp"
#include "copy_bundle.hpp"

using namespace algoexec;

namespace {

SupervisedSequence sup_for(const Graph& g, int source) {
  return build_parallel_supervision(trace_bfs(g, source), trace_bellman_ford(g, source));
}

ExplainConfig quick_config() {
  ExplainConfig c;
  c.max_iterations = 40;
  return c;
}

}  // namespace

TEST_CASE("a gate held wide open reproduces the ungated forward pass") {
  Rng rng(3);
  Graph g = gen_erdos_renyi(10, rng);
  GraphContext ctx = GraphContext::build(g);
  ModelConfig mc;
  mc.latent_dim = 8;
  mc.task = TaskGroup::parallel;
  mc.seed = 8;
  ModelBundle b = ModelBundle::init(mc);
  Tensor x(10, 2, 0.5);
  Tape tape(false);
  Tensor z = encode(tape, b, x, Tensor(10, 8, 0.0));
  Tensor open_gate(ctx.num_edges(), 1, 40.0);  // sigmoid -> 1
  Tensor h_gated = process(tape, b, ctx, z, &open_gate);
  Tensor h_plain = process(tape, b, ctx, z);
  for (std::size_t i = 0; i < h_plain.size(); ++i)
    CHECK(h_gated.values()[i] == doctest::Approx(h_plain.values()[i]).epsilon(1e-9));
}

TEST_CASE("mask regularizer strictly decreases when any entry decreases") {
  Tape tape;
  Tensor mask(4, 1, {0.5, -1.0, 2.0, 0.0});
  const double before = tape.reduce_sum_all(tape.sigmoid(mask)).scalar();
  mask.mut(2, 0) -= 0.7;
  const double after = tape.reduce_sum_all(tape.sigmoid(mask)).scalar();
  CHECK(after < before);
}

TEST_CASE("single proper in-edge is always the chosen explanation") {
  Graph g = make_graph(2, Category::tree, {{0, 1, 0.6}}, "pair");
  GraphContext ctx = GraphContext::build(g);
  SupervisedSequence sup = sup_for(g, 0);
  MaskExplanation e = explain_node(copy_bundle::make(), ctx, sup, 1, quick_config());
  REQUIRE(e.chosen_edge >= 0);
  CHECK(ctx.src[e.chosen_edge] == 0);
  CHECK(ctx.dst[e.chosen_edge] == 1);
}

TEST_CASE("explaining never modifies model parameters") {
  Graph g = make_graph(3, Category::tree, {{0, 1, 0.4}, {1, 2, 0.9}}, "path");
  GraphContext ctx = GraphContext::build(g);
  SupervisedSequence sup = sup_for(g, 0);
  ModelBundle bundle = copy_bundle::make();
  std::vector<std::vector<double>> before;
  for (auto& [name, t] : bundle.named_params()) before.push_back(t.values());
  explain_node(bundle, ctx, sup, 2, quick_config());
  std::size_t i = 0;
  for (auto& [name, t] : bundle.named_params()) CHECK(t.values() == before[i++]);
}

TEST_CASE("unreachable or invalid nodes are rejected") {
  Graph g = make_graph(2, Category::erdos_renyi, {}, "isolated");
  GraphContext ctx = GraphContext::build(g);
  SupervisedSequence sup = sup_for(g, 0);
  CHECK_THROWS_AS(explain_node(copy_bundle::make(), ctx, sup, 1, quick_config()),
                  std::invalid_argument);
}

TEST_CASE("chain from the source is trivially successful and chains match hop counts") {
  Graph g = make_graph(3, Category::tree, {{0, 1, 0.4}, {1, 2, 0.9}}, "path");
  GraphContext ctx = GraphContext::build(g);
  SupervisedSequence sup = sup_for(g, 0);
  std::vector<int> hops = hop_distances(g, 0);
  ModelBundle bundle = copy_bundle::make();

  ChainResult at_source = explain_chain(bundle, ctx, sup, hops, 0, quick_config());
  CHECK(at_source.chain_length == 0);
  CHECK(at_source.total == 0);
  CHECK(at_source.path_success);

  ChainResult from_end = explain_chain(bundle, ctx, sup, hops, 2, quick_config());
  CHECK(from_end.chain_length == 2);
  CHECK(from_end.total == 2);
}

TEST_CASE("canonical parents follow hop structure") {
  Graph g = make_graph(4, Category::erdos_renyi,
                       {{0, 1, 0.5}, {0, 2, 0.5}, {1, 3, 0.5}, {2, 3, 0.5}}, "diamond");
  GraphContext ctx = GraphContext::build(g);
  std::vector<int> hops = hop_distances(g, 0);
  CHECK(canonical_parent(ctx, hops, 1) == 0);
  CHECK(canonical_parent(ctx, hops, 2) == 0);
  CHECK(canonical_parent(ctx, hops, 3) == 1);  // lowest-index hop-minimal parent
}

TEST_CASE("the oracle-copy model is explained correctly on a path") {
  // the only way to keep node u's prediction correct is the path edge
  Graph g = make_graph(4, Category::tree, {{0, 1, 0.4}, {1, 2, 0.6}, {2, 3, 0.5}}, "path4");
  GraphContext ctx = GraphContext::build(g);
  SupervisedSequence sup = sup_for(g, 0);
  std::vector<int> hops = hop_distances(g, 0);
  ExplainConfig config;  // full iteration budget
  ChainResult chain = explain_chain(copy_bundle::make(), ctx, sup, hops, 3, config);
  CHECK(chain.total == 3);
  CHECK(chain.matched == 3);
  CHECK(chain.path_success);
}

TEST_CASE("corpus runner aggregates chains and rows") {
  Rng rng(51);
  std::vector<Graph> graphs;
  for (int i = 0; i < 2; ++i) {
    Graph g = gen_tree_prufer(7, rng);
    g.graph_id = "exp-" + std::to_string(i);
    graphs.push_back(std::move(g));
  }
  TraceSet traces = build_traces(graphs, 13);
  std::vector<ExplainInstanceRow> rows;
  ExplainStats stats =
      run_explain_corpus(copy_bundle::make(), graphs, traces, 2, 13, quick_config(), &rows);
  CHECK(stats.chains == 4);
  CHECK(static_cast<int>(rows.size()) == stats.explanations);
  CHECK(stats.explanations >= stats.chains);
  for (const auto& row : rows) CHECK(row.node >= 0);
}
