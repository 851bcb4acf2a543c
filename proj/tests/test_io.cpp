#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "algoexec/graph_gen.hpp"
#include "algoexec/io.hpp"
#include "algoexec/trainer.hpp"

using namespace algoexec;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("graphs round-trip bit-exactly") {
  TempDir dir("algoexec-io-graphs");
  Rng rng(3);
  std::vector<Graph> graphs;
  for (int i = 0; i < 10; ++i) {
    Graph g = generate(all_categories()[i % 7], 16, rng);
    g.graph_id = "round-" + std::to_string(i);
    graphs.push_back(std::move(g));
  }
  const std::string path = dir.str() + "/graphs.txt";
  write_graphs(path, graphs);
  std::vector<Graph> loaded = read_graphs(path);
  REQUIRE(loaded.size() == graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    CHECK(loaded[i].graph_id == graphs[i].graph_id);
    CHECK(loaded[i].category == graphs[i].category);
    CHECK(loaded[i].num_nodes == graphs[i].num_nodes);
    REQUIRE(loaded[i].edges.size() == graphs[i].edges.size());
    for (std::size_t e = 0; e < graphs[i].edges.size(); ++e) {
      CHECK(loaded[i].edges[e].src == graphs[i].edges[e].src);
      CHECK(loaded[i].edges[e].dst == graphs[i].edges[e].dst);
      CHECK(loaded[i].edges[e].weight == graphs[i].edges[e].weight);  // %.17g is exact
    }
  }
}

TEST_CASE("traces round-trip bit-exactly") {
  TempDir dir("algoexec-io-traces");
  Rng rng(5);
  std::vector<Graph> graphs;
  for (int i = 0; i < 5; ++i) {
    Graph g = generate(all_categories()[i % 7], 12, rng);
    g.graph_id = "t-" + std::to_string(i);
    graphs.push_back(std::move(g));
  }
  TraceSet traces = build_traces(graphs, 11);
  const std::string path = dir.str() + "/traces.txt";
  write_traces(path, graphs, traces);
  TraceSet loaded;
  read_traces_into(path, loaded);
  REQUIRE(loaded.size() == traces.size());
  for (const auto& [id, t] : traces) {
    const GraphTraces& l = loaded.at(id);
    CHECK(l.bfs.source == t.bfs.source);
    CHECK(l.bellman_ford.infinity_value == t.bellman_ford.infinity_value);
    REQUIRE(l.bellman_ford.length() == t.bellman_ford.length());
    for (int s = 0; s < t.bellman_ford.length(); ++s) {
      CHECK(l.bellman_ford.steps[s].x == t.bellman_ford.steps[s].x);
      CHECK(l.bellman_ford.steps[s].y_next == t.bellman_ford.steps[s].y_next);
      CHECK(l.bellman_ford.steps[s].pred == t.bellman_ford.steps[s].pred);
      CHECK(l.bellman_ford.steps[s].terminate == t.bellman_ford.steps[s].terminate);
    }
    REQUIRE(l.prim.length() == t.prim.length());
    for (int s = 0; s < t.prim.length(); ++s) {
      CHECK(l.prim.steps[s].next_node == t.prim.steps[s].next_node);
      CHECK(l.prim.steps[s].pred == t.prim.steps[s].pred);
    }
  }
}

TEST_CASE("dataset save/load and byte-identical regeneration") {
  TempDir a("algoexec-ds-a");
  TempDir b("algoexec-ds-b");
  GenConfig config;
  config.train_per_category = 2;
  config.val_per_category = 1;
  config.test_per_category = 1;
  config.test_sizes = {12};
  config.categories = {Category::tree, Category::erdos_renyi};

  DatasetSplit split1 = build_dataset(config, 99);
  std::vector<Graph> all1 = split1.train;
  all1.insert(all1.end(), split1.val.begin(), split1.val.end());
  for (auto& [size, gs] : split1.test) all1.insert(all1.end(), gs.begin(), gs.end());
  TraceSet traces1 = build_traces(all1, 99);
  save_dataset(a.str(), config, 99, split1, traces1);

  DatasetSplit split2 = build_dataset(config, 99);
  std::vector<Graph> all2 = split2.train;
  all2.insert(all2.end(), split2.val.begin(), split2.val.end());
  for (auto& [size, gs] : split2.test) all2.insert(all2.end(), gs.begin(), gs.end());
  TraceSet traces2 = build_traces(all2, 99);
  save_dataset(b.str(), config, 99, split2, traces2);

  for (const char* name : {"graphs_train.txt", "graphs_val.txt", "graphs_test_12.txt",
                           "traces_train.txt", "manifest.json"})
    CHECK(slurp(a.str() + "/" + name) == slurp(b.str() + "/" + name));

  LoadedDataset loaded = load_dataset(a.str());
  CHECK(loaded.seed == 99);
  CHECK(loaded.split.train.size() == 4);
  CHECK(loaded.split.test.at(12).size() == 2);
  CHECK(loaded.traces.size() == traces1.size());
}

TEST_CASE("model config round-trips") {
  TempDir dir("algoexec-io-config");
  ModelConfig config;
  config.processor = ProcessorKind::gat;
  config.latent_dim = 24;
  config.task = TaskGroup::prim;
  config.seed = 1234;
  config.bias_in_decoders = true;
  const std::string path = dir.str() + "/model_config.txt";
  write_model_config(path, config);
  ModelConfig loaded = read_model_config(path);
  CHECK(loaded.processor == config.processor);
  CHECK(loaded.latent_dim == config.latent_dim);
  CHECK(loaded.task == config.task);
  CHECK(loaded.seed == config.seed);
  CHECK(loaded.bias_in_decoders == config.bias_in_decoders);
}

TEST_CASE("checkpoints restore parameters and optimizer state exactly") {
  TempDir dir("algoexec-io-ckpt");
  ModelConfig mc;
  mc.latent_dim = 8;
  mc.task = TaskGroup::parallel;
  mc.seed = 17;
  ModelBundle bundle = ModelBundle::init(mc);
  std::vector<Tensor> params = bundle.params();
  AdamState adam;
  adam_init(adam, params);
  adam.step_count = 42;
  adam.m[0][0] = 0.125;
  adam.v[0][0] = 0.5;

  Checkpoint ckpt;
  ckpt.model_config = mc;
  ckpt.current = bundle.named_params();
  ckpt.best = bundle.named_params();
  ckpt.adam = adam;
  ckpt.epoch = 7;
  ckpt.phase = 2;
  ckpt.phase_start_epoch = 3;
  ckpt.epochs_since_improve = 2;
  ckpt.best_epoch = 5;
  ckpt.best_metric = 0.875;
  ckpt.shuffle_state = {9, 8, 7, 6};
  const std::string path = dir.str() + "/test.ckpt";
  save_checkpoint(path, ckpt);

  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.epoch == 7);
  CHECK(loaded.phase == 2);
  CHECK(loaded.phase_start_epoch == 3);
  CHECK(loaded.best_metric == 0.875);
  CHECK(loaded.shuffle_state == std::array<std::uint64_t, 4>{9, 8, 7, 6});
  CHECK(loaded.adam.step_count == 42);
  CHECK(loaded.adam.m[0][0] == 0.125);
  REQUIRE(loaded.current.size() == ckpt.current.size());
  for (std::size_t i = 0; i < ckpt.current.size(); ++i) {
    CHECK(loaded.current[i].first == ckpt.current[i].first);
    CHECK(loaded.current[i].second.values() == ckpt.current[i].second.values());
  }

  ModelBundle restored = bundle_from_params(mc, loaded.current);
  auto pa = restored.named_params();
  auto pb = bundle.named_params();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].second.values() == pb[i].second.values());

  CHECK_THROWS(load_checkpoint(dir.str() + "/missing.ckpt"));
}
