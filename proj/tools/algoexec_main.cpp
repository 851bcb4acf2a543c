// Command-line laboratory for neural graph algorithm execution: dataset
// generation, trace building, training, evaluation, and explanation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "algoexec/dataset.hpp"
#include "algoexec/explain.hpp"
#include "algoexec/graph_gen.hpp"
#include "algoexec/io.hpp"
#include "algoexec/metrics.hpp"
#include "algoexec/parallel.hpp"
#include "algoexec/trainer.hpp"

namespace {

using namespace algoexec;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

std::vector<int> parse_sizes(const std::string& csv) {
  std::vector<int> sizes;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) sizes.push_back(std::stoi(item));
  }
  if (sizes.empty()) throw std::invalid_argument("no sizes given");
  return sizes;
}

std::vector<Category> parse_categories(const std::string& csv) {
  if (csv == "all") return all_categories();
  std::vector<Category> cats;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "trees") item = "tree";  // common alias
    if (!item.empty()) cats.push_back(category_from_name(item));
  }
  if (cats.empty()) throw std::invalid_argument("no categories given");
  return cats;
}

void write_snapshot(const std::string& out_dir, const nlohmann::json& j) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/resolved_config.json");
  if (!out) throw std::runtime_error("cannot write resolved config in " + out_dir);
  out << j.dump(2) << "\n";
}

std::vector<Graph> all_graphs(const DatasetSplit& split) {
  std::vector<Graph> graphs = split.train;
  graphs.insert(graphs.end(), split.val.begin(), split.val.end());
  for (const auto& [size, gs] : split.test) graphs.insert(graphs.end(), gs.begin(), gs.end());
  return graphs;
}

SupervisionKind eval_kind_for_task(TaskGroup task) {
  switch (task) {
    case TaskGroup::parallel: return SupervisionKind::joint_parallel;
    case TaskGroup::bf_only: return SupervisionKind::bf_only;
    case TaskGroup::bf_no_algo: return SupervisionKind::bf_no_algo;
    case TaskGroup::prim: return SupervisionKind::prim;
    case TaskGroup::prim_no_algo: return SupervisionKind::prim_no_algo;
  }
  throw std::invalid_argument("unknown task group");
}

int cmd_generate(const std::string& out_dir, std::uint64_t seed, const std::string& categories,
                 int train_per_category, int val_per_category, int test_per_category,
                 int train_nodes, const std::string& test_sizes) {
  GenConfig config;
  config.categories = parse_categories(categories);
  config.train_per_category = train_per_category;
  config.val_per_category = val_per_category;
  config.test_per_category = test_per_category;
  config.train_nodes = train_nodes;
  config.test_sizes = parse_sizes(test_sizes);

  nlohmann::json snap;
  snap["command"] = "generate";
  snap["seed"] = seed;
  snap["categories"] = categories;
  snap["train_per_category"] = train_per_category;
  snap["val_per_category"] = val_per_category;
  snap["test_per_category"] = test_per_category;
  snap["train_nodes"] = train_nodes;
  snap["test_sizes"] = test_sizes;
  write_snapshot(out_dir, snap);

  DatasetSplit split = build_dataset(config, seed);
  TraceSet traces = build_traces(all_graphs(split), seed);
  save_dataset(out_dir, config, seed, split, traces);
  std::cout << "dataset written to " << out_dir << ": " << split.train.size() << " train, "
            << split.val.size() << " val";
  for (const auto& [size, gs] : split.test) std::cout << ", " << gs.size() << " test@" << size;
  std::cout << "\n";
  return kExitOk;
}

int cmd_train(const std::string& dataset_dir, const std::string& out_dir, const std::string& mode,
              const std::string& processor, int latent_dim, double lr, int batch, int max_epochs,
              int patience, std::uint64_t seed, bool resume, bool clip, bool relu_update) {
  TrainConfig config;
  config.mode = train_mode_from_name(mode);
  config.processor = processor_from_name(processor);
  config.latent_dim = latent_dim;
  config.lr = lr;
  config.batch_graphs = batch;
  config.max_epochs = max_epochs;
  config.patience = patience;
  config.seed = seed;
  config.resume = resume;
  config.clip_gradients = clip;
  config.relu_after_update = relu_update;
  config.checkpoint_dir = out_dir;

  nlohmann::json snap;
  snap["command"] = "train";
  snap["dataset"] = dataset_dir;
  snap["mode"] = mode;
  snap["processor"] = processor;
  snap["latent_dim"] = latent_dim;
  snap["lr"] = lr;
  snap["batch_graphs"] = batch;
  snap["max_epochs"] = max_epochs;
  snap["patience"] = patience;
  snap["seed"] = seed;
  snap["resume"] = resume;
  snap["clip_gradients"] = clip;
  snap["relu_after_update"] = relu_update;
  write_snapshot(out_dir, snap);

  LoadedDataset ds = load_dataset(dataset_dir);
  TrainResult result = train(config, ds.split.train, ds.split.val, ds.traces);
  std::cout << "training done: best epoch " << result.log.best_epoch << ", best validation metric "
            << result.log.best_metric << "\n";
  std::cout << "checkpoint: " << out_dir << "/best.ckpt\n";
  return kExitOk;
}

int cmd_eval(const std::string& dataset_dir, const std::string& checkpoint_path,
             const std::string& out_dir, const std::string& sizes_csv, int workers,
             const std::string& model_name) {
  nlohmann::json snap;
  snap["command"] = "eval";
  snap["dataset"] = dataset_dir;
  snap["checkpoint"] = checkpoint_path;
  snap["sizes"] = sizes_csv;
  snap["workers"] = workers;
  write_snapshot(out_dir, snap);

  LoadedDataset ds = load_dataset(dataset_dir);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  ModelBundle bundle = bundle_from_params(ckpt.model_config, ckpt.current);
  const SupervisionKind kind = eval_kind_for_task(bundle.config.task);
  const std::string name =
      model_name.empty() ? std::string(processor_name(bundle.config.processor)) : model_name;

  std::vector<EvalInstance> instances;
  for (int size : parse_sizes(sizes_csv)) {
    auto it = ds.split.test.find(size);
    if (it == ds.split.test.end())
      throw std::runtime_error("dataset has no test split of size " + std::to_string(size));
    const auto& graphs = it->second;
    std::vector<EvalInstance> slot(graphs.size());
    parallel_for(static_cast<int>(graphs.size()), workers, [&](int i) {
      const Graph& g = graphs[i];
      GraphContext ctx = GraphContext::build(g);
      SupervisedSequence sup = supervision_for(kind, ds.traces.at(g.graph_id));
      EvalInstance inst;
      inst.graph_id = g.graph_id;
      inst.category = g.category;
      inst.size = size;
      inst.metrics = evaluate_instance(bundle, ctx, sup);
      slot[i] = std::move(inst);
    });
    instances.insert(instances.end(), slot.begin(), slot.end());
  }
  MetricsReport report =
      aggregate_metrics(instances, name, task_group_name(bundle.config.task));
  std::filesystem::create_directories(out_dir);
  write_metrics_csv(out_dir + "/metrics.csv", {report});
  write_timeseries_csv(out_dir + "/timeseries.csv", {report});
  const std::string tables = render_tables({report});
  std::ofstream(out_dir + "/tables.txt") << tables;
  std::cout << tables;
  return kExitOk;
}

int cmd_explain(const std::string& dataset_dir, const std::string& checkpoint_path,
                const std::string& out_dir, const std::string& split, int max_nodes,
                std::uint64_t seed, double lr, int max_iterations, bool loss_all_nodes,
                const std::string& graph_id, int workers) {
  nlohmann::json snap;
  snap["command"] = "explain";
  snap["dataset"] = dataset_dir;
  snap["checkpoint"] = checkpoint_path;
  snap["split"] = split;
  snap["max_nodes_per_graph"] = max_nodes;
  snap["seed"] = seed;
  snap["lr"] = lr;
  snap["max_iterations"] = max_iterations;
  snap["loss_all_nodes"] = loss_all_nodes;
  snap["graph_id"] = graph_id;
  write_snapshot(out_dir, snap);
  (void)workers;

  LoadedDataset ds = load_dataset(dataset_dir);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  ModelBundle bundle = bundle_from_params(ckpt.model_config, ckpt.current);
  if (bundle.config.task != TaskGroup::parallel)
    throw std::invalid_argument("explain needs a reachability-capable (parallel) checkpoint");

  std::vector<Graph> graphs;
  if (split == "train") graphs = ds.split.train;
  else if (split == "val") graphs = ds.split.val;
  else if (split.rfind("test", 0) == 0) {
    const int size = std::stoi(split.substr(4));
    graphs = ds.split.test.at(size);
  } else {
    throw std::invalid_argument("unknown split: " + split);
  }
  if (!graph_id.empty()) {
    std::vector<Graph> filtered;
    for (const Graph& g : graphs)
      if (g.graph_id == graph_id) filtered.push_back(g);
    if (filtered.empty()) throw std::runtime_error("graph id not found in split: " + graph_id);
    graphs = filtered;
  }

  ExplainConfig config;
  config.lr = lr;
  config.max_iterations = max_iterations;
  config.loss_all_nodes = loss_all_nodes;

  std::vector<ExplainInstanceRow> rows;
  std::vector<MaskExplanation> kept_masks;  // --graph-id mode: full dumps
  ExplainStats stats;
  if (graph_id.empty()) {
    stats = run_explain_corpus(bundle, graphs, ds.traces, max_nodes, seed, config, &rows);
  } else {
    const Graph& g = graphs.front();
    const GraphContext ctx = GraphContext::build(g);
    const SupervisedSequence sup =
        supervision_for(SupervisionKind::joint_parallel, ds.traces.at(g.graph_id));
    const std::vector<int> hops = hop_distances(g, ds.traces.at(g.graph_id).bfs.source);
    std::vector<int> starts;
    for (int i = 0; i < g.num_nodes; ++i)
      if (hops[i] > 0) starts.push_back(i);
    Rng rng(derive_seed(seed, "explain/" + g.graph_id));
    rng.shuffle(starts);
    if (max_nodes >= 0 && static_cast<int>(starts.size()) > max_nodes) starts.resize(max_nodes);
    for (int u : starts) {
      ChainResult chain = explain_chain(bundle, ctx, sup, hops, u, config);
      stats.chains += 1;
      stats.chains_ok += chain.path_success ? 1 : 0;
      stats.explanations += chain.total;
      stats.explanations_matched += chain.matched;
      for (MaskExplanation& e : chain.explanations) {
        ExplainInstanceRow row;
        row.graph_id = g.graph_id;
        row.node = e.target_node;
        if (e.chosen_edge >= 0) {
          row.chosen_src = ctx.src[e.chosen_edge];
          row.chosen_dst = ctx.dst[e.chosen_edge];
        }
        row.gt_parent = canonical_parent(ctx, hops, e.target_node);
        row.match = explanation_matches(ctx, hops, e);
        rows.push_back(std::move(row));
        kept_masks.push_back(std::move(e));
      }
    }
  }

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir + "/explanations.csv");
    csv << "graph_id,node,chosen_src,chosen_dst,gt_parent,match\n";
    for (const auto& r : rows)
      csv << r.graph_id << "," << r.node << "," << r.chosen_src << "," << r.chosen_dst << ","
          << r.gt_parent << "," << (r.match ? 1 : 0) << "\n";
  }
  {
    std::ofstream summary(out_dir + "/summary.txt");
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "chains %d ok %d path_success_rate %.4f\nexplanations %d matched %d "
                  "predecessor_match_rate %.4f\n",
                  stats.chains, stats.chains_ok, stats.path_success_rate(), stats.explanations,
                  stats.explanations_matched, stats.match_rate());
    summary << buf;
    std::cout << buf;
  }
  if (!graph_id.empty()) {
    // full mask dump plus the chosen predecessor edges for visualization
    const Graph& g = graphs.front();
    GraphContext ctx = GraphContext::build(g);
    std::ofstream dump(out_dir + "/annotated_" + graph_id + ".txt");
    dump << "# src dst weight mask_values_per_explained_node chosen_for_nodes\n";
    for (int e = 0; e < ctx.num_edges(); ++e) {
      dump << ctx.src[e] << " " << ctx.dst[e] << " " << ctx.edge_feat.at(e, 0);
      std::string masks;
      for (const auto& me : kept_masks) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%s%d:%.4f", masks.empty() ? "" : ";", me.target_node,
                      me.mask[e]);
        masks += buf;
      }
      dump << " " << (masks.empty() ? "-" : masks);
      std::string marks;
      for (const auto& r : rows)
        if (r.chosen_src == ctx.src[e] && r.chosen_dst == ctx.dst[e])
          marks += (marks.empty() ? "" : ";") + std::to_string(r.node);
      dump << " " << (marks.empty() ? "-" : marks) << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural graph algorithm execution laboratory"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate graph dataset and supervision traces");
  std::string gen_out = "dataset";
  std::uint64_t gen_seed = 7;
  std::string gen_categories = "all";
  int gen_train = 100, gen_val = 5, gen_test = 5, gen_nodes = 20;
  std::string gen_sizes = "20,50,100";
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--categories", gen_categories, "all or comma-separated category names");
  gen->add_option("--train-per-category", gen_train);
  gen->add_option("--val-per-category", gen_val);
  gen->add_option("--test-per-category", gen_test);
  gen->add_option("--train-nodes", gen_nodes);
  gen->add_option("--test-sizes", gen_sizes, "comma-separated test node counts");

  // train
  auto* tr = app.add_subcommand("train", "train an executor on a dataset");
  std::string tr_dataset = "dataset", tr_out = "run", tr_mode = "joint", tr_processor = "mpnn-max";
  int tr_latent = 32, tr_batch = 16, tr_epochs = 500, tr_patience = 10;
  double tr_lr = 0.0005;
  std::uint64_t tr_seed = 7;
  bool tr_resume = false, tr_clip = false, tr_relu = false;
  tr->add_option("--dataset", tr_dataset, "dataset directory");
  tr->add_option("--out", tr_out, "run output directory (checkpoints, log)");
  tr->add_option("--mode", tr_mode, "joint|no-reach|no-algo|curriculum|prim|prim-no-algo");
  tr->add_option("--processor", tr_processor, "mpnn-max|mpnn-sum|mpnn-mean|gat");
  tr->add_option("--latent-dim", tr_latent);
  tr->add_option("--lr", tr_lr);
  tr->add_option("--batch", tr_batch);
  tr->add_option("--max-epochs", tr_epochs);
  tr->add_option("--patience", tr_patience);
  tr->add_option("--seed", tr_seed);
  tr->add_flag("--resume", tr_resume, "resume from the latest checkpoint in --out");
  tr->add_flag("--clip-gradients", tr_clip);
  tr->add_flag("--relu-after-update", tr_relu,
               "apply an extra nonlinearity to the MPNN update output");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on test splits");
  std::string ev_dataset = "dataset", ev_ckpt, ev_out = "eval", ev_sizes = "20,50,100", ev_name;
  int ev_workers = 1;
  ev->add_option("--dataset", ev_dataset);
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--out", ev_out);
  ev->add_option("--sizes", ev_sizes);
  ev->add_option("--workers", ev_workers);
  ev->add_option("--model-name", ev_name, "row label in reports");

  // explain
  auto* ex = app.add_subcommand("explain", "adjacency-mask explanations for reachability");
  std::string ex_dataset = "dataset", ex_ckpt, ex_out = "explain", ex_split = "train", ex_graph;
  int ex_max_nodes = 5, ex_iters = 500, ex_workers = 1;
  double ex_lr = 0.05;
  std::uint64_t ex_seed = 7;
  bool ex_all_nodes = false;
  ex->add_option("--dataset", ex_dataset);
  ex->add_option("--checkpoint", ex_ckpt)->required();
  ex->add_option("--out", ex_out);
  ex->add_option("--split", ex_split, "train, val, or test<SIZE> (e.g. test20)");
  ex->add_option("--max-nodes-per-graph", ex_max_nodes, "sampled chain starts per graph; -1 = all");
  ex->add_option("--seed", ex_seed);
  ex->add_option("--lr", ex_lr);
  ex->add_option("--max-iterations", ex_iters);
  ex->add_option("--graph-id", ex_graph, "explain one instance and dump its masks");
  ex->add_option("--workers", ex_workers);
  ex->add_flag("--loss-all-nodes", ex_all_nodes, "use the full reachability loss during mask training");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed())
      return cmd_generate(gen_out, gen_seed, gen_categories, gen_train, gen_val, gen_test,
                          gen_nodes, gen_sizes);
    if (tr->parsed())
      return cmd_train(tr_dataset, tr_out, tr_mode, tr_processor, tr_latent, tr_lr, tr_batch,
                       tr_epochs, tr_patience, tr_seed, tr_resume, tr_clip, tr_relu);
    if (ev->parsed()) return cmd_eval(ev_dataset, ev_ckpt, ev_out, ev_sizes, ev_workers, ev_name);
    if (ex->parsed())
      return cmd_explain(ex_dataset, ex_ckpt, ex_out, ex_split, ex_max_nodes, ex_seed, ex_lr,
                         ex_iters, ex_all_nodes, ex_graph, ex_workers);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}
