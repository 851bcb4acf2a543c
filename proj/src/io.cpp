#include "algoexec/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace algoexec {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

}  // namespace

void write_graphs(const std::string& path, const std::vector<Graph>& graphs) {
  std::ofstream out = open_out(path);
  for (const Graph& g : graphs) {
    out << "graph " << g.graph_id << " " << category_name(g.category) << " " << g.num_nodes;
    // store undirected pairs once; the canonical form is rebuilt on load
    std::vector<const Edge*> pairs;
    for (const auto& e : g.edges)
      if (e.src < e.dst) pairs.push_back(&e);
    out << " " << pairs.size();
    for (const Edge* e : pairs)
      out << " " << e->src << " " << e->dst << " " << fmt_double(e->weight);
    out << "\n";
  }
}

std::vector<Graph> read_graphs(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Graph> graphs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag, id, category;
    int num_nodes = 0;
    std::size_t num_pairs = 0;
    ss >> tag >> id >> category >> num_nodes >> num_pairs;
    if (tag != "graph" || !ss) throw std::runtime_error(path + ": malformed graph record");
    std::vector<Edge> pairs(num_pairs);
    for (auto& e : pairs) ss >> e.src >> e.dst >> e.weight;
    if (!ss) throw std::runtime_error(path + ": truncated graph record " + id);
    graphs.push_back(make_graph(num_nodes, category_from_name(category), pairs, id));
  }
  return graphs;
}

namespace {

void write_trace_line(std::ofstream& out, const std::string& graph_id, const AlgoTrace& trace) {
  const int n = trace.num_nodes();
  out << "trace " << graph_id << " " << algorithm_name(trace.algorithm) << " " << trace.source
      << " " << fmt_double(trace.infinity_value) << " " << trace.length() << " " << n;
  for (const StepRecord& step : trace.steps) {
    for (double v : step.x) out << " " << fmt_double(v);
    for (double v : step.y_next) out << " " << fmt_double(v);
    if (trace.algorithm != Algorithm::bfs)
      for (int p : step.pred) out << " " << p;
    if (trace.algorithm == Algorithm::prim) out << " " << step.next_node;
    out << " " << (step.terminate ? 1 : 0);
  }
  out << "\n";
}

AlgoTrace read_trace_line(std::istringstream& ss, const std::string& path, std::string& graph_id) {
  std::string algo;
  int steps = 0, n = 0;
  AlgoTrace trace;
  ss >> graph_id >> algo >> trace.source >> trace.infinity_value >> steps >> n;
  if (!ss) throw std::runtime_error(path + ": malformed trace record");
  trace.algorithm = algorithm_from_name(algo);
  trace.steps.resize(steps);
  for (StepRecord& step : trace.steps) {
    step.x.resize(n);
    step.y_next.resize(n);
    for (double& v : step.x) ss >> v;
    for (double& v : step.y_next) ss >> v;
    if (trace.algorithm != Algorithm::bfs) {
      step.pred.resize(n);
      for (int& p : step.pred) ss >> p;
    }
    if (trace.algorithm == Algorithm::prim) ss >> step.next_node;
    int term = 0;
    ss >> term;
    step.terminate = term != 0;
  }
  if (!ss) throw std::runtime_error(path + ": truncated trace record for " + graph_id);
  return trace;
}

}  // namespace

void write_traces(const std::string& path, const std::vector<Graph>& graphs,
                  const TraceSet& traces) {
  std::ofstream out = open_out(path);
  for (const Graph& g : graphs) {
    auto it = traces.find(g.graph_id);
    if (it == traces.end()) throw std::runtime_error("missing traces for " + g.graph_id);
    write_trace_line(out, g.graph_id, it->second.bfs);
    write_trace_line(out, g.graph_id, it->second.bellman_ford);
    write_trace_line(out, g.graph_id, it->second.prim);
  }
}

void read_traces_into(const std::string& path, TraceSet& traces) {
  std::ifstream in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != "trace") throw std::runtime_error(path + ": malformed trace line");
    std::string graph_id;
    AlgoTrace trace = read_trace_line(ss, path, graph_id);
    GraphTraces& slot = traces[graph_id];
    switch (trace.algorithm) {
      case Algorithm::bfs: slot.bfs = std::move(trace); break;
      case Algorithm::bellman_ford: slot.bellman_ford = std::move(trace); break;
      case Algorithm::prim: slot.prim = std::move(trace); break;
    }
  }
}

void write_manifest(const std::string& path, const GenConfig& config, std::uint64_t seed,
                    const DatasetSplit& split) {
  nlohmann::json j;
  j["seed"] = seed;
  j["config"]["train_per_category"] = config.train_per_category;
  j["config"]["val_per_category"] = config.val_per_category;
  j["config"]["test_per_category"] = config.test_per_category;
  j["config"]["train_nodes"] = config.train_nodes;
  j["config"]["test_sizes"] = config.test_sizes;
  std::vector<std::string> cats;
  for (Category c : config.categories) cats.push_back(category_name(c));
  j["config"]["categories"] = cats;
  j["counts"]["train"] = split.train.size();
  j["counts"]["val"] = split.val.size();
  for (const auto& [size, graphs] : split.test)
    j["counts"]["test"][std::to_string(size)] = graphs.size();
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

void save_dataset(const std::string& dir, const GenConfig& config, std::uint64_t seed,
                  const DatasetSplit& split, const TraceSet& traces) {
  std::filesystem::create_directories(dir);
  auto p = [&dir](const std::string& name) { return dir + "/" + name; };
  write_graphs(p("graphs_train.txt"), split.train);
  write_graphs(p("graphs_val.txt"), split.val);
  write_traces(p("traces_train.txt"), split.train, traces);
  write_traces(p("traces_val.txt"), split.val, traces);
  for (const auto& [size, graphs] : split.test) {
    write_graphs(p("graphs_test_" + std::to_string(size) + ".txt"), graphs);
    write_traces(p("traces_test_" + std::to_string(size) + ".txt"), graphs, traces);
  }
  write_manifest(p("manifest.json"), config, seed, split);
}

LoadedDataset load_dataset(const std::string& dir) {
  auto p = [&dir](const std::string& name) { return dir + "/" + name; };
  std::ifstream mf = open_in(p("manifest.json"));
  nlohmann::json j;
  mf >> j;
  LoadedDataset ds;
  ds.seed = j["seed"].get<std::uint64_t>();
  ds.split.rng_seed = ds.seed;
  ds.split.train = read_graphs(p("graphs_train.txt"));
  ds.split.val = read_graphs(p("graphs_val.txt"));
  read_traces_into(p("traces_train.txt"), ds.traces);
  read_traces_into(p("traces_val.txt"), ds.traces);
  for (const auto& [size_str, count] : j["counts"]["test"].items()) {
    const int size = std::stoi(size_str);
    ds.split.test[size] = read_graphs(p("graphs_test_" + size_str + ".txt"));
    read_traces_into(p("traces_test_" + size_str + ".txt"), ds.traces);
  }
  return ds;
}

void write_model_config(const std::string& path, const ModelConfig& config) {
  std::ofstream out = open_out(path);
  out << "processor=" << processor_name(config.processor) << "\n";
  out << "latent_dim=" << config.latent_dim << "\n";
  out << "task=" << task_group_name(config.task) << "\n";
  out << "seed=" << config.seed << "\n";
  out << "relu_after_update=" << (config.relu_after_update ? 1 : 0) << "\n";
  out << "bias_in_encoder=" << (config.bias_in_encoder ? 1 : 0) << "\n";
  out << "bias_in_decoders=" << (config.bias_in_decoders ? 1 : 0) << "\n";
  out << "bias_in_processor=" << (config.bias_in_processor ? 1 : 0) << "\n";
  out << "bias_in_scorers=" << (config.bias_in_scorers ? 1 : 0) << "\n";
}

ModelConfig read_model_config(const std::string& path) {
  std::ifstream in = open_in(path);
  ModelConfig config;
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "processor") config.processor = processor_from_name(value);
    else if (key == "latent_dim") config.latent_dim = std::stoi(value);
    else if (key == "task") config.task = task_group_from_name(value);
    else if (key == "seed") config.seed = std::stoull(value);
    else if (key == "relu_after_update") config.relu_after_update = value == "1";
    else if (key == "bias_in_encoder") config.bias_in_encoder = value == "1";
    else if (key == "bias_in_decoders") config.bias_in_decoders = value == "1";
    else if (key == "bias_in_processor") config.bias_in_processor = value == "1";
    else if (key == "bias_in_scorers") config.bias_in_scorers = value == "1";
  }
  return config;
}

namespace {

constexpr char kCheckpointMagic[] = "AXEC-CKPT-1";

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_string(std::ofstream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

double read_f64(std::ifstream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

std::string read_string(std::ifstream& in) {
  const std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  return s;
}

void write_params(std::ofstream& out, const std::vector<std::pair<std::string, Tensor>>& params) {
  write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    write_string(out, name);
    write_u32(out, static_cast<std::uint32_t>(t.rows()));
    write_u32(out, static_cast<std::uint32_t>(t.cols()));
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
}

std::vector<std::pair<std::string, Tensor>> read_params(std::ifstream& in) {
  const std::uint32_t count = read_u32(in);
  std::vector<std::pair<std::string, Tensor>> params;
  params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string(in);
    const int rows = static_cast<int>(read_u32(in));
    const int cols = static_cast<int>(read_u32(in));
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    params.push_back({std::move(name), Tensor(rows, cols, std::move(data))});
  }
  return params;
}

std::string config_text(const ModelConfig& config) {
  std::ostringstream out;
  out << processor_name(config.processor) << " " << config.latent_dim << " "
      << task_group_name(config.task) << " " << config.seed << " " << config.relu_after_update
      << " " << config.bias_in_encoder << " " << config.bias_in_decoders << " "
      << config.bias_in_processor << " " << config.bias_in_scorers;
  return out.str();
}

ModelConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string processor, task;
  ModelConfig config;
  in >> processor >> config.latent_dim >> task >> config.seed >> config.relu_after_update >>
      config.bias_in_encoder >> config.bias_in_decoders >> config.bias_in_processor >>
      config.bias_in_scorers;
  config.processor = processor_from_name(processor);
  config.task = task_group_from_name(task);
  return config;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out = open_out(path + ".tmp", std::ios::binary);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_string(out, config_text(ckpt.model_config));
  write_params(out, ckpt.current);
  write_params(out, ckpt.best);
  write_u64(out, static_cast<std::uint64_t>(ckpt.adam.step_count));
  write_u32(out, static_cast<std::uint32_t>(ckpt.adam.m.size()));
  for (std::size_t i = 0; i < ckpt.adam.m.size(); ++i) {
    write_u32(out, static_cast<std::uint32_t>(ckpt.adam.m[i].size()));
    out.write(reinterpret_cast<const char*>(ckpt.adam.m[i].data()),
              static_cast<std::streamsize>(ckpt.adam.m[i].size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(ckpt.adam.v[i].data()),
              static_cast<std::streamsize>(ckpt.adam.v[i].size() * sizeof(double)));
  }
  write_u32(out, static_cast<std::uint32_t>(ckpt.epoch));
  write_u32(out, static_cast<std::uint32_t>(ckpt.phase));
  write_u32(out, static_cast<std::uint32_t>(ckpt.phase_start_epoch));
  write_u32(out, static_cast<std::uint32_t>(ckpt.epochs_since_improve));
  write_u32(out, static_cast<std::uint32_t>(ckpt.best_epoch + 1));
  write_f64(out, ckpt.best_metric);
  for (std::uint64_t s : ckpt.shuffle_state) write_u64(out, s);
  out.close();
  std::filesystem::rename(path + ".tmp", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  char magic[sizeof(kCheckpointMagic)] = {};
  in.read(magic, sizeof(magic));
  if (std::string(magic) != kCheckpointMagic) throw std::runtime_error(path + ": not a checkpoint");
  Checkpoint ckpt;
  ckpt.model_config = config_from_text(read_string(in));
  ckpt.current = read_params(in);
  ckpt.best = read_params(in);
  ckpt.adam.step_count = static_cast<long>(read_u64(in));
  const std::uint32_t nparams = read_u32(in);
  ckpt.adam.m.resize(nparams);
  ckpt.adam.v.resize(nparams);
  for (std::uint32_t i = 0; i < nparams; ++i) {
    const std::uint32_t len = read_u32(in);
    ckpt.adam.m[i].resize(len);
    ckpt.adam.v[i].resize(len);
    in.read(reinterpret_cast<char*>(ckpt.adam.m[i].data()),
            static_cast<std::streamsize>(len * sizeof(double)));
    in.read(reinterpret_cast<char*>(ckpt.adam.v[i].data()),
            static_cast<std::streamsize>(len * sizeof(double)));
  }
  ckpt.epoch = static_cast<int>(read_u32(in));
  ckpt.phase = static_cast<int>(read_u32(in));
  ckpt.phase_start_epoch = static_cast<int>(read_u32(in));
  ckpt.epochs_since_improve = static_cast<int>(read_u32(in));
  ckpt.best_epoch = static_cast<int>(read_u32(in)) - 1;
  ckpt.best_metric = read_f64(in);
  for (auto& s : ckpt.shuffle_state) s = read_u64(in);
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  return ckpt;
}

ModelBundle bundle_from_params(const ModelConfig& config,
                               const std::vector<std::pair<std::string, Tensor>>& params) {
  ModelBundle bundle = ModelBundle::init(config);
  auto mine = bundle.named_params();
  if (mine.size() != params.size())
    throw std::runtime_error("checkpoint does not match model architecture");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].first != params[i].first || mine[i].second.size() != params[i].second.size())
      throw std::runtime_error("checkpoint parameter mismatch at " + mine[i].first);
    mine[i].second.values() = params[i].second.values();
  }
  return bundle;
}

}  // namespace algoexec
