#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "algoexec/dataset.hpp"
#include "algoexec/graph.hpp"
#include "algoexec/graph_gen.hpp"
#include "algoexec/model.hpp"
#include "algoexec/tensor.hpp"

namespace algoexec {

// Line-delimited text formats: one record per graph / per (graph, algorithm,
// source), weights and distances at full precision (%.17g round-trips f64).
void write_graphs(const std::string& path, const std::vector<Graph>& graphs);
std::vector<Graph> read_graphs(const std::string& path);

void write_traces(const std::string& path, const std::vector<Graph>& graphs,
                  const TraceSet& traces);
void read_traces_into(const std::string& path, TraceSet& traces);

void write_manifest(const std::string& path, const GenConfig& config, std::uint64_t seed,
                    const DatasetSplit& split);

struct LoadedDataset {
  DatasetSplit split;
  TraceSet traces;
  std::uint64_t seed = 0;
};

void save_dataset(const std::string& dir, const GenConfig& config, std::uint64_t seed,
                  const DatasetSplit& split, const TraceSet& traces);
LoadedDataset load_dataset(const std::string& dir);

// Model configuration as a key-value text file.
void write_model_config(const std::string& path, const ModelConfig& config);
ModelConfig read_model_config(const std::string& path);

// Binary checkpoint: named parameter tensors (current and best), optimizer
// state, and the training cursor, sufficient to resume bit-identically.
struct Checkpoint {
  ModelConfig model_config;
  std::vector<std::pair<std::string, Tensor>> current;
  std::vector<std::pair<std::string, Tensor>> best;
  AdamState adam;
  int epoch = 0;
  int phase = 1;
  int phase_start_epoch = 0;
  int epochs_since_improve = 0;
  int best_epoch = -1;
  double best_metric = -1.0;
  std::array<std::uint64_t, 4> shuffle_state{};
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Restores parameter values into a freshly initialized bundle.
ModelBundle bundle_from_params(const ModelConfig& config,
                               const std::vector<std::pair<std::string, Tensor>>& params);

}  // namespace algoexec
