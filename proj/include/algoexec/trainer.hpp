#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "algoexec/dataset.hpp"
#include "algoexec/graph.hpp"
#include "algoexec/model.hpp"
#include "algoexec/rollout.hpp"
#include "algoexec/tensor.hpp"

namespace algoexec {

// Raised when a training loss goes non-finite (a real failure mode for the
// sum aggregator); the CLI maps it to its own exit code.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TrainMode { joint, no_reach, bf_no_algo, curriculum, prim, prim_no_algo };

const char* train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& name);

// Supervision used by a mode; curriculum phase 1 is the BFS-only view.
SupervisionKind supervision_kind_for(TrainMode mode, int phase = 2);
TaskGroup task_group_for_mode(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::joint;
  ProcessorKind processor = ProcessorKind::mpnn_max;
  int latent_dim = 32;
  double lr = 0.0005;
  int batch_graphs = 16;
  int max_epochs = 500;
  int patience = 10;
  std::uint64_t seed = 0;
  bool clip_gradients = false;  // off by default, not acceptance-relevant
  double clip_norm = 5.0;
  bool relu_after_update = false;  // MPNN update nonlinearity (flagged decision)
  int workers = 1;
  std::string checkpoint_dir;  // empty: keep everything in memory
  bool resume = false;
};

struct LossBreakdown {
  double reach = 0, dist = 0, pred = 0, next = 0, term = 0;
  double total() const { return reach + dist + pred + next + term; }
  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown& operator/=(double d);
};

// Sum of the step losses averaged over steps: BCE(reach) + MSE(distance) +
// CE(predecessor) + CE(next node) + BCE(termination), with terms selected by
// the supervision kind. Masked-out nodes contribute exactly zero gradient.
Tensor rollout_loss(Tape& tape, const GraphContext& ctx, const SupervisedSequence& sup,
                    const Rollout& roll, LossBreakdown* breakdown = nullptr);

struct EpochRecord {
  int epoch = 0;
  int phase = 2;
  LossBreakdown train_loss;
  double val_metric = 0;
  bool improved = false;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_metric = -1;
  int phase1_end_epoch = -1;  // curriculum: last epoch of phase 1
};

struct TrainResult {
  ModelBundle bundle;  // best-validation checkpoint
  TrainLog log;
};

struct ItemSet {
  std::vector<GraphContext> ctx;
  std::vector<SupervisedSequence> sup;
};

ItemSet build_items(SupervisionKind kind, const std::vector<Graph>& graphs, const TraceSet& traces);

// Mode-specific early-stopping metric over the validation items (aligned
// rollouts): last-step predecessor accuracy for the parallel modes, last-step
// reachability in curriculum phase 1, mean-step next-node accuracy for Prim.
double validation_metric(TrainMode mode, int phase, const ModelBundle& bundle, const ItemSet& val);

TrainResult train(const TrainConfig& config, const std::vector<Graph>& train_graphs,
                  const std::vector<Graph>& val_graphs, const TraceSet& traces);

}  // namespace algoexec
