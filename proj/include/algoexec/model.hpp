#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "algoexec/graph.hpp"
#include "algoexec/tensor.hpp"

namespace algoexec {

enum class ProcessorKind { mpnn_max, mpnn_sum, mpnn_mean, gat };

const char* processor_name(ProcessorKind p);
ProcessorKind processor_from_name(const std::string& name);

// Which task group a bundle serves. The parallel group executes reachability
// and shortest paths simultaneously (input [reach bit || distance]); the
// no-algo variants supervise only the final predecessors.
enum class TaskGroup { parallel, bf_only, bf_no_algo, prim, prim_no_algo };

const char* task_group_name(TaskGroup t);
TaskGroup task_group_from_name(const std::string& name);

struct ModelConfig {
  ProcessorKind processor = ProcessorKind::mpnn_max;
  int latent_dim = 32;
  TaskGroup task = TaskGroup::parallel;
  std::uint64_t seed = 0;
  // The attention rule carries an explicit ReLU; the MPNN update does not,
  // and adding one measurably hurts distance precision and generalization
  // (the predecessor scorer reads h only). Off by default, flag to restore.
  bool relu_after_update = false;
  bool bias_in_encoder = false;
  bool bias_in_decoders = false;
  bool bias_in_processor = true;
  bool bias_in_scorers = true;

  int input_dim() const { return task == TaskGroup::parallel ? 2 : 1; }
  bool has_reach_head() const { return task == TaskGroup::parallel; }
  bool has_dist_head() const { return task == TaskGroup::parallel || task == TaskGroup::bf_only; }
  bool has_member_head() const { return task == TaskGroup::prim; }
  bool has_next_scorer() const { return task == TaskGroup::prim; }
};

// Graph in the form the processor consumes: flat directed edge arrays with
// self-loops, the edge-weight feature column, and a (src,dst) -> record map.
struct GraphContext {
  std::string graph_id;
  int num_nodes = 0;
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<bool> non_self;  // proper-edge mask: predecessor candidates
  Tensor edge_feat;            // [E x 1]
  std::vector<std::vector<int>> in_edges;  // per node, indices of incoming records

  int num_edges() const { return static_cast<int>(src.size()); }
  int edge_index(int s, int d) const;  // -1 when absent

  static GraphContext build(const Graph& g);

 private:
  std::vector<std::pair<std::int64_t, int>> lookup_;  // sorted (key, edge)
};

enum class DecodeHead { reachability, distance, membership };

// All learnable state of one executor. Parameters are requires_grad tensors;
// only the tensors the configured task needs are defined.
struct ModelBundle {
  ModelConfig config;

  Tensor enc_w, enc_b;          // [(d_in + K) x K]
  Tensor msg_w, msg_b;          // MPNN message net, [(2K + 1) x K]
  Tensor upd_w, upd_b;          // MPNN update net, [2K x K]
  Tensor gat_w;                 // GAT projection, [K x K]
  Tensor gat_edge_w;            // edge feature injection, [1 x K]
  Tensor gat_att_w, gat_att_b;  // attention scorer, [3K x 1]
  Tensor dec_reach_w, dec_reach_b;    // [2K x 1]
  Tensor dec_dist_w, dec_dist_b;      // [2K x 1]
  Tensor dec_member_w, dec_member_b;  // [2K x 1]
  Tensor term_w, term_b;              // [2K x 1]
  Tensor pred_w, pred_b;              // [(2K + 1) x 1]
  Tensor next_w, next_b;              // [2K x 1]

  static ModelBundle init(const ModelConfig& config);

  std::vector<Tensor> params() const;
  std::vector<std::pair<std::string, Tensor>> named_params() const;
  ModelBundle clone(bool requires_grad = true) const;
  void zero_grads();
  // Copies values from another bundle with identical architecture.
  void load_values(const ModelBundle& other);
};

struct StepOptions {
  bool want_reach = false;
  bool want_dist = false;
  bool want_member = false;
  bool want_pred = false;
  bool want_next = false;
  bool want_term = true;
  // Soft per-edge gate (raw mask, sigmoid applied before scaling messages);
  // used by the explainer, MPNN processors only.
  const Tensor* edge_gate = nullptr;
};

struct StepOutput {
  Tensor z;             // [n x K] encoded inputs
  Tensor h;             // [n x K] latent state
  Tensor reach_logits;  // [n x 1]
  Tensor dist;          // [n x 1]
  Tensor member_logits; // [n x 1]
  Tensor pred_scores;   // [E x 1], score of edge (j -> i) as "j precedes i"
  Tensor next_scores;   // [n x 1]
  Tensor term_logit;    // [1 x 1], continue logit
};

Tensor encode(Tape& tape, const ModelBundle& b, const Tensor& x, const Tensor& h_prev);
Tensor process(Tape& tape, const ModelBundle& b, const GraphContext& ctx, const Tensor& z,
               const Tensor* edge_gate = nullptr);
Tensor decode(Tape& tape, const ModelBundle& b, DecodeHead head, const Tensor& z, const Tensor& h);
Tensor terminate_logit(Tape& tape, const ModelBundle& b, const Tensor& h);
Tensor edge_pred_scores(Tape& tape, const ModelBundle& b, const GraphContext& ctx, const Tensor& h);

// Distribution over the candidate in-edges of `node` (rows align with
// `candidate_edges`).
Tensor score_predecessors(Tape& tape, const ModelBundle& b, const GraphContext& ctx,
                          const Tensor& h, int node, const std::vector<int>& candidate_edges);
// Distribution over masked-in nodes.
Tensor score_next_node(Tape& tape, const ModelBundle& b, const Tensor& z, const Tensor& h,
                       const std::vector<bool>& mask);

StepOutput forward_step(Tape& tape, const ModelBundle& b, const GraphContext& ctx, const Tensor& x,
                        const Tensor& h_prev, const StepOptions& opts);

}  // namespace algoexec
