#pragma once

#include <vector>

#include "algoexec/model.hpp"
#include "algoexec/trace.hpp"

namespace algoexec {

// Aligned supervision for one training/evaluation item. For the parallel
// group, BFS and Bellman-Ford traces are extended to a common length by
// repeating their fixpoint states (both update rules are idempotent there),
// and termination targets continue until the joint fixpoint.
enum class SupervisionKind { joint_parallel, bfs_phase, bf_only, bf_no_algo, prim, prim_no_algo };

struct SupervisedSequence {
  SupervisionKind kind = SupervisionKind::joint_parallel;
  int num_nodes = 0;
  int num_steps = 0;
  int source = 0;
  double infinity_value = 0.0;

  std::vector<std::vector<double>> x;        // [T][n * d_in] teacher-forced inputs
  std::vector<std::vector<double>> y_reach;  // [T][n]
  std::vector<std::vector<double>> y_dist;   // [T][n]
  std::vector<std::vector<int>> pred_target; // [T][n]
  std::vector<std::vector<bool>> pred_mask;  // [T][n] nodes carrying a predecessor loss
  std::vector<std::vector<bool>> member;     // [T][n] prim: ground-truth MST membership x^(t)
  std::vector<int> next_target;              // [T] prim: node added at step t, -1 none
  std::vector<double> continue_target;       // [T] 1 = continue, 0 = terminate

  int input_dim() const { return kind == SupervisionKind::joint_parallel || kind == SupervisionKind::bfs_phase ? 2 : 1; }
  bool has_reach() const { return kind == SupervisionKind::joint_parallel || kind == SupervisionKind::bfs_phase; }
  bool has_dist() const { return kind == SupervisionKind::joint_parallel || kind == SupervisionKind::bf_only; }
  bool has_pred() const { return kind != SupervisionKind::bfs_phase; }
  bool final_pred_only() const {
    return kind == SupervisionKind::bf_no_algo || kind == SupervisionKind::prim_no_algo;
  }
  bool is_prim() const { return kind == SupervisionKind::prim || kind == SupervisionKind::prim_no_algo; }
};

SupervisedSequence build_parallel_supervision(const AlgoTrace& bfs, const AlgoTrace& bf);
SupervisedSequence build_bfs_phase_supervision(const AlgoTrace& bfs);
SupervisedSequence build_bf_only_supervision(const AlgoTrace& bf);
SupervisedSequence build_bf_no_algo_supervision(const AlgoTrace& bf);
SupervisedSequence build_prim_supervision(const AlgoTrace& prim);
SupervisedSequence build_prim_no_algo_supervision(const AlgoTrace& prim);

// Task group a supervision kind runs on.
TaskGroup task_group_for(SupervisionKind kind);

enum class StopReason { terminated, step_cap };

struct RolloutStep {
  Tensor reach_logits;  // [n x 1]
  Tensor dist;          // [n x 1]
  Tensor pred_scores;   // [E x 1]
  Tensor next_scores;   // [n x 1] raw scores
  Tensor term_logit;    // [1 x 1] continue logit
  Tensor z, h;
  int chosen_next = -1;           // prim: argmax next node under the step's mask
  double continue_prob = 0.5;     // sigmoid(term_logit)
  std::vector<char> member_mask;  // prim: membership x^(t) driving this step
};

struct Rollout {
  std::vector<RolloutStep> steps;
  int steps_executed = 0;
  StopReason stop_reason = StopReason::terminated;
};

// Ground-truth inputs at every step; gradients flow through all heads.
Rollout rollout_teacher_forced(Tape& tape, const ModelBundle& bundle, const GraphContext& ctx,
                               const SupervisedSequence& sup, const Tensor* edge_gate = nullptr);

// Own predictions fed back, but executed for exactly the ground-truth number
// of steps so per-step metrics align index-by-index with the trace. For the
// sequential task, membership stays teacher-forced so next-node choices are
// scored against the algorithm's own ordering.
Rollout rollout_eval_aligned(Tape& tape, const ModelBundle& bundle, const GraphContext& ctx,
                             const SupervisedSequence& sup);

// Fully free-running execution from the task's initial state; stops when the
// continue probability drops to 0.5 or below, or after max_steps (default
// |V|).
Rollout rollout_free(Tape& tape, const ModelBundle& bundle, const GraphContext& ctx, int source,
                     double infinity_value, int max_steps = -1);

}  // namespace algoexec
