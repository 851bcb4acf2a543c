#include "algoexec/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace algoexec {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Step record access that repeats the fixpoint once a trace is exhausted.
const StepRecord& step_at(const AlgoTrace& trace, int t) {
  const int last = trace.length() - 1;
  return trace.steps[std::min(t, last)];
}

std::vector<bool> bf_step_mask(const AlgoTrace& bf, int t) {
  const StepRecord& rec = step_at(bf, t);
  std::vector<bool> mask(rec.x.size(), false);
  for (int i = 0; i < static_cast<int>(rec.x.size()); ++i)
    mask[i] = rec.y_next[i] < bf.infinity_value && i != bf.source;
  return mask;
}

StepOptions options_for(SupervisionKind kind) {
  StepOptions opts;
  switch (kind) {
    case SupervisionKind::joint_parallel:
      opts.want_reach = opts.want_dist = opts.want_pred = true;
      break;
    case SupervisionKind::bfs_phase:
      opts.want_reach = true;
      break;
    case SupervisionKind::bf_only:
      opts.want_dist = opts.want_pred = true;
      break;
    case SupervisionKind::bf_no_algo:
      opts.want_pred = true;
      break;
    case SupervisionKind::prim:
      opts.want_pred = opts.want_next = true;
      break;
    case SupervisionKind::prim_no_algo:
      opts.want_pred = true;
      break;
  }
  return opts;
}

int masked_argmax(const Tensor& scores, const std::vector<char>& exclude) {
  int best = -1;
  double best_v = 0.0;
  for (int i = 0; i < scores.rows(); ++i) {
    if (exclude[i]) continue;
    const double v = scores.at(i, 0);
    // NaN-safe: a NaN score never displaces a real one.
    if (best == -1 || v > best_v) {
      best = i;
      best_v = v;
    }
  }
  return best;
}

}  // namespace

TaskGroup task_group_for(SupervisionKind kind) {
  switch (kind) {
    case SupervisionKind::joint_parallel:
    case SupervisionKind::bfs_phase:
      return TaskGroup::parallel;
    case SupervisionKind::bf_only: return TaskGroup::bf_only;
    case SupervisionKind::bf_no_algo: return TaskGroup::bf_no_algo;
    case SupervisionKind::prim: return TaskGroup::prim;
    case SupervisionKind::prim_no_algo: return TaskGroup::prim_no_algo;
  }
  throw std::invalid_argument("unknown supervision kind");
}

SupervisedSequence build_parallel_supervision(const AlgoTrace& bfs, const AlgoTrace& bf) {
  if (bfs.algorithm != Algorithm::bfs || bf.algorithm != Algorithm::bellman_ford)
    throw std::invalid_argument("build_parallel_supervision: wrong trace kinds");
  if (bfs.source != bf.source || bfs.num_nodes() != bf.num_nodes())
    throw std::invalid_argument("build_parallel_supervision: traces disagree");
  const int n = bfs.num_nodes();
  const int steps = std::max(bfs.length(), bf.length());

  SupervisedSequence sup;
  sup.kind = SupervisionKind::joint_parallel;
  sup.num_nodes = n;
  sup.num_steps = steps;
  sup.source = bfs.source;
  sup.infinity_value = bf.infinity_value;
  for (int t = 0; t < steps; ++t) {
    const StepRecord& rb = step_at(bfs, t);
    const StepRecord& rf = step_at(bf, t);
    std::vector<double> x(static_cast<std::size_t>(n) * 2);
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i) * 2] = rb.x[i];
      x[static_cast<std::size_t>(i) * 2 + 1] = rf.x[i];
    }
    sup.x.push_back(std::move(x));
    sup.y_reach.push_back(rb.y_next);
    sup.y_dist.push_back(rf.y_next);
    sup.pred_target.push_back(rf.pred);
    sup.pred_mask.push_back(bf_step_mask(bf, t));
    sup.continue_target.push_back(t + 1 < steps ? 1.0 : 0.0);
  }
  return sup;
}

SupervisedSequence build_bfs_phase_supervision(const AlgoTrace& bfs) {
  const int n = bfs.num_nodes();
  SupervisedSequence sup;
  sup.kind = SupervisionKind::bfs_phase;
  sup.num_nodes = n;
  sup.num_steps = bfs.length();
  sup.source = bfs.source;
  for (int t = 0; t < bfs.length(); ++t) {
    const StepRecord& rec = bfs.steps[t];
    std::vector<double> x(static_cast<std::size_t>(n) * 2, 0.0);  // distance input zeroed
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i) * 2] = rec.x[i];
    sup.x.push_back(std::move(x));
    sup.y_reach.push_back(rec.y_next);
    sup.continue_target.push_back(rec.terminate ? 0.0 : 1.0);
  }
  return sup;
}

SupervisedSequence build_bf_only_supervision(const AlgoTrace& bf) {
  const int n = bf.num_nodes();
  SupervisedSequence sup;
  sup.kind = SupervisionKind::bf_only;
  sup.num_nodes = n;
  sup.num_steps = bf.length();
  sup.source = bf.source;
  sup.infinity_value = bf.infinity_value;
  for (int t = 0; t < bf.length(); ++t) {
    const StepRecord& rec = bf.steps[t];
    sup.x.push_back(rec.x);
    sup.y_dist.push_back(rec.y_next);
    sup.pred_target.push_back(rec.pred);
    sup.pred_mask.push_back(bf_step_mask(bf, t));
    sup.continue_target.push_back(rec.terminate ? 0.0 : 1.0);
  }
  return sup;
}

SupervisedSequence build_bf_no_algo_supervision(const AlgoTrace& bf) {
  const int n = bf.num_nodes();
  SupervisedSequence sup;
  sup.kind = SupervisionKind::bf_no_algo;
  sup.num_nodes = n;
  sup.num_steps = bf.length();
  sup.source = bf.source;
  sup.infinity_value = bf.infinity_value;
  const StepRecord& last = bf.steps.back();
  for (int t = 0; t < bf.length(); ++t) {
    sup.x.push_back(bf.steps.front().x);  // inputs stay at the initial encoding
    sup.pred_target.push_back(last.pred);
    std::vector<bool> mask(n, false);
    if (t + 1 == bf.length()) mask = bf_step_mask(bf, t);
    sup.pred_mask.push_back(std::move(mask));
    sup.continue_target.push_back(t + 1 < bf.length() ? 1.0 : 0.0);
  }
  return sup;
}

SupervisedSequence build_prim_supervision(const AlgoTrace& prim) {
  const int n = prim.num_nodes();
  SupervisedSequence sup;
  sup.kind = SupervisionKind::prim;
  sup.num_nodes = n;
  sup.num_steps = prim.length();
  sup.source = prim.source;
  for (int t = 0; t < prim.length(); ++t) {
    const StepRecord& rec = prim.steps[t];
    sup.x.push_back(rec.x);
    sup.pred_target.push_back(rec.pred);
    std::vector<bool> mask(n, false);
    if (rec.next_node >= 0) mask[rec.next_node] = true;  // only the added node is scored
    sup.pred_mask.push_back(std::move(mask));
    std::vector<bool> members(n, false);
    for (int i = 0; i < n; ++i) members[i] = rec.x[i] == 1.0;
    sup.member.push_back(std::move(members));
    sup.next_target.push_back(rec.next_node);
    sup.continue_target.push_back(rec.terminate ? 0.0 : 1.0);
  }
  return sup;
}

SupervisedSequence build_prim_no_algo_supervision(const AlgoTrace& prim) {
  const int n = prim.num_nodes();
  SupervisedSequence sup;
  sup.kind = SupervisionKind::prim_no_algo;
  sup.num_nodes = n;
  sup.num_steps = prim.length();
  sup.source = prim.source;
  const StepRecord& last = prim.steps.back();
  for (int t = 0; t < prim.length(); ++t) {
    sup.x.push_back(prim.steps.front().x);
    sup.pred_target.push_back(last.pred);
    std::vector<bool> mask(n, false);
    if (t + 1 == prim.length()) {
      // every node of the source component except the source itself
      for (int i = 0; i < n; ++i) mask[i] = last.x[i] == 1.0 && i != prim.source;
    }
    sup.pred_mask.push_back(std::move(mask));
    sup.continue_target.push_back(t + 1 < prim.length() ? 1.0 : 0.0);
  }
  return sup;
}

namespace {

Rollout run_rollout(Tape& tape, const ModelBundle& bundle, const GraphContext& ctx,
                    const SupervisedSequence& sup, bool feedback, const Tensor* edge_gate) {
  if (sup.num_nodes != ctx.num_nodes)
    throw std::invalid_argument("rollout: supervision does not match graph");
  if (task_group_for(sup.kind) != bundle.config.task)
    throw std::invalid_argument("rollout: bundle task group does not match supervision");
  const int n = ctx.num_nodes;
  const int k = bundle.config.latent_dim;
  const int d_in = sup.input_dim();
  StepOptions opts = options_for(sup.kind);
  opts.edge_gate = edge_gate;

  Rollout roll;
  Tensor h_prev(n, k, 0.0);
  std::vector<double> x_values = sup.x.at(0);
  std::vector<char> members(n, 0);
  if (sup.kind == SupervisionKind::prim)
    for (int i = 0; i < n; ++i) members[i] = sup.member[0][i] ? 1 : 0;

  for (int t = 0; t < sup.num_steps; ++t) {
    if (!feedback || sup.final_pred_only() || sup.kind == SupervisionKind::prim) {
      // teacher-forced inputs (no-algo variants have constant inputs anyway)
      x_values = sup.x[t];
      if (sup.kind == SupervisionKind::prim)
        for (int i = 0; i < n; ++i) members[i] = sup.member[t][i] ? 1 : 0;
    }
    Tensor x(n, d_in, x_values);
    StepOutput out = forward_step(tape, bundle, ctx, x, h_prev, opts);

    RolloutStep step;
    step.reach_logits = out.reach_logits;
    step.dist = out.dist;
    step.pred_scores = out.pred_scores;
    step.next_scores = out.next_scores;
    step.term_logit = out.term_logit;
    step.z = out.z;
    step.h = out.h;
    step.continue_prob = stable_sigmoid(out.term_logit.scalar());
    if (sup.kind == SupervisionKind::prim) {
      step.member_mask.assign(members.begin(), members.end());
      bool any_out = false;
      for (int i = 0; i < n; ++i) any_out |= !members[i];
      if (any_out) step.chosen_next = masked_argmax(out.next_scores, members);
    }
    h_prev = out.h;

    if (feedback && !sup.final_pred_only() && sup.kind != SupervisionKind::prim) {
      // thresholded reachability, raw regression distance
      for (int i = 0; i < n; ++i) {
        if (sup.kind == SupervisionKind::joint_parallel || sup.kind == SupervisionKind::bfs_phase) {
          x_values[static_cast<std::size_t>(i) * 2] = out.reach_logits.at(i, 0) > 0.0 ? 1.0 : 0.0;
          if (sup.kind == SupervisionKind::joint_parallel)
            x_values[static_cast<std::size_t>(i) * 2 + 1] = out.dist.at(i, 0);
        } else {
          x_values[i] = out.dist.at(i, 0);
        }
      }
    }
    roll.steps.push_back(std::move(step));
  }
  roll.steps_executed = sup.num_steps;
  roll.stop_reason = StopReason::terminated;
  return roll;
}

}  // namespace

Rollout rollout_teacher_forced(Tape& tape, const ModelBundle& bundle, const GraphContext& ctx,
                               const SupervisedSequence& sup, const Tensor* edge_gate) {
  return run_rollout(tape, bundle, ctx, sup, /*feedback=*/false, edge_gate);
}

Rollout rollout_eval_aligned(Tape& tape, const ModelBundle& bundle, const GraphContext& ctx,
                             const SupervisedSequence& sup) {
  return run_rollout(tape, bundle, ctx, sup, /*feedback=*/true, nullptr);
}

Rollout rollout_free(Tape& tape, const ModelBundle& bundle, const GraphContext& ctx, int source,
                     double infinity_value, int max_steps) {
  if (source < 0 || source >= ctx.num_nodes) throw std::invalid_argument("rollout_free: bad source");
  const int n = ctx.num_nodes;
  const int k = bundle.config.latent_dim;
  if (max_steps < 0) max_steps = n;
  const TaskGroup task = bundle.config.task;
  const int d_in = bundle.config.input_dim();

  std::vector<double> x_values(static_cast<std::size_t>(n) * d_in, 0.0);
  switch (task) {
    case TaskGroup::parallel:
      for (int i = 0; i < n; ++i) {
        x_values[static_cast<std::size_t>(i) * 2] = i == source ? 1.0 : 0.0;
        x_values[static_cast<std::size_t>(i) * 2 + 1] = i == source ? 0.0 : infinity_value;
      }
      break;
    case TaskGroup::bf_only:
    case TaskGroup::bf_no_algo:
      for (int i = 0; i < n; ++i) x_values[i] = i == source ? 0.0 : infinity_value;
      break;
    case TaskGroup::prim:
    case TaskGroup::prim_no_algo:
      x_values[source] = 1.0;
      break;
  }

  StepOptions opts;
  opts.want_reach = task == TaskGroup::parallel;
  opts.want_dist = task == TaskGroup::parallel || task == TaskGroup::bf_only;
  opts.want_pred = true;
  opts.want_next = task == TaskGroup::prim;

  Rollout roll;
  Tensor h_prev(n, k, 0.0);
  std::vector<char> members(n, 0);
  members[source] = 1;

  for (int t = 0; t < max_steps; ++t) {
    Tensor x(n, d_in, x_values);
    StepOutput out = forward_step(tape, bundle, ctx, x, h_prev, opts);
    RolloutStep step;
    step.reach_logits = out.reach_logits;
    step.dist = out.dist;
    step.pred_scores = out.pred_scores;
    step.next_scores = out.next_scores;
    step.term_logit = out.term_logit;
    step.z = out.z;
    step.h = out.h;
    step.continue_prob = stable_sigmoid(out.term_logit.scalar());
    h_prev = out.h;

    bool forced_stop = false;
    if (task == TaskGroup::prim) {
      step.member_mask.assign(members.begin(), members.end());
      step.chosen_next = masked_argmax(out.next_scores, members);
      if (step.chosen_next >= 0) {
        members[step.chosen_next] = 1;
        x_values[step.chosen_next] = 1.0;
      } else {
        forced_stop = true;  // every node already added
      }
    } else if (task == TaskGroup::parallel) {
      for (int i = 0; i < n; ++i) {
        x_values[static_cast<std::size_t>(i) * 2] = out.reach_logits.at(i, 0) > 0.0 ? 1.0 : 0.0;
        x_values[static_cast<std::size_t>(i) * 2 + 1] = out.dist.at(i, 0);
      }
    } else if (task == TaskGroup::bf_only) {
      for (int i = 0; i < n; ++i) x_values[i] = out.dist.at(i, 0);
    }

    const double continue_prob = step.continue_prob;
    roll.steps.push_back(std::move(step));
    roll.steps_executed = t + 1;
    if (continue_prob <= 0.5 || forced_stop) {
      roll.stop_reason = StopReason::terminated;
      return roll;
    }
  }
  roll.stop_reason = StopReason::step_cap;
  return roll;
}

}  // namespace algoexec
