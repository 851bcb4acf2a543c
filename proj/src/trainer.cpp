#include "algoexec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "algoexec/io.hpp"
#include "algoexec/metrics.hpp"
#include "algoexec/rng.hpp"

namespace algoexec {

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::joint: return "joint";
    case TrainMode::no_reach: return "no-reach";
    case TrainMode::bf_no_algo: return "no-algo";
    case TrainMode::curriculum: return "curriculum";
    case TrainMode::prim: return "prim";
    case TrainMode::prim_no_algo: return "prim-no-algo";
  }
  return "unknown";
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "joint") return TrainMode::joint;
  if (name == "no-reach") return TrainMode::no_reach;
  if (name == "no-algo") return TrainMode::bf_no_algo;
  if (name == "curriculum") return TrainMode::curriculum;
  if (name == "prim") return TrainMode::prim;
  if (name == "prim-no-algo") return TrainMode::prim_no_algo;
  throw std::invalid_argument("unknown training mode: " + name);
}

SupervisionKind supervision_kind_for(TrainMode mode, int phase) {
  switch (mode) {
    case TrainMode::joint: return SupervisionKind::joint_parallel;
    case TrainMode::no_reach: return SupervisionKind::bf_only;
    case TrainMode::bf_no_algo: return SupervisionKind::bf_no_algo;
    case TrainMode::curriculum:
      return phase == 1 ? SupervisionKind::bfs_phase : SupervisionKind::joint_parallel;
    case TrainMode::prim: return SupervisionKind::prim;
    case TrainMode::prim_no_algo: return SupervisionKind::prim_no_algo;
  }
  throw std::invalid_argument("unknown mode");
}

TaskGroup task_group_for_mode(TrainMode mode) {
  return task_group_for(supervision_kind_for(mode, 2));
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  reach += o.reach;
  dist += o.dist;
  pred += o.pred;
  next += o.next;
  term += o.term;
  return *this;
}

LossBreakdown& LossBreakdown::operator/=(double d) {
  reach /= d;
  dist /= d;
  pred /= d;
  next /= d;
  term /= d;
  return *this;
}

Tensor rollout_loss(Tape& tape, const GraphContext& ctx, const SupervisedSequence& sup,
                    const Rollout& roll, LossBreakdown* breakdown) {
  const int n = sup.num_nodes;
  const int steps = sup.num_steps;
  LossBreakdown bd;
  Tensor total;
  auto accumulate = [&](Tensor term_tensor, double* slot) {
    *slot += term_tensor.scalar();
    total = total.defined() ? tape.add(total, term_tensor) : term_tensor;
  };

  for (int t = 0; t < steps; ++t) {
    const RolloutStep& step = roll.steps[t];
    if (sup.has_reach()) {
      Tensor target(n, 1, sup.y_reach[t]);
      accumulate(tape.bce_with_logits(step.reach_logits, target), &bd.reach);
    }
    if (sup.has_dist()) {
      Tensor target(n, 1, sup.y_dist[t]);
      accumulate(tape.mse(step.dist, target), &bd.dist);
    }
    if (sup.has_pred()) {
      std::vector<bool> include(ctx.non_self);
      if (sup.kind == SupervisionKind::prim) {
        for (int e = 0; e < ctx.num_edges(); ++e)
          if (include[e] && !sup.member[t][ctx.src[e]]) include[e] = false;
      }
      std::vector<int> target_row(n, -1);
      std::vector<bool> active(n, false);
      bool any = false;
      for (int i = 0; i < n; ++i) {
        if (!sup.pred_mask[t][i]) continue;
        const int e = ctx.edge_index(sup.pred_target[t][i], i);
        if (e < 0) throw std::invalid_argument("rollout_loss: predecessor edge missing");
        target_row[i] = e;
        active[i] = true;
        any = true;
      }
      if (any)
        accumulate(
            tape.grouped_masked_ce(step.pred_scores, ctx.dst, n, include, target_row, active),
            &bd.pred);
    }
    if (sup.kind == SupervisionKind::prim && sup.next_target[t] >= 0) {
      std::vector<bool> mask(n);
      for (int i = 0; i < n; ++i) mask[i] = !sup.member[t][i];
      accumulate(tape.masked_ce(step.next_scores, mask, sup.next_target[t]), &bd.next);
    }
    Tensor term_target(1, 1, std::vector<double>{sup.continue_target[t]});
    accumulate(tape.bce_with_logits(step.term_logit, term_target), &bd.term);
  }
  total = tape.scale(total, 1.0 / steps);
  bd /= static_cast<double>(steps);
  if (breakdown) *breakdown = bd;
  return total;
}

ItemSet build_items(SupervisionKind kind, const std::vector<Graph>& graphs,
                    const TraceSet& traces) {
  ItemSet items;
  items.ctx.reserve(graphs.size());
  items.sup.reserve(graphs.size());
  for (const Graph& g : graphs) {
    auto it = traces.find(g.graph_id);
    if (it == traces.end()) throw std::invalid_argument("missing traces for " + g.graph_id);
    items.ctx.push_back(GraphContext::build(g));
    items.sup.push_back(supervision_for(kind, it->second));
  }
  return items;
}

double validation_metric(TrainMode mode, int phase, const ModelBundle& bundle, const ItemSet& val) {
  double sum = 0;
  int count = 0;
  for (std::size_t i = 0; i < val.ctx.size(); ++i) {
    InstanceMetrics m = evaluate_instance(bundle, val.ctx[i], val.sup[i]);
    double v = 0;
    if (mode == TrainMode::curriculum && phase == 1) {
      v = m.last_step_reach();
    } else if (mode == TrainMode::prim) {
      v = m.next_node_acc();
    } else {
      v = m.last_step_pred();
    }
    if (std::isnan(v)) continue;
    sum += v;
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

namespace {

void merge_grads(std::vector<Tensor>& master, const std::vector<Tensor>& worker) {
  for (std::size_t k = 0; k < master.size(); ++k) {
    auto& dst = master[k].grads();
    const auto& src = worker[k].grads();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

void clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
  double sq = 0;
  for (auto& p : params)
    for (double g : p.grads()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0) return;
  const double scale = max_norm / norm;
  for (auto& p : params)
    for (double& g : p.grads()) g *= scale;
}

struct PhaseOutcome {
  ModelBundle best;
  double best_metric = -1;
  int best_epoch = -1;
  int last_epoch = 0;
};

void append_log_line(const std::string& dir, const EpochRecord& rec) {
  if (dir.empty()) return;
  std::ofstream out(dir + "/train_log.txt", std::ios::app);
  out << "epoch=" << rec.epoch << " phase=" << rec.phase << " loss=" << rec.train_loss.total()
      << " reach=" << rec.train_loss.reach << " dist=" << rec.train_loss.dist
      << " pred=" << rec.train_loss.pred << " next=" << rec.train_loss.next
      << " term=" << rec.train_loss.term << " val=" << rec.val_metric
      << " improved=" << (rec.improved ? 1 : 0) << "\n";
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<Graph>& train_graphs,
                  const std::vector<Graph>& val_graphs, const TraceSet& traces) {
  if (train_graphs.empty()) throw std::invalid_argument("train: empty dataset");
  if (config.patience < 1 || config.batch_graphs < 1)
    throw std::invalid_argument("train: patience and batch_graphs must be positive");

  ModelConfig model_config;
  model_config.processor = config.processor;
  model_config.latent_dim = config.latent_dim;
  model_config.task = task_group_for_mode(config.mode);
  model_config.seed = config.seed;
  model_config.relu_after_update = config.relu_after_update;

  const bool curriculum = config.mode == TrainMode::curriculum;
  const int first_phase = curriculum ? 1 : 2;

  ModelBundle bundle = ModelBundle::init(model_config);
  std::vector<Tensor> master_params = bundle.params();
  AdamConfig adam_config;
  adam_config.lr = config.lr;
  AdamState adam;
  adam_init(adam, master_params);

  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  TrainLog log;
  ModelBundle best = bundle.clone();
  double best_metric = -1;
  int best_epoch = -1;
  int since_improve = 0;
  int start_epoch = 0;
  int phase = first_phase;
  int phase_start_epoch = 0;

  auto snapshot = [&](int at_epoch, int at_phase, int at_phase_start) {
    Checkpoint ckpt;
    ckpt.model_config = model_config;
    ckpt.current = bundle.named_params();
    ckpt.best = best.named_params();
    ckpt.adam = adam;
    ckpt.epoch = at_epoch;
    ckpt.phase = at_phase;
    ckpt.phase_start_epoch = at_phase_start;
    ckpt.epochs_since_improve = since_improve;
    ckpt.best_epoch = best_epoch;
    ckpt.best_metric = best_metric;
    ckpt.shuffle_state = shuffle_rng.state();
    return ckpt;
  };

  if (config.resume && !config.checkpoint_dir.empty() &&
      std::filesystem::exists(config.checkpoint_dir + "/latest.ckpt")) {
    Checkpoint ckpt = load_checkpoint(config.checkpoint_dir + "/latest.ckpt");
    bundle = bundle_from_params(model_config, ckpt.current);
    best = bundle_from_params(model_config, ckpt.best);
    master_params = bundle.params();
    adam = ckpt.adam;
    start_epoch = ckpt.epoch;
    phase = ckpt.phase;
    phase_start_epoch = ckpt.phase_start_epoch;
    since_improve = ckpt.epochs_since_improve;
    best_epoch = ckpt.best_epoch;
    best_metric = ckpt.best_metric;
    shuffle_rng.set_state(ckpt.shuffle_state);
  }

  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  int epoch = start_epoch;
  while (phase <= 2) {
    const SupervisionKind kind = supervision_kind_for(config.mode, phase);
    ItemSet train_items = build_items(kind, train_graphs, traces);
    ItemSet val_items = build_items(kind, val_graphs, traces);
    std::vector<int> order(train_items.ctx.size());
    std::iota(order.begin(), order.end(), 0);

    const int phase_epoch_limit = phase_start_epoch + config.max_epochs;
    bool phase_done = false;
    while (!phase_done && epoch < phase_epoch_limit) {
      shuffle_rng.shuffle(order);
      LossBreakdown epoch_loss;
      for (std::size_t batch_start = 0; batch_start < order.size();
           batch_start += config.batch_graphs) {
        const std::size_t batch_end =
            std::min(order.size(), batch_start + config.batch_graphs);
        // Every rollout differentiates into a fresh clone and the gradients
        // merge in item order, so any worker count reproduces serial results.
        for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
          const int idx = order[bi];
          ModelBundle worker = bundle.clone();
          std::vector<Tensor> worker_params = worker.params();
          Tape tape;
          Rollout roll =
              rollout_teacher_forced(tape, worker, train_items.ctx[idx], train_items.sup[idx]);
          LossBreakdown bd;
          Tensor loss = rollout_loss(tape, train_items.ctx[idx], train_items.sup[idx], roll, &bd);
          if (!std::isfinite(loss.scalar())) {
            if (!config.checkpoint_dir.empty())
              save_checkpoint(config.checkpoint_dir + "/failed.ckpt",
                              snapshot(epoch, phase, phase_start_epoch));
            throw NumericalError("non-finite training loss on " + train_items.ctx[idx].graph_id);
          }
          epoch_loss += bd;
          tape.backward(loss);
          merge_grads(master_params, worker_params);
        }
        if (config.clip_gradients) clip_grad_norm(master_params, config.clip_norm);
        adam_step(adam_config, adam, master_params);
        zero_grads(master_params);
      }
      epoch_loss /= static_cast<double>(order.size());

      const double metric = validation_metric(config.mode, phase, bundle, val_items);
      const bool improved = metric > best_metric;
      if (improved) {
        best_metric = metric;
        best_epoch = epoch;
        best = bundle.clone();
        since_improve = 0;
      } else {
        ++since_improve;
      }
      EpochRecord rec{epoch, phase, epoch_loss, metric, improved};
      log.epochs.push_back(rec);
      append_log_line(config.checkpoint_dir, rec);
      ++epoch;

      if (!config.checkpoint_dir.empty())
        save_checkpoint(config.checkpoint_dir + "/latest.ckpt",
                        snapshot(epoch, phase, phase_start_epoch));

      if (since_improve >= config.patience) phase_done = true;
      if (phase == 1 && best_metric >= 1.0) phase_done = true;  // perfect validation reachability
    }

    if (phase == 1) {
      // fine-tune all heads from the phase-1 best with a fresh optimizer
      log.phase1_end_epoch = epoch - 1;
      phase_start_epoch = epoch;
      bundle = best.clone();
      master_params = bundle.params();
      adam_init(adam, master_params);
      best_metric = -1;
      best_epoch = -1;
      since_improve = 0;
    }
    ++phase;
  }

  log.best_epoch = best_epoch;
  log.best_metric = best_metric;
  TrainResult result{best.clone(), log};
  if (!config.checkpoint_dir.empty()) {
    Checkpoint ckpt = snapshot(epoch, 3, phase_start_epoch);
    ckpt.current = best.named_params();
    save_checkpoint(config.checkpoint_dir + "/best.ckpt", ckpt);
    write_model_config(config.checkpoint_dir + "/model_config.txt", model_config);
  }
  return result;
}

}  // namespace algoexec
