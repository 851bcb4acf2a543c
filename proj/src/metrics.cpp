#include "algoexec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace algoexec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// argmax with NaN treated as -inf and ties to the lowest index
int argmax_edge(const Tensor& scores, const std::vector<int>& edges) {
  int best = -1;
  double best_v = 0.0;
  for (int e : edges) {
    const double v = scores.at(e, 0);
    if (std::isnan(v)) continue;
    if (best == -1 || v > best_v) {
      best = e;
      best_v = v;
    }
  }
  if (best == -1 && !edges.empty()) best = edges.front();
  return best;
}

}  // namespace

void SeriesTally::add(int t, double n, double d) {
  if (t >= static_cast<int>(num.size())) {
    num.resize(t + 1, 0.0);
    den.resize(t + 1, 0.0);
  }
  num[t] += n;
  den[t] += d;
}

double SeriesTally::total_num() const {
  double s = 0;
  for (double v : num) s += v;
  return s;
}

double SeriesTally::total_den() const {
  double s = 0;
  for (double v : den) s += v;
  return s;
}

double SeriesTally::micro() const {
  const double d = total_den();
  return d > 0 ? total_num() / d : kNaN;
}

double SeriesTally::at_step(int t) const {
  if (t < 0 || t >= static_cast<int>(num.size()) || den[t] <= 0) return kNaN;
  return num[t] / den[t];
}

int SeriesTally::last_counted_step() const {
  for (int t = static_cast<int>(den.size()) - 1; t >= 0; --t)
    if (den[t] > 0) return t;
  return -1;
}

double InstanceMetrics::last_step_reach() const { return reach.at_step(reach.last_counted_step()); }

double InstanceMetrics::last_step_pred() const {
  if (prim) return pred.micro();
  return pred.at_step(pred.last_counted_step());
}

InstanceMetrics evaluate_instance(const ModelBundle& bundle, const GraphContext& ctx,
                                  const SupervisedSequence& sup) {
  Tape tape(/*recording=*/false);
  Rollout roll = rollout_eval_aligned(tape, bundle, ctx, sup);

  InstanceMetrics m;
  m.num_steps = sup.num_steps;
  m.prim = sup.is_prim();
  const int n = sup.num_nodes;

  for (int t = 0; t < sup.num_steps; ++t) {
    const RolloutStep& step = roll.steps[t];

    if (sup.has_reach()) {
      for (int i = 0; i < n; ++i) {
        const bool predicted = step.reach_logits.at(i, 0) > 0.0;
        const bool target = sup.y_reach[t][i] == 1.0;
        m.reach.add(t, predicted == target ? 1.0 : 0.0, 1.0);
      }
    }
    if (sup.has_dist()) {
      for (int i = 0; i < n; ++i) {
        const double d = step.dist.at(i, 0) - sup.y_dist[t][i];
        m.dist_sq.add(t, d * d, 1.0);
      }
    }
    if (sup.has_pred()) {
      for (int i = 0; i < n; ++i) {
        if (!sup.pred_mask[t][i]) continue;
        std::vector<int> candidates;
        for (int e : ctx.in_edges[i]) {
          if (!ctx.non_self[e]) continue;
          if (sup.kind == SupervisionKind::prim && !sup.member[t][ctx.src[e]]) continue;
          candidates.push_back(e);
        }
        if (candidates.empty()) continue;
        const int chosen = argmax_edge(step.pred_scores, candidates);
        m.pred.add(t, ctx.src[chosen] == sup.pred_target[t][i] ? 1.0 : 0.0, 1.0);
      }
    }
    if (sup.kind == SupervisionKind::prim && sup.next_target[t] >= 0) {
      m.next.add(t, step.chosen_next == sup.next_target[t] ? 1.0 : 0.0, 1.0);
    }
    const bool predicted_continue = step.continue_prob > 0.5;
    const bool target_continue = sup.continue_target[t] == 1.0;
    m.term.add(t, predicted_continue == target_continue ? 1.0 : 0.0, 1.0);
  }
  return m;
}

namespace {

struct Accum {
  double sum = 0;
  int count = 0;
  void push(double v) {
    if (std::isnan(v)) return;
    sum += v;
    ++count;
  }
  double mean() const { return count > 0 ? sum / count : kNaN; }
};

BucketStats make_bucket(const std::vector<const InstanceMetrics*>& ms) {
  BucketStats b;
  b.instances = static_cast<int>(ms.size());
  Accum msr, lsr, msp, lsp, nna, ta, mse;
  int max_steps = 0;
  for (const auto* m : ms) {
    msr.push(m->mean_step_reach());
    lsr.push(m->last_step_reach());
    msp.push(m->mean_step_pred());
    lsp.push(m->last_step_pred());
    nna.push(m->next_node_acc());
    ta.push(m->termination_acc());
    mse.push(m->distance_mse());
    max_steps = std::max(max_steps, m->num_steps);
  }
  b.mean_step_reach = msr.mean();
  b.last_step_reach = lsr.mean();
  b.mean_step_pred = msp.mean();
  b.last_step_pred = lsp.mean();
  b.next_node_acc = nna.mean();
  b.termination_acc = ta.mean();
  b.distance_mse = mse.mean();
  for (int t = 0; t < max_steps; ++t) {
    Accum r, p, d, te;
    for (const auto* m : ms) {
      r.push(m->reach.at_step(t));
      p.push(m->pred.at_step(t));
      d.push(m->dist_sq.at_step(t));
      te.push(m->term.at_step(t));
    }
    b.step_reach.push_back(r.mean());
    b.step_pred.push_back(p.mean());
    b.step_dist_mse.push_back(d.mean());
    b.step_term.push_back(te.mean());
  }
  return b;
}

}  // namespace

const BucketStats* MetricsReport::size_bucket(int size) const {
  auto it = buckets.find({size, -1});
  return it == buckets.end() ? nullptr : &it->second;
}

MetricsReport aggregate_metrics(const std::vector<EvalInstance>& instances,
                                const std::string& model_name, const std::string& task_name) {
  MetricsReport report;
  report.model_name = model_name;
  report.task_name = task_name;
  std::map<std::pair<int, int>, std::vector<const InstanceMetrics*>> groups;
  for (const auto& inst : instances) {
    groups[{inst.size, static_cast<int>(inst.category)}].push_back(&inst.metrics);
    groups[{inst.size, -1}].push_back(&inst.metrics);
  }
  for (const auto& [key, ms] : groups) report.buckets[key] = make_bucket(ms);
  return report;
}

namespace {

std::string pct(double v) {
  if (std::isnan(v)) return "---";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
  return buf;
}

std::string num(double v) {
  if (std::isnan(v)) return "---";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string render_tables(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  std::vector<int> sizes;
  for (const auto& r : reports)
    for (const auto& [key, b] : r.buckets)
      if (key.second == -1 && std::find(sizes.begin(), sizes.end(), key.first) == sizes.end())
        sizes.push_back(key.first);
  std::sort(sizes.begin(), sizes.end());

  auto header = [&](const std::string& title) {
    out << title << "\n";
    out << "model";
    for (int s : sizes) out << "\t" << s << " nodes";
    out << "\n";
  };

  out << "== Reachability (mean step / last step) ==\n";
  header("");
  for (const auto& r : reports) {
    out << r.model_name;
    for (int s : sizes) {
      const BucketStats* b = r.size_bucket(s);
      out << "\t" << (b ? pct(b->mean_step_reach) + " / " + pct(b->last_step_reach) : "---");
    }
    out << "\n";
  }
  out << "\n== Predecessor (mean step / last step) ==\n";
  header("");
  for (const auto& r : reports) {
    out << r.model_name;
    for (int s : sizes) {
      const BucketStats* b = r.size_bucket(s);
      out << "\t" << (b ? pct(b->mean_step_pred) + " / " + pct(b->last_step_pred) : "---");
    }
    out << "\n";
  }
  out << "\n== Distance MSE / mean termination accuracy ==\n";
  header("");
  for (const auto& r : reports) {
    out << r.model_name;
    for (int s : sizes) {
      const BucketStats* b = r.size_bucket(s);
      out << "\t" << (b ? num(b->distance_mse) + " / " + pct(b->termination_acc) : "---");
    }
    out << "\n";
  }
  out << "\n== Next node / per-category breakdown ==\n";
  for (const auto& r : reports) {
    for (const auto& [key, b] : r.buckets) {
      if (key.second == -1) {
        if (!std::isnan(b.next_node_acc))
          out << r.model_name << "\tnext-node@" << key.first << "\t" << pct(b.next_node_acc) << "\n";
        continue;
      }
      out << r.model_name << "\t" << category_name(static_cast<Category>(key.second)) << "@"
          << key.first << "\treach " << pct(b.mean_step_reach) << " / " << pct(b.last_step_reach)
          << "\tpred " << pct(b.mean_step_pred) << " / " << pct(b.last_step_pred) << "\n";
    }
  }
  return out.str();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "model,task,size,category,instances,mean_step_reach,last_step_reach,mean_step_pred,"
         "last_step_pred,next_node_acc,termination_acc,distance_mse\n";
  for (const auto& r : reports) {
    for (const auto& [key, b] : r.buckets) {
      out << r.model_name << "," << r.task_name << "," << key.first << ","
          << (key.second == -1 ? "all" : category_name(static_cast<Category>(key.second))) << ","
          << b.instances;
      for (double v : {b.mean_step_reach, b.last_step_reach, b.mean_step_pred, b.last_step_pred,
                       b.next_node_acc, b.termination_acc, b.distance_mse})
        out << "," << (std::isnan(v) ? std::string("") : std::to_string(v));
      out << "\n";
    }
  }
}

void write_timeseries_csv(const std::string& path, const std::vector<MetricsReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "model,task,size,step,reach_acc,pred_acc,dist_mse,term_acc\n";
  for (const auto& r : reports) {
    for (const auto& [key, b] : r.buckets) {
      if (key.second != -1) continue;
      for (std::size_t t = 0; t < b.step_reach.size(); ++t) {
        out << r.model_name << "," << r.task_name << "," << key.first << "," << t + 1;
        for (double v : {b.step_reach[t], b.step_pred[t], b.step_dist_mse[t], b.step_term[t]})
          out << "," << (std::isnan(v) ? std::string("") : std::to_string(v));
        out << "\n";
      }
    }
  }
}

}  // namespace algoexec
