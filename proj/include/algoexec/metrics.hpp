#pragma once

#include <map>
#include <string>
#include <vector>

#include "algoexec/graph.hpp"
#include "algoexec/model.hpp"
#include "algoexec/rollout.hpp"

namespace algoexec {

// Per-timestep numerator/denominator pairs; accuracy-style metrics count
// correct/total, the distance series accumulates squared error/total.
struct SeriesTally {
  std::vector<double> num;
  std::vector<double> den;

  void add(int t, double n, double d);
  double total_num() const;
  double total_den() const;
  double micro() const;       // sum(num)/sum(den); NaN when empty
  double at_step(int t) const;
  int last_counted_step() const;  // highest t with den > 0, -1 if none
};

// Metrics of one aligned rollout against its ground-truth sequence. All
// aggregates are micro-averages over the instance's (step, node) pairs,
// so mean == weighted average of the per-step series by construction.
struct InstanceMetrics {
  int num_steps = 0;
  bool prim = false;
  SeriesTally reach;    // thresholded bit vs target
  SeriesTally pred;     // argmax predecessor vs target, masked nodes only
  SeriesTally next;     // prim: argmax next node vs target
  SeriesTally term;     // thresholded continue probability vs target
  SeriesTally dist_sq;  // squared error over all nodes

  double mean_step_reach() const { return reach.micro(); }
  double last_step_reach() const;
  double mean_step_pred() const { return pred.micro(); }
  // For the sequential task each node is scored once, at its addition step;
  // the aggregate accuracy doubles as the last-step number.
  double last_step_pred() const;
  double next_node_acc() const { return next.micro(); }
  double termination_acc() const { return term.micro(); }
  double distance_mse() const { return dist_sq.micro(); }
};

InstanceMetrics evaluate_instance(const ModelBundle& bundle, const GraphContext& ctx,
                                  const SupervisedSequence& sup);

struct EvalInstance {
  std::string graph_id;
  Category category = Category::ladder;
  int size = 0;
  InstanceMetrics metrics;
};

// Aggregates are macro over instances (every graph weighs equally); the
// per-step curves average the instances still running at each step.
struct BucketStats {
  int instances = 0;
  double mean_step_reach = 0, last_step_reach = 0;
  double mean_step_pred = 0, last_step_pred = 0;
  double next_node_acc = 0;
  double termination_acc = 0;
  double distance_mse = 0;
  std::vector<double> step_reach, step_pred, step_dist_mse, step_term;
};

struct MetricsReport {
  std::string model_name;
  std::string task_name;
  // keyed by (size, category); category -1 aggregates a whole size bucket
  std::map<std::pair<int, int>, BucketStats> buckets;

  const BucketStats* size_bucket(int size) const;
};

MetricsReport aggregate_metrics(const std::vector<EvalInstance>& instances,
                                const std::string& model_name, const std::string& task_name);

std::string render_tables(const std::vector<MetricsReport>& reports);
void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& reports);
void write_timeseries_csv(const std::string& path, const std::vector<MetricsReport>& reports);

}  // namespace algoexec
