#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace algoexec {

class Tape;

namespace detail {

struct TensorNode {
  int rows = 0;
  int cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::uint64_t tape_epoch = 0;  // epoch of the tape that produced this node; 0 for leaves
  const Tape* tape = nullptr;
};

}  // namespace detail

// Dense row-major matrix of 64-bit reals participating in recorded-tape
// reverse-mode differentiation. Scalars are 1x1; copies share storage.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0, bool requires_grad = false);
  Tensor(int rows, int cols, std::vector<double> data, bool requires_grad = false);

  static Tensor scalar_of(double v, bool requires_grad = false) {
    return Tensor(1, 1, std::vector<double>{v}, requires_grad);
  }
  static Tensor column(const std::vector<double>& v, bool requires_grad = false) {
    return Tensor(static_cast<int>(v.size()), 1, v, requires_grad);
  }

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  double at(int r, int c) const { return node_->value[static_cast<std::size_t>(r) * node_->cols + c]; }
  double& mut(int r, int c) { return node_->value[static_cast<std::size_t>(r) * node_->cols + c]; }
  double scalar() const;

  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& grads();
  const std::vector<double>& grads() const;
  double grad_at(int r, int c) const;
  void zero_grad();

  detail::TensorNode* node() const { return node_.get(); }
  std::shared_ptr<detail::TensorNode> shared() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

enum class Reduce { max, sum, mean };
enum class LossKind { bce_logits, mse, masked_ce };

// Records primitive operations and replays them in reverse for gradients.
// A tape is confined to one worker; backward() clears it, so a recorded
// result can be differentiated exactly once.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }
  std::size_t size() const { return ops_.size(); }

  // Reverse sweep from a scalar loss; accumulates into every requires_grad
  // tensor reachable from it, then clears the tape.
  void backward(const Tensor& loss);
  void clear();

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double factor);
  Tensor relu(const Tensor& a);
  Tensor leaky_relu(const Tensor& a, double negative_slope = 0.2);
  Tensor sigmoid(const Tensor& a);
  Tensor concat_cols(const std::vector<Tensor>& xs);
  Tensor gather_rows(const Tensor& x, const std::vector<int>& row_indices);
  Tensor broadcast_rows(const Tensor& row, int num_rows);
  Tensor segment_reduce(const Tensor& messages, const std::vector<int>& dst, int num_nodes,
                        Reduce mode);
  Tensor reduce_mean_rows(const Tensor& x);
  Tensor reduce_sum_all(const Tensor& x);
  Tensor masked_softmax(const Tensor& scores, const std::vector<bool>& mask);
  // Softmax within groups of rows (e.g. a node's incoming edges); rows with
  // include=false get probability 0. Groups without included rows stay 0.
  Tensor grouped_softmax(const Tensor& scores, const std::vector<int>& group, int num_groups,
                         const std::vector<bool>& include);

  Tensor bce_with_logits(const Tensor& logits, const Tensor& targets,
                         const std::vector<bool>* mask = nullptr);
  Tensor mse(const Tensor& prediction, const Tensor& target,
             const std::vector<bool>* mask = nullptr);
  Tensor masked_ce(const Tensor& scores, const std::vector<bool>& mask, int target);
  // Mean cross-entropy over active groups: within each active group, softmax
  // over included rows against the group's target row.
  Tensor grouped_masked_ce(const Tensor& scores, const std::vector<int>& group, int num_groups,
                           const std::vector<bool>& include, const std::vector<int>& target_row,
                           const std::vector<bool>& group_active);

 private:
  Tensor make_output(int rows, int cols, const std::vector<const Tensor*>& inputs);
  void record(std::function<void()> backward_fn);

  std::vector<std::function<void()>> ops_;
  bool recording_ = true;
  std::uint64_t epoch_ = 1;
};

// Scalar convenience used by losses and the optimizer test.
struct AdamConfig {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long step_count = 0;
};

void adam_init(AdamState& state, const std::vector<Tensor>& params);
// Standard bias-corrected update from each parameter's accumulated gradient.
void adam_step(const AdamConfig& config, AdamState& state, std::vector<Tensor>& params);
void zero_grads(std::vector<Tensor>& params);

}  // namespace algoexec
