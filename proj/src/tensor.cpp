#include "algoexec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace algoexec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Broadcast pattern of b against a full shape [rows x cols].
enum class Bcast { same, row, col, scalar };

Bcast broadcast_kind(int rows, int cols, const Tensor& b, const char* op) {
  if (b.rows() == rows && b.cols() == cols) return Bcast::same;
  if (b.rows() == 1 && b.cols() == 1) return Bcast::scalar;
  if (b.rows() == 1 && b.cols() == cols) return Bcast::row;
  if (b.cols() == 1 && b.rows() == rows) return Bcast::col;
  throw std::invalid_argument(std::string(op) + ": incompatible shapes");
}

inline std::size_t bcast_index(Bcast kind, int r, int c, int cols) {
  switch (kind) {
    case Bcast::same: return static_cast<std::size_t>(r) * cols + c;
    case Bcast::row: return static_cast<std::size_t>(c);
    case Bcast::col: return static_cast<std::size_t>(r);
    case Bcast::scalar: return 0;
  }
  return 0;
}

}  // namespace

Tensor::Tensor(int rows, int cols, double fill, bool requires_grad) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("tensor: negative dimension");
  node_ = std::make_shared<detail::TensorNode>();
  node_->rows = rows;
  node_->cols = cols;
  node_->value.assign(static_cast<std::size_t>(rows) * cols, fill);
  node_->requires_grad = requires_grad;
  if (requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

Tensor::Tensor(int rows, int cols, std::vector<double> data, bool requires_grad) {
  if (static_cast<std::size_t>(rows) * cols != data.size())
    throw std::invalid_argument("tensor: data length does not match shape");
  node_ = std::make_shared<detail::TensorNode>();
  node_->rows = rows;
  node_->cols = cols;
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
  if (requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

double Tensor::scalar() const {
  if (rows() != 1 || cols() != 1) throw std::invalid_argument("tensor: not a scalar");
  return node_->value[0];
}

std::vector<double>& Tensor::grads() {
  if (!node_->requires_grad) throw std::logic_error("tensor: gradients not tracked");
  return node_->grad;
}

const std::vector<double>& Tensor::grads() const {
  if (!node_->requires_grad) throw std::logic_error("tensor: gradients not tracked");
  return node_->grad;
}

double Tensor::grad_at(int r, int c) const {
  return grads()[static_cast<std::size_t>(r) * cols() + c];
}

void Tensor::zero_grad() {
  if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tape::make_output(int rows, int cols, const std::vector<const Tensor*>& inputs) {
  bool needs_grad = false;
  if (recording_) {
    for (const Tensor* t : inputs) {
      if (t->requires_grad()) {
        needs_grad = true;
        break;
      }
    }
  }
  Tensor out(rows, cols, 0.0, needs_grad);
  if (needs_grad) {
    out.node()->tape = this;
    out.node()->tape_epoch = epoch_;
  }
  return out;
}

void Tape::record(std::function<void()> backward_fn) { ops_.push_back(std::move(backward_fn)); }

void Tape::clear() {
  ops_.clear();
  ++epoch_;
}

void Tape::backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("backward: loss must be a scalar");
  if (loss.node()->tape != this || loss.node()->tape_epoch != epoch_)
    throw std::invalid_argument("backward: loss is not on the active tape");
  loss.node()->grad[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
  clear();
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions disagree");
  const int n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out = make_output(n, m, {&a, &b});
  {
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    double* pc = out.values().data();
    for (int i = 0; i < n; ++i) {
      const double* ai = pa + static_cast<std::size_t>(i) * k;
      double* ci = pc + static_cast<std::size_t>(i) * m;
      for (int p = 0; p < k; ++p) {
        const double av = ai[p];
        const double* bp = pb + static_cast<std::size_t>(p) * m;
        for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
      }
    }
  }
  if (out.requires_grad()) {
    record([a, b, out, n, k, m] {
      const double* g = out.node()->grad.data();
      if (a.requires_grad()) {
        double* da = a.node()->grad.data();
        const double* pb = b.values().data();
        for (int i = 0; i < n; ++i) {
          const double* gi = g + static_cast<std::size_t>(i) * m;
          double* dai = da + static_cast<std::size_t>(i) * k;
          for (int p = 0; p < k; ++p) {
            const double* bp = pb + static_cast<std::size_t>(p) * m;
            double acc = 0.0;
            for (int j = 0; j < m; ++j) acc += gi[j] * bp[j];
            dai[p] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        double* db = b.node()->grad.data();
        const double* pa = a.values().data();
        for (int i = 0; i < n; ++i) {
          const double* gi = g + static_cast<std::size_t>(i) * m;
          const double* ai = pa + static_cast<std::size_t>(i) * k;
          for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            double* dbp = db + static_cast<std::size_t>(p) * m;
            for (int j = 0; j < m; ++j) dbp[j] += av * gi[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  const Bcast kind = broadcast_kind(a.rows(), a.cols(), b, "add");
  const int rows = a.rows(), cols = a.cols();
  Tensor out = make_output(rows, cols, {&a, &b});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.values()[static_cast<std::size_t>(r) * cols + c] =
          a.values()[static_cast<std::size_t>(r) * cols + c] +
          b.values()[bcast_index(kind, r, c, cols)];
  if (out.requires_grad()) {
    record([a, b, out, kind, rows, cols] {
      const auto& g = out.node()->grad;
      if (a.requires_grad()) {
        auto& da = a.node()->grad;
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        auto& db = b.node()->grad;
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            db[bcast_index(kind, r, c, cols)] += g[static_cast<std::size_t>(r) * cols + c];
      }
    });
  }
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  const Bcast kind = broadcast_kind(a.rows(), a.cols(), b, "sub");
  const int rows = a.rows(), cols = a.cols();
  Tensor out = make_output(rows, cols, {&a, &b});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.values()[static_cast<std::size_t>(r) * cols + c] =
          a.values()[static_cast<std::size_t>(r) * cols + c] -
          b.values()[bcast_index(kind, r, c, cols)];
  if (out.requires_grad()) {
    record([a, b, out, kind, rows, cols] {
      const auto& g = out.node()->grad;
      if (a.requires_grad()) {
        auto& da = a.node()->grad;
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (b.requires_grad()) {
        auto& db = b.node()->grad;
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            db[bcast_index(kind, r, c, cols)] -= g[static_cast<std::size_t>(r) * cols + c];
      }
    });
  }
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  const Bcast kind = broadcast_kind(a.rows(), a.cols(), b, "mul");
  const int rows = a.rows(), cols = a.cols();
  Tensor out = make_output(rows, cols, {&a, &b});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.values()[static_cast<std::size_t>(r) * cols + c] =
          a.values()[static_cast<std::size_t>(r) * cols + c] *
          b.values()[bcast_index(kind, r, c, cols)];
  if (out.requires_grad()) {
    record([a, b, out, kind, rows, cols] {
      const auto& g = out.node()->grad;
      if (a.requires_grad()) {
        auto& da = a.node()->grad;
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * cols + c;
            da[i] += g[i] * b.values()[bcast_index(kind, r, c, cols)];
          }
      }
      if (b.requires_grad()) {
        auto& db = b.node()->grad;
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * cols + c;
            db[bcast_index(kind, r, c, cols)] += g[i] * a.values()[i];
          }
      }
    });
  }
  return out;
}

Tensor Tape::scale(const Tensor& a, double factor) {
  Tensor out = make_output(a.rows(), a.cols(), {&a});
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = factor * a.values()[i];
  if (out.requires_grad()) {
    record([a, out, factor] {
      auto& da = a.node()->grad;
      const auto& g = out.node()->grad;
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += factor * g[i];
    });
  }
  return out;
}

Tensor Tape::relu(const Tensor& a) {
  Tensor out = make_output(a.rows(), a.cols(), {&a});
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = std::max(0.0, a.values()[i]);
  if (out.requires_grad()) {
    record([a, out] {
      auto& da = a.node()->grad;
      const auto& g = out.node()->grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a.values()[i] > 0.0) da[i] += g[i];
    });
  }
  return out;
}

Tensor Tape::leaky_relu(const Tensor& a, double negative_slope) {
  Tensor out = make_output(a.rows(), a.cols(), {&a});
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = a.values()[i];
    out.values()[i] = v > 0.0 ? v : negative_slope * v;
  }
  if (out.requires_grad()) {
    record([a, out, negative_slope] {
      auto& da = a.node()->grad;
      const auto& g = out.node()->grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        da[i] += (a.values()[i] > 0.0 ? 1.0 : negative_slope) * g[i];
    });
  }
  return out;
}

Tensor Tape::sigmoid(const Tensor& a) {
  Tensor out = make_output(a.rows(), a.cols(), {&a});
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = stable_sigmoid(a.values()[i]);
  if (out.requires_grad()) {
    record([a, out] {
      auto& da = a.node()->grad;
      const auto& g = out.node()->grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = out.values()[i];
        da[i] += g[i] * s * (1.0 - s);
      }
    });
  }
  return out;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int rows = xs.front().rows();
  int total = 0;
  std::vector<const Tensor*> ptrs;
  for (const auto& x : xs) {
    if (x.rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
    total += x.cols();
    ptrs.push_back(&x);
  }
  Tensor out = make_output(rows, total, ptrs);
  int offset = 0;
  for (const auto& x : xs) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < x.cols(); ++c)
        out.values()[static_cast<std::size_t>(r) * total + offset + c] = x.at(r, c);
    offset += x.cols();
  }
  if (out.requires_grad()) {
    record([xs, out, rows, total] {
      const auto& g = out.node()->grad;
      int offset = 0;
      for (const auto& x : xs) {
        if (x.requires_grad()) {
          auto& dx = x.node()->grad;
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < x.cols(); ++c)
              dx[static_cast<std::size_t>(r) * x.cols() + c] +=
                  g[static_cast<std::size_t>(r) * total + offset + c];
        }
        offset += x.cols();
      }
    });
  }
  return out;
}

Tensor Tape::gather_rows(const Tensor& x, const std::vector<int>& row_indices) {
  for (int r : row_indices)
    if (r < 0 || r >= x.rows()) throw std::invalid_argument("gather_rows: index out of range");
  const int cols = x.cols();
  Tensor out = make_output(static_cast<int>(row_indices.size()), cols, {&x});
  for (std::size_t k = 0; k < row_indices.size(); ++k)
    for (int c = 0; c < cols; ++c)
      out.values()[k * cols + c] = x.at(row_indices[k], c);
  if (out.requires_grad()) {
    record([x, out, row_indices, cols] {
      auto& dx = x.node()->grad;
      const auto& g = out.node()->grad;
      for (std::size_t k = 0; k < row_indices.size(); ++k)
        for (int c = 0; c < cols; ++c)
          dx[static_cast<std::size_t>(row_indices[k]) * cols + c] += g[k * cols + c];
    });
  }
  return out;
}

Tensor Tape::broadcast_rows(const Tensor& row, int num_rows) {
  if (row.rows() != 1) throw std::invalid_argument("broadcast_rows: input must have one row");
  const int cols = row.cols();
  Tensor out = make_output(num_rows, cols, {&row});
  for (int r = 0; r < num_rows; ++r)
    for (int c = 0; c < cols; ++c) out.values()[static_cast<std::size_t>(r) * cols + c] = row.at(0, c);
  if (out.requires_grad()) {
    record([row, out, num_rows, cols] {
      auto& dr = row.node()->grad;
      const auto& g = out.node()->grad;
      for (int r = 0; r < num_rows; ++r)
        for (int c = 0; c < cols; ++c) dr[c] += g[static_cast<std::size_t>(r) * cols + c];
    });
  }
  return out;
}

Tensor Tape::segment_reduce(const Tensor& messages, const std::vector<int>& dst, int num_nodes,
                            Reduce mode) {
  if (static_cast<int>(dst.size()) != messages.rows())
    throw std::invalid_argument("segment_reduce: one destination per message row");
  for (int d : dst)
    if (d < 0 || d >= num_nodes) throw std::invalid_argument("segment_reduce: index out of range");
  const int cols = messages.cols();
  const int num_edges = messages.rows();
  Tensor out = make_output(num_nodes, cols, {&messages});
  std::vector<int> count(num_nodes, 0);
  for (int d : dst) count[d] += 1;

  if (mode == Reduce::max) {
    // Ties route to the lowest edge index (strict comparison keeps the first).
    auto argmax = std::make_shared<std::vector<int>>(static_cast<std::size_t>(num_nodes) * cols, -1);
    std::vector<double> best(static_cast<std::size_t>(num_nodes) * cols, kNegInf);
    for (int e = 0; e < num_edges; ++e) {
      const int node = dst[e];
      for (int c = 0; c < cols; ++c) {
        const double v = messages.at(e, c);
        auto slot = static_cast<std::size_t>(node) * cols + c;
        if (v > best[slot]) {
          best[slot] = v;
          (*argmax)[slot] = e;
        }
      }
    }
    for (int i = 0; i < num_nodes; ++i)
      for (int c = 0; c < cols; ++c)
        out.values()[static_cast<std::size_t>(i) * cols + c] =
            count[i] > 0 ? best[static_cast<std::size_t>(i) * cols + c] : 0.0;
    if (out.requires_grad()) {
      record([messages, out, argmax, cols] {
        auto& dm = messages.node()->grad;
        const auto& g = out.node()->grad;
        for (std::size_t slot = 0; slot < argmax->size(); ++slot) {
          const int e = (*argmax)[slot];
          if (e >= 0) dm[static_cast<std::size_t>(e) * cols + slot % cols] += g[slot];
        }
      });
    }
    return out;
  }

  for (int e = 0; e < num_edges; ++e) {
    const int node = dst[e];
    for (int c = 0; c < cols; ++c)
      out.values()[static_cast<std::size_t>(node) * cols + c] += messages.at(e, c);
  }
  if (mode == Reduce::mean) {
    for (int i = 0; i < num_nodes; ++i) {
      if (count[i] == 0) continue;
      for (int c = 0; c < cols; ++c)
        out.values()[static_cast<std::size_t>(i) * cols + c] /= count[i];
    }
  }
  if (out.requires_grad()) {
    auto counts = std::make_shared<std::vector<int>>(count);
    record([messages, out, dst, counts, cols, mode] {
      auto& dm = messages.node()->grad;
      const auto& g = out.node()->grad;
      for (std::size_t e = 0; e < dst.size(); ++e) {
        const int node = dst[e];
        const double denom = mode == Reduce::mean ? static_cast<double>((*counts)[node]) : 1.0;
        for (int c = 0; c < cols; ++c)
          dm[e * cols + c] += g[static_cast<std::size_t>(node) * cols + c] / denom;
      }
    });
  }
  return out;
}

Tensor Tape::reduce_mean_rows(const Tensor& x) {
  if (x.rows() < 1) throw std::invalid_argument("reduce_mean_rows: need at least one row");
  const int rows = x.rows(), cols = x.cols();
  Tensor out = make_output(1, cols, {&x});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out.values()[c] += x.at(r, c);
  for (int c = 0; c < cols; ++c) out.values()[c] /= rows;
  if (out.requires_grad()) {
    record([x, out, rows, cols] {
      auto& dx = x.node()->grad;
      const auto& g = out.node()->grad;
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) dx[static_cast<std::size_t>(r) * cols + c] += g[c] / rows;
    });
  }
  return out;
}

Tensor Tape::reduce_sum_all(const Tensor& x) {
  Tensor out = make_output(1, 1, {&x});
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  out.values()[0] = acc;
  if (out.requires_grad()) {
    record([x, out] {
      auto& dx = x.node()->grad;
      const double g = out.node()->grad[0];
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g;
    });
  }
  return out;
}

Tensor Tape::masked_softmax(const Tensor& scores, const std::vector<bool>& mask) {
  if (scores.cols() != 1) throw std::invalid_argument("masked_softmax: expected a column vector");
  if (static_cast<int>(mask.size()) != scores.rows())
    throw std::invalid_argument("masked_softmax: mask size mismatch");
  const int n = scores.rows();
  double max_score = kNegInf;
  for (int i = 0; i < n; ++i)
    if (mask[i]) max_score = std::max(max_score, scores.at(i, 0));
  if (max_score == kNegInf) throw std::invalid_argument("masked_softmax: empty mask");

  Tensor out = make_output(n, 1, {&scores});
  double denom = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double e = std::exp(scores.at(i, 0) - max_score);
    out.values()[i] = e;
    denom += e;
  }
  for (int i = 0; i < n; ++i) out.values()[i] = mask[i] ? out.values()[i] / denom : 0.0;

  if (out.requires_grad()) {
    record([scores, out, mask, n] {
      auto& ds = scores.node()->grad;
      const auto& g = out.node()->grad;
      double dot = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask[i]) dot += g[i] * out.values()[i];
      for (int i = 0; i < n; ++i)
        if (mask[i]) ds[i] += out.values()[i] * (g[i] - dot);
    });
  }
  return out;
}

Tensor Tape::grouped_softmax(const Tensor& scores, const std::vector<int>& group, int num_groups,
                             const std::vector<bool>& include) {
  if (scores.cols() != 1) throw std::invalid_argument("grouped_softmax: expected a column vector");
  const int m = scores.rows();
  if (static_cast<int>(group.size()) != m || static_cast<int>(include.size()) != m)
    throw std::invalid_argument("grouped_softmax: index arrays must match row count");
  for (int gidx : group)
    if (gidx < 0 || gidx >= num_groups) throw std::invalid_argument("grouped_softmax: bad group id");

  std::vector<double> gmax(num_groups, kNegInf);
  for (int i = 0; i < m; ++i)
    if (include[i]) gmax[group[i]] = std::max(gmax[group[i]], scores.at(i, 0));

  Tensor out = make_output(m, 1, {&scores});
  std::vector<double> denom(num_groups, 0.0);
  for (int i = 0; i < m; ++i) {
    if (!include[i]) continue;
    const double e = std::exp(scores.at(i, 0) - gmax[group[i]]);
    out.values()[i] = e;
    denom[group[i]] += e;
  }
  for (int i = 0; i < m; ++i)
    out.values()[i] = include[i] ? out.values()[i] / denom[group[i]] : 0.0;

  if (out.requires_grad()) {
    record([scores, out, group, include, num_groups, m] {
      auto& ds = scores.node()->grad;
      const auto& g = out.node()->grad;
      std::vector<double> dot(num_groups, 0.0);
      for (int i = 0; i < m; ++i)
        if (include[i]) dot[group[i]] += g[i] * out.values()[i];
      for (int i = 0; i < m; ++i)
        if (include[i]) ds[i] += out.values()[i] * (g[i] - dot[group[i]]);
    });
  }
  return out;
}

Tensor Tape::bce_with_logits(const Tensor& logits, const Tensor& targets,
                             const std::vector<bool>* mask) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw std::invalid_argument("bce_with_logits: shape mismatch");
  const std::size_t total = logits.size();
  if (mask && mask->size() != total) throw std::invalid_argument("bce_with_logits: mask size mismatch");
  std::size_t count = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    if (mask && !(*mask)[i]) continue;
    const double x = logits.values()[i];
    const double t = targets.values()[i];
    acc += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
    ++count;
  }
  if (count == 0) throw std::invalid_argument("bce_with_logits: empty mask");
  Tensor out = make_output(1, 1, {&logits, &targets});
  out.values()[0] = acc / static_cast<double>(count);
  if (out.requires_grad()) {
    std::shared_ptr<std::vector<bool>> mask_copy;
    if (mask) mask_copy = std::make_shared<std::vector<bool>>(*mask);
    record([logits, targets, out, mask_copy, total, count] {
      const double g = out.node()->grad[0] / static_cast<double>(count);
      if (logits.requires_grad()) {
        auto& dl = logits.node()->grad;
        for (std::size_t i = 0; i < total; ++i) {
          if (mask_copy && !(*mask_copy)[i]) continue;
          dl[i] += g * (stable_sigmoid(logits.values()[i]) - targets.values()[i]);
        }
      }
    });
  }
  return out;
}

Tensor Tape::mse(const Tensor& prediction, const Tensor& target, const std::vector<bool>* mask) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw std::invalid_argument("mse: shape mismatch");
  const std::size_t total = prediction.size();
  if (mask && mask->size() != total) throw std::invalid_argument("mse: mask size mismatch");
  std::size_t count = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    if (mask && !(*mask)[i]) continue;
    const double d = prediction.values()[i] - target.values()[i];
    acc += d * d;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("mse: empty mask");
  Tensor out = make_output(1, 1, {&prediction, &target});
  out.values()[0] = acc / static_cast<double>(count);
  if (out.requires_grad()) {
    std::shared_ptr<std::vector<bool>> mask_copy;
    if (mask) mask_copy = std::make_shared<std::vector<bool>>(*mask);
    record([prediction, target, out, mask_copy, total, count] {
      const double g = 2.0 * out.node()->grad[0] / static_cast<double>(count);
      for (std::size_t i = 0; i < total; ++i) {
        if (mask_copy && !(*mask_copy)[i]) continue;
        const double d = prediction.values()[i] - target.values()[i];
        if (prediction.requires_grad()) prediction.node()->grad[i] += g * d;
        if (target.requires_grad()) target.node()->grad[i] -= g * d;
      }
    });
  }
  return out;
}

Tensor Tape::masked_ce(const Tensor& scores, const std::vector<bool>& mask, int target) {
  if (scores.cols() != 1) throw std::invalid_argument("masked_ce: expected a column vector");
  if (target < 0 || target >= scores.rows() || static_cast<int>(mask.size()) != scores.rows())
    throw std::invalid_argument("masked_ce: bad target or mask");
  if (!mask[target]) throw std::invalid_argument("masked_ce: target outside mask");
  const int n = scores.rows();
  double max_score = kNegInf;
  for (int i = 0; i < n; ++i)
    if (mask[i]) max_score = std::max(max_score, scores.at(i, 0));
  double denom = 0.0;
  for (int i = 0; i < n; ++i)
    if (mask[i]) denom += std::exp(scores.at(i, 0) - max_score);
  const double log_z = max_score + std::log(denom);
  Tensor out = make_output(1, 1, {&scores});
  out.values()[0] = log_z - scores.at(target, 0);
  if (out.requires_grad()) {
    record([scores, out, mask, target, max_score, denom, n] {
      auto& ds = scores.node()->grad;
      const double g = out.node()->grad[0];
      for (int i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        const double p = std::exp(scores.at(i, 0) - max_score) / denom;
        ds[i] += g * (p - (i == target ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

Tensor Tape::grouped_masked_ce(const Tensor& scores, const std::vector<int>& group, int num_groups,
                               const std::vector<bool>& include, const std::vector<int>& target_row,
                               const std::vector<bool>& group_active) {
  if (scores.cols() != 1) throw std::invalid_argument("grouped_masked_ce: expected a column vector");
  const int m = scores.rows();
  if (static_cast<int>(group.size()) != m || static_cast<int>(include.size()) != m)
    throw std::invalid_argument("grouped_masked_ce: index arrays must match row count");
  if (static_cast<int>(target_row.size()) != num_groups ||
      static_cast<int>(group_active.size()) != num_groups)
    throw std::invalid_argument("grouped_masked_ce: per-group arrays must match group count");

  std::vector<double> gmax(num_groups, kNegInf);
  for (int i = 0; i < m; ++i)
    if (include[i]) gmax[group[i]] = std::max(gmax[group[i]], scores.at(i, 0));

  int active = 0;
  for (int gidx = 0; gidx < num_groups; ++gidx) {
    if (!group_active[gidx]) continue;
    ++active;
    const int t = target_row[gidx];
    if (t < 0 || t >= m || group[t] != gidx || !include[t])
      throw std::invalid_argument("grouped_masked_ce: target outside its group mask");
  }
  Tensor out = make_output(1, 1, {&scores});
  if (active == 0) return out;  // nothing supervised this step

  std::vector<double> denom(num_groups, 0.0);
  for (int i = 0; i < m; ++i)
    if (include[i] && group_active[group[i]])
      denom[group[i]] += std::exp(scores.at(i, 0) - gmax[group[i]]);
  double acc = 0.0;
  for (int gidx = 0; gidx < num_groups; ++gidx) {
    if (!group_active[gidx]) continue;
    acc += gmax[gidx] + std::log(denom[gidx]) - scores.at(target_row[gidx], 0);
  }
  out.values()[0] = acc / active;

  if (out.requires_grad()) {
    auto gmax_p = std::make_shared<std::vector<double>>(std::move(gmax));
    auto denom_p = std::make_shared<std::vector<double>>(std::move(denom));
    record([scores, out, group, include, target_row, group_active, gmax_p, denom_p, m, active] {
      auto& ds = scores.node()->grad;
      const double g = out.node()->grad[0] / active;
      for (int i = 0; i < m; ++i) {
        const int gidx = group[i];
        if (!include[i] || !group_active[gidx]) continue;
        const double p = std::exp(scores.at(i, 0) - (*gmax_p)[gidx]) / (*denom_p)[gidx];
        ds[i] += g * (p - (target_row[gidx] == i ? 1.0 : 0.0));
      }
    });
  }
  return out;
}

void adam_init(AdamState& state, const std::vector<Tensor>& params) {
  state.m.clear();
  state.v.clear();
  state.step_count = 0;
  for (const auto& p : params) {
    state.m.emplace_back(p.size(), 0.0);
    state.v.emplace_back(p.size(), 0.0);
  }
}

void adam_step(const AdamConfig& config, AdamState& state, std::vector<Tensor>& params) {
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state does not match parameter list");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step_count));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k].values();
    const auto& grad = params[k].grads();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != value.size()) throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

void zero_grads(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace algoexec
