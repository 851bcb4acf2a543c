#include "algoexec/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "algoexec/rng.hpp"

namespace algoexec {

namespace {

Tensor init_linear(Rng& rng, int fan_in, int fan_out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> data(static_cast<std::size_t>(fan_in) * fan_out);
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor(fan_in, fan_out, std::move(data), /*requires_grad=*/true);
}

Tensor init_bias(int fan_out) { return Tensor(1, fan_out, 0.0, /*requires_grad=*/true); }

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor out = tape.matmul(x, w);
  if (b.defined()) out = tape.add(out, b);
  return out;
}

}  // namespace

const char* processor_name(ProcessorKind p) {
  switch (p) {
    case ProcessorKind::mpnn_max: return "mpnn-max";
    case ProcessorKind::mpnn_sum: return "mpnn-sum";
    case ProcessorKind::mpnn_mean: return "mpnn-mean";
    case ProcessorKind::gat: return "gat";
  }
  return "unknown";
}

ProcessorKind processor_from_name(const std::string& name) {
  if (name == "mpnn-max") return ProcessorKind::mpnn_max;
  if (name == "mpnn-sum") return ProcessorKind::mpnn_sum;
  if (name == "mpnn-mean") return ProcessorKind::mpnn_mean;
  if (name == "gat") return ProcessorKind::gat;
  throw std::invalid_argument("unknown processor: " + name);
}

const char* task_group_name(TaskGroup t) {
  switch (t) {
    case TaskGroup::parallel: return "parallel";
    case TaskGroup::bf_only: return "bf_only";
    case TaskGroup::bf_no_algo: return "bf_no_algo";
    case TaskGroup::prim: return "prim";
    case TaskGroup::prim_no_algo: return "prim_no_algo";
  }
  return "unknown";
}

TaskGroup task_group_from_name(const std::string& name) {
  if (name == "parallel") return TaskGroup::parallel;
  if (name == "bf_only") return TaskGroup::bf_only;
  if (name == "bf_no_algo") return TaskGroup::bf_no_algo;
  if (name == "prim") return TaskGroup::prim;
  if (name == "prim_no_algo") return TaskGroup::prim_no_algo;
  throw std::invalid_argument("unknown task group: " + name);
}

int GraphContext::edge_index(int s, int d) const {
  const std::int64_t key = static_cast<std::int64_t>(s) * (num_nodes + 1) + d;
  auto it = std::lower_bound(lookup_.begin(), lookup_.end(), key,
                             [](const auto& entry, std::int64_t k) { return entry.first < k; });
  if (it == lookup_.end() || it->first != key) return -1;
  return it->second;
}

GraphContext GraphContext::build(const Graph& g) {
  GraphContext ctx;
  ctx.graph_id = g.graph_id;
  ctx.num_nodes = g.num_nodes;
  const int num_edges = static_cast<int>(g.edges.size());
  ctx.src.reserve(num_edges);
  ctx.dst.reserve(num_edges);
  ctx.non_self.reserve(num_edges);
  std::vector<double> feat(num_edges);
  ctx.in_edges.assign(g.num_nodes, {});
  ctx.lookup_.reserve(num_edges);
  for (int e = 0; e < num_edges; ++e) {
    const Edge& edge = g.edges[e];
    ctx.src.push_back(edge.src);
    ctx.dst.push_back(edge.dst);
    ctx.non_self.push_back(edge.src != edge.dst);
    feat[e] = edge.weight;
    ctx.in_edges[edge.dst].push_back(e);
    ctx.lookup_.push_back({static_cast<std::int64_t>(edge.src) * (g.num_nodes + 1) + edge.dst, e});
  }
  std::sort(ctx.lookup_.begin(), ctx.lookup_.end());
  ctx.edge_feat = Tensor(num_edges, 1, std::move(feat));
  return ctx;
}

ModelBundle ModelBundle::init(const ModelConfig& config) {
  if (config.latent_dim < 1) throw std::invalid_argument("model: latent_dim must be positive");
  const int k = config.latent_dim;
  Rng rng(derive_seed(config.seed, "model-init"));
  ModelBundle b;
  b.config = config;

  b.enc_w = init_linear(rng, config.input_dim() + k, k);
  if (config.bias_in_encoder) b.enc_b = init_bias(k);

  if (config.processor == ProcessorKind::gat) {
    b.gat_w = init_linear(rng, k, k);
    b.gat_edge_w = init_linear(rng, 1, k);
    b.gat_att_w = init_linear(rng, 3 * k, 1);
    if (config.bias_in_scorers) b.gat_att_b = init_bias(1);
  } else {
    b.msg_w = init_linear(rng, 2 * k + 1, k);
    b.upd_w = init_linear(rng, 2 * k, k);
    if (config.bias_in_processor) {
      b.msg_b = init_bias(k);
      b.upd_b = init_bias(k);
    }
  }

  if (config.has_reach_head()) {
    b.dec_reach_w = init_linear(rng, 2 * k, 1);
    if (config.bias_in_decoders) b.dec_reach_b = init_bias(1);
  }
  if (config.has_dist_head()) {
    b.dec_dist_w = init_linear(rng, 2 * k, 1);
    if (config.bias_in_decoders) b.dec_dist_b = init_bias(1);
  }
  if (config.has_member_head()) {
    b.dec_member_w = init_linear(rng, 2 * k, 1);
    if (config.bias_in_decoders) b.dec_member_b = init_bias(1);
  }

  b.term_w = init_linear(rng, 2 * k, 1);
  if (config.bias_in_scorers) b.term_b = init_bias(1);

  b.pred_w = init_linear(rng, 2 * k + 1, 1);
  if (config.bias_in_scorers) b.pred_b = init_bias(1);

  if (config.has_next_scorer()) {
    b.next_w = init_linear(rng, 2 * k, 1);
    if (config.bias_in_scorers) b.next_b = init_bias(1);
  }
  return b;
}

std::vector<std::pair<std::string, Tensor>> ModelBundle::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto push = [&out](const char* name, const Tensor& t) {
    if (t.defined()) out.push_back({name, t});
  };
  push("enc_w", enc_w);
  push("enc_b", enc_b);
  push("msg_w", msg_w);
  push("msg_b", msg_b);
  push("upd_w", upd_w);
  push("upd_b", upd_b);
  push("gat_w", gat_w);
  push("gat_edge_w", gat_edge_w);
  push("gat_att_w", gat_att_w);
  push("gat_att_b", gat_att_b);
  push("dec_reach_w", dec_reach_w);
  push("dec_reach_b", dec_reach_b);
  push("dec_dist_w", dec_dist_w);
  push("dec_dist_b", dec_dist_b);
  push("dec_member_w", dec_member_w);
  push("dec_member_b", dec_member_b);
  push("term_w", term_w);
  push("term_b", term_b);
  push("pred_w", pred_w);
  push("pred_b", pred_b);
  push("next_w", next_w);
  push("next_b", next_b);
  return out;
}

std::vector<Tensor> ModelBundle::params() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

ModelBundle ModelBundle::clone(bool requires_grad) const {
  ModelBundle copy;
  copy.config = config;
  auto dup = [requires_grad](const Tensor& t) {
    if (!t.defined()) return Tensor();
    return Tensor(t.rows(), t.cols(), t.values(), requires_grad);
  };
  copy.enc_w = dup(enc_w);
  copy.enc_b = dup(enc_b);
  copy.msg_w = dup(msg_w);
  copy.msg_b = dup(msg_b);
  copy.upd_w = dup(upd_w);
  copy.upd_b = dup(upd_b);
  copy.gat_w = dup(gat_w);
  copy.gat_edge_w = dup(gat_edge_w);
  copy.gat_att_w = dup(gat_att_w);
  copy.gat_att_b = dup(gat_att_b);
  copy.dec_reach_w = dup(dec_reach_w);
  copy.dec_reach_b = dup(dec_reach_b);
  copy.dec_dist_w = dup(dec_dist_w);
  copy.dec_dist_b = dup(dec_dist_b);
  copy.dec_member_w = dup(dec_member_w);
  copy.dec_member_b = dup(dec_member_b);
  copy.term_w = dup(term_w);
  copy.term_b = dup(term_b);
  copy.pred_w = dup(pred_w);
  copy.pred_b = dup(pred_b);
  copy.next_w = dup(next_w);
  copy.next_b = dup(next_b);
  return copy;
}

void ModelBundle::zero_grads() {
  for (auto& t : params()) t.zero_grad();
}

void ModelBundle::load_values(const ModelBundle& other) {
  auto mine = named_params();
  auto theirs = other.named_params();
  if (mine.size() != theirs.size()) throw std::invalid_argument("load_values: architecture mismatch");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].first != theirs[i].first || mine[i].second.size() != theirs[i].second.size())
      throw std::invalid_argument("load_values: parameter mismatch at " + mine[i].first);
    mine[i].second.values() = theirs[i].second.values();
  }
}

Tensor encode(Tape& tape, const ModelBundle& b, const Tensor& x, const Tensor& h_prev) {
  return linear(tape, tape.concat_cols({x, h_prev}), b.enc_w, b.enc_b);
}

Tensor process(Tape& tape, const ModelBundle& b, const GraphContext& ctx, const Tensor& z,
               const Tensor* edge_gate) {
  if (b.config.processor == ProcessorKind::gat) {
    if (edge_gate) throw std::invalid_argument("process: edge gating supports MPNN processors only");
    Tensor wz = tape.matmul(z, b.gat_w);
    Tensor we = tape.matmul(ctx.edge_feat, b.gat_edge_w);
    Tensor att_in = tape.concat_cols({tape.gather_rows(wz, ctx.dst), tape.gather_rows(wz, ctx.src), we});
    Tensor att = tape.leaky_relu(linear(tape, att_in, b.gat_att_w, b.gat_att_b));
    std::vector<bool> include(ctx.src.size(), true);
    Tensor coef = tape.grouped_softmax(att, ctx.dst, ctx.num_nodes, include);
    Tensor weighted = tape.mul(tape.gather_rows(wz, ctx.src), coef);
    return tape.relu(tape.segment_reduce(weighted, ctx.dst, ctx.num_nodes, Reduce::sum));
  }

  Tensor msg_in = tape.concat_cols(
      {tape.gather_rows(z, ctx.dst), tape.gather_rows(z, ctx.src), ctx.edge_feat});
  Tensor msgs = linear(tape, msg_in, b.msg_w, b.msg_b);
  if (edge_gate) msgs = tape.mul(msgs, tape.sigmoid(*edge_gate));
  Reduce mode = Reduce::max;
  if (b.config.processor == ProcessorKind::mpnn_sum) mode = Reduce::sum;
  if (b.config.processor == ProcessorKind::mpnn_mean) mode = Reduce::mean;
  Tensor agg = tape.segment_reduce(msgs, ctx.dst, ctx.num_nodes, mode);
  Tensor h = linear(tape, tape.concat_cols({z, agg}), b.upd_w, b.upd_b);
  return b.config.relu_after_update ? tape.relu(h) : h;
}

Tensor decode(Tape& tape, const ModelBundle& b, DecodeHead head, const Tensor& z, const Tensor& h) {
  Tensor in = tape.concat_cols({z, h});
  switch (head) {
    case DecodeHead::reachability:
      if (!b.dec_reach_w.defined()) throw std::invalid_argument("decode: no reachability head");
      return linear(tape, in, b.dec_reach_w, b.dec_reach_b);
    case DecodeHead::distance:
      if (!b.dec_dist_w.defined()) throw std::invalid_argument("decode: no distance head");
      return linear(tape, in, b.dec_dist_w, b.dec_dist_b);
    case DecodeHead::membership:
      if (!b.dec_member_w.defined()) throw std::invalid_argument("decode: no membership head");
      return linear(tape, in, b.dec_member_w, b.dec_member_b);
  }
  throw std::invalid_argument("decode: unknown head");
}

Tensor terminate_logit(Tape& tape, const ModelBundle& b, const Tensor& h) {
  Tensor mean_h = tape.reduce_mean_rows(h);
  Tensor in = tape.concat_cols({h, tape.broadcast_rows(mean_h, h.rows())});
  Tensor per_node = linear(tape, in, b.term_w, b.term_b);
  return tape.reduce_mean_rows(per_node);
}

Tensor edge_pred_scores(Tape& tape, const ModelBundle& b, const GraphContext& ctx, const Tensor& h) {
  Tensor in = tape.concat_cols(
      {tape.gather_rows(h, ctx.dst), tape.gather_rows(h, ctx.src), ctx.edge_feat});
  return linear(tape, in, b.pred_w, b.pred_b);
}

Tensor score_predecessors(Tape& tape, const ModelBundle& b, const GraphContext& ctx,
                          const Tensor& h, int node, const std::vector<int>& candidate_edges) {
  if (candidate_edges.empty()) throw std::invalid_argument("score_predecessors: empty candidate set");
  std::vector<int> dst_rows, src_rows;
  for (int e : candidate_edges) {
    if (ctx.dst[e] != node) throw std::invalid_argument("score_predecessors: edge does not end at node");
    dst_rows.push_back(ctx.dst[e]);
    src_rows.push_back(ctx.src[e]);
  }
  Tensor feats = tape.gather_rows(ctx.edge_feat, candidate_edges);
  Tensor in = tape.concat_cols({tape.gather_rows(h, dst_rows), tape.gather_rows(h, src_rows), feats});
  Tensor scores = linear(tape, in, b.pred_w, b.pred_b);
  std::vector<bool> mask(candidate_edges.size(), true);
  return tape.masked_softmax(scores, mask);
}

Tensor score_next_node(Tape& tape, const ModelBundle& b, const Tensor& z, const Tensor& h,
                       const std::vector<bool>& mask) {
  if (!b.next_w.defined()) throw std::invalid_argument("score_next_node: no next-node scorer");
  Tensor scores = linear(tape, tape.concat_cols({z, h}), b.next_w, b.next_b);
  return tape.masked_softmax(scores, mask);
}

StepOutput forward_step(Tape& tape, const ModelBundle& b, const GraphContext& ctx, const Tensor& x,
                        const Tensor& h_prev, const StepOptions& opts) {
  StepOutput out;
  out.z = encode(tape, b, x, h_prev);
  out.h = process(tape, b, ctx, out.z, opts.edge_gate);
  if (opts.want_reach) out.reach_logits = decode(tape, b, DecodeHead::reachability, out.z, out.h);
  if (opts.want_dist) out.dist = decode(tape, b, DecodeHead::distance, out.z, out.h);
  if (opts.want_member) out.member_logits = decode(tape, b, DecodeHead::membership, out.z, out.h);
  if (opts.want_pred) out.pred_scores = edge_pred_scores(tape, b, ctx, out.h);
  if (opts.want_next) {
    Tensor scores = linear(tape, tape.concat_cols({out.z, out.h}), b.next_w, b.next_b);
    out.next_scores = scores;  // raw scores; callers mask/softmax as needed
  }
  if (opts.want_term) out.term_logit = terminate_logit(tape, b, out.h);
  return out;
}

}  // namespace algoexec
