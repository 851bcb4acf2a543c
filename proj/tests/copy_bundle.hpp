#pragma once

// Hand-constructed parallel-task bundle that reproduces the ground truth
// exactly through MPNN-max message passing:
//   message ch2 = C - (x_j.dist + w)   -> max = C - relaxed distance
//   message ch3 = x_j.reach            -> max = BFS update
//   message ch4 = x_i.dist             (same value on every in-edge)
// so decoders can emit the exact next state, and the termination head reads
// the mean state change. Exact for reach/dist/termination on any graph whose
// distances stay below C; the predecessor scorer is left at zero, which is
// still exact wherever nodes have a single candidate (e.g. 2-node graphs).

#include <algorithm>

#include "algoexec/model.hpp"

namespace copy_bundle {

inline algoexec::ModelBundle make(double C = 10.0, double S = 40.0, double beta = 10.0) {
  using namespace algoexec;
  ModelConfig config;
  config.processor = ProcessorKind::mpnn_max;
  config.latent_dim = 6;
  config.task = TaskGroup::parallel;
  config.bias_in_decoders = true;
  config.seed = 0;
  ModelBundle b = ModelBundle::init(config);
  const int k = 6;
  for (auto& [name, t] : b.named_params()) std::fill(t.values().begin(), t.values().end(), 0.0);

  // encoder: z = [reach, dist, 0...]
  b.enc_w.mut(0, 0) = 1.0;
  b.enc_w.mut(1, 1) = 1.0;

  // messages over [z_i || z_j || w]
  b.msg_w.mut(k + 1, 2) = -1.0;  // - x_j.dist
  b.msg_w.mut(2 * k, 2) = -1.0;  // - w
  b.msg_b.mut(0, 2) = C;
  b.msg_w.mut(k + 0, 3) = 1.0;  // x_j.reach
  b.msg_w.mut(1, 4) = 1.0;      // x_i.dist (destination side)

  // update over [z_i || agg]
  b.upd_w.mut(k + 3, 0) = 1.0;  // h0 = y_reach
  b.upd_w.mut(k + 2, 1) = 1.0;  // h1 = C - y_dist
  b.upd_w.mut(k + 4, 2) = 1.0;  // h2 = x.dist - y.dist  (>= 0)
  b.upd_w.mut(k + 2, 2) = 1.0;
  b.upd_b.mut(0, 2) = -C;
  b.upd_w.mut(k + 3, 3) = 1.0;  // h3 = y_reach - x.reach (>= 0)
  b.upd_w.mut(0, 3) = -1.0;

  // heads over [z || h]
  b.dec_reach_w.mut(k + 0, 0) = S;
  b.dec_reach_b.mut(0, 0) = -S / 2.0;
  b.dec_dist_w.mut(k + 1, 0) = -1.0;
  b.dec_dist_b.mut(0, 0) = C;

  // termination over [h_i || mean(h)]: continue while anything changed
  b.term_w.mut(k + 2, 0) = S;
  b.term_w.mut(k + 3, 0) = S;
  b.term_b.mut(0, 0) = -beta;
  return b;
}

}  // namespace copy_bundle
