#include <doctest.h>

#include <cmath>

#include "algoexec/rng.hpp"
#include "algoexec/tensor.hpp"
#include "gradcheck.hpp"

using namespace algoexec;

namespace {

Tensor random_tensor(Rng& rng, int rows, int cols, bool requires_grad = true) {
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (auto& v : data) v = rng.uniform(-2.0, 2.0);
  return Tensor(rows, cols, std::move(data), requires_grad);
}

}  // namespace

TEST_CASE("matmul values") {
  Tape tape;
  Tensor a(2, 2, {1, 2, 3, 4});
  Tensor identity(2, 2, {1, 0, 0, 1});
  Tensor ai = tape.matmul(a, identity);
  CHECK(ai.values() == a.values());

  Tensor ones(2, 1, {1, 1});
  Tensor r = tape.matmul(a, ones);
  CHECK(r.at(0, 0) == 3);
  CHECK(r.at(1, 0) == 7);

  CHECK_THROWS_AS(tape.matmul(a, Tensor(3, 2, 0.0)), std::invalid_argument);
}

TEST_CASE("matmul gradient vs finite differences") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = random_tensor(rng, 5, 4);
    Tensor b = random_tensor(rng, 4, 3);
    gradcheck::check({a, b}, [&](Tape& t) { return t.reduce_sum_all(t.matmul(a, b)); }, 1e-6);
  }
}

TEST_CASE("elementwise values") {
  Tape tape;
  Tensor x(1, 3, {-1, 0, 2});
  CHECK(tape.relu(x).values() == std::vector<double>{0, 0, 2});
  CHECK(tape.sigmoid(Tensor(1, 1, {0.0})).scalar() == doctest::Approx(0.5));
  Tensor lr = tape.leaky_relu(Tensor(1, 2, {-1.0, 2.0}), 0.2);
  CHECK(lr.values() == std::vector<double>{-0.2, 2.0});

  Tensor a(2, 2, {1, 2, 3, 4});
  Tensor row(1, 2, {10, 20});
  CHECK(tape.add(a, row).values() == std::vector<double>{11, 22, 13, 24});
  Tensor col(2, 1, {10, 20});
  CHECK(tape.mul(a, col).values() == std::vector<double>{10, 20, 60, 80});
  CHECK(tape.sub(a, a).values() == std::vector<double>{0, 0, 0, 0});
  CHECK_THROWS_AS(tape.add(a, Tensor(3, 3, 0.0)), std::invalid_argument);

  Tensor c = tape.concat_cols({a, col});
  CHECK(c.values() == std::vector<double>{1, 2, 10, 3, 4, 20});
}

TEST_CASE("elementwise gradients") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = random_tensor(rng, 3, 4);
    Tensor b = random_tensor(rng, 3, 4);
    Tensor row = random_tensor(rng, 1, 4);
    Tensor col = random_tensor(rng, 3, 1);
    gradcheck::check({a, b}, [&](Tape& t) { return t.reduce_sum_all(t.mul(a, b)); });
    gradcheck::check({a, row}, [&](Tape& t) { return t.reduce_sum_all(t.add(a, row)); });
    gradcheck::check({a, col}, [&](Tape& t) { return t.reduce_sum_all(t.mul(a, col)); });
    gradcheck::check({a, b}, [&](Tape& t) { return t.reduce_sum_all(t.sub(a, b)); });
    gradcheck::check({a}, [&](Tape& t) { return t.reduce_sum_all(t.sigmoid(a)); });
    gradcheck::check({a, b},
                     [&](Tape& t) { return t.reduce_sum_all(t.mul(t.concat_cols({a, b}), t.concat_cols({b, a}))); });
    // relu/leaky checked away from the kink
    Tensor shifted = random_tensor(rng, 3, 4);
    for (auto& v : shifted.values())
      if (std::abs(v) < 0.1) v += 0.5;
    gradcheck::check({shifted}, [&](Tape& t) { return t.reduce_sum_all(t.relu(shifted)); });
    gradcheck::check({shifted},
                     [&](Tape& t) { return t.reduce_sum_all(t.leaky_relu(shifted, 0.2)); });
  }
}

TEST_CASE("segment_reduce values") {
  Tape tape;
  Tensor messages(3, 1, {1, 3, 2});
  std::vector<int> dst{0, 0, 0};
  CHECK(tape.segment_reduce(messages, dst, 1, Reduce::max).scalar() == 3);
  CHECK(tape.segment_reduce(messages, dst, 1, Reduce::mean).scalar() == 2);
  CHECK(tape.segment_reduce(messages, dst, 1, Reduce::sum).scalar() == 6);
  CHECK_THROWS_AS(tape.segment_reduce(messages, {0, 0, 5}, 1, Reduce::max), std::invalid_argument);
}

TEST_CASE("segment_reduce max routes gradient to the argmax row") {
  Tensor messages(3, 1, {1, 3, 2}, true);
  Tape tape;
  Tensor out = tape.segment_reduce(messages, {0, 0, 0}, 1, Reduce::max);
  tape.backward(out);
  CHECK(messages.grads() == std::vector<double>{0, 1, 0});
}

TEST_CASE("segment_reduce gradients") {
  Rng rng(3);
  std::vector<int> dst{0, 1, 1, 2, 0, 2, 2};
  for (int trial = 0; trial < 20; ++trial) {
    Tensor messages = random_tensor(rng, 7, 3);
    for (Reduce mode : {Reduce::max, Reduce::sum, Reduce::mean}) {
      gradcheck::check({messages}, [&](Tape& t) {
        return t.reduce_sum_all(t.mul(t.segment_reduce(messages, dst, 3, mode),
                                      t.segment_reduce(messages, dst, 3, Reduce::mean)));
      });
    }
  }
}

TEST_CASE("segment_reduce sum equals incidence matmul") {
  Rng rng(4);
  std::vector<int> dst{2, 0, 1, 1, 3, 0};
  Tensor messages = random_tensor(rng, 6, 4, false);
  Tensor incidence(4, 6, 0.0);
  for (int e = 0; e < 6; ++e) incidence.mut(dst[e], e) = 1.0;
  Tape tape;
  Tensor a = tape.segment_reduce(messages, dst, 4, Reduce::sum);
  Tensor b = tape.matmul(incidence, messages);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
}

TEST_CASE("masked_softmax") {
  Tape tape;
  Tensor s(2, 1, {0, 0});
  Tensor p = tape.masked_softmax(s, {true, true});
  CHECK(p.values() == std::vector<double>{0.5, 0.5});

  Tensor q = tape.masked_softmax(Tensor(2, 1, {10, 0}), {true, false});
  CHECK(q.values() == std::vector<double>{1, 0});

  CHECK_THROWS_AS(tape.masked_softmax(s, {false, false}), std::invalid_argument);

  // sums to 1 over the mask; invariant to constant shifts
  Rng rng(5);
  Tensor scores = random_tensor(rng, 7, 1, false);
  std::vector<bool> mask{true, false, true, true, false, true, true};
  Tensor out = tape.masked_softmax(scores, mask);
  double total = 0;
  for (int i = 0; i < 7; ++i) total += out.values()[i];
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  Tensor shifted = scores;
  Tensor shifted_scores(7, 1, scores.values());
  for (auto& v : shifted_scores.values()) v += 13.25;
  Tensor out2 = tape.masked_softmax(shifted_scores, mask);
  for (int i = 0; i < 7; ++i) CHECK(out.values()[i] == doctest::Approx(out2.values()[i]).epsilon(1e-12));
}

TEST_CASE("masked_softmax gradient") {
  Rng rng(6);
  std::vector<bool> mask{true, false, true, true, true, false, true};
  for (int trial = 0; trial < 20; ++trial) {
    Tensor scores = random_tensor(rng, 7, 1);
    Tensor weight = random_tensor(rng, 7, 1, false);
    gradcheck::check({scores}, [&](Tape& t) {
      return t.reduce_sum_all(t.mul(t.masked_softmax(scores, mask), weight));
    });
  }
}

TEST_CASE("grouped_softmax matches per-group masked_softmax") {
  Rng rng(7);
  Tensor scores = random_tensor(rng, 6, 1, false);
  std::vector<int> group{0, 1, 0, 2, 1, 0};
  std::vector<bool> include{true, true, true, true, false, true};
  Tape tape;
  Tensor out = tape.grouped_softmax(scores, group, 3, include);
  for (int g = 0; g < 3; ++g) {
    double total = 0;
    for (int i = 0; i < 6; ++i)
      if (group[i] == g && include[i]) total += out.values()[i];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(out.values()[4] == 0.0);
}

TEST_CASE("grouped_softmax gradient") {
  Rng rng(8);
  std::vector<int> group{0, 1, 0, 2, 1, 0, 2};
  std::vector<bool> include{true, true, true, true, true, false, true};
  for (int trial = 0; trial < 10; ++trial) {
    Tensor scores = random_tensor(rng, 7, 1);
    Tensor weight = random_tensor(rng, 7, 1, false);
    gradcheck::check({scores}, [&](Tape& t) {
      return t.reduce_sum_all(t.mul(t.grouped_softmax(scores, group, 3, include), weight));
    });
  }
}

TEST_CASE("reduce ops") {
  Tape tape;
  CHECK(tape.reduce_mean_rows(Tensor(2, 1, {1, 3})).scalar() == 2);
  Tensor single(1, 3, {4, 5, 6});
  CHECK(tape.reduce_mean_rows(single).values() == std::vector<double>{4, 5, 6});
  Rng rng(9);
  Tensor x = random_tensor(rng, 5, 3);
  gradcheck::check({x}, [&](Tape& t) {
    return t.reduce_sum_all(t.mul(t.reduce_mean_rows(x), Tensor(1, 3, {1.5, -2.0, 0.5})));
  });
  gradcheck::check({x}, [&](Tape& t) {
    return t.reduce_sum_all(t.mul(t.broadcast_rows(t.reduce_mean_rows(x), 5), x));
  });
}

TEST_CASE("gather_rows") {
  Tape tape;
  Tensor x(3, 2, {1, 2, 3, 4, 5, 6});
  Tensor g = tape.gather_rows(x, {2, 0, 2});
  CHECK(g.values() == std::vector<double>{5, 6, 1, 2, 5, 6});
  CHECK_THROWS_AS(tape.gather_rows(x, {3}), std::invalid_argument);
  Rng rng(10);
  Tensor y = random_tensor(rng, 4, 3);
  gradcheck::check({y}, [&](Tape& t) {
    return t.reduce_sum_all(t.mul(t.gather_rows(y, {1, 1, 3, 0}), t.gather_rows(y, {0, 2, 2, 3})));
  });
}

TEST_CASE("loss values") {
  Tape tape;
  CHECK(tape.bce_with_logits(Tensor(1, 1, {0.0}), Tensor(1, 1, {1.0})).scalar() ==
        doctest::Approx(std::log(2.0)));
  CHECK(tape.mse(Tensor(1, 2, {1, 2}), Tensor(1, 2, {1, 2})).scalar() == 0.0);
  Tensor scores(4, 1, {0.7, 0.7, 0.7, 99.0});
  std::vector<bool> mask{true, true, true, false};
  CHECK(tape.masked_ce(scores, mask, 1).scalar() == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(tape.masked_ce(scores, mask, 3), std::invalid_argument);
}

TEST_CASE("loss gradients") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor logits = random_tensor(rng, 6, 1);
    Tensor targets(6, 1, 0.0);
    for (auto& v : targets.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    gradcheck::check({logits}, [&](Tape& t) { return t.bce_with_logits(logits, targets); });

    Tensor pred = random_tensor(rng, 4, 2);
    Tensor target = random_tensor(rng, 4, 2, false);
    gradcheck::check({pred}, [&](Tape& t) { return t.mse(pred, target); });
    std::vector<bool> mse_mask{true, false, true, true, false, true, true, true};
    gradcheck::check({pred}, [&](Tape& t) { return t.mse(pred, target, &mse_mask); });

    Tensor scores = random_tensor(rng, 6, 1);
    std::vector<bool> mask{true, true, false, true, true, true};
    gradcheck::check({scores}, [&](Tape& t) { return t.masked_ce(scores, mask, 3); });
  }
}

TEST_CASE("grouped_masked_ce") {
  Tape tape;
  // two groups: rows {0,1,2} -> group 0 (target row 1), rows {3,4} -> group 1 inactive
  Tensor scores(5, 1, {0.0, 0.0, 0.0, 5.0, 1.0});
  std::vector<int> group{0, 0, 0, 1, 1};
  std::vector<bool> include{true, true, true, true, true};
  std::vector<int> target{1, -1};
  std::vector<bool> active{true, false};
  CHECK(tape.grouped_masked_ce(scores, group, 2, include, target, active).scalar() ==
        doctest::Approx(std::log(3.0)));

  std::vector<bool> none{false, false};
  CHECK(tape.grouped_masked_ce(scores, group, 2, include, {-1, -1}, none).scalar() == 0.0);

  // target outside its group's include mask
  std::vector<bool> bad_include{true, false, true, true, true};
  CHECK_THROWS_AS(tape.grouped_masked_ce(scores, group, 2, bad_include, target, active),
                  std::invalid_argument);

  Rng rng(12);
  std::vector<int> g2{0, 1, 0, 2, 1, 0, 2};
  std::vector<bool> inc2{true, true, true, true, true, false, true};
  std::vector<int> t2{2, 1, 6};
  std::vector<bool> a2{true, true, true};
  for (int trial = 0; trial < 20; ++trial) {
    Tensor s2 = random_tensor(rng, 7, 1);
    gradcheck::check({s2}, [&](Tape& t) {
      return t.grouped_masked_ce(s2, g2, 3, inc2, t2, a2);
    });
  }
}

TEST_CASE("backward basics and tape contract") {
  Tensor x(1, 1, {3.0}, true);
  Tape tape;
  Tensor y = tape.mul(x, x);
  tape.backward(y);
  CHECK(x.grads()[0] == doctest::Approx(6.0));

  // the tape was cleared: a second backward without re-recording fails
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);

  Tensor m(2, 2, {1, 2, 3, 4}, true);
  Tape tape2;
  CHECK_THROWS_AS(tape2.backward(tape2.mul(m, m)), std::invalid_argument);  // non-scalar
}

TEST_CASE("gradients accumulate across backward calls") {
  Tensor x(1, 1, {2.0}, true);
  for (int i = 0; i < 3; ++i) {
    Tape tape;
    Tensor y = tape.mul(x, x);
    tape.backward(y);
  }
  CHECK(x.grads()[0] == doctest::Approx(12.0));  // 3 * 2x
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  std::vector<Tensor> params{Tensor(2, 2, {1, 2, 3, 4}, true)};
  AdamState state;
  adam_init(state, params);
  AdamConfig config;
  adam_step(config, state, params);
  CHECK(params[0].values() == std::vector<double>{1, 2, 3, 4});
  for (double v : state.m[0]) CHECK(v == 0.0);
}

TEST_CASE("adam first step moves by lr in the descent direction") {
  std::vector<Tensor> params{Tensor(1, 2, {0.0, 0.0}, true)};
  params[0].grads() = {1.0, -2.0};
  AdamState state;
  adam_init(state, params);
  AdamConfig config;
  config.lr = 0.1;
  adam_step(config, state, params);
  CHECK(params[0].values()[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(params[0].values()[1] == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("adam converges on a quadratic") {
  std::vector<Tensor> params{Tensor(1, 1, {1.0}, true)};
  AdamState state;
  adam_init(state, params);
  AdamConfig config;
  config.lr = 0.01;
  for (int step = 0; step < 2000; ++step) {
    Tape tape;
    Tensor loss = tape.mul(params[0], params[0]);
    tape.backward(loss);
    adam_step(config, state, params);
    zero_grads(params);
  }
  CHECK(std::abs(params[0].values()[0]) < 1e-3);
}
