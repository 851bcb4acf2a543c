#pragma once

// Central finite-difference gradient checking (test-side oracle).

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "algoexec/tensor.hpp"

namespace gradcheck {

// Compares analytic gradients of scalar = f(tape) against central finite
// differences for every requires_grad input. The functor must rebuild the
// computation from the given tensors each call (they share storage).
inline void check(std::vector<algoexec::Tensor> inputs,
                  const std::function<algoexec::Tensor(algoexec::Tape&)>& f, double tol = 1e-4,
                  double step = 1e-5) {
  using algoexec::Tape;
  using algoexec::Tensor;

  for (auto& t : inputs) t.zero_grad();
  {
    Tape tape;
    Tensor loss = f(tape);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) analytic.push_back(t.grads());

  auto eval = [&]() {
    Tape tape(/*recording=*/false);
    return f(tape).scalar();
  };

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto& values = inputs[k].values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = eval();
      values[i] = saved - step;
      const double down = eval();
      values[i] = saved;
      const double numeric = (up - down) / (2 * step);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      INFO("input ", k, " element ", i, " analytic ", a, " numeric ", numeric);
      CHECK(err <= tol);
    }
  }
}

}  // namespace gradcheck
