// Copyright 2026 the nfad authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <functional>

#include "ad/adam.hpp"
#include "ad/tape.hpp"
#include "testutil.hpp"

using namespace nfad;
using testutil::random_tensor;
using testutil::rel_err;

namespace {

// Finite-difference gradient oracle (64-bit): perturbs every entry of every
// input tensor, rebuilds the graph, and compares the analytic gradients at
// relative 1e-4 (h = 1e-3 central differences).
void check_gradients(
    const std::function<Tape<double>::Id(Tape<double>&, std::vector<Tape<double>::Id>&)>&
        build,
    std::vector<Tensor<double>> inputs, double h = 1e-3, double tol = 1e-4) {
  for (Tensor<double>& t : inputs) t.requires_grad = true;

  auto eval = [&](const std::vector<Tensor<double>>& values) {
    Tape<double> tape;
    std::vector<Tape<double>::Id> ids;
    for (const Tensor<double>& t : values) ids.push_back(tape.input(t));
    auto out = build(tape, ids);
    return static_cast<double>(tape.val(out).data[0]);
  };

  Tape<double> tape;
  std::vector<Tape<double>::Id> ids;
  for (const Tensor<double>& t : inputs) ids.push_back(tape.input(t));
  auto out = build(tape, ids);
  tape.backward(out);

  for (size_t which = 0; which < inputs.size(); ++which) {
    const Tensor<double>& analytic = tape.grad(ids[which]);
    for (size_t i = 0; i < inputs[which].data.size(); ++i) {
      std::vector<Tensor<double>> plus = inputs, minus = inputs;
      plus[which].data[i] += h;
      minus[which].data[i] -= h;
      double fd = (eval(plus) - eval(minus)) / (2.0 * h);
      INFO("input ", which, " entry ", i, ": analytic ", analytic.data[i], " fd ",
           fd);
      CHECK(rel_err(analytic.data[i], fd) < tol);
    }
  }
}

}  // namespace

TEST_CASE("trivial op examples") {
  Tape<float> tape;
  // matmul identity
  auto a = tape.constant(Tensor<float>({2, 2}, {1, 2, 3, 4}));
  auto eye = tape.constant(Tensor<float>({2, 2}, {1, 0, 0, 1}));
  auto prod = tape.matmul(a, eye);
  CHECK(tape.val(prod).data == std::vector<float>{1, 2, 3, 4});

  // conv2d with an all-zero kernel
  Rng rng(1);
  auto x = tape.constant(random_tensor<float>({1, 1, 4, 4}, rng));
  auto w = tape.constant(Tensor<float>::zeros({3, 1, 3, 3}));
  auto b = tape.constant(Tensor<float>::zeros({3}));
  auto y = tape.conv2d(x, w, b);
  CHECK(tape.val(y).dims == std::vector<int>{1, 3, 4, 4});
  for (float v : tape.val(y).data) CHECK(v == 0.0f);

  // channel_concat(channel_split(x)) == x
  auto x4 = tape.constant(Tensor<float>({1, 4, 2, 2}, std::vector<float>(16, 0.5f)));
  auto [lo, hi] = tape.channel_split(x4);
  auto back = tape.channel_concat(lo, hi);
  CHECK(tape.val(back).data == tape.val(x4).data);
}

TEST_CASE("shape errors are descriptive") {
  Tape<float> tape;
  auto a = tape.constant(Tensor<float>({2, 3}, std::vector<float>(6, 1.f)));
  auto b = tape.constant(Tensor<float>({3, 2}, std::vector<float>(6, 1.f)));
  CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("(2,3)"), ShapeError);
  CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), ShapeError);
  auto c = tape.constant(Tensor<float>({2, 3}, std::vector<float>(6, 1.f)));
  CHECK_THROWS_AS(tape.matmul(a, c), ShapeError);
}

TEST_CASE("backward: analytic example f(x) = sum(x*x)") {
  Tape<double> tape;
  Tensor<double> x({3}, {1.0, -2.0, 3.0});
  x.requires_grad = true;
  auto xi = tape.input(x);
  auto out = tape.sum(tape.mul(xi, xi));
  tape.backward(out);
  CHECK(tape.grad(xi).data == std::vector<double>{2.0, -4.0, 6.0});
}

TEST_CASE("backward: non-scalar output is a contract error") {
  Tape<double> tape;
  Tensor<double> x({2}, {1.0, 2.0});
  x.requires_grad = true;
  auto xi = tape.input(x);
  auto y = tape.mul(xi, xi);
  CHECK_THROWS_AS(tape.backward(y), ContractError);
}

TEST_CASE("backward: non-grad constants are absent from the gradient map") {
  Tape<double> tape;
  Tensor<double> x({2}, {1.0, 2.0});
  x.requires_grad = true;
  auto xi = tape.input(x);
  auto c = tape.constant(Tensor<double>({2}, {5.0, 5.0}));
  auto out = tape.sum(tape.mul(xi, c));
  tape.backward(out);
  CHECK(tape.has_grad(xi));
  CHECK_FALSE(tape.has_grad(c));
  CHECK_THROWS_AS(tape.grad(c), ContractError);
}

TEST_CASE("gradient accumulates across multiple uses of a node") {
  Tape<double> tape;
  Tensor<double> x({2}, {1.5, -0.5});
  x.requires_grad = true;
  auto xi = tape.input(x);
  // f = sum(x + x) => df/dx = 2
  auto out = tape.sum(tape.add(xi, xi));
  tape.backward(out);
  CHECK(tape.grad(xi).data == std::vector<double>{2.0, 2.0});
}

TEST_CASE("FD oracle: elementwise, scalar and reduction ops") {
  Rng rng(101);
  auto x = random_tensor<double>({2, 3}, rng);
  auto y = random_tensor<double>({2, 3}, rng);

  check_gradients(
      [](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return t.sum(t.mul(t.add(in[0], in[1]), t.sub(in[0], in[1])));
      },
      {x, y});
  check_gradients(
      [](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return t.mean(t.add_scalar(t.scalar_mul(in[0], 1.7), -0.3));
      },
      {x});
  check_gradients(
      [](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return t.sum(t.tanh(in[0]));
      },
      {x});
  check_gradients(
      [](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return t.sum(t.exp(t.scalar_mul(in[0], 0.5)));
      },
      {x});
  // log and relu need inputs away from their singular points
  Tensor<double> pos({2, 2}, {0.7, 1.3, 2.1, 0.9});
  check_gradients(
      [](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return t.sum(t.log(in[0]));
      },
      {pos});
  Tensor<double> away({2, 2}, {0.8, -1.2, 1.5, -0.4});
  check_gradients(
      [](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return t.sum(t.relu(in[0]));
      },
      {away});
}

TEST_CASE("FD oracle: matmul") {
  Rng rng(13);
  check_gradients(
      [](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return t.sum(t.matmul(in[0], in[1]));
      },
      {random_tensor<double>({3, 4}, rng), random_tensor<double>({4, 2}, rng)});
}

TEST_CASE("FD oracle: conv2d 3x3 and 1x1 with bias") {
  Rng rng(17);
  // weighted sum output so every position contributes differently
  auto weighted = [](Tape<double>& t, Tape<double>::Id y) {
    Rng wrng(23);
    Tensor<double> w(t.val(y).dims);
    for (double& v : w.data) v = wrng.normal();
    return t.sum(t.mul(y, t.constant(std::move(w))));
  };
  check_gradients(
      [&](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return weighted(t, t.conv2d(in[0], in[1], in[2]));
      },
      {random_tensor<double>({2, 2, 4, 4}, rng), random_tensor<double>({3, 2, 3, 3}, rng),
       random_tensor<double>({3}, rng)});
  check_gradients(
      [&](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return weighted(t, t.conv2d(in[0], in[1], in[2]));
      },
      {random_tensor<double>({2, 3, 4, 4}, rng), random_tensor<double>({2, 3, 1, 1}, rng),
       random_tensor<double>({2}, rng)});
}

TEST_CASE("FD oracle: channel ops, squeeze, reshape, split/concat") {
  Rng rng(19);
  auto weighted = [](Tape<double>& t, Tape<double>::Id y) {
    Rng wrng(29);
    Tensor<double> w(t.val(y).dims);
    for (double& v : w.data) v = wrng.normal();
    return t.sum(t.mul(y, t.constant(std::move(w))));
  };
  check_gradients(
      [&](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return weighted(t, t.channel_scale(t.channel_add(in[0], in[1]), in[2]));
      },
      {random_tensor<double>({2, 4, 2, 2}, rng), random_tensor<double>({4}, rng),
       random_tensor<double>({4}, rng)});
  check_gradients(
      [&](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return weighted(t, t.squeeze2(in[0]));
      },
      {random_tensor<double>({1, 2, 4, 4}, rng)});
  check_gradients(
      [&](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return weighted(t, t.unsqueeze2(in[0]));
      },
      {random_tensor<double>({1, 8, 2, 2}, rng)});
  check_gradients(
      [&](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        auto [lo, hi] = t.channel_split(in[0]);
        return weighted(t, t.channel_concat(hi, lo));
      },
      {random_tensor<double>({2, 4, 2, 2}, rng)});
  check_gradients(
      [&](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return weighted(t, t.reshape(in[0], {4, 4}));
      },
      {random_tensor<double>({2, 2, 2, 2}, rng)});
}

TEST_CASE("FD oracle: mat_logabsdet") {
  Rng rng(31);
  // well-conditioned matrix: identity plus small noise
  Tensor<double> w({3, 3});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      w.data[static_cast<size_t>(i) * 3 + j] = (i == j ? 1.0 : 0.0) + 0.2 * rng.normal();
  check_gradients(
      [](Tape<double>& t, std::vector<Tape<double>::Id>& in) {
        return t.mat_logabsdet(in[0]);
      },
      {w});
}

TEST_CASE("mat_logabsdet matches the elimination oracle and rejects singular") {
  Rng rng(37);
  Tensor<double> w({4, 4});
  for (double& v : w.data) v = rng.normal();
  Tape<double> tape;
  auto ld = tape.mat_logabsdet(tape.constant(w));
  std::vector<double> copy(w.data.begin(), w.data.end());
  CHECK(rel_err(tape.val(ld).data[0], testutil::logabsdet_ref(copy, 4)) < 1e-10);

  Tensor<double> singular({2, 2}, {1.0, 2.0, 2.0, 4.0});
  Tape<double> t2;
  CHECK_THROWS_AS(t2.mat_logabsdet(t2.constant(singular)), DegeneracyError);
}

TEST_CASE("tape replay determinism") {
  auto run = [] {
    Rng rng(41);
    Tape<float> tape;
    auto x = tape.input(random_tensor<float>({2, 2, 4, 4}, rng, 1.0, true));
    auto w = tape.input(random_tensor<float>({4, 2, 3, 3}, rng, 0.3, true));
    auto b = tape.input(random_tensor<float>({4}, rng, 0.1, true));
    auto out = tape.sum(tape.tanh(tape.conv2d(x, w, b)));
    tape.backward(out);
    std::vector<float> result = tape.val(out).data;
    auto g = tape.grad(w).data;
    result.insert(result.end(), g.begin(), g.end());
    return result;
  };
  CHECK(run() == run());
}

TEST_CASE("backward never mutates forward values") {
  Rng rng(43);
  Tape<double> tape;
  auto x = tape.input(random_tensor<double>({2, 2, 2, 2}, rng, 1.0, true));
  auto y = tape.tanh(x);
  std::vector<double> before = tape.val(y).data;
  tape.backward(tape.sum(y));
  CHECK(tape.val(y).data == before);
}

TEST_CASE("adam: first-step magnitude is lr per element") {
  Tensor<float> p({3}, {1.0f, 2.0f, 3.0f});
  Tensor<float> g({3}, {10.0f, -5.0f, 0.5f});
  Adam<float> adam(1e-3);
  std::vector<float> before = p.data;
  adam.step({&p}, {&g});
  for (size_t i = 0; i < 3; ++i) {
    double delta = static_cast<double>(p.data[i]) - before[i];
    double want = -1e-3 * (g.data[i] / (std::fabs(static_cast<double>(g.data[i])) + 1e-8));
    CHECK(rel_err(delta, want, 1e-9) < 1e-4);
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor<float> p({2}, {1.0f, -1.0f});
  Tensor<float> g = Tensor<float>::zeros({2});
  Adam<float> adam(1e-2);
  auto before = p.data;
  for (int t = 0; t < 3; ++t) adam.step({&p}, {&g});
  CHECK(p.data == before);
}

TEST_CASE("adam: identical runs are bit-identical") {
  auto run = [] {
    Rng rng(47);
    Tensor<float> p = random_tensor<float>({8}, rng);
    Adam<float> adam(1e-3);
    for (int t = 0; t < 20; ++t) {
      Tensor<float> g = random_tensor<float>({8}, rng);
      adam.step({&p}, {&g});
    }
    return p.data;
  };
  CHECK(run() == run());
}

TEST_CASE("adam: shape mismatch rejected") {
  Tensor<float> p({2}, {1.0f, 2.0f});
  Tensor<float> g({3}, {1.0f, 2.0f, 3.0f});
  Adam<float> adam;
  CHECK_THROWS_AS(adam.step({&p}, {&g}), ShapeError);
}
