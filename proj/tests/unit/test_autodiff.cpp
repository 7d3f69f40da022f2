#include <doctest.h>

#include <cmath>
#include <random>

#include "zsar/autodiff.hpp"
#include "zsar/errors.hpp"
#include "zsar/optim.hpp"

using zsar::NodeId;
using zsar::Parameter;
using zsar::Tape;
using zsar::Tensor;

TEST_CASE("linear forward") {
  Tape tape;
  Parameter w("w", Tensor({2, 2}, {1, 0, 0, 1}));
  Parameter b("b", Tensor({2}, {0, 0}));
  NodeId x = tape.constant(Tensor({1, 2}, {1, 2}));
  NodeId y = tape.linear(x, tape.leaf(w), tape.leaf(b));
  CHECK(tape.value(y).at(0, 0) == 1.0);
  CHECK(tape.value(y).at(0, 1) == 2.0);

  Tape t2;
  Parameter w2("w", Tensor({2, 2}, {2, 0, 0, 3}));
  Parameter b2("b", Tensor({2}, {1, 1}));
  NodeId x2 = t2.constant(Tensor({1, 2}, {1, 1}));
  NodeId y2 = t2.linear(x2, t2.leaf(w2), t2.leaf(b2));
  CHECK(t2.value(y2).at(0, 0) == 3.0);
  CHECK(t2.value(y2).at(0, 1) == 4.0);
}

TEST_CASE("linear shape mismatch") {
  Tape tape;
  Parameter w("w", Tensor({2, 2}, {1, 0, 0, 1}));
  Parameter b("b", Tensor({2}, {0, 0}));
  NodeId x = tape.constant(Tensor({1, 3}, {1, 2, 3}));
  CHECK_THROWS_AS(tape.linear(x, tape.leaf(w), tape.leaf(b)), std::invalid_argument);
}

TEST_CASE("relu forward and gradient") {
  Tape tape;
  Parameter p("p", Tensor({3}, {-1, 0, 2}));
  NodeId y = tape.relu(tape.leaf(p));
  CHECK(tape.value(y).values() == std::vector<double>{0, 0, 2});

  // d/dx mean-row loss of ||0 - relu(x)||^2 = 2 relu(x) relu'(x)
  NodeId loss = tape.squared_l2_loss(y, tape.constant(Tensor({3}, {0, 0, 0})));
  tape.backward(loss);
  CHECK(p.grad.values()[0] == 0.0);  // x = -1: derivative 0
  CHECK(p.grad.values()[1] == 0.0);  // x = 0: derivative defined as 0
  CHECK(p.grad.values()[2] == 4.0);  // x = 2: 2 * 2 * 1
}

TEST_CASE("relu all-negative goes to zero") {
  Tape tape;
  NodeId y = tape.relu(tape.constant(Tensor({4}, {-5, -1, -0.5, -100})));
  for (double v : tape.value(y).values()) CHECK(v == 0.0);
}

TEST_CASE("softmax rows") {
  Tape tape;
  NodeId one = tape.softmax_rows(tape.constant(Tensor({1, 1}, {5})));
  CHECK(tape.value(one).values()[0] == 1.0);

  NodeId sym = tape.softmax_rows(tape.constant(Tensor({1, 2}, {0, 0})));
  CHECK(tape.value(sym).values()[0] == doctest::Approx(0.5).epsilon(1e-15));

  NodeId skew =
      tape.softmax_rows(tape.constant(Tensor({1, 2}, {std::log(1.0), std::log(3.0)})));
  CHECK(tape.value(skew).values()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(tape.value(skew).values()[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and stay positive") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-30.0, 30.0);
  Tape tape;
  Tensor x({8, 13});
  for (auto& v : x.values()) v = dist(rng);
  NodeId y = tape.softmax_rows(tape.constant(x));
  for (std::size_t r = 0; r < 8; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 13; ++c) {
      const double v = tape.value(y).at(r, c);
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax shift invariance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  Tensor x({3, 5});
  for (auto& v : x.values()) v = dist(rng);
  Tensor shifted = x;
  for (std::size_t r = 0; r < 3; ++r) {
    const double c = dist(rng);
    for (std::size_t j = 0; j < 5; ++j) shifted.at(r, j) += c;
  }
  Tape tape;
  NodeId a = tape.softmax_rows(tape.constant(x));
  NodeId b = tape.softmax_rows(tape.constant(shifted));
  for (std::size_t i = 0; i < 15; ++i) {
    CHECK(tape.value(a).values()[i] ==
          doctest::Approx(tape.value(b).values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("squared l2 loss values") {
  Tape tape;
  NodeId same = tape.squared_l2_loss(tape.constant(Tensor({1, 2}, {3, 4})),
                                     tape.constant(Tensor({1, 2}, {3, 4})));
  CHECK(tape.value(same).values()[0] == 0.0);

  NodeId single = tape.squared_l2_loss(tape.constant(Tensor({1, 2}, {0, 0})),
                                       tape.constant(Tensor({1, 2}, {3, 4})));
  CHECK(tape.value(single).values()[0] == 25.0);

  // rows with losses 25 and 1 -> batch mean 13
  NodeId two = tape.squared_l2_loss(tape.constant(Tensor({2, 2}, {0, 0, 0, 0})),
                                    tape.constant(Tensor({2, 2}, {3, 4, 1, 0})));
  CHECK(tape.value(two).values()[0] == 13.0);

  CHECK_THROWS_AS(tape.squared_l2_loss(tape.constant(Tensor({1, 2}, {0, 0})),
                                       tape.constant(Tensor({1, 3}, {0, 0, 0}))),
                  std::invalid_argument);
}

TEST_CASE("backward on a squared norm") {
  Tape tape;
  Parameter w("w", Tensor({1, 2}, {1, 2}));
  NodeId loss =
      tape.squared_l2_loss(tape.leaf(w), tape.constant(Tensor({1, 2}, {0, 0})));
  tape.backward(loss);
  CHECK(w.grad.values()[0] == 2.0);
  CHECK(w.grad.values()[1] == 4.0);
}

TEST_CASE("non-participating parameters keep zero grads") {
  Tape tape;
  Parameter w("w", Tensor({1, 2}, {1, 2}));
  Parameter unused("unused", Tensor({1, 2}, {5, 5}));
  tape.leaf(unused);
  NodeId loss =
      tape.squared_l2_loss(tape.leaf(w), tape.constant(Tensor({1, 2}, {0, 0})));
  tape.backward(loss);
  CHECK(unused.grad.values()[0] == 0.0);
  CHECK(unused.grad.values()[1] == 0.0);
}

TEST_CASE("backward twice is a stale-graph error") {
  Tape tape;
  Parameter w("w", Tensor({1, 1}, {2}));
  NodeId loss = tape.squared_l2_loss(tape.leaf(w), tape.constant(Tensor({1, 1}, {0})));
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), std::logic_error);
}

TEST_CASE("repeated leaf of one parameter reuses the node") {
  Tape tape;
  Parameter w("w", Tensor({1, 1}, {3}));
  NodeId a = tape.leaf(w);
  NodeId b = tape.leaf(w);
  CHECK(a.index == b.index);
  // y = w * w -> dy/dw = 2w = 6
  NodeId y = tape.mul(a, b);
  NodeId loss = tape.squared_l2_loss(y, tape.constant(Tensor({1, 1}, {0})));
  // loss = w^4, dloss/dw = 4 w^3 = 108
  tape.backward(loss);
  CHECK(w.grad.values()[0] == doctest::Approx(108.0).epsilon(1e-12));
}

// Every tape operation composed into one graph, checked against central
// finite differences.
namespace {

double composed_forward(Parameter& w1, Parameter& b1, Parameter& w2, Parameter& w3,
                        const Tensor& x, const Tensor& target) {
  Tape tape;
  NodeId xin = tape.constant(x);
  NodeId h = tape.relu(tape.linear(xin, tape.leaf(w1), tape.leaf(b1)));  // 3 x 4
  NodeId m = tape.mul(tape.row(h, 0), tape.row(h, 1));                   // 1 x 4
  NodeId cat = tape.concat_cols(m, tape.row(h, 2));                      // 1 x 8
  NodeId resh = tape.reshape(cat, {2, 4});
  NodeId soft = tape.softmax_rows(tape.scale(resh, 0.7));                // 2 x 4
  NodeId q = tape.matmul(soft, tape.leaf(w2));                           // 2 x 5
  NodeId qt = tape.matmul_transposed(q, tape.leaf(w3));                  // 2 x 2
  NodeId st = tape.stack_rows({tape.row(qt, 0), tape.row(qt, 1)});       // 2 x 2
  NodeId loss = tape.squared_l2_loss(st, tape.constant(target));
  return tape.value(loss).values()[0];
}

}  // namespace

TEST_CASE("composed graph matches central finite differences") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto rand_tensor = [&](std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = dist(rng);
    return t;
  };
  Parameter w1("w1", rand_tensor({4, 4}));
  Parameter b1("b1", rand_tensor({4}));
  Parameter w2("w2", rand_tensor({4, 5}));
  Parameter w3("w3", rand_tensor({2, 5}));
  Tensor x = rand_tensor({3, 4});
  Tensor target = rand_tensor({2, 2});

  // analytic grads
  {
    Tape tape;
    NodeId xin = tape.constant(x);
    NodeId h = tape.relu(tape.linear(xin, tape.leaf(w1), tape.leaf(b1)));
    NodeId m = tape.mul(tape.row(h, 0), tape.row(h, 1));
    NodeId cat = tape.concat_cols(m, tape.row(h, 2));
    NodeId resh = tape.reshape(cat, {2, 4});
    NodeId soft = tape.softmax_rows(tape.scale(resh, 0.7));
    NodeId q = tape.matmul(soft, tape.leaf(w2));
    NodeId qt = tape.matmul_transposed(q, tape.leaf(w3));
    NodeId st = tape.stack_rows({tape.row(qt, 0), tape.row(qt, 1)});
    NodeId loss = tape.squared_l2_loss(st, tape.constant(target));
    tape.backward(loss);
  }

  std::vector<Parameter*> params = {&w1, &b1, &w2, &w3};
  auto report = zsar::gradient_check(
      [&]() { return composed_forward(w1, b1, w2, w3, x, target); },
      std::span<Parameter* const>(params), 1e-5, 100, 99);
  CAPTURE(report.worst_parameter);
  CHECK(report.max_rel_error < 1e-6);
}
