#include <doctest.h>

#include <cmath>
#include <random>

#include "zsar/autodiff.hpp"
#include "zsar/optim.hpp"

using zsar::AdamState;
using zsar::Parameter;
using zsar::Tape;
using zsar::Tensor;

TEST_CASE("adam first step against the hand recurrence") {
  Parameter p("p", Tensor({1}, {1.0}));
  p.grad.values()[0] = 1.0;
  std::vector<Parameter*> params = {&p};
  AdamState st(std::span<Parameter* const>(params), 0.1);
  zsar::adam_step(std::span<Parameter* const>(params), st, 0.1);

  // Independent recurrence: m = 0.1, v = 0.001, mhat = 1, vhat = 1.
  const double m = (1.0 - 0.9) * 1.0;
  const double v = (1.0 - 0.999) * 1.0;
  const double mhat = m / (1.0 - 0.9);
  const double vhat = v / (1.0 - 0.999);
  const double expected = 1.0 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
  CHECK(p.value.values()[0] == doctest::Approx(expected).epsilon(1e-15));
  CHECK(p.value.values()[0] - 1.0 == doctest::Approx(-0.09999999).epsilon(1e-7));
  CHECK(st.step == 1);
  CHECK(p.grad.values()[0] == 0.0);  // grads zeroed after the step
}

TEST_CASE("zero gradient leaves a fresh parameter bit-identical") {
  Parameter p("p", Tensor({3}, {1.5, -2.0, 0.25}));
  std::vector<Parameter*> params = {&p};
  AdamState st(std::span<Parameter* const>(params), 0.1);
  zsar::adam_step(std::span<Parameter* const>(params), st, 0.1);
  CHECK(p.value.values() == std::vector<double>{1.5, -2.0, 0.25});
}

TEST_CASE("only the parameter with gradient moves on step one") {
  Parameter a("a", Tensor({1}, {1.0}));
  Parameter b("b", Tensor({1}, {1.0}));
  a.grad.values()[0] = 0.5;
  std::vector<Parameter*> params = {&a, &b};
  AdamState st(std::span<Parameter* const>(params), 0.01);
  zsar::adam_step(std::span<Parameter* const>(params), st, 0.01);
  CHECK(a.value.values()[0] != 1.0);
  CHECK(b.value.values()[0] == 1.0);
}

TEST_CASE("multi-step adam matches an independent reference loop") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Parameter p("p", Tensor({4}, {0.3, -0.7, 1.1, 0.0}));
  std::vector<Parameter*> params = {&p};
  AdamState st(std::span<Parameter* const>(params), 0.05);

  std::vector<double> ref = p.value.values();
  std::vector<double> m(4, 0.0), v(4, 0.0);
  for (int step = 1; step <= 7; ++step) {
    std::vector<double> g(4);
    for (auto& x : g) x = dist(rng);
    for (std::size_t i = 0; i < 4; ++i) p.grad.values()[i] = g[i];
    zsar::adam_step(std::span<Parameter* const>(params), st, 0.05);
    for (std::size_t i = 0; i < 4; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mhat = m[i] / (1.0 - std::pow(0.9, step));
      const double vhat = v[i] / (1.0 - std::pow(0.999, step));
      ref[i] -= 0.05 * mhat / (std::sqrt(vhat) + 1e-8);
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(p.value.values()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("lr schedule halves every five epochs, exactly") {
  CHECK(zsar::lr_schedule(1e-4, 0) == 1e-4);
  CHECK(zsar::lr_schedule(1e-4, 4) == 1e-4);
  CHECK(zsar::lr_schedule(1e-4, 5) == 5e-5);
  CHECK(zsar::lr_schedule(1e-4, 9) == 5e-5);
  CHECK(zsar::lr_schedule(1e-4, 10) == 2.5e-5);
}

TEST_CASE("lr schedule is monotone non-increasing") {
  double prev = zsar::lr_schedule(3e-3, 0);
  for (std::size_t epoch = 1; epoch <= 60; ++epoch) {
    const double cur = zsar::lr_schedule(3e-3, epoch);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("gradient check on a quadratic is near exact") {
  Parameter w("w", Tensor({1, 2}, {1.0, 2.0}));
  auto forward = [&]() {
    Tape tape;
    zsar::NodeId loss =
        tape.squared_l2_loss(tape.leaf(w), tape.constant(Tensor({1, 2}, {0, 0})));
    return tape.value(loss).values()[0];
  };
  {
    Tape tape;
    zsar::NodeId loss =
        tape.squared_l2_loss(tape.leaf(w), tape.constant(Tensor({1, 2}, {0, 0})));
    tape.backward(loss);
  }
  std::vector<Parameter*> params = {&w};
  auto report = zsar::gradient_check(forward, std::span<Parameter* const>(params));
  CHECK(report.max_rel_error < 1e-9);
  CHECK(report.components_checked == 2);
}

TEST_CASE("gradient check samples at most the component budget") {
  std::mt19937_64 rng(5);
  Parameter w = zsar::uniform_parameter<double>("w", {30, 30}, 30, rng);
  auto forward = [&]() {
    Tape tape;
    zsar::NodeId loss =
        tape.squared_l2_loss(tape.leaf(w), tape.constant(Tensor({30, 30})));
    return tape.value(loss).values()[0];
  };
  {
    Tape tape;
    zsar::NodeId loss =
        tape.squared_l2_loss(tape.leaf(w), tape.constant(Tensor({30, 30})));
    tape.backward(loss);
  }
  std::vector<Parameter*> params = {&w};
  auto report =
      zsar::gradient_check(forward, std::span<Parameter* const>(params), 1e-5, 100, 17);
  CHECK(report.components_checked == 100);
  CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("relu kinks probed away from zero pass the gradient check") {
  // pre-activations are kept at least 10*eps away from the kink
  Parameter w("w", Tensor({1, 4}, {0.5, -0.5, 0.25, -0.25}));
  const Tensor x({4, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1, 0.5, 0.5, 0.5});
  auto forward = [&]() {
    Tape tape;
    zsar::NodeId h = tape.relu(tape.matmul(tape.leaf(w), tape.constant(Tensor({4, 3}, x.values()))));
    zsar::NodeId loss = tape.squared_l2_loss(h, tape.constant(Tensor({1, 3}, {1, 1, 1})));
    return tape.value(loss).values()[0];
  };
  {
    Tape tape;
    zsar::NodeId h = tape.relu(tape.matmul(tape.leaf(w), tape.constant(Tensor({4, 3}, x.values()))));
    zsar::NodeId loss = tape.squared_l2_loss(h, tape.constant(Tensor({1, 3}, {1, 1, 1})));
    tape.backward(loss);
  }
  std::vector<Parameter*> params = {&w};
  auto report = zsar::gradient_check(forward, std::span<Parameter* const>(params), 1e-5);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("float instantiation of adam runs") {
  zsar::ParameterT<float> p("p", zsar::TensorT<float>({2}, {1.f, 2.f}));
  p.grad.values()[0] = 1.f;
  std::vector<zsar::ParameterT<float>*> params = {&p};
  zsar::AdamStateT<float> st(std::span<zsar::ParameterT<float>* const>(params), 0.1f);
  zsar::adam_step(std::span<zsar::ParameterT<float>* const>(params), st, 0.1f);
  CHECK(p.value.values()[0] < 1.f);
  CHECK(p.value.values()[1] == 2.f);
}
