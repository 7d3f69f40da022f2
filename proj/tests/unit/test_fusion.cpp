#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "zsar/autodiff.hpp"
#include "zsar/errors.hpp"
#include "zsar/fusion.hpp"
#include "zsar/optim.hpp"

using zsar::AttentionParams;
using zsar::FusionMode;
using zsar::NodeId;
using zsar::Parameter;
using zsar::Tape;
using zsar::Tensor;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

void set_identity(Parameter& p) {
  const std::size_t n = p.value.rows();
  p.value.fill(0.0);
  for (std::size_t i = 0; i < n; ++i) p.value.at(i, i) = 1.0;
}

}  // namespace

TEST_CASE("tokenize_vector reshapes and round-trips") {
  std::vector<double> v(12);
  for (std::size_t i = 0; i < 12; ++i) v[i] = static_cast<double>(i);

  Tensor one = zsar::tokenize_vector(v, 1);
  CHECK(one.rows() == 1);
  CHECK(one.cols() == 12);

  Tensor full = zsar::tokenize_vector(v, 12);
  CHECK(full.rows() == 12);
  CHECK(full.cols() == 1);

  for (std::size_t s : {1u, 2u, 3u, 4u, 6u, 12u}) {
    Tensor t = zsar::tokenize_vector(v, s);
    CHECK(t.values() == v);  // row-major reshape: flatten is the identity
  }
  CHECK_THROWS_AS(zsar::tokenize_vector(v, 5), std::invalid_argument);

  std::vector<double> wide(300, 0.25);
  Tensor column = zsar::tokenize_vector(wide, 300);
  CHECK(column.rows() == 300);
  CHECK(column.cols() == 1);
  CHECK(zsar::tokenize_vector(wide, 10).rows() == 10);
}

TEST_CASE("attention params validate the token count") {
  std::mt19937_64 rng(3);
  CHECK_THROWS_AS(zsar::make_attention_params(300, 7, 0, rng), zsar::ConfigError);
  auto p = zsar::make_attention_params(300, 10, 0, rng);
  CHECK(p.token_dim == 30);
  CHECK(p.key_dim == 30);
  auto p2 = zsar::make_attention_params(300, 10, 16, rng);
  CHECK(p2.key_dim == 16);
}

TEST_CASE("single-token attention reduces to the value projections, exactly") {
  std::mt19937_64 rng(17);
  const std::size_t dim = 6;
  auto p = zsar::make_attention_params(dim, 1, 0, rng);
  auto visual = random_vec(dim, rng);
  auto object = random_vec(dim, rng);

  Tape tape;
  NodeId v = tape.constant(Tensor::row_matrix(visual));
  NodeId o = tape.constant(Tensor::row_matrix(object));
  auto att = zsar::mutual_attention(tape, p, v, o);

  CHECK(tape.value(att.weights_on_visual).values()[0] == 1.0);
  CHECK(tape.value(att.weights_on_object).values()[0] == 1.0);

  // f_v projected by the visual value matrix, computed directly
  auto expect_v = oracle::matmul(visual, 1, dim, p.value_visual.value.values(), dim);
  auto expect_o = oracle::matmul(object, 1, dim, p.value_object.value.values(), dim);
  CHECK(tape.value(att.visual_attended).values() == expect_v);
  CHECK(tape.value(att.object_attended).values() == expect_o);
}

TEST_CASE("equal tokens force uniform attention weights") {
  std::mt19937_64 rng(23);
  const std::size_t dim = 8;
  auto p = zsar::make_attention_params(dim, 2, 0, rng);
  for (auto* param : p.parameters()) set_identity(*param);

  auto half = random_vec(4, rng);
  std::vector<double> visual;
  visual.insert(visual.end(), half.begin(), half.end());
  visual.insert(visual.end(), half.begin(), half.end());  // two equal tokens
  auto object = random_vec(dim, rng);

  Tape tape;
  auto att = zsar::mutual_attention(tape, p, tape.constant(Tensor::row_matrix(visual)),
                                    tape.constant(Tensor::row_matrix(object)));
  // visual keys are equal, so every score row is constant: weights 0.5/0.5
  const Tensor& w = tape.value(att.weights_on_visual);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(w.values()[i] == doctest::Approx(0.5).epsilon(1e-15));
  }
  // identity value projection of equal tokens reproduces them
  CHECK(tape.value(att.visual_attended).values()[0] == doctest::Approx(half[0]).epsilon(1e-15));
  CHECK(tape.value(att.visual_attended).values()[4] == doctest::Approx(half[0]).epsilon(1e-15));
}

TEST_CASE("attention weight rows sum to one") {
  std::mt19937_64 rng(29);
  const std::size_t dim = 12;
  for (std::size_t s : {1u, 2u, 3u, 4u, 6u}) {
    auto p = zsar::make_attention_params(dim, s, 0, rng);
    Tape tape;
    auto att = zsar::mutual_attention(tape, p,
                                      tape.constant(Tensor::row_matrix(random_vec(dim, rng))),
                                      tape.constant(Tensor::row_matrix(random_vec(dim, rng))));
    for (NodeId w : {att.weights_on_visual, att.weights_on_object}) {
      const Tensor& wt = tape.value(w);
      for (std::size_t r = 0; r < s; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < s; ++c) sum += wt.at(r, c);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("mutual attention matches the step-by-step oracle") {
  std::mt19937_64 rng(37);
  const std::size_t dim = 12;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t s = std::vector<std::size_t>{1, 2, 4}[trial % 3];
    auto p = zsar::make_attention_params(dim, s, 0, rng);
    auto visual = random_vec(dim, rng);
    auto object = random_vec(dim, rng);

    Tape tape;
    auto att = zsar::mutual_attention(tape, p, tape.constant(Tensor::row_matrix(visual)),
                                      tape.constant(Tensor::row_matrix(object)));
    auto want = oracle::mutual_attention(p, visual, object);
    for (std::size_t i = 0; i < dim; ++i) {
      CHECK(tape.value(att.visual_attended).values()[i] ==
            doctest::Approx(want.visual_attended[i]).epsilon(1e-10));
      CHECK(tape.value(att.object_attended).values()[i] ==
            doctest::Approx(want.object_attended[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("fuse_add") {
  Tape tape;
  NodeId a = tape.constant(Tensor::row_matrix({1, 2}));
  NodeId b = tape.constant(Tensor::row_matrix({3, 4}));
  CHECK(tape.value(zsar::fuse_add(tape, a, b)).values() == std::vector<double>{4, 6});

  NodeId zero = tape.constant(Tensor::row_matrix({0, 0}));
  CHECK(tape.value(zsar::fuse_add(tape, a, zero)).values() == std::vector<double>{1, 2});

  CHECK(tape.value(zsar::fuse_add(tape, a, b)).values() ==
        tape.value(zsar::fuse_add(tape, b, a)).values());
}

TEST_CASE("ablation fusions") {
  Tape tape;
  NodeId v = tape.constant(Tensor::row_matrix({1, 2}));
  NodeId o = tape.constant(Tensor::row_matrix({3, 4}));

  CHECK(tape.value(zsar::fuse_ablation(tape, v, o, FusionMode::multiply, nullptr)).values() ==
        std::vector<double>{3, 8});
  CHECK(tape.value(zsar::fuse_ablation(tape, v, o, FusionMode::add, nullptr)).values() ==
        std::vector<double>{4, 6});

  // projection [I; 0] recovers the visual feature from the concatenation
  Parameter proj("concat_proj", Tensor({4, 2}));
  proj.value.at(0, 0) = 1.0;
  proj.value.at(1, 1) = 1.0;
  CHECK(tape.value(zsar::fuse_ablation(tape, v, o, FusionMode::concat, &proj)).values() ==
        std::vector<double>{1, 2});

  CHECK_THROWS_AS(zsar::fuse_ablation(tape, v, o, FusionMode::concat, nullptr),
                  zsar::ConfigError);
  CHECK_THROWS_AS(zsar::fuse_ablation(tape, v, o, FusionMode::cross_attention, nullptr),
                  std::invalid_argument);
}

TEST_CASE("fusion mode names round trip") {
  for (auto m : {FusionMode::multiply, FusionMode::concat, FusionMode::add,
                 FusionMode::cross_attention}) {
    CHECK(zsar::fusion_mode_from_string(zsar::to_string(m)) == m);
  }
  CHECK_THROWS_AS(zsar::fusion_mode_from_string("sum"), zsar::ConfigError);
}

TEST_CASE("attention projections pass the finite-difference check") {
  std::mt19937_64 rng(43);
  const std::size_t dim = 12;
  auto p = zsar::make_attention_params(dim, 4, 0, rng);
  auto visual = random_vec(dim, rng);
  auto object = random_vec(dim, rng);
  auto target = random_vec(dim, rng);

  auto forward = [&]() {
    Tape tape;
    auto att = zsar::mutual_attention(tape, p, tape.constant(Tensor::row_matrix(visual)),
                                      tape.constant(Tensor::row_matrix(object)));
    NodeId fused = zsar::fuse_add(tape, att.visual_attended, att.object_attended);
    NodeId loss = tape.squared_l2_loss(fused, tape.constant(Tensor::row_matrix(target)));
    return tape.value(loss).values()[0];
  };
  {
    Tape tape;
    auto att = zsar::mutual_attention(tape, p, tape.constant(Tensor::row_matrix(visual)),
                                      tape.constant(Tensor::row_matrix(object)));
    NodeId fused = zsar::fuse_add(tape, att.visual_attended, att.object_attended);
    NodeId loss = tape.squared_l2_loss(fused, tape.constant(Tensor::row_matrix(target)));
    tape.backward(loss);
  }
  auto params = p.parameters();
  auto report = zsar::gradient_check(forward, std::span<Parameter* const>(params), 1e-5, 100, 7);
  CAPTURE(report.worst_parameter);
  CHECK(report.max_rel_error < 1e-4);
  CHECK(report.max_rel_error < 1e-7);  // expected headroom in fp64
}
