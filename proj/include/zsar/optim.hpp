#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "zsar/autodiff.hpp"
#include "zsar/tensor.hpp"

namespace zsar {

// Adam with bias correction. Moment accumulators are aligned with the
// parameter list the state was built from.
template <typename T>
struct AdamStateT {
  std::int64_t step = 0;
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
  T base_lr = T(1e-4);
  std::vector<TensorT<T>> m;
  std::vector<TensorT<T>> v;

  AdamStateT() = default;
  AdamStateT(std::span<ParameterT<T>* const> params, T base_learning_rate);
};

using AdamState = AdamStateT<double>;

// One Adam update at learning rate lr; zeroes the gradients afterwards.
template <typename T>
void adam_step(std::span<ParameterT<T>* const> params, AdamStateT<T>& state, T lr);

// base_lr * 0.5^floor(epoch / 5); exact (power-of-two scaling).
double lr_schedule(double base_lr, std::size_t epoch);

struct GradientCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_component = 0;
  std::size_t components_checked = 0;
};

// Central-difference check of the analytic gradients already stored in the
// parameters. loss_fn must be a pure forward evaluation of the same loss
// whose backward pass populated the grads; it must not touch them.
// Components are compared as |ad - fd| / max(1, |ad|, |fd|); per parameter,
// all components are probed up to max_components, then a seeded sample.
GradientCheckReport gradient_check(const std::function<double()>& loss_fn,
                                   std::span<Parameter* const> params, double eps = 1e-5,
                                   std::size_t max_components = 100,
                                   std::uint64_t seed = 0x5eedull);

}  // namespace zsar
