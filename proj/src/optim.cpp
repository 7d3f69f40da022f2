#include "zsar/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace zsar {

template <typename T>
AdamStateT<T>::AdamStateT(std::span<ParameterT<T>* const> params, T base_learning_rate)
    : base_lr(base_learning_rate) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto* p : params) {
    m.emplace_back(p->value.shape());
    v.emplace_back(p->value.shape());
  }
}

template <typename T>
void adam_step(std::span<ParameterT<T>* const> params, AdamStateT<T>& state, T lr) {
  if (params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter list does not match optimizer state");
  }
  state.step += 1;
  const T bc1 = T(1) - std::pow(state.beta1, T(state.step));
  const T bc2 = T(1) - std::pow(state.beta2, T(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParameterT<T>& p = *params[i];
    if (!p.value.same_shape(state.m[i])) {
      throw std::invalid_argument("adam_step: shape of '" + p.name + "' changed under the state");
    }
    T* val = p.value.data();
    const T* g = p.grad.data();
    T* mm = state.m[i].data();
    T* vv = state.v[i].data();
    for (std::size_t j = 0; j < p.value.numel(); ++j) {
      mm[j] = state.beta1 * mm[j] + (T(1) - state.beta1) * g[j];
      vv[j] = state.beta2 * vv[j] + (T(1) - state.beta2) * g[j] * g[j];
      const T mhat = mm[j] / bc1;
      const T vhat = vv[j] / bc2;
      val[j] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    p.zero_grad();
  }
}

double lr_schedule(double base_lr, std::size_t epoch) {
  return std::ldexp(base_lr, -static_cast<int>(epoch / 5));
}

GradientCheckReport gradient_check(const std::function<double()>& loss_fn,
                                   std::span<Parameter* const> params, double eps,
                                   std::size_t max_components, std::uint64_t seed) {
  if (eps <= 0) throw std::invalid_argument("gradient_check: eps must be positive");
  std::mt19937_64 rng(seed);
  GradientCheckReport rep;
  for (Parameter* p : params) {
    const std::size_t n = p->value.numel();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n > max_components) {
      // Fisher-Yates prefix: a distinct sample of max_components entries.
      for (std::size_t i = 0; i < max_components; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      idx.resize(max_components);
    }
    for (std::size_t j : idx) {
      double* slot = p->value.data() + j;
      const double orig = *slot;
      *slot = orig + eps;
      const double f_plus = loss_fn();
      *slot = orig - eps;
      const double f_minus = loss_fn();
      *slot = orig;
      const double fd = (f_plus - f_minus) / (2.0 * eps);
      const double ad = p->grad.data()[j];
      const double denom = std::max({1.0, std::abs(fd), std::abs(ad)});
      const double rel = std::abs(fd - ad) / denom;
      ++rep.components_checked;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_parameter = p->name;
        rep.worst_component = j;
      }
    }
  }
  return rep;
}

template struct AdamStateT<float>;
template struct AdamStateT<double>;
template void adam_step<float>(std::span<ParameterT<float>* const>, AdamStateT<float>&, float);
template void adam_step<double>(std::span<ParameterT<double>* const>, AdamStateT<double>&, double);

}  // namespace zsar
