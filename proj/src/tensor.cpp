#include "zsar/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "zsar/errors.hpp"

namespace zsar {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

void check_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor shape must not be empty");
  for (auto e : shape) {
    if (e == 0) throw std::invalid_argument("tensor extents must be positive");
  }
}

}  // namespace

template <typename T>
TensorT<T>::TensorT(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_product(shape_), T(0));
}

template <typename T>
TensorT<T>::TensorT(std::vector<std::size_t> shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_product(shape_)) {
    std::ostringstream os;
    os << "tensor data length " << data_.size() << " does not match shape " << shape_str();
    throw std::invalid_argument(os.str());
  }
  if (!all_finite()) throw NumericError("tensor rejects non-finite values at construction");
}

template <typename T>
TensorT<T> TensorT<T>::unchecked(std::vector<std::size_t> shape, std::vector<T> data) {
  TensorT t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

template <typename T>
TensorT<T> TensorT<T>::row_matrix(std::vector<T> values) {
  const std::size_t n = values.size();
  return TensorT({1, n}, std::move(values));
}

template <typename T>
std::size_t TensorT<T>::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() == 2) return shape_[0];
  throw std::invalid_argument("rows(): tensor is not 1-d or 2-d: " + shape_str());
}

template <typename T>
std::size_t TensorT<T>::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() == 2) return shape_[1];
  throw std::invalid_argument("cols(): tensor is not 1-d or 2-d: " + shape_str());
}

template <typename T>
T& TensorT<T>::at(std::size_t r, std::size_t c) {
  return data_[r * cols() + c];
}

template <typename T>
T TensorT<T>::at(std::size_t r, std::size_t c) const {
  return data_[r * cols() + c];
}

template <typename T>
void TensorT<T>::fill(T v) {
  for (auto& x : data_) x = v;
}

template <typename T>
bool TensorT<T>::all_finite() const {
  for (const auto& x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

template <typename T>
std::string TensorT<T>::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

template class TensorT<float>;
template class TensorT<double>;

}  // namespace zsar
