#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace zsar {

// Dense row-major tensor. The checked constructors reject non-finite values
// and non-positive extents; tape operations build results through the
// unchecked path since they preserve finiteness themselves.
//
// fp64 is the default scalar; a float instantiation is provided for runs
// that trade gradient-check precision for memory.
template <typename T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(std::vector<std::size_t> shape);
  TensorT(std::vector<std::size_t> shape, std::vector<T> data);

  static TensorT unchecked(std::vector<std::size_t> shape, std::vector<T> data);
  static TensorT row_matrix(std::vector<T> values);  // 1 x n

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }

  // 2-d helpers; a 1-d tensor counts as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& at(std::size_t r, std::size_t c);
  T at(std::size_t r, std::size_t c) const;

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }
  void fill(T v);
  bool all_finite() const;

  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<double>;

}  // namespace zsar
