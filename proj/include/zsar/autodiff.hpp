#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "zsar/tensor.hpp"

namespace zsar {

// A named trainable tensor with a gradient accumulator of the same shape.
template <typename T>
struct ParameterT {
  std::string name;
  TensorT<T> value;
  TensorT<T> grad;

  ParameterT() = default;
  ParameterT(std::string n, TensorT<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }
};

using Parameter = ParameterT<double>;

// Weight init: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
template <typename T>
ParameterT<T> uniform_parameter(std::string name, std::vector<std::size_t> shape,
                                std::size_t fan_in, std::mt19937_64& rng);

template <typename T>
ParameterT<T> zero_parameter(std::string name, std::vector<std::size_t> shape);

// Handle to a value recorded on a tape.
struct NodeId {
  std::size_t index = 0;
};

// Reverse-mode tape over dense tensors. Operations record a pull closure
// that scatters the node gradient into its parents; backward() runs the
// closures in reverse creation order (a valid topological order).
//
// A tape is single-use: backward() consumes it and a second call is a
// stale-graph error. Confined to one thread for the duration of a step.
template <typename T>
class TapeT {
 public:
  using Tensor = TensorT<T>;
  using Parameter = ParameterT<T>;

  // Leaves.
  NodeId constant(Tensor value);
  NodeId leaf(Parameter& p);  // repeated leaf() of one parameter reuses the node

  // y[r] = x[r] . W + b  with x: B x I, w: I x O, b: O
  NodeId linear(NodeId x, NodeId w, NodeId b);
  NodeId matmul(NodeId a, NodeId b);             // M x K . K x N
  NodeId matmul_transposed(NodeId a, NodeId b);  // M x K . (N x K)^T
  NodeId relu(NodeId x);                         // derivative at 0 is 0
  NodeId softmax_rows(NodeId x);                 // max-subtracted, rows sum to 1
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId x, T factor);
  NodeId concat_cols(NodeId a, NodeId b);
  NodeId reshape(NodeId x, std::vector<std::size_t> shape);
  NodeId row(NodeId x, std::size_t index);  // 1 x C slice
  NodeId stack_rows(const std::vector<NodeId>& rows);

  // Mean over rows of the squared euclidean distance between pred and
  // target rows; returns a scalar node of shape [1].
  NodeId squared_l2_loss(NodeId pred, NodeId target);

  void backward(NodeId loss);

  const Tensor& value(NodeId id) const;
  const Tensor& grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node;
  using Pull = std::function<void(TapeT&, const Node&)>;

  struct Node {
    Tensor value;
    Tensor grad;
    Pull pull;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool consumed_ = false;

  NodeId push(Tensor value, Pull pull = {}, Parameter* param = nullptr);
  Node& node(NodeId id);
  const Node& node(NodeId id) const;
  void check_id(NodeId id, const char* op) const;
};

using Tape = TapeT<double>;

}  // namespace zsar
