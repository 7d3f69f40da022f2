#include "zsar/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace zsar {

namespace {

// c[M x N] += a[M x K] . b[K x N]
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k_dim, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k_dim;
    T* crow = c + i * n;
    for (std::size_t k = 0; k < k_dim; ++k) {
      const T aik = arow[k];
      const T* brow = b + k * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

// c[M x N] += a[M x K] . b[N x K]^T
template <typename T>
void gemm_nt_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k_dim, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k_dim;
    T* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k_dim;
      T acc = T(0);
      for (std::size_t k = 0; k < k_dim; ++k) acc += arow[k] * brow[k];
      crow[j] += acc;
    }
  }
}

// c[K x N] += a[M x K]^T . b[M x N]
template <typename T>
void gemm_tn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k_dim, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k_dim;
    const T* brow = b + i * n;
    for (std::size_t k = 0; k < k_dim; ++k) {
      const T aik = arow[k];
      T* crow = c + k * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

template <typename T>
[[noreturn]] void shape_error(const char* op, const TensorT<T>& a, const TensorT<T>& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << a.shape_str() << " and " << b.shape_str();
  throw std::invalid_argument(os.str());
}

template <typename T>
void require_2d(const char* op, const TensorT<T>& t) {
  if (t.ndim() > 2) {
    throw std::invalid_argument(std::string(op) + ": expected a 1-d or 2-d tensor, got " +
                                t.shape_str());
  }
}

}  // namespace

template <typename T>
ParameterT<T> uniform_parameter(std::string name, std::vector<std::size_t> shape,
                                std::size_t fan_in, std::mt19937_64& rng) {
  if (fan_in == 0) throw std::invalid_argument("uniform_parameter: fan_in must be positive");
  const T bound = T(1) / std::sqrt(T(fan_in));
  std::uniform_real_distribution<T> dist(-bound, bound);
  TensorT<T> v(shape);
  for (std::size_t i = 0; i < v.numel(); ++i) v.data()[i] = dist(rng);
  return ParameterT<T>(std::move(name), std::move(v));
}

template <typename T>
ParameterT<T> zero_parameter(std::string name, std::vector<std::size_t> shape) {
  return ParameterT<T>(std::move(name), TensorT<T>(shape));
}

template <typename T>
NodeId TapeT<T>::push(Tensor value, Pull pull, Parameter* param) {
  Node n;
  n.grad = Tensor(value.shape());
  n.value = std::move(value);
  n.pull = std::move(pull);
  n.param = param;
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

template <typename T>
typename TapeT<T>::Node& TapeT<T>::node(NodeId id) {
  return nodes_[id.index];
}

template <typename T>
const typename TapeT<T>::Node& TapeT<T>::node(NodeId id) const {
  return nodes_[id.index];
}

template <typename T>
void TapeT<T>::check_id(NodeId id, const char* op) const {
  if (id.index >= nodes_.size()) {
    throw std::invalid_argument(std::string(op) + ": node id does not belong to this tape");
  }
}

template <typename T>
NodeId TapeT<T>::constant(Tensor value) {
  return push(std::move(value));
}

template <typename T>
NodeId TapeT<T>::leaf(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return NodeId{it->second};
  NodeId id = push(p.value, {}, &p);
  param_nodes_[&p] = id.index;
  return id;
}

template <typename T>
NodeId TapeT<T>::linear(NodeId x, NodeId w, NodeId b) {
  check_id(x, "linear");
  check_id(w, "linear");
  check_id(b, "linear");
  const Tensor& xv = node(x).value;
  const Tensor& wv = node(w).value;
  const Tensor& bv = node(b).value;
  require_2d("linear", xv);
  const std::size_t bsz = xv.rows(), in = xv.cols();
  if (wv.ndim() != 2 || wv.rows() != in) shape_error("linear", xv, wv);
  const std::size_t out = wv.cols();
  if (bv.numel() != out) shape_error("linear", wv, bv);

  Tensor y({bsz, out});
  for (std::size_t r = 0; r < bsz; ++r) {
    T* yrow = y.data() + r * out;
    for (std::size_t j = 0; j < out; ++j) yrow[j] = bv.data()[j];
  }
  gemm_acc(xv.data(), wv.data(), y.data(), bsz, in, out);

  return push(std::move(y), [x, w, b, bsz, in, out](TapeT& t, const Node& self) {
    const T* g = self.grad.data();
    gemm_nt_acc(g, t.node(w).value.data(), t.node(x).grad.data(), bsz, out, in);
    gemm_tn_acc(t.node(x).value.data(), g, t.node(w).grad.data(), bsz, in, out);
    T* bg = t.node(b).grad.data();
    for (std::size_t r = 0; r < bsz; ++r) {
      const T* grow = g + r * out;
      for (std::size_t j = 0; j < out; ++j) bg[j] += grow[j];
    }
  });
}

template <typename T>
NodeId TapeT<T>::matmul(NodeId a, NodeId b) {
  check_id(a, "matmul");
  check_id(b, "matmul");
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  require_2d("matmul", av);
  require_2d("matmul", bv);
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor y({m, n});
  gemm_acc(av.data(), bv.data(), y.data(), m, k, n);
  return push(std::move(y), [a, b, m, k, n](TapeT& t, const Node& self) {
    const T* g = self.grad.data();
    gemm_nt_acc(g, t.node(b).value.data(), t.node(a).grad.data(), m, n, k);
    gemm_tn_acc(t.node(a).value.data(), g, t.node(b).grad.data(), m, k, n);
  });
}

template <typename T>
NodeId TapeT<T>::matmul_transposed(NodeId a, NodeId b) {
  check_id(a, "matmul_transposed");
  check_id(b, "matmul_transposed");
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  require_2d("matmul_transposed", av);
  require_2d("matmul_transposed", bv);
  if (av.cols() != bv.cols()) shape_error("matmul_transposed", av, bv);
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor y({m, n});
  gemm_nt_acc(av.data(), bv.data(), y.data(), m, k, n);
  return push(std::move(y), [a, b, m, k, n](TapeT& t, const Node& self) {
    const T* g = self.grad.data();
    gemm_acc(g, t.node(b).value.data(), t.node(a).grad.data(), m, n, k);
    gemm_tn_acc(g, t.node(a).value.data(), t.node(b).grad.data(), m, n, k);
  });
}

template <typename T>
NodeId TapeT<T>::relu(NodeId x) {
  check_id(x, "relu");
  const Tensor& xv = node(x).value;
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) {
    y.data()[i] = xv.data()[i] > T(0) ? xv.data()[i] : T(0);
  }
  return push(std::move(y), [x](TapeT& t, const Node& self) {
    const Tensor& xv = t.node(x).value;
    T* xg = t.node(x).grad.data();
    for (std::size_t i = 0; i < xv.numel(); ++i) {
      if (xv.data()[i] > T(0)) xg[i] += self.grad.data()[i];
    }
  });
}

template <typename T>
NodeId TapeT<T>::softmax_rows(NodeId x) {
  check_id(x, "softmax_rows");
  const Tensor& xv = node(x).value;
  require_2d("softmax_rows", xv);
  const std::size_t r = xv.rows(), c = xv.cols();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < r; ++i) {
    const T* xrow = xv.data() + i * c;
    T* yrow = y.data() + i * c;
    T mx = xrow[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, (T)xrow[j]);
    T sum = T(0);
    for (std::size_t j = 0; j < c; ++j) {
      yrow[j] = std::exp(xrow[j] - mx);
      sum += yrow[j];
    }
    for (std::size_t j = 0; j < c; ++j) yrow[j] /= sum;
  }
  return push(std::move(y), [x, r, c](TapeT& t, const Node& self) {
    // dx_j = y_j * (g_j - sum_k g_k y_k), per row
    T* xg = t.node(x).grad.data();
    for (std::size_t i = 0; i < r; ++i) {
      const T* yrow = self.value.data() + i * c;
      const T* grow = self.grad.data() + i * c;
      T dot = T(0);
      for (std::size_t j = 0; j < c; ++j) dot += grow[j] * yrow[j];
      for (std::size_t j = 0; j < c; ++j) xg[i * c + j] += yrow[j] * (grow[j] - dot);
    }
  });
}

template <typename T>
NodeId TapeT<T>::add(NodeId a, NodeId b) {
  check_id(a, "add");
  check_id(b, "add");
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  if (!av.same_shape(bv)) shape_error("add", av, bv);
  Tensor y(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) y.data()[i] = av.data()[i] + bv.data()[i];
  return push(std::move(y), [a, b](TapeT& t, const Node& self) {
    T* ag = t.node(a).grad.data();
    T* bg = t.node(b).grad.data();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      ag[i] += self.grad.data()[i];
      bg[i] += self.grad.data()[i];
    }
  });
}

template <typename T>
NodeId TapeT<T>::mul(NodeId a, NodeId b) {
  check_id(a, "mul");
  check_id(b, "mul");
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  if (!av.same_shape(bv)) shape_error("mul", av, bv);
  Tensor y(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) y.data()[i] = av.data()[i] * bv.data()[i];
  return push(std::move(y), [a, b](TapeT& t, const Node& self) {
    const Tensor& av = t.node(a).value;
    const Tensor& bv = t.node(b).value;
    T* ag = t.node(a).grad.data();
    T* bg = t.node(b).grad.data();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      ag[i] += self.grad.data()[i] * bv.data()[i];
      bg[i] += self.grad.data()[i] * av.data()[i];
    }
  });
}

template <typename T>
NodeId TapeT<T>::scale(NodeId x, T factor) {
  check_id(x, "scale");
  if (!std::isfinite(factor)) throw std::invalid_argument("scale: factor must be finite");
  const Tensor& xv = node(x).value;
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) y.data()[i] = xv.data()[i] * factor;
  return push(std::move(y), [x, factor](TapeT& t, const Node& self) {
    T* xg = t.node(x).grad.data();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) xg[i] += self.grad.data()[i] * factor;
  });
}

template <typename T>
NodeId TapeT<T>::concat_cols(NodeId a, NodeId b) {
  check_id(a, "concat_cols");
  check_id(b, "concat_cols");
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  require_2d("concat_cols", av);
  require_2d("concat_cols", bv);
  if (av.rows() != bv.rows()) shape_error("concat_cols", av, bv);
  const std::size_t r = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor y({r, ca + cb});
  for (std::size_t i = 0; i < r; ++i) {
    T* yrow = y.data() + i * (ca + cb);
    const T* arow = av.data() + i * ca;
    const T* brow = bv.data() + i * cb;
    std::copy(arow, arow + ca, yrow);
    std::copy(brow, brow + cb, yrow + ca);
  }
  return push(std::move(y), [a, b, r, ca, cb](TapeT& t, const Node& self) {
    T* ag = t.node(a).grad.data();
    T* bg = t.node(b).grad.data();
    for (std::size_t i = 0; i < r; ++i) {
      const T* grow = self.grad.data() + i * (ca + cb);
      for (std::size_t j = 0; j < ca; ++j) ag[i * ca + j] += grow[j];
      for (std::size_t j = 0; j < cb; ++j) bg[i * cb + j] += grow[ca + j];
    }
  });
}

template <typename T>
NodeId TapeT<T>::reshape(NodeId x, std::vector<std::size_t> shape) {
  check_id(x, "reshape");
  const Tensor& xv = node(x).value;
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  if (shape.empty() || n != xv.numel()) {
    throw std::invalid_argument("reshape: element count mismatch for " + xv.shape_str());
  }
  Tensor y = Tensor::unchecked(std::move(shape), std::vector<T>(xv.values()));
  return push(std::move(y), [x](TapeT& t, const Node& self) {
    T* xg = t.node(x).grad.data();
    for (std::size_t i = 0; i < self.grad.numel(); ++i) xg[i] += self.grad.data()[i];
  });
}

template <typename T>
NodeId TapeT<T>::row(NodeId x, std::size_t index) {
  check_id(x, "row");
  const Tensor& xv = node(x).value;
  require_2d("row", xv);
  if (index >= xv.rows()) throw std::invalid_argument("row: index out of range");
  const std::size_t c = xv.cols();
  std::vector<T> vals(xv.data() + index * c, xv.data() + (index + 1) * c);
  Tensor y = Tensor::unchecked({1, c}, std::move(vals));
  return push(std::move(y), [x, index, c](TapeT& t, const Node& self) {
    T* xg = t.node(x).grad.data() + index * c;
    for (std::size_t j = 0; j < c; ++j) xg[j] += self.grad.data()[j];
  });
}

template <typename T>
NodeId TapeT<T>::stack_rows(const std::vector<NodeId>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows given");
  for (auto id : rows) check_id(id, "stack_rows");
  const std::size_t c = node(rows[0]).value.cols();
  for (auto id : rows) {
    const Tensor& v = node(id).value;
    if (v.rows() != 1 || v.cols() != c) {
      throw std::invalid_argument("stack_rows: every row must be a 1 x " + std::to_string(c) +
                                  " tensor");
    }
  }
  Tensor y({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const T* src = node(rows[i]).value.data();
    std::copy(src, src + c, y.data() + i * c);
  }
  auto row_ids = rows;
  return push(std::move(y), [row_ids, c](TapeT& t, const Node& self) {
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
      T* rg = t.node(row_ids[i]).grad.data();
      const T* grow = self.grad.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) rg[j] += grow[j];
    }
  });
}

template <typename T>
NodeId TapeT<T>::squared_l2_loss(NodeId pred, NodeId target) {
  check_id(pred, "squared_l2_loss");
  check_id(target, "squared_l2_loss");
  const Tensor& pv = node(pred).value;
  const Tensor& tv = node(target).value;
  require_2d("squared_l2_loss", pv);
  if (pv.rows() != tv.rows() || pv.cols() != tv.cols()) {
    shape_error("squared_l2_loss", pv, tv);
  }
  const std::size_t r = pv.rows(), c = pv.cols();
  T acc = T(0);
  for (std::size_t i = 0; i < r * c; ++i) {
    const T d = tv.data()[i] - pv.data()[i];
    acc += d * d;
  }
  acc /= T(r);
  Tensor y = Tensor::unchecked({1}, {acc});
  return push(std::move(y), [pred, target, r, c](TapeT& t, const Node& self) {
    const T g = self.grad.data()[0];
    const Tensor& pv = t.node(pred).value;
    const Tensor& tv = t.node(target).value;
    T* pg = t.node(pred).grad.data();
    T* tg = t.node(target).grad.data();
    const T f = g * T(2) / T(r);
    for (std::size_t i = 0; i < r * c; ++i) {
      const T d = pv.data()[i] - tv.data()[i];
      pg[i] += f * d;
      tg[i] -= f * d;
    }
  });
}

template <typename T>
void TapeT<T>::backward(NodeId loss) {
  check_id(loss, "backward");
  if (consumed_) {
    throw std::logic_error("backward: tape already consumed (stale graph); rerun the forward pass");
  }
  consumed_ = true;
  Node& ln = node(loss);
  if (ln.value.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar node, got " +
                                ln.value.shape_str());
  }
  ln.grad.data()[0] = T(1);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& nd = nodes_[i];
    if (nd.pull) nd.pull(*this, nd);
    if (nd.param) {
      T* pg = nd.param->grad.data();
      for (std::size_t j = 0; j < nd.grad.numel(); ++j) pg[j] += nd.grad.data()[j];
    }
  }
}

template <typename T>
const typename TapeT<T>::Tensor& TapeT<T>::value(NodeId id) const {
  check_id(id, "value");
  return node(id).value;
}

template <typename T>
const typename TapeT<T>::Tensor& TapeT<T>::grad(NodeId id) const {
  check_id(id, "grad");
  return node(id).grad;
}

template class TapeT<float>;
template class TapeT<double>;

template ParameterT<float> uniform_parameter<float>(std::string, std::vector<std::size_t>,
                                                    std::size_t, std::mt19937_64&);
template ParameterT<double> uniform_parameter<double>(std::string, std::vector<std::size_t>,
                                                      std::size_t, std::mt19937_64&);
template ParameterT<float> zero_parameter<float>(std::string, std::vector<std::size_t>);
template ParameterT<double> zero_parameter<double>(std::string, std::vector<std::size_t>);

}  // namespace zsar
