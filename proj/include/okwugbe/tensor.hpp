#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace okwugbe::nn {

namespace detail {
inline thread_local bool grad_mode = true;
}

// Disables graph recording in scope (evaluation / decoding paths).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(detail::grad_mode) { detail::grad_mode = false; }
  ~NoGradGuard() { detail::grad_mode = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

inline bool grad_enabled() { return detail::grad_mode; }

inline std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

inline std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

template <typename T>
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<T> values;
  std::vector<T> grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  std::function<void(TensorNode<T>&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), T(0));
    return grad;
  }
};

// Value-semantics handle over a shared graph node. Copies alias the node.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T(0)) {
    node_ = std::make_shared<TensorNode<T>>();
    node_->shape = std::move(shape);
    node_->values.assign(shape_size(node_->shape), fill);
  }

  Tensor(std::vector<std::size_t> shape, std::vector<T> values) {
    node_ = std::make_shared<TensorNode<T>>();
    if (shape_size(shape) != values.size()) {
      throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                  std::to_string(values.size()) + " values");
    }
    node_->shape = std::move(shape);
    node_->values = std::move(values);
  }

  static Tensor scalar(T v) { return Tensor({}, std::vector<T>{v}); }

  static Tensor uniform(std::vector<std::size_t> shape, T lo, T hi, std::mt19937& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
    for (auto& v : t.values()) v = static_cast<T>(dist(rng));
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->values.size(); }
  std::size_t extent(std::size_t axis) const { return node_->shape.at(axis); }

  std::vector<T>& values() { return node_->values; }
  const std::vector<T>& values() const { return node_->values; }

  T item() const {
    if (size() != 1) {
      throw std::invalid_argument("item(): tensor has " + std::to_string(size()) + " elements");
    }
    return node_->values[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    node_->requires_grad = on;
    return *this;
  }

  std::vector<T>& grad() { return node_->ensure_grad(); }
  const std::vector<T>& grad() const { return node_->ensure_grad(); }  // lazily sized

  void zero_grad() { node_->grad.assign(node_->values.size(), T(0)); }

  bool all_finite() const {
    for (T v : node_->values) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  // Reverse-mode sweep from a scalar. Interior gradients are scratch and
  // reset per call; leaf gradients accumulate across calls.
  void backward() const {
    if (size() != 1) {
      throw std::invalid_argument("backward(): loss must be scalar, got shape " +
                                  shape_str(shape()));
    }
    std::vector<TensorNode<T>*> order;
    std::unordered_set<TensorNode<T>*> visited;
    std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      if (idx < node->parents.size()) {
        TensorNode<T>* parent = node->parents[idx++].get();
        if (visited.insert(parent).second) stack.emplace_back(parent, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
    // Post-order puts parents first; iterate in reverse so every node is
    // fully accumulated before its backward_fn fires.
    for (TensorNode<T>* node : order) {
      if (node->backward_fn) node->grad.assign(node->values.size(), T(0));
    }
    node_->ensure_grad()[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      TensorNode<T>* node = *it;
      if (node->backward_fn) node->backward_fn(*node);
    }
  }

  std::shared_ptr<TensorNode<T>> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

// Builds an op result node. backward_fn sees the result node (for out.grad)
// and must accumulate into the parents' ensure_grad().
template <typename T>
Tensor<T> make_op(std::vector<std::size_t> shape, std::vector<T> values,
                  std::vector<Tensor<T>> parents,
                  std::function<void(TensorNode<T>&)> backward_fn) {
  Tensor<T> out(std::move(shape), std::move(values));
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& p : parents) {
      if (p.node()->requires_grad) {
        needs = true;
        break;
      }
    }
  }
  if (needs) {
    out.set_requires_grad(true);
    auto node = out.node();
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(backward_fn);
  }
  return out;
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  auto an = a.node();
  auto bn = b.node();
  return make_op<T>(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode<T>& node) {
    auto& ga = an->ensure_grad();
    auto& gb = bn->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      ga[i] += node.grad[i];
      gb[i] += node.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  auto an = a.node();
  auto bn = b.node();
  return make_op<T>(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode<T>& node) {
    auto& ga = an->ensure_grad();
    auto& gb = bn->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      ga[i] += node.grad[i];
      gb[i] -= node.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  auto an = a.node();
  auto bn = b.node();
  return make_op<T>(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode<T>& node) {
    auto& ga = an->ensure_grad();
    auto& gb = bn->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      ga[i] += node.grad[i] * bn->values[i];
      gb[i] += node.grad[i] * an->values[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  std::vector<T> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * c;
  auto xn = x.node();
  return make_op<T>(x.shape(), std::move(out), {x}, [xn, c](TensorNode<T>& node) {
    auto& gx = xn->ensure_grad();
    for (std::size_t i = 0; i < node.grad.size(); ++i) gx[i] += node.grad[i] * c;
  });
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.values()) acc += v;
  auto xn = x.node();
  return make_op<T>({}, std::vector<T>{acc}, {x}, [xn](TensorNode<T>& node) {
    auto& gx = xn->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += node.grad[0];
  });
}

// y = x W (+ b): x is (..., in), W is (in, out), b is (out).
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b = nullptr) {
  if (x.rank() < 1 || w.rank() != 2) {
    throw std::invalid_argument("linear: x rank >= 1 and W rank 2 required, got " +
                                shape_str(x.shape()) + " and " + shape_str(w.shape()));
  }
  const std::size_t in = x.shape().back();
  if (w.extent(0) != in) {
    throw std::invalid_argument("linear: inner dims mismatch, x " + shape_str(x.shape()) +
                                " vs W " + shape_str(w.shape()));
  }
  const std::size_t out_dim = w.extent(1);
  if (b != nullptr && (b->rank() != 1 || b->extent(0) != out_dim)) {
    throw std::invalid_argument("linear: bias shape " + shape_str(b->shape()) +
                                " does not match W " + shape_str(w.shape()));
  }
  const std::size_t rows = x.size() / std::max<std::size_t>(in, 1);

  std::vector<std::size_t> out_shape = x.shape();
  out_shape.back() = out_dim;
  std::vector<T> y(rows * out_dim, T(0));
  const auto& xv = x.values();
  const auto& wv = w.values();
  for (std::size_t r = 0; r < rows; ++r) {
    T* yrow = y.data() + r * out_dim;
    if (b != nullptr) {
      const auto& bv = b->values();
      for (std::size_t o = 0; o < out_dim; ++o) yrow[o] = bv[o];
    }
    const T* xrow = xv.data() + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const T xi = xrow[i];
      const T* wrow = wv.data() + i * out_dim;
      for (std::size_t o = 0; o < out_dim; ++o) yrow[o] += xi * wrow[o];
    }
  }

  std::vector<Tensor<T>> parents{x, w};
  if (b != nullptr) parents.push_back(*b);
  auto xn = x.node();
  auto wn = w.node();
  std::shared_ptr<TensorNode<T>> bn = b != nullptr ? b->node() : nullptr;
  return make_op<T>(std::move(out_shape), std::move(y), std::move(parents),
                    [xn, wn, bn, rows, in, out_dim](TensorNode<T>& node) {
                      auto& gx = xn->ensure_grad();
                      auto& gw = wn->ensure_grad();
                      const auto& xv = xn->values;
                      const auto& wv = wn->values;
                      for (std::size_t r = 0; r < rows; ++r) {
                        const T* grow = node.grad.data() + r * out_dim;
                        const T* xrow = xv.data() + r * in;
                        T* gxrow = gx.data() + r * in;
                        for (std::size_t i = 0; i < in; ++i) {
                          const T* wrow = wv.data() + i * out_dim;
                          T* gwrow = gw.data() + i * out_dim;
                          T acc = T(0);
                          const T xi = xrow[i];
                          for (std::size_t o = 0; o < out_dim; ++o) {
                            acc += grow[o] * wrow[o];
                            gwrow[o] += xi * grow[o];
                          }
                          gxrow[i] += acc;
                        }
                      }
                      if (bn) {
                        auto& gb = bn->ensure_grad();
                        for (std::size_t r = 0; r < rows; ++r) {
                          const T* grow = node.grad.data() + r * out_dim;
                          for (std::size_t o = 0; o < out_dim; ++o) gb[o] += grow[o];
                        }
                      }
                    });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, std::vector<std::size_t> new_shape) {
  if (shape_size(new_shape) != x.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " +
                                shape_str(new_shape));
  }
  auto xn = x.node();
  return make_op<T>(std::move(new_shape), x.values(), {x}, [xn](TensorNode<T>& node) {
    auto& gx = xn->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += node.grad[i];
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
  const std::size_t r = x.rank();
  if (axes.size() != r) throw std::invalid_argument("permute: axes rank mismatch");
  std::vector<std::size_t> out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = x.extent(axes[i]);

  std::vector<std::size_t> in_strides(r, 1), out_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * x.extent(i);
  for (std::size_t i = r; i-- > 1;) out_strides[i - 1] = out_strides[i] * out_shape[i];

  // For each output linear index, the matching input linear index.
  const std::size_t n = x.size();
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t o = 0; o < n; ++o) {
    std::size_t in_lin = 0;
    for (std::size_t i = 0; i < r; ++i) in_lin += idx[i] * in_strides[axes[i]];
    src[o] = in_lin;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }

  std::vector<T> out(n);
  const auto& xv = x.values();
  for (std::size_t o = 0; o < n; ++o) out[o] = xv[src[o]];
  auto xn = x.node();
  auto src_shared = std::make_shared<std::vector<std::size_t>>(std::move(src));
  return make_op<T>(std::move(out_shape), std::move(out), {x},
                    [xn, src_shared](TensorNode<T>& node) {
                      auto& gx = xn->ensure_grad();
                      const auto& map = *src_shared;
                      for (std::size_t o = 0; o < map.size(); ++o) gx[map[o]] += node.grad[o];
                    });
}

// Concatenation along the last axis.
template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != b.rank() || a.rank() == 0) {
    throw std::invalid_argument("concat_last: rank mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  for (std::size_t i = 0; i + 1 < a.rank(); ++i) {
    if (a.extent(i) != b.extent(i)) {
      throw std::invalid_argument("concat_last: shape mismatch " + shape_str(a.shape()) +
                                  " vs " + shape_str(b.shape()));
    }
  }
  const std::size_t la = a.shape().back();
  const std::size_t lb = b.shape().back();
  const std::size_t rows = a.size() / std::max<std::size_t>(la, 1);
  std::vector<std::size_t> out_shape = a.shape();
  out_shape.back() = la + lb;
  std::vector<T> out(rows * (la + lb));
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < la; ++i) out[r * (la + lb) + i] = av[r * la + i];
    for (std::size_t i = 0; i < lb; ++i) out[r * (la + lb) + la + i] = bv[r * lb + i];
  }
  auto an = a.node();
  auto bn = b.node();
  return make_op<T>(std::move(out_shape), std::move(out), {a, b},
                    [an, bn, rows, la, lb](TensorNode<T>& node) {
                      auto& ga = an->ensure_grad();
                      auto& gb = bn->ensure_grad();
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t i = 0; i < la; ++i) {
                          ga[r * la + i] += node.grad[r * (la + lb) + i];
                        }
                        for (std::size_t i = 0; i < lb; ++i) {
                          gb[r * lb + i] += node.grad[r * (la + lb) + la + i];
                        }
                      }
                    });
}

// x[..., start : start + len] along the last axis.
template <typename T>
Tensor<T> slice_last(const Tensor<T>& x, std::size_t start, std::size_t len) {
  const std::size_t last = x.shape().back();
  if (start + len > last) {
    throw std::invalid_argument("slice_last: [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of extent " +
                                std::to_string(last));
  }
  const std::size_t rows = x.size() / std::max<std::size_t>(last, 1);
  std::vector<std::size_t> out_shape = x.shape();
  out_shape.back() = len;
  std::vector<T> out(rows * len);
  const auto& xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < len; ++i) out[r * len + i] = xv[r * last + start + i];
  }
  auto xn = x.node();
  return make_op<T>(std::move(out_shape), std::move(out), {x},
                    [xn, rows, last, start, len](TensorNode<T>& node) {
                      auto& gx = xn->ensure_grad();
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t i = 0; i < len; ++i) {
                          gx[r * last + start + i] += node.grad[r * len + i];
                        }
                      }
                    });
}

// (B, K, D) -> (B, D) at position k along axis 1.
template <typename T>
Tensor<T> slice_axis1(const Tensor<T>& x, std::size_t k) {
  if (x.rank() != 3) throw std::invalid_argument("slice_axis1: rank-3 tensor required");
  const std::size_t b_dim = x.extent(0), k_dim = x.extent(1), d_dim = x.extent(2);
  if (k >= k_dim) throw std::invalid_argument("slice_axis1: index out of range");
  std::vector<T> out(b_dim * d_dim);
  const auto& xv = x.values();
  for (std::size_t b = 0; b < b_dim; ++b) {
    for (std::size_t d = 0; d < d_dim; ++d) out[b * d_dim + d] = xv[(b * k_dim + k) * d_dim + d];
  }
  auto xn = x.node();
  return make_op<T>({b_dim, d_dim}, std::move(out), {x},
                    [xn, b_dim, k_dim, d_dim, k](TensorNode<T>& node) {
                      auto& gx = xn->ensure_grad();
                      for (std::size_t b = 0; b < b_dim; ++b) {
                        for (std::size_t d = 0; d < d_dim; ++d) {
                          gx[(b * k_dim + k) * d_dim + d] += node.grad[b * d_dim + d];
                        }
                      }
                    });
}

// K tensors of shape (B, D) -> (B, K, D).
template <typename T>
Tensor<T> stack_axis1(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("stack_axis1: empty input");
  const std::size_t b_dim = parts[0].extent(0), d_dim = parts[0].extent(1);
  for (const auto& p : parts) check_same_shape(parts[0], p, "stack_axis1");
  const std::size_t k_dim = parts.size();
  std::vector<T> out(b_dim * k_dim * d_dim);
  for (std::size_t k = 0; k < k_dim; ++k) {
    const auto& pv = parts[k].values();
    for (std::size_t b = 0; b < b_dim; ++b) {
      for (std::size_t d = 0; d < d_dim; ++d) {
        out[(b * k_dim + k) * d_dim + d] = pv[b * d_dim + d];
      }
    }
  }
  std::vector<std::shared_ptr<TensorNode<T>>> nodes;
  nodes.reserve(k_dim);
  for (const auto& p : parts) nodes.push_back(p.node());
  return make_op<T>({b_dim, k_dim, d_dim}, std::move(out), parts,
                    [nodes, b_dim, k_dim, d_dim](TensorNode<T>& node) {
                      for (std::size_t k = 0; k < k_dim; ++k) {
                        auto& gp = nodes[k]->ensure_grad();
                        for (std::size_t b = 0; b < b_dim; ++b) {
                          for (std::size_t d = 0; d < d_dim; ++d) {
                            gp[b * d_dim + d] += node.grad[(b * k_dim + k) * d_dim + d];
                          }
                        }
                      }
                    });
}

// (B, k, H) -> (B, target_k, H); rows [k, target_k) are zeros.
template <typename T>
Tensor<T> pad_axis1(const Tensor<T>& h, std::size_t target_k) {
  if (h.rank() != 3) throw std::invalid_argument("pad_axis1: rank-3 tensor required");
  const std::size_t b_dim = h.extent(0), k_dim = h.extent(1), h_dim = h.extent(2);
  if (target_k < k_dim) {
    throw std::invalid_argument("pad_axis1: target " + std::to_string(target_k) +
                                " smaller than current extent " + std::to_string(k_dim));
  }
  std::vector<T> out(b_dim * target_k * h_dim, T(0));
  const auto& hv = h.values();
  for (std::size_t b = 0; b < b_dim; ++b) {
    for (std::size_t k = 0; k < k_dim; ++k) {
      for (std::size_t d = 0; d < h_dim; ++d) {
        out[(b * target_k + k) * h_dim + d] = hv[(b * k_dim + k) * h_dim + d];
      }
    }
  }
  auto hn = h.node();
  return make_op<T>({b_dim, target_k, h_dim}, std::move(out), {h},
                    [hn, b_dim, k_dim, h_dim, target_k](TensorNode<T>& node) {
                      auto& gh = hn->ensure_grad();
                      for (std::size_t b = 0; b < b_dim; ++b) {
                        for (std::size_t k = 0; k < k_dim; ++k) {
                          for (std::size_t d = 0; d < h_dim; ++d) {
                            gh[(b * k_dim + k) * h_dim + d] +=
                                node.grad[(b * target_k + k) * h_dim + d];
                          }
                        }
                      }
                    });
}

// Per-row select between two (B, D) tensors: mask[b] ? a : b.
template <typename T>
Tensor<T> where_rows(const std::vector<std::uint8_t>& mask, const Tensor<T>& a,
                     const Tensor<T>& b) {
  check_same_shape(a, b, "where_rows");
  if (a.rank() != 2 || mask.size() != a.extent(0)) {
    throw std::invalid_argument("where_rows: mask length must equal leading extent");
  }
  const std::size_t rows = a.extent(0), cols = a.extent(1);
  std::vector<T> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& src = mask[r] ? av : bv;
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = src[r * cols + c];
  }
  auto an = a.node();
  auto bn = b.node();
  auto mask_shared = std::make_shared<std::vector<std::uint8_t>>(mask);
  return make_op<T>(a.shape(), std::move(out), {a, b},
                    [an, bn, mask_shared, rows, cols](TensorNode<T>& node) {
                      auto& ga = an->ensure_grad();
                      auto& gb = bn->ensure_grad();
                      for (std::size_t r = 0; r < rows; ++r) {
                        auto& dst = (*mask_shared)[r] ? ga : gb;
                        for (std::size_t c = 0; c < cols; ++c) {
                          dst[r * cols + c] += node.grad[r * cols + c];
                        }
                      }
                    });
}

// (len, K) rows [0, len) of batch element b from (B, T, K).
template <typename T>
Tensor<T> slice_batch_time(const Tensor<T>& x, std::size_t b, std::size_t len) {
  if (x.rank() != 3) throw std::invalid_argument("slice_batch_time: rank-3 tensor required");
  const std::size_t b_dim = x.extent(0), t_dim = x.extent(1), k_dim = x.extent(2);
  if (b >= b_dim || len > t_dim) {
    throw std::invalid_argument("slice_batch_time: window out of range");
  }
  std::vector<T> out(len * k_dim);
  const auto& xv = x.values();
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t k = 0; k < k_dim; ++k) out[t * k_dim + k] = xv[(b * t_dim + t) * k_dim + k];
  }
  auto xn = x.node();
  return make_op<T>({len, k_dim}, std::move(out), {x},
                    [xn, b, t_dim, k_dim, len](TensorNode<T>& node) {
                      auto& gx = xn->ensure_grad();
                      for (std::size_t t = 0; t < len; ++t) {
                        for (std::size_t k = 0; k < k_dim; ++k) {
                          gx[(b * t_dim + t) * k_dim + k] += node.grad[t * k_dim + k];
                        }
                      }
                    });
}

// Zeroes time positions t >= lengths[b]. Works for (B, T, D) layouts
// (time axis 1) and (B, C, F, T) layouts (time axis 3).
template <typename T>
Tensor<T> mask_time(const Tensor<T>& x, const std::vector<std::size_t>& lengths,
                    std::size_t time_axis) {
  if (lengths.size() != x.extent(0)) {
    throw std::invalid_argument("mask_time: lengths size must equal batch extent");
  }
  if (time_axis != 1 && time_axis != x.rank() - 1) {
    throw std::invalid_argument("mask_time: unsupported time axis");
  }
  std::vector<T> out = x.values();
  const std::size_t b_dim = x.extent(0);
  const std::size_t per_b = x.size() / b_dim;
  std::vector<std::uint8_t> keep(x.size(), 1);
  if (time_axis == 1) {
    const std::size_t t_dim = x.extent(1);
    const std::size_t inner = per_b / t_dim;
    for (std::size_t b = 0; b < b_dim; ++b) {
      for (std::size_t t = lengths[b]; t < t_dim; ++t) {
        for (std::size_t i = 0; i < inner; ++i) {
          out[(b * t_dim + t) * inner + i] = T(0);
          keep[(b * t_dim + t) * inner + i] = 0;
        }
      }
    }
  } else {
    const std::size_t t_dim = x.shape().back();
    const std::size_t mids = per_b / t_dim;
    for (std::size_t b = 0; b < b_dim; ++b) {
      for (std::size_t m = 0; m < mids; ++m) {
        for (std::size_t t = lengths[b]; t < t_dim; ++t) {
          out[(b * mids + m) * t_dim + t] = T(0);
          keep[(b * mids + m) * t_dim + t] = 0;
        }
      }
    }
  }
  auto xn = x.node();
  auto keep_shared = std::make_shared<std::vector<std::uint8_t>>(std::move(keep));
  return make_op<T>(x.shape(), std::move(out), {x}, [xn, keep_shared](TensorNode<T>& node) {
    auto& gx = xn->ensure_grad();
    const auto& keep = *keep_shared;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (keep[i]) gx[i] += node.grad[i];
    }
  });
}

// Per-sample time reversal of (B, T, D): out[b, t] = x[b, len_b-1-t] for
// t < len_b, zeros beyond.
template <typename T>
Tensor<T> reverse_time(const Tensor<T>& x, const std::vector<std::size_t>& lengths) {
  if (x.rank() != 3) throw std::invalid_argument("reverse_time: rank-3 tensor required");
  const std::size_t b_dim = x.extent(0), t_dim = x.extent(1), d_dim = x.extent(2);
  if (lengths.size() != b_dim) {
    throw std::invalid_argument("reverse_time: lengths size must equal batch extent");
  }
  for (std::size_t b = 0; b < b_dim; ++b) {
    if (lengths[b] > t_dim) throw std::invalid_argument("reverse_time: length exceeds extent");
  }
  std::vector<T> out(x.size(), T(0));
  const auto& xv = x.values();
  for (std::size_t b = 0; b < b_dim; ++b) {
    for (std::size_t t = 0; t < lengths[b]; ++t) {
      const std::size_t src = (b * t_dim + (lengths[b] - 1 - t)) * d_dim;
      const std::size_t dst = (b * t_dim + t) * d_dim;
      for (std::size_t d = 0; d < d_dim; ++d) out[dst + d] = xv[src + d];
    }
  }
  auto xn = x.node();
  auto len_shared = std::make_shared<std::vector<std::size_t>>(lengths);
  return make_op<T>(x.shape(), std::move(out), {x},
                    [xn, len_shared, b_dim, t_dim, d_dim](TensorNode<T>& node) {
                      auto& gx = xn->ensure_grad();
                      const auto& lens = *len_shared;
                      for (std::size_t b = 0; b < b_dim; ++b) {
                        for (std::size_t t = 0; t < lens[b]; ++t) {
                          const std::size_t src = (b * t_dim + (lens[b] - 1 - t)) * d_dim;
                          const std::size_t dst = (b * t_dim + t) * d_dim;
                          for (std::size_t d = 0; d < d_dim; ++d) {
                            gx[src + d] += node.grad[dst + d];
                          }
                        }
                      }
                    });
}

}  // namespace okwugbe::nn
