#pragma once

#include <cmath>
#include <numbers>

#include "okwugbe/tensor.hpp"

namespace okwugbe::nn {

struct Conv2dSpec {
  std::size_t stride_f = 1, stride_t = 1;
  std::size_t pad_f = 0, pad_t = 0;
  // Exact mode rejects strides that do not divide the padded extent evenly;
  // floor mode drops the trailing partial window (same-padding stems).
  bool exact_extents = true;
};

inline std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                   std::size_t pad, bool exact, const char* axis) {
  const std::size_t padded = in + 2 * pad;
  if (padded < kernel) {
    throw std::invalid_argument(std::string("conv2d: ") + axis + " extent " +
                                std::to_string(in) + " smaller than kernel " +
                                std::to_string(kernel) + " under padding " + std::to_string(pad));
  }
  const std::size_t span = padded - kernel;
  if (exact && span % stride != 0) {
    throw std::invalid_argument(std::string("conv2d: non-integral output ") + axis +
                                " extent: (" + std::to_string(in) + " + 2*" +
                                std::to_string(pad) + " - " + std::to_string(kernel) + ") / " +
                                std::to_string(stride) + " is not an integer");
  }
  return span / stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>* bias,
                 const Conv2dSpec& spec);

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, std::nullptr_t,
                 const Conv2dSpec& spec) {
  return conv2d(x, kernel, static_cast<const Tensor<T>*>(nullptr), spec);
}

// Cross-correlation: x (B, Cin, F, T) * k (Cout, Cin, kf, kt) -> (B, Cout, F', T').
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>* bias,
                 const Conv2dSpec& spec) {
  if (x.rank() != 4 || kernel.rank() != 4) {
    throw std::invalid_argument("conv2d: x " + shape_str(x.shape()) + " and kernel " +
                                shape_str(kernel.shape()) + " must be rank 4");
  }
  const std::size_t b_dim = x.extent(0), c_in = x.extent(1), f_in = x.extent(2),
                    t_in = x.extent(3);
  const std::size_t c_out = kernel.extent(0), kf = kernel.extent(2), kt = kernel.extent(3);
  if (kernel.extent(1) != c_in) {
    throw std::invalid_argument("conv2d: channel mismatch, x " + shape_str(x.shape()) +
                                " vs kernel " + shape_str(kernel.shape()));
  }
  if (bias != nullptr && (bias->rank() != 1 || bias->extent(0) != c_out)) {
    throw std::invalid_argument("conv2d: bias shape " + shape_str(bias->shape()) +
                                " does not match output channels");
  }
  const std::size_t f_out =
      conv_out_extent(f_in, kf, spec.stride_f, spec.pad_f, spec.exact_extents, "feature");
  const std::size_t t_out =
      conv_out_extent(t_in, kt, spec.stride_t, spec.pad_t, spec.exact_extents, "time");

  std::vector<T> out(b_dim * c_out * f_out * t_out, T(0));
  const auto& xv = x.values();
  const auto& kv = kernel.values();
  for (std::size_t b = 0; b < b_dim; ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      T* oplane = out.data() + (b * c_out + co) * f_out * t_out;
      if (bias != nullptr) {
        const T bv = bias->values()[co];
        for (std::size_t i = 0; i < f_out * t_out; ++i) oplane[i] = bv;
      }
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const T* xplane = xv.data() + (b * c_in + ci) * f_in * t_in;
        const T* kplane = kv.data() + (co * c_in + ci) * kf * kt;
        for (std::size_t i = 0; i < kf; ++i) {
          for (std::size_t j = 0; j < kt; ++j) {
            const T kw = kplane[i * kt + j];
            if (kw == T(0)) continue;
            for (std::size_t of = 0; of < f_out; ++of) {
              const std::ptrdiff_t fi =
                  static_cast<std::ptrdiff_t>(of * spec.stride_f + i) -
                  static_cast<std::ptrdiff_t>(spec.pad_f);
              if (fi < 0 || fi >= static_cast<std::ptrdiff_t>(f_in)) continue;
              const T* xrow = xplane + static_cast<std::size_t>(fi) * t_in;
              T* orow = oplane + of * t_out;
              for (std::size_t ot = 0; ot < t_out; ++ot) {
                const std::ptrdiff_t ti =
                    static_cast<std::ptrdiff_t>(ot * spec.stride_t + j) -
                    static_cast<std::ptrdiff_t>(spec.pad_t);
                if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(t_in)) continue;
                orow[ot] += kw * xrow[static_cast<std::size_t>(ti)];
              }
            }
          }
        }
      }
    }
  }

  std::vector<Tensor<T>> parents{x, kernel};
  if (bias != nullptr) parents.push_back(*bias);
  auto xn = x.node();
  auto kn = kernel.node();
  std::shared_ptr<TensorNode<T>> bn = bias != nullptr ? bias->node() : nullptr;
  return make_op<T>(
      {b_dim, c_out, f_out, t_out}, std::move(out), std::move(parents),
      [xn, kn, bn, spec, b_dim, c_in, c_out, f_in, t_in, f_out, t_out, kf,
       kt](TensorNode<T>& node) {
        auto& gx = xn->ensure_grad();
        auto& gk = kn->ensure_grad();
        const auto& xv = xn->values;
        const auto& kv = kn->values;
        for (std::size_t b = 0; b < b_dim; ++b) {
          for (std::size_t co = 0; co < c_out; ++co) {
            const T* gplane = node.grad.data() + (b * c_out + co) * f_out * t_out;
            for (std::size_t ci = 0; ci < c_in; ++ci) {
              const T* xplane = xv.data() + (b * c_in + ci) * f_in * t_in;
              T* gxplane = gx.data() + (b * c_in + ci) * f_in * t_in;
              const T* kplane = kv.data() + (co * c_in + ci) * kf * kt;
              T* gkplane = gk.data() + (co * c_in + ci) * kf * kt;
              for (std::size_t i = 0; i < kf; ++i) {
                for (std::size_t j = 0; j < kt; ++j) {
                  const T kw = kplane[i * kt + j];
                  T kacc = T(0);
                  for (std::size_t of = 0; of < f_out; ++of) {
                    const std::ptrdiff_t fi =
                        static_cast<std::ptrdiff_t>(of * spec.stride_f + i) -
                        static_cast<std::ptrdiff_t>(spec.pad_f);
                    if (fi < 0 || fi >= static_cast<std::ptrdiff_t>(f_in)) continue;
                    const T* xrow = xplane + static_cast<std::size_t>(fi) * t_in;
                    T* gxrow = gxplane + static_cast<std::size_t>(fi) * t_in;
                    const T* grow = gplane + of * t_out;
                    for (std::size_t ot = 0; ot < t_out; ++ot) {
                      const std::ptrdiff_t ti =
                          static_cast<std::ptrdiff_t>(ot * spec.stride_t + j) -
                          static_cast<std::ptrdiff_t>(spec.pad_t);
                      if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(t_in)) continue;
                      const T g = grow[ot];
                      gxrow[static_cast<std::size_t>(ti)] += kw * g;
                      kacc += xrow[static_cast<std::size_t>(ti)] * g;
                    }
                  }
                  gkplane[i * kt + j] += kacc;
                }
              }
            }
          }
        }
        if (bn) {
          auto& gb = bn->ensure_grad();
          for (std::size_t b = 0; b < b_dim; ++b) {
            for (std::size_t co = 0; co < c_out; ++co) {
              const T* gplane = node.grad.data() + (b * c_out + co) * f_out * t_out;
              T acc = T(0);
              for (std::size_t i = 0; i < f_out * t_out; ++i) acc += gplane[i];
              gb[co] += acc;
            }
          }
        }
      });
}

// Normalizes each slice along `axis` to zero mean / unit variance (biased,
// eps inside the square root), then applies gamma/beta indexed along axis.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, std::size_t axis, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps = T(1e-5)) {
  if (axis >= x.rank()) throw std::invalid_argument("layer_norm: axis out of range");
  const std::size_t n = x.extent(axis);
  if (n == 0) throw std::invalid_argument("layer_norm: normalized extent is zero");
  if (gamma.size() != n || beta.size() != n) {
    throw std::invalid_argument("layer_norm: gamma/beta size " + std::to_string(gamma.size()) +
                                "/" + std::to_string(beta.size()) +
                                " does not match normalized extent " + std::to_string(n));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.extent(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.extent(i);

  const auto& xv = x.values();
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  std::vector<T> out(x.size());
  auto xhat = std::make_shared<std::vector<T>>(x.size());
  auto inv_std = std::make_shared<std::vector<T>>(outer * inner);

  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t base = o * n * inner + j;
      T mean = T(0);
      for (std::size_t i = 0; i < n; ++i) mean += xv[base + i * inner];
      mean /= static_cast<T>(n);
      T var = T(0);
      for (std::size_t i = 0; i < n; ++i) {
        const T d = xv[base + i * inner] - mean;
        var += d * d;
      }
      var /= static_cast<T>(n);
      const T istd = T(1) / std::sqrt(var + eps);
      (*inv_std)[o * inner + j] = istd;
      for (std::size_t i = 0; i < n; ++i) {
        const T xh = (xv[base + i * inner] - mean) * istd;
        (*xhat)[base + i * inner] = xh;
        out[base + i * inner] = gv[i] * xh + bv[i];
      }
    }
  }

  auto xn = x.node();
  auto gn = gamma.node();
  auto btn = beta.node();
  return make_op<T>(
      x.shape(), std::move(out), {x, gamma, beta},
      [xn, gn, btn, xhat, inv_std, outer, inner, n](TensorNode<T>& node) {
        auto& gx = xn->ensure_grad();
        auto& gg = gn->ensure_grad();
        auto& gb = btn->ensure_grad();
        const auto& gv = gn->values;
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t j = 0; j < inner; ++j) {
            const std::size_t base = o * n * inner + j;
            const T istd = (*inv_std)[o * inner + j];
            T mean_gy = T(0), mean_gy_xhat = T(0);
            for (std::size_t i = 0; i < n; ++i) {
              const T gy = node.grad[base + i * inner] * gv[i];
              mean_gy += gy;
              mean_gy_xhat += gy * (*xhat)[base + i * inner];
            }
            mean_gy /= static_cast<T>(n);
            mean_gy_xhat /= static_cast<T>(n);
            for (std::size_t i = 0; i < n; ++i) {
              const T g = node.grad[base + i * inner];
              const T xh = (*xhat)[base + i * inner];
              gx[base + i * inner] += istd * (g * gv[i] - mean_gy - xh * mean_gy_xhat);
              gg[i] += g * xh;
              gb[i] += g;
            }
          }
        }
      });
}

// BatchNorm over (B, F, T) per channel of a (B, C, F, T) tensor. Training
// mode uses batch statistics and updates the running buffers in place;
// eval mode reads the running buffers.
template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       std::vector<T>& running_mean, std::vector<T>& running_var, bool training,
                       T momentum = T(0.1), T eps = T(1e-5)) {
  if (x.rank() != 4) throw std::invalid_argument("batch_norm2d: rank-4 tensor required");
  const std::size_t b_dim = x.extent(0), c_dim = x.extent(1), plane = x.extent(2) * x.extent(3);
  if (gamma.size() != c_dim || beta.size() != c_dim || running_mean.size() != c_dim ||
      running_var.size() != c_dim) {
    throw std::invalid_argument("batch_norm2d: parameter sizes must equal channel count");
  }
  const std::size_t n = b_dim * plane;
  const auto& xv = x.values();

  std::vector<T> mean(c_dim), var(c_dim);
  if (training) {
    for (std::size_t c = 0; c < c_dim; ++c) {
      T m = T(0);
      for (std::size_t b = 0; b < b_dim; ++b) {
        const T* p = xv.data() + (b * c_dim + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) m += p[i];
      }
      m /= static_cast<T>(n);
      T v = T(0);
      for (std::size_t b = 0; b < b_dim; ++b) {
        const T* p = xv.data() + (b * c_dim + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const T d = p[i] - m;
          v += d * d;
        }
      }
      v /= static_cast<T>(n);
      mean[c] = m;
      var[c] = v;
      running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * m;
      running_var[c] = (T(1) - momentum) * running_var[c] + momentum * v;
    }
  } else {
    mean = running_mean;
    var = running_var;
  }

  std::vector<T> out(x.size());
  auto xhat = std::make_shared<std::vector<T>>(x.size());
  auto inv_std = std::make_shared<std::vector<T>>(c_dim);
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  for (std::size_t c = 0; c < c_dim; ++c) {
    (*inv_std)[c] = T(1) / std::sqrt(var[c] + eps);
  }
  for (std::size_t b = 0; b < b_dim; ++b) {
    for (std::size_t c = 0; c < c_dim; ++c) {
      const T* p = xv.data() + (b * c_dim + c) * plane;
      T* op = out.data() + (b * c_dim + c) * plane;
      T* xh = xhat->data() + (b * c_dim + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = (p[i] - mean[c]) * (*inv_std)[c];
        op[i] = gv[c] * xh[i] + bv[c];
      }
    }
  }

  auto xn = x.node();
  auto gn = gamma.node();
  auto btn = beta.node();
  return make_op<T>(
      x.shape(), std::move(out), {x, gamma, beta},
      [xn, gn, btn, xhat, inv_std, b_dim, c_dim, plane, n, training](TensorNode<T>& node) {
        auto& gx = xn->ensure_grad();
        auto& gg = gn->ensure_grad();
        auto& gb = btn->ensure_grad();
        const auto& gv = gn->values;
        for (std::size_t c = 0; c < c_dim; ++c) {
          T sum_g = T(0), sum_g_xhat = T(0);
          for (std::size_t b = 0; b < b_dim; ++b) {
            const std::size_t base = (b * c_dim + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              sum_g += node.grad[base + i];
              sum_g_xhat += node.grad[base + i] * (*xhat)[base + i];
            }
          }
          gg[c] += sum_g_xhat;
          gb[c] += sum_g;
          const T istd = (*inv_std)[c];
          const T mean_gy = gv[c] * sum_g / static_cast<T>(n);
          const T mean_gy_xhat = gv[c] * sum_g_xhat / static_cast<T>(n);
          for (std::size_t b = 0; b < b_dim; ++b) {
            const std::size_t base = (b * c_dim + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              const T gy = node.grad[base + i] * gv[c];
              if (training) {
                gx[base + i] += istd * (gy - mean_gy - (*xhat)[base + i] * mean_gy_xhat);
              } else {
                gx[base + i] += istd * gy;
              }
            }
          }
        }
      });
}

inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluA = 0.044715;

// GeLU, tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const auto& xv = x.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = static_cast<double>(xv[i]);
    out[i] = static_cast<T>(0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))));
  }
  auto xn = x.node();
  return make_op<T>(x.shape(), std::move(out), {x}, [xn](TensorNode<T>& node) {
    auto& gx = xn->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = static_cast<double>(xn->values[i]);
      const double u = kGeluC * (v + kGeluA * v * v * v);
      const double th = std::tanh(u);
      const double d = 0.5 * (1.0 + th) +
                       0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      gx[i] += node.grad[i] * static_cast<T>(d);
    }
  });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& x) {
  const auto& xv = x.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(xv[i]);
  auto xn = x.node();
  auto saved = std::make_shared<std::vector<T>>(out);
  return make_op<T>(x.shape(), std::move(out), {x}, [xn, saved](TensorNode<T>& node) {
    auto& gx = xn->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const T y = (*saved)[i];
      gx[i] += node.grad[i] * (T(1) - y * y);
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  const auto& xv = x.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = T(1) / (T(1) + std::exp(-xv[i]));
  }
  auto xn = x.node();
  auto saved = std::make_shared<std::vector<T>>(out);
  return make_op<T>(x.shape(), std::move(out), {x}, [xn, saved](TensorNode<T>& node) {
    auto& gx = xn->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const T y = (*saved)[i];
      gx[i] += node.grad[i] * y * (T(1) - y);
    }
  });
}

namespace detail {

template <typename T, typename Fn>
void for_each_axis_slice(const std::vector<std::size_t>& shape, std::size_t axis, Fn&& fn) {
  std::size_t outer = 1, inner = 1;
  const std::size_t n = shape[axis];
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      fn(o * n * inner + j, inner, n);
    }
  }
}

}  // namespace detail

// Max-subtracted softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) throw std::invalid_argument("softmax: axis out of range");
  std::vector<T> out(x.size());
  const auto& xv = x.values();
  detail::for_each_axis_slice<T>(x.shape(), axis,
                                 [&](std::size_t base, std::size_t stride, std::size_t n) {
                                   T mx = xv[base];
                                   for (std::size_t i = 1; i < n; ++i) {
                                     mx = std::max(mx, xv[base + i * stride]);
                                   }
                                   T sum = T(0);
                                   for (std::size_t i = 0; i < n; ++i) {
                                     const T e = std::exp(xv[base + i * stride] - mx);
                                     out[base + i * stride] = e;
                                     sum += e;
                                   }
                                   for (std::size_t i = 0; i < n; ++i) {
                                     out[base + i * stride] /= sum;
                                   }
                                 });
  auto xn = x.node();
  auto saved = std::make_shared<std::vector<T>>(out);
  auto shape = x.shape();
  return make_op<T>(
      x.shape(), std::move(out), {x}, [xn, saved, shape, axis](TensorNode<T>& node) {
        auto& gx = xn->ensure_grad();
        detail::for_each_axis_slice<T>(
            shape, axis, [&](std::size_t base, std::size_t stride, std::size_t n) {
              T dot = T(0);
              for (std::size_t i = 0; i < n; ++i) {
                dot += node.grad[base + i * stride] * (*saved)[base + i * stride];
              }
              for (std::size_t i = 0; i < n; ++i) {
                const std::size_t k = base + i * stride;
                gx[k] += (*saved)[k] * (node.grad[k] - dot);
              }
            });
      });
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) throw std::invalid_argument("log_softmax: axis out of range");
  std::vector<T> out(x.size());
  const auto& xv = x.values();
  detail::for_each_axis_slice<T>(x.shape(), axis,
                                 [&](std::size_t base, std::size_t stride, std::size_t n) {
                                   T mx = xv[base];
                                   for (std::size_t i = 1; i < n; ++i) {
                                     mx = std::max(mx, xv[base + i * stride]);
                                   }
                                   T sum = T(0);
                                   for (std::size_t i = 0; i < n; ++i) {
                                     sum += std::exp(xv[base + i * stride] - mx);
                                   }
                                   const T lse = mx + std::log(sum);
                                   for (std::size_t i = 0; i < n; ++i) {
                                     out[base + i * stride] = xv[base + i * stride] - lse;
                                   }
                                 });
  auto xn = x.node();
  auto saved = std::make_shared<std::vector<T>>(out);
  auto shape = x.shape();
  return make_op<T>(
      x.shape(), std::move(out), {x}, [xn, saved, shape, axis](TensorNode<T>& node) {
        auto& gx = xn->ensure_grad();
        detail::for_each_axis_slice<T>(
            shape, axis, [&](std::size_t base, std::size_t stride, std::size_t n) {
              T gsum = T(0);
              for (std::size_t i = 0; i < n; ++i) gsum += node.grad[base + i * stride];
              for (std::size_t i = 0; i < n; ++i) {
                const std::size_t k = base + i * stride;
                gx[k] += node.grad[k] - std::exp((*saved)[k]) * gsum;
              }
            });
      });
}

// Inverted dropout: zero with probability p, survivors scaled by 1/(1-p).
// Identity when not training or p == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool training, std::mt19937& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw std::invalid_argument("dropout: p must be in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  auto mask = std::make_shared<std::vector<T>>(x.size());
  std::vector<T> out(x.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T m = dist(rng) < p ? T(0) : keep_scale;
    (*mask)[i] = m;
    out[i] = xv[i] * m;
  }
  auto xn = x.node();
  return make_op<T>(x.shape(), std::move(out), {x}, [xn, mask](TensorNode<T>& node) {
    auto& gx = xn->ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += node.grad[i] * (*mask)[i];
  });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool training, std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::mt19937::result_type>(seed));
  return dropout(x, p, training, rng);
}

}  // namespace okwugbe::nn
