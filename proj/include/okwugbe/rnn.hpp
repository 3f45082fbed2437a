#pragma once

#include "okwugbe/nn_ops.hpp"
#include "okwugbe/tensor.hpp"

namespace okwugbe::nn {

// Gate order i, f, g, o packed along the output dim of w_x/w_h.
template <typename T>
struct LstmParams {
  Tensor<T> w_x;  // (in, 4H)
  Tensor<T> w_h;  // (H, 4H)
  Tensor<T> b;    // (4H)
};

// Gate order r, z, n. Separate input/hidden biases so the reset gate can
// scale (w_h h + b_h) before the candidate tanh.
template <typename T>
struct GruParams {
  Tensor<T> w_x;  // (in, 3H)
  Tensor<T> w_h;  // (H, 3H)
  Tensor<T> b_x;  // (3H)
  Tensor<T> b_h;  // (3H)
};

template <typename T>
struct LstmState {
  Tensor<T> h;  // (B, H)
  Tensor<T> c;  // (B, H)
};

// i = sig(.), f = sig(.), g = tanh(.), o = sig(.);
// c' = f c + i g; h' = o tanh(c').
template <typename T>
LstmState<T> lstm_cell(const Tensor<T>& x_t, const LstmState<T>& state,
                       const LstmParams<T>& p) {
  const std::size_t hidden = state.h.shape().back();
  if (p.w_h.extent(0) != hidden || p.w_x.extent(1) != 4 * hidden) {
    throw std::invalid_argument("lstm_cell: parameter dims do not match hidden size " +
                                std::to_string(hidden));
  }
  Tensor<T> z = linear(x_t, p.w_x, &p.b);
  z = add(z, linear(state.h, p.w_h));
  Tensor<T> i = sigmoid(slice_last(z, 0, hidden));
  Tensor<T> f = sigmoid(slice_last(z, hidden, hidden));
  Tensor<T> g = tanh_op(slice_last(z, 2 * hidden, hidden));
  Tensor<T> o = sigmoid(slice_last(z, 3 * hidden, hidden));
  Tensor<T> c_new = add(mul(f, state.c), mul(i, g));
  Tensor<T> h_new = mul(o, tanh_op(c_new));
  return {h_new, c_new};
}

// r = sig(.), z = sig(.), n = tanh(w_xn x + b_xn + r * (w_hn h + b_hn));
// h' = (1 - z) n + z h.
template <typename T>
Tensor<T> gru_cell(const Tensor<T>& x_t, const Tensor<T>& h, const GruParams<T>& p) {
  const std::size_t hidden = h.shape().back();
  if (p.w_h.extent(0) != hidden || p.w_x.extent(1) != 3 * hidden) {
    throw std::invalid_argument("gru_cell: parameter dims do not match hidden size " +
                                std::to_string(hidden));
  }
  Tensor<T> zx = linear(x_t, p.w_x, &p.b_x);
  Tensor<T> zh = linear(h, p.w_h, &p.b_h);
  Tensor<T> r = sigmoid(add(slice_last(zx, 0, hidden), slice_last(zh, 0, hidden)));
  Tensor<T> z = sigmoid(add(slice_last(zx, hidden, hidden), slice_last(zh, hidden, hidden)));
  Tensor<T> n =
      tanh_op(add(slice_last(zx, 2 * hidden, hidden), mul(r, slice_last(zh, 2 * hidden, hidden))));
  // h' = n + z (h - n)
  return add(n, mul(z, sub(h, n)));
}

enum class RnnKind { kLstm, kGru };

template <typename T>
struct RnnDirectionParams {
  LstmParams<T> lstm;
  GruParams<T> gru;
};

template <typename T>
struct BiRnnResult {
  Tensor<T> outputs;       // (B, T, 2H): forward and backward halves concatenated
  Tensor<T> final_hidden;  // (B, 2, H): row 0 forward final, row 1 backward final
};

namespace detail {

// Unidirectional masked scan. State freezes and outputs are zero at
// positions t >= lengths[b], so padded batches match per-utterance runs.
template <typename T>
std::pair<std::vector<Tensor<T>>, Tensor<T>> rnn_scan(const Tensor<T>& xs,
                                                      const std::vector<std::size_t>& lengths,
                                                      RnnKind kind,
                                                      const RnnDirectionParams<T>& p) {
  const std::size_t b_dim = xs.extent(0), t_dim = xs.extent(1);
  const std::size_t hidden =
      kind == RnnKind::kLstm ? p.lstm.w_h.extent(0) : p.gru.w_h.extent(0);
  Tensor<T> h({b_dim, hidden});
  Tensor<T> c({b_dim, hidden});
  Tensor<T> zero_row({b_dim, hidden});
  std::vector<Tensor<T>> outs;
  outs.reserve(t_dim);
  for (std::size_t t = 0; t < t_dim; ++t) {
    std::vector<std::uint8_t> mask(b_dim);
    bool any = false;
    for (std::size_t b = 0; b < b_dim; ++b) {
      mask[b] = t < lengths[b] ? 1 : 0;
      any = any || mask[b];
    }
    if (!any) {
      outs.push_back(zero_row);
      continue;
    }
    Tensor<T> x_t = slice_axis1(xs, t);
    Tensor<T> h_new;
    if (kind == RnnKind::kLstm) {
      LstmState<T> next = lstm_cell(x_t, LstmState<T>{h, c}, p.lstm);
      h_new = next.h;
      c = where_rows(mask, next.c, c);
    } else {
      h_new = gru_cell(x_t, h, p.gru);
    }
    outs.push_back(where_rows(mask, h_new, zero_row));
    h = where_rows(mask, h_new, h);
  }
  return {std::move(outs), h};
}

}  // namespace detail

// Forward pass plus a reversed-time pass, outputs concatenated on the
// feature axis. xs is (B, T, D); lengths give each sample's valid frames.
template <typename T>
BiRnnResult<T> bidirectional_rnn(const Tensor<T>& xs, const std::vector<std::size_t>& lengths,
                                 RnnKind kind, const RnnDirectionParams<T>& fwd,
                                 const RnnDirectionParams<T>& bwd) {
  if (xs.rank() != 3) throw std::invalid_argument("bidirectional_rnn: rank-3 input required");
  if (lengths.size() != xs.extent(0)) {
    throw std::invalid_argument("bidirectional_rnn: lengths size must equal batch extent");
  }

  auto [fwd_outs, fwd_final] = detail::rnn_scan(xs, lengths, kind, fwd);
  Tensor<T> reversed = reverse_time(xs, lengths);
  auto [bwd_outs_rev, bwd_final] = detail::rnn_scan(reversed, lengths, kind, bwd);

  Tensor<T> fwd_seq = stack_axis1(fwd_outs);
  Tensor<T> bwd_seq = reverse_time(stack_axis1(bwd_outs_rev), lengths);

  BiRnnResult<T> result;
  result.outputs = concat_last(fwd_seq, bwd_seq);
  result.final_hidden = stack_axis1(std::vector<Tensor<T>>{fwd_final, bwd_final});
  return result;
}

}  // namespace okwugbe::nn
