#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "okwugbe/tensor.hpp"
#include "okwugbe/text.hpp"

namespace okwugbe::ctc {

inline constexpr std::size_t kBlank = 0;

// Fewest frames that can emit `labels`: one per label plus one separating
// blank per adjacent repeat.
inline std::size_t min_alignable_length(const std::vector<std::size_t>& labels) {
  std::size_t n = labels.size();
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    if (labels[i] == labels[i + 1]) ++n;
  }
  return n;
}

template <typename T>
struct CtcResult {
  double loss = 0.0;              // negative log-likelihood; +inf when infeasible
  std::vector<T> grad_log_probs;  // d loss / d log_probs, zero when infeasible
  bool feasible = true;
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

}  // namespace detail

// Forward-backward CTC over blank-augmented labels, entirely in log space.
// log_probs is (n_frames, n_classes) row-major; rows must be valid
// log-distributions. Labels must not contain the blank.
template <typename T>
CtcResult<T> ctc_loss(const std::vector<T>& log_probs, std::size_t n_frames,
                      std::size_t n_classes, const std::vector<std::size_t>& labels,
                      bool want_grad = true) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (n_frames == 0) throw std::invalid_argument("ctc_loss: n_frames must be >= 1");
  if (log_probs.size() != n_frames * n_classes) {
    throw std::invalid_argument("ctc_loss: log_probs size does not match frames * classes");
  }
  for (std::size_t id : labels) {
    if (id == kBlank || id >= n_classes) {
      throw std::invalid_argument("ctc_loss: label id " + std::to_string(id) +
                                  " out of range [1, " + std::to_string(n_classes) + ")");
    }
  }
  for (std::size_t t = 0; t < n_frames; ++t) {
    double lse = kNegInf;
    for (std::size_t k = 0; k < n_classes; ++k) {
      lse = detail::log_add(lse, static_cast<double>(log_probs[t * n_classes + k]));
    }
    if (std::abs(lse) > 1e-5) {
      throw std::invalid_argument("ctc_loss: row " + std::to_string(t) +
                                  " is not a log-distribution (logsumexp = " +
                                  std::to_string(lse) + ")");
    }
  }

  CtcResult<T> result;
  if (want_grad) result.grad_log_probs.assign(n_frames * n_classes, T(0));
  if (min_alignable_length(labels) > n_frames) {
    result.loss = std::numeric_limits<double>::infinity();
    result.feasible = false;
    return result;
  }

  const std::size_t S = 2 * labels.size() + 1;
  auto ext_label = [&labels](std::size_t s) {
    return (s % 2 == 0) ? kBlank : labels[s / 2];
  };
  auto lp = [&](std::size_t t, std::size_t k) {
    return static_cast<double>(log_probs[t * n_classes + k]);
  };

  std::vector<double> alpha(n_frames * S, kNegInf);
  alpha[0 * S + 0] = lp(0, kBlank);
  if (S > 1) alpha[0 * S + 1] = lp(0, ext_label(1));
  for (std::size_t t = 1; t < n_frames; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double acc = alpha[(t - 1) * S + s];
      if (s >= 1) acc = detail::log_add(acc, alpha[(t - 1) * S + s - 1]);
      if (s >= 2 && ext_label(s) != kBlank && ext_label(s) != ext_label(s - 2)) {
        acc = detail::log_add(acc, alpha[(t - 1) * S + s - 2]);
      }
      if (acc != kNegInf) alpha[t * S + s] = acc + lp(t, ext_label(s));
    }
  }
  double log_p = alpha[(n_frames - 1) * S + S - 1];
  if (S > 1) log_p = detail::log_add(log_p, alpha[(n_frames - 1) * S + S - 2]);
  result.loss = -log_p;

  if (!want_grad) return result;

  std::vector<double> beta(n_frames * S, kNegInf);
  beta[(n_frames - 1) * S + S - 1] = lp(n_frames - 1, kBlank);
  if (S > 1) beta[(n_frames - 1) * S + S - 2] = lp(n_frames - 1, ext_label(S - 2));
  for (std::size_t t = n_frames - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double acc = beta[(t + 1) * S + s];
      if (s + 1 < S) acc = detail::log_add(acc, beta[(t + 1) * S + s + 1]);
      if (s + 2 < S && ext_label(s + 2) != kBlank && ext_label(s + 2) != ext_label(s)) {
        acc = detail::log_add(acc, beta[(t + 1) * S + s + 2]);
      }
      if (acc != kNegInf) beta[t * S + s] = acc + lp(t, ext_label(s));
    }
  }

  // dL/d log p_t(k) = -exp(LSE_{s: l'_s = k}(alpha + beta) - logP - log p_t(k));
  // alpha and beta both include the frame-t emission, hence the division.
  std::vector<double> per_class(n_classes);
  for (std::size_t t = 0; t < n_frames; ++t) {
    std::fill(per_class.begin(), per_class.end(), kNegInf);
    for (std::size_t s = 0; s < S; ++s) {
      const double ab = alpha[t * S + s] == kNegInf || beta[t * S + s] == kNegInf
                            ? kNegInf
                            : alpha[t * S + s] + beta[t * S + s];
      if (ab == kNegInf) continue;
      const std::size_t k = ext_label(s);
      per_class[k] = detail::log_add(per_class[k], ab);
    }
    for (std::size_t k = 0; k < n_classes; ++k) {
      if (per_class[k] == kNegInf) continue;
      result.grad_log_probs[t * n_classes + k] =
          static_cast<T>(-std::exp(per_class[k] - log_p - lp(t, k)));
    }
  }
  return result;
}

// Tape node wrapping ctc_loss: log_probs is a (T, K) tensor in the graph.
template <typename T>
nn::Tensor<T> ctc_loss_op(const nn::Tensor<T>& log_probs,
                          const std::vector<std::size_t>& labels) {
  if (log_probs.rank() != 2) throw std::invalid_argument("ctc_loss_op: rank-2 input required");
  const std::size_t n_frames = log_probs.extent(0);
  const std::size_t n_classes = log_probs.extent(1);
  CtcResult<T> res = ctc_loss(log_probs.values(), n_frames, n_classes, labels, true);
  auto grad = std::make_shared<std::vector<T>>(std::move(res.grad_log_probs));
  auto xn = log_probs.node();
  return nn::make_op<T>({}, std::vector<T>{static_cast<T>(res.loss)}, {log_probs},
                        [xn, grad](nn::TensorNode<T>& node) {
                          auto& gx = xn->ensure_grad();
                          for (std::size_t i = 0; i < gx.size(); ++i) {
                            gx[i] += node.grad[0] * (*grad)[i];
                          }
                        });
}

// Per-frame argmax (ties break toward the lowest class index), collapse
// adjacent repeats, delete blanks.
template <typename T>
std::vector<std::size_t> greedy_path(const std::vector<T>& log_probs, std::size_t n_frames,
                                     std::size_t n_classes) {
  std::vector<std::size_t> ids;
  std::size_t prev = n_classes;  // sentinel
  for (std::size_t t = 0; t < n_frames; ++t) {
    const T* row = log_probs.data() + t * n_classes;
    std::size_t best = 0;
    for (std::size_t k = 1; k < n_classes; ++k) {
      if (row[k] > row[best]) best = k;
    }
    if (best != prev && best != kBlank) ids.push_back(best);
    prev = best;
  }
  return ids;
}

template <typename T>
std::string greedy_decode(const std::vector<T>& log_probs, std::size_t n_frames,
                          const text::CharSet& cs) {
  const std::size_t n_classes = cs.size();
  text::LabelSequence seq;
  seq.ids = greedy_path(log_probs, n_frames, n_classes);
  return text::decode_text(seq, cs);
}

}  // namespace okwugbe::ctc
