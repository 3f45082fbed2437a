#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "okwugbe/nn_ops.hpp"
#include "okwugbe/okwp.hpp"
#include "okwugbe/rnn.hpp"
#include "okwugbe/tensor.hpp"

namespace okwugbe::model {

struct ModelConfig {
  std::size_t n_rcnn_blocks = 5;  // N
  std::size_t n_rnn_blocks = 3;   // M
  std::size_t cnn_channels = 32;
  std::size_t kernel_f = 3;
  std::size_t kernel_t = 3;
  std::size_t rnn_hidden = 512;  // embedding_size
  double dropout_p = 0.1;
  std::size_t n_mels = 128;
  std::size_t charset_size = 0;
  std::size_t stem_stride = 2;
  bool stem_batch_norm = true;

  void validate() const {
    if (n_rcnn_blocks < 1 || n_rnn_blocks < 1) {
      throw std::invalid_argument("model: N and M must be >= 1");
    }
    if (rnn_hidden == 0) throw std::invalid_argument("model: rnn_hidden must be positive");
    if (charset_size < 2) {
      throw std::invalid_argument("model: charset_size must be >= 2 (blank plus one symbol)");
    }
    if (n_mels == 0 || cnn_channels == 0) {
      throw std::invalid_argument("model: n_mels and cnn_channels must be positive");
    }
    if (stem_stride == 0) throw std::invalid_argument("model: stem_stride must be positive");
    if (kernel_f % 2 == 0 || kernel_t % 2 == 0) {
      throw std::invalid_argument("model: same-padded kernels must have odd extents");
    }
    if (dropout_p < 0.0 || dropout_p >= 1.0) {
      throw std::invalid_argument("model: dropout must be in [0, 1)");
    }
  }

  nlohmann::json to_json() const {
    return {{"N", n_rcnn_blocks},        {"M", n_rnn_blocks},
            {"cnn_channels", cnn_channels}, {"kernel_f", kernel_f},
            {"kernel_t", kernel_t},      {"embedding_size", rnn_hidden},
            {"dropout", dropout_p},      {"n_mels", n_mels},
            {"charset_size", charset_size}, {"stem_stride", stem_stride},
            {"stem_batch_norm", stem_batch_norm}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.n_rcnn_blocks = j.at("N").get<std::size_t>();
    c.n_rnn_blocks = j.at("M").get<std::size_t>();
    c.cnn_channels = j.at("cnn_channels").get<std::size_t>();
    c.kernel_f = j.at("kernel_f").get<std::size_t>();
    c.kernel_t = j.at("kernel_t").get<std::size_t>();
    c.rnn_hidden = j.at("embedding_size").get<std::size_t>();
    c.dropout_p = j.at("dropout").get<double>();
    c.n_mels = j.at("n_mels").get<std::size_t>();
    c.charset_size = j.at("charset_size").get<std::size_t>();
    c.stem_stride = j.at("stem_stride").get<std::size_t>();
    c.stem_batch_norm = j.at("stem_batch_norm").get<bool>();
    return c;
  }

  bool operator==(const ModelConfig&) const = default;
};

// Named parameters in registration order plus non-trainable buffers
// (batch-norm running statistics).
template <typename T>
class ParamStore {
 public:
  nn::Tensor<T> add(const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in,
                    std::mt19937& rng) {
    const T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(fan_in)));
    nn::Tensor<T> t = nn::Tensor<T>::uniform(std::move(shape), -bound, bound, rng);
    t.set_requires_grad(true);
    named_.emplace_back(name, t);
    return t;
  }

  nn::Tensor<T> add_const(const std::string& name, std::vector<std::size_t> shape, T value) {
    nn::Tensor<T> t(std::move(shape), value);
    t.set_requires_grad(true);
    named_.emplace_back(name, t);
    return t;
  }

  std::shared_ptr<std::vector<T>> add_buffer(const std::string& name, std::size_t size,
                                             T value) {
    auto buf = std::make_shared<std::vector<T>>(size, value);
    buffers_.emplace_back(name, buf);
    return buf;
  }

  std::vector<std::pair<std::string, nn::Tensor<T>>>& named() { return named_; }
  const std::vector<std::pair<std::string, nn::Tensor<T>>>& named() const { return named_; }
  const std::vector<std::pair<std::string, std::shared_ptr<std::vector<T>>>>& buffers() const {
    return buffers_;
  }

  nn::Tensor<T> find(const std::string& name) const {
    for (const auto& [n, t] : named_) {
      if (n == name) return t;
    }
    throw std::runtime_error("no parameter named " + name);
  }

  void zero_grad() {
    for (auto& [n, t] : named_) t.zero_grad();
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : named_) n += t.size();
    return n;
  }

  std::vector<okwp::Entry> to_entries() const {
    std::vector<okwp::Entry> entries;
    entries.reserve(named_.size() + buffers_.size());
    for (const auto& [name, t] : named_) {
      okwp::Entry e;
      e.name = name;
      e.shape = t.shape();
      e.data.assign(t.values().begin(), t.values().end());
      entries.push_back(std::move(e));
    }
    for (const auto& [name, buf] : buffers_) {
      okwp::Entry e;
      e.name = name;
      e.shape = {buf->size()};
      e.data.assign(buf->begin(), buf->end());
      entries.push_back(std::move(e));
    }
    return entries;
  }

  void load_entries(const std::vector<okwp::Entry>& entries) {
    auto take = [&entries](const std::string& name) -> const okwp::Entry& {
      for (const auto& e : entries) {
        if (e.name == name) return e;
      }
      throw std::runtime_error("parameter file is missing " + name);
    };
    for (auto& [name, t] : named_) {
      const okwp::Entry& e = take(name);
      if (e.shape != t.shape()) {
        throw std::runtime_error("parameter " + name + " has shape " + nn::shape_str(e.shape) +
                                 " in file, expected " + nn::shape_str(t.shape()));
      }
      for (std::size_t i = 0; i < e.data.size(); ++i) {
        t.values()[i] = static_cast<T>(e.data[i]);
      }
    }
    for (auto& [name, buf] : buffers_) {
      const okwp::Entry& e = take(name);
      if (e.data.size() != buf->size()) {
        throw std::runtime_error("buffer " + name + " has wrong size in file");
      }
      for (std::size_t i = 0; i < e.data.size(); ++i) {
        (*buf)[i] = static_cast<T>(e.data[i]);
      }
    }
  }

 private:
  std::vector<std::pair<std::string, nn::Tensor<T>>> named_;
  std::vector<std::pair<std::string, std::shared_ptr<std::vector<T>>>> buffers_;
};

// w1: d -> d/2 (no bias), w2: d/2 -> d/2 (no bias), v: d/2 -> d (with bias).
// Bias-free w1/w2 keep zero-padded hidden rows neutral under tanh.
template <typename T>
struct AttentionHead {
  nn::Tensor<T> w1;
  nn::Tensor<T> w2;
  nn::Tensor<T> v_w;
  nn::Tensor<T> v_b;
};

// Zero-extends the hidden state along axis 1 so it aligns with the decoder
// output's time extent.
template <typename T>
nn::Tensor<T> pad_hidden_state(const nn::Tensor<T>& h, std::size_t target_k) {
  return nn::pad_axis1(h, target_k);
}

// s = v(tanh(w1(x) + w2(h))); weights = softmax(s) over the feature axis;
// context = weights * x elementwise; output = concat(context, x).
template <typename T>
nn::Tensor<T> attention_apply(const nn::Tensor<T>& x, const nn::Tensor<T>& h_padded,
                              const AttentionHead<T>& head) {
  if (x.rank() != 3 || h_padded.rank() != 3) {
    throw std::invalid_argument("attention_apply: rank-3 tensors required");
  }
  if (x.extent(0) != h_padded.extent(0) || x.extent(1) != h_padded.extent(1)) {
    throw std::invalid_argument("attention_apply: misaligned extents after padding: x " +
                                nn::shape_str(x.shape()) + " vs h " +
                                nn::shape_str(h_padded.shape()));
  }
  if (h_padded.extent(2) * 2 != x.extent(2)) {
    throw std::invalid_argument("attention_apply: hidden feature dim must be half of x's");
  }
  nn::Tensor<T> scores =
      nn::linear(nn::tanh_op(nn::add(nn::linear(x, head.w1), nn::linear(h_padded, head.w2))),
                 head.v_w, &head.v_b);
  nn::Tensor<T> weights = nn::softmax(scores, 2);
  nn::Tensor<T> context = nn::mul(weights, x);
  return nn::concat_last(context, x);
}

template <typename T>
struct RcnnBlock {
  nn::Tensor<T> ln1_gamma, ln1_beta, conv1_w, conv1_b;
  nn::Tensor<T> ln2_gamma, ln2_beta, conv2_w, conv2_b;
};

template <typename T>
struct EncoderBlock {
  nn::Tensor<T> ln_gamma, ln_beta;
  nn::RnnDirectionParams<T> fwd, bwd;
};

template <typename T>
struct DecoderBlock {
  std::size_t input_dim = 0;  // BiGRU hidden = input_dim / 2
  nn::Tensor<T> ln_gamma, ln_beta;
  nn::RnnDirectionParams<T> fwd, bwd;
  AttentionHead<T> attn;
};

template <typename T>
struct ModelOutput {
  nn::Tensor<T> log_probs;          // (B, T', charset_size)
  std::vector<std::size_t> lengths;  // valid frames per utterance after the stem
};

template <typename T>
class AcousticModel {
 public:
  AcousticModel(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::mt19937 rng(static_cast<std::mt19937::result_type>(init_seed));
    const std::size_t c = cfg_.cnn_channels;
    const std::size_t kf = cfg_.kernel_f, kt = cfg_.kernel_t;

    stem_w_ = store_.add("stem.conv.weight", {c, 1, kf, kt}, kf * kt, rng);
    stem_b_ = store_.add("stem.conv.bias", {c}, kf * kt, rng);
    if (cfg_.stem_batch_norm) {
      bn_gamma_ = store_.add_const("stem.bn.gamma", {c}, T(1));
      bn_beta_ = store_.add_const("stem.bn.beta", {c}, T(0));
      bn_mean_ = store_.add_buffer("stem.bn.running_mean", c, T(0));
      bn_var_ = store_.add_buffer("stem.bn.running_var", c, T(1));
    }

    f_post_stem_ = ceil_div(cfg_.n_mels, cfg_.stem_stride);
    for (std::size_t i = 0; i < cfg_.n_rcnn_blocks; ++i) {
      const std::string p = "rcnn." + std::to_string(i) + ".";
      RcnnBlock<T> blk;
      blk.ln1_gamma = store_.add_const(p + "ln1.gamma", {f_post_stem_}, T(1));
      blk.ln1_beta = store_.add_const(p + "ln1.beta", {f_post_stem_}, T(0));
      blk.conv1_w = store_.add(p + "conv1.weight", {c, c, kf, kt}, c * kf * kt, rng);
      blk.conv1_b = store_.add(p + "conv1.bias", {c}, c * kf * kt, rng);
      blk.ln2_gamma = store_.add_const(p + "ln2.gamma", {f_post_stem_}, T(1));
      blk.ln2_beta = store_.add_const(p + "ln2.beta", {f_post_stem_}, T(0));
      blk.conv2_w = store_.add(p + "conv2.weight", {c, c, kf, kt}, c * kf * kt, rng);
      blk.conv2_b = store_.add(p + "conv2.bias", {c}, c * kf * kt, rng);
      rcnn_.push_back(std::move(blk));
    }

    const std::size_t h = cfg_.rnn_hidden;
    flatten_w_ = store_.add("flatten.fc.weight", {c * f_post_stem_, h}, c * f_post_stem_, rng);
    flatten_b_ = store_.add("flatten.fc.bias", {h}, c * f_post_stem_, rng);

    for (std::size_t i = 0; i < cfg_.n_rnn_blocks; ++i) {
      const std::string p = "encoder." + std::to_string(i) + ".";
      const std::size_t in = i == 0 ? h : 2 * h;
      EncoderBlock<T> blk;
      blk.ln_gamma = store_.add_const(p + "ln.gamma", {in}, T(1));
      blk.ln_beta = store_.add_const(p + "ln.beta", {in}, T(0));
      blk.fwd.lstm = make_lstm(p + "lstm.fwd.", in, h, rng);
      blk.bwd.lstm = make_lstm(p + "lstm.bwd.", in, h, rng);
      encoder_.push_back(std::move(blk));
    }

    std::size_t dec_in = 2 * h;
    for (std::size_t i = 0; i < cfg_.n_rnn_blocks; ++i) {
      const std::string p = "decoder." + std::to_string(i) + ".";
      DecoderBlock<T> blk;
      blk.input_dim = dec_in;
      const std::size_t hidden = dec_in / 2;
      blk.ln_gamma = store_.add_const(p + "ln.gamma", {dec_in}, T(1));
      blk.ln_beta = store_.add_const(p + "ln.beta", {dec_in}, T(0));
      blk.fwd.gru = make_gru(p + "gru.fwd.", dec_in, hidden, rng);
      blk.bwd.gru = make_gru(p + "gru.bwd.", dec_in, hidden, rng);
      // BiGRU output dim d equals dec_in; w1: d -> d/2, w2: d/2 -> d/2,
      // v: d/2 -> d.
      blk.attn.w1 = store_.add(p + "attn.w1.weight", {dec_in, hidden}, dec_in, rng);
      blk.attn.w2 = store_.add(p + "attn.w2.weight", {hidden, hidden}, hidden, rng);
      blk.attn.v_w = store_.add(p + "attn.v.weight", {hidden, dec_in}, hidden, rng);
      blk.attn.v_b = store_.add(p + "attn.v.bias", {dec_in}, hidden, rng);
      decoder_.push_back(std::move(blk));
      dec_in *= 2;  // concat(context, x) doubles the width per block
    }

    classifier_w_ = store_.add("classifier.weight", {dec_in, cfg_.charset_size}, dec_in, rng);
    classifier_b_ = store_.add("classifier.bias", {cfg_.charset_size}, dec_in, rng);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }

  static std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

  std::size_t min_input_frames() const { return cfg_.stem_stride + 1; }

  std::size_t post_stem_length(std::size_t frames) const {
    return ceil_div(frames, cfg_.stem_stride);
  }

  std::size_t decoder_output_dim() const {
    return 2 * cfg_.rnn_hidden * (std::size_t(1) << cfg_.n_rnn_blocks);
  }

  // mels: (B, n_mels, T); lengths: valid frames per utterance.
  ModelOutput<T> forward(const nn::Tensor<T>& mels, const std::vector<std::size_t>& lengths,
                         bool training, std::mt19937* dropout_rng) {
    if (mels.rank() != 3 || mels.extent(1) != cfg_.n_mels) {
      throw std::invalid_argument("model: input must be (B, " + std::to_string(cfg_.n_mels) +
                                  ", T), got " + nn::shape_str(mels.shape()));
    }
    const std::size_t b_dim = mels.extent(0);
    const std::size_t t_in = mels.extent(2);
    if (lengths.size() != b_dim) {
      throw std::invalid_argument("model: lengths size must equal batch size");
    }
    if (t_in < min_input_frames()) {
      throw std::invalid_argument(
          "model: input of " + std::to_string(t_in) + " frames does not survive the stem " +
          "stride; at least " + std::to_string(min_input_frames()) + " frames are required");
    }
    if (training && cfg_.dropout_p > 0.0 && dropout_rng == nullptr) {
      throw std::invalid_argument("model: training forward needs a dropout rng");
    }

    std::vector<std::size_t> out_lengths(b_dim);
    for (std::size_t b = 0; b < b_dim; ++b) {
      if (lengths[b] == 0 || lengths[b] > t_in) {
        throw std::invalid_argument("model: invalid utterance length");
      }
      out_lengths[b] = post_stem_length(lengths[b]);
    }

    nn::Tensor<T> x = nn::reshape(mels, {b_dim, 1, cfg_.n_mels, t_in});
    nn::Conv2dSpec stem_spec;
    stem_spec.stride_f = cfg_.stem_stride;
    stem_spec.stride_t = cfg_.stem_stride;
    stem_spec.pad_f = cfg_.kernel_f / 2;
    stem_spec.pad_t = cfg_.kernel_t / 2;
    stem_spec.exact_extents = false;  // floor semantics give T' = ceil(T/stride)
    x = nn::conv2d(x, stem_w_, &stem_b_, stem_spec);
    if (cfg_.stem_batch_norm) {
      x = nn::batch_norm2d(x, bn_gamma_, bn_beta_, *bn_mean_, *bn_var_, training);
    }
    x = nn::mask_time(x, out_lengths, 3);

    for (const auto& blk : rcnn_) {
      x = rcnn_block_forward(blk, x, training, dropout_rng);
      x = nn::mask_time(x, out_lengths, 3);
    }

    x = flatten_forward(x);

    for (const auto& blk : encoder_) {
      x = encoder_block_forward(blk, x, out_lengths, training, dropout_rng);
    }
    for (const auto& blk : decoder_) {
      x = decoder_block_forward(blk, x, out_lengths, training, dropout_rng);
    }

    nn::Tensor<T> logits = nn::linear(x, classifier_w_, &classifier_b_);
    ModelOutput<T> out;
    out.log_probs = nn::log_softmax(logits, 2);
    out.lengths = std::move(out_lengths);
    return out;
  }

  // out = x + f2(f1(x)), f = Conv(Dropout(GeLU(LayerNorm(.)))).
  nn::Tensor<T> rcnn_block_forward(const RcnnBlock<T>& blk, const nn::Tensor<T>& x,
                                   bool training, std::mt19937* rng) const {
    nn::Conv2dSpec same;
    same.pad_f = cfg_.kernel_f / 2;
    same.pad_t = cfg_.kernel_t / 2;
    nn::Tensor<T> y = nn::layer_norm(x, 2, blk.ln1_gamma, blk.ln1_beta);
    y = nn::gelu(y);
    y = apply_dropout(y, training, rng);
    y = nn::conv2d(y, blk.conv1_w, &blk.conv1_b, same);
    y = nn::layer_norm(y, 2, blk.ln2_gamma, blk.ln2_beta);
    y = nn::gelu(y);
    y = apply_dropout(y, training, rng);
    y = nn::conv2d(y, blk.conv2_w, &blk.conv2_b, same);
    if (y.shape() != x.shape()) {
      throw std::runtime_error("rcnn block changed tensor shape");
    }
    return nn::add(x, y);
  }

  // (B, C, F', T') -> (B, T', C*F') -> linear to rnn_hidden.
  nn::Tensor<T> flatten_forward(const nn::Tensor<T>& x) const {
    const std::size_t b = x.extent(0), c = x.extent(1), f = x.extent(2), t = x.extent(3);
    nn::Tensor<T> y = nn::permute(x, {0, 3, 1, 2});
    y = nn::reshape(y, {b, t, c * f});
    return nn::linear(y, flatten_w_, &flatten_b_);
  }

  nn::Tensor<T> encoder_block_forward(const EncoderBlock<T>& blk, const nn::Tensor<T>& x,
                                      const std::vector<std::size_t>& lengths, bool training,
                                      std::mt19937* rng) const {
    nn::Tensor<T> y = nn::layer_norm(x, 2, blk.ln_gamma, blk.ln_beta);
    y = nn::gelu(y);
    auto rnn = nn::bidirectional_rnn(y, lengths, nn::RnnKind::kLstm, blk.fwd, blk.bwd);
    return apply_dropout(rnn.outputs, training, rng);
  }

  nn::Tensor<T> decoder_block_forward(const DecoderBlock<T>& blk, const nn::Tensor<T>& x,
                                      const std::vector<std::size_t>& lengths, bool training,
                                      std::mt19937* rng) const {
    nn::Tensor<T> y = nn::layer_norm(x, 2, blk.ln_gamma, blk.ln_beta);
    y = nn::gelu(y);
    auto rnn = nn::bidirectional_rnn(y, lengths, nn::RnnKind::kGru, blk.fwd, blk.bwd);
    nn::Tensor<T> padded = pad_hidden_state(rnn.final_hidden, rnn.outputs.extent(1));
    nn::Tensor<T> attended = attention_apply(rnn.outputs, padded, blk.attn);
    return apply_dropout(attended, training, rng);
  }

  const std::vector<RcnnBlock<T>>& rcnn_blocks() const { return rcnn_; }
  const std::vector<EncoderBlock<T>>& encoder_blocks() const { return encoder_; }
  const std::vector<DecoderBlock<T>>& decoder_blocks() const { return decoder_; }

 private:
  nn::Tensor<T> apply_dropout(const nn::Tensor<T>& x, bool training, std::mt19937* rng) const {
    if (!training || cfg_.dropout_p == 0.0) return x;
    return nn::dropout(x, cfg_.dropout_p, true, *rng);
  }

  nn::LstmParams<T> make_lstm(const std::string& prefix, std::size_t in, std::size_t hidden,
                              std::mt19937& rng) {
    nn::LstmParams<T> p;
    p.w_x = store_.add(prefix + "w_x", {in, 4 * hidden}, in, rng);
    p.w_h = store_.add(prefix + "w_h", {hidden, 4 * hidden}, hidden, rng);
    p.b = store_.add(prefix + "b", {4 * hidden}, hidden, rng);
    return p;
  }

  nn::GruParams<T> make_gru(const std::string& prefix, std::size_t in, std::size_t hidden,
                            std::mt19937& rng) {
    nn::GruParams<T> p;
    p.w_x = store_.add(prefix + "w_x", {in, 3 * hidden}, in, rng);
    p.w_h = store_.add(prefix + "w_h", {hidden, 3 * hidden}, hidden, rng);
    p.b_x = store_.add(prefix + "b_x", {3 * hidden}, hidden, rng);
    p.b_h = store_.add(prefix + "b_h", {3 * hidden}, hidden, rng);
    return p;
  }

  ModelConfig cfg_;
  ParamStore<T> store_;
  std::size_t f_post_stem_ = 0;

  nn::Tensor<T> stem_w_, stem_b_;
  nn::Tensor<T> bn_gamma_, bn_beta_;
  std::shared_ptr<std::vector<T>> bn_mean_, bn_var_;
  std::vector<RcnnBlock<T>> rcnn_;
  nn::Tensor<T> flatten_w_, flatten_b_;
  std::vector<EncoderBlock<T>> encoder_;
  std::vector<DecoderBlock<T>> decoder_;
  nn::Tensor<T> classifier_w_, classifier_b_;
};

}  // namespace okwugbe::model
