#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "okwugbe/checkpoint.hpp"
#include "okwugbe/ctc.hpp"
#include "okwugbe/data.hpp"
#include "okwugbe/logging.hpp"
#include "okwugbe/metrics.hpp"
#include "okwugbe/model.hpp"

namespace okwugbe::train {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// Decoupled weight decay with bias-corrected moments. `step` counts from 1.
template <typename T>
void adamw_step(std::vector<T>& params, const std::vector<T>& grads, std::vector<T>& m,
                std::vector<T>& v, std::size_t step, double lr, const AdamWConfig& cfg) {
  if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size()) {
    throw std::invalid_argument("adamw_step: shape mismatch between parameters and state");
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / bc1;
    const double v_hat = vi / bc2;
    const double update =
        lr * (m_hat / (std::sqrt(v_hat) + cfg.eps)) + lr * cfg.weight_decay * params[i];
    params[i] = static_cast<T>(static_cast<double>(params[i]) - update);
  }
}

// v <- mu v - lr g;  theta <- theta + v. The gradient must be evaluated at
// the lookahead point theta + mu v (the train loop arranges this).
template <typename T>
void nesterov_step(std::vector<T>& params, const std::vector<T>& grads_at_lookahead,
                   std::vector<T>& velocity, double lr, double momentum) {
  if (params.size() != grads_at_lookahead.size() || params.size() != velocity.size()) {
    throw std::invalid_argument("nesterov_step: shape mismatch between parameters and state");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double vi = momentum * static_cast<double>(velocity[i]) -
                      lr * static_cast<double>(grads_at_lookahead[i]);
    velocity[i] = static_cast<T>(vi);
    params[i] = static_cast<T>(static_cast<double>(params[i]) + vi);
  }
}

enum class Schedule { kOneCycle, kConstant };

// one_cycle: linear warm-up from max_lr/25 over the first 30% of steps,
// then cosine decay to max_lr/1e4 at the final step.
double lr_at(Schedule schedule, std::size_t step, std::size_t total_steps, double max_lr);

// Counts epochs without improvement; fires after exactly `patience`
// stagnant observations.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  bool observe(double metric);  // true when the metric improved
  bool should_stop() const { return stagnant_ >= patience_; }
  double best() const { return best_; }
  std::size_t stagnant_epochs() const { return stagnant_; }

 private:
  std::size_t patience_;
  std::size_t stagnant_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct TrainConfig {
  double max_lr = 5e-4;
  std::size_t batch_size = 20;
  std::size_t epochs = 500;
  std::size_t patience = 100;
  std::string optimizer = "adamw";  // adamw | nesterov
  std::uint64_t seed = 1;
  Schedule schedule = Schedule::kOneCycle;
  double grad_clip = 5.0;
  double nesterov_momentum = 0.9;
  AdamWConfig adamw;
  bool deterministic = false;

  void validate() const {
    if (max_lr <= 0) throw std::invalid_argument("training: max_learning_rate must be positive");
    if (batch_size == 0) throw std::invalid_argument("training: batch_size must be positive");
    if (epochs == 0) throw std::invalid_argument("training: epochs must be >= 1");
    if (patience == 0) throw std::invalid_argument("training: early stopping patience must be >= 1");
    if (optimizer != "adamw" && optimizer != "nesterov") {
      throw std::invalid_argument("training: unknown optimizer \"" + optimizer + "\"");
    }
  }
};

// Scales all gradients by max_norm/norm when the global norm exceeds it;
// returns the pre-clip norm.
template <typename T>
double clip_global_norm(model::ParamStore<T>& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, t] : params.named()) {
    for (T g : t.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& [name, t] : params.named()) {
      for (T& g : t.grad()) g = static_cast<T>(static_cast<double>(g) * scale);
    }
  }
  return norm;
}

template <typename T>
class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, model::ParamStore<T>& params) : cfg_(cfg) {
    for (auto& [name, t] : params.named()) {
      if (cfg_.optimizer == "adamw") {
        m_.emplace_back(t.size(), T(0));
        v_.emplace_back(t.size(), T(0));
      } else {
        velocity_.emplace_back(t.size(), T(0));
      }
    }
  }

  bool uses_lookahead() const { return cfg_.optimizer == "nesterov"; }

  // theta + mu v, snapshotting theta first.
  void apply_lookahead(model::ParamStore<T>& params) {
    snapshot_.clear();
    std::size_t i = 0;
    for (auto& [name, t] : params.named()) {
      snapshot_.push_back(t.values());
      auto& vals = t.values();
      for (std::size_t k = 0; k < vals.size(); ++k) {
        vals[k] = static_cast<T>(static_cast<double>(vals[k]) +
                                 cfg_.nesterov_momentum * static_cast<double>(velocity_[i][k]));
      }
      ++i;
    }
  }

  void restore_lookahead(model::ParamStore<T>& params) {
    std::size_t i = 0;
    for (auto& [name, t] : params.named()) {
      t.values() = snapshot_[i];
      ++i;
    }
    snapshot_.clear();
  }

  void step(model::ParamStore<T>& params, double lr) {
    ++step_count_;
    std::size_t i = 0;
    for (auto& [name, t] : params.named()) {
      if (cfg_.optimizer == "adamw") {
        adamw_step(t.values(), t.grad(), m_[i], v_[i], step_count_, lr, cfg_.adamw);
      } else {
        nesterov_step(t.values(), t.grad(), velocity_[i], lr, cfg_.nesterov_momentum);
      }
      ++i;
    }
  }

  std::size_t step_count() const { return step_count_; }

  std::vector<okwp::Entry> to_entries(const model::ParamStore<T>& params) const {
    std::vector<okwp::Entry> entries;
    okwp::Entry meta;
    meta.name = "optimizer.step_count";
    meta.shape = {1};
    meta.data = {static_cast<float>(step_count_)};
    entries.push_back(std::move(meta));
    std::size_t i = 0;
    for (const auto& [name, t] : params.named()) {
      if (cfg_.optimizer == "adamw") {
        entries.push_back({"adamw.m." + name, t.shape(),
                           std::vector<float>(m_[i].begin(), m_[i].end())});
        entries.push_back({"adamw.v." + name, t.shape(),
                           std::vector<float>(v_[i].begin(), v_[i].end())});
      } else {
        entries.push_back({"nesterov.v." + name, t.shape(),
                           std::vector<float>(velocity_[i].begin(), velocity_[i].end())});
      }
      ++i;
    }
    return entries;
  }

 private:
  TrainConfig cfg_;
  std::size_t step_count_ = 0;
  std::vector<std::vector<T>> m_, v_;      // adamw moments
  std::vector<std::vector<T>> velocity_;   // nesterov
  std::vector<std::vector<T>> snapshot_;   // parameters before lookahead
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double val_wer = 0.0;
  double val_cer = 0.0;
  double lr = 0.0;
  std::size_t skipped_utterances = 0;
};

struct TrainResult {
  std::string best_checkpoint;  // base path without extension
  double best_val_wer = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::vector<EpochStats> history;
  std::size_t steps_run = 0;
  bool early_stopped = false;
};

struct TrainData {
  std::vector<data::ManifestEntry> train;
  std::vector<data::ManifestEntry> val;
};

// Decodes one utterance in eval mode (no graph, dropout off).
template <typename T>
std::string decode_utterance(model::AcousticModel<T>& m, const audio::MelSpectrogram& feat,
                             const text::CharSet& cs) {
  nn::NoGradGuard ng;
  std::vector<const audio::MelSpectrogram*> one{&feat};
  data::Batch<T> batch = data::collate<T>(one, {text::LabelSequence{}}, 1);
  auto out = m.forward(batch.features, batch.feature_lengths, false, nullptr);
  const std::size_t frames = out.lengths[0];
  const std::size_t k = m.config().charset_size;
  std::vector<T> rows(frames * k);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < k; ++c) {
      rows[t * k + c] = out.log_probs.values()[t * k + c];
    }
  }
  return ctc::greedy_decode(rows, frames, cs);
}

template <typename T>
TrainResult train(model::AcousticModel<T>& m, const text::CharSet& cs,
                  const audio::FrontendConfig& fcfg, const audio::MelFilterbank& fb,
                  const audio::SpecAugmentConfig& augment, const TrainData& datasets,
                  const TrainConfig& tcfg, const std::string& run_dir,
                  const std::string& config_hash) {
  namespace fs = std::filesystem;
  tcfg.validate();
  if (datasets.train.empty()) throw std::invalid_argument("training: empty training set");
  if (datasets.val.empty()) throw std::invalid_argument("training: empty validation set");
  fs::create_directories(run_dir);

  // Featurize once; augmentation operates on copies per epoch.
  std::vector<audio::MelSpectrogram> train_feats;
  std::vector<text::LabelSequence> train_labels;
  for (const auto& e : datasets.train) {
    train_feats.push_back(data::featurize_entry(e, fcfg, fb));
    train_labels.push_back(text::encode(e.transcript, cs));
  }
  std::vector<audio::MelSpectrogram> val_feats;
  for (const auto& e : datasets.val) val_feats.push_back(data::featurize_entry(e, fcfg, fb));

  const std::size_t n_train = train_feats.size();
  const std::size_t steps_per_epoch = (n_train + tcfg.batch_size - 1) / tcfg.batch_size;
  const std::size_t total_steps = steps_per_epoch * tcfg.epochs;
  const bool use_augment = (augment.n_freq_masks > 0 && augment.max_freq_mask_width > 0) ||
                           (augment.n_time_masks > 0 && augment.max_time_mask_width > 0);

  Optimizer<T> optimizer(tcfg, m.params());
  EarlyStopping stopper(tcfg.patience);
  std::mt19937 shuffle_rng(static_cast<std::mt19937::result_type>(tcfg.seed));
  std::mt19937 dropout_rng(static_cast<std::mt19937::result_type>(tcfg.seed ^ 0x9E3779B97F4A7C15ULL));

  std::ofstream history_log(fs::path(run_dir) / "history.jsonl");
  if (!history_log) throw std::runtime_error("cannot create history log in " + run_dir);

  TrainResult result;
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::size_t skipped = 0;
    double lr = tcfg.max_lr;

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t begin = step * tcfg.batch_size;
      const std::size_t end = std::min(begin + tcfg.batch_size, n_train);
      std::vector<audio::MelSpectrogram> augmented;
      std::vector<const audio::MelSpectrogram*> feats;
      std::vector<text::LabelSequence> labels;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        if (use_augment) {
          audio::SpecAugmentConfig per_utt = augment;
          per_utt.seed = augment.seed * 1000003ULL + epoch * 131ULL + idx;
          augmented.push_back(audio::spec_augment(train_feats[idx], per_utt));
        }
        labels.push_back(train_labels[idx]);
      }
      if (use_augment) {
        for (const auto& f : augmented) feats.push_back(&f);
      } else {
        for (std::size_t i = begin; i < end; ++i) feats.push_back(&train_feats[order[i]]);
      }

      data::Batch<T> batch = data::collate<T>(feats, std::move(labels), m.config().stem_stride);

      if (optimizer.uses_lookahead()) optimizer.apply_lookahead(m.params());

      auto out = m.forward(batch.features, batch.feature_lengths, true, &dropout_rng);
      nn::Tensor<T> loss;
      std::size_t feasible = 0;
      for (std::size_t b = 0; b < batch.labels.size(); ++b) {
        if (!batch.ctc_feasible[b]) {
          ++skipped;
          OKWUGBE_WARN("epoch %zu step %zu: skipping utterance with unalignable target", epoch,
                       step);
          continue;
        }
        nn::Tensor<T> rows = nn::slice_batch_time(out.log_probs, b, out.lengths[b]);
        nn::Tensor<T> utt_loss = ctc::ctc_loss_op(rows, batch.labels[b].ids);
        loss = loss.defined() ? nn::add(loss, utt_loss) : utt_loss;
        ++feasible;
      }
      if (feasible == 0) {
        if (optimizer.uses_lookahead()) optimizer.restore_lookahead(m.params());
        continue;
      }
      loss = nn::scale(loss, static_cast<T>(1.0 / static_cast<double>(feasible)));
      const double loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error("training aborted: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", step " + std::to_string(step) +
                                 " (batch of " + std::to_string(end - begin) + " utterances)");
      }
      loss_sum += loss_value;
      ++loss_count;

      m.params().zero_grad();
      loss.backward();
      if (optimizer.uses_lookahead()) optimizer.restore_lookahead(m.params());
      clip_global_norm(m.params(), tcfg.grad_clip);
      lr = lr_at(tcfg.schedule, result.steps_run, total_steps, tcfg.max_lr);
      optimizer.step(m.params(), lr);
      ++result.steps_run;
    }

    if (loss_count == 0) {
      throw std::runtime_error("training aborted: every utterance in epoch " +
                               std::to_string(epoch) + " had an unalignable CTC target");
    }

    // Validation: greedy decode against references.
    metrics::CorpusAccumulator corpus;
    for (std::size_t i = 0; i < val_feats.size(); ++i) {
      const std::string hyp = decode_utterance(m, val_feats[i], cs);
      corpus.add(datasets.val[i].transcript, hyp);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(loss_count);
    stats.val_wer = corpus.word_report().rate_percent;
    stats.val_cer = corpus.char_report().rate_percent;
    stats.lr = lr;
    stats.skipped_utterances = skipped;
    result.history.push_back(stats);

    nlohmann::json line = {{"epoch", stats.epoch},     {"loss", stats.mean_loss},
                           {"val_wer", stats.val_wer}, {"val_cer", stats.val_cer},
                           {"lr", stats.lr},           {"skipped", stats.skipped_utterances}};
    history_log << line.dump() << '\n';
    history_log.flush();
    OKWUGBE_INFO("epoch %zu: loss %.4f, val WER %.2f%%, val CER %.2f%%", epoch, stats.mean_loss,
                 stats.val_wer, stats.val_cer);

    const bool improved = stopper.observe(stats.val_wer);
    if (improved) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04zu", epoch);
      const std::string base = (fs::path(run_dir) / name).string();
      checkpoint::Sidecar sidecar;
      sidecar.model_cfg = m.config();
      sidecar.frontend_cfg = fcfg;
      sidecar.charset_symbols = cs.symbols();
      sidecar.charset_hash = cs.hash();
      sidecar.epoch = epoch;
      sidecar.val_wer = stats.val_wer;
      sidecar.config_hash = config_hash;
      checkpoint::save(base, m, sidecar);
      okwp::write(base + ".opt.okwp", optimizer.to_entries(m.params()));
      result.best_checkpoint = base;
      result.best_val_wer = stats.val_wer;
      result.best_epoch = epoch;
      std::ofstream best(fs::path(run_dir) / "best");
      best << name << '\n';
    }
    if (stopper.should_stop()) {
      result.early_stopped = true;
      OKWUGBE_INFO("early stopping after %zu stagnant epochs", stopper.stagnant_epochs());
      break;
    }
  }
  return result;
}

}  // namespace okwugbe::train
