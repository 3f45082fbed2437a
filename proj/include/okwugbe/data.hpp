#pragma once

#include <optional>
#include <string>
#include <vector>

#include "okwugbe/audio.hpp"
#include "okwugbe/ctc.hpp"
#include "okwugbe/tensor.hpp"
#include "okwugbe/text.hpp"

namespace okwugbe::data {

struct ManifestEntry {
  std::string audio_path;  // resolved against the manifest's directory
  std::string transcript;  // normalized
  std::optional<double> duration_s;
};

// JSON Lines, one object per line: {"audio_path": ..., "text": ...,
// "duration_s": optional}. Transcripts are normalized on load. With
// check_audio, every referenced file must exist.
std::vector<ManifestEntry> load_manifest(const std::string& path, bool check_audio = true);

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

// Keeps entries with min_dur <= duration <= max_dur and word count <=
// max_words, in order. Entries without a recorded duration read the WAV
// header.
std::vector<ManifestEntry> filter_dataset(const std::vector<ManifestEntry>& entries,
                                          double min_dur_s, double max_dur_s,
                                          std::size_t max_words);

struct Splits {
  std::vector<ManifestEntry> train, val, test;
};

// Deterministic seeded shuffle, then ratio split (val/test round down).
Splits split_by_ratio(std::vector<ManifestEntry> entries, double val_frac, double test_frac,
                      std::uint64_t seed);

double wav_duration_s(const std::string& path);

template <typename T>
struct Batch {
  nn::Tensor<T> features;  // (B, n_mels, T_max), zero-padded
  std::vector<std::size_t> feature_lengths;
  std::vector<text::LabelSequence> labels;
  std::vector<std::size_t> label_lengths;
  std::vector<std::uint8_t> ctc_feasible;  // per utterance, given the stem stride
};

// Pads per-utterance features to the longest and flags utterances whose
// target cannot be aligned after stem downsampling.
template <typename T>
Batch<T> collate(const std::vector<const audio::MelSpectrogram*>& features,
                 std::vector<text::LabelSequence> labels, std::size_t stem_stride) {
  if (features.empty()) throw std::invalid_argument("collate: empty batch");
  if (features.size() != labels.size()) {
    throw std::invalid_argument("collate: feature/label count mismatch");
  }
  const std::size_t b_dim = features.size();
  const std::size_t n_mels = features[0]->n_mels;
  std::size_t t_max = 0;
  for (const auto* f : features) {
    if (f->n_mels != n_mels) throw std::invalid_argument("collate: inconsistent mel counts");
    t_max = std::max(t_max, f->n_frames);
  }

  Batch<T> batch;
  batch.features = nn::Tensor<T>({b_dim, n_mels, t_max});
  batch.feature_lengths.resize(b_dim);
  batch.label_lengths.resize(b_dim);
  batch.ctc_feasible.resize(b_dim);
  auto& vals = batch.features.values();
  for (std::size_t b = 0; b < b_dim; ++b) {
    const auto& f = *features[b];
    batch.feature_lengths[b] = f.n_frames;
    for (std::size_t m = 0; m < n_mels; ++m) {
      for (std::size_t t = 0; t < f.n_frames; ++t) {
        vals[(b * n_mels + m) * t_max + t] = static_cast<T>(f.at(m, t));
      }
    }
    batch.label_lengths[b] = labels[b].ids.size();
    const std::size_t post_stem = (f.n_frames + stem_stride - 1) / stem_stride;
    batch.ctc_feasible[b] =
        ctc::min_alignable_length(labels[b].ids) <= post_stem ? 1 : 0;
  }
  batch.labels = std::move(labels);
  return batch;
}

// Reads, resamples if needed, and featurizes one utterance.
audio::MelSpectrogram featurize_entry(const ManifestEntry& entry,
                                      const audio::FrontendConfig& cfg,
                                      const audio::MelFilterbank& fb);

// Spec-facing convenience: featurize + encode + pad in one call.
template <typename T>
Batch<T> collate_entries(const std::vector<ManifestEntry>& entries, const text::CharSet& cs,
                         const audio::FrontendConfig& cfg, const audio::MelFilterbank& fb,
                         std::size_t stem_stride) {
  std::vector<audio::MelSpectrogram> feats;
  feats.reserve(entries.size());
  std::vector<text::LabelSequence> labels;
  labels.reserve(entries.size());
  for (const auto& e : entries) {
    feats.push_back(featurize_entry(e, cfg, fb));
    try {
      labels.push_back(text::encode(e.transcript, cs));
    } catch (const std::exception& ex) {
      throw std::runtime_error("collate: cannot encode transcript of " + e.audio_path + ": " +
                               ex.what());
    }
  }
  std::vector<const audio::MelSpectrogram*> ptrs;
  ptrs.reserve(feats.size());
  for (const auto& f : feats) ptrs.push_back(&f);
  return collate<T>(ptrs, std::move(labels), stem_stride);
}

}  // namespace okwugbe::data
