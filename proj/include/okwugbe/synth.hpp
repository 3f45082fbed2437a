#pragma once

#include <cstdint>
#include <string>

namespace okwugbe::synth {

// Synthetic desk-scale corpus: each "word" is a single letter whose sound
// is a pure tone at a letter-specific frequency, separated by silences.
// Writes utt_NNNN.wav files, manifest.jsonl, and synth.chars into out_dir.
// Deterministic per seed.
struct SynthConfig {
  std::size_t n_utterances = 5;
  std::uint64_t seed = 1;
  int sample_rate = 8000;
  std::size_t min_words = 2;
  std::size_t max_words = 4;
  double tone_s = 0.40;
  double gap_s = 0.12;
};

struct SynthResult {
  std::string manifest_path;
  std::string charset_path;
  std::size_t n_written = 0;
};

SynthResult generate_corpus(const std::string& out_dir, const SynthConfig& cfg);

}  // namespace okwugbe::synth
