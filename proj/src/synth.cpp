#include "okwugbe/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "okwugbe/audio.hpp"
#include "okwugbe/data.hpp"

namespace okwugbe::synth {

namespace fs = std::filesystem;

namespace {

constexpr char kLetters[] = {'a', 'b', 'c', 'd', 'e', 'f'};
constexpr std::size_t kNumLetters = sizeof(kLetters);

double letter_freq(std::size_t i) { return 420.0 + 260.0 * static_cast<double>(i); }

void append_tone(std::vector<float>& samples, double freq, double seconds, int rate) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  const std::size_t ramp = std::min<std::size_t>(n / 10, 64);
  for (std::size_t i = 0; i < n; ++i) {
    double env = 1.0;
    if (i < ramp) env = static_cast<double>(i) / ramp;
    if (n - 1 - i < ramp) env = std::min(env, static_cast<double>(n - 1 - i) / ramp);
    samples.push_back(static_cast<float>(
        0.45 * env * std::sin(2.0 * std::numbers::pi * freq * i / rate)));
  }
}

void append_silence(std::vector<float>& samples, double seconds, int rate) {
  samples.insert(samples.end(), static_cast<std::size_t>(seconds * rate), 0.0f);
}

}  // namespace

SynthResult generate_corpus(const std::string& out_dir, const SynthConfig& cfg) {
  if (cfg.n_utterances == 0) throw std::invalid_argument("synth: n must be >= 1");
  if (cfg.min_words == 0 || cfg.min_words > cfg.max_words) {
    throw std::invalid_argument("synth: invalid word-count range");
  }
  fs::create_directories(out_dir);
  std::mt19937_64 rng(cfg.seed);

  std::vector<data::ManifestEntry> entries;
  for (std::size_t u = 0; u < cfg.n_utterances; ++u) {
    const std::size_t n_words =
        cfg.min_words + rng() % (cfg.max_words - cfg.min_words + 1);
    std::vector<float> samples;
    append_silence(samples, cfg.gap_s, cfg.sample_rate);
    std::string transcript;
    for (std::size_t w = 0; w < n_words; ++w) {
      const std::size_t letter = rng() % kNumLetters;
      if (w > 0) {
        transcript += ' ';
        append_silence(samples, cfg.gap_s, cfg.sample_rate);
      }
      transcript += kLetters[letter];
      append_tone(samples, letter_freq(letter), cfg.tone_s, cfg.sample_rate);
    }
    append_silence(samples, cfg.gap_s, cfg.sample_rate);

    char name[32];
    std::snprintf(name, sizeof(name), "utt_%04zu.wav", u);
    const std::string wav_path = (fs::path(out_dir) / name).string();
    audio::Waveform w{std::move(samples), cfg.sample_rate};
    audio::write_wav(wav_path, w);

    data::ManifestEntry e;
    e.audio_path = wav_path;
    e.transcript = transcript;
    e.duration_s = w.duration_s();
    entries.push_back(std::move(e));
  }

  SynthResult result;
  result.manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  data::write_manifest(result.manifest_path, entries);

  result.charset_path = (fs::path(out_dir) / "synth.chars").string();
  std::ofstream chars(result.charset_path, std::ios::binary);
  chars << "<blank>\n \n";
  for (char c : kLetters) chars << c << '\n';
  result.n_written = entries.size();
  return result;
}

}  // namespace okwugbe::synth
