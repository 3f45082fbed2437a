#include "okwugbe/data.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "okwugbe/logging.hpp"
#include "okwugbe/metrics.hpp"

namespace okwugbe::data {

namespace fs = std::filesystem;

std::vector<ManifestEntry> load_manifest(const std::string& path, bool check_audio) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  const fs::path base = fs::path(path).parent_path();

  std::vector<ManifestEntry> entries;
  std::vector<std::string> missing;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed manifest line: " + e.what());
    }
    if (!j.contains("audio_path") || !j.contains("text")) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": manifest line missing audio_path or text field");
    }
    ManifestEntry e;
    fs::path audio = fs::path(j.at("audio_path").get<std::string>());
    if (audio.is_relative()) audio = base / audio;
    e.audio_path = audio.string();
    e.transcript = text::normalize_text(j.at("text").get<std::string>());
    if (e.transcript.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": transcript is empty after normalization");
    }
    if (j.contains("duration_s")) e.duration_s = j.at("duration_s").get<double>();
    if (check_audio && !fs::exists(e.audio_path)) missing.push_back(e.audio_path);
    entries.push_back(std::move(e));
  }
  if (!missing.empty()) {
    std::string msg = path + ": missing audio files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw std::runtime_error(msg);
  }
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create manifest: " + path);
  const fs::path base = fs::path(path).parent_path();
  for (const auto& e : entries) {
    nlohmann::json j;
    j["audio_path"] = fs::path(e.audio_path).lexically_proximate(base).string();
    j["text"] = e.transcript;
    if (e.duration_s) j["duration_s"] = *e.duration_s;
    out << j.dump() << '\n';
  }
}

double wav_duration_s(const std::string& path) {
  return audio::read_wav(path).duration_s();
}

std::vector<ManifestEntry> filter_dataset(const std::vector<ManifestEntry>& entries,
                                          double min_dur_s, double max_dur_s,
                                          std::size_t max_words) {
  if (min_dur_s < 0 || max_dur_s <= 0) {
    throw std::invalid_argument("filter_dataset: thresholds must be positive");
  }
  std::vector<ManifestEntry> kept;
  for (const auto& e : entries) {
    const double dur = e.duration_s ? *e.duration_s : wav_duration_s(e.audio_path);
    if (dur < min_dur_s || dur > max_dur_s) continue;
    if (metrics::split_words(e.transcript).size() > max_words) continue;
    kept.push_back(e);
  }
  return kept;
}

Splits split_by_ratio(std::vector<ManifestEntry> entries, double val_frac, double test_frac,
                      std::uint64_t seed) {
  if (val_frac < 0 || test_frac < 0 || val_frac + test_frac >= 1.0) {
    throw std::invalid_argument("split_by_ratio: invalid fractions");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(entries.begin(), entries.end(), rng);
  const auto n = entries.size();
  const auto n_val = static_cast<std::size_t>(n * val_frac);
  const auto n_test = static_cast<std::size_t>(n * test_frac);
  Splits s;
  s.val.assign(entries.begin(), entries.begin() + n_val);
  s.test.assign(entries.begin() + n_val, entries.begin() + n_val + n_test);
  s.train.assign(entries.begin() + n_val + n_test, entries.end());
  return s;
}

audio::MelSpectrogram featurize_entry(const ManifestEntry& entry,
                                      const audio::FrontendConfig& cfg,
                                      const audio::MelFilterbank& fb) {
  audio::Waveform w = audio::read_wav(entry.audio_path);
  if (w.sample_rate != cfg.sample_rate) {
    OKWUGBE_DEBUG("resampling %s from %d Hz to %d Hz", entry.audio_path.c_str(), w.sample_rate,
                  cfg.sample_rate);
    w = audio::resample(w, cfg.sample_rate);
  }
  return audio::mel_spectrogram(w, cfg, fb);
}

}  // namespace okwugbe::data
