#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace okwugbe::audio {

struct Waveform {
  std::vector<float> samples;  // amplitudes in [-1, 1]
  int sample_rate = 0;         // Hz

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct FrontendConfig {
  int sample_rate = 16000;
  int n_fft = 512;       // window length in samples, power of two
  int hop_length = 512;  // samples between successive frames
  int n_mels = 128;
  bool log_compress = true;

  void validate() const;  // throws std::invalid_argument on bad fields
};

struct MelFilterbank {
  // (n_mels, n_fft/2 + 1), row-major, nonnegative.
  std::vector<double> weights;
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  std::vector<double> center_freqs_hz;  // strictly increasing, length n_mels

  double weight(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
};

struct MelSpectrogram {
  // (n_mels, n_frames), row-major.
  std::vector<float> values;
  std::size_t n_mels = 0;
  std::size_t n_frames = 0;
  float frame_rate = 0.0f;  // frames per second

  float& at(std::size_t mel, std::size_t frame) { return values[mel * n_frames + frame]; }
  float at(std::size_t mel, std::size_t frame) const { return values[mel * n_frames + frame]; }
};

struct SpecAugmentConfig {
  std::size_t max_freq_mask_width = 0;  // mel bins
  std::size_t max_time_mask_width = 0;  // frames
  std::size_t n_freq_masks = 0;
  std::size_t n_time_masks = 0;
  std::uint64_t seed = 0;
};

// m = 2595 * log10(1 + f / 700). Throws std::domain_error for negative input.
double hertz_to_mel(double f);
double mel_to_hertz(double m);

// Triangular filters with peak 1, centers equally spaced on the mel axis
// between 0 and hertz_to_mel(sample_rate / 2). Each triangle is widened to
// at least one FFT-bin spacing per side so narrow low-frequency filters
// still cover a bin; a filter that would remain empty is a config error.
MelFilterbank build_mel_filterbank(const FrontendConfig& cfg);

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// |rFFT|^2 of a (windowed) frame; length n/2 + 1. Frame length must be a
// power of two.
std::vector<double> power_spectrum(const std::vector<double>& frame);

// Hann-windowed frames of length n_fft with stride hop_length, no center
// padding. Inputs shorter than n_fft produce a single zero-padded frame;
// otherwise the trailing partial window is dropped.
MelSpectrogram mel_spectrogram(const Waveform& w, const FrontendConfig& cfg,
                               const MelFilterbank& fb);

std::size_t frame_count(std::size_t n_samples, const FrontendConfig& cfg);

// Zeroes random contiguous frequency/time bands; deterministic per seed.
MelSpectrogram spec_augment(const MelSpectrogram& s, const SpecAugmentConfig& cfg);

// Linear-interpolation resampling; output length round(len * target / source).
Waveform resample(const Waveform& w, int target_rate);

// RIFF WAV, PCM 16-bit little-endian. Multi-channel input is averaged to
// mono on read.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

// Feature container: 16-byte header (magic "OKWF", version u16, n_mels u16,
// n_frames u32, frame_rate f32) + row-major f32 values. Bit-exact round trip.
void write_features(const std::string& path, const MelSpectrogram& m);
MelSpectrogram read_features(const std::string& path);

}  // namespace okwugbe::audio
