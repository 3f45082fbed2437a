#include "okwugbe/audio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace okwugbe::audio {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT (decimation in time).
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace

void FrontendConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("frontend: sample_rate must be positive");
  if (n_fft <= 0) throw std::invalid_argument("frontend: n_fft must be positive");
  if (!is_power_of_two(n_fft)) {
    throw std::invalid_argument("frontend: n_fft must be a power of two, got " +
                                std::to_string(n_fft));
  }
  if (hop_length <= 0 || hop_length > n_fft) {
    throw std::invalid_argument("frontend: hop_length must be in (0, n_fft]");
  }
  if (n_mels <= 0 || n_mels > n_fft / 2 + 1) {
    throw std::invalid_argument("frontend: n_mels must be in (0, n_fft/2 + 1]");
  }
}

double hertz_to_mel(double f) {
  if (f < 0.0) throw std::domain_error("hertz_to_mel: negative frequency");
  return 2595.0 * std::log10(1.0 + f / 700.0);
}

double mel_to_hertz(double m) {
  if (m < 0.0) throw std::domain_error("mel_to_hertz: negative mel value");
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

MelFilterbank build_mel_filterbank(const FrontendConfig& cfg) {
  cfg.validate();
  const std::size_t n_mels = static_cast<std::size_t>(cfg.n_mels);
  const std::size_t n_bins = static_cast<std::size_t>(cfg.n_fft) / 2 + 1;
  const double nyquist = cfg.sample_rate / 2.0;
  const double mel_max = hertz_to_mel(nyquist);
  const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.n_fft;

  // n_mels + 2 mel-uniform corner points; filter i peaks at point i + 1.
  std::vector<double> corner_hz(n_mels + 2);
  for (std::size_t j = 0; j < corner_hz.size(); ++j) {
    corner_hz[j] = mel_to_hertz(mel_max * static_cast<double>(j) /
                                static_cast<double>(n_mels + 1));
  }

  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = n_bins;
  fb.weights.assign(n_mels * n_bins, 0.0);
  fb.center_freqs_hz.resize(n_mels);

  for (std::size_t i = 0; i < n_mels; ++i) {
    const double center = corner_hz[i + 1];
    // Minimum half-width of one FFT-bin spacing keeps narrow low-frequency
    // triangles from falling between bins.
    const double lo = std::min(corner_hz[i], center - bin_hz);
    const double hi = std::max(corner_hz[i + 2], center + bin_hz);
    fb.center_freqs_hz[i] = center;
    bool nonempty = false;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f < center) {
        w = (f - lo) / (center - lo);
      } else if (f == center) {
        w = 1.0;
      } else if (f > center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      if (w > 0.0) {
        fb.weights[i * n_bins + k] = w;
        nonempty = true;
      }
    }
    if (!nonempty) {
      throw std::invalid_argument("mel filterbank: filter " + std::to_string(i) +
                                  " covers no FFT bin (n_mels too large for this "
                                  "sample_rate/n_fft)");
    }
  }
  return fb;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n)));
  }
  return w;
}

std::vector<double> power_spectrum(const std::vector<double>& frame) {
  const std::size_t n = frame.size();
  if (!is_power_of_two(static_cast<int>(n))) {
    throw std::invalid_argument("power_spectrum: frame length must be a power of two");
  }
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {frame[i], 0.0};
  fft_inplace(buf);
  std::vector<double> power(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) power[k] = std::norm(buf[k]);
  return power;
}

std::size_t frame_count(std::size_t n_samples, const FrontendConfig& cfg) {
  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  const auto hop = static_cast<std::size_t>(cfg.hop_length);
  if (n_samples < n_fft) return 1;  // single zero-padded frame
  return (n_samples - n_fft) / hop + 1;
}

MelSpectrogram mel_spectrogram(const Waveform& w, const FrontendConfig& cfg,
                               const MelFilterbank& fb) {
  cfg.validate();
  if (w.sample_rate != cfg.sample_rate) {
    throw std::invalid_argument("mel_spectrogram: waveform rate " +
                                std::to_string(w.sample_rate) + " != config rate " +
                                std::to_string(cfg.sample_rate));
  }
  if (w.samples.empty()) throw std::invalid_argument("mel_spectrogram: empty waveform");
  if (fb.n_mels != static_cast<std::size_t>(cfg.n_mels) ||
      fb.n_bins != static_cast<std::size_t>(cfg.n_fft) / 2 + 1) {
    throw std::invalid_argument("mel_spectrogram: filterbank does not match config");
  }

  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  const auto hop = static_cast<std::size_t>(cfg.hop_length);
  const std::size_t n_frames = frame_count(w.samples.size(), cfg);
  const std::vector<double> window = hann_window(cfg.n_fft);

  MelSpectrogram m;
  m.n_mels = fb.n_mels;
  m.n_frames = n_frames;
  m.frame_rate = static_cast<float>(static_cast<double>(cfg.sample_rate) / cfg.hop_length);
  m.values.assign(fb.n_mels * n_frames, 0.0f);

  std::vector<double> frame(n_fft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < n_fft; ++i) {
      const std::size_t idx = start + i;
      const double s = idx < w.samples.size() ? static_cast<double>(w.samples[idx]) : 0.0;
      frame[i] = s * window[i];
    }
    const std::vector<double> power = power_spectrum(frame);
    for (std::size_t i = 0; i < fb.n_mels; ++i) {
      double acc = 0.0;
      const double* row = &fb.weights[i * fb.n_bins];
      for (std::size_t k = 0; k < fb.n_bins; ++k) acc += row[k] * power[k];
      if (cfg.log_compress) acc = std::log(acc + 1e-10);
      m.at(i, t) = static_cast<float>(acc);
    }
  }
  return m;
}

MelSpectrogram spec_augment(const MelSpectrogram& s, const SpecAugmentConfig& cfg) {
  MelSpectrogram out = s;
  std::mt19937 rng(static_cast<std::mt19937::result_type>(cfg.seed));
  auto draw = [&rng](std::size_t lo, std::size_t hi) {  // inclusive bounds
    std::uniform_int_distribution<std::size_t> dist(lo, hi);
    return dist(rng);
  };
  for (std::size_t i = 0; i < cfg.n_freq_masks; ++i) {
    const std::size_t width = std::min(draw(0, cfg.max_freq_mask_width), out.n_mels);
    if (width == 0) continue;
    const std::size_t start = draw(0, out.n_mels - width);
    for (std::size_t f = start; f < start + width; ++f) {
      for (std::size_t t = 0; t < out.n_frames; ++t) out.at(f, t) = 0.0f;
    }
  }
  for (std::size_t i = 0; i < cfg.n_time_masks; ++i) {
    const std::size_t width = std::min(draw(0, cfg.max_time_mask_width), out.n_frames);
    if (width == 0) continue;
    const std::size_t start = draw(0, out.n_frames - width);
    for (std::size_t f = 0; f < out.n_mels; ++f) {
      for (std::size_t t = start; t < start + width; ++t) out.at(f, t) = 0.0f;
    }
  }
  return out;
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("resample: target rate must be positive");
  if (w.samples.empty()) throw std::invalid_argument("resample: empty waveform");
  if (target_rate == w.sample_rate) return w;

  const std::size_t out_len = static_cast<std::size_t>(std::llround(
      static_cast<double>(w.samples.size()) * target_rate / w.sample_rate));
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(std::max<std::size_t>(out_len, 1));
  const double step = static_cast<double>(w.sample_rate) / target_rate;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double pos = i * step;
    const auto i0 = static_cast<std::size_t>(pos);
    if (i0 + 1 >= w.samples.size()) {
      out.samples[i] = w.samples.back();
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = static_cast<float>((1.0 - frac) * w.samples[i0] + frac * w.samples[i0 + 1]);
  }
  return out;
}

namespace {

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw std::runtime_error("unexpected end of file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T out;
  std::memcpy(&out, &v, sizeof(T));
  return out;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open WAV file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) {
    throw std::runtime_error(path + ": not a RIFF file");
  }
  read_le<std::uint32_t>(in);  // riff size
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) {
    throw std::runtime_error(path + ": not a WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool fmt_seen = false;
  Waveform w;

  while (in.read(tag, 4)) {
    const auto chunk_size = read_le<std::uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_le<std::uint16_t>(in);
      channels = read_le<std::uint16_t>(in);
      rate = read_le<std::uint32_t>(in);
      read_le<std::uint32_t>(in);  // byte rate
      read_le<std::uint16_t>(in);  // block align
      bits = read_le<std::uint16_t>(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      fmt_seen = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!fmt_seen) throw std::runtime_error(path + ": data chunk before fmt chunk");
      if (format != 1 || bits != 16) {
        throw std::runtime_error(path + ": only PCM 16-bit WAV is supported");
      }
      if (channels == 0 || rate == 0) throw std::runtime_error(path + ": malformed fmt chunk");
      const std::size_t n_samples = chunk_size / 2 / channels;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(n_samples);
      for (std::size_t i = 0; i < n_samples; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
          acc += static_cast<double>(read_le<std::int16_t>(in));
        }
        w.samples[i] = static_cast<float>(acc / channels / 32768.0);
      }
      return w;
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  throw std::runtime_error(path + ": no data chunk found");
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw std::invalid_argument("write_wav: invalid sample rate");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create WAV file: " + path);

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, 1);  // PCM
  write_le<std::uint16_t>(out, 1);  // mono
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate * 2));
  write_le<std::uint16_t>(out, 2);
  write_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);
  for (float s : w.samples) {
    const double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    write_le<std::int16_t>(out, static_cast<std::int16_t>(std::lrint(clamped * 32767.0)));
  }
  if (!out) throw std::runtime_error("failed writing WAV file: " + path);
}

void write_features(const std::string& path, const MelSpectrogram& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create feature file: " + path);
  out.write("OKWF", 4);
  write_le<std::uint16_t>(out, 1);  // version
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.n_mels));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.n_frames));
  write_le<float>(out, m.frame_rate);
  for (float v : m.values) write_le<float>(out, v);
  if (!out) throw std::runtime_error("failed writing feature file: " + path);
}

MelSpectrogram read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open feature file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "OKWF", 4) != 0) {
    throw std::runtime_error(path + ": bad feature file magic");
  }
  const auto version = read_le<std::uint16_t>(in);
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported feature file version " +
                             std::to_string(version));
  }
  MelSpectrogram m;
  m.n_mels = read_le<std::uint16_t>(in);
  m.n_frames = read_le<std::uint32_t>(in);
  m.frame_rate = read_le<float>(in);
  m.values.resize(m.n_mels * m.n_frames);
  for (auto& v : m.values) v = read_le<float>(in);
  return m;
}

}  // namespace okwugbe::audio
