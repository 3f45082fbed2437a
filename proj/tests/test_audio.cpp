#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "okwugbe/audio.hpp"

using namespace okwugbe::audio;

namespace {

// Direct O(n^2) DFT oracle, independent of the radix-2 implementation.
std::vector<double> dft_power_oracle(const std::vector<double>& frame) {
  const std::size_t n = frame.size();
  std::vector<double> power(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * i) / n;
      re += frame[i] * std::cos(ang);
      im += frame[i] * std::sin(ang);
    }
    power[k] = re * re + im * im;
  }
  return power;
}

Waveform sine_wave(double freq_hz, int sample_rate, double seconds, double amp = 0.5) {
  Waveform w;
  w.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(seconds * sample_rate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] =
        static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * freq_hz * i / sample_rate));
  }
  return w;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("mel formula at published points") {
  CHECK(hertz_to_mel(0.0) == 0.0);
  // Direct evaluation of the conversion formula as the oracle.
  const double at700 = 2595.0 * std::log10(2.0);
  CHECK(hertz_to_mel(700.0) == doctest::Approx(at700).epsilon(1e-12));
  CHECK(at700 == doctest::Approx(781.17).epsilon(1e-4));
  const double at8k = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  CHECK(hertz_to_mel(8000.0) == doctest::Approx(at8k).epsilon(1e-12));
  CHECK(at8k == doctest::Approx(2840.0).epsilon(1e-3));
  CHECK_THROWS_AS(hertz_to_mel(-1.0), std::domain_error);
}

TEST_CASE("mel scale is strictly monotone and inverts") {
  CHECK(mel_to_hertz(0.0) == 0.0);
  CHECK(mel_to_hertz(781.17) == doctest::Approx(700.0).epsilon(1e-4));
  CHECK_THROWS_AS(mel_to_hertz(-0.5), std::domain_error);
  double prev = -1.0;
  for (double f = 1.0; f <= 24000.0; f *= 1.37) {
    const double m = hertz_to_mel(f);
    CHECK(m > prev);
    prev = m;
    CHECK(mel_to_hertz(m) == doctest::Approx(f).epsilon(1e-9));
    CHECK(hertz_to_mel(mel_to_hertz(m)) == doctest::Approx(m).epsilon(1e-9));
  }
  for (double f : {100.0, 1000.0, 4000.0}) {
    CHECK(mel_to_hertz(hertz_to_mel(f)) == doctest::Approx(f).epsilon(1e-9));
  }
}

TEST_CASE("filterbank shapes for the published configs") {
  FrontendConfig fon{16000, 512, 512, 128, true};
  MelFilterbank fb = build_mel_filterbank(fon);
  CHECK(fb.n_mels == 128);
  CHECK(fb.n_bins == 257);
  CHECK(fb.weights.size() == 128 * 257);

  FrontendConfig igbo{8000, 512, 512, 64, true};
  MelFilterbank fb2 = build_mel_filterbank(igbo);
  CHECK(fb2.n_mels == 64);
  CHECK(fb2.n_bins == 257);
}

TEST_CASE("filterbank rows are nonnegative with a positive entry each") {
  for (auto [rate, mels] : {std::pair{16000, 128}, std::pair{8000, 64}}) {
    FrontendConfig cfg{rate, 512, 512, mels, true};
    MelFilterbank fb = build_mel_filterbank(cfg);
    for (std::size_t i = 0; i < fb.n_mels; ++i) {
      double row_max = 0.0;
      for (std::size_t k = 0; k < fb.n_bins; ++k) {
        CHECK(fb.weight(i, k) >= 0.0);
        row_max = std::max(row_max, fb.weight(i, k));
      }
      CHECK(row_max > 0.0);
    }
    for (std::size_t i = 1; i < fb.n_mels; ++i) {
      CHECK(fb.center_freqs_hz[i] > fb.center_freqs_hz[i - 1]);
    }
    // Each bin between the first and last centers is covered by some filter.
    const double bin_hz = static_cast<double>(rate) / 512;
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = k * bin_hz;
      if (f <= fb.center_freqs_hz.front() || f >= fb.center_freqs_hz.back()) continue;
      double total = 0.0;
      for (std::size_t i = 0; i < fb.n_mels; ++i) total += fb.weight(i, k);
      CHECK(total > 0.0);
    }
  }
}

TEST_CASE("degenerate single-filter bank spans the band with peak 1") {
  FrontendConfig cfg{16000, 512, 512, 1, true};
  MelFilterbank fb = build_mel_filterbank(cfg);
  const double center = mel_to_hertz(hertz_to_mel(8000.0) / 2.0);
  CHECK(fb.center_freqs_hz[0] == doctest::Approx(center));
  // Sampled weights match the analytic unit-peak triangle over (0, nyquist).
  const double bin_hz = 16000.0 / 512.0;
  for (std::size_t k = 0; k < fb.n_bins; ++k) {
    const double f = k * bin_hz;
    double expected = 0.0;
    if (f > 0.0 && f < center) expected = f / center;
    else if (f == center) expected = 1.0;
    else if (f > center && f < 8000.0) expected = (8000.0 - f) / (8000.0 - center);
    CHECK(fb.weight(0, k) == doctest::Approx(expected).epsilon(1e-12));
  }
  // Spans the full band: nonzero weights adjacent to both edges.
  CHECK(fb.weight(0, 1) > 0.0);
  CHECK(fb.weight(0, fb.n_bins - 2) > 0.0);
}

TEST_CASE("more filters than FFT bins is a config error") {
  FrontendConfig cfg{8000, 512, 512, 258, true};
  CHECK_THROWS_AS(build_mel_filterbank(cfg), std::invalid_argument);
  FrontendConfig npot{8000, 500, 500, 64, true};
  CHECK_THROWS_AS(npot.validate(), std::invalid_argument);
  FrontendConfig bad_hop{8000, 512, 1024, 64, true};
  CHECK_THROWS_AS(bad_hop.validate(), std::invalid_argument);
}

TEST_CASE("frame counts") {
  FrontendConfig cfg{16000, 512, 512, 128, false};
  CHECK(frame_count(512, cfg) == 1);
  CHECK(frame_count(32000, cfg) == 62);  // floor((32000-512)/512)+1
  CHECK(frame_count(100, cfg) == 1);     // zero-padded tail
  FrontendConfig hop256 = cfg;
  hop256.hop_length = 256;
  CHECK(frame_count(1024, hop256) == 3);
}

TEST_CASE("mel spectrogram of a single full window") {
  FrontendConfig cfg{16000, 512, 512, 32, false};
  MelFilterbank fb = build_mel_filterbank(cfg);
  Waveform w = sine_wave(1000.0, 16000, 512.0 / 16000.0);
  REQUIRE(w.samples.size() == 512);
  MelSpectrogram m = mel_spectrogram(w, cfg, fb);
  CHECK(m.n_frames == 1);
  CHECK(m.n_mels == 32);
  CHECK(m.frame_rate == doctest::Approx(16000.0 / 512.0));
}

TEST_CASE("zero waveform gives zero mel energies before log compression") {
  FrontendConfig cfg{8000, 512, 512, 16, false};
  MelFilterbank fb = build_mel_filterbank(cfg);
  Waveform w;
  w.sample_rate = 8000;
  w.samples.assign(4096, 0.0f);
  MelSpectrogram m = mel_spectrogram(w, cfg, fb);
  for (float v : m.values) CHECK(v == 0.0f);
}

TEST_CASE("sample-rate mismatch is an error") {
  FrontendConfig cfg{16000, 512, 512, 32, false};
  MelFilterbank fb = build_mel_filterbank(cfg);
  Waveform w = sine_wave(440.0, 8000, 0.1);
  CHECK_THROWS(mel_spectrogram(w, cfg, fb));
}

TEST_CASE("per-frame Parseval energy identity") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int n : {256, 512}) {
    std::vector<double> frame(static_cast<std::size_t>(n));
    const auto window = hann_window(n);
    for (int i = 0; i < n; ++i) frame[static_cast<std::size_t>(i)] = dist(rng) * window[i];
    const auto power = power_spectrum(frame);
    double freq_energy = power.front() + power.back();
    for (std::size_t k = 1; k + 1 < power.size(); ++k) freq_energy += 2.0 * power[k];
    freq_energy /= n;
    double time_energy = 0.0;
    for (double v : frame) time_energy += v * v;
    CHECK(freq_energy == doctest::Approx(time_energy).epsilon(1e-6));
  }
}

TEST_CASE("power spectrum matches the direct DFT oracle") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> frame(512);
  for (auto& v : frame) v = dist(rng);
  const auto fast = power_spectrum(frame);
  const auto direct = dft_power_oracle(frame);
  REQUIRE(fast.size() == direct.size());
  for (std::size_t k = 0; k < fast.size(); ++k) {
    CHECK(fast[k] == doctest::Approx(direct[k]).epsilon(1e-8));
  }
}

TEST_CASE("sine at a resolvable mel center lands in that mel bin") {
  for (auto [rate, mels] : {std::pair{16000, 128}, std::pair{8000, 64}}) {
    FrontendConfig cfg{rate, 512, 512, mels, false};
    MelFilterbank fb = build_mel_filterbank(cfg);
    const double bin_hz = static_cast<double>(rate) / cfg.n_fft;
    std::mt19937 rng(71);
    int tested = 0;
    while (tested < 6) {
      const std::size_t k = 1 + rng() % (fb.n_mels - 2);
      const double lo = fb.center_freqs_hz[k - 1];
      const double hi = fb.center_freqs_hz[k + 1];
      if (hi - lo < 2.0 * bin_hz) continue;  // sub-FFT-resolution filter
      Waveform w = sine_wave(fb.center_freqs_hz[k], rate, 0.2);
      MelSpectrogram m = mel_spectrogram(w, cfg, fb);
      const std::size_t mid = m.n_frames / 2;
      std::size_t argmax = 0;
      for (std::size_t i = 1; i < m.n_mels; ++i) {
        if (m.at(i, mid) > m.at(argmax, mid)) argmax = i;
      }
      CHECK(argmax == k);
      ++tested;
    }
  }
}

TEST_CASE("spec_augment with zero widths is the identity") {
  FrontendConfig cfg{8000, 512, 512, 16, true};
  MelFilterbank fb = build_mel_filterbank(cfg);
  Waveform w = sine_wave(500.0, 8000, 1.0);
  MelSpectrogram m = mel_spectrogram(w, cfg, fb);
  SpecAugmentConfig aug{0, 0, 3, 3, 42};
  MelSpectrogram out = spec_augment(m, aug);
  CHECK(out.values == m.values);
}

TEST_CASE("spec_augment masks zero a band and leave the rest untouched") {
  FrontendConfig cfg{8000, 512, 512, 24, true};
  MelFilterbank fb = build_mel_filterbank(cfg);
  Waveform w = sine_wave(700.0, 8000, 1.5);
  MelSpectrogram m = mel_spectrogram(w, cfg, fb);
  SpecAugmentConfig aug{6, 10, 2, 2, 9};
  MelSpectrogram out = spec_augment(m, aug);
  CHECK(out.n_mels == m.n_mels);
  CHECK(out.n_frames == m.n_frames);
  // Every cell is either bit-identical to the input or exactly zero.
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const bool unchanged = out.values[i] == m.values[i];
    const bool zeroed = out.values[i] == 0.0f;
    CHECK((unchanged || zeroed));
  }
  // Determinism under the seed.
  MelSpectrogram again = spec_augment(m, aug);
  CHECK(again.values == out.values);
  SpecAugmentConfig other = aug;
  other.seed = 10;
  CHECK(spec_augment(m, other).values != out.values);
}

TEST_CASE("resample identity and constants") {
  Waveform w = sine_wave(200.0, 8000, 0.25);
  Waveform same = resample(w, 8000);
  CHECK(same.samples == w.samples);

  Waveform c;
  c.sample_rate = 8000;
  c.samples.assign(1000, 0.25f);
  Waveform up = resample(c, 16000);
  CHECK(up.sample_rate == 16000);
  CHECK(up.samples.size() == 2000);
  for (float v : up.samples) CHECK(v == doctest::Approx(0.25f));
}

TEST_CASE("upsampled ramp interpolates midpoints") {
  Waveform ramp;
  ramp.sample_rate = 8000;
  for (int i = 0; i < 64; ++i) ramp.samples.push_back(static_cast<float>(i) / 64.0f);
  Waveform up = resample(ramp, 16000);
  REQUIRE(up.samples.size() == 128);
  for (std::size_t i = 0; i + 2 < ramp.samples.size(); ++i) {
    CHECK(up.samples[2 * i] == doctest::Approx(ramp.samples[i]));
    const double mid = 0.5 * (ramp.samples[i] + ramp.samples[i + 1]);
    CHECK(up.samples[2 * i + 1] == doctest::Approx(mid).epsilon(1e-6));
  }
  CHECK_THROWS(resample(Waveform{{}, 8000}, 16000));
}

TEST_CASE("wav round trip, mono and stereo downmix") {
  Waveform w = sine_wave(440.0, 16000, 0.05);
  const std::string path = temp_path("okwugbe_test.wav");
  write_wav(path, w);
  Waveform r = read_wav(path);
  CHECK(r.sample_rate == 16000);
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(r.samples[i] == doctest::Approx(w.samples[i]).epsilon(2e-4));
  }
  std::filesystem::remove(path);
  CHECK_THROWS(read_wav(temp_path("okwugbe_missing.wav")));
}

TEST_CASE("corrupt wav is rejected") {
  const std::string path = temp_path("okwugbe_corrupt.wav");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  std::fputs("definitely not a riff file", f);
  std::fclose(f);
  CHECK_THROWS(read_wav(path));
  std::filesystem::remove(path);
}

TEST_CASE("feature file round trip is bit exact") {
  FrontendConfig cfg{8000, 512, 512, 20, true};
  MelFilterbank fb = build_mel_filterbank(cfg);
  Waveform w = sine_wave(900.0, 8000, 0.8);
  MelSpectrogram m = mel_spectrogram(w, cfg, fb);
  const std::string path = temp_path("okwugbe_test.okwf");
  write_features(path, m);
  MelSpectrogram r = read_features(path);
  CHECK(r.n_mels == m.n_mels);
  CHECK(r.n_frames == m.n_frames);
  CHECK(r.frame_rate == m.frame_rate);
  CHECK(r.values == m.values);  // bit-exact
  std::filesystem::remove(path);
}
