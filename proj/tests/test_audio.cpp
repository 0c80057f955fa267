// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "pld/audio.hpp"

using namespace pld;

namespace {

Waveform sine(double freq_hz, int sr, double seconds, float amp = 0.5f) {
  Waveform w;
  w.sample_rate = sr;
  const int64_t n = static_cast<int64_t>(sr * seconds);
  w.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    w.samples[static_cast<size_t>(i)] =
        amp * static_cast<float>(std::sin(2.0 * M_PI * freq_hz * i / sr));
  return w;
}

// RMS of the middle half, away from filter edge transients
double mid_rms(const Waveform& w) {
  const int64_t a = w.size() / 4, b = 3 * w.size() / 4;
  double s = 0;
  for (int64_t i = a; i < b; ++i) s += static_cast<double>(w.samples[static_cast<size_t>(i)]) *
                                       w.samples[static_cast<size_t>(i)];
  return std::sqrt(s / static_cast<double>(b - a));
}

}  // namespace

TEST_CASE("frame counts follow floor((dur - window) / shift) + 1") {
  CHECK(mfcc_frame_count(16000, 16000) == 98);  // 1000 ms
  CHECK(mfcc_frame_count(8000, 16000) == 48);   // 500 ms
  CHECK(mfcc_frame_count(12800, 16000) == 78);  // 800 ms
  CHECK(mfcc_frame_count(480, 16000) == 1);     // exactly one window
  CHECK(mfcc_frame_count(4000, 4000) == 98);    // rate-independent in ms
}

TEST_CASE("mfcc output shape and determinism") {
  Waveform w = sine(440.0, 16000, 1.0);
  MfccMatrix a = mfcc(w);
  CHECK(a.rows == 98);
  CHECK(a.cols == 40);
  for (float v : a.data) CHECK(std::isfinite(v));
  MfccMatrix b = mfcc(w);
  CHECK(a.data == b.data);
}

TEST_CASE("mfcc rejects sub-window input") {
  Waveform w = sine(440.0, 16000, 0.02);  // 20 ms < 30 ms window
  CHECK_THROWS(mfcc(w));
}

TEST_CASE("mfcc responds to frequency content") {
  MfccMatrix lo = mfcc(sine(200.0, 16000, 1.0));
  MfccMatrix hi = mfcc(sine(2000.0, 16000, 1.0));
  double diff = 0;
  for (size_t i = 0; i < lo.data.size(); ++i) diff += std::abs(lo.data[i] - hi.data[i]);
  CHECK(diff / static_cast<double>(lo.data.size()) > 0.01);
}

TEST_CASE("band-pass passes mid frequencies and rejects the stop bands") {
  const int sr = 16000;
  const Waveform mid = sine(1000.0, sr, 2.0);
  const Waveform low = sine(5.0, sr, 2.0);
  const Waveform high = sine(7000.0, sr, 2.0);

  const double mid_gain = mid_rms(bandpass(mid, 20.0, 4000.0)) / mid_rms(mid);
  const double low_gain = mid_rms(bandpass(low, 20.0, 4000.0)) / mid_rms(low);
  const double high_gain = mid_rms(bandpass(high, 20.0, 4000.0)) / mid_rms(high);

  CHECK(mid_gain == doctest::Approx(1.0).epsilon(0.05));
  CHECK(low_gain < 0.1);
  CHECK(high_gain < 0.15);
}

TEST_CASE("band-pass is linear") {
  const int sr = 8000;
  Waveform a = sine(300.0, sr, 1.0, 0.3f);
  Waveform b = sine(900.0, sr, 1.0, 0.2f);
  Waveform ab = a;
  for (size_t i = 0; i < ab.samples.size(); ++i) ab.samples[i] += b.samples[i];

  const Waveform fa = bandpass(a, 20.0, 3000.0);
  const Waveform fb = bandpass(b, 20.0, 3000.0);
  const Waveform fab = bandpass(ab, 20.0, 3000.0);
  for (size_t i = 0; i < fab.samples.size(); ++i)
    CHECK(fab.samples[i] == doctest::Approx(fa.samples[i] + fb.samples[i]).epsilon(1e-3));
}

TEST_CASE("band-pass validates its corner frequencies") {
  Waveform w = sine(100.0, 8000, 0.5);
  CHECK_THROWS(bandpass(w, 0.0, 3000.0));
  CHECK_THROWS(bandpass(w, 3000.0, 100.0));
  CHECK_THROWS(bandpass(w, 20.0, 4000.0));  // >= Nyquist at 8 kHz
}

TEST_CASE("WAV round trip within 16-bit quantization") {
  Waveform w = sine(440.0, 16000, 0.25);
  const auto path = std::filesystem::temp_directory_path() / "pld_test_roundtrip.wav";
  save_wav(path.string(), w);
  Waveform r = load_wav(path.string());
  REQUIRE(r.size() == w.size());
  CHECK(r.sample_rate == w.sample_rate);
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 1.f / 32767.f);
  std::filesystem::remove(path);
}

TEST_CASE("load_wav resamples to the requested rate") {
  Waveform w = sine(440.0, 16000, 0.5);
  const auto path = std::filesystem::temp_directory_path() / "pld_test_resample.wav";
  save_wav(path.string(), w);
  Waveform r = load_wav(path.string(), 8000);
  CHECK(r.sample_rate == 8000);
  CHECK(r.size() == w.size() / 2);
  std::filesystem::remove(path);
}

TEST_CASE("mfcc matrix file round trip is exact") {
  std::mt19937_64 rng(5);
  MfccMatrix m;
  m.rows = 7;
  m.cols = 13;
  m.data.resize(static_cast<size_t>(m.rows) * m.cols);
  std::uniform_real_distribution<float> d(-4.f, 4.f);
  for (auto& v : m.data) v = d(rng);

  const auto path = std::filesystem::temp_directory_path() / "pld_test.mfcc";
  write_mfcc(path.string(), m);
  MfccMatrix r = read_mfcc(path.string());
  CHECK(r.rows == m.rows);
  CHECK(r.cols == m.cols);
  CHECK(r.data == m.data);
  std::filesystem::remove(path);
}
