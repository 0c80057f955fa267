// SPDX-License-Identifier: Apache-2.0
//
// Audio front-end: WAV ingestion, zero-phase band-pass, MFCC.
#pragma once

#include <string>
#include <vector>

#include "pld/tensor.hpp"

namespace pld {

struct Waveform {
  std::vector<float> samples;  // normalized to [-1, 1]
  int sample_rate = 16000;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double duration_ms() const { return 1000.0 * static_cast<double>(size()) / sample_rate; }
};

/// Reads a PCM WAV file (16-bit or 32-bit float, mono or down-mixed).
/// If target_rate > 0 and differs from the file rate, the signal is
/// linearly resampled. Throws on unreadable or empty files.
Waveform load_wav(const std::string& path, int target_rate = 0);
void save_wav(const std::string& path, const Waveform& w);
Waveform resample(const Waveform& w, int target_rate);

/// Zero-phase band-pass: 2nd-order Butterworth high-pass at low_hz
/// cascaded with 2nd-order low-pass at high_hz, applied forward and
/// backward (4th-order magnitude, no group delay).
Waveform bandpass(const Waveform& w, double low_hz, double high_hz);

struct MfccMatrix {
  int rows = 0;  // frames
  int cols = 0;  // coefficients
  std::vector<float> data;  // row-major [rows x cols]

  float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

struct MfccConfig {
  int n_coeffs = 40;
  int n_mels = 40;
  int window_ms = 30;
  int shift_ms = 10;
  int fft_size = 512;
  double mel_low_hz = 20.0;
  double mel_high_hz = 4000.0;  // clamped to Nyquist internally
};

/// Frame count for a given duration: floor((dur - window) / shift) + 1.
int mfcc_frame_count(int64_t n_samples, int sample_rate, const MfccConfig& cfg = {});

/// Hann-windowed power spectrum -> mel filterbank -> log -> DCT-II.
/// Throws if the waveform is shorter than one window.
MfccMatrix mfcc(const Waveform& w, const MfccConfig& cfg = {});

// Binary matrix dump: magic "MFCC", u32 rows, u32 cols, f32 LE payload.
void write_mfcc(const std::string& path, const MfccMatrix& m);
MfccMatrix read_mfcc(const std::string& path);

}  // namespace pld
