// SPDX-License-Identifier: Apache-2.0
#include "pld/audio.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <cstring>
#include <fstream>

namespace pld {
namespace {

uint32_t read_u32(std::istream& s) {
  unsigned char b[4];
  s.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}
uint16_t read_u16(std::istream& s) {
  unsigned char b[2];
  s.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}
void write_u32(std::ostream& s, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  s.write(reinterpret_cast<char*>(b), 4);
}
void write_u16(std::ostream& s, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  s.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

Waveform load_wav(const std::string& path, int target_rate) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open WAV file: " + path);
  char riff[4], wave[4];
  f.read(riff, 4);
  read_u32(f);
  f.read(wave, 4);
  if (!f || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<char> payload;
  while (f) {
    char id[4];
    f.read(id, 4);
    if (!f) break;
    uint32_t size = read_u32(f);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_u16(f);
      channels = read_u16(f);
      rate = read_u32(f);
      read_u32(f);
      read_u16(f);
      bits = read_u16(f);
      f.seekg(size > 16 ? size - 16 : 0, std::ios::cur);
    } else if (std::memcmp(id, "data", 4) == 0) {
      payload.resize(size);
      f.read(payload.data(), size);
      break;
    } else {
      f.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (channels == 0 || rate == 0) throw std::runtime_error("missing fmt chunk: " + path);
  if (payload.empty()) throw std::runtime_error("empty audio: " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  const size_t frame_bytes = static_cast<size_t>(channels) * bits / 8;
  const size_t n = payload.size() / frame_bytes;
  w.samples.resize(n);
  if (format == 1 && bits == 16) {
    for (size_t i = 0; i < n; ++i) {
      double acc = 0;
      for (int c = 0; c < channels; ++c) {
        int16_t v;
        std::memcpy(&v, payload.data() + i * frame_bytes + 2 * c, 2);
        acc += v / 32768.0;
      }
      w.samples[i] = static_cast<float>(acc / channels);
    }
  } else if (format == 3 && bits == 32) {
    for (size_t i = 0; i < n; ++i) {
      double acc = 0;
      for (int c = 0; c < channels; ++c) {
        float v;
        std::memcpy(&v, payload.data() + i * frame_bytes + 4 * c, 4);
        acc += v;
      }
      w.samples[i] = static_cast<float>(acc / channels);
    }
  } else {
    throw std::runtime_error("unsupported WAV encoding (want PCM16 or float32): " + path);
  }
  for (float& v : w.samples) v = std::clamp(v, -1.0f, 1.0f);
  if (target_rate > 0 && target_rate != w.sample_rate) return resample(w, target_rate);
  return w;
}

void save_wav(const std::string& path, const Waveform& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write WAV file: " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  f.write("RIFF", 4);
  write_u32(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_u32(f, 16);
  write_u16(f, 1);  // PCM
  write_u16(f, 1);  // mono
  write_u32(f, static_cast<uint32_t>(w.sample_rate));
  write_u32(f, static_cast<uint32_t>(w.sample_rate * 2));
  write_u16(f, 2);
  write_u16(f, 16);
  f.write("data", 4);
  write_u32(f, data_bytes);
  for (float v : w.samples) {
    // scale matches the reader's 1/32768 so a round trip only loses
    // the rounding half-step
    const int q = std::clamp(static_cast<int>(std::lround(std::clamp(v, -1.0f, 1.0f) * 32768.0f)),
                             -32768, 32767);
    write_u16(f, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate == w.sample_rate) return w;
  Waveform out;
  out.sample_rate = target_rate;
  const int64_t n_out = w.size() * target_rate / w.sample_rate;
  out.samples.resize(static_cast<size_t>(n_out));
  const double step = static_cast<double>(w.sample_rate) / target_rate;
  for (int64_t i = 0; i < n_out; ++i) {
    const double t = i * step;
    const int64_t j = static_cast<int64_t>(t);
    const double frac = t - j;
    const float a = w.samples[static_cast<size_t>(std::min(j, w.size() - 1))];
    const float b = w.samples[static_cast<size_t>(std::min(j + 1, w.size() - 1))];
    out.samples[static_cast<size_t>(i)] = static_cast<float>(a + frac * (b - a));
  }
  return out;
}

namespace {

struct Biquad {
  double b0, b1, b2, a1, a2;  // normalized (a0 = 1)

  // RBJ cookbook, Q = 1/sqrt(2) (Butterworth)
  static Biquad lowpass(double fc, double fs) {
    const double w0 = 2.0 * M_PI * fc / fs;
    const double alpha = std::sin(w0) / std::sqrt(2.0);
    const double c = std::cos(w0), a0 = 1 + alpha;
    return {(1 - c) / 2 / a0, (1 - c) / a0, (1 - c) / 2 / a0, -2 * c / a0, (1 - alpha) / a0};
  }
  static Biquad highpass(double fc, double fs) {
    const double w0 = 2.0 * M_PI * fc / fs;
    const double alpha = std::sin(w0) / std::sqrt(2.0);
    const double c = std::cos(w0), a0 = 1 + alpha;
    return {(1 + c) / 2 / a0, -(1 + c) / a0, (1 + c) / 2 / a0, -2 * c / a0, (1 - alpha) / a0};
  }

  void run(std::vector<double>& x) const {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (double& v : x) {
      const double y = b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = v;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
};

}  // namespace

Waveform bandpass(const Waveform& w, double low_hz, double high_hz) {
  const double nyquist = w.sample_rate / 2.0;
  if (!(low_hz > 0 && low_hz < high_hz && high_hz < nyquist))
    throw std::invalid_argument("bandpass: need 0 < low < high < sample_rate/2");
  if (w.samples.empty()) return w;

  const Biquad hp = Biquad::highpass(low_hz, w.sample_rate);
  const Biquad lp = Biquad::lowpass(high_hz, w.sample_rate);

  // reflect-pad so filter transients decay outside the signal
  const int64_t pad = std::min<int64_t>(w.size() - 1, w.sample_rate / 10);
  std::vector<double> x(static_cast<size_t>(w.size() + 2 * pad));
  for (int64_t i = 0; i < pad; ++i) x[static_cast<size_t>(i)] = w.samples[static_cast<size_t>(pad - i)];
  for (int64_t i = 0; i < w.size(); ++i) x[static_cast<size_t>(pad + i)] = w.samples[static_cast<size_t>(i)];
  for (int64_t i = 0; i < pad; ++i)
    x[static_cast<size_t>(pad + w.size() + i)] = w.samples[static_cast<size_t>(w.size() - 2 - i)];

  hp.run(x);
  lp.run(x);
  std::reverse(x.begin(), x.end());
  hp.run(x);
  lp.run(x);
  std::reverse(x.begin(), x.end());

  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(w.samples.size());
  for (int64_t i = 0; i < w.size(); ++i)
    out.samples[static_cast<size_t>(i)] = static_cast<float>(x[static_cast<size_t>(pad + i)]);
  return out;
}

namespace {

// in-place iterative radix-2 FFT
void fft(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1);
      for (size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

int mfcc_frame_count(int64_t n_samples, int sample_rate, const MfccConfig& cfg) {
  const int64_t window = static_cast<int64_t>(sample_rate) * cfg.window_ms / 1000;
  const int64_t shift = static_cast<int64_t>(sample_rate) * cfg.shift_ms / 1000;
  if (n_samples < window) return 0;
  return static_cast<int>((n_samples - window) / shift + 1);
}

MfccMatrix mfcc(const Waveform& w, const MfccConfig& cfg) {
  const int window = w.sample_rate * cfg.window_ms / 1000;
  const int shift = w.sample_rate * cfg.shift_ms / 1000;
  const int n_frames = mfcc_frame_count(w.size(), w.sample_rate, cfg);
  if (n_frames < 1) throw std::invalid_argument("mfcc: waveform shorter than one window");
  if (window > cfg.fft_size) throw std::invalid_argument("mfcc: window exceeds FFT size");
  const int n_bins = cfg.fft_size / 2 + 1;

  // triangular mel filterbank
  const double high = std::min(cfg.mel_high_hz, 0.999 * w.sample_rate / 2.0);
  const double mel_lo = hz_to_mel(cfg.mel_low_hz), mel_hi = hz_to_mel(high);
  std::vector<double> centers(static_cast<size_t>(cfg.n_mels) + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    centers[static_cast<size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1)) * cfg.fft_size /
        w.sample_rate;

  std::vector<double> hann(static_cast<size_t>(window));
  for (int i = 0; i < window; ++i)
    hann[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (window - 1));

  MfccMatrix out;
  out.rows = n_frames;
  out.cols = cfg.n_coeffs;
  out.data.resize(static_cast<size_t>(n_frames) * cfg.n_coeffs);

#pragma omp parallel for schedule(static)
  for (int fr = 0; fr < n_frames; ++fr) {
    std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.fft_size));
    const int64_t start = static_cast<int64_t>(fr) * shift;
    for (int i = 0; i < window; ++i)
      buf[static_cast<size_t>(i)] =
          w.samples[static_cast<size_t>(start + i)] * hann[static_cast<size_t>(i)];
    fft(buf);

    std::vector<double> power(static_cast<size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i) power[static_cast<size_t>(i)] = std::norm(buf[static_cast<size_t>(i)]);

    std::vector<double> logmel(static_cast<size_t>(cfg.n_mels));
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double lo = centers[static_cast<size_t>(m)], mid = centers[static_cast<size_t>(m + 1)],
                   hi = centers[static_cast<size_t>(m + 2)];
      double e = 0;
      for (int b = static_cast<int>(std::ceil(lo)); b <= std::min(n_bins - 1, static_cast<int>(hi)); ++b) {
        double wgt = 0;
        if (b <= mid)
          wgt = (mid > lo) ? (b - lo) / (mid - lo) : 0.0;
        else
          wgt = (hi > mid) ? (hi - b) / (hi - mid) : 0.0;
        if (wgt > 0) e += wgt * power[static_cast<size_t>(b)];
      }
      logmel[static_cast<size_t>(m)] = std::log(e + 1e-10);
    }

    // orthonormal DCT-II
    for (int k = 0; k < cfg.n_coeffs; ++k) {
      double s = 0;
      for (int m = 0; m < cfg.n_mels; ++m)
        s += logmel[static_cast<size_t>(m)] * std::cos(M_PI * k * (m + 0.5) / cfg.n_mels);
      const double scale = (k == 0 ? std::sqrt(1.0 / cfg.n_mels) : std::sqrt(2.0 / cfg.n_mels));
      out.at(fr, k) = static_cast<float>(s * scale);
    }
  }
  return out;
}

void write_mfcc(const std::string& path, const MfccMatrix& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write: " + path);
  f.write("MFCC", 4);
  write_u32(f, static_cast<uint32_t>(m.rows));
  write_u32(f, static_cast<uint32_t>(m.cols));
  f.write(reinterpret_cast<const char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(float)));
}

MfccMatrix read_mfcc(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "MFCC", 4) != 0) throw std::runtime_error("bad MFCC file: " + path);
  MfccMatrix m;
  m.rows = static_cast<int>(read_u32(f));
  m.cols = static_cast<int>(read_u32(f));
  m.data.resize(static_cast<size_t>(m.rows) * m.cols);
  f.read(reinterpret_cast<char*>(m.data.data()),
         static_cast<std::streamsize>(m.data.size() * sizeof(float)));
  if (!f) throw std::runtime_error("truncated MFCC file: " + path);
  return m;
}

}  // namespace pld
