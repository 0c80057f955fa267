// SPDX-License-Identifier: Apache-2.0
#include "pld/data.hpp"

#include <filesystem>

namespace fs = std::filesystem;

namespace pld {

void apply_bandpass(Dataset& d, double low_hz, double high_hz) {
  // keep the upper edge below Nyquist for low-rate desk data
  const double high = std::min(high_hz, 0.45 * d.sample_rate);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(d.samples.size()); ++i) {
    auto& w = d.samples[static_cast<size_t>(i)].waveform;
    w = bandpass(w, low_hz, high);
  }
}

void write_dataset(const Dataset& d, const std::string& dir) {
  for (const auto& name : d.label_names) fs::create_directories(fs::path(dir) / name);
  for (const auto& s : d.samples) {
    const auto& label = d.label_names[static_cast<size_t>(s.label)];
    save_wav((fs::path(dir) / label / (s.id + ".wav")).string(), s.waveform);
  }
}

}  // namespace pld
