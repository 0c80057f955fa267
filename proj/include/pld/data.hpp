// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "pld/audio.hpp"

namespace pld {

struct LabeledSample {
  Waveform waveform;
  int label = 0;
  std::string id;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  std::vector<std::string> label_names;
  int sample_rate = 16000;

  int n_classes() const { return static_cast<int>(label_names.size()); }
};

/// Applies the front-end band-pass to every sample in place. Done once
/// on full-length sources, before any cropping.
void apply_bandpass(Dataset& d, double low_hz = 20.0, double high_hz = 4000.0);

/// Writes <dir>/<label>/<id>.wav for every sample.
void write_dataset(const Dataset& d, const std::string& dir);

}  // namespace pld
