// SPDX-License-Identifier: Apache-2.0
//
// Crop/pad transforms and distilled-dataset construction: random crops
// of source audio labeled by a teacher network instead of the source
// ground truth.
#pragma once

#include "pld/data.hpp"
#include "pld/model.hpp"
#include "pld/rng.hpp"

namespace pld {

struct CropSpec {
  int64_t src_len = 0;
  int64_t tgt_len = 0;
  int64_t offset = 0;

  void validate() const {
    if (tgt_len <= 0 || tgt_len > src_len) throw std::invalid_argument("crop: tgt_len > src_len");
    if (offset < 0 || offset > src_len - tgt_len)
      throw std::invalid_argument("crop: offset out of range");
  }
};

Waveform crop(const Waveform& w, const CropSpec& spec);

/// Uniform offset in [0, len - tgt_len]; returns the crop and the
/// offset drawn.
std::pair<Waveform, int64_t> random_crop(const Waveform& w, int64_t tgt_len, Rng& rng);

/// Centered zero padding up to src_len.
Waveform pad(const Waveform& w, int64_t src_len);

enum class LabelMode { Hard, Soft };

inline const char* label_mode_name(LabelMode m) { return m == LabelMode::Hard ? "hard" : "soft"; }
LabelMode parse_label_mode(const std::string& s);

/// Ties broken toward the lowest class index.
int argmax_class(const std::vector<float>& probs);

/// Pads each crop to the teacher's input length, featurizes, runs the
/// teacher in eval mode; returns one probability row per crop.
std::vector<std::vector<float>> distill_labels(Network& teacher, const std::vector<Waveform>& crops);

struct DistilledSample {
  MfccMatrix features;            // target-length crop features
  std::vector<float> soft_label;  // teacher distribution (soft mode)
  int hard_label = -1;            // argmax (hard mode)
  std::string source_id;
  int64_t offset = 0;
};

struct DistilledDataset {
  std::vector<DistilledSample> samples;
  int src_ms = 0, tgt_ms = 0;
  LabelMode mode = LabelMode::Soft;
  int sample_rate = 0;
  int n_classes = 0;
  uint64_t teacher_checksum = 0;
};

/// crops_per_source seeded random crops per source sample, labeled by
/// the teacher. Deterministic in (seed, epoch); the source ground truth
/// is never copied into the result.
DistilledDataset build_distilled_dataset(Network& teacher, const Dataset& source, int tgt_ms,
                                         int crops_per_source, LabelMode mode, uint64_t seed,
                                         uint64_t epoch = 0);

// On-disk form: <dir>/manifest.tsv plus features/NNNNNN.mfcc files.
void save_distilled_dataset(const DistilledDataset& d, const std::string& dir);
DistilledDataset load_distilled_dataset(const std::string& dir);

}  // namespace pld
