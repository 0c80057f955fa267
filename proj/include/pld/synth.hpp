// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic keyword dataset. A word is an unordered pair
// of distinct tone segments over a small shared alphabet, separated by
// a gap wide enough that a half-length window never shows both unless
// it covers the whole event; the event sits in the central half of the
// clip, so flanking regions carry exactly one tone each. A lone tone
// is ambiguous between the two words sharing it and the unknown class
// (doubled same-tone pairs, oversampled in training like real
// out-of-vocabulary speech), while the full event is unambiguous. The
// background is silent with localized noise bursts, so zero-padded
// crops stay in-distribution. Silence is bursts only and deliberately
// scarce in training; a small fraction of word/unknown recordings are
// partial, with one segment cut at a clip edge.
#pragma once

#include "pld/data.hpp"
#include "pld/rng.hpp"

namespace pld {

struct SynthSpec {
  int n_word_classes = 4;   // plus silence and unknown
  int clip_ms = 1000;
  int utterance_ms = 105;   // nominal duration of each tone segment
  int sample_rate = 4000;   // desk scale
  int n_train_per_class = 160;
  int n_test_per_class = 50;
  float unknown_train_ratio = 4.0f;  // unknown is oversampled in training
  float silence_train_ratio = 0.25f;  // silence is scarce in training
  float noise_level = 0.08f;  // background RMS
  float tone_level = 0.25f;   // edge tone amplitude
  uint64_t seed = 1;

  int n_classes() const { return n_word_classes + 2; }
  void validate() const;
};

struct SynthSplits {
  Dataset train, test;
};

SynthSplits synth_generate(const SynthSpec& spec);

}  // namespace pld
