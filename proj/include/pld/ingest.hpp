// SPDX-License-Identifier: Apache-2.0
//
// Directory ingestion. Two layouts:
//  - generic: one class per subdirectory (synthetic datasets round-trip
//    through this path);
//  - speech-commands: ten target words plus "unknown" and "silence",
//    with silence crops synthesized from _background_noise_ and the
//    official split lists honored when present.
#pragma once

#include "pld/data.hpp"

namespace pld {

struct DatasetSplits {
  Dataset train, validation, test;
};

struct IngestOptions {
  double train_frac = 0.8, val_frac = 0.1;  // hash split when no official lists
  double unknown_frac = 0.1;                // of the training mix
  double silence_frac = 0.1;
  uint64_t seed = 0;
  int clip_ms = 1000;  // samples are center-padded to this length
};

/// Auto-detects the layout: speech-commands when the target-word
/// directories are present, generic otherwise.
DatasetSplits ingest(const std::string& root, const IngestOptions& opt = {});

DatasetSplits ingest_generic(const std::string& root, const IngestOptions& opt);
DatasetSplits ingest_speech_commands(const std::string& root, const IngestOptions& opt);

}  // namespace pld
