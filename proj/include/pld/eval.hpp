// SPDX-License-Identifier: Apache-2.0
//
// Three-crop averaged evaluation of a network on full-length samples.
#pragma once

#include <array>

#include "pld/data.hpp"
#include "pld/model.hpp"
#include "pld/rng.hpp"

namespace pld {

struct EvalReport {
  double accuracy = 0;
  std::vector<double> per_class_accuracy;
  std::vector<std::vector<int64_t>> confusion;  // [true][pred]
  int64_t n_samples = 0;
  std::array<int64_t, 3> offsets_used{};  // of the last (typically uniform-length) sample
};

/// { floor(0.5/3 (src-tgt)), floor(1.5/3 (src-tgt)), floor(2.5/3 (src-tgt)) }
std::array<int64_t, 3> eval_offsets(int64_t src_len, int64_t tgt_len);

struct EvalOptions {
  bool random_offsets = false;  // replaces the deterministic three-point rule
  uint64_t seed = 0;
};

/// Mean of the network's probability rows over the three crops.
std::vector<float> three_crop_predict(Network& net, const Waveform& sample,
                                      const EvalOptions& opt = {});

EvalReport evaluate(Network& net, const Dataset& test, const EvalOptions& opt = {});

std::string report_json(const EvalReport& r, const std::vector<std::string>& label_names);
std::string report_table(const EvalReport& r, const std::vector<std::string>& label_names);

}  // namespace pld
