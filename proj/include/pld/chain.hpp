// SPDX-License-Identifier: Apache-2.0
//
// Direct and progressive distillation across a declared sequence of
// input lengths: the head of the chain is trained on ground truth,
// every later network is trained on labels distilled by its
// predecessor.
#pragma once

#include "pld/eval.hpp"
#include "pld/trainer.hpp"

namespace pld {

struct ChainSpec {
  std::vector<int> dims_ms;  // strictly decreasing, head = ground-truth-trained
  LabelMode mode = LabelMode::Soft;
  NetworkSpec network;       // input_ms is overridden per step
  TrainingConfig training;

  void validate() const;
};

struct ChainStepResult {
  int dim_ms = 0;
  std::string checkpoint;
  double test_accuracy = 0;
  double wall_s = 0;
};

struct ChainResult {
  std::vector<ChainStepResult> steps;
};

/// Runs the whole chain, checkpointing and evaluating every network.
/// With resume=true, steps whose checkpoints already exist are loaded
/// instead of retrained; per-step seeds depend only on (seed, step), so
/// a resumed run continues bit-identically.
ChainResult run_chain(const ChainSpec& spec, const Dataset& train, const Dataset& test,
                      const std::string& out_dir, bool resume = false);

/// results CSV: step_index, dim_ms, accuracy, checkpoint, wall_s rows.
void write_chain_csv(const ChainResult& r, const std::string& path);

}  // namespace pld
