// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "pld/data.hpp"
#include "pld/distill.hpp"
#include "pld/model.hpp"
#include "pld/optimizer.hpp"

namespace pld {

struct TrainingConfig {
  int batch_size = 64;
  int epochs = 25;
  float lr = 0.1f;
  long lr_boundary1 = 6000;
  long lr_boundary2 = 12000;
  bool exp_decay = false;  // rate^(iter/steps) on top of the staircase
  float decay_rate = 0.9f;
  long decay_steps = 1000;
  float momentum = 0.9f;
  float weight_decay = 1e-5f;
  int crops_per_source = 3;   // per source per epoch for student training
  bool freeze_crops = false;  // reuse epoch-0 crops every epoch
  uint64_t seed = 0;
  long max_iters = 0;  // 0 = unlimited; nonzero caps the run (smoke tests)
  std::string log_path;  // JSON-lines run log, one record per iteration

  void validate() const;
};

/// Supplies features and target distributions for one epoch. Students
/// regenerate crops here; ground-truth training returns a fixed set.
using EpochProvider =
    std::function<void(int epoch, std::vector<MfccMatrix>& feats,
                       std::vector<std::vector<float>>& targets)>;

/// Shared SGD loop: seeded shuffling, staircase learning rate, run log.
/// Throws on NaN loss. Returns the final training loss.
float train_network(Network& net, const EpochProvider& provider, const TrainingConfig& cfg);

/// Ground-truth cross-entropy training on full-length samples.
Network train_teacher(const Dataset& train, const NetworkSpec& spec, const TrainingConfig& cfg);

/// Baseline without distillation: random crops keep their source's
/// ground-truth label.
Network train_direct_crops(const Dataset& train, NetworkSpec tgt_spec, int tgt_ms,
                           const TrainingConfig& cfg);

/// One distillation step: a student at tgt_ms trained purely on
/// teacher-labeled crops of the source data.
Network distill_step(Network& teacher, const Dataset& train, int tgt_ms,
                     const TrainingConfig& cfg, LabelMode mode);

/// Student training over a frozen, pre-built distilled dataset.
Network train_on_distilled(const DistilledDataset& data, NetworkSpec tgt_spec,
                           const TrainingConfig& cfg);

}  // namespace pld
