// SPDX-License-Identifier: Apache-2.0
//
// Dilated residual keyword-spotting network with a parameterized input
// length, plus its FLOPs counter.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "pld/audio.hpp"
#include "pld/autograd.hpp"
#include "pld/optimizer.hpp"

namespace pld {

struct NetworkSpec {
  int input_ms = 1000;      // utterance length the network accepts
  int n_channels = 45;
  int n_res_blocks = 6;
  int n_classes = 12;
  int kernel = 3;
  int final_dilation = 16;
  int n_coeffs = 40;        // feature dimension

  // floor((ms - window) / shift) + 1 with the 30ms/10ms front-end
  int input_frames() const { return (input_ms - 30) / 10 + 1; }
  // dilation of residual conv i (i = 0 .. 2*n_res_blocks-1): 2^floor(i/3)
  int res_dilation(int conv_idx) const { return 1 << (conv_idx / 3); }
  void validate() const;
};

struct Network {
  NetworkSpec spec;
  std::map<std::string, Var> params;                      // ordered, deterministic
  std::map<std::string, BatchNormStats<float>> bn_stats;  // running mean/var per BN
  std::vector<float> norm_mean, norm_var;                 // per-coefficient feature stats
  std::vector<std::string> label_names;

  /// batch [N, 1, input_frames, n_coeffs] -> class probabilities [N, n_classes].
  Var forward(const Tensor& batch, bool train);
  Var forward(const Var& input, bool train);
};

/// Fan-in-scaled uniform init, deterministic per seed.
Network build_network(const NetworkSpec& spec, uint64_t seed);

/// Per-coefficient mean/variance over a feature collection; stored with
/// the model and applied to every input.
void set_normalization(Network& net, const std::vector<const MfccMatrix*>& features);

/// Stacks features into a normalized [N,1,frames,coeffs] batch.
Tensor make_batch(const Network& net, const std::vector<const MfccMatrix*>& features);

struct FlopsReport {
  double conv = 0, add = 0, pool = 0, total = 0;
  double factor = 1.0;  // total / total(same spec at 1000 ms)
};

/// conv = 2*MACs at "same" padding, residual add and pool = one FLOP
/// per element.
FlopsReport count_flops(const NetworkSpec& spec);

// Checkpoint: magic "DCKP", u32 version, u32 header length + key=value
// text, u32 record count, then (u32 name len, name, u32 rank, u32 dims,
// f32 LE payload) per tensor. Optimizer velocity records use an "opt."
// name prefix and are optional.
void save_checkpoint(const std::string& path, const Network& net, const SgdState* opt = nullptr);
Network load_checkpoint(const std::string& path, SgdState* opt = nullptr);

}  // namespace pld
