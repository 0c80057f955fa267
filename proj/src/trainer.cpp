// SPDX-License-Identifier: Apache-2.0
#include "pld/trainer.hpp"

#include <chrono>
#include <fstream>
#include <numeric>

#include "pld/rng.hpp"

namespace pld {

void TrainingConfig::validate() const {
  if (batch_size < 1 || epochs < 1 || crops_per_source < 1)
    throw std::invalid_argument("training config: counts must be positive");
  if (lr <= 0 || momentum < 0 || weight_decay < 0)
    throw std::invalid_argument("training config: bad hyperparameters");
  if (lr_boundary1 >= lr_boundary2)
    throw std::invalid_argument("training config: schedule boundaries must increase");
}

namespace {

std::vector<float> one_hot(int label, int n_classes) {
  std::vector<float> v(static_cast<size_t>(n_classes), 0.f);
  v[static_cast<size_t>(label)] = 1.f;
  return v;
}

}  // namespace

float train_network(Network& net, const EpochProvider& provider, const TrainingConfig& cfg) {
  cfg.validate();
  LrSchedule sched{cfg.lr, cfg.lr_boundary1, cfg.lr_boundary2,
                   cfg.exp_decay, cfg.decay_rate, cfg.decay_steps};
  SgdState opt;
  opt.momentum = cfg.momentum;
  opt.weight_decay = cfg.weight_decay;

  std::ofstream log;
  if (!cfg.log_path.empty()) log.open(cfg.log_path);
  const auto t0 = std::chrono::steady_clock::now();

  long iter = 0;
  float last_loss = 0.f;
  std::vector<MfccMatrix> feats;
  std::vector<std::vector<float>> targets;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    feats.clear();
    targets.clear();
    provider(epoch, feats, targets);
    if (feats.empty()) throw std::runtime_error("training: provider returned no samples");
    if (epoch == 0) {
      std::vector<const MfccMatrix*> ptrs;
      for (const auto& f : feats) ptrs.push_back(&f);
      set_normalization(net, ptrs);
    }

    std::vector<size_t> order(feats.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng = make_rng(cfg.seed, 0x5f1e, static_cast<uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t n = std::min(static_cast<size_t>(cfg.batch_size), order.size() - start);
      std::vector<const MfccMatrix*> batch_feats(n);
      Tensor batch_targets({static_cast<int>(n), net.spec.n_classes});
      for (size_t i = 0; i < n; ++i) {
        const size_t idx = order[start + i];
        batch_feats[i] = &feats[idx];
        for (int j = 0; j < net.spec.n_classes; ++j)
          batch_targets.at2(static_cast<int>(i), j) = targets[idx][static_cast<size_t>(j)];
      }

      Var probs = net.forward(make_batch(net, batch_feats), /*train=*/true);
      Var loss = cross_entropy(probs, batch_targets);
      last_loss = loss->value.data[0];
      if (!std::isfinite(last_loss))
        throw std::runtime_error("training diverged: NaN loss at iter " + std::to_string(iter));
      backward(loss);

      opt.learning_rate = sched.at(iter);
      for (auto& [name, p] : net.params) opt.step(name, p);
      for (auto& [name, p] : net.params) p->zero_grad();

      if (log) {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0).count();
        log << "{\"iter\":" << iter << ",\"epoch\":" << epoch << ",\"lr\":" << opt.learning_rate
            << ",\"loss\":" << last_loss << ",\"wall_ms\":" << ms << "}\n";
      }
      ++iter;
      if (cfg.max_iters > 0 && iter >= cfg.max_iters) return last_loss;
    }
  }
  return last_loss;
}

Network train_teacher(const Dataset& train, const NetworkSpec& spec, const TrainingConfig& cfg) {
  if (train.samples.empty()) throw std::invalid_argument("train_teacher: empty dataset");
  const double got_ms = train.samples[0].waveform.duration_ms();
  if (std::llround(got_ms) != spec.input_ms)
    throw std::invalid_argument("train_teacher: dataset length " + std::to_string(got_ms) +
                                "ms does not match spec input " + std::to_string(spec.input_ms) +
                                "ms");

  Network net = build_network(spec, cfg.seed);
  net.label_names = train.label_names;

  // fixed features: compute once, reuse every epoch
  auto cached = std::make_shared<std::vector<MfccMatrix>>(train.samples.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(train.samples.size()); ++i)
    (*cached)[static_cast<size_t>(i)] = mfcc(train.samples[static_cast<size_t>(i)].waveform);

  train_network(net,
                [&](int, std::vector<MfccMatrix>& feats, std::vector<std::vector<float>>& targets) {
                  feats = *cached;
                  targets.reserve(train.samples.size());
                  for (const auto& s : train.samples)
                    targets.push_back(one_hot(s.label, spec.n_classes));
                },
                cfg);
  return net;
}

Network train_direct_crops(const Dataset& train, NetworkSpec tgt_spec, int tgt_ms,
                           const TrainingConfig& cfg) {
  if (train.samples.empty()) throw std::invalid_argument("train_direct_crops: empty dataset");
  tgt_spec.input_ms = tgt_ms;
  Network net = build_network(tgt_spec, cfg.seed);
  net.label_names = train.label_names;
  const int64_t tgt_len = static_cast<int64_t>(tgt_ms) * train.sample_rate / 1000;

  train_network(
      net,
      [&](int epoch, std::vector<MfccMatrix>& feats, std::vector<std::vector<float>>& targets) {
        const uint64_t ep = cfg.freeze_crops ? 0 : static_cast<uint64_t>(epoch);
        const size_t n = train.samples.size() * static_cast<size_t>(cfg.crops_per_source);
        feats.resize(n);
        targets.resize(n);
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < static_cast<int64_t>(train.samples.size()); ++i)
          for (int j = 0; j < cfg.crops_per_source; ++j) {
            Rng rng = make_rng(mix_seed(cfg.seed, ep), static_cast<uint64_t>(i),
                               static_cast<uint64_t>(j));
            auto [c, off] = random_crop(train.samples[static_cast<size_t>(i)].waveform, tgt_len, rng);
            const size_t k = static_cast<size_t>(i) * static_cast<size_t>(cfg.crops_per_source) +
                             static_cast<size_t>(j);
            feats[k] = mfcc(c);
            targets[k] = one_hot(train.samples[static_cast<size_t>(i)].label, tgt_spec.n_classes);
          }
      },
      cfg);
  return net;
}

Network distill_step(Network& teacher, const Dataset& train, int tgt_ms,
                     const TrainingConfig& cfg, LabelMode mode) {
  NetworkSpec spec = teacher.spec;
  spec.input_ms = tgt_ms;
  Network net = build_network(spec, cfg.seed);
  net.label_names = teacher.label_names;

  train_network(
      net,
      [&](int epoch, std::vector<MfccMatrix>& feats, std::vector<std::vector<float>>& targets) {
        const uint64_t ep = cfg.freeze_crops ? 0 : static_cast<uint64_t>(epoch);
        DistilledDataset d =
            build_distilled_dataset(teacher, train, tgt_ms, cfg.crops_per_source, mode, cfg.seed, ep);
        feats.reserve(d.samples.size());
        targets.reserve(d.samples.size());
        for (auto& s : d.samples) {
          feats.push_back(std::move(s.features));
          targets.push_back(mode == LabelMode::Soft
                                ? s.soft_label
                                : [&] {
                                    std::vector<float> v(static_cast<size_t>(d.n_classes), 0.f);
                                    v[static_cast<size_t>(s.hard_label)] = 1.f;
                                    return v;
                                  }());
        }
      },
      cfg);
  return net;
}

Network train_on_distilled(const DistilledDataset& data, NetworkSpec tgt_spec,
                           const TrainingConfig& cfg) {
  if (data.samples.empty()) throw std::invalid_argument("train_on_distilled: empty dataset");
  tgt_spec.input_ms = data.tgt_ms;
  tgt_spec.n_classes = data.n_classes;
  Network net = build_network(tgt_spec, cfg.seed);

  train_network(
      net,
      [&](int, std::vector<MfccMatrix>& feats, std::vector<std::vector<float>>& targets) {
        for (const auto& s : data.samples) {
          feats.push_back(s.features);
          if (data.mode == LabelMode::Soft) {
            targets.push_back(s.soft_label);
          } else {
            std::vector<float> v(static_cast<size_t>(data.n_classes), 0.f);
            v[static_cast<size_t>(s.hard_label)] = 1.f;
            targets.push_back(std::move(v));
          }
        }
      },
      cfg);
  return net;
}

}  // namespace pld
