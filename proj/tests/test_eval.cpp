// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pld/distill.hpp"
#include "pld/eval.hpp"
#include "pld/kernels.hpp"
#include "pld/synth.hpp"

using namespace pld;

namespace {

Network tiny_net(int input_ms, int n_classes, const Dataset& norm_source) {
  NetworkSpec spec;
  spec.input_ms = input_ms;
  spec.n_channels = 4;
  spec.n_res_blocks = 1;
  spec.n_classes = n_classes;
  Network net = build_network(spec, 13);
  std::vector<MfccMatrix> feats;
  std::vector<const MfccMatrix*> ptrs;
  for (const auto& s : norm_source.samples) {
    Waveform c = s.waveform;
    if (c.size() > input_ms * c.sample_rate / 1000)
      c = crop(c, {c.size(), input_ms * c.sample_rate / 1000, 0});
    feats.push_back(mfcc(c));
  }
  for (const auto& f : feats) ptrs.push_back(&f);
  set_normalization(net, ptrs);
  return net;
}

}  // namespace

TEST_CASE("evaluation offsets hit the three fixed fractions") {
  CHECK(eval_offsets(16000, 8000) == std::array<int64_t, 3>{1333, 4000, 6666});
  CHECK(eval_offsets(4, 1) == std::array<int64_t, 3>{0, 1, 2});
  CHECK(eval_offsets(5, 5) == std::array<int64_t, 3>{0, 0, 0});
  CHECK(eval_offsets(8003, 8000) == std::array<int64_t, 3>{0, 1, 2});
}

TEST_CASE("three-crop prediction equals the manual average bit for bit") {
  kernels::init();
  SynthSpec sp;
  sp.sample_rate = 4000;
  sp.clip_ms = 500;
  sp.utterance_ms = 55;
  sp.n_train_per_class = 2;
  sp.n_test_per_class = 1;
  Dataset data = synth_generate(sp).train;
  Network net = tiny_net(250, data.n_classes(), data);

  const Waveform& w = data.samples[0].waveform;
  const std::vector<float> got = three_crop_predict(net, w);

  const int64_t tgt = 250 * w.sample_rate / 1000;
  const auto offs = eval_offsets(w.size(), tgt);
  std::vector<float> mean(got.size(), 0.f);
  for (int64_t o : offs) {
    Waveform c = crop(w, {w.size(), tgt, o});
    MfccMatrix f = mfcc(c);
    Var y = net.forward(make_batch(net, {&f}), /*train=*/false);
    for (size_t j = 0; j < mean.size(); ++j) mean[j] += y->value.data[j];
  }
  for (auto& v : mean) v /= 3.f;
  REQUIRE(got.size() == mean.size());
  for (size_t j = 0; j < mean.size(); ++j) CHECK(got[j] == mean[j]);  // bit-exact
}

TEST_CASE("three-crop prediction is a probability vector") {
  SynthSpec sp;
  sp.sample_rate = 4000;
  sp.clip_ms = 500;
  sp.utterance_ms = 55;
  sp.n_train_per_class = 1;
  sp.n_test_per_class = 1;
  Dataset data = synth_generate(sp).train;
  Network net = tiny_net(250, data.n_classes(), data);
  const auto p = three_crop_predict(net, data.samples[0].waveform);
  double sum = 0;
  for (float v : p) {
    CHECK(v >= 0.f);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("evaluate fills the confusion matrix consistently") {
  SynthSpec sp;
  sp.sample_rate = 4000;
  sp.clip_ms = 500;
  sp.utterance_ms = 55;
  sp.n_train_per_class = 3;
  sp.n_test_per_class = 2;
  Dataset data = synth_generate(sp).train;
  Network net = tiny_net(250, data.n_classes(), data);
  net.label_names = data.label_names;

  const EvalReport r = evaluate(net, data);
  CHECK(r.n_samples == static_cast<int64_t>(data.samples.size()));
  CHECK(r.accuracy >= 0.0);
  CHECK(r.accuracy <= 1.0);
  REQUIRE(r.confusion.size() == static_cast<size_t>(data.n_classes()));
  int64_t total = 0, diag = 0;
  for (size_t i = 0; i < r.confusion.size(); ++i)
    for (size_t j = 0; j < r.confusion[i].size(); ++j) {
      total += r.confusion[i][j];
      if (i == j) diag += r.confusion[i][j];
    }
  CHECK(total == r.n_samples);
  CHECK(r.accuracy == doctest::Approx(static_cast<double>(diag) / total));

  const std::string json = report_json(r, net.label_names);
  CHECK(json.find("\"accuracy\"") != std::string::npos);
  const std::string table = report_table(r, net.label_names);
  CHECK(!table.empty());
}

TEST_CASE("random offsets stay within range and depend on the seed") {
  SynthSpec sp;
  sp.sample_rate = 4000;
  sp.clip_ms = 500;
  sp.utterance_ms = 55;
  sp.n_train_per_class = 1;
  sp.n_test_per_class = 1;
  Dataset data = synth_generate(sp).train;
  Network net = tiny_net(250, data.n_classes(), data);

  EvalOptions a;
  a.random_offsets = true;
  a.seed = 1;
  EvalOptions b = a;
  const auto pa = three_crop_predict(net, data.samples[0].waveform, a);
  const auto pb = three_crop_predict(net, data.samples[0].waveform, b);
  CHECK(pa == pb);  // same seed, same crops
}
