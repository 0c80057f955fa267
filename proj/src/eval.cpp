// SPDX-License-Identifier: Apache-2.0
#include "pld/eval.hpp"

#include <sstream>

#include "pld/distill.hpp"

namespace pld {

std::array<int64_t, 3> eval_offsets(int64_t src_len, int64_t tgt_len) {
  if (tgt_len > src_len) throw std::invalid_argument("eval_offsets: target exceeds source");
  const double d = static_cast<double>(src_len - tgt_len);
  return {static_cast<int64_t>(std::floor(0.5 / 3.0 * d)),
          static_cast<int64_t>(std::floor(1.5 / 3.0 * d)),
          static_cast<int64_t>(std::floor(2.5 / 3.0 * d))};
}

std::vector<float> three_crop_predict(Network& net, const Waveform& sample,
                                      const EvalOptions& opt) {
  const int64_t tgt_len = static_cast<int64_t>(net.spec.input_ms) * sample.sample_rate / 1000;
  if (sample.size() < tgt_len)
    throw std::invalid_argument("three_crop_predict: sample shorter than network input");

  std::array<int64_t, 3> offs;
  if (opt.random_offsets) {
    Rng rng = make_rng(opt.seed, 0xe7a1);
    std::uniform_int_distribution<int64_t> dist(0, sample.size() - tgt_len);
    for (auto& o : offs) o = dist(rng);
  } else {
    offs = eval_offsets(sample.size(), tgt_len);
  }

  std::vector<float> mean(static_cast<size_t>(net.spec.n_classes), 0.f);
  for (int64_t off : offs) {
    const Waveform c = crop(sample, {sample.size(), tgt_len, off});
    const MfccMatrix feats = mfcc(c);
    const MfccMatrix* p = &feats;
    Var probs = net.forward(make_batch(net, {p}), /*train=*/false);
    for (int j = 0; j < net.spec.n_classes; ++j) mean[static_cast<size_t>(j)] += probs->value.at2(0, j);
  }
  for (float& v : mean) v /= 3.f;
  return mean;
}

EvalReport evaluate(Network& net, const Dataset& test, const EvalOptions& opt) {
  if (test.samples.empty()) throw std::invalid_argument("evaluate: empty test set");
  const int c = net.spec.n_classes;
  EvalReport r;
  r.confusion.assign(static_cast<size_t>(c), std::vector<int64_t>(static_cast<size_t>(c), 0));
  for (const auto& s : test.samples) {
    const auto probs = three_crop_predict(net, s.waveform, opt);
    const int pred = argmax_class(probs);
    r.confusion[static_cast<size_t>(s.label)][static_cast<size_t>(pred)]++;
    const int64_t tgt_len = static_cast<int64_t>(net.spec.input_ms) * s.waveform.sample_rate / 1000;
    r.offsets_used = eval_offsets(s.waveform.size(), tgt_len);
  }
  r.n_samples = static_cast<int64_t>(test.samples.size());
  int64_t correct = 0;
  r.per_class_accuracy.assign(static_cast<size_t>(c), 0.0);
  for (int i = 0; i < c; ++i) {
    int64_t row = 0;
    for (int j = 0; j < c; ++j) row += r.confusion[static_cast<size_t>(i)][static_cast<size_t>(j)];
    correct += r.confusion[static_cast<size_t>(i)][static_cast<size_t>(i)];
    r.per_class_accuracy[static_cast<size_t>(i)] =
        row ? static_cast<double>(r.confusion[static_cast<size_t>(i)][static_cast<size_t>(i)]) / static_cast<double>(row) : 0.0;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n_samples);
  return r;
}

std::string report_json(const EvalReport& r, const std::vector<std::string>& label_names) {
  std::ostringstream o;
  o << "{\n  \"accuracy\": " << r.accuracy << ",\n  \"n_samples\": " << r.n_samples
    << ",\n  \"labels\": [";
  for (size_t i = 0; i < label_names.size(); ++i)
    o << (i ? ", " : "") << "\"" << label_names[i] << "\"";
  o << "],\n  \"per_class_accuracy\": [";
  for (size_t i = 0; i < r.per_class_accuracy.size(); ++i)
    o << (i ? ", " : "") << r.per_class_accuracy[i];
  o << "],\n  \"confusion\": [";
  for (size_t i = 0; i < r.confusion.size(); ++i) {
    o << (i ? ", " : "") << "[";
    for (size_t j = 0; j < r.confusion[i].size(); ++j) o << (j ? ", " : "") << r.confusion[i][j];
    o << "]";
  }
  o << "]\n}\n";
  return o.str();
}

std::string report_table(const EvalReport& r, const std::vector<std::string>& label_names) {
  std::ostringstream o;
  o << "accuracy " << r.accuracy * 100.0 << "% over " << r.n_samples << " samples\n";
  for (size_t i = 0; i < label_names.size(); ++i)
    o << "  " << label_names[i] << ": " << r.per_class_accuracy[i] * 100.0 << "%\n";
  return o.str();
}

}  // namespace pld
