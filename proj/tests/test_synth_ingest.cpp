// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "pld/ingest.hpp"
#include "pld/io.hpp"
#include "pld/synth.hpp"

using namespace pld;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n_word_classes = 3;
  s.clip_ms = 400;
  s.utterance_ms = 44;
  s.sample_rate = 4000;
  s.n_train_per_class = 4;
  s.n_test_per_class = 2;
  s.noise_level = 0.04f;
  s.seed = 11;
  return s;
}

// training counts mirror the generator's class imbalance
int want_train(const SynthSpec& s, int label) {
  if (label == s.n_word_classes)
    return std::max(1, static_cast<int>(std::lround(s.n_train_per_class * s.silence_train_ratio)));
  if (label > s.n_word_classes)
    return std::max(1, static_cast<int>(std::lround(s.n_train_per_class * s.unknown_train_ratio)));
  return s.n_train_per_class;
}

int want_train_total(const SynthSpec& s) {
  int n = 0;
  for (int c = 0; c < s.n_classes(); ++c) n += want_train(s, c);
  return n;
}

}  // namespace

TEST_CASE("synthetic dataset has the declared shape") {
  const SynthSpec spec = small_spec();
  const SynthSplits s = synth_generate(spec);

  CHECK(s.train.n_classes() == spec.n_classes());
  CHECK(s.train.samples.size() == static_cast<size_t>(want_train_total(spec)));
  CHECK(s.test.samples.size() == static_cast<size_t>(spec.n_classes()) * spec.n_test_per_class);
  CHECK(s.train.sample_rate == spec.sample_rate);

  // silence is the second-to-last class, unknown the last
  CHECK(s.train.label_names[static_cast<size_t>(spec.n_word_classes)] == "silence");
  CHECK(s.train.label_names.back() == "unknown");

  const int64_t want_len = static_cast<int64_t>(spec.clip_ms) * spec.sample_rate / 1000;
  std::vector<int> per_class(static_cast<size_t>(spec.n_classes()), 0);
  for (const auto& smp : s.train.samples) {
    CHECK(smp.waveform.size() == want_len);
    CHECK(smp.waveform.sample_rate == spec.sample_rate);
    for (float v : smp.waveform.samples) CHECK(std::abs(v) <= 1.f);
    per_class[static_cast<size_t>(smp.label)]++;
    CHECK(smp.id.find("_train") != std::string::npos);
  }
  for (int c = 0; c < spec.n_classes(); ++c) CHECK(per_class[static_cast<size_t>(c)] == want_train(spec, c));
  for (const auto& smp : s.test.samples) CHECK(smp.id.find("_test") != std::string::npos);
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const SynthSpec spec = small_spec();
  const SynthSplits a = synth_generate(spec);
  const SynthSplits b = synth_generate(spec);
  REQUIRE(a.train.samples.size() == b.train.samples.size());
  for (size_t i = 0; i < a.train.samples.size(); ++i)
    CHECK(a.train.samples[i].waveform.samples == b.train.samples[i].waveform.samples);

  SynthSpec other = spec;
  other.seed = 12;
  const SynthSplits c = synth_generate(other);
  bool any_diff = false;
  for (size_t i = 0; i < a.train.samples.size(); ++i)
    if (a.train.samples[i].waveform.samples != c.train.samples[i].waveform.samples)
      any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("silence clips carry much less tonal energy than word clips") {
  const SynthSpec spec = small_spec();
  const SynthSplits s = synth_generate(spec);
  auto energy = [](const Waveform& w) {
    double e = 0;
    for (float v : w.samples) e += static_cast<double>(v) * v;
    return e / static_cast<double>(w.size());
  };
  double word_e = 0, silence_e = 0;
  int word_n = 0, silence_n = 0;
  for (const auto& smp : s.train.samples) {
    if (smp.label < spec.n_word_classes) {
      word_e += energy(smp.waveform);
      ++word_n;
    } else if (s.train.label_names[static_cast<size_t>(smp.label)] == "silence") {
      silence_e += energy(smp.waveform);
      ++silence_n;
    }
  }
  CHECK(word_e / word_n > 3.0 * silence_e / silence_n);
}

TEST_CASE("written datasets round-trip through generic ingestion") {
  const SynthSpec spec = small_spec();
  const SynthSplits s = synth_generate(spec);
  const auto dir = std::filesystem::temp_directory_path() / "pld_test_ingest";
  std::filesystem::remove_all(dir);
  write_dataset(s.train, dir.string());
  write_dataset(s.test, dir.string());

  IngestOptions opt;
  opt.clip_ms = spec.clip_ms;
  const DatasetSplits r = ingest_generic(dir.string(), opt);

  // ingestion sorts class names; same set, possibly different order
  std::set<std::string> want_names(s.train.label_names.begin(), s.train.label_names.end());
  std::set<std::string> got_names(r.train.label_names.begin(), r.train.label_names.end());
  CHECK(got_names == want_names);
  CHECK(r.train.samples.size() == s.train.samples.size());  // _train ids stay in train
  CHECK(r.test.samples.size() == s.test.samples.size());
  CHECK(r.train.sample_rate == spec.sample_rate);

  // waveforms survive the WAV round trip within quantization
  std::map<std::string, const LabeledSample*> by_id;
  for (const auto& smp : s.train.samples) by_id[smp.id] = &smp;
  for (const auto& smp : r.train.samples) {
    auto it = by_id.find(smp.id);
    REQUIRE(it != by_id.end());
    CHECK(r.train.label_names[static_cast<size_t>(smp.label)] ==
          s.train.label_names[static_cast<size_t>(it->second->label)]);
    REQUIRE(smp.waveform.size() == it->second->waveform.size());
    for (size_t i = 0; i < smp.waveform.samples.size(); ++i)
      CHECK(std::abs(smp.waveform.samples[i] - it->second->waveform.samples[i]) <= 1.f / 32767.f);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("ingestion splits deterministically without split tags") {
  const auto dir = std::filesystem::temp_directory_path() / "pld_test_ingest_hash";
  std::filesystem::remove_all(dir);

  SynthSpec spec = small_spec();
  SynthSplits s = synth_generate(spec);
  for (auto& smp : s.train.samples) {  // strip the split tags
    const auto pos = smp.id.find("_train");
    smp.id = smp.id.substr(0, pos);
  }
  write_dataset(s.train, dir.string());

  IngestOptions opt;
  opt.clip_ms = spec.clip_ms;
  const DatasetSplits a = ingest_generic(dir.string(), opt);
  const DatasetSplits b = ingest_generic(dir.string(), opt);
  CHECK(a.train.samples.size() == b.train.samples.size());
  CHECK(a.validation.samples.size() == b.validation.samples.size());
  CHECK(a.test.samples.size() == b.test.samples.size());
  CHECK(a.train.samples.size() + a.validation.samples.size() + a.test.samples.size() ==
        s.train.samples.size());
  CHECK(a.train.samples.size() > a.test.samples.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("key=value files round trip") {
  std::map<std::string, std::string> kv{{"alpha", "1"}, {"beta", "two words"}, {"gamma", "3.5"}};
  const std::string text = format_kv(kv);
  CHECK(parse_kv(text) == kv);
  CHECK(parse_kv("# comment\nalpha=1\n\nbeta=2\n") ==
        std::map<std::string, std::string>{{"alpha", "1"}, {"beta", "2"}});

  const auto path = std::filesystem::temp_directory_path() / "pld_test.kv";
  write_kv_file(path.string(), kv);
  CHECK(read_kv_file(path.string()) == kv);
  std::filesystem::remove(path);
}

TEST_CASE("fnv1a64 is stable") {
  const char data[] = "hello";
  CHECK(fnv1a64(data, 5) == 0xa430d84680aabd0bULL);  // known fnv-1a vector
  CHECK(fnv1a64(data, 5) == fnv1a64(data, 5));
  CHECK(fnv1a64(data, 4) != fnv1a64(data, 5));
}

TEST_CASE("split") {
  CHECK(split("a,b,c", ',') == std::vector<std::string>{"a", "b", "c"});
  CHECK(split("", ',') == std::vector<std::string>{""});
  CHECK(split("x", ',') == std::vector<std::string>{"x"});
}
