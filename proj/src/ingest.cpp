// SPDX-License-Identifier: Apache-2.0
#include "pld/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "pld/distill.hpp"
#include "pld/io.hpp"
#include "pld/rng.hpp"

namespace fs = std::filesystem;

namespace pld {

namespace {

const std::vector<std::string> kTargetWords = {"yes", "no",  "up",  "down", "left",
                                               "right", "on", "off", "stop", "go"};

// Split assignment is a pure function of the speaker portion of the
// file name (prefix before "_nohash_" when present), so splits are
// person-independent and stable across machines.
int split_bucket(const std::string& rel_path, uint64_t seed) {
  const std::string fname = fs::path(rel_path).filename().string();
  const auto pos = fname.find("_nohash_");
  const std::string key = pos == std::string::npos ? rel_path : fname.substr(0, pos);
  return static_cast<int>(mix_seed(fnv1a64(key.data(), key.size()), seed) % 100);
}

std::vector<std::string> sorted_wavs(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

Waveform pad_to_clip(const Waveform& w, int clip_ms) {
  if (clip_ms <= 0) return w;  // keep native lengths
  const int64_t want = static_cast<int64_t>(clip_ms) * w.sample_rate / 1000;
  if (w.size() == want) return w;
  if (w.size() < want) return pad(w, want);
  return crop(w, {w.size(), want, (w.size() - want) / 2});
}

std::set<std::string> read_list(const fs::path& p) {
  std::set<std::string> out;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) out.insert(line);
  return out;
}

}  // namespace

DatasetSplits ingest_generic(const std::string& root, const IngestOptions& opt) {
  if (!fs::is_directory(root)) throw std::runtime_error("missing dataset root: " + root);
  std::vector<std::string> classes;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && e.path().filename().string()[0] != '_')
      classes.push_back(e.path().filename().string());
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw std::runtime_error("no class directories under " + root);

  DatasetSplits out;
  for (auto* d : {&out.train, &out.validation, &out.test}) d->label_names = classes;

  int rate = 0;
  for (size_t c = 0; c < classes.size(); ++c) {
    const auto files = sorted_wavs(fs::path(root) / classes[c]);
    if (files.empty()) throw std::runtime_error("empty class directory: " + classes[c]);
    for (const auto& f : files) {
      Waveform w = load_wav(f);
      if (rate == 0) rate = w.sample_rate;
      if (w.sample_rate != rate) w = resample(w, rate);
      LabeledSample s;
      s.waveform = pad_to_clip(w, opt.clip_ms);
      s.label = static_cast<int>(c);
      s.id = fs::path(f).stem().string();
      const std::string rel = classes[c] + "/" + fs::path(f).filename().string();
      // synthetic ids carry their split in the name; honor it
      Dataset* dst;
      if (s.id.size() > 5 && s.id.substr(s.id.size() - 5) == "_test") {
        dst = &out.test;
      } else if (s.id.size() > 6 && s.id.substr(s.id.size() - 6) == "_train") {
        dst = &out.train;
      } else {
        const int b = split_bucket(rel, opt.seed);
        dst = b < static_cast<int>(opt.train_frac * 100)            ? &out.train
              : b < static_cast<int>((opt.train_frac + opt.val_frac) * 100) ? &out.validation
                                                                            : &out.test;
      }
      dst->samples.push_back(std::move(s));
    }
  }
  for (auto* d : {&out.train, &out.validation, &out.test}) d->sample_rate = rate;
  return out;
}

DatasetSplits ingest_speech_commands(const std::string& root, const IngestOptions& opt) {
  if (!fs::is_directory(root)) throw std::runtime_error("missing dataset root: " + root);
  std::vector<std::string> names = kTargetWords;
  names.push_back("silence");
  names.push_back("unknown");
  const int silence_label = 10, unknown_label = 11;

  const auto val_list = read_list(fs::path(root) / "validation_list.txt");
  const auto test_list = read_list(fs::path(root) / "testing_list.txt");
  const bool official = !val_list.empty() && !test_list.empty();

  DatasetSplits out;
  for (auto* d : {&out.train, &out.validation, &out.test}) {
    d->label_names = names;
    d->sample_rate = 16000;
  }

  std::vector<std::pair<std::string, int>> files;  // rel path, label
  for (const auto& e : fs::directory_iterator(root)) {
    if (!e.is_directory()) continue;
    const std::string word = e.path().filename().string();
    if (word == "_background_noise_") continue;
    const auto it = std::find(kTargetWords.begin(), kTargetWords.end(), word);
    const int label = it == kTargetWords.end()
                          ? unknown_label
                          : static_cast<int>(it - kTargetWords.begin());
    for (const auto& f : sorted_wavs(e.path()))
      files.emplace_back(word + "/" + fs::path(f).filename().string(), label);
  }
  if (files.empty()) throw std::runtime_error("no word directories under " + root);
  std::sort(files.begin(), files.end());

  // unknown words are down-sampled to roughly unknown_frac of the mix
  size_t n_target = 0, n_unknown = 0;
  for (const auto& [p, l] : files) (l == unknown_label ? n_unknown : n_target)++;
  const double keep_unknown = std::min(
      1.0, opt.unknown_frac * static_cast<double>(n_target) /
               ((1.0 - opt.unknown_frac) * std::max<double>(1, static_cast<double>(n_unknown))));

  for (const auto& [rel, label] : files) {
    if (label == unknown_label) {
      const uint64_t h = mix_seed(fnv1a64(rel.data(), rel.size()), opt.seed, 77);
      if (static_cast<double>(h % 10000) >= keep_unknown * 10000) continue;
    }
    Waveform w = load_wav((fs::path(root) / rel).string(), 16000);
    LabeledSample s;
    s.waveform = pad_to_clip(w, opt.clip_ms);
    s.label = label;
    s.id = fs::path(rel).parent_path().string() + "_" + fs::path(rel).stem().string();
    Dataset* dst;
    if (official) {
      dst = test_list.count(rel) ? &out.test
            : val_list.count(rel) ? &out.validation
                                  : &out.train;
    } else {
      const int b = split_bucket(rel, opt.seed);
      dst = b < static_cast<int>(opt.train_frac * 100)                    ? &out.train
            : b < static_cast<int>((opt.train_frac + opt.val_frac) * 100) ? &out.validation
                                                                          : &out.test;
    }
    dst->samples.push_back(std::move(s));
  }

  // silence: random crops of the background noise recordings
  std::vector<Waveform> noise;
  const fs::path noise_dir = fs::path(root) / "_background_noise_";
  if (fs::is_directory(noise_dir))
    for (const auto& f : sorted_wavs(noise_dir)) noise.push_back(load_wav(f, 16000));
  if (!noise.empty()) {
    const int64_t clip_len = static_cast<int64_t>(opt.clip_ms) * 16;
    auto synth_silence = [&](Dataset& d, uint64_t tag) {
      const auto want = static_cast<size_t>(
          opt.silence_frac / (1.0 - opt.silence_frac) * static_cast<double>(d.samples.size()));
      for (size_t i = 0; i < want; ++i) {
        Rng rng = make_rng(opt.seed, tag, i);
        const Waveform& src = noise[i % noise.size()];
        auto [c, off] = random_crop(src, std::min(clip_len, src.size()), rng);
        LabeledSample s;
        s.waveform = pad_to_clip(c, opt.clip_ms);
        s.label = silence_label;
        s.id = "silence_" + std::to_string(tag) + "_" + std::to_string(i);
        d.samples.push_back(std::move(s));
      }
    };
    synth_silence(out.train, 1);
    synth_silence(out.validation, 2);
    synth_silence(out.test, 3);
  }
  return out;
}

DatasetSplits ingest(const std::string& root, const IngestOptions& opt) {
  for (const auto& w : kTargetWords)
    if (fs::is_directory(fs::path(root) / w)) return ingest_speech_commands(root, opt);
  return ingest_generic(root, opt);
}

}  // namespace pld
