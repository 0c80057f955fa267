// SPDX-License-Identifier: Apache-2.0
#include "pld/distill.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace pld {

Waveform crop(const Waveform& w, const CropSpec& spec) {
  if (spec.src_len != w.size()) throw std::invalid_argument("crop: src_len does not match waveform");
  spec.validate();
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + spec.offset, w.samples.begin() + spec.offset + spec.tgt_len);
  return out;
}

std::pair<Waveform, int64_t> random_crop(const Waveform& w, int64_t tgt_len, Rng& rng) {
  if (tgt_len > w.size()) throw std::invalid_argument("random_crop: target longer than source");
  const int64_t range = w.size() - tgt_len;
  const int64_t offset =
      range == 0 ? 0 : static_cast<int64_t>(std::uniform_int_distribution<int64_t>(0, range)(rng));
  return {crop(w, {w.size(), tgt_len, offset}), offset};
}

Waveform pad(const Waveform& w, int64_t src_len) {
  if (w.size() > src_len) throw std::invalid_argument("pad: waveform longer than target length");
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(static_cast<size_t>(src_len), 0.f);
  const int64_t start = (src_len - w.size()) / 2;
  std::copy(w.samples.begin(), w.samples.end(), out.samples.begin() + start);
  return out;
}

LabelMode parse_label_mode(const std::string& s) {
  if (s == "hard") return LabelMode::Hard;
  if (s == "soft") return LabelMode::Soft;
  throw std::invalid_argument("label mode must be 'hard' or 'soft', got: " + s);
}

int argmax_class(const std::vector<float>& probs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i)
    if (probs[static_cast<size_t>(i)] > probs[static_cast<size_t>(best)]) best = i;
  return best;
}

std::vector<std::vector<float>> distill_labels(Network& teacher, const std::vector<Waveform>& crops) {
  std::vector<std::vector<float>> out(crops.size());
  if (crops.empty()) return out;
  const int64_t teacher_len =
      static_cast<int64_t>(teacher.spec.input_ms) * crops[0].sample_rate / 1000;

  constexpr size_t kChunk = 64;
  for (size_t base = 0; base < crops.size(); base += kChunk) {
    const size_t n = std::min(kChunk, crops.size() - base);
    std::vector<MfccMatrix> feats(n);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i)
      feats[static_cast<size_t>(i)] = mfcc(pad(crops[base + static_cast<size_t>(i)], teacher_len));
    std::vector<const MfccMatrix*> ptrs(n);
    for (size_t i = 0; i < n; ++i) ptrs[i] = &feats[i];
    Var probs = teacher.forward(make_batch(teacher, ptrs), /*train=*/false);
    const int c = probs->value.dim(1);
    for (size_t i = 0; i < n; ++i) {
      out[base + i].resize(static_cast<size_t>(c));
      for (int j = 0; j < c; ++j) out[base + i][static_cast<size_t>(j)] = probs->value.at2(static_cast<int>(i), j);
    }
  }
  return out;
}

DistilledDataset build_distilled_dataset(Network& teacher, const Dataset& source, int tgt_ms,
                                         int crops_per_source, LabelMode mode, uint64_t seed,
                                         uint64_t epoch) {
  if (source.samples.empty()) throw std::invalid_argument("distill: empty source dataset");
  if (tgt_ms >= teacher.spec.input_ms)
    throw std::invalid_argument("distill: target length must be below the teacher input length");

  const int64_t tgt_len = static_cast<int64_t>(tgt_ms) * source.sample_rate / 1000;
  DistilledDataset d;
  d.src_ms = teacher.spec.input_ms;
  d.tgt_ms = tgt_ms;
  d.mode = mode;
  d.sample_rate = source.sample_rate;
  d.n_classes = teacher.spec.n_classes;

  std::vector<Waveform> crops;
  crops.reserve(source.samples.size() * static_cast<size_t>(crops_per_source));
  std::vector<int64_t> offsets;
  std::vector<size_t> src_idx;
  for (size_t i = 0; i < source.samples.size(); ++i)
    for (int j = 0; j < crops_per_source; ++j) {
      Rng rng = make_rng(mix_seed(seed, epoch), i, static_cast<uint64_t>(j));
      auto [c, off] = random_crop(source.samples[i].waveform, tgt_len, rng);
      crops.push_back(std::move(c));
      offsets.push_back(off);
      src_idx.push_back(i);
    }

  auto probs = distill_labels(teacher, crops);

  d.samples.resize(crops.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(crops.size()); ++i) {
    auto& s = d.samples[static_cast<size_t>(i)];
    s.features = mfcc(crops[static_cast<size_t>(i)]);
    s.offset = offsets[static_cast<size_t>(i)];
    s.source_id = source.samples[src_idx[static_cast<size_t>(i)]].id;
    s.hard_label = argmax_class(probs[static_cast<size_t>(i)]);
    s.soft_label = std::move(probs[static_cast<size_t>(i)]);
  }
  return d;
}

void save_distilled_dataset(const DistilledDataset& d, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "features");
  std::ofstream mf(fs::path(dir) / "manifest.tsv");
  if (!mf) throw std::runtime_error("cannot write manifest in " + dir);
  mf << "# src_ms=" << d.src_ms << " tgt_ms=" << d.tgt_ms << " mode=" << label_mode_name(d.mode)
     << " sample_rate=" << d.sample_rate << " n_classes=" << d.n_classes
     << " teacher_checksum=" << d.teacher_checksum << "\n";
  char name[32];
  for (size_t i = 0; i < d.samples.size(); ++i) {
    const auto& s = d.samples[i];
    std::snprintf(name, sizeof(name), "%06zu.mfcc", i);
    write_mfcc((fs::path(dir) / "features" / name).string(), s.features);
    mf << s.source_id << "\t" << s.offset << "\t";
    if (d.mode == LabelMode::Hard) {
      mf << s.hard_label;
    } else {
      for (size_t j = 0; j < s.soft_label.size(); ++j) mf << (j ? " " : "") << s.soft_label[j];
    }
    mf << "\n";
  }
}

DistilledDataset load_distilled_dataset(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.tsv");
  if (!mf) throw std::runtime_error("cannot open manifest in " + dir);
  std::string header;
  std::getline(mf, header);
  DistilledDataset d;
  std::istringstream hs(header);
  std::string tok;
  hs >> tok;  // '#'
  while (hs >> tok) {
    const auto eq = tok.find('=');
    const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
    if (k == "src_ms") d.src_ms = std::stoi(v);
    else if (k == "tgt_ms") d.tgt_ms = std::stoi(v);
    else if (k == "mode") d.mode = parse_label_mode(v);
    else if (k == "sample_rate") d.sample_rate = std::stoi(v);
    else if (k == "n_classes") d.n_classes = std::stoi(v);
    else if (k == "teacher_checksum") d.teacher_checksum = std::stoull(v);
  }
  std::string line;
  char name[32];
  size_t idx = 0;
  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    DistilledSample s;
    ls >> s.source_id >> s.offset;
    if (d.mode == LabelMode::Hard) {
      ls >> s.hard_label;
    } else {
      s.soft_label.resize(static_cast<size_t>(d.n_classes));
      for (auto& v : s.soft_label) ls >> v;
      s.hard_label = argmax_class(s.soft_label);
    }
    std::snprintf(name, sizeof(name), "%06zu.mfcc", idx++);
    s.features = read_mfcc((fs::path(dir) / "features" / name).string());
    d.samples.push_back(std::move(s));
  }
  return d;
}

}  // namespace pld
