// SPDX-License-Identifier: Apache-2.0
#include "pld/synth.hpp"

#include <filesystem>

namespace pld {

void SynthSpec::validate() const {
  if (n_word_classes < 3) throw std::invalid_argument("synth: need at least 3 word classes");
  // The event must fit the central half of the clip, with segments short
  // enough and the gap wide enough for the edge-window geometry below.
  if (43 * utterance_ms > 5 * clip_ms || 48 * utterance_ms < 5 * clip_ms)
    throw std::invalid_argument("synth: utterance_ms must be between clip_ms*5/48 and clip_ms*5/43");
  if (n_train_per_class < 1 || n_test_per_class < 1 || sample_rate < 1000)
    throw std::invalid_argument("synth: invalid counts or rate");
  if (noise_level < 0 || noise_level > 0.5f) throw std::invalid_argument("synth: bad noise level");
  if (unknown_train_ratio <= 0 || silence_train_ratio <= 0)
    throw std::invalid_argument("synth: class ratios must be positive");
}

namespace {

// Words share a small tone alphabet; a word is an unordered pair of
// two distinct tones (order is randomized per clip, so only which
// tones occur counts). Word pairs form a cycle over the alphabet, so
// every tone is shared by exactly two words, and the unknown class
// doubles a single tone — a lone tone is therefore ambiguous between
// several classes, while the full pair is unambiguous.
int word_tone_count(int n_words) { return n_words; }

// Distinct tone frequencies inside the band-pass, away from each other.
std::vector<double> tone_table(const SynthSpec& s) {
  const int n = word_tone_count(s.n_word_classes);
  std::vector<double> f(static_cast<size_t>(n));
  const double lo = 0.12 * s.sample_rate, hi = 0.42 * s.sample_rate;
  for (int i = 0; i < n; ++i) f[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return f;
}

// word class c: the c-th edge of the tone cycle
std::pair<int, int> word_pair(int c, int n_words) {
  const int t = word_tone_count(n_words);
  return {c, (c + 1) % t};
}

// unknown: the same tone repeated, like a stuttered out-of-vocabulary
// word. Any short window of it shows only that tone, so oversampling
// unknown in training makes it the dominant source of lone-tone
// views, while the repeated total duration keeps the canonical clip
// distinguishable from any word.
int unknown_tone(int n_words, Rng& rng) {
  return static_cast<int>(rng() % static_cast<uint64_t>(word_tone_count(n_words)));
}

// Renders a faded tone segment; samples falling outside the clip are
// dropped, so events may be cut at the clip edges like real recordings.
void add_tone_burst(std::vector<float>& x, int64_t start, int64_t len, double freq, double amp,
                    int sr) {
  const int64_t ramp = std::min<int64_t>(len / 4, sr / 100);  // 10 ms fade
  const auto n = static_cast<int64_t>(x.size());
  for (int64_t i = 0; i < len; ++i) {
    const int64_t t = start + i;
    if (t < 0 || t >= n) continue;
    double env = 1.0;
    if (i < ramp) env = 0.5 - 0.5 * std::cos(M_PI * i / ramp);
    if (i >= len - ramp) env = 0.5 - 0.5 * std::cos(M_PI * (len - 1 - i) / ramp);
    x[static_cast<size_t>(t)] +=
        static_cast<float>(amp * env * std::sin(2.0 * M_PI * freq * i / sr));
  }
}

// Localized gaussian noise events over an otherwise silent background.
// Zero-padding a crop then looks like any other quiet stretch, so a
// network trained on full clips behaves sensibly on padded crops.
void add_noise_bursts(std::vector<float>& x, const SynthSpec& s, Rng& rng) {
  const auto len = static_cast<int64_t>(x.size());
  std::uniform_int_distribution<int> count(2, 4);
  std::uniform_int_distribution<int64_t> dur(len / 10, len / 4);
  std::normal_distribution<double> noise(0.0, s.noise_level);
  const int n = count(rng);
  for (int b = 0; b < n; ++b) {
    const int64_t d = dur(rng);
    const int64_t start = std::uniform_int_distribution<int64_t>(0, len - d)(rng);
    for (int64_t i = start; i < start + d; ++i)
      x[static_cast<size_t>(i)] += static_cast<float>(noise(rng));
  }
}

// `sloppy` enables the drawled unknown rendition used for training
// clips; held-out clips are canonical renditions only.
Waveform make_clip(const SynthSpec& s, int label, Rng& rng, bool sloppy) {
  const int64_t clip_len = static_cast<int64_t>(s.clip_ms) * s.sample_rate / 1000;
  const int64_t utt_len = static_cast<int64_t>(s.utterance_ms) * s.sample_rate / 1000;
  std::vector<float> x(static_cast<size_t>(clip_len));

  const bool silence = label == s.n_word_classes;  // class order: words, silence, unknown
  const bool unknown = label > s.n_word_classes;
  // Silence recordings always carry ambient noise; word and unknown
  // recordings are usually clean, so quiet zero stretches (as produced
  // by zero-padding a crop) stay in-distribution.
  if (silence || rng() % 10 < 3) add_noise_bursts(x, s, rng);
  if (!silence) {
    const auto tones = tone_table(s);
    std::uniform_real_distribution<double> jitter(0.98, 1.02);
    std::uniform_real_distribution<double> ampj(0.9, 1.1);
    std::uniform_int_distribution<int64_t> seg_dur(17 * utt_len / 20, 23 * utt_len / 20);
    auto render = [&](int tone, int64_t at, int64_t dur) {
      add_tone_burst(x, at, dur, tones[static_cast<size_t>(tone)] * jitter(rng),
                     s.tone_level * ampj(rng), s.sample_rate);
    };

    std::pair<int, int> pr;
    // Out-of-vocabulary renditions: canonically a stutter of the same
    // tone three times, one per third of the clip; sloppy training
    // recordings are sometimes a lone tone — a fragment belonging to
    // no word.
    int kind = unknown ? 0 : -1;  // -1 word, 0 stutter, 1 lone
    if (unknown) {
      const int t = unknown_tone(s.n_word_classes, rng);
      pr = {t, t};
      if (sloppy && rng() % 10 < 3) kind = 1;
    } else {
      pr = word_pair(label, s.n_word_classes);
      if (rng() % 2) std::swap(pr.first, pr.second);
    }

    // Some recordings catch the event only partially: all but one segment
    // fall off the clip edge, leaving a lone tone — the same view cropping
    // produces, with naturally conflicting labels.
    const int partial_pct = unknown ? 15 : 3;
    if (static_cast<int>(rng() % 100) < partial_pct) {
      const int64_t d = seg_dur(rng);
      const int64_t cut = static_cast<int64_t>(rng() % static_cast<uint64_t>(d / 2 + 1));
      if (rng() % 2)
        render(pr.second, -cut, d);  // head clipped at the left edge
      else
        render(pr.first, clip_len - d + cut, d);  // tail clipped at the right edge
    } else if (kind == 0 || kind == 1) {
      // stuttered or lone rendition: same-tone segments, one per third
      const int n_seg = kind == 1 ? 1 : 3;
      int thirds[3] = {0, 1, 2};
      for (int k = 2; k > 0; --k) {
        const int j = static_cast<int>(rng() % static_cast<uint64_t>(k + 1));
        std::swap(thirds[k], thirds[j]);
      }
      std::sort(thirds, thirds + n_seg);
      for (int k = 0; k < n_seg; ++k) {
        const int64_t d = seg_dur(rng);
        const int64_t lo = thirds[k] * clip_len / 3 + clip_len / 30;
        const int64_t hi = (thirds[k] + 1) * clip_len / 3 - clip_len / 30 - d;
        render(pr.first, std::uniform_int_distribution<int64_t>(lo, std::max(lo, hi))(rng), d);
      }
    } else if (sloppy && static_cast<int>(rng() % 100) < 70) {
      // drawled word rendition: the first tone sits center-left, the
      // second near the right edge, more than a half clip downstream —
      // no half-length window of a drawled word ever shows both tones
      const int64_t d0 = seg_dur(rng), d1 = seg_dur(rng);
      const int64_t s1 = std::uniform_int_distribution<int64_t>(
          clip_len / 4, std::max(clip_len / 4, 5 * clip_len / 12 - d0))(rng);
      const int64_t s2 = std::uniform_int_distribution<int64_t>(
          4 * clip_len / 5, std::max(4 * clip_len / 5, 9 * clip_len / 10 - d1))(rng);
      render(pr.first, s1, d0);
      render(pr.second, s2, d1);
    } else {
      // canonical word: two tone segments separated by a gap wider than
      // a sixth of the clip, with the whole event inside the central
      // half: the first segment ends before 5/12 of the clip and the
      // second starts after 7/12, so a window near either edge sees
      // exactly one tone while a window over the center sees both
      std::uniform_int_distribution<int64_t> gap_dur(8 * utt_len / 5, 7 * utt_len / 4);
      const int64_t d0 = seg_dur(rng), d1 = seg_dur(rng), gap = gap_dur(rng);
      const int64_t lo = std::max(clip_len / 4, 7 * clip_len / 12 - d0 - gap);
      const int64_t hi = std::min(5 * clip_len / 12 - d0, 3 * clip_len / 4 - (d0 + gap + d1));
      const int64_t start = std::uniform_int_distribution<int64_t>(lo, std::max(lo, hi))(rng);
      render(pr.first, start, d0);
      render(pr.second, start + d0 + gap, d1);
    }
  }

  Waveform w;
  w.sample_rate = s.sample_rate;
  w.samples = std::move(x);
  for (auto& v : w.samples) v = std::clamp(v, -1.f, 1.f);
  return w;
}

void fill_split(const SynthSpec& s, Dataset& d, int per_class, uint64_t split_tag) {
  for (int label = 0; label < s.n_classes(); ++label) {
    int n = per_class;
    if (split_tag == 0) {  // training mix is imbalanced like field data
      if (label == s.n_word_classes)
        n = std::max(1, static_cast<int>(std::lround(per_class * s.silence_train_ratio)));
      else if (label > s.n_word_classes)
        n = std::max(1, static_cast<int>(std::lround(per_class * s.unknown_train_ratio)));
    }
    for (int i = 0; i < n; ++i) {
      Rng rng = make_rng(mix_seed(s.seed, split_tag), static_cast<uint64_t>(label),
                         static_cast<uint64_t>(i));
      LabeledSample sample;
      sample.waveform = make_clip(s, label, rng, /*sloppy=*/split_tag == 0);
      sample.label = label;
      sample.id = d.label_names[static_cast<size_t>(label)] + "_" + std::to_string(i) +
                  (split_tag ? "_test" : "_train");
      d.samples.push_back(std::move(sample));
    }
  }
}

}  // namespace

SynthSplits synth_generate(const SynthSpec& spec) {
  spec.validate();
  SynthSplits out;
  std::vector<std::string> names;
  for (int i = 0; i < spec.n_word_classes; ++i) names.push_back("word" + std::to_string(i));
  names.push_back("silence");
  names.push_back("unknown");
  out.train.label_names = out.test.label_names = names;
  out.train.sample_rate = out.test.sample_rate = spec.sample_rate;
  fill_split(spec, out.train, spec.n_train_per_class, 0);
  fill_split(spec, out.test, spec.n_test_per_class, 1);
  return out;
}

}  // namespace pld
