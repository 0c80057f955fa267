// SPDX-License-Identifier: Apache-2.0
//
// pld — progressive label distillation toolkit CLI.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pld/chain.hpp"
#include "pld/ingest.hpp"
#include "pld/io.hpp"
#include "pld/kernels.hpp"
#include "pld/synth.hpp"

namespace fs = std::filesystem;
using namespace pld;

namespace {

struct SplitData {
  Dataset train, test;
};

// Accepts either a synth-style root (train/ and test/ subdirectories)
// or a single dataset directory split by hash / official lists. The
// band-pass is applied here, once, to the full-length sources.
SplitData load_splits(const std::string& root, uint64_t seed) {
  SplitData out;
  if (fs::is_directory(fs::path(root) / "train") && fs::is_directory(fs::path(root) / "test")) {
    IngestOptions opt;
    opt.seed = seed;
    opt.clip_ms = 0;  // pre-split datasets keep their native clip length
    out.train = std::move(ingest_generic((fs::path(root) / "train").string(), opt).train);
    auto t = ingest_generic((fs::path(root) / "test").string(), opt);
    // the synth writer tags ids with their split; everything lands in one bucket
    for (auto* d : {&t.train, &t.validation, &t.test})
      for (auto& s : d->samples) out.test.samples.push_back(std::move(s));
    out.test.label_names = t.train.label_names;
    out.test.sample_rate = t.train.sample_rate;
  } else {
    IngestOptions opt;
    opt.seed = seed;
    auto splits = ingest(root, opt);
    out.train = std::move(splits.train);
    out.test = std::move(splits.test);
  }
  apply_bandpass(out.train);
  apply_bandpass(out.test);
  return out;
}

void freeze_config(CLI::App* cmd, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / "config.resolved");
  f << cmd->config_to_str(true, false);
}

void add_training_flags(CLI::App* cmd, TrainingConfig& cfg) {
  cmd->add_option("--batch-size", cfg.batch_size, "SGD batch size");
  cmd->add_option("--epochs", cfg.epochs, "training epochs");
  cmd->add_option("--lr", cfg.lr, "initial learning rate");
  cmd->add_option("--lr-boundary1", cfg.lr_boundary1, "iteration of the first lr/10 drop");
  cmd->add_option("--lr-boundary2", cfg.lr_boundary2, "iteration of the second lr/10 drop");
  cmd->add_flag("--exp-decay", cfg.exp_decay, "also apply exponential decay (0.9 per 1000 iters)");
  cmd->add_option("--momentum", cfg.momentum, "SGD momentum");
  cmd->add_option("--weight-decay", cfg.weight_decay, "L2 weight decay");
  cmd->add_option("--crops", cfg.crops_per_source, "random crops per source per epoch");
  cmd->add_flag("--freeze-crops", cfg.freeze_crops, "reuse epoch-0 crops instead of resampling");
  cmd->add_option("--max-iters", cfg.max_iters, "cap total iterations (0 = unlimited)");
}

void add_network_flags(CLI::App* cmd, NetworkSpec& spec) {
  cmd->add_option("--channels", spec.n_channels, "conv channels");
  cmd->add_option("--res-blocks", spec.n_res_blocks, "residual blocks");
  cmd->add_option("--final-dilation", spec.final_dilation, "dilation of the last conv");
}

void write_eval_outputs(Network& net, const Dataset& test, const std::string& out_dir,
                        const std::string& stem) {
  const EvalReport r = evaluate(net, test);
  std::ofstream(fs::path(out_dir) / (stem + "_eval.json")) << report_json(r, net.label_names);
  std::cout << stem << ": " << report_table(r, net.label_names);
}

std::vector<int> parse_dims(const std::string& s) {
  std::vector<int> dims;
  if (s.find("..") != std::string::npos) {
    const auto parts = split(s, '.');
    const int lo = std::stoi(parts.front()), hi = std::stoi(parts.back());
    for (int d = std::min(lo, hi); d <= std::max(lo, hi); d += 100) dims.push_back(d);
  } else {
    for (const auto& t : split(s, ',')) dims.push_back(std::stoi(t));
  }
  return dims;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::init();
  CLI::App app{"progressive label distillation toolkit for keyword spotting"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_config("--config", "", "flat key=value config file");
  uint64_t seed = 1;
  app.add_option("--seed", seed, "global seed")->configurable(true);

  // ---- synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic keyword dataset");
  SynthSpec synth_spec;
  std::string synth_out;
  synth->add_option("--classes", synth_spec.n_word_classes, "word classes (plus silence/unknown)");
  synth->add_option("--clip-ms", synth_spec.clip_ms, "clip length");
  synth->add_option("--utterance-ms", synth_spec.utterance_ms, "utterance length");
  synth->add_option("--rate", synth_spec.sample_rate, "sample rate");
  synth->add_option("--train-per-class", synth_spec.n_train_per_class, "training clips per class");
  synth->add_option("--test-per-class", synth_spec.n_test_per_class, "test clips per class");
  synth->add_option("--noise", synth_spec.noise_level, "background noise RMS");
  synth->add_option("--tone-level", synth_spec.tone_level, "edge tone amplitude");
  synth->add_option("--out", synth_out, "output directory")->required();

  // ---- flops
  auto* flops = app.add_subcommand("flops", "FLOPs table for input-efficient networks");
  std::string flops_dims = "500..1000", flops_out;
  NetworkSpec flops_spec;
  flops->add_option("--dims", flops_dims, "input lengths, e.g. 500..1000 or 500,800,1000");
  flops->add_option("--out", flops_out, "CSV output path (default stdout)");
  add_network_flags(flops, flops_spec);

  // ---- train-teacher
  auto* tt = app.add_subcommand("train-teacher", "train a network on ground-truth labels");
  std::string tt_data, tt_out;
  int tt_input_ms = 1000, tt_crop_ms = 0;
  NetworkSpec tt_spec;
  TrainingConfig tt_cfg;
  tt->add_option("--data", tt_data, "dataset directory")->required();
  tt->add_option("--out", tt_out, "output directory")->required();
  tt->add_option("--input-ms", tt_input_ms, "network input length");
  tt->add_option("--crop-ms", tt_crop_ms,
                 "train on raw-label random crops of this length (no distillation baseline)");
  add_network_flags(tt, tt_spec);
  add_training_flags(tt, tt_cfg);

  // ---- distill
  auto* ds = app.add_subcommand("distill", "direct label distillation to shorter inputs");
  std::string ds_teacher, ds_data, ds_out, ds_mode = "soft", ds_tgt;
  bool ds_dataset_only = false;
  TrainingConfig ds_cfg;
  ds->add_option("--teacher", ds_teacher, "teacher checkpoint")->required();
  ds->add_option("--data", ds_data, "source dataset directory")->required();
  ds->add_option("--tgt-ms", ds_tgt, "target length(s), e.g. 500 or 500,600,700")->required();
  ds->add_option("--mode", ds_mode, "label mode: soft, hard, or both");
  ds->add_option("--out", ds_out, "output directory")->required();
  ds->add_flag("--dataset-only", ds_dataset_only, "emit the distilled dataset, skip training");
  add_training_flags(ds, ds_cfg);

  // ---- chain
  auto* ch = app.add_subcommand("chain", "progressive label distillation over a dim sequence");
  std::string ch_data, ch_out, ch_dims = "1000,800,500", ch_mode = "soft";
  bool ch_resume = false, ch_sweep = false;
  ChainSpec ch_spec;
  ch->add_option("--data", ch_data, "dataset directory")->required();
  ch->add_option("--dims", ch_dims, "decreasing input lengths, e.g. 1000,800,500");
  ch->add_option("--mode", ch_mode, "label mode: soft or hard");
  ch->add_option("--out", ch_out, "output directory")->required();
  ch->add_flag("--resume", ch_resume, "reuse existing step checkpoints");
  ch->add_flag("--sweep", ch_sweep, "run every chain over the given dim grid");
  add_network_flags(ch, ch_spec.network);
  add_training_flags(ch, ch_spec.training);

  // ---- eval
  auto* ev = app.add_subcommand("eval", "three-crop evaluation of a checkpoint");
  std::string ev_net, ev_data, ev_json, ev_csv;
  bool ev_random = false;
  ev->add_option("--net", ev_net, "checkpoint path")->required();
  ev->add_option("--data", ev_data, "test dataset directory")->required();
  ev->add_option("--json", ev_json, "write report JSON here");
  ev->add_option("--csv", ev_csv, "write a dim,accuracy CSV row here");
  ev->add_flag("--random-offsets", ev_random, "random crop offsets instead of the fixed rule");

  // ---- mfcc
  auto* mf = app.add_subcommand("mfcc", "dump MFCC features of a WAV file");
  std::string mf_wav, mf_out;
  mf->add_option("--wav", mf_wav, "input WAV")->required();
  mf->add_option("--out", mf_out, "output .mfcc file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      synth_spec.seed = seed;
      const auto splits = synth_generate(synth_spec);
      write_dataset(splits.train, (fs::path(synth_out) / "train").string());
      write_dataset(splits.test, (fs::path(synth_out) / "test").string());
      freeze_config(synth, synth_out);
      std::cout << "wrote " << splits.train.samples.size() << " train / "
                << splits.test.samples.size() << " test clips to " << synth_out << "\n";
    } else if (*flops) {
      std::ostringstream csv;
      csv << "model,conv,add,pool,total,factor\n";
      for (int d : parse_dims(flops_dims)) {
        NetworkSpec s = flops_spec;
        s.input_ms = d;
        const FlopsReport r = count_flops(s);
        csv << "C" << d << "," << r.conv << "," << r.add << "," << r.pool << "," << r.total << ","
            << r.factor << "\n";
      }
      if (flops_out.empty())
        std::cout << csv.str();
      else
        std::ofstream(flops_out) << csv.str();
    } else if (*tt) {
      auto data = load_splits(tt_data, seed);
      tt_spec.n_classes = data.train.n_classes();
      tt_cfg.seed = seed;
      fs::create_directories(tt_out);
      tt_cfg.log_path = (fs::path(tt_out) / "train.jsonl").string();
      Network net;
      if (tt_crop_ms > 0) {
        tt_spec.input_ms = static_cast<int>(std::llround(data.train.samples[0].waveform.duration_ms()));
        net = train_direct_crops(data.train, tt_spec, tt_crop_ms, tt_cfg);
      } else {
        tt_spec.input_ms = tt_input_ms;
        net = train_teacher(data.train, tt_spec, tt_cfg);
      }
      save_checkpoint((fs::path(tt_out) / "teacher.ckpt").string(), net);
      freeze_config(tt, tt_out);
      write_eval_outputs(net, data.test, tt_out, "teacher");
    } else if (*ds) {
      auto data = load_splits(ds_data, seed);
      Network teacher = load_checkpoint(ds_teacher);
      ds_cfg.seed = seed;
      fs::create_directories(ds_out);
      freeze_config(ds, ds_out);
      const auto targets = parse_dims(ds_tgt);
      const std::vector<std::string> modes =
          ds_mode == "both" ? std::vector<std::string>{"soft", "hard"}
                            : std::vector<std::string>{ds_mode};
      std::ofstream table((fs::path(ds_out) / "accuracy.csv"));
      table << "tgt_ms";
      for (const auto& m : modes) table << "," << m;
      table << "\n";
      std::map<int, std::map<std::string, double>> acc;
      for (int tgt : targets) {
        for (const auto& m : modes) {
          const LabelMode mode = parse_label_mode(m);
          if (ds_dataset_only) {
            DistilledDataset dd = build_distilled_dataset(teacher, data.train, tgt,
                                                          ds_cfg.crops_per_source, mode, seed);
            dd.teacher_checksum = fnv1a64_file(ds_teacher);
            save_distilled_dataset(dd, (fs::path(ds_out) / ("d" + std::to_string(tgt) + "_" + m))
                                           .string());
            continue;
          }
          const std::string stem = "d" + std::to_string(tgt) + "_" + m;
          ds_cfg.log_path = (fs::path(ds_out) / (stem + "_train.jsonl")).string();
          Network student = distill_step(teacher, data.train, tgt, ds_cfg, mode);
          save_checkpoint((fs::path(ds_out) / (stem + ".ckpt")).string(), student);
          write_eval_outputs(student, data.test, ds_out, stem);
          acc[tgt][m] = evaluate(student, data.test).accuracy;
        }
        if (!ds_dataset_only) {
          table << tgt;
          for (const auto& m : modes) table << "," << acc[tgt][m];
          table << "\n";
        }
      }
      if (modes.size() == 2 && !ds_dataset_only) {
        std::ofstream fig((fs::path(ds_out) / "soft_hard_diff.csv"));
        fig << "tgt_ms,soft_minus_hard\n";
        for (int tgt : targets) fig << tgt << "," << acc[tgt]["soft"] - acc[tgt]["hard"] << "\n";
      }
    } else if (*ch) {
      auto data = load_splits(ch_data, seed);
      ch_spec.network.n_classes = data.train.n_classes();
      ch_spec.mode = parse_label_mode(ch_mode);
      ch_spec.training.seed = seed;
      const auto dims = parse_dims(ch_dims);
      fs::create_directories(ch_out);
      freeze_config(ch, ch_out);
      if (!ch_sweep) {
        ch_spec.dims_ms = dims;
        const ChainResult r =
            run_chain(ch_spec, data.train, data.test, ch_out, ch_resume);
        std::cout << "chain results in " << ch_out << "/results.csv\n";
        for (size_t i = 0; i < r.steps.size(); ++i)
          std::cout << "  step " << i << " C" << r.steps[i].dim_ms << " accuracy "
                    << r.steps[i].test_accuracy * 100.0 << "%\n";
      } else {
        // every strictly decreasing chain from dims.front() to
        // dims.back() over the given grid
        std::vector<int> mids(dims.begin() + 1, dims.end() - 1);
        std::ofstream sweep_csv(fs::path(ch_out) / "sweep.csv");
        sweep_csv << "steps,dims,final_accuracy\n";
        std::ofstream fig(fs::path(ch_out) / "steps_vs_accuracy.csv");
        fig << "steps,final_accuracy\n";
        for (uint32_t mask = 0; mask < (1u << mids.size()); ++mask) {
          ChainSpec cs = ch_spec;
          cs.dims_ms = {dims.front()};
          for (size_t i = 0; i < mids.size(); ++i)
            if (mask & (1u << i)) cs.dims_ms.push_back(mids[i]);
          cs.dims_ms.push_back(dims.back());
          std::string tag;
          for (int d : cs.dims_ms) tag += (tag.empty() ? "" : "-") + std::to_string(d);
          const ChainResult r = run_chain(cs, data.train, data.test,
                                          (fs::path(ch_out) / ("chain_" + tag)).string(), true);
          sweep_csv << cs.dims_ms.size() - 1 << "," << tag << ","
                    << r.steps.back().test_accuracy << "\n";
          fig << cs.dims_ms.size() - 1 << "," << r.steps.back().test_accuracy << "\n";
        }
        std::cout << "sweep results in " << ch_out << "/sweep.csv\n";
      }
    } else if (*ev) {
      auto data = load_splits(ev_data, seed);
      Network net = load_checkpoint(ev_net);
      EvalOptions opt;
      opt.random_offsets = ev_random;
      opt.seed = seed;
      const EvalReport r = evaluate(net, data.test.samples.empty() ? data.train : data.test, opt);
      std::cout << report_table(r, net.label_names);
      if (!ev_json.empty()) std::ofstream(ev_json) << report_json(r, net.label_names);
      if (!ev_csv.empty())
        std::ofstream(ev_csv) << "dim_ms,accuracy\nC" << net.spec.input_ms << "," << r.accuracy
                              << "\n";
    } else if (*mf) {
      write_mfcc(mf_out, mfcc(load_wav(mf_wav)));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
