// SPDX-License-Identifier: Apache-2.0
#include "pld/chain.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "pld/rng.hpp"

namespace fs = std::filesystem;

namespace pld {

void ChainSpec::validate() const {
  if (dims_ms.empty()) throw std::invalid_argument("chain: dims_ms is empty");
  for (size_t i = 1; i < dims_ms.size(); ++i)
    if (dims_ms[i] >= dims_ms[i - 1])
      throw std::invalid_argument("chain: dims_ms must be strictly decreasing");
  training.validate();
}

ChainResult run_chain(const ChainSpec& spec, const Dataset& train, const Dataset& test,
                      const std::string& out_dir, bool resume) {
  spec.validate();
  if (train.samples.empty()) throw std::invalid_argument("chain: empty training set");
  const double src_ms = train.samples[0].waveform.duration_ms();
  if (std::llround(src_ms) != spec.dims_ms[0])
    throw std::invalid_argument("chain: dataset length " + std::to_string(src_ms) +
                                "ms does not match head dimension " +
                                std::to_string(spec.dims_ms[0]) + "ms");
  fs::create_directories(out_dir);

  ChainResult result;
  Network current;
  for (size_t step = 0; step < spec.dims_ms.size(); ++step) {
    const int dim = spec.dims_ms[step];
    const std::string ckpt =
        (fs::path(out_dir) / ("step" + std::to_string(step) + "_c" + std::to_string(dim) + ".ckpt"))
            .string();

    TrainingConfig cfg = spec.training;
    cfg.seed = mix_seed(spec.training.seed, 0xc4a1, step);
    cfg.log_path =
        (fs::path(out_dir) / ("step" + std::to_string(step) + "_train.jsonl")).string();

    const auto t0 = std::chrono::steady_clock::now();
    Network net;
    if (resume && fs::exists(ckpt)) {
      net = load_checkpoint(ckpt);
    } else {
      if (step == 0) {
        NetworkSpec ns = spec.network;
        ns.input_ms = dim;
        net = train_teacher(train, ns, cfg);
      } else {
        net = distill_step(current, train, dim, cfg, spec.mode);
      }
      save_checkpoint(ckpt, net);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const EvalReport report = evaluate(net, test);
    result.steps.push_back({dim, ckpt, report.accuracy, wall});
    write_chain_csv(result, (fs::path(out_dir) / "results.csv").string());
    current = std::move(net);
  }
  return result;
}

void write_chain_csv(const ChainResult& r, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write results CSV: " + path);
  f << "step,dim_ms,accuracy,checkpoint,wall_s\n";
  for (size_t i = 0; i < r.steps.size(); ++i)
    f << i << "," << r.steps[i].dim_ms << "," << r.steps[i].test_accuracy << ","
      << r.steps[i].checkpoint << "," << r.steps[i].wall_s << "\n";
}

}  // namespace pld
