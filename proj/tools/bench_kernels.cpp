// SPDX-License-Identifier: Apache-2.0
//
// Compares the OpenMP/BLAS conv kernel against the serial reference on
// model-realistic shapes and checks they agree while timing both.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "pld/kernels.hpp"
#include "pld/reference.hpp"

using pld::Tensor;

namespace {

double seconds(const std::function<void()>& fn, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

Tensor randn(std::vector<int> shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<float> d(0.f, 1.f);
  for (auto& v : t.data) v = d(rng);
  return t;
}

}  // namespace

int main() {
  pld::kernels::init();
  std::mt19937_64 rng(7);

  struct Case {
    int n, c_in, c_out, h, w, k, dil, reps;
  };
  const Case cases[] = {
      {1, 1, 45, 98, 40, 3, 1, 5},   {4, 45, 45, 98, 40, 3, 1, 2},
      {4, 45, 45, 98, 40, 3, 4, 2},  {4, 45, 45, 48, 40, 3, 16, 2},
      {16, 16, 16, 98, 40, 3, 2, 2},
  };

  std::printf("%-28s %12s %12s %8s %10s\n", "shape", "reference_ms", "kernel_ms", "speedup",
              "max_diff");
  for (const auto& c : cases) {
    const Tensor x = randn({c.n, c.c_in, c.h, c.w}, rng);
    const Tensor w = randn({c.c_out, c.c_in, c.k, c.k}, rng);

    Tensor ref, fast;
    const double t_ref = seconds([&] { ref = pld::reference::conv2d(x, w, c.dil, c.dil); }, c.reps);
    const double t_fast =
        seconds([&] { fast = pld::kernels::conv2d_forward(x, w, c.dil, c.dil); }, c.reps * 10);

    float max_diff = 0.f;
    for (size_t i = 0; i < ref.data.size(); ++i)
      max_diff = std::max(max_diff, std::abs(ref.data[i] - fast.data[i]));

    char shape[64];
    std::snprintf(shape, sizeof shape, "n%d c%d->%d %dx%d k%d d%d", c.n, c.c_in, c.c_out, c.h, c.w,
                  c.k, c.dil);
    std::printf("%-28s %12.3f %12.3f %7.1fx %10.2e\n", shape, t_ref * 1e3, t_fast * 1e3,
                t_ref / t_fast, max_diff);
    if (max_diff > 1e-3f) {
      std::fprintf(stderr, "kernel disagrees with reference beyond tolerance\n");
      return 1;
    }
  }
  return 0;
}
