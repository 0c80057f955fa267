// SPDX-License-Identifier: Apache-2.0
#include "pld/kernels.hpp"

extern "C" void openblas_set_num_threads(int);

namespace pld::kernels {

void init() {
  static bool done = false;
  if (!done) {
    openblas_set_num_threads(1);
    done = true;
  }
}

}  // namespace pld::kernels
