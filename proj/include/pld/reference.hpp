// SPDX-License-Identifier: Apache-2.0
//
// Serial nested-loop reference kernels. Deliberately naive: these are
// the oracle the fast kernels are tested against and the baseline in
// the benchmark tool. Do not "optimize" them.
#pragma once

#include "pld/tensor.hpp"

namespace pld::reference {

/// Dilated cross-correlation with "same" zero padding, stride 1.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, int dh, int dw) {
  const int n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int c_out = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const int pad_h = (kh - 1) * dh / 2;
  const int pad_w = (kw - 1) * dw / 2;
  TensorT<T> out({n, c_out, h, w});
  for (int i = 0; i < n; ++i)
    for (int co = 0; co < c_out; ++co)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          T acc = 0;
          for (int ci = 0; ci < c_in; ++ci)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int sy = y + ky * dh - pad_h;
                const int sx = x + kx * dw - pad_w;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                acc += input.at4(i, ci, sy, sx) * weight.at4(co, ci, ky, kx);
              }
          out.at4(i, co, y, x) = acc;
        }
  return out;
}

}  // namespace pld::reference
