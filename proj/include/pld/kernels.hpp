// SPDX-License-Identifier: Apache-2.0
//
// Dense NCHW kernels used by the autograd layer. Convolutions run as
// im2col + BLAS gemm, parallelized over the batch with OpenMP. The
// serial nested-loop versions live in reference.hpp and are kept as the
// oracle for these kernels.
#pragma once

#include <cblas.h>
#include <omp.h>

#include "pld/tensor.hpp"

namespace pld::kernels {

// BLAS threading is pinned to one thread; parallelism happens at the
// batch level so results do not depend on the BLAS partitioning.
void init();

template <typename T>
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
                 const T* b, int ldb, T beta, T* c, int ldc) {
  if constexpr (std::is_same_v<T, float>) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  } else {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  }
}

struct ConvGeom {
  int c_in, h, w;      // input plane
  int kh, kw;          // kernel
  int dh, dw;          // dilation
  int pad_h, pad_w;    // symmetric zero padding ("same" for odd kernels)

  static ConvGeom same(int c_in, int h, int w, int kh, int kw, int dh, int dw) {
    ConvGeom g{c_in, h, w, kh, kw, dh, dw, 0, 0};
    g.pad_h = (kh - 1) * dh / 2;
    g.pad_w = (kw - 1) * dw / 2;
    return g;
  }
  int cols_rows() const { return c_in * kh * kw; }
  int cols_cols() const { return h * w; }
};

// One sample: input [C,H,W] -> cols [C*kh*kw, H*W], zero outside bounds.
template <typename T>
void im2col(const ConvGeom& g, const T* in, T* cols) {
  const int hw = g.h * g.w;
  for (int c = 0; c < g.c_in; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        T* row = cols + (static_cast<int64_t>(c) * g.kh * g.kw + ky * g.kw + kx) * hw;
        const int oy = ky * g.dh - g.pad_h;
        const int ox = kx * g.dw - g.pad_w;
        for (int y = 0; y < g.h; ++y) {
          const int sy = y + oy;
          T* dst = row + y * g.w;
          if (sy < 0 || sy >= g.h) {
            std::fill(dst, dst + g.w, T(0));
            continue;
          }
          const T* src = in + (static_cast<int64_t>(c) * g.h + sy) * g.w;
          for (int x = 0; x < g.w; ++x) {
            const int sx = x + ox;
            dst[x] = (sx >= 0 && sx < g.w) ? src[sx] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-add of cols back onto the input plane (adjoint of im2col).
template <typename T>
void col2im(const ConvGeom& g, const T* cols, T* in) {
  const int hw = g.h * g.w;
  for (int c = 0; c < g.c_in; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* row = cols + (static_cast<int64_t>(c) * g.kh * g.kw + ky * g.kw + kx) * hw;
        const int oy = ky * g.dh - g.pad_h;
        const int ox = kx * g.dw - g.pad_w;
        for (int y = 0; y < g.h; ++y) {
          const int sy = y + oy;
          if (sy < 0 || sy >= g.h) continue;
          T* dst = in + (static_cast<int64_t>(c) * g.h + sy) * g.w;
          const T* src = row + y * g.w;
          for (int x = 0; x < g.w; ++x) {
            const int sx = x + ox;
            if (sx >= 0 && sx < g.w) dst[sx] += src[x];
          }
        }
      }
    }
  }
}

/// Bias-free dilated 2-D cross-correlation, "same" padding, stride 1.
/// input [N,Cin,H,W], weight [Cout,Cin,kh,kw] -> [N,Cout,H,W].
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& weight, int dh, int dw) {
  const int n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int c_out = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != c_in) throw std::invalid_argument("conv2d: channel mismatch");
  if (dh < 1 || dw < 1) throw std::invalid_argument("conv2d: dilation must be >= 1");
  if (kh % 2 == 0 || kw % 2 == 0) throw std::invalid_argument("conv2d: even kernels unsupported");
  const ConvGeom g = ConvGeom::same(c_in, h, w, kh, kw, dh, dw);

  TensorT<T> out({n, c_out, h, w});
  const int hw = h * w, k = g.cols_rows();
#pragma omp parallel
  {
    std::vector<T> cols(static_cast<size_t>(k) * hw);
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      im2col(g, input.data.data() + static_cast<int64_t>(i) * c_in * hw, cols.data());
      gemm<T>(false, false, c_out, hw, k, T(1), weight.data.data(), k, cols.data(), hw, T(0),
              out.data.data() + static_cast<int64_t>(i) * c_out * hw, hw);
    }
  }
  return out;
}

/// Gradients of conv2d_forward w.r.t. input and weight. The weight
/// gradient is accumulated per thread and reduced in thread order so a
/// fixed thread count gives bit-identical results.
template <typename T>
void conv2d_backward(const TensorT<T>& input, const TensorT<T>& weight, int dh, int dw,
                     const TensorT<T>& grad_out, TensorT<T>* grad_input, TensorT<T>* grad_weight) {
  const int n = input.dim(0), c_in = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int c_out = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const ConvGeom g = ConvGeom::same(c_in, h, w, kh, kw, dh, dw);
  const int hw = h * w, k = g.cols_rows();

  const int max_threads = omp_get_max_threads();
  std::vector<std::vector<T>> dw_partial(static_cast<size_t>(max_threads));

#pragma omp parallel
  {
    std::vector<T> cols(static_cast<size_t>(k) * hw);
    std::vector<T>& dw_local = dw_partial[static_cast<size_t>(omp_get_thread_num())];
    if (grad_weight) dw_local.assign(weight.data.size(), T(0));
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      const T* go = grad_out.data.data() + static_cast<int64_t>(i) * c_out * hw;
      if (grad_weight) {
        im2col(g, input.data.data() + static_cast<int64_t>(i) * c_in * hw, cols.data());
        gemm<T>(false, true, c_out, k, hw, T(1), go, hw, cols.data(), hw, T(1), dw_local.data(), k);
      }
      if (grad_input) {
        gemm<T>(true, false, k, hw, c_out, T(1), weight.data.data(), k, go, hw, T(0), cols.data(),
                hw);
        col2im(g, cols.data(), grad_input->data.data() + static_cast<int64_t>(i) * c_in * hw);
      }
    }
  }
  if (grad_weight) {
    for (const auto& part : dw_partial) {
      if (part.empty()) continue;
      for (size_t j = 0; j < part.size(); ++j) grad_weight->data[j] += part[j];
    }
  }
}

}  // namespace pld::kernels
