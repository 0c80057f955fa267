// SPDX-License-Identifier: Apache-2.0
//
// Tape-based reverse-mode autodiff over TensorT. Each op builds a node
// whose closure pushes gradients to its parents; backward() runs the
// tape in reverse topological order. Templated so the same ops run in
// float for training and double for finite-difference checks.
#pragma once

#include <functional>
#include <memory>
#include <unordered_set>

#include "pld/kernels.hpp"
#include "pld/tensor.hpp"

namespace pld {

template <typename T>
struct NodeT {
  TensorT<T> value;
  TensorT<T> grad;
  bool requires_grad = false;
  bool grad_ready = false;
  std::vector<std::shared_ptr<NodeT>> parents;
  std::function<void(NodeT&)> backward_fn;

  void ensure_grad() {
    if (!grad_ready) {
      grad = TensorT<T>(value.shape);
      grad_ready = true;
    }
  }
  void zero_grad() {
    if (grad_ready) grad.fill(T(0));
  }
};

template <typename T>
using VarT = std::shared_ptr<NodeT<T>>;
using Var = VarT<float>;

template <typename T>
VarT<T> make_var(TensorT<T> value, bool requires_grad = false) {
  auto n = std::make_shared<NodeT<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

template <typename T>
VarT<T> make_op(TensorT<T> value, std::vector<VarT<T>> parents,
                std::function<void(NodeT<T>&)> backward_fn) {
  auto n = std::make_shared<NodeT<T>>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backward_fn = std::move(backward_fn);
  return n;
}

/// Reverse pass from a scalar loss. Populates .grad on every node that
/// requires grad and is reachable from the loss.
template <typename T>
void backward(const VarT<T>& loss) {
  if (loss->value.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
  if (!std::isfinite(static_cast<double>(loss->value.data[0])))
    throw std::runtime_error("backward: non-finite loss");

  // iterative post-order topo sort
  std::vector<NodeT<T>*> order;
  std::unordered_set<NodeT<T>*> seen;
  std::vector<std::pair<NodeT<T>*, size_t>> stack{{loss.get(), 0}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      NodeT<T>* p = node->parents[idx++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (NodeT<T>* n : order) {
    n->ensure_grad();
    n->zero_grad();
  }
  loss->grad.data[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT<T>* n = *it;
    if (n->backward_fn) {
      n->backward_fn(*n);
      if (!n->grad.all_finite()) throw std::runtime_error("backward: NaN/Inf gradient");
    }
  }
}

// ---------------------------------------------------------------- ops

template <typename T>
VarT<T> conv2d(const VarT<T>& x, const VarT<T>& w, int dh, int dw) {
  auto y = kernels::conv2d_forward(x->value, w->value, dh, dw);
  return make_op<T>(std::move(y), {x, w}, [dh, dw](NodeT<T>& self) {
    auto& x = self.parents[0];
    auto& w = self.parents[1];
    TensorT<T>*gx = nullptr, *gw = nullptr;
    if (x->requires_grad) {
      x->ensure_grad();
      gx = &x->grad;
    }
    if (w->requires_grad) {
      w->ensure_grad();
      gw = &w->grad;
    }
    kernels::conv2d_backward(x->value, w->value, dh, dw, self.grad, gx, gw);
  });
}

template <typename T>
VarT<T> relu(const VarT<T>& x) {
  TensorT<T> y = x->value;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return make_op<T>(std::move(y), {x}, [](NodeT<T>& self) {
    auto& x = self.parents[0];
    x->ensure_grad();
    const int64_t n = x->value.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
      if (x->value.data[i] > T(0)) x->grad.data[i] += self.grad.data[i];
  });
}

template <typename T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b) {
  if (!a->value.same_shape(b->value)) throw std::invalid_argument("add: shape mismatch");
  TensorT<T> y = a->value;
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] += b->value.data[i];
  return make_op<T>(std::move(y), {a, b}, [](NodeT<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (int64_t i = 0; i < p->grad.numel(); ++i) p->grad.data[i] += self.grad.data[i];
    }
  });
}

/// Per-channel running statistics owned by a BN layer.
template <typename T>
struct BatchNormStats {
  TensorT<T> mean, var;
  explicit BatchNormStats(int channels = 1) : mean({channels}), var({channels}) {
    var.fill(T(1));
  }
};

/// Batch normalization over [N,C,H,W]. Train mode normalizes with batch
/// statistics (biased variance) and updates the running stats in place;
/// eval mode normalizes with the running stats. epsilon 1e-5.
template <typename T>
VarT<T> batch_norm(const VarT<T>& x, const VarT<T>& gamma, const VarT<T>& beta,
                   BatchNormStats<T>& stats, bool train, T momentum = T(0.1)) {
  const T eps = T(1e-5);
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  if (n * h * w == 0) throw std::invalid_argument("batch_norm: empty batch");
  const int64_t m = static_cast<int64_t>(n) * h * w;

  auto mean = std::make_shared<std::vector<T>>(c, T(0));
  auto invstd = std::make_shared<std::vector<T>>(c, T(0));
  if (train) {
    for (int ch = 0; ch < c; ++ch) {
      double s = 0;
      for (int i = 0; i < n; ++i)
        for (int64_t j = 0; j < static_cast<int64_t>(h) * w; ++j)
          s += x->value.data[((static_cast<int64_t>(i) * c + ch) * h * w) + j];
      const double mu = s / static_cast<double>(m);
      double v = 0;
      for (int i = 0; i < n; ++i)
        for (int64_t j = 0; j < static_cast<int64_t>(h) * w; ++j) {
          const double d = x->value.data[((static_cast<int64_t>(i) * c + ch) * h * w) + j] - mu;
          v += d * d;
        }
      const double var = v / static_cast<double>(m);
      (*mean)[ch] = static_cast<T>(mu);
      (*invstd)[ch] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      stats.mean.data[ch] = (T(1) - momentum) * stats.mean.data[ch] + momentum * static_cast<T>(mu);
      stats.var.data[ch] = (T(1) - momentum) * stats.var.data[ch] + momentum * static_cast<T>(var);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      (*mean)[ch] = stats.mean.data[ch];
      (*invstd)[ch] = T(1) / std::sqrt(stats.var.data[ch] + eps);
    }
  }

  auto xhat = std::make_shared<TensorT<T>>(x->value.shape);
  TensorT<T> y(x->value.shape);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const int64_t base = (static_cast<int64_t>(i) * c + ch) * h * w;
      for (int64_t j = 0; j < static_cast<int64_t>(h) * w; ++j) {
        const T xh = (x->value.data[base + j] - (*mean)[ch]) * (*invstd)[ch];
        xhat->data[base + j] = xh;
        y.data[base + j] = gamma->value.data[ch] * xh + beta->value.data[ch];
      }
    }

  return make_op<T>(std::move(y), {x, gamma, beta},
                    [mean, invstd, xhat, train, n, c, h, w, m](NodeT<T>& self) {
    auto& x = self.parents[0];
    auto& gamma = self.parents[1];
    auto& beta = self.parents[2];
    std::vector<T> dgamma(c, T(0)), dbeta(c, T(0));
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        const int64_t base = (static_cast<int64_t>(i) * c + ch) * h * w;
        for (int64_t j = 0; j < static_cast<int64_t>(h) * w; ++j) {
          dgamma[ch] += self.grad.data[base + j] * xhat->data[base + j];
          dbeta[ch] += self.grad.data[base + j];
        }
      }
    if (gamma->requires_grad) {
      gamma->ensure_grad();
      for (int ch = 0; ch < c; ++ch) gamma->grad.data[ch] += dgamma[ch];
    }
    if (beta->requires_grad) {
      beta->ensure_grad();
      for (int ch = 0; ch < c; ++ch) beta->grad.data[ch] += dbeta[ch];
    }
    if (!x->requires_grad) return;
    x->ensure_grad();
    if (train) {
      const T inv_m = T(1) / static_cast<T>(m);
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
          const int64_t base = (static_cast<int64_t>(i) * c + ch) * h * w;
          const T g = gamma->value.data[ch] * (*invstd)[ch];
          for (int64_t j = 0; j < static_cast<int64_t>(h) * w; ++j)
            x->grad.data[base + j] +=
                g * (self.grad.data[base + j] -
                     inv_m * (dbeta[ch] + xhat->data[base + j] * dgamma[ch]));
        }
    } else {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i)
        for (int ch = 0; ch < c; ++ch) {
          const int64_t base = (static_cast<int64_t>(i) * c + ch) * h * w;
          const T g = gamma->value.data[ch] * (*invstd)[ch];
          for (int64_t j = 0; j < static_cast<int64_t>(h) * w; ++j)
            x->grad.data[base + j] += g * self.grad.data[base + j];
        }
    }
  });
}

/// [N,C,H,W] -> [N,C] per-channel spatial mean.
template <typename T>
VarT<T> global_avg_pool(const VarT<T>& x) {
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  const int64_t hw = static_cast<int64_t>(h) * w;
  TensorT<T> y({n, c});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      double s = 0;
      const int64_t base = (static_cast<int64_t>(i) * c + ch) * hw;
      for (int64_t j = 0; j < hw; ++j) s += x->value.data[base + j];
      y.at2(i, ch) = static_cast<T>(s / static_cast<double>(hw));
    }
  return make_op<T>(std::move(y), {x}, [n, c, hw](NodeT<T>& self) {
    auto& x = self.parents[0];
    x->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int ch = 0; ch < c; ++ch) {
        const T g = self.grad.at2(i, ch) / static_cast<T>(hw);
        const int64_t base = (static_cast<int64_t>(i) * c + ch) * hw;
        for (int64_t j = 0; j < hw; ++j) x->grad.data[base + j] += g;
      }
  });
}

/// y = x W^T + b for x [N,F], W [O,F], b [O].
template <typename T>
VarT<T> linear(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
  const int n = x->value.dim(0), f = x->value.dim(1), o = w->value.dim(0);
  if (w->value.dim(1) != f || b->value.dim(0) != o)
    throw std::invalid_argument("linear: shape mismatch");
  TensorT<T> y({n, o});
  kernels::gemm<T>(false, true, n, o, f, T(1), x->value.data.data(), f, w->value.data.data(), f,
                   T(0), y.data.data(), o);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < o; ++j) y.at2(i, j) += b->value.data[j];
  return make_op<T>(std::move(y), {x, w, b}, [n, f, o](NodeT<T>& self) {
    auto& x = self.parents[0];
    auto& w = self.parents[1];
    auto& b = self.parents[2];
    if (x->requires_grad) {
      x->ensure_grad();
      kernels::gemm<T>(false, false, n, f, o, T(1), self.grad.data.data(), o,
                       w->value.data.data(), f, T(1), x->grad.data.data(), f);
    }
    if (w->requires_grad) {
      w->ensure_grad();
      kernels::gemm<T>(true, false, o, f, n, T(1), self.grad.data.data(), o,
                       x->value.data.data(), f, T(1), w->grad.data.data(), f);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < o; ++j) b->grad.data[j] += self.grad.at2(i, j);
    }
  });
}

/// Row-wise softmax with max subtraction, [N,C] -> [N,C].
template <typename T>
VarT<T> softmax(const VarT<T>& x) {
  const int n = x->value.dim(0), c = x->value.dim(1);
  TensorT<T> y({n, c});
  for (int i = 0; i < n; ++i) {
    T mx = x->value.at2(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, x->value.at2(i, j));
    double sum = 0;
    for (int j = 0; j < c; ++j) {
      const double e = std::exp(static_cast<double>(x->value.at2(i, j) - mx));
      y.at2(i, j) = static_cast<T>(e);
      sum += e;
    }
    for (int j = 0; j < c; ++j) y.at2(i, j) = static_cast<T>(y.at2(i, j) / sum);
  }
  return make_op<T>(std::move(y), {x}, [n, c](NodeT<T>& self) {
    auto& x = self.parents[0];
    x->ensure_grad();
    for (int i = 0; i < n; ++i) {
      double dot = 0;
      for (int j = 0; j < c; ++j)
        dot += static_cast<double>(self.grad.at2(i, j)) * self.value.at2(i, j);
      for (int j = 0; j < c; ++j)
        x->grad.at2(i, j) +=
            self.value.at2(i, j) * (self.grad.at2(i, j) - static_cast<T>(dot));
    }
  });
}

inline constexpr double kLogClamp = 1e-12;

/// Mean over the batch of -sum_c target_c log(pred_c), log clamped at
/// 1e-12. target is a fixed [N,C] distribution (one-hot or soft).
template <typename T>
VarT<T> cross_entropy(const VarT<T>& pred, const TensorT<T>& target) {
  if (!pred->value.same_shape(target)) throw std::invalid_argument("cross_entropy: shape mismatch");
  const int n = pred->value.dim(0), c = pred->value.dim(1);
  double loss = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      const double t = target.at2(i, j);
      if (t == 0) continue;
      loss -= t * std::log(std::max(static_cast<double>(pred->value.at2(i, j)), kLogClamp));
    }
  TensorT<T> y({1});
  y.data[0] = static_cast<T>(loss / n);
  auto tgt = std::make_shared<TensorT<T>>(target);
  return make_op<T>(std::move(y), {pred}, [tgt, n, c](NodeT<T>& self) {
    auto& pred = self.parents[0];
    pred->ensure_grad();
    const T g = self.grad.data[0] / static_cast<T>(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const T t = tgt->at2(i, j);
        const T p = pred->value.at2(i, j);
        if (t != T(0) && static_cast<double>(p) > kLogClamp) pred->grad.at2(i, j) -= g * t / p;
      }
  });
}

/// Mean over the batch of sum_c teacher_c log(teacher_c / student_c);
/// zero-teacher terms contribute nothing.
template <typename T>
VarT<T> kl_divergence(const VarT<T>& student, const TensorT<T>& teacher) {
  if (!student->value.same_shape(teacher))
    throw std::invalid_argument("kl_divergence: shape mismatch");
  const int n = student->value.dim(0), c = student->value.dim(1);
  double loss = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      const double t = teacher.at2(i, j);
      if (t <= 0) continue;
      loss += t * (std::log(t) -
                   std::log(std::max(static_cast<double>(student->value.at2(i, j)), kLogClamp)));
    }
  TensorT<T> y({1});
  y.data[0] = static_cast<T>(loss / n);
  auto tch = std::make_shared<TensorT<T>>(teacher);
  return make_op<T>(std::move(y), {student}, [tch, n, c](NodeT<T>& self) {
    auto& s = self.parents[0];
    s->ensure_grad();
    const T g = self.grad.data[0] / static_cast<T>(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const T t = tch->at2(i, j);
        const T p = s->value.at2(i, j);
        if (t > T(0) && static_cast<double>(p) > kLogClamp) s->grad.at2(i, j) -= g * t / p;
      }
  });
}

/// Scalar sum of all elements (mostly for tests).
template <typename T>
VarT<T> sum(const VarT<T>& x) {
  double s = 0;
  for (T v : x->value.data) s += v;
  TensorT<T> y({1});
  y.data[0] = static_cast<T>(s);
  return make_op<T>(std::move(y), {x}, [](NodeT<T>& self) {
    auto& x = self.parents[0];
    x->ensure_grad();
    for (int64_t i = 0; i < x->grad.numel(); ++i) x->grad.data[i] += self.grad.data[0];
  });
}

template <typename T>
VarT<T> mul(const VarT<T>& a, const VarT<T>& b) {
  if (!a->value.same_shape(b->value)) throw std::invalid_argument("mul: shape mismatch");
  TensorT<T> y = a->value;
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] *= b->value.data[i];
  return make_op<T>(std::move(y), {a, b}, [](NodeT<T>& self) {
    auto& a = self.parents[0];
    auto& b = self.parents[1];
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < a->grad.numel(); ++i)
        a->grad.data[i] += self.grad.data[i] * b->value.data[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < b->grad.numel(); ++i)
        b->grad.data[i] += self.grad.data[i] * a->value.data[i];
    }
  });
}

}  // namespace pld
