// SPDX-License-Identifier: Apache-2.0
#include "pld/model.hpp"

#include "pld/rng.hpp"

namespace pld {

void NetworkSpec::validate() const {
  if (input_ms < 30) throw std::invalid_argument("spec: input_ms must cover one window");
  if (n_channels < 1 || n_res_blocks < 1 || n_classes < 2 || n_coeffs < 1)
    throw std::invalid_argument("spec: invalid sizes");
  if (kernel % 2 == 0) throw std::invalid_argument("spec: kernel must be odd");
  if (final_dilation < 1 || (final_dilation & (final_dilation - 1)) != 0)
    throw std::invalid_argument("spec: final_dilation must be a power of two");
}

namespace {

Tensor init_uniform(const std::vector<int>& shape, int fan_in, Rng& rng) {
  Tensor t(shape);
  const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
  std::uniform_real_distribution<float> dist(-limit, limit);
  for (float& v : t.data) v = dist(rng);
  return t;
}

Var make_param(Tensor t) { return make_var(std::move(t), true); }

}  // namespace

Network build_network(const NetworkSpec& spec, uint64_t seed) {
  spec.validate();
  Network net;
  net.spec = spec;
  net.norm_mean.assign(static_cast<size_t>(spec.n_coeffs), 0.f);
  net.norm_var.assign(static_cast<size_t>(spec.n_coeffs), 1.f);

  const int c = spec.n_channels, k = spec.kernel;
  Rng rng = make_rng(seed, 0x6d6f64656cULL);

  net.params["conv0.w"] = make_param(init_uniform({c, 1, k, k}, k * k, rng));
  for (int b = 0; b < spec.n_res_blocks; ++b) {
    const std::string p = "res" + std::to_string(b) + ".";
    for (int j = 1; j <= 2; ++j) {
      const std::string cj = p + "conv" + std::to_string(j) + ".w";
      net.params[cj] = make_param(init_uniform({c, c, k, k}, c * k * k, rng));
      const std::string bn = p + "bn" + std::to_string(j) + ".";
      Tensor gamma({c});
      gamma.fill(1.f);
      net.params[bn + "gamma"] = make_param(std::move(gamma));
      net.params[bn + "beta"] = make_param(Tensor({c}));
      net.bn_stats.emplace(p + "bn" + std::to_string(j), BatchNormStats<float>(c));
    }
  }
  net.params["conv_final.w"] = make_param(init_uniform({c, c, k, k}, c * k * k, rng));
  Tensor gamma({c});
  gamma.fill(1.f);
  net.params["bn_final.gamma"] = make_param(std::move(gamma));
  net.params["bn_final.beta"] = make_param(Tensor({c}));
  net.bn_stats.emplace("bn_final", BatchNormStats<float>(c));
  net.params["fc.w"] = make_param(init_uniform({spec.n_classes, c}, c, rng));
  net.params["fc.b"] = make_param(Tensor({spec.n_classes}));
  return net;
}

Var Network::forward(const Tensor& batch, bool train) {
  return forward(make_var(batch, false), train);
}

Var Network::forward(const Var& input, bool train) {
  const auto& s = input->value.shape;
  if (s.size() != 4 || s[1] != 1 || s[2] != spec.input_frames() || s[3] != spec.n_coeffs)
    throw std::invalid_argument("forward: expected input [N,1," +
                                std::to_string(spec.input_frames()) + "," +
                                std::to_string(spec.n_coeffs) + "], got " + shape_str(s));

  Var x = conv2d(input, params.at("conv0.w"), 1, 1);
  int conv_idx = 0;
  for (int b = 0; b < spec.n_res_blocks; ++b) {
    const std::string p = "res" + std::to_string(b) + ".";
    Var skip = x;
    const int d1 = spec.res_dilation(conv_idx++);
    x = conv2d(x, params.at(p + "conv1.w"), d1, d1);
    x = relu(x);
    x = batch_norm(x, params.at(p + "bn1.gamma"), params.at(p + "bn1.beta"),
                   bn_stats.at(p + "bn1"), train);
    const int d2 = spec.res_dilation(conv_idx++);
    x = conv2d(x, params.at(p + "conv2.w"), d2, d2);
    x = relu(x);
    x = batch_norm(x, params.at(p + "bn2.gamma"), params.at(p + "bn2.beta"),
                   bn_stats.at(p + "bn2"), train);
    x = add(skip, x);
  }
  x = conv2d(x, params.at("conv_final.w"), spec.final_dilation, spec.final_dilation);
  x = batch_norm(x, params.at("bn_final.gamma"), params.at("bn_final.beta"),
                 bn_stats.at("bn_final"), train);
  x = global_avg_pool(x);
  x = linear(x, params.at("fc.w"), params.at("fc.b"));
  return softmax(x);
}

void set_normalization(Network& net, const std::vector<const MfccMatrix*>& features) {
  const int c = net.spec.n_coeffs;
  std::vector<double> sum(static_cast<size_t>(c), 0), sq(static_cast<size_t>(c), 0);
  int64_t n = 0;
  for (const MfccMatrix* m : features) {
    for (int r = 0; r < m->rows; ++r)
      for (int j = 0; j < c; ++j) {
        sum[static_cast<size_t>(j)] += m->at(r, j);
        sq[static_cast<size_t>(j)] += static_cast<double>(m->at(r, j)) * m->at(r, j);
      }
    n += m->rows;
  }
  if (n == 0) throw std::invalid_argument("set_normalization: no frames");
  for (int j = 0; j < c; ++j) {
    const double mu = sum[static_cast<size_t>(j)] / static_cast<double>(n);
    net.norm_mean[static_cast<size_t>(j)] = static_cast<float>(mu);
    net.norm_var[static_cast<size_t>(j)] =
        static_cast<float>(std::max(sq[static_cast<size_t>(j)] / static_cast<double>(n) - mu * mu, 0.0));
  }
}

Tensor make_batch(const Network& net, const std::vector<const MfccMatrix*>& features) {
  const int n = static_cast<int>(features.size());
  const int f = net.spec.input_frames(), c = net.spec.n_coeffs;
  Tensor batch({n, 1, f, c});
  for (int i = 0; i < n; ++i) {
    const MfccMatrix* m = features[static_cast<size_t>(i)];
    if (m->rows != f || m->cols != c)
      throw std::invalid_argument("make_batch: feature shape [" + std::to_string(m->rows) + "," +
                                  std::to_string(m->cols) + "] does not match network input [" +
                                  std::to_string(f) + "," + std::to_string(c) + "]");
    for (int r = 0; r < f; ++r)
      for (int j = 0; j < c; ++j)
        batch.at4(i, 0, r, j) =
            (m->at(r, j) - net.norm_mean[static_cast<size_t>(j)]) /
            std::sqrt(net.norm_var[static_cast<size_t>(j)] + 1e-8f);
  }
  return batch;
}

FlopsReport count_flops(const NetworkSpec& spec) {
  spec.validate();
  auto totals = [](const NetworkSpec& s) {
    FlopsReport r;
    const double hw = static_cast<double>(s.input_frames()) * s.n_coeffs;
    const double k2 = static_cast<double>(s.kernel) * s.kernel;
    const double c = s.n_channels;
    r.conv = 2.0 * hw * c * k2 * 1.0;                              // input conv (1 channel in)
    r.conv += 2.0 * hw * c * k2 * c * (2.0 * s.n_res_blocks + 1);  // residual + final convs
    r.add = hw * c * s.n_res_blocks;
    r.pool = hw * c;
    const double fc = 2.0 * c * s.n_classes + s.n_classes;
    r.total = r.conv + r.add + r.pool + fc;
    return r;
  };
  FlopsReport r = totals(spec);
  NetworkSpec base = spec;
  base.input_ms = 1000;
  r.factor = r.total / totals(base).total;
  return r;
}

}  // namespace pld
