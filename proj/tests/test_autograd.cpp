// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "pld/kernels.hpp"
#include "pld/optimizer.hpp"
#include "pld/reference.hpp"

using namespace pld;
using testutil::DTensor;
using testutil::DVar;
using testutil::max_grad_rel_err;
using testutil::rand_tensor;
using testutil::rand_tensor_away_from_zero;

namespace {
constexpr double kGradTol = 1e-4;
constexpr int kInstances = 20;

DTensor rand_distribution(int n, int c, std::mt19937_64& rng) {
  DTensor t = rand_tensor({n, c}, rng, 0.05, 1.0);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < c; ++j) s += t.at2(i, j);
    for (int j = 0; j < c; ++j) t.at2(i, j) /= s;
  }
  return t;
}
}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
  kernels::init();
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(100 + static_cast<uint64_t>(k));
    const int dil = 1 << (k % 3);
    DVar x = make_var(rand_tensor({2, 2, 5, 4}, rng), true);
    DVar w = make_var(rand_tensor({3, 2, 3, 3}, rng), true);
    auto loss = [&] { return sum(conv2d(x, w, dil, dil)); };
    CHECK(max_grad_rel_err({x, w}, loss) < kGradTol);
  }
}

TEST_CASE("relu gradients match finite differences") {
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(200 + static_cast<uint64_t>(k));
    DVar x = make_var(rand_tensor_away_from_zero({2, 3, 4, 5}, rng), true);
    auto loss = [&] { return sum(mul(relu(x), relu(x))); };
    CHECK(max_grad_rel_err({x}, loss) < kGradTol);
  }
}

TEST_CASE("residual add gradients match finite differences") {
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(300 + static_cast<uint64_t>(k));
    DVar a = make_var(rand_tensor({2, 2, 3, 3}, rng), true);
    DVar b = make_var(rand_tensor({2, 2, 3, 3}, rng), true);
    auto loss = [&] { return sum(mul(add(a, b), add(a, b))); };
    CHECK(max_grad_rel_err({a, b}, loss) < kGradTol);
  }
}

TEST_CASE("batch norm gradients match finite differences (train mode)") {
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(400 + static_cast<uint64_t>(k));
    const int c = 3;
    DVar x = make_var(rand_tensor({3, c, 4, 2}, rng), true);
    DVar gamma = make_var(rand_tensor({c}, rng, 0.5, 1.5), true);
    DVar beta = make_var(rand_tensor({c}, rng), true);
    BatchNormStats<double> stats(c);
    DTensor target = rand_distribution(3, c, rng);
    auto loss = [&] {
      auto y = batch_norm(x, gamma, beta, stats, /*train=*/true);
      return cross_entropy(softmax(global_avg_pool(y)), target);
    };
    CHECK(max_grad_rel_err({x, gamma, beta}, loss) < kGradTol);
  }
}

TEST_CASE("batch norm gradients match finite differences (eval mode)") {
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(450 + static_cast<uint64_t>(k));
    const int c = 2;
    DVar x = make_var(rand_tensor({2, c, 3, 3}, rng), true);
    DVar gamma = make_var(rand_tensor({c}, rng, 0.5, 1.5), true);
    DVar beta = make_var(rand_tensor({c}, rng), true);
    BatchNormStats<double> stats(c);
    stats.mean.data = {0.1, -0.2};
    stats.var.data = {1.3, 0.6};
    auto loss = [&] {
      auto y = batch_norm(x, gamma, beta, stats, /*train=*/false);
      return sum(mul(y, y));
    };
    CHECK(max_grad_rel_err({x, gamma, beta}, loss) < kGradTol);
  }
}

TEST_CASE("global average pool gradients match finite differences") {
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(500 + static_cast<uint64_t>(k));
    DVar x = make_var(rand_tensor({2, 3, 4, 5}, rng), true);
    auto loss = [&] {
      auto y = global_avg_pool(x);
      return sum(mul(y, y));
    };
    CHECK(max_grad_rel_err({x}, loss) < kGradTol);
  }
}

TEST_CASE("linear gradients match finite differences") {
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(600 + static_cast<uint64_t>(k));
    DVar x = make_var(rand_tensor({3, 5}, rng), true);
    DVar w = make_var(rand_tensor({4, 5}, rng), true);
    DVar b = make_var(rand_tensor({4}, rng), true);
    auto loss = [&] {
      auto y = linear(x, w, b);
      return sum(mul(y, y));
    };
    CHECK(max_grad_rel_err({x, w, b}, loss) < kGradTol);
  }
}

TEST_CASE("softmax + cross-entropy gradients match finite differences") {
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(700 + static_cast<uint64_t>(k));
    DVar x = make_var(rand_tensor({4, 6}, rng, -2.0, 2.0), true);
    DTensor target = rand_distribution(4, 6, rng);
    auto loss = [&] { return cross_entropy(softmax(x), target); };
    CHECK(max_grad_rel_err({x}, loss) < kGradTol);
  }
}

TEST_CASE("softmax + KL-divergence gradients match finite differences") {
  for (int k = 0; k < kInstances; ++k) {
    std::mt19937_64 rng(800 + static_cast<uint64_t>(k));
    DVar x = make_var(rand_tensor({3, 5}, rng, -2.0, 2.0), true);
    DTensor teacher = rand_distribution(3, 5, rng);
    auto loss = [&] { return kl_divergence(softmax(x), teacher); };
    CHECK(max_grad_rel_err({x}, loss) < kGradTol);
  }
}

TEST_CASE("conv2d agrees with the nested-loop reference") {
  kernels::init();
  std::mt19937_64 rng(42);
  for (int n = 1; n <= 2; ++n)
    for (int c_in = 1; c_in <= 2; ++c_in)
      for (int c_out = 1; c_out <= 2; ++c_out)
        for (int hw = 1; hw <= 8; ++hw)
          for (int kk : {1, 3})
            for (int dil : {1, 2, 4}) {
              const DTensor x = rand_tensor({n, c_in, hw, hw}, rng);
              const DTensor w = rand_tensor({c_out, c_in, kk, kk}, rng);
              const DTensor ref = reference::conv2d(x, w, dil, dil);
              const DTensor fast = kernels::conv2d_forward(x, w, dil, dil);
              REQUIRE(ref.same_shape(fast));
              for (size_t i = 0; i < ref.data.size(); ++i)
                REQUIRE(std::abs(ref.data[i] - fast.data[i]) < 1e-6);
            }
}

TEST_CASE("cross-entropy of uniform predictions is log of class count") {
  Tensor p({1, 12});
  p.fill(1.f / 12.f);
  Tensor t({1, 12});
  t.data[3] = 1.f;
  Var pred = make_var(p);
  Var loss = cross_entropy(pred, t);
  CHECK(loss->value.data[0] == doctest::Approx(std::log(12.0)).epsilon(1e-5));
  CHECK(loss->value.data[0] == doctest::Approx(2.4849066).epsilon(1e-5));
}

TEST_CASE("softmax is stable for large logits") {
  Tensor x({1, 2});
  x.data = {1000.f, 0.f};
  Var y = softmax(make_var(x));
  CHECK(y->value.all_finite());
  CHECK(y->value.data[0] == doctest::Approx(1.0));
  CHECK(y->value.data[1] == doctest::Approx(0.0));
}

TEST_CASE("KL divergence is zero when distributions match") {
  Tensor p({1, 4});
  p.data = {0.1f, 0.2f, 0.3f, 0.4f};
  Var s = make_var(p);
  Var d = kl_divergence(s, p);
  CHECK(std::abs(d->value.data[0]) < 1e-6);
}

TEST_CASE("SGD momentum update sequence") {
  SgdState opt;
  opt.momentum = 0.9f;
  opt.weight_decay = 0.f;
  opt.learning_rate = 0.1f;
  Var p = make_var(Tensor({1}, {1.f}), true);
  p->ensure_grad();

  p->grad.data[0] = 1.f;
  opt.step("p", p);
  CHECK(p->value.data[0] == doctest::Approx(0.9f));  // v = 1

  p->grad.data[0] = 1.f;
  opt.step("p", p);
  CHECK(p->value.data[0] == doctest::Approx(0.71f));  // v = 1.9
}

TEST_CASE("learning-rate staircase") {
  LrSchedule s;
  s.base_lr = 0.1f;
  CHECK(s.at(0) == doctest::Approx(0.1f));
  CHECK(s.at(5999) == doctest::Approx(0.1f));
  CHECK(s.at(6000) == doctest::Approx(0.01f));
  CHECK(s.at(11999) == doctest::Approx(0.01f));
  CHECK(s.at(12000) == doctest::Approx(0.001f));
  s.exp_decay = true;
  CHECK(s.at(0) == doctest::Approx(0.1f));
  CHECK(s.at(1000) == doctest::Approx(0.09f));
  CHECK(s.at(2500) == doctest::Approx(0.1f * 0.9f * 0.9f));
}

TEST_CASE("backward rejects non-scalar and non-finite losses") {
  Var v = make_var(Tensor({2}, {1.f, 2.f}), true);
  CHECK_THROWS_AS(backward(v), std::invalid_argument);
  Var bad = make_var(Tensor({1}, {std::numeric_limits<float>::quiet_NaN()}), true);
  CHECK_THROWS_AS(backward(bad), std::runtime_error);
}
