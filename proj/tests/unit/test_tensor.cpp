// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>

#include "disc/error.hpp"
#include "disc/ops.hpp"
#include "doctest.h"
#include "support/testing.hpp"

using namespace disc;
using disc::testing::check_gradients;
using disc::testing::random_tensor;

namespace {

constexpr double kH = 1e-5;         // 64-bit central-difference step
constexpr double kOpTol = 1e-4;     // per-op relative error bound

// Random linear probe so gradients are not all equal.
template <typename T>
BasicTensor<T> probe(const BasicTensor<T>& out, std::uint64_t seed = 99) {
  Rng rng(seed);
  auto w = random_tensor<T>(out.shape(), rng, -1.0, 1.0, false);
  return sum(mul(out, w));
}

template <typename F>
void expect_fd(std::vector<Tensor64> inputs, F&& f, double tol = kOpTol) {
  auto loss = [&](std::vector<Tensor64>& in) { return probe(f(in)); };
  const auto r = check_gradients(inputs, loss, kH);
  INFO("worst " << r.worst << " rel " << r.max_rel);
  CHECK(r.checked > 0);
  CHECK(r.max_rel < tol);
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("shape and value invariants") {
    CHECK_THROWS_AS(Tensor::from({2, 2}, {1.0f, 2.0f, 3.0f}), DimensionError);
    CHECK_THROWS_AS(Tensor::from({2}, {1.0f, NAN}), NumericError);
    const auto t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.numel() == 6);
    CHECK(t.at(1, 2) == 6.0f);
  }

  TEST_CASE("matmul identity and adjoint") {
    const auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    const auto m = Tensor::from({2, 2}, {1, 2, 3, 4});
    const auto p = matmul(eye, m);
    CHECK(std::vector<float>(p.data().begin(), p.data().end()) == std::vector<float>{1, 2, 3, 4});

    // d sum(a b) / d a[i][k] = sum_j b[k][j]
    auto a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    auto b = Tensor::from({3, 2}, {1, -1, 2, 0.5f, -3, 4}, true);
    backward(sum(matmul(a, b)));
    const float rows[3] = {0.0f, 2.5f, 1.0f};
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t k = 0; k < 3; ++k) CHECK(a.grad()[i * 3 + k] == doctest::Approx(rows[k]));
    }
    CHECK_THROWS_AS(matmul(a, a), DimensionError);
  }

  TEST_CASE("matmul gradients match finite differences") {
    Rng rng(1);
    expect_fd({random_tensor<double>({3, 4}, rng), random_tensor<double>({4, 2}, rng)},
              [](auto& in) { return matmul(in[0], in[1]); });
  }

  TEST_CASE("conv1d contracts") {
    const auto x = Tensor::from({1, 5}, {1, -2, 3, 0.5f, 7});
    const auto delta = Tensor::from({1, 1, 1}, {1});
    const auto y = conv1d(x, delta, 1, 0);
    CHECK(std::equal(y.data().begin(), y.data().end(), x.data().begin()));

    Rng rng(2);
    const auto w = random_tensor<float>({3, 2, 3}, rng, -1, 1, false);
    const auto z = conv1d(Tensor::zeros({2, 8}), w, 1, 1);
    CHECK(std::all_of(z.data().begin(), z.data().end(), [](float v) { return v == 0.0f; }));
    CHECK(z.dim(1) == 8);  // same padding preserves T

    CHECK(conv1d(Tensor::zeros({2, 9}), w, 4, 1).dim(1) == 3);
    CHECK_THROWS_AS(conv1d(Tensor::zeros({2, 2}), random_tensor<float>({3, 2, 5}, rng), 1, 0), DimensionError);
    CHECK_THROWS_AS(conv1d(Tensor::zeros({3, 8}), w, 1, 1), DimensionError);
  }

  TEST_CASE("conv1d gradients match finite differences") {
    Rng rng(3);
    for (std::size_t stride : {1u, 2u}) {
      CAPTURE(stride);
      expect_fd({random_tensor<double>({2, 8}, rng), random_tensor<double>({3, 2, 3}, rng)},
                [stride](auto& in) { return conv1d(in[0], in[1], stride, 1); });
    }
  }

  TEST_CASE("conv1d 32-bit sanity at step 1e-3") {
    Rng rng(4);
    std::vector<Tensor> in{random_tensor<float>({2, 8}, rng), random_tensor<float>({3, 2, 3}, rng)};
    const auto r = check_gradients(in, [](auto& v) { return probe(conv1d(v[0], v[1], 1, 1)); }, 1e-3, 1e-2);
    CHECK(r.max_rel < 2e-2);
  }

  TEST_CASE("weight_norm") {
    const auto v = Tensor::from({2, 1, 2}, {3, 4, 0, 2});
    const auto g = Tensor::from({2}, {10, 1});
    const auto w = weight_norm(v, g);
    CHECK(w[0] == doctest::Approx(6.0));
    CHECK(w[1] == doctest::Approx(8.0));
    CHECK(w[3] == doctest::Approx(1.0));
    Rng rng(5);
    expect_fd({random_tensor<double>({3, 2, 3}, rng), random_tensor<double>({3}, rng, 0.5, 2.0)},
              [](auto& in) { return weight_norm(in[0], in[1]); });
  }

  TEST_CASE("layer_norm") {
    const auto gain = Tensor::from({2}, {1, 1}), bias = Tensor::zeros({2});
    const auto c = layer_norm(Tensor::from({2, 1}, {3, 3}), gain, bias);
    CHECK(c[0] == 0.0f);
    CHECK(c[1] == 0.0f);
    const auto u = layer_norm(Tensor::from({2, 1}, {1, -1}), gain, bias);
    CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(u[1] == doctest::Approx(-1.0).epsilon(1e-5));
    Rng rng(6);
    expect_fd({random_tensor<double>({4, 3}, rng), random_tensor<double>({4}, rng), random_tensor<double>({4}, rng)},
              [](auto& in) { return layer_norm(in[0], in[1], in[2]); });
  }

  TEST_CASE("clamp") {
    const auto y = clamp(Tensor::from({3}, {-10, 0, 10}), -7, 2);
    CHECK(std::vector<float>(y.data().begin(), y.data().end()) == std::vector<float>{-7, 0, 2});
    auto x = Tensor::from({3}, {-0.5f, 0.25f, 1.0f}, true);
    backward(sum(clamp(x, -7, 2)));
    for (float g : x.grad()) CHECK(g == 1.0f);
    CHECK_THROWS_AS(clamp(x, 1, 1), ConfigError);
    Rng rng(7);
    // Points at least 0.1 away from both bounds.
    std::vector<double> v = {-3.0, -0.5, 0.4, 1.5, 2.5, 4.0};
    expect_fd({Tensor64::from({6}, v, true)}, [](auto& in) { return clamp(in[0], -1.0, 2.0); });
  }

  TEST_CASE("elementwise ops and reductions match finite differences") {
    Rng rng(8);
    auto pos = [&] { return random_tensor<double>({2, 3}, rng, 0.5, 2.0); };
    auto any = [&] { return random_tensor<double>({2, 3}, rng); };
    expect_fd({any(), any()}, [](auto& in) { return add(in[0], in[1]); });
    expect_fd({any(), any()}, [](auto& in) { return sub(in[0], in[1]); });
    expect_fd({any(), any()}, [](auto& in) { return mul(in[0], in[1]); });
    expect_fd({any(), pos()}, [](auto& in) { return div(in[0], in[1]); });
    expect_fd({any()}, [](auto& in) { return scale(in[0], -2.5); });
    expect_fd({any()}, [](auto& in) { return add_scalar(in[0], 3.0); });
    expect_fd({any()}, [](auto& in) { return exp(in[0]); });
    expect_fd({pos()}, [](auto& in) { return log(in[0]); });
    expect_fd({Tensor64::from({4}, {-2.0, -0.3, 0.4, 1.7}, true)}, [](auto& in) { return abs(in[0]); });
    expect_fd({Tensor64::from({4}, {-2.0, -0.3, 0.4, 1.7}, true)}, [](auto& in) { return relu(in[0]); });
    expect_fd({any()}, [](auto& in) { return softmax(in[0]); });
    expect_fd({any()}, [](auto& in) { return sum(in[0]); });
    expect_fd({any()}, [](auto& in) { return mean(in[0]); });
    expect_fd({any()}, [](auto& in) { return reshape(in[0], {3, 2}); });
    expect_fd({any(), random_tensor<double>({1, 3}, rng)},
              [](auto& in) { return concat_channels(std::vector<Tensor64>{in[0], in[1]}); });
    expect_fd({random_tensor<double>({3, 4}, rng)}, [](auto& in) { return embedding(in[0], 2); });
    expect_fd({random_tensor<double>({3}, rng)}, [](auto& in) { return broadcast_frames(in[0], 4); });
    expect_fd({any(), random_tensor<double>({2}, rng)}, [](auto& in) { return add_channel_bias(in[0], in[1]); });
  }

  TEST_CASE("domain and numeric errors") {
    CHECK_THROWS_AS(log(Tensor::from({2}, {1.0f, -1.0f})), DomainError);
    CHECK_THROWS_AS(exp(Tensor::from({1}, {1000.0f})), NumericError);
    CHECK_THROWS_AS(embedding(Tensor::zeros({2, 3}), 2), DomainError);
  }

  TEST_CASE("backward basics") {
    auto x = Tensor::from({2}, {1, 2}, true);
    backward(sum(x));
    CHECK(x.grad()[0] == 1.0f);
    CHECK(x.grad()[1] == 1.0f);
    const auto sq = sum(mul(x, x));
    backward(sq);
    CHECK(x.grad()[0] == 2.0f);
    CHECK(x.grad()[1] == 4.0f);
    CHECK_THROWS_AS(backward(mul(x, x)), UsageError);
  }

  TEST_CASE("backward twice gives bitwise-identical gradients") {
    Rng rng(9);
    auto a = random_tensor<float>({3, 5}, rng), w = random_tensor<float>({2, 3, 3}, rng);
    const auto loss = probe(layer_norm(conv1d(a, w, 1, 1), Tensor::full({2}, 1.0f), Tensor::zeros({2})));
    backward(loss);
    const std::vector<float> first(w.grad().begin(), w.grad().end());
    backward(loss);
    CHECK(std::vector<float>(w.grad().begin(), w.grad().end()) == first);
  }

  TEST_CASE("graph visits each node once, inputs first") {
    auto x = Tensor::from({2}, {1, 2}, true);
    const auto y = mul(x, x);
    const auto z = sum(add(y, y));
    const auto order = topological_order(z);
    CHECK(order.size() == 4);
    CHECK(order.front() == x.node().get());
    CHECK(order.back() == z.node().get());
  }

  TEST_CASE("gumbel_softmax") {
    Rng rng(10);
    const auto logits = random_tensor<float>({4, 6}, rng, -2, 2, false);
    Rng a(3), b(3);
    const auto soft = gumbel_softmax(logits, 1.0, a);
    const auto cold = gumbel_softmax(logits, 1e-3, b);
    const auto hard = one_hot_argmax(soft);
    for (std::size_t t = 0; t < 6; ++t) {
      double col = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        const float v = soft.at(k, t);
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
        col += v;
        CHECK(cold.at(k, t) == doctest::Approx(hard.at(k, t)).epsilon(1e-6));
      }
      CHECK(col == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK_THROWS_AS(gumbel_softmax(logits, 0.0, rng), ConfigError);

    expect_fd({random_tensor<double>({3, 2}, rng)}, [](auto& in) {
      Rng fixed(5);
      return gumbel_softmax(in[0], 0.7, fixed);
    });
  }

  TEST_CASE("gumbel-max frequencies follow softmax") {
    const auto logits = Tensor::from({3, 1}, {0.5f, -0.3f, 1.2f});
    const auto p = softmax(logits);
    Rng rng(12);
    std::array<int, 3> hits{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const auto y = gumbel_softmax(logits, 1.0, rng);
      const auto it = std::max_element(y.data().begin(), y.data().end());
      ++hits[static_cast<std::size_t>(it - y.data().begin())];
    }
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(hits[k] / double(n) - p[k]) < 0.02);
  }
}
