#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stego/gradcheck.hpp"
#include "stego/ops.hpp"

#include "support/test_util.hpp"

using namespace stego;

TEST_CASE("matmul identity and projector") {
  auto a = Tensor<double>::from_data({2, 2}, {1, 2, 3, 4});
  auto i2 = Tensor<double>::from_data({2, 2}, {1, 0, 0, 1});
  auto out = matmul(i2, a);
  CHECK(test::bitwise_equal(out, a));

  auto proj = Tensor<double>::from_data({2, 2}, {1, 0, 0, 0});
  auto b = Tensor<double>::from_data({2, 2}, {5, 6, 7, 8});
  auto pb = matmul(proj, b);
  CHECK(pb.values()[0] == 5);
  CHECK(pb.values()[1] == 6);
  CHECK(pb.values()[2] == 0);
  CHECK(pb.values()[3] == 0);
}

TEST_CASE("matmul gradient matches finite differences") {
  Rng rng(7);
  auto a = test::random_tensor<double>({3, 4}, rng);
  auto b = test::random_tensor<double>({4, 2}, rng);
  const double err = gradcheck([&] { return sum(matmul(a, b)); }, {a, b});
  CHECK(err <= 1e-6);
}

TEST_CASE("matmul rejects shape mismatch") {
  auto a = Tensor<double>::zeros({2, 3});
  auto b = Tensor<double>::zeros({2, 3});
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("softmax symmetry, shift invariance and row sums") {
  auto x = Tensor<double>::from_data({3}, {0, 0, 0});
  auto s = softmax(x);
  for (int i = 0; i < 3; ++i) CHECK(s.values()[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Rng rng(3);
  auto y = test::random_tensor<double>({4, 5}, rng, -3.0, 3.0);
  auto shifted = add_scalar(y, 17.25);
  CHECK(test::max_abs_diff(softmax(y), softmax(shifted)) < 1e-12);

  auto sm = softmax(y);
  for (Index r = 0; r < 4; ++r) {
    double row = 0;
    for (Index c = 0; c < 5; ++c) {
      const double v = sm.values()[r * 5 + c];
      CHECK(v >= 0.0);
      row += v;
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("softmax along a non-last axis") {
  auto x = Tensor<double>::from_data({2, 2}, {0, 10, 0, 10});
  auto s = softmax(x, 0);  // columns are symmetric
  CHECK(s.values()[0] == doctest::Approx(0.5));
  CHECK(s.values()[1] == doctest::Approx(0.5));
}

TEST_CASE("sigmoid at zero") {
  auto x = Tensor<double>::zeros({1});
  CHECK(sigmoid(x).scalar() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("activation gradients") {
  Rng rng(11);
  auto x = test::random_tensor<double>({3, 4}, rng, -2.0, 2.0);
  CHECK(gradcheck([&] { return sum(sigmoid(x)); }, {x}) <= 1e-7);
  CHECK(gradcheck([&] { return sum(gelu(x)); }, {x}) <= 1e-7);
  CHECK(gradcheck([&] { return sum(mul(softmax(x), x)); }, {x}) <= 1e-7);
}

TEST_CASE("layer_norm constant input maps to beta") {
  auto x = Tensor<double>::constant({2, 4}, 3.7);
  auto gamma = Tensor<double>::constant({4}, 1.0);
  auto beta = Tensor<double>::zeros({4});
  auto out = layer_norm(x, gamma, beta);
  CHECK(out.values().abs().maxCoeff() < 1e-9);
}

TEST_CASE("layer_norm hand-computed values") {
  auto x = Tensor<double>::from_data({1, 3}, {1, 2, 3});
  auto gamma = Tensor<double>::constant({3}, 1.0);
  auto beta = Tensor<double>::zeros({3});
  auto out = layer_norm(x, gamma, beta, 1e-12);
  CHECK(out.values()[0] == doctest::Approx(-1.22474487).epsilon(1e-6));
  CHECK(out.values()[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(out.values()[2] == doctest::Approx(1.22474487).epsilon(1e-6));
}

TEST_CASE("layer_norm gradient vs finite differences") {
  Rng rng(5);
  auto x = test::random_tensor<double>({4, 6}, rng);
  auto gamma = test::random_tensor<double>({6}, rng, 0.5, 1.5);
  auto beta = test::random_tensor<double>({6}, rng);
  auto probe = test::random_tensor<double>({4, 6}, rng);
  const double err = gradcheck(
      [&] { return sum(mul(layer_norm(x, gamma, beta), probe)); }, {x, gamma, beta});
  CHECK(err <= 1e-5);
}

TEST_CASE("layer_norm rejects channel mismatch") {
  auto x = Tensor<double>::zeros({2, 4});
  auto gamma = Tensor<double>::constant({3}, 1.0);
  auto beta = Tensor<double>::zeros({3});
  CHECK_THROWS_AS(layer_norm(x, gamma, beta), DimensionError);
}

TEST_CASE("broadcast add and elementwise gradients") {
  Rng rng(13);
  auto x = test::random_tensor<double>({2, 3, 4}, rng);
  auto pe = test::random_tensor<double>({3, 4}, rng);
  auto b = test::random_tensor<double>({4}, rng);
  CHECK(gradcheck([&] { return sum(add(x, pe)); }, {x, pe}) <= 1e-7);
  CHECK(gradcheck([&] { return sum(mul(add(x, b), x)); }, {x, b}) <= 1e-7);

  auto bad = test::random_tensor<double>({3}, rng);
  CHECK_THROWS_AS(add(x, bad), DimensionError);
}

TEST_CASE("concat forward and gradient") {
  Rng rng(17);
  auto a = test::random_tensor<double>({2, 2, 3}, rng);
  auto b = test::random_tensor<double>({2, 1, 3}, rng);
  auto cat = concat(a, b, 1);
  CHECK(cat.shape() == Shape{2, 3, 3});
  CHECK(cat.values()[0] == a.values()[0]);
  auto probe = test::random_tensor<double>({2, 3, 3}, rng);
  CHECK(gradcheck([&] { return sum(mul(concat(a, b, 1), probe)); }, {a, b}) <= 1e-7);
}

TEST_CASE("losses: bce at zero logits is ln 2; mse quadratic exact") {
  auto z = Tensor<double>::zeros({8});
  Rng rng(19);
  BitMessage bits;
  ArrX<double> t(8);
  for (int i = 0; i < 8; ++i) t[i] = static_cast<double>(rng.bit());
  auto targets = Tensor<double>::from_array({8}, std::move(t));
  CHECK(bce_with_logits_loss(z, targets).scalar() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  auto a = test::random_tensor<double>({5}, rng);
  auto b = test::random_tensor<double>({5}, rng);
  CHECK(gradcheck([&] { return mse_loss(a, b); }, {a, b}) <= 1e-8);
  CHECK(gradcheck([&] { return bce_with_logits_loss(a, sigmoid(b)); }, {a, b}) <= 1e-7);
}

TEST_CASE("gradcheck harness anchors") {
  // f(x) = x^2 at x = 3: both routes give 6 (central differences are exact on
  // quadratics).
  auto x = Tensor<double>::from_data({1}, {3.0});
  CHECK(gradcheck([&] { return mul(x, x); }, {x}) <= 1e-10);

  Rng rng(23);
  auto y = test::random_tensor<double>({32}, rng, -1.5, 1.5);
  CHECK(gradcheck([&] { return sum(sin_t(y)); }, {y}) <= 1e-8);
}

TEST_CASE("gradcheck raises on non-finite values") {
  auto x = Tensor<double>::from_data({1}, {0.0});
  auto f = [&] {
    auto inv = Tensor<double>::from_data({1}, {1.0 / x.values()[0]});  // inf at 0
    return mul(add(x, inv), x);
  };
  CHECK_THROWS_AS(gradcheck(f, {x}), NumericError);
}

TEST_CASE("checked mode flags non-finite op outputs") {
  CheckedModeGuard guard(true);
  auto big = Tensor<float>::constant({4}, 3e38f);
  CHECK_THROWS_AS(add(big, big), NumericError);
}

TEST_CASE("forward passes are bitwise deterministic") {
  Rng rng(29);
  auto x = test::random_tensor<float>({16, 16}, rng);
  auto w = test::random_tensor<float>({16, 16}, rng);
  auto once = softmax(matmul(x, w));
  auto twice = softmax(matmul(x, w));
  CHECK(test::bitwise_equal(once, twice));
}

TEST_CASE("backward accumulates over reused tensors") {
  auto x = Tensor<double>::from_data({1}, {2.0}, true);
  x.zero_grad();
  auto y = add(mul(x, x), x);  // y = x^2 + x, dy/dx = 2x + 1 = 5
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(5.0).epsilon(1e-12));
}
