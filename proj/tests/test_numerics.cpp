#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "dusev/error.hpp"
#include "dusev/gradcheck.hpp"
#include "dusev/layers.hpp"
#include "dusev/matrix.hpp"
#include "dusev/rng.hpp"

using namespace dusev;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(lo, hi);
  return m;
}

// independent reference: plain i-j-k dot-product loop
Matrix matmul_reference(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("matmul: identity is neutral") {
  Rng rng(1);
  const Matrix a = random_matrix(4, 4, rng);
  const Matrix c = matmul(a, Matrix::identity(4));
  CHECK(max_abs_diff(a, c) == 0.0);
}

TEST_CASE("matmul: 1x1 case") {
  Matrix a(1, 1), b(1, 1);
  a(0, 0) = 2.0;
  b(0, 0) = 3.0;
  CHECK(matmul(a, b)(0, 0) == 6.0);
}

TEST_CASE("matmul: random 3x3 pair matches the reference loop") {
  Rng rng(2);
  const Matrix a = random_matrix(3, 3, rng);
  const Matrix b = random_matrix(3, 3, rng);
  CHECK(max_abs_diff(matmul(a, b), matmul_reference(a, b)) < 1e-12);
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  Matrix a(3, 4), b(5, 2);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("3x4"), ShapeError);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("5x2"), ShapeError);
}

TEST_CASE("matmul: associativity on random conformable triples") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = rng.uniform_int(1, 6), k1 = rng.uniform_int(1, 6), k2 = rng.uniform_int(1, 6),
              n = rng.uniform_int(1, 6);
    const Matrix a = random_matrix(m, k1, rng);
    const Matrix b = random_matrix(k1, k2, rng);
    const Matrix c = random_matrix(k2, n, rng);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.data().size(); ++i) {
      const double denom = std::max(1.0, std::abs(left.data()[i]));
      CHECK(std::abs(left.data()[i] - right.data()[i]) / denom < 1e-9);
    }
  }
}

TEST_CASE("matmul transposed variants agree with explicit transpose") {
  Rng rng(4);
  const Matrix a = random_matrix(5, 3, rng);
  const Matrix b = random_matrix(7, 3, rng);
  CHECK(max_abs_diff(matmul_bt(a, b), matmul_reference(a, transpose(b))) < 1e-12);
  const Matrix c = random_matrix(5, 4, rng);
  CHECK(max_abs_diff(matmul_at(a, c), matmul_reference(transpose(a), c)) < 1e-12);
}

TEST_CASE("softmax_rows: equal inputs give a uniform row") {
  Matrix a(1, 4, 2.5);
  const Matrix s = softmax_rows(a);
  for (int j = 0; j < 4; ++j) CHECK(s(0, j) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax_rows: shift invariance") {
  Rng rng(5);
  Matrix a = random_matrix(3, 5, rng, -10.0, 10.0);
  Matrix shifted = a;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) shifted(i, j) += 17.25;
  }
  CHECK(max_abs_diff(softmax_rows(a), softmax_rows(shifted)) < 1e-12);
}

TEST_CASE("softmax_rows: row [1,2,3] against direct evaluation") {
  Matrix a(1, 3);
  a(0, 0) = 1.0;
  a(0, 1) = 2.0;
  a(0, 2) = 3.0;
  const Matrix s = softmax_rows(a);
  // oracle: direct exp / sum-exp
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(s(0, 0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(s(0, 1) == doctest::Approx(std::exp(2.0) / z).epsilon(1e-14));
  CHECK(s(0, 2) == doctest::Approx(std::exp(3.0) / z).epsilon(1e-14));
  CHECK(s(0, 0) == doctest::Approx(0.09003057).epsilon(1e-7));
  CHECK(s(0, 1) == doctest::Approx(0.24472847).epsilon(1e-7));
  CHECK(s(0, 2) == doctest::Approx(0.66524096).epsilon(1e-7));
}

TEST_CASE("softmax_rows: rows sum to one for |x| <= 50") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_matrix(4, 8, rng, -50.0, 50.0);
    const Matrix s = softmax_rows(a);
    for (int i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (int j = 0; j < 8; ++j) {
        CHECK(s(i, j) >= 0.0);
        sum += s(i, j);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("layer_norm: constant rows") {
  Matrix x(1, 4, 3.7);
  Matrix gamma(1, 4, 1.0), beta(1, 4, 0.0);
  Matrix y = layer_norm_forward(x, gamma, beta, kLayerNormEps, nullptr);
  for (int j = 0; j < 4; ++j) CHECK(y(0, j) == doctest::Approx(0.0).epsilon(1e-12));
  beta.fill(2.25);
  y = layer_norm_forward(x, gamma, beta, kLayerNormEps, nullptr);
  for (int j = 0; j < 4; ++j) CHECK(y(0, j) == doctest::Approx(2.25).epsilon(1e-12));
}

TEST_CASE("layer_norm: row [1,3] normalizes to [-1,1]") {
  // mean 2, population std 1
  Matrix x(1, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 3.0;
  Matrix gamma(1, 2, 1.0), beta(1, 2, 0.0);
  const Matrix y = layer_norm_forward(x, gamma, beta, 1e-12, nullptr);
  CHECK(y(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(y(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("layer_norm: backward matches finite differences") {
  Rng rng(7);
  ParamTensor x(3, 6), gamma(1, 6), beta(1, 6);
  x.value = random_matrix(3, 6, rng);
  gamma.value = random_matrix(1, 6, rng, 0.5, 1.5);
  beta.value = random_matrix(1, 6, rng);

  auto f = [&]() {
    const Matrix y = layer_norm_forward(x.value, gamma.value, beta.value, kLayerNormEps, nullptr);
    double acc = 0.0;
    for (double v : y.data()) acc += v * v;
    return acc;
  };
  LayerNormCache cache;
  const Matrix y = layer_norm_forward(x.value, gamma.value, beta.value, kLayerNormEps, &cache);
  Matrix dy = y;
  scale_inplace(dy, 2.0);
  Matrix dgamma(1, 6), dbeta(1, 6);
  const Matrix dx = layer_norm_backward(dy, cache, gamma.value, dgamma, dbeta);

  const auto result = finite_diff_check(
      f, {{"x", &x}, {"gamma", &gamma}, {"beta", &beta}}, {dx, dgamma, dbeta});
  CHECK(result.max_rel_error < 1e-6);
}

TEST_CASE("batch_norm: eval mode with unit running stats is near identity") {
  Rng rng(8);
  const Matrix x = random_matrix(4, 3, rng);
  Matrix gamma(1, 3, 1.0), beta(1, 3, 0.0);
  BatchNormState stats(3);
  const Matrix y =
      batch_norm_forward(x, gamma, beta, stats, Mode::Eval, kBatchNormEps, kBatchNormMomentum,
                         nullptr);
  CHECK(max_abs_diff(x, y) < 1e-4);
}

TEST_CASE("batch_norm: train mode standardizes columns and a two-sample batch exactly") {
  Rng rng(9);
  const Matrix x = random_matrix(32, 5, rng, -3.0, 7.0);
  Matrix gamma(1, 5, 1.0), beta(1, 5, 0.0);
  BatchNormState stats(5);
  const Matrix y =
      batch_norm_forward(x, gamma, beta, stats, Mode::Train, 1e-12, kBatchNormMomentum, nullptr);
  for (int j = 0; j < 5; ++j) {
    double mean = 0.0;
    for (int i = 0; i < 32; ++i) mean += y(i, j);
    mean /= 32;
    double var = 0.0;
    for (int i = 0; i < 32; ++i) var += (y(i, j) - mean) * (y(i, j) - mean);
    var /= 32;
    CHECK(std::abs(mean) < 1e-8);
    CHECK(std::abs(var - 1.0) < 1e-8);
  }

  Matrix two(2, 1);
  two(0, 0) = 0.0;
  two(1, 0) = 2.0;
  Matrix g1(1, 1, 1.0), b1(1, 1, 0.0);
  BatchNormState s1(1);
  const Matrix z =
      batch_norm_forward(two, g1, b1, s1, Mode::Train, kBatchNormEps, kBatchNormMomentum, nullptr);
  // mean 1, population var 1, eps-corrected
  CHECK(z(0, 0) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(z(1, 0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("batch_norm: running stats update with momentum 0.9") {
  Matrix x(2, 1);
  x(0, 0) = 1.0;
  x(1, 0) = 3.0;  // batch mean 2, population var 1
  Matrix gamma(1, 1, 1.0), beta(1, 1, 0.0);
  BatchNormState stats(1);
  batch_norm_forward(x, gamma, beta, stats, Mode::Train, kBatchNormEps, kBatchNormMomentum,
                     nullptr);
  CHECK(stats.running_mean(0, 0) == doctest::Approx(0.9 * 0.0 + 0.1 * 2.0).epsilon(1e-12));
  CHECK(stats.running_var(0, 0) == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0).epsilon(1e-12));
}

TEST_CASE("batch_norm: train mode rejects single-sample batches") {
  Matrix x(1, 2);
  Matrix gamma(1, 2, 1.0), beta(1, 2, 0.0);
  BatchNormState stats(2);
  CHECK_THROWS_AS(batch_norm_forward(x, gamma, beta, stats, Mode::Train, kBatchNormEps,
                                     kBatchNormMomentum, nullptr),
                  ValidationError);
}

TEST_CASE("batch_norm: train-mode backward matches finite differences") {
  Rng rng(10);
  ParamTensor x(6, 4), gamma(1, 4), beta(1, 4);
  x.value = random_matrix(6, 4, rng);
  gamma.value = random_matrix(1, 4, rng, 0.5, 1.5);
  beta.value = random_matrix(1, 4, rng);

  auto run = [&](BatchNormCache* cache) {
    BatchNormState stats(4);  // fresh stats per call; output does not depend on them in train mode
    return batch_norm_forward(x.value, gamma.value, beta.value, stats, Mode::Train, kBatchNormEps,
                              kBatchNormMomentum, cache);
  };
  auto f = [&]() {
    const Matrix y = run(nullptr);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.data().size(); ++i) acc += y.data()[i] * y.data()[i] * (i % 3 + 1);
    return acc;
  };
  BatchNormCache cache;
  const Matrix y = run(&cache);
  Matrix dy = y;
  for (std::size_t i = 0; i < dy.data().size(); ++i) dy.data()[i] *= 2.0 * (i % 3 + 1);
  Matrix dgamma(1, 4), dbeta(1, 4);
  const Matrix dx = batch_norm_backward(dy, cache, gamma.value, dgamma, dbeta);

  const auto result = finite_diff_check(
      f, {{"x", &x}, {"gamma", &gamma}, {"beta", &beta}}, {dx, dgamma, dbeta});
  CHECK(result.max_rel_error < 1e-6);
}

TEST_CASE("adam_step: zero gradient leaves the value unchanged") {
  ParamTensor p(2, 2);
  p.value.fill(1.5);
  adam_step(p, 0.01, "p");
  for (double v : p.value.data()) CHECK(v == 1.5);
  CHECK(p.step == 1);
}

TEST_CASE("adam_step: first step follows the bias-corrected closed form") {
  // with m1_hat = g and v1_hat = g^2 the first update is -lr * g / (|g| + eps)
  ParamTensor p(1, 1);
  p.value(0, 0) = 0.7;
  p.grad(0, 0) = -0.3;
  adam_step(p, 0.05, "p");
  const double expected = 0.7 - 0.05 * (-0.3) / (std::abs(-0.3) + kAdamEps);
  CHECK(p.value(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(p.grad(0, 0) == 0.0);  // cleared
}

TEST_CASE("adam_step: constant gradient gives a constant bias-corrected step") {
  // closed-form recurrence: m_t = (1 - b1^t) g and v_t = (1 - b2^t) g^2, so
  // after bias correction m_hat = g and v_hat = g^2 at every t and the update
  // magnitude stays lr * |g| / (|g| + eps)
  ParamTensor p(1, 1);
  p.value(0, 0) = 0.0;
  const double g = 0.4, lr = 0.01;
  p.grad(0, 0) = g;
  adam_step(p, lr, "p");
  const double delta1 = std::abs(p.value(0, 0) - 0.0);
  const double before2 = p.value(0, 0);
  p.grad(0, 0) = g;
  adam_step(p, lr, "p");
  const double delta2 = std::abs(p.value(0, 0) - before2);
  const double expected = lr * g / (g + kAdamEps);
  CHECK(delta1 == doctest::Approx(expected).epsilon(1e-12));
  CHECK(delta2 == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("adam_step: rejects non-finite gradients naming the tensor") {
  ParamTensor p(1, 2);
  p.grad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(adam_step(p, 0.01, "enc0.attn.wq"), doctest::Contains("enc0.attn.wq"),
                       NumericError);
}

TEST_CASE("adam_step: stays finite under random gradient stress") {
  Rng rng(11);
  ParamTensor p(4, 4);
  p.value = random_matrix(4, 4, rng);
  for (int step = 0; step < 500; ++step) {
    p.grad = random_matrix(4, 4, rng, -100.0, 100.0);
    adam_step(p, 0.05, "p");
    CHECK(p.value.all_finite());
    CHECK(p.adam_v.all_finite());
  }
}

TEST_CASE("finite_diff_check: quadratic and constant functions") {
  ParamTensor theta(1, 1);
  theta.value(0, 0) = 3.0;
  auto square = [&]() { return theta.value(0, 0) * theta.value(0, 0); };
  Matrix analytic(1, 1);
  analytic(0, 0) = 6.0;
  auto result = finite_diff_check(square, {{"theta", &theta}}, {analytic});
  CHECK(result.max_rel_error < 1e-8);

  auto constant = [&]() { return 42.0; };
  analytic(0, 0) = 0.0;
  result = finite_diff_check(constant, {{"theta", &theta}}, {analytic});
  CHECK(result.max_rel_error == 0.0);
}
