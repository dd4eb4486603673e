#include "cdckg/ops.hpp"
#include "cdckg/tensor.hpp"

#include <doctest.h>

#include <cmath>

using namespace cdckg;

namespace {

// independent window-sum oracle for the stride-3 convolution
template <typename T>
Tensor<T> conv_stride3_oracle(const Tensor<T>& m, const Tensor<T>& kernels, const Tensor<T>& bias) {
  const int64_t k = m.dim(1), nk = kernels.dim(0);
  const int64_t w = (k - 3) / 3 + 1;
  Tensor<T> out({nk, w});
  for (int64_t c = 0; c < nk; ++c)
    for (int64_t j = 0; j < w; ++j) {
      T acc = bias[c];
      for (int64_t i = 0; i < 3; ++i)
        for (int64_t d = 0; d < 3; ++d) acc += kernels.at(c, i, d) * m.at(i, 3 * j + d);
      out.at(c, j) = acc;
    }
  return out;
}

Tensor<double> random_tensor(std::vector<int64_t> shape, Rng& rng, double scale = 1.0) {
  return Tensor<double>::uniform(std::move(shape), -scale, scale, rng);
}

}  // namespace

TEST_CASE("conv_stride3 width law") {
  CHECK(ops::conv_stride3_width(3) == 1);
  CHECK(ops::conv_stride3_width(6) == 2);
  CHECK(ops::conv_stride3_width(100) == 33);
  CHECK(ops::conv_stride3_width(200) == 66);
  for (int64_t k = 3; k <= 300; ++k) {
    CHECK(ops::conv_stride3_width(k) == (k - 3) / 3 + 1);
    if (k % 3 == 0) CHECK(ops::conv_stride3_width(k) == k / 3);
  }
  CHECK_THROWS(ops::conv_stride3_width(2));
}

TEST_CASE("conv_stride3 all-ones and annihilation") {
  Tensor<double> m = Tensor<double>::full({3, 6}, 1.0);
  Tensor<double> ones_kernel = Tensor<double>::full({1, 3, 3}, 1.0);
  Tensor<double> zero_bias({1});
  Tensor<double> out = ops::conv_stride3(m, ones_kernel, zero_bias);
  REQUIRE(out.shape == std::vector<int64_t>{1, 2});
  CHECK(out[0] == doctest::Approx(9.0));
  CHECK(out[1] == doctest::Approx(9.0));

  Tensor<double> zero_kernel({1, 3, 3});
  out = ops::conv_stride3(m, zero_kernel, zero_bias);
  for (int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("conv_stride3 matches window-sum oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t k = 3 + static_cast<int64_t>(rng() % 20);
    const int64_t nk = 1 + static_cast<int64_t>(rng() % 4);
    Tensor<double> m = random_tensor({3, k}, rng);
    Tensor<double> kernels = random_tensor({nk, 3, 3}, rng);
    Tensor<double> bias = random_tensor({nk}, rng);
    Tensor<double> got = ops::conv_stride3(m, kernels, bias);
    Tensor<double> want = conv_stride3_oracle(m, kernels, bias);
    REQUIRE(got.shape == want.shape);
    for (int64_t i = 0; i < got.numel(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
  CHECK_THROWS(ops::conv_stride3(Tensor<double>({3, 2}), Tensor<double>({1, 3, 3}), Tensor<double>({1})));
}

TEST_CASE("relu") {
  Tensor<double> x({3}, {-1.0, 0.0, 2.5});
  Tensor<double> y = ops::relu(x);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.5);
}

TEST_CASE("sigmoid basics and stability") {
  CHECK(ops::sigmoid_scalar(0.0) == doctest::Approx(0.5));
  CHECK(ops::sigmoid_scalar(700.0) < 1.0);
  CHECK(ops::sigmoid_scalar(700.0) > 0.999);
  CHECK(ops::sigmoid_scalar(-700.0) > 0.0);
  CHECK(std::isfinite(ops::sigmoid_scalar(1e6)));
  CHECK(std::isfinite(ops::sigmoid_scalar(-1e6)));
  Rng rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    CHECK(ops::sigmoid_scalar(x) + ops::sigmoid_scalar(-x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ops::sigmoid_scalar(x) > 0.0);
    CHECK(ops::sigmoid_scalar(x) < 1.0);
  }
}

TEST_CASE("affine identity, zero input, and dot-product oracle") {
  Rng rng(5);
  Tensor<double> eye({4, 4});
  for (int i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  Tensor<double> x = random_tensor({2, 4}, rng);
  Tensor<double> b0({4});
  Tensor<double> y = ops::affine(x, eye, b0);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == doctest::Approx(x[i]));

  Tensor<double> w = random_tensor({4, 3}, rng);
  Tensor<double> b = random_tensor({3}, rng);
  Tensor<double> zero({1, 4});
  y = ops::affine(zero, w, b);
  for (int64_t j = 0; j < 3; ++j) CHECK(y[j] == doctest::Approx(b[j]));

  x = random_tensor({5, 4}, rng);
  y = ops::affine(x, w, b);
  for (int64_t i = 0; i < 5; ++i)
    for (int64_t j = 0; j < 3; ++j) {
      double acc = b[j];
      for (int64_t l = 0; l < 4; ++l) acc += x.at(i, l) * w.at(l, j);
      CHECK(y.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("float matmul agrees with double oracle") {
  Rng rng(17);
  Tensor<float> a = Tensor<float>::uniform({7, 9}, -1.f, 1.f, rng);
  Tensor<float> b = Tensor<float>::uniform({9, 5}, -1.f, 1.f, rng);
  Tensor<float> c;
  matmul(a, false, b, false, c);
  for (int64_t i = 0; i < 7; ++i)
    for (int64_t j = 0; j < 5; ++j) {
      double acc = 0;
      for (int64_t l = 0; l < 9; ++l)
        acc += static_cast<double>(a.at(i, l)) * static_cast<double>(b.at(l, j));
      CHECK(static_cast<double>(c.at(i, j)) == doctest::Approx(acc).epsilon(1e-4));
    }
}

TEST_CASE("double matmul is batch-size invariant") {
  Rng rng(19);
  Tensor<double> big = random_tensor({40, 13}, rng);
  Tensor<double> w = random_tensor({13, 8}, rng);
  Tensor<double> full;
  matmul(big, false, w, false, full);
  for (int64_t i = 0; i < 40; ++i) {
    Tensor<double> row({1, 13});
    std::copy_n(big.data.data() + i * 13, 13, row.data.data());
    Tensor<double> one;
    matmul(row, false, w, false, one);
    for (int64_t j = 0; j < 8; ++j) CHECK(one[j] == full.at(i, j));  // bitwise
  }
}

TEST_CASE("transposed matmul variants") {
  Rng rng(23);
  Tensor<double> a = random_tensor({4, 6}, rng);
  Tensor<double> b = random_tensor({5, 6}, rng);
  Tensor<double> c;
  matmul(a, false, b, true, c);  // a * b^T
  REQUIRE(c.shape == std::vector<int64_t>{4, 5});
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = 0; j < 5; ++j) {
      double acc = 0;
      for (int64_t l = 0; l < 6; ++l) acc += a.at(i, l) * b.at(j, l);
      CHECK(c.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
  Tensor<double> d;
  matmul(a, true, a, false, d);  // a^T * a
  REQUIRE(d.shape == std::vector<int64_t>{6, 6});
  for (int64_t i = 0; i < 6; ++i)
    for (int64_t j = 0; j < 6; ++j) {
      double acc = 0;
      for (int64_t l = 0; l < 4; ++l) acc += a.at(l, i) * a.at(l, j);
      CHECK(d.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("dropout identity paths") {
  Rng rng(7);
  Tensor<double> x = random_tensor({50}, rng);
  Tensor<double> y = ops::dropout(x, 0.0, ops::RunMode::kTrain, rng);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);  // bit-identical
  y = ops::dropout(x, 0.2, ops::RunMode::kEval, rng);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
  CHECK_THROWS(ops::dropout(x, 1.0, ops::RunMode::kTrain, rng));
  CHECK_THROWS(ops::dropout(x, -0.1, ops::RunMode::kTrain, rng));
}

TEST_CASE("dropout empirical rate and inverted scaling") {
  Rng rng(101);
  const int64_t n = 1'000'000;
  Tensor<double> x = Tensor<double>::full({n}, 1.0);
  Tensor<double> y = ops::dropout(x, 0.2, ops::RunMode::kTrain, rng);
  int64_t zeros = 0;
  for (int64_t i = 0; i < n; ++i) {
    if (y[i] == 0.0)
      ++zeros;
    else
      CHECK(y[i] == doctest::Approx(1.0 / 0.8));
  }
  const double frac = static_cast<double>(zeros) / static_cast<double>(n);
  CHECK(std::abs(frac - 0.2) < 0.002);
}

TEST_CASE("softmax rows") {
  Tensor<double> z({1, 4});
  Tensor<double> s = ops::softmax_rows(z);
  for (int64_t j = 0; j < 4; ++j) CHECK(s[j] == doctest::Approx(0.25));

  Rng rng(13);
  Tensor<double> x = random_tensor({20, 30}, rng, 10.0);
  s = ops::softmax_rows(x);
  for (int64_t i = 0; i < 20; ++i) {
    double sum = 0;
    for (int64_t j = 0; j < 30; ++j) {
      sum += s.at(i, j);
      CHECK(s.at(i, j) >= 0.0);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("tanh and pooling") {
  Tensor<double> z({1}, {0.0});
  CHECK(ops::tanh_map(z)[0] == 0.0);

  Tensor<double> v({4}, {1.0, 3.0, 2.0, 0.0});
  Tensor<double> p = ops::max_pool_1d(v, 2);
  REQUIRE(p.numel() == 2);
  CHECK(p[0] == 3.0);
  CHECK(p[1] == 2.0);

  // last partial window kept
  Tensor<double> v5({5}, {1.0, 3.0, 2.0, 0.0, 7.0});
  p = ops::max_pool_1d(v5, 2);
  REQUIRE(p.numel() == 3);
  CHECK(p[2] == 7.0);

  Tensor<double> m({2, 3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  Tensor<double> mean = ops::mean_pool_rows(m);
  CHECK(mean[0] == doctest::Approx(2.0));
  CHECK(mean[1] == doctest::Approx(5.0));
}

TEST_CASE("l1 distance") {
  Tensor<double> a({3}, {1.0, 2.0, 3.0});
  CHECK(ops::l1_distance(a, a) == 0.0);
  Tensor<double> b({2}, {1.0, 0.0});
  Tensor<double> c({2}, {0.0, 1.0});
  CHECK(ops::l1_distance(b, c) == doctest::Approx(2.0));
  Rng rng(29);
  Tensor<double> x = random_tensor({37}, rng);
  Tensor<double> y = random_tensor({37}, rng);
  double want = 0;
  for (int64_t i = 0; i < 37; ++i) want += std::abs(x[i] - y[i]);
  CHECK(ops::l1_distance(x, y) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("conv_rows against direct loops") {
  Rng rng(31);
  Tensor<double> x = random_tensor({6, 4}, rng);
  Tensor<double> filt = random_tensor({3, 2, 4}, rng);
  Tensor<double> bias = random_tensor({3}, rng);
  Tensor<double> out = ops::conv_rows(x, filt, bias);
  REQUIRE(out.shape == std::vector<int64_t>{3, 5});
  for (int64_t f = 0; f < 3; ++f)
    for (int64_t p = 0; p < 5; ++p) {
      double acc = bias[f];
      for (int64_t i = 0; i < 2; ++i)
        for (int64_t j = 0; j < 4; ++j) acc += filt.at(f, i, j) * x.at(p + i, j);
      CHECK(out.at(f, p) == doctest::Approx(acc).epsilon(1e-12));
    }
  CHECK_THROWS(ops::conv_rows(Tensor<double>({1, 4}), filt, bias));  // fewer rows than window
}
