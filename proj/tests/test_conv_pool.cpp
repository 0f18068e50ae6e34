#include <doctest.h>

#include <cmath>

#include "abcnn/conv_pool.hpp"
#include "abcnn/errors.hpp"
#include "test_support.hpp"

using namespace abcnn;

namespace {

ConvParams random_conv(SeededRng& rng, std::size_t d1, std::size_t d_in, std::size_t w) {
  return ConvParams{w, testing::random_matrix(rng, d1, w * d_in), testing::random_matrix(rng, d1, 1)};
}

}  // namespace

TEST_CASE("wide convolution output width is s + w - 1") {
  SeededRng rng(1);
  const ConvParams p = random_conv(rng, 4, 3, 3);
  CHECK(wide_convolution(testing::random_matrix(rng, 3, 5), p).cols() == 7);
}

TEST_CASE("zero input with zero bias gives zero output") {
  SeededRng rng(2);
  ConvParams p = random_conv(rng, 4, 3, 3);
  p.bias.fill(0.0);
  CHECK(wide_convolution(Matrix(3, 5), p) == Matrix(4, 7));
}

TEST_CASE("hand-computed convolution") {
  const ConvParams p{2, Matrix(1, 2, {1, 1}), Matrix(1, 1)};
  const Matrix out = wide_convolution(Matrix(1, 2, {1, -1}), p);
  REQUIRE(out.cols() == 3);
  CHECK(out(0, 0) == doctest::Approx(0.761594).epsilon(1e-6));
  CHECK(out(0, 1) == 0.0);
  CHECK(out(0, 2) == doctest::Approx(-0.761594).epsilon(1e-6));
}

TEST_CASE("window layout: column o * d_in + r reads offset o, row r") {
  // d_in = 2, w = 2: weight picks row 1 of the newer column only.
  const ConvParams p{2, Matrix(1, 4, {0, 0, 0, 1}), Matrix(1, 1)};
  const Matrix in(2, 2, {0.1, 0.2, 0.3, 0.4});
  const Matrix out = wide_convolution(in, p);
  CHECK(out(0, 0) == std::tanh(0.3));
  CHECK(out(0, 1) == std::tanh(0.4));
  CHECK(out(0, 2) == 0.0);
}

TEST_CASE("convolution rejects mismatched input") {
  SeededRng rng(3);
  const ConvParams p = random_conv(rng, 2, 3, 3);
  CHECK_THROWS_AS(wide_convolution(Matrix(4, 5), p), DimensionError);
}

TEST_CASE("avg_pool_w examples") {
  SeededRng rng(4);
  CHECK(avg_pool_w(testing::random_matrix(rng, 3, 7), 3).cols() == 5);
  Matrix constant(2, 6);
  constant.fill(0.25);
  const Matrix pooled = avg_pool_w(constant, 3);
  for (double v : pooled.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(avg_pool_w(Matrix(1, 3, {1, 2, 3}), 2) == Matrix(1, 2, {1.5, 2.5}));
  CHECK_THROWS_AS(avg_pool_w(Matrix(1, 2), 3), DimensionError);
}

TEST_CASE("all_ap examples") {
  CHECK(all_ap(Matrix(2, 1, {3, 4})) == Vector{3, 4});
  CHECK(all_ap(Matrix(2, 2, {1, 0, 0, 1})) == Vector{0.5, 0.5});
  CHECK(all_ap(Matrix(2, 3, {2, 4, 6, 4, 8, 0})) == Vector{4, 4});
  CHECK(all_ap(Matrix(1, 4, {1, 3, 100, 100}), 2) == Vector{2});
}

TEST_CASE("width algebra s -> s+w-1 -> s on random shapes") {
  SeededRng rng(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t s = 1 + rng.next_below(12);
    const std::size_t w = 1 + rng.next_below(6);
    const ConvParams p = random_conv(rng, 2, 3, w);
    const Matrix conv = wide_convolution(testing::random_matrix(rng, 3, s), p);
    CHECK(conv.cols() == s + w - 1);
    CHECK(avg_pool_w(conv, w).cols() == s);
    for (double v : conv.values()) CHECK(std::abs(v) < 1.0);
  }
}

TEST_CASE("avg_pool_w over the full width equals all_ap") {
  SeededRng rng(6);
  const Matrix m = testing::random_matrix(rng, 4, 5);
  const Matrix pooled = avg_pool_w(m, 5);
  CHECK(pooled.column(0) == all_ap(m));
}

TEST_CASE("convolution backward matches finite differences") {
  SeededRng rng(7);
  const std::size_t d_in = 3;
  const std::size_t w = 3;
  ConvParams p = random_conv(rng, 2, d_in, w);
  Matrix input = testing::random_matrix(rng, d_in, 4);
  const Matrix probe = testing::random_matrix(rng, 2, 6);
  auto loss = [&](const ConvParams& q, const Matrix& x) {
    const Matrix out = wide_convolution(x, q);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * probe.values()[i];
    return s;
  };
  const Matrix out = wide_convolution(input, p);
  Matrix dw(p.weights.rows(), p.weights.cols());
  Matrix db(2, 1);
  Matrix dx(d_in, 4);
  wide_convolution_backward(input, p, out, probe, dw, db, &dx);

  const double h = 1e-6;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    ConvParams a = p, b = p;
    a.weights.values()[i] += h;
    b.weights.values()[i] -= h;
    CHECK(dw.values()[i] == doctest::Approx((loss(a, input) - loss(b, input)) / (2 * h)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < input.size(); ++i) {
    Matrix a = input, b = input;
    a.values()[i] += h;
    b.values()[i] -= h;
    CHECK(dx.values()[i] == doctest::Approx((loss(p, a) - loss(p, b)) / (2 * h)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < 2; ++i) {
    ConvParams a = p, b = p;
    a.bias.values()[i] += h;
    b.bias.values()[i] -= h;
    CHECK(db.values()[i] == doctest::Approx((loss(a, input) - loss(b, input)) / (2 * h)).epsilon(1e-6));
  }
}
