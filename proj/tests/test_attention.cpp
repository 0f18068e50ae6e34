#include <doctest.h>

#include <cmath>

#include "abcnn/attention.hpp"
#include "abcnn/conv_pool.hpp"
#include "abcnn/errors.hpp"
#include "test_support.hpp"

using namespace abcnn;

TEST_CASE("match_score examples") {
  CHECK(match_score(Vector{1, 2}, Vector{1, 2}) == 1.0);
  CHECK(match_score(Vector{1, 0}, Vector{0, 0}) == 0.5);
  CHECK(match_score(Vector{3, 4}, Vector{0, 0}) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK_THROWS_AS(match_score(Vector{1}, Vector{1, 2}), DimensionError);
}

TEST_CASE("attention matrix properties on random maps") {
  SeededRng rng(1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.next_below(5);
    const std::size_t c = 1 + rng.next_below(8);
    const Matrix f0 = testing::random_matrix(rng, d, c);
    const Matrix f1 = testing::random_matrix(rng, d, c);
    const Matrix a = attention_matrix(f0, f1);
    CHECK(a.transpose() == attention_matrix(f1, f0));
    for (double v : a.values()) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("identical maps give a dominant unit diagonal") {
  SeededRng rng(2);
  const Matrix f = testing::random_matrix(rng, 3, 6);
  const Matrix a = attention_matrix(f, f);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(a(i, i) == 1.0);
    for (std::size_t j = 0; j < 6; ++j)
      if (j != i) CHECK(a(i, j) < a(i, i));
  }
}

TEST_CASE("attention_matrix rejects width or dim mismatch") {
  CHECK_THROWS_AS(attention_matrix(Matrix(2, 3), Matrix(2, 4)), DimensionError);
  CHECK_THROWS_AS(attention_matrix(Matrix(2, 3), Matrix(3, 3)), DimensionError);
}

TEST_CASE("abcnn1_maps examples") {
  SeededRng rng(3);
  const Matrix w0 = testing::random_matrix(rng, 2, 3);
  const Matrix w1 = testing::random_matrix(rng, 2, 3);
  auto [f0, f1] = abcnn1_maps(Matrix::identity(3), w0, w1);
  CHECK(f0 == w0);
  CHECK(f1 == w1);

  auto [z0, z1] = abcnn1_maps(Matrix(3, 3), w0, w1);
  CHECK(z0 == Matrix(2, 3));
  CHECK(z1 == Matrix(2, 3));

  auto [h0, h1] = abcnn1_maps(Matrix(2, 2, {0.5, 0.25, 0.25, 0.5}), Matrix(1, 2, {1, 2}), Matrix(1, 2, {1, 2}));
  CHECK(h0 == Matrix(1, 2, {1.0, 1.25}));
}

TEST_CASE("abcnn1_maps is linear in A") {
  SeededRng rng(4);
  const Matrix w0 = testing::random_matrix(rng, 3, 4);
  const Matrix w1 = testing::random_matrix(rng, 3, 4);
  for (int t = 0; t < 10; ++t) {
    // Dyadic values keep every sum exact.
    Matrix a1(4, 4), a2(4, 4);
    for (double& v : a1.values()) v = static_cast<double>(rng.next_below(8)) / 8.0;
    for (double& v : a2.values()) v = static_cast<double>(rng.next_below(8)) / 8.0;
    Matrix w0d = w0, w1d = w1;
    for (double& v : w0d.values()) v = std::round(v * 16) / 16;
    for (double& v : w1d.values()) v = std::round(v * 16) / 16;
    auto [s0, s1] = abcnn1_maps(add(a1, a2), w0d, w1d);
    auto [p0, p1] = abcnn1_maps(a1, w0d, w1d);
    auto [q0, q1] = abcnn1_maps(a2, w0d, w1d);
    CHECK(s0 == add(p0, q0));
    CHECK(s1 == add(p1, q1));
  }
}

TEST_CASE("abcnn2_weights examples") {
  Matrix ones(7, 9);
  ones.fill(1.0);
  const AttentionWeights w = abcnn2_weights(ones);
  CHECK(w.left == Vector(7, 9.0));
  CHECK(w.right == Vector(9, 7.0));

  const AttentionWeights s = abcnn2_weights(Matrix(2, 2, {1, 2, 3, 4}));
  CHECK(s.left == Vector{3, 7});
  CHECK(s.right == Vector{4, 6});
}

TEST_CASE("attention_pool examples") {
  SeededRng rng(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t w = 1 + rng.next_below(4);
    const std::size_t c = w + rng.next_below(6);
    const Matrix fc = testing::random_matrix(rng, 3, c);
    const Matrix pooled = attention_pool(fc, Vector(c, 1.0 / static_cast<double>(w)), w);
    const Matrix mean = avg_pool_w(fc, w);
    for (std::size_t i = 0; i < mean.size(); ++i) CHECK(std::abs(pooled.values()[i] - mean.values()[i]) < 1e-12);
  }
  CHECK(attention_pool(testing::random_matrix(rng, 2, 9), Vector(9, 1.0), 3).cols() == 7);
  CHECK(attention_pool(Matrix(1, 3, {1, 2, 3}), Vector{1, 0.5, 2}, 3) == Matrix(1, 1, {8}));
  CHECK_THROWS_AS(attention_pool(Matrix(1, 3), Vector{1, 1}, 2), DimensionError);
  CHECK_THROWS_AS(attention_pool(Matrix(1, 2), Vector{1, 1}, 3), DimensionError);
}

TEST_CASE("attention_all_pool with uniform weights equals all_ap") {
  SeededRng rng(6);
  const Matrix fc = testing::random_matrix(rng, 3, 6);
  const Vector a = attention_all_pool(fc, Vector(6, 0.7));
  const Vector m = all_ap(fc);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a[i] - m[i]) < 1e-12);
}

TEST_CASE("dynamic_pool examples") {
  Matrix constant(5, 5);
  constant.fill(0.3);
  const Matrix grid = dynamic_pool(constant, 3);
  for (double v : grid.values()) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

  SeededRng rng(7);
  const Matrix a = testing::random_matrix(rng, 4, 4, 0.01, 1.0);
  CHECK(dynamic_pool(a, 4) == a);
  CHECK(dynamic_pool(Matrix(2, 2, {1, 2, 3, 4}), 1) == Matrix(1, 1, {2.5}));
  CHECK_THROWS_AS(dynamic_pool(a, 5), ArgumentError);
}

TEST_CASE("dynamic_pool chunks: first n mod g chunks are larger") {
  // 5 rows into 3 chunks: sizes 2, 2, 1.
  Matrix a(5, 5);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 5; ++c) a(r, c) = static_cast<double>(r);
  const Matrix g = dynamic_pool(a, 3);
  CHECK(g(0, 0) == 0.5);
  CHECK(g(1, 0) == 2.5);
  CHECK(g(2, 0) == 4.0);
}

TEST_CASE("dynamic_pool keeps the mean when g divides the side") {
  SeededRng rng(8);
  const Matrix a = testing::random_matrix(rng, 6, 6, 0.01, 1.0);
  const Matrix g = dynamic_pool(a, 3);
  double ma = 0, mg = 0;
  for (double v : a.values()) ma += v / 36.0;
  for (double v : g.values()) mg += v / 9.0;
  CHECK(std::abs(ma - mg) < 1e-12);
}

TEST_CASE("attention backward matches finite differences") {
  SeededRng rng(9);
  const Matrix l = testing::random_matrix(rng, 3, 4);
  const Matrix r = testing::random_matrix(rng, 3, 4);
  const Matrix probe = testing::random_matrix(rng, 4, 4);
  auto loss = [&](const Matrix& x, const Matrix& y) {
    const Matrix a = attention_matrix(x, y);
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * probe.values()[i];
    return s;
  };
  Matrix dl(3, 4), dr(3, 4);
  attention_matrix_backward(l, r, attention_matrix(l, r), probe, &dl, &dr);
  const double h = 1e-6;
  for (std::size_t i = 0; i < l.size(); ++i) {
    Matrix a = l, b = l;
    a.values()[i] += h;
    b.values()[i] -= h;
    CHECK(dl.values()[i] == doctest::Approx((loss(a, r) - loss(b, r)) / (2 * h)).epsilon(1e-6));
    Matrix c = r, d = r;
    c.values()[i] += h;
    d.values()[i] -= h;
    CHECK(dr.values()[i] == doctest::Approx((loss(l, c) - loss(l, d)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("attention backward is zero where columns coincide") {
  const Matrix f(2, 2, {1, 0, 2, 0});
  Matrix dl(2, 2), dr(2, 2);
  Matrix probe(2, 2);
  probe(0, 0) = 1.0;
  attention_matrix_backward(f, f, attention_matrix(f, f), probe, &dl, &dr);
  CHECK(dl == Matrix(2, 2));
  CHECK(dr == Matrix(2, 2));
}
