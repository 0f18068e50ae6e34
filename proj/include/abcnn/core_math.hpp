#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace abcnn {

using Vector = std::vector<double>;

// Dense row-major matrix of finite doubles. Feature maps use this type with
// one column per unit (word or phrase), so a d x s map holds s units.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  // Throws DimensionError if values.size() != rows * cols and ArgumentError
  // if any value is NaN or infinite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  static Matrix from_column(std::span<const double> column);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  Vector column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> v);

  Matrix transpose() const;
  void fill(double v);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix tanh(const Matrix& m);
// Rows of `top` followed by rows of `bottom`; both need the same column count.
Matrix stack_rows(const Matrix& top, const Matrix& bottom);

double dot(std::span<const double> x, std::span<const double> y);
double norm(std::span<const double> x);
double euclidean_distance(std::span<const double> x, std::span<const double> y);
// Returns 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> x, std::span<const double> y);

// Column distance helper for the attention code: returns
// ||a[:,i] - b[:,j]|| without materialising columns.
double column_distance(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j);

/// Deterministic 64-bit generator (SplitMix64).
///
/// state <- state + 0x9E3779B97F4A7C15, then the output is the state passed
/// through the SplitMix64 finaliser (xor-shift 30, multiply
/// 0xBF58476D1CE4E5B9, xor-shift 27, multiply 0x94D049BB133111EB,
/// xor-shift 31). Uniform doubles take the top 53 bits. All arithmetic is
/// fixed-width unsigned, so sequences are identical on every platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double next_double();
  // Uniform in [lo, hi); requires lo < hi.
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); requires n > 0. Rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t n);

  // Independent child generator; advances this generator once.
  SeededRng split();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// n values drawn uniformly from [lo, hi). Throws ArgumentError unless lo < hi
// and n >= 1.
Vector uniform_vector(SeededRng& rng, std::size_t n, double lo, double hi);

}  // namespace abcnn
