#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icl/errors.hpp"

namespace icl {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> v);

  // Same storage viewed with a different shape; rows*cols must be preserved.
  Matrix reshaped(std::size_t rows, std::size_t cols) const;
  Matrix select_rows(std::span<const std::size_t> indices) const;

  void fill(double v);

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);
// Sums over rows; result is 1 x cols.
Matrix column_sums(const Matrix& a);
// Concatenates matrices with equal row counts side by side.
Matrix hconcat(std::initializer_list<const Matrix*> parts);

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what);

// LU factorization with partial pivoting of a square matrix.
class LuDecomposition {
 public:
  explicit LuDecomposition(const Matrix& a);

  bool singular() const { return singular_; }
  // Solves A X = rhs.
  Matrix solve(const Matrix& rhs) const;
  Matrix inverse() const;

 private:
  std::size_t n_;
  Matrix lu_;
  std::vector<std::size_t> pivot_;
  bool singular_ = false;
};

// Solves X A = rhs for X (row-wise right division).
Matrix solve_right(const Matrix& rhs, const Matrix& a);

// Deterministic random stream. Streams never share state; parallel or nested
// work derives an independent child via split().
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  RngStream split(std::uint64_t index) const;

  double uniform();
  double normal();
  std::uint64_t next_u64() { return engine_(); }
  std::size_t below(std::size_t bound);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

enum class DistributionKind { standard_normal, uniform, exponential, gumbel };

struct Distribution {
  DistributionKind kind = DistributionKind::standard_normal;
  double a = 0.0;  // uniform low, exponential rate, gumbel location
  double b = 1.0;  // uniform high, gumbel scale

  static Distribution standard_normal() { return {DistributionKind::standard_normal, 0.0, 1.0}; }
  static Distribution uniform(double low, double high) { return {DistributionKind::uniform, low, high}; }
  static Distribution exponential(double rate) { return {DistributionKind::exponential, rate, 0.0}; }
  static Distribution gumbel(double location, double scale) { return {DistributionKind::gumbel, location, scale}; }

  void validate() const;
};

Matrix sample(RngStream& rng, const Distribution& dist, std::size_t rows, std::size_t cols);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One named block of parameters with its gradient.
struct ParamBlock {
  std::string name;
  std::span<double> values;
  std::span<const double> grad;
};

// Adam optimizer. Moment buffers are allocated on the first step and the
// block layout must stay the same afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config = {});

  void step(std::span<const ParamBlock> blocks);

  std::uint64_t step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace icl
