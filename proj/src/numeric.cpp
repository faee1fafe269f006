#include "icl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace icl {

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length does not match its shape");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> v) {
  if (v.size() != rows_) throw ShapeError("column length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix Matrix::reshaped(std::size_t rows, std::size_t cols) const {
  if (rows * cols != data_.size()) {
    throw ShapeError("cannot reshape " + shape_str(*this));
  }
  return Matrix(rows, cols, data_);
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "matrix addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "matrix subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape " + shape_str(a) + " vs " + shape_str(b));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " times " + shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = a.cols();
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out = &c(i, 0);
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < m; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T times " + shape_str(b));
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t m = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* out = &c(i, 0);
      for (std::size_t j = 0; j < m; ++j) out[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " times " + shape_str(b) + "^T");
  }
  Matrix c(a.rows(), b.rows());
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c = a;
  auto cv = c.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < cv.size(); ++i) cv[i] *= bv[i];
  return c;
}

double trace(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("trace of non-square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double v) { return std::isfinite(v); });
}

Matrix column_sums(const Matrix& a) {
  Matrix s(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(0, j) += a(i, j);
  return s;
}

Matrix hconcat(std::initializer_list<const Matrix*> parts) {
  if (parts.size() == 0) return {};
  const std::size_t rows = (*parts.begin())->rows();
  std::size_t cols = 0;
  for (const Matrix* p : parts) {
    if (p->rows() != rows) throw ShapeError("hconcat: row counts differ");
    cols += p->cols();
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t offset = 0;
    for (const Matrix* p : parts) {
      const auto src = p->row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p->cols();
    }
  }
  return out;
}

LuDecomposition::LuDecomposition(const Matrix& a) : n_(a.rows()), lu_(a), pivot_(a.rows()) {
  if (a.rows() != a.cols()) throw ShapeError("LU of non-square matrix");
  for (std::size_t i = 0; i < n_; ++i) pivot_[i] = i;
  const double scale = std::max(max_abs(a), 1.0);
  for (std::size_t k = 0; k < n_; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n_; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        p = i;
      }
    }
    if (best <= 1e-14 * scale) {
      singular_ = true;
      return;
    }
    if (p != k) {
      for (std::size_t j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(p, j));
      std::swap(pivot_[k], pivot_[p]);
    }
    for (std::size_t i = k + 1; i < n_; ++i) {
      const double f = lu_(i, k) / lu_(k, k);
      lu_(i, k) = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n_; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
}

Matrix LuDecomposition::solve(const Matrix& rhs) const {
  if (singular_) throw NumericError("solve with a singular matrix");
  if (rhs.rows() != n_) throw ShapeError("LU solve: right-hand side has wrong row count");
  const std::size_t m = rhs.cols();
  Matrix x(n_, m);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < m; ++j) x(i, j) = rhs(pivot_[i], j);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < i; ++k) {
      const double l = lu_(i, k);
      if (l == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= l * x(k, j);
    }
  for (std::size_t ii = n_; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n_; ++k) {
      const double u = lu_(ii, k);
      if (u == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) x(ii, j) -= u * x(k, j);
    }
    const double diag = lu_(ii, ii);
    for (std::size_t j = 0; j < m; ++j) x(ii, j) /= diag;
  }
  return x;
}

Matrix LuDecomposition::inverse() const { return solve(Matrix::identity(n_)); }

Matrix solve_right(const Matrix& rhs, const Matrix& a) {
  // X A = R  <=>  A^T X^T = R^T
  LuDecomposition lu(transpose(a));
  return transpose(lu.solve(transpose(rhs)));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

RngStream RngStream::split(std::uint64_t index) const { return RngStream(seed_ ^ splitmix64(index)); }

double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

std::size_t RngStream::below(std::size_t bound) {
  return std::uniform_int_distribution<std::size_t>(0, bound - 1)(engine_);
}

void Distribution::validate() const {
  switch (kind) {
    case DistributionKind::standard_normal:
      return;
    case DistributionKind::uniform:
      if (!(a < b)) throw ConfigError("uniform distribution needs low < high");
      return;
    case DistributionKind::exponential:
      if (!(a > 0.0)) throw ConfigError("exponential distribution needs rate > 0");
      return;
    case DistributionKind::gumbel:
      if (!(b > 0.0)) throw ConfigError("gumbel distribution needs scale > 0");
      return;
  }
}

Matrix sample(RngStream& rng, const Distribution& dist, std::size_t rows, std::size_t cols) {
  dist.validate();
  Matrix out(rows, cols);
  auto& eng = rng.engine();
  auto fill = [&](auto&& distribution) {
    for (double& v : out.values()) v = distribution(eng);
  };
  switch (dist.kind) {
    case DistributionKind::standard_normal:
      fill(std::normal_distribution<double>(0.0, 1.0));
      break;
    case DistributionKind::uniform:
      fill(std::uniform_real_distribution<double>(dist.a, dist.b));
      break;
    case DistributionKind::exponential:
      fill(std::exponential_distribution<double>(dist.a));
      break;
    case DistributionKind::gumbel:
      // std::extreme_value_distribution is the Gumbel (maximum) law.
      fill(std::extreme_value_distribution<double>(dist.a, dist.b));
      break;
  }
  return out;
}

Adam::Adam(AdamConfig config) : config_(config) {}

void Adam::step(std::span<const ParamBlock> blocks) {
  for (const auto& b : blocks) {
    if (b.values.size() != b.grad.size()) {
      throw ShapeError("adam: parameter block '" + b.name + "' and its gradient differ in size");
    }
    for (double g : b.grad) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in block '" + b.name + "'");
    }
  }
  if (m_.empty()) {
    for (const auto& b : blocks) {
      m_.emplace_back(b.values.size(), 0.0);
      v_.emplace_back(b.values.size(), 0.0);
    }
  } else if (m_.size() != blocks.size()) {
    throw ShapeError("adam: parameter block count changed between steps");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (m.size() != b.values.size()) {
      throw ShapeError("adam: parameter block '" + b.name + "' changed size");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = b.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      b.values[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace icl
