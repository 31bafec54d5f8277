#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "cka/errors.hpp"
#include "cka/rng.hpp"

namespace cka {

/// Dense row-major matrix of doubles. Constructors enforce rows, cols >= 1
/// and reject non-finite entries; in-place mutation through operator() is
/// the caller's responsibility.
class Matrix {
 public:
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    check_dims(rows, cols);
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_dims(rows, cols);
    if (data_.size() != rows * cols) {
      throw InvariantError("matrix data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw InvariantError("matrix entry is not finite");
    }
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw InvariantError("ragged row in matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(data));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  static void check_dims(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw InvariantError("matrix dimensions must be >= 1");
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

/// Dense vector of doubles, len >= 1, finite entries.
struct Vector {
  std::vector<double> data;

  explicit Vector(std::vector<double> values) : data(std::move(values)) {
    if (data.empty()) throw InvariantError("vector length must be >= 1");
    for (double v : data) {
      if (!std::isfinite(v)) throw InvariantError("vector entry is not finite");
    }
  }

  std::size_t len() const { return data.size(); }
  double operator[](std::size_t i) const { return data[i]; }
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

inline Matrix transpose(const Matrix& x) {
  Matrix out(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(c, r) = x(r, c);
  return out;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

/// Gram matrix X Xᵀ: pairwise inner products between rows. Symmetric PSD.
inline Matrix gram(const Matrix& x) {
  Matrix out(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = i; j < x.rows(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) s += x(i, c) * x(j, c);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

/// Subtracts each column's mean; every output column sums to ~0.
inline Matrix center_columns(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out(r, c) = x(r, c) - mean;
  }
  return out;
}

inline double frobenius_norm(const Matrix& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return std::sqrt(s);
}

/// Elementwise inner product Σᵢⱼ XᵢⱼYᵢⱼ; shapes must match.
inline double frobenius_inner(const Matrix& x, const Matrix& y) {
  require_same_shape(x, y, "frobenius_inner");
  double s = 0.0;
  const auto& xd = x.data();
  const auto& yd = y.data();
  for (std::size_t i = 0; i < xd.size(); ++i) s += xd[i] * yd[i];
  return s;
}

/// Row-major flattening; preserves Frobenius geometry exactly (same
/// summation order as frobenius_inner).
inline Vector vec(const Matrix& x) { return Vector(x.data()); }

inline constexpr double kNormGuard = 1e-30;

/// Cosine similarity of two vectors; raises on near-zero norms instead of
/// returning NaN.
inline double cosine(const Vector& a, const Vector& b) {
  if (a.len() != b.len()) {
    throw DimensionError("cosine: length mismatch " + std::to_string(a.len()) +
                         " vs " + std::to_string(b.len()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.len(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na <= kNormGuard || nb <= kNormGuard) {
    throw DegenerateInputError("cosine: vector norm below guard threshold");
  }
  return dot / (na * nb);
}

inline Matrix scaled(const Matrix& x, double factor) {
  Matrix out = x;
  for (double& v : out.data()) v *= factor;
  return out;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix out(rows, cols);
  for (double& v : out.data()) v = rng.normal();
  return out;
}

/// Random orthogonal matrix: modified Gram-Schmidt on a Gaussian matrix,
/// with one re-orthogonalization pass.
inline Matrix random_orthogonal(Rng& rng, std::size_t n) {
  Matrix q = random_matrix(rng, n, n);
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += q(i, j) * q(i, k);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
      norm = std::sqrt(norm);
      if (norm <= kNormGuard) {
        // Practically unreachable for Gaussian input; restart the column.
        for (std::size_t i = 0; i < n; ++i) q(i, j) = rng.normal();
        --j;
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
    }
  }
  return q;
}

}  // namespace cka
