#pragma once

#include <string>
#include <vector>

namespace dusev {

// Dense row-major matrix of 64-bit reals. The whole model is tiny, so the
// precision of doubles is worth more than the speed of floats: with doubles
// the finite-difference gradient checks are meaningful.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);
  Matrix(int rows, int cols, double fill);

  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  void fill(double value);
  void zero() { fill(0.0); }
  bool all_finite() const;

  std::string shape_str() const;  // e.g. "6x64"

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// C = A * B. Throws ShapeError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// C = A * B^T with B stored untransposed (rows of B are the columns of B^T).
Matrix matmul_bt(const Matrix& a, const Matrix& b);

// C = A^T * B with A stored untransposed.
Matrix matmul_at(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& a, const Matrix& b);
void scale_inplace(Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);

// a[r][c] += row[0][c] for every r; `row` must be 1 x a.cols().
void add_row_broadcast(Matrix& a, const Matrix& row);

// 1 x cols matrix holding per-column sums.
Matrix column_sums(const Matrix& a);

}  // namespace dusev
