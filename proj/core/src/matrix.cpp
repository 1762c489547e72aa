#include "dusev/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "dusev/error.hpp"

namespace dusev {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
}

}  // namespace

Matrix::Matrix(int rows, int cols) : Matrix(rows, cols, 0.0) {}

Matrix::Matrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
  if (rows < 1 || cols < 1) {
    throw ShapeError("Matrix: dimensions must be >= 1, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + a.shape_str() + " * " + b.shape_str());
  }
  const int m = a.rows(), inner = a.cols(), n = b.cols();
  Matrix c(m, n);
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int k = 0; k < inner; ++k) {
      const double av = arow[k];
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_bt: shape mismatch " + a.shape_str() + " * " + b.shape_str() + "^T");
  }
  const int m = a.rows(), inner = a.cols(), n = b.rows();
  Matrix c(m, n);
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int j = 0; j < n; ++j) {
      const double* brow = b.row_ptr(j);
      double acc = 0.0;
      for (int k = 0; k < inner; ++k) acc += arow[k] * brow[k];
      crow[j] = acc;
    }
  }
  return c;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at: shape mismatch " + a.shape_str() + "^T * " + b.shape_str());
  }
  const int m = a.cols(), inner = a.rows(), n = b.cols();
  Matrix c(m, n);
  for (int k = 0; k < inner; ++k) {
    const double* arow = a.row_ptr(k);
    const double* brow = b.row_ptr(k);
    for (int i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.row_ptr(i);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  add_inplace(c, b);
  return c;
}

void add_inplace(Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add_inplace");
  double* pa = a.data().data();
  const double* pb = b.data().data();
  const std::size_t n = a.data().size();
  for (std::size_t i = 0; i < n; ++i) pa[i] += pb[i];
}

void scale_inplace(Matrix& a, double s) {
  for (double& x : a.data()) x *= s;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c = a;
  double* pc = c.data().data();
  const double* pb = b.data().data();
  const std::size_t n = c.data().size();
  for (std::size_t i = 0; i < n; ++i) pc[i] *= pb[i];
  return c;
}

void add_row_broadcast(Matrix& a, const Matrix& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row_broadcast: bias " + row.shape_str() + " does not match " +
                     a.shape_str());
  }
  const double* pr = row.row_ptr(0);
  for (int i = 0; i < a.rows(); ++i) {
    double* pa = a.row_ptr(i);
    for (int j = 0; j < a.cols(); ++j) pa[j] += pr[j];
  }
}

Matrix column_sums(const Matrix& a) {
  Matrix s(1, a.cols());
  double* ps = s.row_ptr(0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* pa = a.row_ptr(i);
    for (int j = 0; j < a.cols(); ++j) ps[j] += pa[j];
  }
  return s;
}

}  // namespace dusev
