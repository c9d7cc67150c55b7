#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace seqloc {

using Vec = std::vector<double>;

// Dense row-major matrix. Sized once, then treated as a flat buffer by the
// optimizer and checkpoint code.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

// y += A x
inline void matvec_acc(const Matrix& A, const Vec& x, Vec& y) {
  assert(static_cast<int>(x.size()) == A.cols && static_cast<int>(y.size()) == A.rows);
  const double* a = A.a.data();
  for (int i = 0; i < A.rows; ++i) {
    double s = 0.0;
    const double* row = a + static_cast<std::size_t>(i) * A.cols;
    for (int j = 0; j < A.cols; ++j) s += row[j] * x[j];
    y[i] += s;
  }
}

// y += A^T x
inline void matTvec_acc(const Matrix& A, const Vec& x, Vec& y) {
  assert(static_cast<int>(x.size()) == A.rows && static_cast<int>(y.size()) == A.cols);
  const double* a = A.a.data();
  for (int i = 0; i < A.rows; ++i) {
    const double xi = x[i];
    const double* row = a + static_cast<std::size_t>(i) * A.cols;
    for (int j = 0; j < A.cols; ++j) y[j] += row[j] * xi;
  }
}

// A += u v^T
inline void outer_acc(Matrix& A, const Vec& u, const Vec& v) {
  assert(static_cast<int>(u.size()) == A.rows && static_cast<int>(v.size()) == A.cols);
  double* a = A.a.data();
  for (int i = 0; i < A.rows; ++i) {
    const double ui = u[i];
    double* row = a + static_cast<std::size_t>(i) * A.cols;
    for (int j = 0; j < A.cols; ++j) row[j] += ui * v[j];
  }
}

inline double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace seqloc
