#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "sdprune/errors.hpp"

namespace sdprune {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(const Vec& x, double alpha) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i];
  return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("sub: length mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("add: length mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline bool all_finite(const Vec& a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

/// Dense row-major matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() : rows_(0), cols_(0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(const Vec& d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  Vec apply(const Vec& x) const {
    if (x.size() != cols_) throw DimensionError("matrix apply: length mismatch");
    Vec y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      const double* row = data_.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  Vec apply_transpose(const Vec& x) const {
    if (x.size() != rows_) throw DimensionError("matrix apply_transpose: length mismatch");
    Vec y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = data_.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j) y[j] += row[j] * x[i];
    }
    return y;
  }

  DenseMatrix multiply(const DenseMatrix& other) const {
    if (cols_ != other.rows_) throw DimensionError("matrix multiply: inner dims differ");
    DenseMatrix r(rows_, other.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < other.cols_; ++j) r(i, j) += a * other(k, j);
      }
    return r;
  }

  DenseMatrix transposed() const {
    DenseMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_square() const { return rows_ == cols_; }

  /// Max |a_ij - a_ji| relative to max |a_ij|.
  double asymmetry_rel() const {
    if (!is_square()) return 1.0;
    double asym = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j)
        asym = std::max(asym, std::abs((*this)(i, j) - (*this)(j, i)));
    double scale = std::max(1.0, max_abs());
    return asym / scale;
  }

 private:
  std::size_t rows_, cols_;
  Vec data_;
};

struct EigenDecomposition {
  Vec eigenvalues;          // ascending, ties keep original index order
  DenseMatrix eigenvectors; // columns are unit eigenvectors, matching order
};

namespace detail {

inline void require_symmetric(const DenseMatrix& a, const char* who) {
  if (!a.is_square()) throw DimensionError(std::string(who) + ": matrix is not square");
  if (a.asymmetry_rel() > 1e-9)
    throw DimensionError(std::string(who) + ": matrix is not symmetric");
}

}  // namespace detail

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Adequate for the
/// small dense problems this library targets (d up to a couple thousand).
inline EigenDecomposition sym_eigen(const DenseMatrix& input) {
  detail::require_symmetric(input, "sym_eigen");
  const std::size_t n = input.rows();
  DenseMatrix a = input;
  // symmetrize exactly so rotations stay consistent
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = m;
    }
  DenseMatrix v = DenseMatrix::identity(n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  const double scale = std::max(1.0, input.max_abs());
  const double tol = 1e-14 * scale * static_cast<double>(n);
  for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // sort ascending, stable in the original column index
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
  }
  return out;
}

/// exp(-h*t) for symmetric h, via eigendecomposition.
inline DenseMatrix matrix_exp_scaled(const DenseMatrix& h, double t) {
  detail::require_symmetric(h, "matrix_exp_scaled");
  EigenDecomposition ed = sym_eigen(h);
  const std::size_t n = h.rows();
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += ed.eigenvectors(i, k) * std::exp(-ed.eigenvalues[k] * t) * ed.eigenvectors(j, k);
      out(i, j) = s;
    }
  return out;
}

/// exp(-h*t) reusing a precomputed eigendecomposition of h.
inline DenseMatrix matrix_exp_from_eigen(const EigenDecomposition& ed, double t) {
  const std::size_t n = ed.eigenvalues.size();
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += ed.eigenvectors(i, k) * std::exp(-ed.eigenvalues[k] * t) * ed.eigenvectors(j, k);
      out(i, j) = s;
    }
  return out;
}

/// One Gram-Schmidt step: orthonormal basis of span{u, v}.
inline std::pair<Vec, Vec> orthonormalize_pair(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) throw DimensionError("orthonormalize_pair: length mismatch");
  double nu = norm2(u);
  if (nu == 0.0) throw NumericError("orthonormalize_pair: first vector is zero");
  Vec e1 = scaled(u, 1.0 / nu);
  Vec r = v;
  axpy(-dot(e1, v), e1, r);
  double nr = norm2(r);
  if (nr < 1e-12 * norm2(v))
    throw NumericError("orthonormalize_pair: inputs are near-parallel");
  return {e1, scaled(r, 1.0 / nr)};
}

}  // namespace sdprune
