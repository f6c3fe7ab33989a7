#pragma once

// Exact integer and rational linear algebra: Smith/Hermite normal forms,
// saturated kernels, rational solves. Everything here is arbitrary-precision
// (GMP); no floating point anywhere in this header.

#include <gmpxx.h>

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace degtheta {

using Int = mpz_class;
using Rat = mpq_class;
using RatVec = std::vector<Rat>;

template <typename T>
class Mat {
public:
  Mat() : rows_(0), cols_(0) {}
  Mat(std::size_t r, std::size_t c) : rows_(r), cols_(c), a_(r * c) {}
  Mat(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    a_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw std::invalid_argument("Mat: ragged rows");
      for (const auto& x : row) a_.push_back(x);
    }
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
  }

  std::vector<T> row(std::size_t i) const {
    return std::vector<T>(a_.begin() + i * cols_, a_.begin() + (i + 1) * cols_);
  }

  void swap_rows(std::size_t i, std::size_t j) {
    if (i == j) return;
    for (std::size_t k = 0; k < cols_; ++k) std::swap((*this)(i, k), (*this)(j, k));
  }
  void swap_cols(std::size_t i, std::size_t j) {
    if (i == j) return;
    for (std::size_t k = 0; k < rows_; ++k) std::swap((*this)(k, i), (*this)(k, j));
  }
  // row_i += f * row_j
  void add_row(std::size_t i, std::size_t j, const T& f) {
    for (std::size_t k = 0; k < cols_; ++k) (*this)(i, k) += f * (*this)(j, k);
  }
  // col_i += f * col_j
  void add_col(std::size_t i, std::size_t j, const T& f) {
    for (std::size_t k = 0; k < rows_; ++k) (*this)(k, i) += f * (*this)(k, j);
  }
  void negate_row(std::size_t i) {
    for (std::size_t k = 0; k < cols_; ++k) (*this)(i, k) = -(*this)(i, k);
  }

  Mat transposed() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("Mat: dimension mismatch");
    Mat c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const T& f = a(i, k);
        if (f == 0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += f * b(k, j);
      }
    return c;
  }

  std::vector<T> apply(const std::vector<T>& x) const {
    if (x.size() != cols_) throw std::invalid_argument("Mat: vector length mismatch");
    std::vector<T> y(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  bool is_zero() const {
    for (const auto& x : a_)
      if (x != 0) return false;
    return true;
  }

private:
  std::size_t rows_, cols_;
  std::vector<T> a_;
};

using IntMat = Mat<Int>;
using RatMat = Mat<Rat>;

inline RatMat to_rational(const IntMat& m) {
  RatMat r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
  return r;
}

inline RatVec to_rational(const std::vector<Int>& v) {
  RatVec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i];
  return r;
}

// Clears denominators row by row; the row span over Q is unchanged.
inline IntMat clear_denominators(const RatMat& m) {
  IntMat r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Int l = 1;
    for (std::size_t j = 0; j < m.cols(); ++j) l = lcm(l, m(i, j).get_den());
    for (std::size_t j = 0; j < m.cols(); ++j) {
      Rat s = m(i, j) * Rat(l);
      s.canonicalize();
      r(i, j) = s.get_num();
    }
  }
  return r;
}

struct SnfResult {
  IntMat u, d, v;  // u*m*v == d, |det u| = |det v| = 1, d diagonal, d_i | d_{i+1} >= 0
  std::size_t rank = 0;
};

namespace detail {

// One full diagonalization sweep with cumulative transforms.
inline void snf_diagonalize(IntMat& m, IntMat& u, IntMat& v) {
  const std::size_t r = m.rows(), c = m.cols();
  std::size_t t = 0;
  while (t < r && t < c) {
    std::size_t pi = t, pj = t;
    bool found = false;
    Int best;
    for (std::size_t i = t; i < r; ++i)
      for (std::size_t j = t; j < c; ++j)
        if (m(i, j) != 0) {
          Int a = abs(m(i, j));
          if (!found || a < best) {
            found = true;
            best = a;
            pi = i;
            pj = j;
          }
        }
    if (!found) break;
    m.swap_rows(t, pi);
    u.swap_rows(t, pi);
    m.swap_cols(t, pj);
    v.swap_cols(t, pj);
    if (m(t, t) < 0) {
      m.negate_row(t);
      u.negate_row(t);
    }
    bool clean = false;
    while (!clean) {
      clean = true;
      for (std::size_t i = t + 1; i < r; ++i)
        if (m(i, t) != 0) {
          Int q;
          mpz_fdiv_q(q.get_mpz_t(), m(i, t).get_mpz_t(), m(t, t).get_mpz_t());
          m.add_row(i, t, -q);
          u.add_row(i, t, -q);
          if (m(i, t) != 0) {
            m.swap_rows(t, i);
            u.swap_rows(t, i);
            clean = false;
          }
        }
      for (std::size_t j = t + 1; j < c; ++j)
        if (m(t, j) != 0) {
          Int q;
          mpz_fdiv_q(q.get_mpz_t(), m(t, j).get_mpz_t(), m(t, t).get_mpz_t());
          m.add_col(j, t, -q);
          v.add_col(j, t, -q);
          if (m(t, j) != 0) {
            m.swap_cols(t, j);
            v.swap_cols(t, j);
            clean = false;
          }
        }
      if (m(t, t) < 0) {
        m.negate_row(t);
        u.negate_row(t);
      }
    }
    ++t;
  }
}

}  // namespace detail

inline SnfResult smith_normal_form(const IntMat& input) {
  IntMat m = input;
  IntMat u = IntMat::identity(m.rows());
  IntMat v = IntMat::identity(m.cols());
  detail::snf_diagonalize(m, u, v);
  const std::size_t n = std::min(m.rows(), m.cols());
  // Enforce the divisibility chain; mixing columns may destroy diagonality,
  // so re-run the sweep until stable.
  for (;;) {
    bool ok = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (m(i, i) != 0 && m(i + 1, i + 1) != 0 && m(i + 1, i + 1) % m(i, i) != 0) {
        m.add_col(i, i + 1, 1);
        v.add_col(i, i + 1, 1);
        ok = false;
      }
    }
    if (ok) break;
    detail::snf_diagonalize(m, u, v);
  }
  SnfResult res{std::move(u), std::move(m), std::move(v)};
  for (std::size_t i = 0; i < n; ++i)
    if (res.d(i, i) != 0) ++res.rank;
  return res;
}

// Canonical row Hermite normal form: echelon, positive pivots, entries above
// a pivot reduced into [0, pivot). Zero rows are dropped.
inline IntMat hermite_rows(const IntMat& input) {
  IntMat a = input;
  const std::size_t r = a.rows(), c = a.cols();
  std::size_t rank = 0;
  for (std::size_t j = 0; j < c && rank < r; ++j) {
    std::size_t piv = rank;
    bool found = false;
    Int best;
    for (std::size_t i = rank; i < r; ++i)
      if (a(i, j) != 0) {
        Int v = abs(a(i, j));
        if (!found || v < best) {
          found = true;
          best = v;
          piv = i;
        }
      }
    if (!found) continue;
    a.swap_rows(rank, piv);
    bool clean = false;
    while (!clean) {
      clean = true;
      for (std::size_t i = rank + 1; i < r; ++i)
        if (a(i, j) != 0) {
          Int q;
          mpz_fdiv_q(q.get_mpz_t(), a(i, j).get_mpz_t(), a(rank, j).get_mpz_t());
          a.add_row(i, rank, -q);
          if (a(i, j) != 0) {
            a.swap_rows(rank, i);
            clean = false;
          }
        }
    }
    if (a(rank, j) < 0) a.negate_row(rank);
    for (std::size_t i = 0; i < rank; ++i) {
      Int q;
      mpz_fdiv_q(q.get_mpz_t(), a(i, j).get_mpz_t(), a(rank, j).get_mpz_t());
      a.add_row(i, rank, -q);
    }
    ++rank;
  }
  IntMat h(rank, c);
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t j = 0; j < c; ++j) h(i, j) = a(i, j);
  return h;
}

// Z-basis of ker(m) ∩ Z^cols, saturated, in canonical (Hermite) order.
// The kernel of an empty (0 x n) map is all of Z^n.
inline IntMat kernel_saturated(const IntMat& m) {
  if (m.rows() == 0) return IntMat::identity(m.cols());
  SnfResult s = smith_normal_form(m);
  const std::size_t c = m.cols();
  IntMat k(c - s.rank, c);
  for (std::size_t j = s.rank; j < c; ++j)
    for (std::size_t i = 0; i < c; ++i) k(j - s.rank, i) = s.v(i, j);
  return hermite_rows(k);
}

// Fraction-free determinant (Bareiss).
inline Int det(const IntMat& input) {
  if (input.rows() != input.cols()) throw std::invalid_argument("det: not square");
  const std::size_t n = input.rows();
  if (n == 0) return 1;
  IntMat a = input;
  Int sign = 1, prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a(k, k) == 0) {
      std::size_t piv = k;
      while (piv < n && a(piv, k) == 0) ++piv;
      if (piv == n) return 0;
      a.swap_rows(k, piv);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) {
        Int t = a(i, j) * a(k, k) - a(i, k) * a(k, j);
        mpz_divexact(a(i, j).get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
    prev = a(k, k);
  }
  return sign * a(n - 1, n - 1);
}

struct CokernelOrder {
  bool finite;
  Int order;  // |coker| when finite
};

// Order of Z^n / m Z^n for a square m; infinite iff det(m) = 0.
inline CokernelOrder cokernel_order(const IntMat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("cokernel_order: not square");
  SnfResult s = smith_normal_form(m);
  Int p = 1;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (s.d(i, i) == 0) return {false, 0};
    p *= s.d(i, i);
  }
  return {true, p};
}

// Exact solve a x = b; returns std::nullopt when inconsistent. Under-determined
// systems get the particular solution with free variables set to zero.
inline std::optional<RatVec> solve_rational(const RatMat& a_in, const RatVec& b_in) {
  if (b_in.size() != a_in.rows()) throw std::invalid_argument("solve_rational: size mismatch");
  RatMat a = a_in;
  RatVec b = b_in;
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<std::size_t> pivot_col;
  std::size_t row = 0;
  for (std::size_t j = 0; j < c && row < r; ++j) {
    std::size_t piv = row;
    while (piv < r && a(piv, j) == 0) ++piv;
    if (piv == r) continue;
    a.swap_rows(row, piv);
    std::swap(b[row], b[piv]);
    Rat inv = 1 / a(row, j);
    for (std::size_t k = j; k < c; ++k) a(row, k) *= inv;
    b[row] *= inv;
    for (std::size_t i = 0; i < r; ++i)
      if (i != row && a(i, j) != 0) {
        Rat f = a(i, j);
        for (std::size_t k = j; k < c; ++k) a(i, k) -= f * a(row, k);
        b[i] -= f * b[row];
      }
    pivot_col.push_back(j);
    ++row;
  }
  for (std::size_t i = row; i < r; ++i)
    if (b[i] != 0) return std::nullopt;
  RatVec x(c, Rat(0));
  for (std::size_t i = 0; i < pivot_col.size(); ++i) x[pivot_col[i]] = b[i];
  return x;
}

inline RatMat inverse(const RatMat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("inverse: not square");
  const std::size_t n = m.rows();
  RatMat a = m, inv = RatMat::identity(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t piv = j;
    while (piv < n && a(piv, j) == 0) ++piv;
    if (piv == n) throw std::domain_error("inverse: singular matrix");
    a.swap_rows(j, piv);
    inv.swap_rows(j, piv);
    Rat f = 1 / a(j, j);
    for (std::size_t k = 0; k < n; ++k) {
      a(j, k) *= f;
      inv(j, k) *= f;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (i != j && a(i, j) != 0) {
        Rat g = a(i, j);
        for (std::size_t k = 0; k < n; ++k) {
          a(i, k) -= g * a(j, k);
          inv(i, k) -= g * inv(j, k);
        }
      }
  }
  return inv;
}

// Saturation of the row span of a rational matrix inside Z^cols: the unique
// saturated lattice with the same Q-span. Computed by a double kernel.
inline IntMat saturate_rowspace(const RatMat& m) {
  IntMat cleared = clear_denominators(m);
  return kernel_saturated(kernel_saturated(cleared));
}

inline IntMat saturate_rowspace(const IntMat& m) { return saturate_rowspace(to_rational(m)); }

inline Rat dot(const RatVec& a, const RatVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  Rat s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace degtheta
