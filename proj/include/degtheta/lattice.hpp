#pragma once

// Even lattices (V_Z, Q): validation, exact signature, discriminant groups
// L^v/L with their quadratic/bilinear forms, dual coset enumeration and
// orthogonal complements. All arithmetic is exact; discriminant form values
// are stored as rationals reduced into [0,2) and [0,1).

#include "degtheta/errors.hpp"
#include "degtheta/exact.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace degtheta {

struct Lattice {
  IntMat gram;
  std::size_t rank = 0;
  std::string label;
  bool even = false;

  RatVec zero_vector() const { return RatVec(rank, Rat(0)); }
};

inline Lattice make_lattice(IntMat gram, std::string label = "") {
  if (gram.rows() != gram.cols())
    throw not_symmetric_error("make_lattice: gram matrix not square");
  const std::size_t n = gram.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (gram(i, j) != gram(j, i))
        throw not_symmetric_error("make_lattice: gram matrix not symmetric");
  if (n > 0 && det(gram) == 0) throw degenerate_form_error("make_lattice: degenerate form");
  bool even = true;
  for (std::size_t i = 0; i < n; ++i)
    if (gram(i, i) % 2 != 0) even = false;
  return Lattice{std::move(gram), n, std::move(label), even};
}

// Exact (b+, b-) by symmetric rational congruence reduction; no floats.
inline std::pair<int, int> signature(const Lattice& l) {
  const std::size_t n = l.rank;
  RatMat a = to_rational(l.gram);
  int plus = 0, minus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a(i, i) == 0) {
      std::size_t j = i + 1;
      while (j < n && a(j, j) == 0) ++j;
      if (j < n) {
        a.swap_rows(i, j);
        a.swap_cols(i, j);
      } else {
        // all remaining diagonal entries vanish; mix in an off-diagonal one
        std::size_t k = i + 1;
        while (k < n && a(i, k) == 0) ++k;
        if (k == n) continue;  // zero row: degenerate input, skip
        a.add_row(i, k, Rat(1));
        a.add_col(i, k, Rat(1));
        if (a(i, i) == 0) {
          a.add_row(i, k, Rat(-2));
          a.add_col(i, k, Rat(-2));
        }
      }
    }
    if (a(i, i) > 0) ++plus; else ++minus;
    for (std::size_t j = i + 1; j < n; ++j)
      if (a(j, i) != 0) {
        Rat f = a(j, i) / a(i, i);
        a.add_row(j, i, -f);
        a.add_col(j, i, -f);
      }
  }
  return {plus, minus};
}

namespace detail {

inline Rat mod_interval(Rat x, long modulus) {
  // reduce into [0, modulus)
  Int num = x.get_num(), den = x.get_den();
  Int m = Int(modulus) * den;
  Int r;
  mpz_fdiv_r(r.get_mpz_t(), num.get_mpz_t(), m.get_mpz_t());
  Rat out(r, den);
  out.canonicalize();
  return out;
}

}  // namespace detail

// The finite quadratic module (A, q) = (L^v/L, Q mod 2Z) in the canonical
// coset order: lexicographic in Smith-coordinate digits.
class FiniteQuadraticModule {
public:
  FiniteQuadraticModule() = default;

  explicit FiniteQuadraticModule(const Lattice& l) : gram_(to_rational(l.gram)) {
    const std::size_t n = l.rank;
    SnfResult s = smith_normal_form(l.gram);
    u_ = s.u;
    gram_inv_ = n ? inverse(gram_) : RatMat();
    for (std::size_t i = 0; i < n; ++i) {
      Int d = s.d(i, i);
      if (d < 0) d = -d;
      all_orders_.push_back(d);
      if (d > 1) {
        orders_.push_back(d);
        cyclic_index_.push_back(i);
        RatVec g(n);
        for (std::size_t k = 0; k < n; ++k) {
          g[k] = Rat(s.v(k, i), d);
          g[k].canonicalize();
        }
        gens_.push_back(std::move(g));
      }
    }
    std::size_t count = 1;
    for (const Int& d : orders_) count *= d.get_ui();
    reps_.reserve(count);
    digits_.reserve(count);
    std::vector<unsigned long> digit(orders_.size(), 0);
    for (std::size_t idx = 0; idx < count; ++idx) {
      RatVec v(n, Rat(0));
      for (std::size_t k = 0; k < orders_.size(); ++k)
        for (std::size_t c = 0; c < n; ++c) v[c] += Rat(digit[k]) * gens_[k][c];
      for (std::size_t c = 0; c < n; ++c) v[c] = detail::mod_interval(v[c], 1);
      reps_.push_back(std::move(v));
      digits_.push_back(digit);
      // advance mixed-radix counter, last digit fastest (lexicographic order)
      for (std::size_t k = orders_.size(); k-- > 0;) {
        if (++digit[k] < orders_[k].get_ui()) break;
        digit[k] = 0;
      }
    }
    qvals_.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      qvals_.push_back(detail::mod_interval(form_value(reps_[i], reps_[i]), 2));
  }

  std::size_t size() const { return reps_.size(); }
  std::size_t ambient_rank() const { return gram_.rows(); }
  const std::vector<Int>& generator_orders() const { return orders_; }
  const RatVec& representative(std::size_t i) const { return reps_[i]; }

  // Q(mu, mu) mod 2Z in [0, 2)
  const Rat& qvalue(std::size_t i) const { return qvals_[i]; }

  // Q(mu, la) mod Z in [0, 1)
  Rat bform(std::size_t i, std::size_t j) const {
    return detail::mod_interval(form_value(reps_[i], reps_[j]), 1);
  }

  // Class index of an arbitrary dual vector; nullopt if v is not in L^v.
  std::optional<std::size_t> index_of(const RatVec& v) const {
    const std::size_t n = gram_.rows();
    if (v.size() != n) throw std::invalid_argument("index_of: wrong length");
    RatVec gv(n, Rat(0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) gv[i] += gram_(i, j) * v[j];
    std::vector<Int> k(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (gv[i].get_den() != 1) return std::nullopt;
      k[i] = gv[i].get_num();
    }
    std::size_t idx = 0;
    for (std::size_t t = 0; t < orders_.size(); ++t) {
      std::size_t i = cyclic_index_[t];
      Int s = 0;
      for (std::size_t j = 0; j < n; ++j) s += u_(i, j) * k[j];
      Int r;
      mpz_fdiv_r(r.get_mpz_t(), s.get_mpz_t(), orders_[t].get_mpz_t());
      idx = idx * orders_[t].get_ui() + r.get_ui();
    }
    return idx;
  }

  std::size_t add(std::size_t i, std::size_t j) const {
    std::size_t idx = 0;
    for (std::size_t t = 0; t < orders_.size(); ++t) {
      unsigned long d = orders_[t].get_ui();
      idx = idx * d + (digits_[i][t] + digits_[j][t]) % d;
    }
    return idx;
  }

  std::size_t negate(std::size_t i) const {
    std::size_t idx = 0;
    for (std::size_t t = 0; t < orders_.size(); ++t) {
      unsigned long d = orders_[t].get_ui();
      idx = idx * d + (d - digits_[i][t]) % d;
    }
    return idx;
  }

  Rat form_value(const RatVec& a, const RatVec& b) const {
    Rat s = 0;
    for (std::size_t i = 0; i < gram_.rows(); ++i)
      for (std::size_t j = 0; j < gram_.cols(); ++j) s += a[i] * gram_(i, j) * b[j];
    return s;
  }

private:
  RatMat gram_, gram_inv_;
  IntMat u_;
  std::vector<Int> all_orders_, orders_;
  std::vector<std::size_t> cyclic_index_;
  std::vector<RatVec> gens_;
  std::vector<RatVec> reps_;
  std::vector<std::vector<unsigned long>> digits_;
  std::vector<Rat> qvals_;
};

inline FiniteQuadraticModule discriminant_group(const Lattice& l) {
  return FiniteQuadraticModule(l);
}

inline std::vector<RatVec> dual_cosets(const Lattice& l) {
  FiniteQuadraticModule a(l);
  std::vector<RatVec> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a.representative(i));
  return out;
}

// Saturated basis of { v in L : Q(v, s) = 0 for all rows s of sub }.
inline IntMat orthogonal_complement(const Lattice& l, const IntMat& sub) {
  if (sub.rows() == 0) return IntMat::identity(l.rank);
  if (sub.cols() != l.rank)
    throw std::invalid_argument("orthogonal_complement: rank mismatch");
  return kernel_saturated(sub * l.gram);
}

}  // namespace degtheta
