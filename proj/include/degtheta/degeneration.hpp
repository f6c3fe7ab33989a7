#pragma once

// Degenerations attached to a (quasi-)unipotent lattice isometry T: the
// monodromy logarithm N, the shifted weight filtration W_0 .. W_4 as
// saturated sublattices, graded lattices with their induced forms, the
// type II/III tag and the boundary invariants r_1/r_2, discriminants,
// deg(Q_3) and Vol(Gr_4).

#include "degtheta/errors.hpp"
#include "degtheta/exact.hpp"
#include "degtheta/lattice.hpp"

#include <cstddef>
#include <numeric>
#include <vector>

namespace degtheta {

enum class DegenType { trivial, type_ii, type_iii };

struct MonodromyOperator {
  Lattice host;
  IntMat t;             // the original operator
  long cover_exponent;  // smallest e with (T^e - 1)^3 = 0
};

namespace detail {

inline bool is_isometry(const IntMat& t, const IntMat& gram) {
  return t.transposed() * gram * t == gram;
}

inline long euler_phi(long m) {
  long result = m, n = m;
  for (long p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      while (n % p == 0) n /= p;
      result -= result / p;
    }
  if (n > 1) result -= result / n;
  return result;
}

// Integer polynomials as coefficient vectors, low degree first.
using IPoly = std::vector<Int>;

inline IPoly poly_xn_minus_1(long n) {
  IPoly p(n + 1, Int(0));
  p[0] = -1;
  p[n] = 1;
  return p;
}

inline IPoly poly_divexact(const IPoly& num, const IPoly& den) {
  IPoly r = num, q(num.size() - den.size() + 1, Int(0));
  for (std::size_t i = q.size(); i-- > 0;) {
    Int c = r[i + den.size() - 1] / den.back();
    q[i] = c;
    for (std::size_t j = 0; j < den.size(); ++j) r[i + j] -= c * den[j];
  }
  return q;
}

inline IPoly cyclotomic(long m) {
  IPoly p = poly_xn_minus_1(m);
  for (long d = 1; d < m; ++d)
    if (m % d == 0) p = poly_divexact(p, cyclotomic(d));
  return p;
}

inline IntMat eval_poly(const IPoly& p, const IntMat& t) {
  const std::size_t n = t.rows();
  IntMat acc(n, n);
  for (std::size_t i = p.size(); i-- > 0;) {
    acc = acc * t;
    for (std::size_t k = 0; k < n; ++k) acc(k, k) += p[i];
  }
  return acc;
}

inline IntMat int_pow(const IntMat& t, long e) {
  IntMat acc = IntMat::identity(t.rows()), base = t;
  while (e > 0) {
    if (e & 1) acc = acc * base;
    base = base * base;
    e >>= 1;
  }
  return acc;
}

}  // namespace detail

// Validates the isometry property and determines the unipotency exponent e.
// Quasi-unipotent inputs are accepted; e is the lcm of the orders m of the
// root-of-unity eigenvalues, detected as singular cyclotomic values Phi_m(T).
inline MonodromyOperator make_monodromy(const Lattice& host, IntMat t) {
  if (t.rows() != host.rank || t.cols() != host.rank)
    throw std::invalid_argument("make_monodromy: size mismatch");
  if (!detail::is_isometry(t, host.gram))
    throw not_isometry_error("make_monodromy: T does not preserve the form");
  const long n = static_cast<long>(host.rank);
  long e = 1;
  for (long m = 1; m <= 2 * n * n + 2; ++m) {
    if (detail::euler_phi(m) > n) continue;
    if (det(detail::eval_poly(detail::cyclotomic(m), t)) == 0) e = std::lcm(e, m);
  }
  IntMat te = detail::int_pow(t, e);
  IntMat x = te;
  for (std::size_t i = 0; i < host.rank; ++i) x(i, i) -= 1;
  if (!(x * x * x).is_zero())
    throw not_quasi_unipotent_error(
        "make_monodromy: no exponent e with (T^e - 1)^3 = 0");
  return MonodromyOperator{host, std::move(t), e};
}

// N = log(T^e) = X - X^2/2 with X = T^e - 1; exact rational, N^3 = 0,
// skew with respect to Q.
inline RatMat monodromy_log(const MonodromyOperator& mo) {
  IntMat x = detail::int_pow(mo.t, mo.cover_exponent);
  for (std::size_t i = 0; i < mo.host.rank; ++i) x(i, i) -= 1;
  IntMat x2 = x * x;
  RatMat n(mo.host.rank, mo.host.rank);
  for (std::size_t i = 0; i < mo.host.rank; ++i)
    for (std::size_t j = 0; j < mo.host.rank; ++j) {
      n(i, j) = Rat(x(i, j)) - Rat(x2(i, j), 2);
      n(i, j).canonicalize();
    }
  // skewness Q(Nv,w) = -Q(v,Nw)
  RatMat g = to_rational(mo.host.gram);
  RatMat skew = n.transposed() * g;
  RatMat gn = g * n;
  for (std::size_t i = 0; i < mo.host.rank; ++i)
    for (std::size_t j = 0; j < mo.host.rank; ++j)
      if (skew(i, j) + gn(i, j) != 0)
        throw invariant_inconsistency_error("monodromy_log: N not skew w.r.t. Q");
  return n;
}

struct DegenerationData {
  Lattice host;
  RatMat n;
  DegenType type = DegenType::trivial;
  long cover_exponent = 1;

  // saturated row bases of W_k in V_Z (w4 is the identity)
  IntMat w0, w1, w2, w3, w4;

  // rows are lifts in V_Z of a basis of Gr_k
  IntMat gr0, gr1, gr2, gr3, gr4;

  IntMat q2;             // induced form on gr2
  IntMat q3;             // type II: Q(v, Nw) on gr3
  IntMat q4;             // type III: Q(v, N^2 w) on gr4
  IntMat gr2prim;        // rows: coefficients w.r.t. gr2 basis
  IntMat gr2prim_gram;
  std::vector<Int> n_gr4_to_gr2;  // type III: coords of N(gr4 gen) in gr2 basis

  Int r1, disc31, deg_q3;  // type II invariants
  Int r2, disc40, vol4;    // type III invariants
  bool lemma_even = false, lemma_image = false, lemma_dual = false;

  bool has_boundary() const { return type != DegenType::trivial; }
};

namespace detail {

// Lifts of a basis of the free quotient (span B_k) / (span B_sub), both rows
// saturated with span(B_sub) inside span(B_k).
inline IntMat quotient_basis(const IntMat& bk, const IntMat& bsub) {
  const std::size_t r2 = bk.rows(), r1 = bsub.rows();
  if (r1 == 0) return bk;
  // express rows of bsub in bk coordinates
  IntMat c(r1, r2);
  RatMat bkt = to_rational(bk).transposed();
  for (std::size_t i = 0; i < r1; ++i) {
    RatVec rhs = to_rational(bsub.row(i));
    auto sol = solve_rational(bkt, rhs);
    if (!sol) throw invariant_inconsistency_error("quotient_basis: not a sublattice");
    for (std::size_t j = 0; j < r2; ++j) {
      if ((*sol)[j].get_den() != 1)
        throw invariant_inconsistency_error("quotient_basis: non-integral coordinates");
      c(i, j) = (*sol)[j].get_num();
    }
  }
  SnfResult s = smith_normal_form(c);
  for (std::size_t i = 0; i < r1; ++i)
    if (s.d(i, i) != 1)
      throw invariant_inconsistency_error("quotient_basis: quotient has torsion");
  RatMat vinv = inverse(to_rational(s.v));
  IntMat comp(r2 - r1, r2);
  for (std::size_t i = r1; i < r2; ++i)
    for (std::size_t j = 0; j < r2; ++j) {
      if (vinv(i, j).get_den() != 1)
        throw invariant_inconsistency_error("quotient_basis: non-unimodular transform");
      comp(i - r1, j) = vinv(i, j).get_num();
    }
  return comp * bk;
}

// Coordinates of a rational vector with respect to integer basis rows.
inline RatVec coords_in_basis(const IntMat& basis, const RatVec& v) {
  auto sol = solve_rational(to_rational(basis).transposed(), v);
  if (!sol) throw invariant_inconsistency_error("coords_in_basis: vector not in span");
  return *sol;
}

inline IntMat pairing_matrix(const IntMat& rows_a, const IntMat& gram, const IntMat& rows_b) {
  return rows_a * gram * rows_b.transposed();
}

inline Int isqrt_exact(const Int& s) {
  Int r, rem;
  mpz_sqrtrem(r.get_mpz_t(), rem.get_mpz_t(), s.get_mpz_t());
  if (rem != 0) return Int(-1);
  return r;
}

inline bool is_positive_definite(const IntMat& g) {
  RatMat a = to_rational(g);
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    if (a(i, i) <= 0) return false;
    for (std::size_t j = i + 1; j < n; ++j)
      if (a(j, i) != 0) {
        Rat f = a(j, i) / a(i, i);
        a.add_row(j, i, -f);
        a.add_col(j, i, -f);
      }
  }
  return true;
}

}  // namespace detail

// Type tag plus the shifted weight filtration, everything saturated in V_Z.
inline DegenerationData classify_and_filter(const Lattice& host, const RatMat& n,
                                            long cover_exponent = 1) {
  DegenerationData d;
  d.host = host;
  d.n = n;
  d.cover_exponent = cover_exponent;
  const std::size_t r = host.rank;
  RatMat n2 = n * n;
  if (!(n2 * n).is_zero())
    throw not_nilpotent_error("classify_and_filter: N^3 != 0");
  d.w4 = IntMat::identity(r);
  if (n.is_zero()) {
    d.type = DegenType::trivial;
    return d;
  }
  if (n2.is_zero()) {
    d.type = DegenType::type_ii;
    d.w0 = IntMat(0, r);
    d.w1 = saturate_rowspace(n.transposed());
    d.w2 = kernel_saturated(clear_denominators(n));
    d.w3 = d.w4;
  } else {
    d.type = DegenType::type_iii;
    d.w0 = saturate_rowspace(n2.transposed());
    d.w1 = d.w0;
    IntMat ker = kernel_saturated(clear_denominators(n));
    IntMat im = clear_denominators(n.transposed());
    IntMat stacked(ker.rows() + im.rows(), r);
    for (std::size_t i = 0; i < im.rows(); ++i)
      for (std::size_t j = 0; j < r; ++j) stacked(i, j) = im(i, j);
    for (std::size_t i = 0; i < ker.rows(); ++i)
      for (std::size_t j = 0; j < r; ++j) stacked(im.rows() + i, j) = ker(i, j);
    d.w2 = saturate_rowspace(stacked);
    d.w3 = d.w2;
  }
  return d;
}

// Graded lattices Gr_k = (W_k cap V_Z)/(W_{k-1} cap V_Z) with canonical lifts
// and the induced forms Q_2, Q_3 (type II) or Q_4 (type III), the primitive
// part of Gr_2 and, for type III, N(Gr_4) inside Gr_2.
inline void compute_graded(DegenerationData& d) {
  if (d.type == DegenType::trivial)
    throw type_mismatch_error("compute_graded: trivial degeneration");
  const std::size_t r = d.host.rank;
  const IntMat& g = d.host.gram;

  if (d.type == DegenType::type_ii) {
    d.gr0 = IntMat(0, r);
    d.gr1 = d.w1;
    d.gr2 = detail::quotient_basis(d.w2, d.w1);
    d.gr3 = detail::quotient_basis(d.w4, d.w2);
    d.gr4 = IntMat(0, r);
  } else {
    d.gr0 = d.w0;
    d.gr1 = IntMat(0, r);
    d.gr2 = detail::quotient_basis(d.w2, d.w0);
    d.gr3 = IntMat(0, r);
    d.gr4 = detail::quotient_basis(d.w4, d.w2);
  }

  d.q2 = detail::pairing_matrix(d.gr2, g, d.gr2);

  auto apply_n = [&](const RatMat& nm, const IntMat& rows) {
    return (nm * to_rational(rows).transposed()).transposed();  // rows -> N(rows)
  };

  if (d.type == DegenType::type_ii) {
    // Q_3(v, w) = Q(v, Nw), integral and antisymmetric on gr3
    RatMat ngr3 = apply_n(d.n, d.gr3);
    RatMat p = to_rational(d.gr3) * to_rational(g) * ngr3.transposed();
    d.q3 = IntMat(d.gr3.rows(), d.gr3.rows());
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) {
        if (p(i, j).get_den() != 1)
          throw invariant_inconsistency_error("compute_graded: Q_3 not integral");
        d.q3(i, j) = p(i, j).get_num();
      }
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j)
        if (d.q3(i, j) != -d.q3(j, i))
          throw invariant_inconsistency_error("compute_graded: Q_3 not antisymmetric");
    d.gr2prim = IntMat::identity(d.gr2.rows());
    d.gr2prim_gram = d.q2;
  } else {
    RatMat n2 = d.n * d.n;
    RatMat n2gr4 = apply_n(n2, d.gr4);
    RatMat p = to_rational(d.gr4) * to_rational(g) * n2gr4.transposed();
    d.q4 = IntMat(1, 1);
    if (p(0, 0).get_den() != 1)
      throw invariant_inconsistency_error("compute_graded: Q_4 not integral");
    d.q4(0, 0) = p(0, 0).get_num();

    // primitive part: kernel of N : Gr_2 -> Gr_0
    RatMat ngr2 = apply_n(d.n, d.gr2);  // rows: N(gr2 lifts), live in W_0 over Q
    d.gr2prim = kernel_saturated(clear_denominators(ngr2.transposed()));
    d.gr2prim_gram = detail::pairing_matrix(d.gr2prim * d.gr2, g, d.gr2prim * d.gr2);

    // N(Gr_4) expressed in the gr2 basis; integrality is Lemma (ii) below
    RatMat ngr4 = apply_n(d.n, d.gr4);
    RatVec ng4 = ngr4.row(0);
    // subtract the W_0 component before solving in the gr2 basis
    IntMat span(d.gr0.rows() + d.gr2.rows(), r);
    for (std::size_t i = 0; i < d.gr2.rows(); ++i)
      for (std::size_t j = 0; j < r; ++j) span(i, j) = d.gr2(i, j);
    for (std::size_t i = 0; i < d.gr0.rows(); ++i)
      for (std::size_t j = 0; j < r; ++j) span(d.gr2.rows() + i, j) = d.gr0(i, j);
    RatVec coords = detail::coords_in_basis(span, ng4);
    d.n_gr4_to_gr2.assign(d.gr2.rows(), Int(0));
    d.lemma_image = true;
    for (std::size_t j = 0; j < d.gr2.rows(); ++j) {
      if (coords[j].get_den() != 1) d.lemma_image = false;
      else d.n_gr4_to_gr2[j] = coords[j].get_num();
    }
    if (!d.lemma_image)
      throw invariant_inconsistency_error("compute_graded: N(Gr_4) not in Gr_2 V_Z");
  }

  if (!detail::is_positive_definite(d.gr2prim_gram))
    throw invariant_inconsistency_error("compute_graded: primitive Gr_2 form not positive definite");
}

// r_1/disc/deg(Q_3) for type II, r_2/disc/Vol(Gr_4) for type III, with the
// defining integer identities and the rank-one lattice facts asserted.
inline void compute_invariants(DegenerationData& d) {
  if (d.type == DegenType::trivial)
    throw type_mismatch_error("compute_invariants: trivial degeneration has no invariants");
  const IntMat& g = d.host.gram;

  if (d.type == DegenType::type_ii) {
    // matrix of N : Gr_3 -> Gr_1 in the chosen bases
    const std::size_t k = d.gr3.rows();
    IntMat nmat(k, k);
    for (std::size_t i = 0; i < k; ++i) {
      RatVec img = d.n.apply(to_rational(d.gr3.row(i)));
      RatVec c = detail::coords_in_basis(d.gr1, img);
      for (std::size_t j = 0; j < k; ++j) {
        if (c[j].get_den() != 1)
          throw invariant_inconsistency_error("compute_invariants: N not integral Gr_3 -> Gr_1");
        nmat(i, j) = c[j].get_num();
      }
    }
    CokernelOrder co = cokernel_order(nmat);
    if (!co.finite)
      throw invariant_inconsistency_error("compute_invariants: N not injective on Gr_3");
    d.r1 = co.order;
    d.disc31 = abs(det(detail::pairing_matrix(d.gr3, g, d.gr1)));
    Int s = d.r1 * d.disc31;
    d.deg_q3 = detail::isqrt_exact(s);
    if (d.deg_q3 < 0)
      throw invariant_inconsistency_error("compute_invariants: r_1 * disc not a perfect square");
    if (abs(det(d.q3)) != s)
      throw invariant_inconsistency_error("compute_invariants: det Q_3 != r_1 * disc");
  } else {
    RatMat n2 = d.n * d.n;
    RatVec img = n2.apply(to_rational(d.gr4.row(0)));
    RatVec c = detail::coords_in_basis(d.gr0, img);
    if (c[0].get_den() != 1)
      throw invariant_inconsistency_error("compute_invariants: N^2 not integral Gr_4 -> Gr_0");
    if (c[0] == 0)
      throw invariant_inconsistency_error("compute_invariants: N^2 vanishes on Gr_4");
    d.r2 = abs(c[0].get_num());
    d.disc40 = abs(det(detail::pairing_matrix(d.gr4, g, d.gr0)));
    d.vol4 = d.q4(0, 0);
    if (d.vol4 <= 0)
      throw invariant_inconsistency_error("compute_invariants: Vol(Gr_4) not positive");
    if (d.vol4 != d.r2 * d.disc40)
      throw invariant_inconsistency_error("compute_invariants: Vol != r_2 * disc");
    d.lemma_even = (d.vol4 % 2 == 0);
    if (!d.lemma_even)
      throw invariant_inconsistency_error("compute_invariants: Gr_4 lattice not even");
    // Lemma (iii): N(Gr_4^v) contains (Gr_2^v) cap N(Gr_4 V); reduces to
    // gcd_j Q(N g4, gr2_j) dividing Vol(Gr_4).
    Int gcd_w = 0;
    for (std::size_t j = 0; j < d.gr2.rows(); ++j) {
      Int w = 0;
      for (std::size_t i = 0; i < d.gr2.rows(); ++i) w += d.n_gr4_to_gr2[i] * d.q2(i, j);
      gcd_w = gcd(gcd_w, w);
    }
    d.lemma_dual = (gcd_w != 0 && d.vol4 % gcd_w == 0);
    if (!d.lemma_dual)
      throw invariant_inconsistency_error("compute_invariants: dual image condition fails");
  }
}

inline DegenerationData analyze_degeneration(const MonodromyOperator& mo) {
  RatMat n = monodromy_log(mo);
  DegenerationData d = classify_and_filter(mo.host, n, mo.cover_exponent);
  if (d.type != DegenType::trivial) {
    compute_graded(d);
    compute_invariants(d);
  }
  return d;
}

}  // namespace degtheta
