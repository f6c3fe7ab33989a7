#pragma once

// The Weil representation rho_L of Mp_2(Z) on C[L^v/L], words in the
// generators S, T, and the two intertwining maps into rho_L: the isotropic
// embedding attached to W_1 and, for type III data, the graded tensor map
// from rho_{Gr2prim} (x) rho_{Gr4^-}.
//
// Phases are tracked as exact rationals (qvalue, bform) and converted to
// floating point once, at the final complex exponential.

#include "degtheta/degeneration.hpp"
#include "degtheta/errors.hpp"
#include "degtheta/exact.hpp"
#include "degtheta/lattice.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace degtheta {

using Cplx = std::complex<double>;

class CMat {
public:
  CMat() : rows_(0), cols_(0) {}
  CMat(std::size_t r, std::size_t c) : rows_(r), cols_(c), a_(r * c) {}

  static CMat identity(std::size_t n) {
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  friend CMat operator*(const CMat& a, const CMat& b) {
    CMat c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        Cplx f = a(i, k);
        if (f == Cplx(0)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += f * b(k, j);
      }
    return c;
  }

  std::vector<Cplx> apply(const std::vector<Cplx>& x) const {
    std::vector<Cplx> y(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  CMat adjoint() const {
    CMat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = std::conj((*this)(i, j));
    return t;
  }

  double max_abs_diff(const CMat& o) const {
    double m = 0;
    for (std::size_t i = 0; i < a_.size(); ++i) m = std::max(m, std::abs(a_[i] - o.a_[i]));
    return m;
  }

private:
  std::size_t rows_, cols_;
  std::vector<Cplx> a_;
};

inline Cplx unit_phase(const Rat& turns) {
  // e^{2 pi i * turns}, turns exact until here
  return std::polar(1.0, 2.0 * std::numbers::pi * turns.get_d());
}

struct WeilRep {
  FiniteQuadraticModule fqm;
  int b_plus = 0, b_minus = 0;

  std::size_t dim() const { return fqm.size(); }
};

inline WeilRep make_weil_rep(const Lattice& l) {
  if (!l.even) throw error("make_weil_rep: lattice must be even");
  auto [bp, bm] = signature(l);
  return WeilRep{discriminant_group(l), bp, bm};
}

// Exact phases of rho(T): qvalue(mu)/2 as a number of full turns.
inline std::vector<Rat> rho_t_turns(const WeilRep& w) {
  std::vector<Rat> t;
  t.reserve(w.dim());
  for (std::size_t i = 0; i < w.dim(); ++i) {
    Rat r = w.fqm.qvalue(i) / 2;
    r.canonicalize();
    t.push_back(r);
  }
  return t;
}

inline CMat rho_generator(const WeilRep& w, char g) {
  const std::size_t n = w.dim();
  CMat m(n, n);
  if (g == 'T') {
    for (std::size_t i = 0; i < n; ++i) m(i, i) = unit_phase(w.fqm.qvalue(i) / 2);
  } else if (g == 'S') {
    Cplx pref = std::polar(1.0, std::numbers::pi * (w.b_minus - w.b_plus) / 4.0) /
                std::sqrt(static_cast<double>(n));
    for (std::size_t la = 0; la < n; ++la)
      for (std::size_t mu = 0; mu < n; ++mu)
        m(la, mu) = pref * unit_phase(-w.fqm.bform(mu, la));
  } else {
    throw std::invalid_argument("rho_generator: generator must be 'T' or 'S'");
  }
  return m;
}

// Ordered product over a word in {S, T, T^-1}; letters 'S', 'T', 't'.
inline CMat rho_word(const WeilRep& w, std::string_view word) {
  CMat acc = CMat::identity(w.dim());
  CMat t = rho_generator(w, 'T');
  CMat s = rho_generator(w, 'S');
  CMat tinv = t.adjoint();  // diagonal unitary
  for (char c : word) {
    switch (c) {
      case 'S': acc = acc * s; break;
      case 'T': acc = acc * t; break;
      case 't': acc = acc * tinv; break;
      default: throw std::invalid_argument("rho_word: letters must be S, T or t");
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Lattice-quotient utilities used by the intertwiners.

namespace detail {

// Basis (rational rows, L-coordinates) of L^v intersected with the rational
// span of the rows of `sub`.
inline RatMat dual_in_subspace(const Lattice& l, const IntMat& sub) {
  const std::size_t n = l.rank;
  IntMat ann = kernel_saturated(sub);  // span(sub) = { x : ann x = 0 }
  RatMat ginv = inverse(to_rational(l.gram));
  IntMat m = clear_denominators(to_rational(ann) * ginv);
  IntMat k = kernel_saturated(m);
  RatMat out(k.rows(), n);
  for (std::size_t i = 0; i < k.rows(); ++i) {
    RatVec x = ginv.apply(to_rational(k.row(i)));
    for (std::size_t j = 0; j < n; ++j) out(i, j) = x[j];
  }
  return out;
}

// Stack two generating sets and return a lattice basis (canonical HNF scaled
// back by the common denominator).
inline RatMat lattice_union_basis(const RatMat& a, const RatMat& b) {
  const std::size_t n = a.cols();
  RatMat stacked(a.rows() + b.rows(), n);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) stacked(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) stacked(a.rows() + i, j) = b(i, j);
  Int den = 1;
  for (std::size_t i = 0; i < stacked.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) den = lcm(den, stacked(i, j).get_den());
  IntMat scaled(stacked.rows(), n);
  for (std::size_t i = 0; i < stacked.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Rat s = stacked(i, j) * Rat(den);
      s.canonicalize();
      scaled(i, j) = s.get_num();
    }
  IntMat h = hermite_rows(scaled);
  RatMat out(h.rows(), n);
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = Rat(h(i, j), den);
      out(i, j).canonicalize();
    }
  return out;
}

// Representatives (ambient rational vectors) of lattice(l1)/lattice(l0),
// l0 a finite-index sublattice of l1.
inline std::vector<RatVec> lattice_quotient_reps(const RatMat& l1, const RatMat& l0) {
  const std::size_t r = l1.rows();
  if (l0.rows() != r)
    throw invariant_inconsistency_error("lattice_quotient_reps: rank mismatch");
  if (r == 0) return {RatVec(l1.cols(), Rat(0))};
  IntMat c(r, r);
  RatMat l1t = l1.transposed();
  for (std::size_t i = 0; i < r; ++i) {
    auto sol = solve_rational(l1t, l0.row(i));
    if (!sol) throw invariant_inconsistency_error("lattice_quotient_reps: not a sublattice");
    for (std::size_t j = 0; j < r; ++j) {
      if ((*sol)[j].get_den() != 1)
        throw invariant_inconsistency_error("lattice_quotient_reps: non-integral inclusion");
      c(i, j) = (*sol)[j].get_num();
    }
  }
  SnfResult s = smith_normal_form(c);
  RatMat vinv = inverse(to_rational(s.v));
  std::vector<unsigned long> orders(r);
  std::size_t count = 1;
  for (std::size_t i = 0; i < r; ++i) {
    if (s.d(i, i) == 0)
      throw invariant_inconsistency_error("lattice_quotient_reps: infinite quotient");
    orders[i] = s.d(i, i).get_ui();
    count *= orders[i];
  }
  std::vector<RatVec> reps;
  reps.reserve(count);
  std::vector<unsigned long> digit(r, 0);
  for (std::size_t idx = 0; idx < count; ++idx) {
    RatVec w(r, Rat(0));
    for (std::size_t i = 0; i < r; ++i)
      if (digit[i])
        for (std::size_t j = 0; j < r; ++j) w[j] += Rat(digit[i]) * vinv(i, j);
    RatVec ambient(l1.cols(), Rat(0));
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t k = 0; k < l1.cols(); ++k) ambient[k] += w[j] * l1(j, k);
    reps.push_back(std::move(ambient));
    for (std::size_t i = r; i-- > 0;) {
      if (++digit[i] < orders[i]) break;
      digit[i] = 0;
    }
  }
  return reps;
}

}  // namespace detail

// The intertwiner iota: rho_{Gr2 L} -> rho_L attached to an isotropic W_1
// with W_2 = W_1^perp. Columns are 0/1 vectors with disjoint supports;
// column mu has a 1 at every class la + mu, la in (L^v cap W_1 + L)/L.
struct IsotropicEmbedding {
  Lattice gr2_lattice;                 // W_2 cap L / W_1 cap L with induced form
  IntMat gr2_lifts;                    // rows: lifts of the gr2 basis in L
  FiniteQuadraticModule gr2_fqm;
  FiniteQuadraticModule host_fqm;
  std::vector<std::vector<std::size_t>> column_support;  // per gr2 class: host classes
  CMat matrix;                         // |A_L| x |A_gr2|, entries 0/1

  std::size_t host_dim() const { return host_fqm.size(); }
  std::size_t gr2_dim() const { return gr2_fqm.size(); }
};

inline IsotropicEmbedding iota_isotropic(const Lattice& l, const IntMat& w1_rows,
                                         const IntMat* w2_expected = nullptr) {
  if (!(w1_rows * l.gram * w1_rows.transposed()).is_zero())
    throw not_isotropic_error("iota_isotropic: W_1 not isotropic");
  IntMat l1 = saturate_rowspace(w1_rows);
  IntMat l2 = orthogonal_complement(l, l1);
  if (w2_expected && !(hermite_rows(*w2_expected) == l2))
    throw not_perp_error("iota_isotropic: W_2 is not the orthogonal complement of W_1");

  IsotropicEmbedding e;
  e.gr2_lifts = detail::quotient_basis(l2, l1);
  e.gr2_lattice = make_lattice(e.gr2_lifts * l.gram * e.gr2_lifts.transposed(),
                               l.label.empty() ? "gr2" : l.label + ".gr2");
  e.gr2_fqm = FiniteQuadraticModule(e.gr2_lattice);
  e.host_fqm = FiniteQuadraticModule(l);

  RatMat d2 = detail::dual_in_subspace(l, l2);
  RatMat d1 = detail::dual_in_subspace(l, l1);
  RatMat lam0 = detail::lattice_union_basis(d1, to_rational(l2));
  std::vector<RatVec> reps = detail::lattice_quotient_reps(d2, lam0);
  if (reps.size() != e.gr2_fqm.size())
    throw invariant_inconsistency_error("iota_isotropic: class count mismatch");

  // subgroup (L^v cap W_1 + L)/L of A_L, as a set of host indices
  std::set<std::size_t> sub{e.host_fqm.index_of(RatVec(l.rank, Rat(0))).value()};
  for (std::size_t i = 0; i < d1.rows(); ++i) {
    auto gi = e.host_fqm.index_of(d1.row(i));
    if (!gi) throw invariant_inconsistency_error("iota_isotropic: dual vector not in L^v");
    for (;;) {
      std::set<std::size_t> next = sub;
      for (std::size_t a : sub) next.insert(e.host_fqm.add(a, *gi));
      if (next.size() == sub.size()) break;
      sub.swap(next);
    }
  }

  e.column_support.assign(e.gr2_fqm.size(), {});
  e.matrix = CMat(e.host_fqm.size(), e.gr2_fqm.size());
  std::set<std::size_t> seen;
  for (const RatVec& x : reps) {
    // gr2 class of x via its pairing with the lifted basis
    RatVec f(e.gr2_lifts.rows(), Rat(0));
    RatMat g = to_rational(l.gram);
    for (std::size_t i = 0; i < e.gr2_lifts.rows(); ++i) {
      RatVec gi = g.apply(to_rational(e.gr2_lifts.row(i)));
      f[i] = dot(x, gi);
    }
    RatVec y = e.gr2_lifts.rows()
                   ? inverse(to_rational(e.gr2_lattice.gram)).apply(f)
                   : RatVec{};
    auto cls = e.gr2_fqm.index_of(y);
    if (!cls) throw invariant_inconsistency_error("iota_isotropic: representative escapes dual");
    if (!seen.insert(*cls).second)
      throw invariant_inconsistency_error("iota_isotropic: class enumeration not bijective");
    auto base = e.host_fqm.index_of(x);
    if (!base) throw invariant_inconsistency_error("iota_isotropic: rep not in L^v");
    for (std::size_t la : sub) {
      std::size_t target = e.host_fqm.add(*base, la);
      e.column_support[*cls].push_back(target);
      e.matrix(target, *cls) = 1.0;
    }
  }
  return e;
}

// Type III graded tensor intertwiner rho_{Gr2prim} (x) rho_{(Gr4)^-} -> rho_L:
// e^la (x) e^nu goes to 0 unless la + N nu lies in (Gr2 V_Z)^v, in which case
// it maps to iota of that class. Column index is la * |A_gr4| + nu.
struct GradedTensorEmbedding {
  IsotropicEmbedding iso;
  Lattice prim_lattice;   // Gr2prim with induced (positive definite) form
  Lattice gr4_neg;        // rank one, form -Q_4
  FiniteQuadraticModule prim_fqm, gr4_fqm;
  std::vector<std::optional<std::size_t>> gr2_class_of_pair;  // per tensor col
  CMat matrix;            // |A_L| x (|A_prim| * |A_gr4|)
};

inline GradedTensorEmbedding iota_graded_tensor(const DegenerationData& d) {
  if (d.type != DegenType::type_iii)
    throw type_mismatch_error("iota_graded_tensor: requires a type III degeneration");
  GradedTensorEmbedding e;
  e.iso = iota_isotropic(d.host, d.w0);
  if (!(e.iso.gr2_lifts == d.gr2))
    throw invariant_inconsistency_error("iota_graded_tensor: inconsistent Gr_2 bases");
  e.prim_lattice = make_lattice(d.gr2prim_gram, "gr2prim");
  IntMat neg(1, 1);
  neg(0, 0) = -d.vol4;
  e.gr4_neg = make_lattice(neg, "gr4neg");
  e.prim_fqm = FiniteQuadraticModule(e.prim_lattice);
  e.gr4_fqm = FiniteQuadraticModule(e.gr4_neg);

  const std::size_t np = e.prim_fqm.size(), n4 = e.gr4_fqm.size();
  const std::size_t r2 = d.gr2.rows();
  e.matrix = CMat(e.iso.host_dim(), np * n4);
  e.gr2_class_of_pair.assign(np * n4, std::nullopt);
  for (std::size_t la = 0; la < np; ++la) {
    // lambda in gr2 coordinates
    RatVec lam(r2, Rat(0));
    const RatVec& rep = e.prim_fqm.representative(la);
    for (std::size_t i = 0; i < d.gr2prim.rows(); ++i)
      for (std::size_t j = 0; j < r2; ++j) lam[j] += rep[i] * Rat(d.gr2prim(i, j));
    for (std::size_t nu = 0; nu < n4; ++nu) {
      Rat t = e.gr4_fqm.representative(nu).empty() ? Rat(0) : e.gr4_fqm.representative(nu)[0];
      RatVec cand = lam;
      for (std::size_t j = 0; j < r2; ++j) cand[j] += t * Rat(d.n_gr4_to_gr2[j]);
      auto cls = e.iso.gr2_fqm.index_of(cand);
      std::size_t col = la * n4 + nu;
      if (!cls) continue;  // lands outside the dual: zero column
      e.gr2_class_of_pair[col] = *cls;
      for (std::size_t row : e.iso.column_support[*cls]) e.matrix(row, col) = 1.0;
    }
  }
  return e;
}

// Kronecker product with (i*n + j, k*n + l) indexing, used to test the
// intertwining property of the graded tensor map.
inline CMat kronecker(const CMat& a, const CMat& b) {
  CMat c(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      Cplx f = a(i, k);
      if (f == Cplx(0)) continue;
      for (std::size_t j = 0; j < b.rows(); ++j)
        for (std::size_t l = 0; l < b.cols(); ++l)
          c(i * b.rows() + j, k * b.cols() + l) = f * b(j, l);
    }
  return c;
}

}  // namespace degtheta
