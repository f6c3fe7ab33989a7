#pragma once

// Lattice theta machinery: exact representation numbers by recursive box
// enumeration over a rational LDL^t decomposition (no floating-point pruning),
// holomorphic theta q-expansions, the non-holomorphic unary series R, the
// Eichler integral of a unary theta, and numerical slash residuals for
// vector-valued modularity checks.

#include "degtheta/errors.hpp"
#include "degtheta/exact.hpp"
#include "degtheta/lattice.hpp"
#include "degtheta/qseries.hpp"
#include "degtheta/special.hpp"
#include "degtheta/weilrep.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <string_view>
#include <vector>

namespace degtheta {

namespace detail {

struct Ldl {
  std::vector<Rat> d;               // positive pivots
  std::vector<std::vector<Rat>> c;  // c[i][j], j > i: Q(x) = sum_i d_i (x_i + sum_j c_ij x_j)^2
};

inline Ldl ldl_positive(const RatMat& g) {
  const std::size_t n = g.rows();
  RatMat a = g;
  Ldl out;
  out.d.resize(n);
  out.c.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (a(i, i) <= 0)
      throw not_positive_definite_error("ldl_positive: form not positive definite");
    out.d[i] = a(i, i);
    out.c[i].assign(n, Rat(0));
    for (std::size_t j = i + 1; j < n; ++j) out.c[i][j] = a(i, j) / a(i, i);
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = i + 1; k < n; ++k) a(j, k) -= a(i, j) * a(i, k) / a(i, i);
  }
  return out;
}

// Enumerates all v in offset + Z^n with Q(v) <= bound, invoking cb(v, Q(v)).
// Exact rational arithmetic; float only to seed the integer search window,
// with every candidate checked exactly.
inline void enumerate_shifted(const Ldl& ldl, const RatVec& offset, const Rat& bound,
                              const std::function<void(const RatVec&, const Rat&)>& cb) {
  const std::size_t n = ldl.d.size();
  if (bound < 0) return;
  if (n == 0) {
    RatVec v;
    Rat z(0);
    cb(v, z);
    return;
  }
  RatVec v(n, Rat(0));
  std::vector<Rat> partial(n + 1, Rat(0));  // accumulated value from levels > i
  std::function<void(std::size_t)> rec = [&](std::size_t level) {
    std::size_t i = level;
    Rat rem = bound - partial[i + 1];
    if (rem < 0) return;
    // s_i = sum_{j>i} c_ij v_j
    Rat s(0);
    for (std::size_t j = i + 1; j < n; ++j) s += ldl.c[i][j] * v[j];
    Rat t = offset[i] + s;  // v_i = offset_i + z, need d_i (t + z)^2 <= rem
    double radius = std::sqrt(Rat(rem / ldl.d[i]).get_d()) + 1e-9;
    double center = -t.get_d();
    long lo = static_cast<long>(std::floor(center - radius)) - 1;
    long hi = static_cast<long>(std::ceil(center + radius)) + 1;
    for (long z = lo; z <= hi; ++z) {
      Rat term = ldl.d[i] * (t + z) * (t + z);
      if (term > rem) continue;
      v[i] = offset[i] + z;
      partial[i] = partial[i + 1] + term;
      if (i == 0)
        cb(v, partial[0]);
      else
        rec(i - 1);
    }
  };
  rec(n - 1);
}

}  // namespace detail

// Exact counts of v in coset + L with Q(v,v) = 2m, for all m <= m_max.
inline std::map<Rat, long> rep_numbers(const Lattice& l, const RatVec& coset,
                                       const Rat& m_max) {
  if (m_max < 0) throw std::invalid_argument("rep_numbers: negative bound");
  std::map<Rat, long> counts;
  if (l.rank == 0) {
    counts[Rat(0)] = 1;
    return counts;
  }
  detail::Ldl ldl = detail::ldl_positive(to_rational(l.gram));
  Rat bound = 2 * m_max;
  detail::enumerate_shifted(ldl, coset, bound, [&](const RatVec&, const Rat& q) {
    Rat m = q / 2;
    m.canonicalize();
    counts[m] += 1;
  });
  return counts;
}

// Enumeration with vectors, used where the lifts themselves matter.
inline void enumerate_vectors(const Lattice& l, const RatVec& coset, const Rat& qq_max,
                              const std::function<void(const RatVec&, const Rat&)>& cb) {
  if (l.rank == 0) {
    if (qq_max >= 0) cb(RatVec{}, Rat(0));
    return;
  }
  detail::Ldl ldl = detail::ldl_positive(to_rational(l.gram));
  detail::enumerate_shifted(ldl, coset, qq_max, cb);
}

// Holomorphic theta of a positive definite even lattice, all classes,
// exponents m <= m_max; weight rk/2.
inline VVQExpansion theta_qexp(const Lattice& l, const Rat& m_max) {
  FiniteQuadraticModule a(l);
  VVQExpansion theta;
  theta.dim = a.size();
  theta.weight = Rat(l.rank, 2);
  theta.weight.canonicalize();
  theta.m_max = m_max;
  for (std::size_t cls = 0; cls < a.size(); ++cls) {
    auto counts = rep_numbers(l, a.representative(cls), m_max);
    for (const auto& [m, c] : counts)
      theta.add_term(m, cls, CoeffFn::constant(Cplx(static_cast<double>(c), 0.0)));
  }
  return theta;
}

// The non-holomorphic unary series of a rank-one positive definite (Gr_4, Q_4):
// R(tau)_nu = (4 pi sqrt y)^{-1} sum_{v in nu + L} beta32(2 pi y Q_4(v,v)) q^{-Q_4(v,v)/2}.
// Exponents are <= 0; coefficients are BetaHalf(1/4pi, 2 pi Q_4(v,v)). Classes
// are indexed by the discriminant group, whose canonical enumeration agrees
// with that of the negative lattice (-Q_4).
inline VVQExpansion unary_r_series(const Lattice& l4, const Rat& w_max) {
  if (l4.rank != 1) throw wrong_rank_error("unary_r_series: rank one lattice required");
  if (l4.gram(0, 0) <= 0)
    throw not_positive_definite_error("unary_r_series: Q_4 must be positive");
  FiniteQuadraticModule a(l4);
  VVQExpansion r;
  r.dim = a.size();
  r.weight = Rat(3, 2);  // transforms like weight 3/2 in rho_{(Gr_4)^-}
  r.m_max = 0;
  const double inv4pi = 1.0 / (4.0 * std::numbers::pi);
  for (std::size_t cls = 0; cls < a.size(); ++cls) {
    auto counts = rep_numbers(l4, a.representative(cls), w_max);
    for (const auto& [b, c] : counts) {
      Rat m = -b;
      m.canonicalize();
      double kappa = 2.0 * std::numbers::pi * 2.0 * b.get_d();  // 2 pi Q_4(v,v)
      r.add_term(m, cls, CoeffFn::beta_half(Cplx(c * inv4pi, 0.0), kappa));
    }
  }
  return r;
}

// (4 pi i)^{-1} int_{-conj(tau)}^{i inf} Theta(z) ((z+tau)/i)^{-3/2} dz along
// the vertical path z = -x + i(y+s). The constant term has the elementary
// closed form int_0^inf (2y+s)^{-3/2} ds = 2 (2y)^{-1/2}; positive exponents
// are integrated by adaptive quadrature with an explicit tail bound.
inline std::vector<Cplx> eichler_integral(const VVQExpansion& theta4, Cplx tau,
                                          double tol = 1e-10) {
  const double x = tau.real(), y = tau.imag();
  if (y <= 0) throw std::invalid_argument("eichler_integral: tau not in upper half plane");
  std::vector<Cplx> out(theta4.dim, Cplx(0));
  const double inv4pi = 1.0 / (4.0 * std::numbers::pi);
  for (const auto& [key, fn] : theta4.coeff) {
    if (!fn.pure_const())
      throw not_holomorphic_error("eichler_integral: theta input must be holomorphic");
    double b = key.m.get_d();
    if (b < 0) throw std::invalid_argument("eichler_integral: negative exponent");
    double j;
    if (b == 0.0) {
      j = 2.0 / std::sqrt(2.0 * y);
    } else {
      // tail beyond S: <= (2y+S)^{-3/2} e^{-2 pi b S} / (2 pi b)
      double s_max = 1.0;
      while ((std::pow(2 * y + s_max, -1.5) * std::exp(-2 * std::numbers::pi * b * s_max) /
              (2 * std::numbers::pi * b)) > tol * 0.25) {
        s_max *= 2.0;
        if (s_max > 1e8)
          throw truncation_error("eichler_integral: path truncation failure");
      }
      j = adaptive_simpson(
          [&](double s) {
            return std::exp(-2.0 * std::numbers::pi * b * s) * std::pow(2.0 * y + s, -1.5);
          },
          0.0, s_max, tol * 0.25);
    }
    Cplx phase = std::exp(Cplx(0.0, -2.0 * std::numbers::pi * b * x)) *
                 std::exp(-2.0 * std::numbers::pi * b * y);
    out[key.cls] += fn.c0 * inv4pi * phase * j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Slash residuals.

struct MpElement {
  std::array<long, 4> m{1, 0, 0, 1};  // a b c d
  Cplx phi{1.0, 0.0};                 // phi(tau), phi^2 = c tau + d
  Cplx gamma_tau;
};

// Evaluates the word (left-to-right product of S, T, T^-1) at tau, composing
// the metaplectic square-root branch phi_A(B tau) phi_B(tau). Principal branch
// throughout: phi_S(tau) = sqrt(tau), argument in (0, pi/2) on the upper half
// plane.
inline MpElement evaluate_word(std::string_view word, Cplx tau) {
  MpElement acc;
  acc.gamma_tau = tau;
  for (std::size_t i = word.size(); i-- > 0;) {
    std::array<long, 4> g;
    Cplx phi_g;
    Cplx t = acc.gamma_tau;
    switch (word[i]) {
      case 'S':
        g = {0, -1, 1, 0};
        phi_g = std::sqrt(t);
        break;
      case 'T':
        g = {1, 1, 0, 1};
        phi_g = 1.0;
        break;
      case 't':
        g = {1, -1, 0, 1};
        phi_g = 1.0;
        break;
      default:
        throw std::invalid_argument("evaluate_word: letters must be S, T or t");
    }
    acc.phi = phi_g * acc.phi;
    std::array<long, 4> m = acc.m;
    acc.m = {g[0] * m[0] + g[1] * m[2], g[0] * m[1] + g[1] * m[3],
             g[2] * m[0] + g[3] * m[2], g[2] * m[1] + g[3] * m[3]};
    acc.gamma_tau = (Cplx(static_cast<double>(g[0])) * t + Cplx(static_cast<double>(g[1]))) /
                    (Cplx(static_cast<double>(g[2])) * t + Cplx(static_cast<double>(g[3])));
  }
  return acc;
}

using VectorEvaluator = std::function<std::vector<Cplx>(Cplx)>;

// max over samples of || f(gamma tau) - phi(tau)^{2k} rho(word) f(tau) ||_inf
inline double slash_residual(const VectorEvaluator& f, const Rat& weight, const WeilRep& w,
                             std::string_view word, const std::vector<Cplx>& taus) {
  CMat rho = rho_word(w, word);
  double worst = 0.0;
  for (Cplx tau : taus) {
    MpElement el = evaluate_word(word, tau);
    std::vector<Cplx> lhs = f(el.gamma_tau);
    std::vector<Cplx> base = f(tau);
    std::vector<Cplx> rhs = rho.apply(base);
    // phi^{2k}: 2k is an integer for half-integral weight
    Rat two_k = 2 * weight;
    two_k.canonicalize();
    if (two_k.get_den() != 1)
      throw weight_mismatch_error("slash_residual: weight must be half-integral");
    Cplx aut = std::pow(el.phi, static_cast<double>(two_k.get_num().get_si()));
    for (std::size_t i = 0; i < lhs.size(); ++i)
      worst = std::max(worst, std::abs(lhs[i] - aut * rhs[i]));
  }
  return worst;
}

}  // namespace degtheta
