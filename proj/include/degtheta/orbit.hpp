#pragma once

// R-split nilpotent-orbit models for type II and III degenerations: exact
// Hodge-norm formulas h(s_v) and ||v||^2 on W_2, Chern-form constants, the
// Kudla-Millson profile functions, truncated boundary theta sums (the Green
// function integrand), and the residue-slope fit against -log|t|^2.
//
// Models must be supplied already R-split: a type II model is pinned by a
// complex vector e^{2,1} = (re + i im)/sqrt(rho) with exact rational re, im
// and rho = 2 Q(re, N im) > 0; a type III model by v4 with s = Q(v4, N^2 v4).

#include "degtheta/boundary.hpp"
#include "degtheta/degeneration.hpp"
#include "degtheta/errors.hpp"
#include "degtheta/exact.hpp"
#include "degtheta/special.hpp"
#include "degtheta/thetaseries.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

namespace degtheta {

struct OrbitModel {
  DegenerationData deg;

  // type II
  RatVec e21_re, e21_im;
  Rat rho;  // 2 Q(re, N im), exact normalization of i Q(e^{2,1}, N e^{1,2}) = 1

  // type III
  RatVec v4;
  Rat s;  // Q(v4, N^2 v4)
  RatVec nv4, n2v4;

  IntMat w2_ann;  // x in W_2 iff w2_ann * x = 0
};

namespace detail {

inline Rat form(const Lattice& l, const RatVec& a, const RatVec& b) {
  RatVec gb = to_rational(l.gram).apply(b);
  return dot(a, gb);
}

}  // namespace detail

inline OrbitModel make_orbit_model_ii(const DegenerationData& d, RatVec re, RatVec im) {
  if (d.type != DegenType::type_ii)
    throw type_mismatch_error("make_orbit_model_ii: not type II data");
  OrbitModel m;
  m.deg = d;
  if (detail::form(d.host, re, re) != 0 || detail::form(d.host, im, im) != 0 ||
      detail::form(d.host, re, im) != 0)
    throw invariant_inconsistency_error("make_orbit_model_ii: e^{2,1} not isotropic");
  RatVec n_im = d.n.apply(im);
  m.rho = 2 * detail::form(d.host, re, n_im);
  m.rho.canonicalize();
  if (m.rho <= 0)
    throw invariant_inconsistency_error("make_orbit_model_ii: normalization not positive");
  m.e21_re = std::move(re);
  m.e21_im = std::move(im);
  // span(w2) = { x : ann x = 0 } with ann = kernel of the basis rows
  m.w2_ann = kernel_saturated(d.w2);
  return m;
}

inline OrbitModel make_orbit_model_iii(const DegenerationData& d, RatVec v4) {
  if (d.type != DegenType::type_iii)
    throw type_mismatch_error("make_orbit_model_iii: not type III data");
  OrbitModel m;
  m.deg = d;
  m.nv4 = d.n.apply(v4);
  m.n2v4 = d.n.apply(m.nv4);
  if (detail::form(d.host, v4, v4) != 0 || detail::form(d.host, v4, m.nv4) != 0)
    throw invariant_inconsistency_error("make_orbit_model_iii: v4 block not split");
  m.s = detail::form(d.host, v4, m.n2v4);
  m.s.canonicalize();
  if (m.s <= 0)
    throw invariant_inconsistency_error("make_orbit_model_iii: Q(v4, N^2 v4) not positive");
  m.v4 = std::move(v4);
  m.w2_ann = kernel_saturated(d.w2);
  return m;
}

// Exact quadratic data behind the Hodge norm of v in W_{2,R}: everything is
// rational until evaluated at a specific z.
struct HodgeNormData {
  Rat q_vv;      // Q(v, v)
  Rat a_abs_sq;  // type II: |a|^2.  type III: a^2
  Rat b_sq, ab;  // type III only: b^2 and a*b
  DegenType type;

  // h(s_v) at z
  double h(Cplx z) const {
    double y = z.imag();
    if (type == DegenType::type_ii) return a_abs_sq.get_d() / y;
    double x = z.real();
    // ((b - a x)/y)^2 + a^2
    double num = b_sq.get_d() - 2.0 * ab.get_d() * x + a_abs_sq.get_d() * x * x;
    return num / (y * y) + a_abs_sq.get_d();
  }
  double norm_sq(Cplx z) const { return q_vv.get_d() + 2.0 * h(z); }
};

inline HodgeNormData hodge_norm_data(const OrbitModel& m, const RatVec& v) {
  // membership: w2_ann * v == 0
  for (std::size_t i = 0; i < m.w2_ann.rows(); ++i) {
    Rat acc = 0;
    for (std::size_t j = 0; j < m.w2_ann.cols(); ++j) acc += Rat(m.w2_ann(i, j)) * v[j];
    if (acc != 0) throw not_in_w2_error("hodge_norm: vector not in W_2");
  }
  HodgeNormData out;
  out.type = m.deg.type;
  out.q_vv = detail::form(m.deg.host, v, v);
  if (m.deg.type == DegenType::type_ii) {
    // v = v_2 + a e^{1,0} + conj(a) e^{0,1}; alpha = -2 Q(v, im)/rho,
    // beta = 2 Q(v, re)/rho; |a|^2 = (alpha^2 + beta^2) rho / 4
    Rat alpha = -2 * detail::form(m.deg.host, v, m.e21_im) / m.rho;
    Rat beta = 2 * detail::form(m.deg.host, v, m.e21_re) / m.rho;
    out.a_abs_sq = (alpha * alpha + beta * beta) * m.rho / 4;
    out.a_abs_sq.canonicalize();
  } else if (m.deg.type == DegenType::type_iii) {
    // v = v_U + alpha N v4 + beta N^2 v4; a = alpha sqrt(s), b = beta sqrt(s)
    Rat beta = detail::form(m.deg.host, v, m.v4) / m.s;
    Rat alpha = -detail::form(m.deg.host, v, m.nv4) / m.s;
    out.a_abs_sq = alpha * alpha * m.s;
    out.b_sq = beta * beta * m.s;
    out.ab = alpha * beta * m.s;
    out.a_abs_sq.canonicalize();
    out.b_sq.canonicalize();
    out.ab.canonicalize();
  } else {
    throw type_mismatch_error("hodge_norm: trivial degeneration");
  }
  return out;
}

struct HodgeNorm {
  double norm_sq, h;
};

inline HodgeNorm hodge_norm(const OrbitModel& m, const RatVec& v, Cplx z) {
  HodgeNormData d = hodge_norm_data(m, v);
  double h = d.h(z);
  return HodgeNorm{d.q_vv.get_d() + 2.0 * h, h};
}

// ||e_z^{2,0}||^2: 2 Im z for type II, 2 Im(z)^2 for type III.
inline double hodge_norm_e20(const OrbitModel& m, Cplx z) {
  double y = z.imag();
  return m.deg.type == DegenType::type_ii ? 2.0 * y : 2.0 * y * y;
}

// The scalar multiplying i dz ^ dzbar / Im(z)^2 in the Chern form.
inline double chern_form_scale(DegenType t) {
  if (t == DegenType::type_ii) return 1.0 / (8.0 * std::numbers::pi);
  if (t == DegenType::type_iii) return 1.0 / (4.0 * std::numbers::pi);
  throw type_mismatch_error("chern_form_scale: trivial degeneration");
}

inline double km_profile_ii(Cplx a) {
  double n = std::norm(a);
  return std::exp(-std::numbers::pi * n) * (std::numbers::pi * n - 1.0);
}

inline double km_profile_iii(double b) {
  double n = b * b;
  return std::exp(-2.0 * std::numbers::pi * n) * (4.0 * std::numbers::pi * n - 1.0);
}

// ---------------------------------------------------------------------------
// Truncated Green-function integrand Theta'(y)_{m,mu} at a puncture point t:
// the sum of nu(v) = exp(-2 pi y h(s_v)) over v in (mu + V_Z) cap W_2 with
// Q(v,v) = 2m. Im z = -log|t| / 2 pi.

namespace detail {

// particular rational solution of x = mu mod Z^n with x in span(W_2), if any
inline std::optional<RatVec> w2_coset_point(const OrbitModel& m, const RatVec& mu) {
  const IntMat& ann = m.w2_ann;
  const std::size_t n = m.deg.host.rank;
  if (ann.rows() == 0) return mu;
  // need integer k with ann (mu + k) = 0
  RatVec c(ann.rows(), Rat(0));
  for (std::size_t i = 0; i < ann.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) c[i] -= Rat(ann(i, j)) * mu[j];
  for (auto& x : c)
    if (x.get_den() != 1) return std::nullopt;
  SnfResult s = smith_normal_form(ann);
  std::vector<Rat> uc(ann.rows(), Rat(0));
  for (std::size_t i = 0; i < ann.rows(); ++i)
    for (std::size_t j = 0; j < ann.rows(); ++j) uc[i] += Rat(s.u(i, j)) * c[j];
  RatVec y(n, Rat(0));
  for (std::size_t i = 0; i < ann.rows() && i < n; ++i) {
    if (s.d(i, i) != 0) {
      Rat q = uc[i] / Rat(s.d(i, i));
      if (q.get_den() != 1) return std::nullopt;
      y[i] = q;
    } else if (uc[i] != 0) {
      return std::nullopt;
    }
  }
  for (std::size_t i = ann.rows(); i < n; ++i) y[i] = 0;
  RatVec k = to_rational(s.v).apply(y);
  RatVec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = mu[i] + k[i];
  return out;
}

}  // namespace detail

struct ThetaPrimeOptions {
  double tol = 1e-13;          // dropped-term weight threshold
  long max_terms = 40000000;   // hard cap across the whole sum
};

// Theta'(y)_{m,mu} with the puncture given by z = x_z + i Y, Y = -log|t|/2pi.
// mu is a class index of the discriminant group of the host lattice. The
// v = 0 term is included when (m, mu) = (0, 0).
inline double theta_prime_at(const OrbitModel& m, double y, double big_y, double x_z,
                             const Rat& mm, std::size_t mu_index,
                             const FiniteQuadraticModule& host_fqm,
                             const ThetaPrimeOptions& opt = {}) {
  if (big_y <= 0) throw std::invalid_argument("theta_prime: Im z must be positive");
  const double gauss_cut = std::log(1.0 / opt.tol);
  const Lattice& host = m.deg.host;
  auto x0 = detail::w2_coset_point(m, host_fqm.representative(mu_index));
  if (!x0) return 0.0;
  long budget = opt.max_terms;
  double total = 0.0;

  auto spend = [&](long k) {
    budget -= k;
    if (budget < 0) throw truncation_error("theta_prime: term budget exceeded");
  };

  if (m.deg.type == DegenType::type_ii) {
    // W_2 Z = W_1 Z (+) <gr2 lifts>; the class part fixes Q(v,v), the W_1 part
    // is a 2D Gaussian sum in the |a|^2 form.
    const IntMat& w1 = m.deg.w1;
    const IntMat& g2l = m.deg.gr2;
    const std::size_t r2 = g2l.rows();
    // alpha, beta functionals: alpha(v) = -2 Q(v, im)/rho, beta(v) = 2 Q(v, re)/rho
    auto alpha_of = [&](const RatVec& v) { return -2 * detail::form(host, v, m.e21_im) / m.rho; };
    auto beta_of = [&](const RatVec& v) { return 2 * detail::form(host, v, m.e21_re) / m.rho; };

    // enumerate class lifts with Q = 2m
    std::vector<RatVec> lifts;
    if (r2 == 0) {
      if (detail::form(host, *x0, *x0) == 2 * mm) lifts.push_back(*x0);
    } else {
      RatMat q2r = to_rational(m.deg.q2);
      RatVec f(r2, Rat(0));
      for (std::size_t j = 0; j < r2; ++j)
        f[j] = detail::form(host, *x0, to_rational(g2l.row(j)));
      RatVec o = inverse(q2r).apply(f);
      Rat c0 = detail::form(host, *x0, *x0);
      Rat shift = dot(o, q2r.apply(o));
      Rat target = 2 * mm - c0 + shift;
      if (target >= 0) {
        detail::Ldl ldl = detail::ldl_positive(q2r);
        detail::enumerate_shifted(ldl, o, target, [&](const RatVec& w, const Rat& q) {
          if (q != target) return;
          RatVec v = *x0;
          for (std::size_t j = 0; j < r2; ++j) {
            Rat b = w[j] - o[j];  // the integer part
            for (std::size_t k = 0; k < host.rank; ++k) v[k] += b * Rat(g2l(j, k));
          }
          lifts.push_back(std::move(v));
        });
      }
    }
    // 2D Gaussian over W_1 for each lift
    const std::size_t r1 = w1.rows();
    std::vector<Rat> al(r1), be(r1);
    for (std::size_t i = 0; i < r1; ++i) {
      RatVec wi = to_rational(w1.row(i));
      al[i] = alpha_of(wi);
      be[i] = beta_of(wi);
    }
    RatMat ga(r1, r1);  // |a|^2 form: (rho/4)(alpha alpha^t + beta beta^t)
    for (std::size_t i = 0; i < r1; ++i)
      for (std::size_t j = 0; j < r1; ++j) ga(i, j) = m.rho / 4 * (al[i] * al[j] + be[i] * be[j]);
    detail::Ldl ldl_a = detail::ldl_positive(ga);
    const double hmax = big_y * gauss_cut / (2.0 * std::numbers::pi * y);
    for (const RatVec& v : lifts) {
      Rat a0 = alpha_of(v), b0 = beta_of(v);
      // offset o solves ga o = m0 with m0_i = (rho/4)(al_i a0 + be_i b0)
      RatVec m0(r1, Rat(0));
      for (std::size_t i = 0; i < r1; ++i) m0[i] = m.rho / 4 * (al[i] * a0 + be[i] * b0);
      RatVec o = inverse(ga).apply(m0);
      Rat cval = m.rho / 4 * (a0 * a0 + b0 * b0) - dot(o, ga.apply(o));
      Rat bound = Rat(hmax) - cval;
      long seen = 0;
      if (bound >= 0)
        detail::enumerate_shifted(ldl_a, o, bound, [&](const RatVec&, const Rat& q) {
          double a_sq = (q + cval).get_d();
          total += std::exp(-2.0 * std::numbers::pi * y * a_sq / big_y);
          ++seen;
        });
      spend(seen);
    }
    return total;
  }

  if (m.deg.type != DegenType::type_iii)
    throw type_mismatch_error("theta_prime: trivial degeneration");

  // type III: adapted sublattice <Y_prim, v_n, v_0> of finite index in W_2 Z.
  const Lattice& l = host;
  IntMat prim_sat = kernel_saturated(clear_denominators(m.deg.n));
  IntMat y_prim = detail::quotient_basis(prim_sat, m.deg.w0);
  const std::size_t np = y_prim.rows();
  RatVec v_n(l.rank, Rat(0));
  for (std::size_t i = 0; i < m.deg.gr2.rows(); ++i)
    for (std::size_t k = 0; k < l.rank; ++k)
      v_n[k] += Rat(m.deg.n_gr4_to_gr2[i]) * Rat(m.deg.gr2(i, k));
  RatVec v_0 = to_rational(m.deg.w0.row(0));

  RatMat sub(np + 2, l.rank);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t k = 0; k < l.rank; ++k) sub(i, k) = Rat(y_prim(i, k));
  for (std::size_t k = 0; k < l.rank; ++k) sub(np, k) = v_n[k];
  for (std::size_t k = 0; k < l.rank; ++k) sub(np + 1, k) = v_0[k];
  std::vector<RatVec> cosets =
      detail::lattice_quotient_reps(to_rational(m.deg.w2), sub);

  auto alpha_of = [&](const RatVec& v) { return -detail::form(l, v, m.nv4) / m.s; };
  auto beta_of = [&](const RatVec& v) { return detail::form(l, v, m.v4) / m.s; };

  Rat alpha_step = alpha_of(v_n);
  if (alpha_step == 0)
    throw invariant_inconsistency_error("theta_prime: v_n has no N v4 component");
  Rat beta_step0 = beta_of(v_0);
  if (beta_step0 == 0)
    throw invariant_inconsistency_error("theta_prime: v_0 has no N^2 v4 component");

  // positive definite Gram of the Y_prim directions (U-components)
  RatMat gu(np, np);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < np; ++j)
      gu(i, j) = detail::form(l, to_rational(y_prim.row(i)), to_rational(y_prim.row(j)));
  std::optional<detail::Ldl> ldl_u;
  std::optional<RatMat> gu_inv;
  if (np) {
    ldl_u = detail::ldl_positive(gu);
    gu_inv = inverse(gu);
  }

  const double ssq = std::sqrt(m.s.get_d());
  const double h_cut = gauss_cut / (2.0 * std::numbers::pi * y);

  for (const RatVec& rc : cosets) {
    RatVec base(l.rank);
    for (std::size_t k = 0; k < l.rank; ++k) base[k] = (*x0)[k] + rc[k];
    Rat alpha_base = alpha_of(base);
    Rat beta_base = beta_of(base);
    // U-component pairings of the base point with the Y_prim directions; the
    // b- and a- parts drop out of Q against U vectors automatically.
    // Q(v, Yprim_j) = Q(v_U, U_j) + beta-part * 0 + alpha-part * Q(Nv4, Yprim_j)
    // with Q(Nv4, U_j) = 0 but Q(Nv4, beta N^2 v4) = 0 too; and
    // Q(N^2 v4, Yprim_j) = s * beta_j ... handled by solving exactly below.
    const double a_lim = std::sqrt(std::max(h_cut, 0.0) / m.s.get_d()) + 1.0;
    double astep_d = std::abs(alpha_step.get_d());
    long k_lo = static_cast<long>(std::floor((-a_lim - alpha_base.get_d()) / astep_d)) - 1;
    long k_hi = static_cast<long>(std::ceil((a_lim - alpha_base.get_d()) / astep_d)) + 1;
    for (long kn = k_lo; kn <= k_hi; ++kn) {
      Rat alpha = alpha_base + kn * alpha_step;
      Rat a_sq = alpha * alpha * m.s;
      if (a_sq.get_d() > h_cut + 1e-12) continue;
      Rat target_u = 2 * mm + a_sq;  // Q_U(v_U) must equal this
      if (target_u < 0) continue;
      // v = base + kn v_n + sum c_j Yprim_j + k0 v_0; enumerate c.
      RatVec point(l.rank);
      for (std::size_t k = 0; k < l.rank; ++k) point[k] = base[k] + kn * v_n[k];
      // U-part value: Q(v,v) = Q_U(v_U) - s alpha^2 is independent of k0;
      // quadratic in c with Gram gu and rational offset.
      auto add_beta_line = [&](const RatVec& full_point) {
        Rat beta = beta_of(full_point);
        // b = beta sqrt(s), a = alpha sqrt(s)
        double a_d = alpha.get_d() * ssq;
        double b0_d = beta.get_d() * ssq;
        double step = beta_step0.get_d() * ssq;
        double center = (a_d * x_z - b0_d) / step;
        double rad = big_y * std::sqrt(std::max(h_cut - a_sq.get_d(), 0.0)) / std::abs(step);
        long lo = static_cast<long>(std::floor(center - rad)) - 1;
        long hi = static_cast<long>(std::ceil(center + rad)) + 1;
        spend(hi - lo + 1);
        for (long k0 = lo; k0 <= hi; ++k0) {
          double b_d = b0_d + k0 * step;
          double w = (b_d - a_d * x_z) / big_y;
          double h = a_d * a_d + w * w;
          total += std::exp(-2.0 * std::numbers::pi * y * h);
        }
      };
      if (np == 0) {
        if (detail::form(l, point, point) == 2 * mm) add_beta_line(point);
      } else {
        RatVec f(np, Rat(0));
        for (std::size_t j = 0; j < np; ++j)
          f[j] = detail::form(l, point, to_rational(y_prim.row(j)));
        RatVec o = gu_inv->apply(f);
        Rat c0 = detail::form(l, point, point);
        Rat shift = dot(o, gu.apply(o));
        // Q(v,v) = c0 + 2 f.c + c gu c = (c+o) gu (c+o) + c0 - shift = 2m
        Rat target = 2 * mm - c0 + shift;
        if (target < 0) continue;
        detail::enumerate_shifted(*ldl_u, o, target, [&](const RatVec& w, const Rat& q) {
          if (q != target) return;
          RatVec full = point;
          for (std::size_t j = 0; j < np; ++j) {
            Rat cj = w[j] - o[j];
            for (std::size_t k = 0; k < l.rank; ++k) full[k] += cj * Rat(y_prim(j, k));
          }
          add_beta_line(full);
        });
      }
    }
  }
  return total;
}

inline double theta_prime(const OrbitModel& m, double y, Cplx t, const Rat& mm,
                          std::size_t mu_index, const FiniteQuadraticModule& host_fqm,
                          const ThetaPrimeOptions& opt = {}) {
  if (std::abs(t) <= 0.0 || std::abs(t) >= 1.0)
    throw std::invalid_argument("theta_prime: t must be in the punctured unit disk");
  double big_y = -std::log(std::abs(t)) / (2.0 * std::numbers::pi);
  double x_z = std::arg(t) / (2.0 * std::numbers::pi);
  return theta_prime_at(m, y, big_y, x_z, mm, mu_index, host_fqm, opt);
}

// ---------------------------------------------------------------------------
// Residue slope: I(Y) = int_1^inf (Theta'(uy) - [v=0 term]) du/u at
// t = e^{-2 pi Y}, fitted against X = -log|t|^2 = 4 pi Y with the theta
// crossover correction: I = slope * X + b log X + c. The slope is compared
// with the boundary-module coefficient Z^-(y)_{m,mu}.

struct ResidueFit {
  double slope = 0.0;
  double predicted = 0.0;
  double rel_error = 0.0;
  double fit_residual = 0.0;
  std::vector<double> pair_slopes;  // raw two-point slopes, diagnostics
};

struct ResidueOptions {
  std::vector<double> big_y{8.0, 16.0, 32.0, 64.0};
  double quad_tol = 1e-7;
  double term_tol = 1e-13;
  double stability_threshold = 0.05;  // relative nonlinear residual
};

inline ResidueFit residue_slope(const OrbitModel& m, const CuspContribution& zminus,
                                double y, const Rat& mm, std::size_t mu_index,
                                const ResidueOptions& opt = {}) {
  FiniteQuadraticModule host_fqm(m.deg.host);
  bool has_zero_term =
      (mm == 0) && host_fqm.index_of(RatVec(m.deg.host.rank, Rat(0))).value() == mu_index;
  ThetaPrimeOptions tp;
  tp.tol = opt.term_tol;

  std::vector<double> xs, is;
  for (double big_y : opt.big_y) {
    auto integrand = [&](double sigma) {
      double u = std::exp(sigma);
      double v = theta_prime_at(m, u * y, big_y, 0.0, mm, mu_index, host_fqm, tp);
      return v - (has_zero_term ? 1.0 : 0.0);
    };
    double sigma_max = 2.0;
    while (std::abs(integrand(sigma_max)) > 1e-12 && sigma_max < 60.0) sigma_max += 1.0;
    double val = adaptive_simpson(integrand, 0.0, sigma_max, opt.quad_tol);
    xs.push_back(4.0 * std::numbers::pi * big_y);
    is.push_back(val);
  }

  // least squares on {x, log x, 1}
  const std::size_t n = xs.size();
  double a[3][3] = {{0}};
  double rhs[3] = {0, 0, 0};
  for (std::size_t k = 0; k < n; ++k) {
    double reg[3] = {xs[k], std::log(xs[k]), 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) a[i][j] += reg[i] * reg[j];
      rhs[i] += reg[i] * is[k];
    }
  }
  // solve 3x3
  double sol[3];
  {
    double mat[3][4];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) mat[i][j] = a[i][j];
      mat[i][3] = rhs[i];
    }
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(mat[r][col]) > std::abs(mat[piv][col])) piv = r;
      for (int j = 0; j < 4; ++j) std::swap(mat[col][j], mat[piv][j]);
      for (int r = 0; r < 3; ++r)
        if (r != col && mat[r][col] != 0) {
          double f = mat[r][col] / mat[col][col];
          for (int j = 0; j < 4; ++j) mat[r][j] -= f * mat[col][j];
        }
    }
    for (int i = 0; i < 3; ++i) sol[i] = mat[i][3] / mat[i][i];
  }

  ResidueFit fit;
  fit.slope = sol[0];
  for (std::size_t k = 0; k + 1 < n; ++k)
    fit.pair_slopes.push_back((is[k + 1] - is[k]) / (xs[k + 1] - xs[k]));
  double scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double fitted = sol[0] * xs[k] + sol[1] * std::log(xs[k]) + sol[2];
    fit.fit_residual = std::max(fit.fit_residual, std::abs(fitted - is[k]));
    scale = std::max(scale, std::abs(is[k]));
  }
  if (scale > 0 && fit.fit_residual > opt.stability_threshold * scale)
    throw fit_unstable_error("residue_slope: nonlinear residual above threshold");

  auto it = zminus.series.coeff.find(QKey{mm, mu_index});
  fit.predicted = (it != zminus.series.coeff.end()) ? it->second.eval(y).real() : 0.0;
  if (fit.predicted != 0.0)
    fit.rel_error = std::abs(fit.slope - fit.predicted) / std::abs(fit.predicted);
  else
    fit.rel_error = std::abs(fit.slope);
  return fit;
}

}  // namespace degtheta
