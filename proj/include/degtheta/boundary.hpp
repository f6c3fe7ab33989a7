#pragma once

// Per-cusp boundary contributions Z^-: the 1/(4 pi y)-scaled theta of Gr_2
// for type II, the beta_{3/2}-completed R x Theta series for type III, both
// embedded into rho_{V_Z} through the intertwiners; the alternative integral
// form of the type III term; assembly Z = Z^+ + sum_P Z^- with numerical
// modularity reporting; and the holomorphic replacements for type II cusps.

#include "degtheta/degeneration.hpp"
#include "degtheta/errors.hpp"
#include "degtheta/qseries.hpp"
#include "degtheta/thetaseries.hpp"
#include "degtheta/weilrep.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

namespace degtheta {

struct CuspProvenance {
  DegenType type = DegenType::trivial;
  long cover_exponent = 1;
  Int r_k;    // r_1 (type II) or r_2 (type III)
  Int disc;   // disc(Gr_{3,1} Q) or disc(Gr_{4,0} Q)
  Int norm;   // deg(Q_3) or Vol(Gr_4)
};

struct CuspContribution {
  std::string label;
  DegenType type = DegenType::trivial;
  VVQExpansion series;  // in rho_{V_Z} coordinates
  CuspProvenance prov;
};

// Z^-_P for N^2 = 0: per Gr_2 class mu the coefficient of q^m is
// (r_1/deg Q_3) * r_{Gr2}(m)_mu / (4 pi y), pushed through iota. The radical
// prefactor (r_1/disc)^{1/2} equals r_1/deg(Q_3) exactly since
// deg(Q_3)^2 = r_1 * disc.
inline CuspContribution z_minus_type_ii(const DegenerationData& d, const Rat& m_max,
                                        const std::string& label = "") {
  if (d.type != DegenType::type_ii)
    throw type_mismatch_error("z_minus_type_ii: not a type II degeneration");
  if (d.deg_q3 * d.deg_q3 != d.r1 * d.disc31)
    throw invariant_inconsistency_error("z_minus_type_ii: prefactor identity fails");
  IsotropicEmbedding iso = iota_isotropic(d.host, d.w1);
  Rat pref(d.r1, d.deg_q3);
  pref.canonicalize();
  const double c = pref.get_d() / (4.0 * std::numbers::pi);

  CuspContribution out;
  out.label = label;
  out.type = d.type;
  out.prov = CuspProvenance{d.type, d.cover_exponent, d.r1, d.disc31, d.deg_q3};
  out.series.dim = iso.host_dim();
  out.series.weight = Rat(d.host.rank, 2);
  out.series.weight.canonicalize();
  out.series.m_max = m_max;
  for (std::size_t mu = 0; mu < iso.gr2_dim(); ++mu) {
    auto counts = rep_numbers(iso.gr2_lattice, iso.gr2_fqm.representative(mu), m_max);
    for (const auto& [m, r] : counts)
      for (std::size_t host_cls : iso.column_support[mu])
        out.series.add_term(m, host_cls, CoeffFn::inverse_y(Cplx(c * r, 0.0)));
  }
  return out;
}

// Z^-_P for N^2 != 0: coefficient at exponent m = a - b, a = Q(v,v)/2 over
// the primitive part, b = Q_4(w,w)/2 over Gr_4, is
// sqrt(r_2 / 2 disc) * (counts) * y^{-1/2} beta32(4 pi b y) / (4 pi),
// supported on the classes iota(lambda + N nu).
inline CuspContribution z_minus_type_iii(const DegenerationData& d, const Rat& m_max,
                                         const Rat& w_max, const std::string& label = "") {
  if (d.type != DegenType::type_iii)
    throw type_mismatch_error("z_minus_type_iii: not a type III degeneration");
  GradedTensorEmbedding emb = iota_graded_tensor(d);
  const double pref =
      std::sqrt(Rat(d.r2, 2 * d.disc40).get_d()) / (4.0 * std::numbers::pi);

  CuspContribution out;
  out.label = label;
  out.type = d.type;
  out.prov = CuspProvenance{d.type, d.cover_exponent, d.r2, d.disc40, d.vol4};
  out.series.dim = emb.iso.host_dim();
  out.series.weight = Rat(d.host.rank, 2);
  out.series.weight.canonicalize();
  out.series.m_max = m_max;

  const std::size_t n4 = emb.gr4_fqm.size();
  Rat a_max = m_max + w_max;
  for (std::size_t la = 0; la < emb.prim_fqm.size(); ++la) {
    auto prim_counts =
        rep_numbers(emb.prim_lattice, emb.prim_fqm.representative(la), a_max);
    for (std::size_t nu = 0; nu < n4; ++nu) {
      auto cls = emb.gr2_class_of_pair[la * n4 + nu];
      if (!cls) continue;
      // representation numbers of the positive rank-one (Gr_4, Q_4)
      RatVec nu_rep = emb.gr4_fqm.representative(nu);
      IntMat pos(1, 1);
      pos(0, 0) = d.vol4;
      auto gr4_counts = rep_numbers(make_lattice(pos), nu_rep, w_max);
      for (const auto& [a, ra] : prim_counts)
        for (const auto& [b, rb] : gr4_counts) {
          Rat m = a - b;
          m.canonicalize();
          if (m > m_max) continue;
          double kappa = 4.0 * std::numbers::pi * b.get_d();  // 2 pi Q_4(w,w)
          CoeffFn f = CoeffFn::beta_half(Cplx(pref * ra * rb, 0.0), kappa);
          for (std::size_t host_cls : emb.iso.column_support[*cls])
            out.series.add_term(m, host_cls, f);
        }
    }
  }
  return out;
}

// The same type III contribution evaluated through the integral form
// (r_2 / Vol^{1/2}) (4 pi i)^{-1} int iota(Theta_{Gr4}(z) (x) Theta_{prim}(tau)) ...,
// with the z-integral done numerically. Agrees with the coefficient form.
inline std::vector<Cplx> z_minus_integral_form_iii(const DegenerationData& d, Cplx tau,
                                                   const Rat& a_max, const Rat& w_max,
                                                   double tol = 1e-10) {
  if (d.type != DegenType::type_iii)
    throw type_mismatch_error("z_minus_integral_form_iii: not a type III degeneration");
  GradedTensorEmbedding emb = iota_graded_tensor(d);
  IntMat pos(1, 1);
  pos(0, 0) = d.vol4;
  Lattice gr4 = make_lattice(pos, "gr4");
  VVQExpansion theta4 = theta_qexp(gr4, w_max);
  VVQExpansion theta_prim = theta_qexp(emb.prim_lattice, a_max);

  std::vector<Cplx> eich = eichler_integral(theta4, tau, tol);
  std::vector<Cplx> prim_vals = theta_prim.eval(tau);
  const double pref = d.r2.get_d() / std::sqrt(Rat(d.vol4).get_d());

  std::vector<Cplx> out(emb.iso.host_dim(), Cplx(0));
  const std::size_t n4 = emb.gr4_fqm.size();
  for (std::size_t la = 0; la < emb.prim_fqm.size(); ++la)
    for (std::size_t nu = 0; nu < n4; ++nu) {
      auto cls = emb.gr2_class_of_pair[la * n4 + nu];
      if (!cls) continue;
      Cplx v = pref * prim_vals[la] * eich[nu];
      for (std::size_t host_cls : emb.iso.column_support[*cls]) out[host_cls] += v;
    }
  return out;
}

// Remark-style holomorphic replacements for a type II cusp.
enum class ReplacementVariant { g2, qddq };

inline CuspContribution holomorphic_replacement_ii(const DegenerationData& d,
                                                   ReplacementVariant variant,
                                                   const Rat& m_max,
                                                   const std::string& label = "") {
  if (d.type != DegenType::type_ii)
    throw type_mismatch_error("holomorphic_replacement_ii: not a type II degeneration");
  const long rk = static_cast<long>(d.host.rank);
  if (variant == ReplacementVariant::qddq && rk <= 4)
    throw rank_too_small_error("holomorphic_replacement_ii: q d/dq variant needs rk > 4");
  IsotropicEmbedding iso = iota_isotropic(d.host, d.w1);
  Rat pref(d.r1, d.deg_q3);
  pref.canonicalize();
  const double c = pref.get_d();

  CuspContribution out;
  out.label = label;
  out.type = d.type;
  out.prov = CuspProvenance{d.type, d.cover_exponent, d.r1, d.disc31, d.deg_q3};
  out.series.dim = iso.host_dim();
  out.series.weight = Rat(d.host.rank, 2);
  out.series.weight.canonicalize();
  out.series.m_max = m_max;

  long n_max = static_cast<long>(std::ceil(m_max.get_d()));
  auto g2 = g2_coefficients(std::max(n_max, 0L));
  for (std::size_t mu = 0; mu < iso.gr2_dim(); ++mu) {
    auto counts = rep_numbers(iso.gr2_lattice, iso.gr2_fqm.representative(mu), m_max);
    if (variant == ReplacementVariant::g2) {
      // -2 (r_1/deg Q_3) G_2(q) Theta_{Gr_2}
      for (const auto& [a, r] : counts)
        for (long j = 0; j <= n_max; ++j) {
          Rat m = a + j;
          if (m > m_max) break;
          double val = -2.0 * c * g2[j].get_d() * r;
          for (std::size_t host_cls : iso.column_support[mu])
            out.series.add_term(m, host_cls, CoeffFn::constant(Cplx(val, 0.0)));
        }
    } else {
      // (r_1/deg Q_3) * 2/(rk - 4) * q d/dq Theta_{Gr_2}
      const double scale = 2.0 * c / static_cast<double>(rk - 4);
      for (const auto& [m, r] : counts) {
        double val = scale * m.get_d() * r;
        if (val == 0.0) continue;
        for (std::size_t host_cls : iso.column_support[mu])
          out.series.add_term(m, host_cls, CoeffFn::constant(Cplx(val, 0.0)));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly.

struct GeneratingSeriesInput {
  // (m, class) -> rational coefficient; includes the m = 0 term -deg(L bar)
  // at class 0 when present.
  std::vector<std::tuple<Rat, std::size_t, Rat>> coefficients;
};

struct AssembledSeries {
  WeilRep rep;
  VVQExpansion series;
  Rat weight;
  double residual_s = 0.0, residual_t = 0.0;

  std::vector<Cplx> eval(Cplx tau) const { return series.eval(tau); }
};

inline AssembledSeries assemble(const Lattice& host, const GeneratingSeriesInput& zplus,
                                const std::vector<CuspContribution>& cusps,
                                const Rat& m_max, const std::vector<Cplx>& tau_samples) {
  auto [bp, bm] = signature(host);
  if (bm != 2)
    throw degenerate_form_error("assemble: signature (n,2) required");
  AssembledSeries out;
  out.rep = make_weil_rep(host);
  out.weight = Rat(host.rank, 2);
  out.weight.canonicalize();
  out.series.dim = out.rep.dim();
  out.series.weight = out.weight;
  out.series.m_max = m_max;
  for (const auto& [m, cls, val] : zplus.coefficients) {
    if (cls >= out.rep.dim())
      throw class_index_error("assemble: Z^+ class index out of range");
    if (m > m_max) continue;
    out.series.add_term(m, cls, CoeffFn::constant(Cplx(val.get_d(), 0.0)));
  }
  for (const CuspContribution& c : cusps) {
    if (c.series.weight != out.weight)
      throw weight_mismatch_error("assemble: cusp weight differs from rk/2");
    if (c.series.dim != out.series.dim)
      throw class_index_error("assemble: cusp class count differs");
    out.series += c.series;
  }
  // exact T-equivariance of exponents: e^{2 pi i m} must equal the rho(T)
  // phase of the class, i.e. m = q(mu)/2 mod 1
  for (const auto& [key, fn] : out.series.coeff) {
    Rat delta = key.m - out.rep.fqm.qvalue(key.cls) / 2;
    delta.canonicalize();
    if (delta.get_den() != 1)
      throw invariant_inconsistency_error("assemble: exponent incompatible with rho(T) phase");
  }
  if (!tau_samples.empty()) {
    VectorEvaluator f = [&series = out.series](Cplx tau) { return series.eval(tau); };
    out.residual_s = slash_residual(f, out.weight, out.rep, "S", tau_samples);
    out.residual_t = slash_residual(f, out.weight, out.rep, "T", tau_samples);
  }
  return out;
}

}  // namespace degtheta
