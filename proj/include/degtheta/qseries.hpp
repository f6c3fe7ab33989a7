#pragma once

// Vector-valued q-expansions with a finite algebra of y-dependent coefficient
// functions: c0 + c1/y + sum_k c_k y^{-1/2} beta_{3/2}(kappa_k y). Exponents
// are exact rationals. Also the quasimodular G_2 and the weight-raising
// operator f -> q df/dq + 2k G_2 f.

#include "degtheta/errors.hpp"
#include "degtheta/exact.hpp"
#include "degtheta/special.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <vector>

namespace degtheta {

using Cplx = std::complex<double>;

struct CoeffFn {
  Cplx c0{0.0, 0.0};      // constant part
  Cplx inv_y{0.0, 0.0};   // coefficient of 1/y
  std::vector<std::pair<Cplx, double>> beta;  // (c, kappa): c y^{-1/2} beta32(kappa y)

  static CoeffFn constant(Cplx c) { return CoeffFn{c, {0.0, 0.0}, {}}; }
  static CoeffFn inverse_y(Cplx c) { return CoeffFn{{0.0, 0.0}, c, {}}; }
  static CoeffFn beta_half(Cplx c, double kappa) { return CoeffFn{{}, {}, {{c, kappa}}}; }

  bool pure_const() const { return inv_y == Cplx(0) && beta.empty(); }

  void add_beta(Cplx c, double kappa) {
    for (auto& [bc, bk] : beta)
      if (bk == kappa) {
        bc += c;
        return;
      }
    beta.emplace_back(c, kappa);
    std::sort(beta.begin(), beta.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
  }

  CoeffFn& operator+=(const CoeffFn& o) {
    c0 += o.c0;
    inv_y += o.inv_y;
    for (const auto& [c, k] : o.beta) add_beta(c, k);
    return *this;
  }

  CoeffFn operator*(Cplx s) const {
    CoeffFn r = *this;
    r.c0 *= s;
    r.inv_y *= s;
    for (auto& [c, k] : r.beta) c *= s;
    return r;
  }

  Cplx eval(double y) const {
    Cplx v = c0 + inv_y / y;
    if (!beta.empty()) {
      double ry = 1.0 / std::sqrt(y);
      for (const auto& [c, k] : beta) v += c * ry * beta32(k * y);
    }
    return v;
  }
};

struct QKey {
  Rat m;
  std::size_t cls;
  bool operator<(const QKey& o) const {
    if (cls != o.cls) return cls < o.cls;
    return m < o.m;
  }
};

struct VVQExpansion {
  std::size_t dim = 1;
  Rat weight{0};
  Rat m_max{0};
  std::map<QKey, CoeffFn> coeff;

  void add_term(const Rat& m, std::size_t cls, const CoeffFn& f) {
    if (cls >= dim) throw class_index_error("VVQExpansion: class index out of range");
    coeff[QKey{m, cls}] += f;
  }

  bool holomorphic() const {
    for (const auto& [k, f] : coeff)
      if (!f.pure_const()) return false;
    return true;
  }

  std::vector<Cplx> eval(Cplx tau) const {
    const double x = tau.real(), y = tau.imag();
    std::vector<Cplx> out(dim, Cplx(0));
    for (const auto& [k, f] : coeff) {
      double m = k.m.get_d();
      Cplx q_m = std::exp(Cplx(0.0, 2.0 * std::numbers::pi * m * x)) *
                 std::exp(-2.0 * std::numbers::pi * m * y);
      out[k.cls] += f.eval(y) * q_m;
    }
    return out;
  }

  VVQExpansion& operator+=(const VVQExpansion& o) {
    if (o.dim != dim) throw class_index_error("VVQExpansion: dimension mismatch");
    for (const auto& [k, f] : o.coeff) coeff[k] += f;
    return *this;
  }
};

// G_2(q) = -1/24 + sum_{n>=1} sigma_1(n) q^n; index n in the returned vector.
inline std::vector<Rat> g2_coefficients(long n_max) {
  std::vector<Rat> c(n_max + 1, Rat(0));
  c[0] = Rat(-1, 24);
  for (long n = 1; n <= n_max; ++n) {
    long s = 0;
    for (long d = 1; d <= n; ++d)
      if (n % d == 0) s += d;
    c[n] = s;
  }
  return c;
}

inline Cplx g2_eval(Cplx tau, long n_max) {
  Cplx q = std::exp(Cplx(0.0, 2.0 * std::numbers::pi) * tau);
  auto c = g2_coefficients(n_max);
  Cplx acc(0), qn(1);
  for (long n = 0; n <= n_max; ++n) {
    acc += c[n].get_d() * qn;
    qn *= q;
  }
  return acc;
}

// G_2^*(tau) = G_2(q) + 1/(8 pi y): weight 2 for the full modular group.
inline Cplx g2_star(Cplx tau, long n_max) {
  return g2_eval(tau, n_max) + 1.0 / (8.0 * std::numbers::pi * tau.imag());
}

// f -> q df/dq + 2k G_2 f; sends weight k to weight k + 2. Input must be
// holomorphic (pure constant coefficients).
inline VVQExpansion quasi_raise(const VVQExpansion& f, const Rat& k) {
  if (!f.holomorphic())
    throw not_holomorphic_error("quasi_raise: input has non-holomorphic coefficients");
  long n_max = static_cast<long>(std::ceil(f.m_max.get_d()));
  auto g2 = g2_coefficients(std::max(n_max, 0L));
  VVQExpansion out;
  out.dim = f.dim;
  out.weight = k + 2;
  out.m_max = f.m_max;
  const double two_k = 2.0 * k.get_d();
  for (const auto& [key, fn] : f.coeff) {
    Cplx a = fn.c0;
    // derivative term
    out.coeff[key] += CoeffFn::constant(a * key.m.get_d());
    // convolution with G_2, integer shifts only
    for (long j = 0; j <= n_max; ++j) {
      Rat m2 = key.m + j;
      if (m2 > f.m_max) break;
      out.coeff[QKey{m2, key.cls}] += CoeffFn::constant(a * two_k * g2[j].get_d());
    }
  }
  return out;
}

}  // namespace degtheta
