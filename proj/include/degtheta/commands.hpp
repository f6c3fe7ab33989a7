#pragma once

// Command layer shared by the CLI and the tests: analyze, boundary, check and
// verify-residue, each producing a versioned JSON report. Rationals are
// serialized exactly as "p/q"; cusps are processed in parallel (DEGTHETA_THREADS)
// and reported in label order.

#include "degtheta/boundary.hpp"
#include "degtheta/config.hpp"
#include "degtheta/degeneration.hpp"
#include "degtheta/orbit.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <future>
#include <string>
#include <vector>

namespace degtheta {

using Json = nlohmann::ordered_json;

inline std::string rat_str(const Rat& r) {
  Rat c = r;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

inline Rat rat_from_str(const std::string& s) {
  Rat r(s);
  r.canonicalize();
  return r;
}

inline Json json_complex(Cplx z) { return Json::array({z.real(), z.imag()}); }

inline Json serialize_expansion(const VVQExpansion& e) {
  Json classes = Json::array();
  for (std::size_t cls = 0; cls < e.dim; ++cls) {
    Json terms = Json::array();
    for (const auto& [key, fn] : e.coeff) {
      if (key.cls != cls) continue;
      Json term;
      term["m"] = rat_str(key.m);
      term["const"] = json_complex(fn.c0);
      term["inv_y"] = json_complex(fn.inv_y);
      Json beta = Json::array();
      for (const auto& [c, kappa] : fn.beta)
        beta.push_back(Json::array({c.real(), c.imag(), kappa}));
      term["beta"] = beta;
      terms.push_back(std::move(term));
    }
    Json jc;
    jc["class"] = cls;
    jc["terms"] = std::move(terms);
    classes.push_back(std::move(jc));
  }
  Json out;
  out["weight"] = rat_str(e.weight);
  out["m_max"] = rat_str(e.m_max);
  out["classes"] = std::move(classes);
  return out;
}

inline int thread_count() {
  if (const char* env = std::getenv("DEGTHETA_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

struct CuspAnalysis {
  std::string label;
  MonodromyOperator mo;
  DegenerationData data;  // type may be trivial
  std::vector<std::string> warnings;
};

inline CuspAnalysis analyze_cusp(const Lattice& host, const CuspConfig& cfg) {
  CuspAnalysis a;
  a.label = cfg.label;
  a.mo = make_monodromy(host, cfg.t);
  if (a.mo.cover_exponent > 1)
    a.warnings.push_back("quasi-unipotent monodromy: passed to the cover of degree " +
                         std::to_string(a.mo.cover_exponent));
  a.data = analyze_degeneration(a.mo);
  if (a.data.type == DegenType::trivial)
    a.warnings.push_back("trivial monodromy: the variation extends across the puncture; no Z^-");
  return a;
}

inline std::vector<CuspAnalysis> analyze_all_cusps(const Lattice& host,
                                                   const JobConfig& cfg) {
  std::vector<CuspAnalysis> out(cfg.cusps.size());
  int threads = thread_count();
  if (threads <= 1 || cfg.cusps.size() <= 1) {
    for (std::size_t i = 0; i < cfg.cusps.size(); ++i)
      out[i] = analyze_cusp(host, cfg.cusps[i]);
  } else {
    std::vector<std::future<CuspAnalysis>> fut;
    for (const auto& c : cfg.cusps)
      fut.push_back(std::async(std::launch::async,
                               [&host, &c] { return analyze_cusp(host, c); }));
    for (std::size_t i = 0; i < fut.size(); ++i) out[i] = fut[i].get();
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CuspAnalysis& a, const CuspAnalysis& b) { return a.label < b.label; });
  return out;
}

inline const char* type_name(DegenType t) {
  switch (t) {
    case DegenType::trivial: return "trivial";
    case DegenType::type_ii: return "II";
    default: return "III";
  }
}

inline Json cusp_json(const CuspAnalysis& a) {
  Json j;
  j["label"] = a.label;
  j["type"] = type_name(a.data.type);
  j["cover_exponent"] = a.mo.cover_exponent;
  j["hypothesis"] = {{"unipotent", a.mo.cover_exponent == 1},
                     {"nontrivial", a.data.type != DegenType::trivial}};
  if (a.data.type != DegenType::trivial) {
    j["filtration_ranks"] = {{"w0", a.data.w0.rows()}, {"w1", a.data.w1.rows()},
                             {"w2", a.data.w2.rows()}, {"w3", a.data.w3.rows()},
                             {"w4", a.data.w4.rows()}};
    Json inv;
    if (a.data.type == DegenType::type_ii) {
      inv["r1"] = rat_str(Rat(a.data.r1));
      inv["disc31"] = rat_str(Rat(a.data.disc31));
      inv["deg_q3"] = rat_str(Rat(a.data.deg_q3));
      inv["identity"] = "deg_q3^2 = r1 * disc31";
    } else {
      inv["r2"] = rat_str(Rat(a.data.r2));
      inv["disc40"] = rat_str(Rat(a.data.disc40));
      inv["vol4"] = rat_str(Rat(a.data.vol4));
      inv["identity"] = "vol4 = r2 * disc40";
      j["lemma_checks"] = {{"gr4_even", a.data.lemma_even},
                           {"image_integral", a.data.lemma_image},
                           {"dual_image_covers", a.data.lemma_dual}};
    }
    j["invariants"] = std::move(inv);
  }
  if (!a.warnings.empty()) j["warnings"] = a.warnings;
  return j;
}

inline Json base_report(const JobConfig& cfg, const Lattice& host, const char* command) {
  auto [bp, bm] = signature(host);
  Json j;
  j["schema"] = 1;
  j["command"] = command;
  if (!cfg.label.empty()) j["label"] = cfg.label;
  j["lattice"] = {{"rank", host.rank},
                  {"signature", Json::array({bp, bm})},
                  {"even", host.even},
                  {"disc_group_order", abs(det(host.gram)).get_str()}};
  return j;
}

struct CommandResult {
  Json report;
  bool pass = true;
};

inline CommandResult cmd_analyze(const JobConfig& cfg) {
  Lattice host = make_lattice(cfg.gram, cfg.label);
  Json j = base_report(cfg, host, "analyze");
  auto cusps = analyze_all_cusps(host, cfg);
  Json arr = Json::array();
  for (const auto& a : cusps) arr.push_back(cusp_json(a));
  j["cusps"] = std::move(arr);
  return {std::move(j), true};
}

inline CuspContribution cusp_contribution(const CuspAnalysis& a, const JobConfig& cfg) {
  if (a.data.type == DegenType::type_ii)
    return z_minus_type_ii(a.data, cfg.m_max, a.label);
  return z_minus_type_iii(a.data, cfg.m_max, cfg.w_max, a.label);
}

inline CommandResult cmd_boundary(const JobConfig& cfg) {
  Lattice host = make_lattice(cfg.gram, cfg.label);
  Json j = base_report(cfg, host, "boundary");
  auto cusps = analyze_all_cusps(host, cfg);
  Json arr = Json::array();
  for (const auto& a : cusps) {
    Json cj = cusp_json(a);
    if (a.data.type != DegenType::trivial) {
      CuspContribution c = cusp_contribution(a, cfg);
      cj["zminus"] = serialize_expansion(c.series);
    }
    arr.push_back(std::move(cj));
  }
  j["cusps"] = std::move(arr);
  return {std::move(j), true};
}

inline CommandResult cmd_check(const JobConfig& cfg) {
  Lattice host = make_lattice(cfg.gram, cfg.label);
  Json j = base_report(cfg, host, "check");
  auto analyses = analyze_all_cusps(host, cfg);
  std::vector<CuspContribution> contributions;
  Json arr = Json::array();
  for (const auto& a : analyses) {
    Json cj = cusp_json(a);
    if (a.data.type != DegenType::trivial) {
      contributions.push_back(cusp_contribution(a, cfg));
      cj["zminus"] = serialize_expansion(contributions.back().series);
    }
    arr.push_back(std::move(cj));
  }
  j["cusps"] = std::move(arr);

  GeneratingSeriesInput zplus;
  for (const auto& e : cfg.zplus) zplus.coefficients.emplace_back(e.m, e.cls, e.value);
  j["zplus_terms"] = cfg.zplus.size();
  if (cfg.zplus.empty()) j["note"] = "Z^+ = 0: residual reflects the boundary terms alone";
  AssembledSeries z = assemble(host, zplus, contributions, cfg.m_max, cfg.tau_samples);
  j["residuals"] = {{"S", z.residual_s}, {"T", z.residual_t}};
  j["tolerance"] = cfg.tol;
  bool pass = z.residual_s < cfg.tol && z.residual_t < cfg.tol;
  j["pass"] = pass;
  return {std::move(j), pass};
}

inline CommandResult cmd_verify_residue(const JobConfig& cfg) {
  Lattice host = make_lattice(cfg.gram, cfg.label);
  Json j = base_report(cfg, host, "verify-residue");
  auto analyses = analyze_all_cusps(host, cfg);
  Json arr = Json::array();
  bool all_pass = true;
  for (std::size_t i = 0; i < analyses.size(); ++i) {
    const auto& a = analyses[i];
    Json cj = cusp_json(a);
    if (a.data.type != DegenType::trivial) {
      // locate the matching config entry for the orbit data
      const CuspConfig* cc = nullptr;
      for (const auto& c : cfg.cusps)
        if (c.label == a.label) cc = &c;
      OrbitModel model;
      if (a.data.type == DegenType::type_ii) {
        if (!cc || !cc->orbit_re || !cc->orbit_im)
          throw config_error("verify-residue: cusp '" + a.label +
                             "' needs orbit-ii-re / orbit-ii-im data");
        model = make_orbit_model_ii(a.data, *cc->orbit_re, *cc->orbit_im);
      } else {
        if (!cc || !cc->orbit_v4)
          throw config_error("verify-residue: cusp '" + a.label + "' needs orbit-iii data");
        model = make_orbit_model_iii(a.data, *cc->orbit_v4);
      }
      CuspContribution c = cusp_contribution(a, cfg);
      double threshold = a.data.type == DegenType::type_ii ? 0.01 : 0.02;
      FiniteQuadraticModule fqm(host);
      std::size_t zero_cls = fqm.index_of(RatVec(host.rank, Rat(0))).value();
      ResidueFit fit = residue_slope(model, c, 1.0, Rat(0), zero_cls);
      bool ok = fit.rel_error < threshold;
      all_pass = all_pass && ok;
      Json fj;
      fj["m"] = "0";
      fj["class"] = zero_cls;
      fj["slope"] = fit.slope;
      fj["predicted"] = fit.predicted;
      fj["rel_error"] = fit.rel_error;
      fj["threshold"] = threshold;
      fj["pass"] = ok;
      cj["residue_fit"] = std::move(fj);
    }
    arr.push_back(std::move(cj));
  }
  j["cusps"] = std::move(arr);
  j["pass"] = all_pass;
  return {std::move(j), all_pass};
}

}  // namespace degtheta
