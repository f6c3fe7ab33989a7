#pragma once

// Keyed text config for jobs: lattice Gram matrix, one monodromy matrix per
// cusp (with optional orbit-model data), optional Z^+ coefficients and
// numeric options. Parse errors carry line numbers.

#include "degtheta/errors.hpp"
#include "degtheta/exact.hpp"

#include <complex>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace degtheta {

struct CuspConfig {
  std::string label;
  IntMat t;
  // optional R-split orbit data
  std::optional<RatVec> orbit_re, orbit_im;  // type II: e^{2,1} = re + i im
  std::optional<RatVec> orbit_v4;            // type III
};

struct ZPlusEntry {
  Rat m;
  std::size_t cls = 0;
  Rat value;
};

struct JobConfig {
  std::string label;
  IntMat gram;
  std::vector<CuspConfig> cusps;
  std::vector<ZPlusEntry> zplus;

  Rat m_max{4};
  Rat w_max{4};
  double tol = 1e-6;
  std::vector<std::complex<double>> tau_samples;
};

namespace detail {

inline Rat parse_rat(const std::string& tok, int line) {
  try {
    Rat r(tok);
    r.canonicalize();
    return r;
  } catch (const std::exception&) {
    throw config_error("line " + std::to_string(line) + ": bad rational '" + tok + "'");
  }
}

inline IntMat parse_matrix(std::istream& in, std::size_t n, int& line) {
  IntMat m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string row_line;
    do {
      if (!std::getline(in, row_line))
        throw config_error("line " + std::to_string(line) + ": unexpected end of matrix");
      ++line;
    } while (row_line.empty() || row_line[0] == '#');
    std::istringstream row(row_line);
    for (std::size_t j = 0; j < n; ++j) {
      std::string tok;
      if (!(row >> tok))
        throw config_error("line " + std::to_string(line) + ": expected " +
                           std::to_string(n) + " integers");
      try {
        m(i, j) = Int(tok);
      } catch (const std::exception&) {
        throw config_error("line " + std::to_string(line) + ": bad integer '" + tok + "'");
      }
    }
    std::string extra;
    if (row >> extra)
      throw config_error("line " + std::to_string(line) + ": trailing token '" + extra + "'");
  }
  return m;
}

inline RatVec parse_rat_list(std::istringstream& in, int line) {
  RatVec v;
  std::string tok;
  while (in >> tok) v.push_back(parse_rat(tok, line));
  return v;
}

}  // namespace detail

inline JobConfig parse_config(std::istream& in) {
  JobConfig cfg;
  bool have_gram = false;
  int line = 0;
  std::string raw;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty() || raw[0] == '#') continue;
    std::istringstream ls(raw);
    std::string key;
    ls >> key;
    if (key == "label") {
      ls >> cfg.label;
    } else if (key == "gram") {
      std::size_t n = 0;
      if (!(ls >> n) || n == 0)
        throw config_error("line " + std::to_string(line) + ": gram needs a positive size");
      cfg.gram = detail::parse_matrix(in, n, line);
      have_gram = true;
    } else if (key == "cusp") {
      CuspConfig c;
      if (!(ls >> c.label))
        throw config_error("line " + std::to_string(line) + ": cusp needs a label");
      cfg.cusps.push_back(std::move(c));
    } else if (key == "t") {
      if (cfg.cusps.empty())
        throw config_error("line " + std::to_string(line) + ": t before any cusp");
      std::size_t n = 0;
      if (!(ls >> n) || n == 0)
        throw config_error("line " + std::to_string(line) + ": t needs a positive size");
      cfg.cusps.back().t = detail::parse_matrix(in, n, line);
    } else if (key == "orbit-ii-re") {
      if (cfg.cusps.empty())
        throw config_error("line " + std::to_string(line) + ": orbit data before any cusp");
      cfg.cusps.back().orbit_re = detail::parse_rat_list(ls, line);
    } else if (key == "orbit-ii-im") {
      if (cfg.cusps.empty())
        throw config_error("line " + std::to_string(line) + ": orbit data before any cusp");
      cfg.cusps.back().orbit_im = detail::parse_rat_list(ls, line);
    } else if (key == "orbit-iii") {
      if (cfg.cusps.empty())
        throw config_error("line " + std::to_string(line) + ": orbit data before any cusp");
      cfg.cusps.back().orbit_v4 = detail::parse_rat_list(ls, line);
    } else if (key == "zplus") {
      std::string m_tok, cls_tok, val_tok;
      if (!(ls >> m_tok >> cls_tok >> val_tok))
        throw config_error("line " + std::to_string(line) + ": zplus needs m class value");
      ZPlusEntry e;
      e.m = detail::parse_rat(m_tok, line);
      try {
        e.cls = std::stoul(cls_tok);
      } catch (const std::exception&) {
        throw config_error("line " + std::to_string(line) + ": bad class index '" + cls_tok + "'");
      }
      e.value = detail::parse_rat(val_tok, line);
      cfg.zplus.push_back(std::move(e));
    } else if (key == "mmax") {
      std::string tok;
      ls >> tok;
      cfg.m_max = detail::parse_rat(tok, line);
    } else if (key == "wmax") {
      std::string tok;
      ls >> tok;
      cfg.w_max = detail::parse_rat(tok, line);
    } else if (key == "tol") {
      if (!(ls >> cfg.tol))
        throw config_error("line " + std::to_string(line) + ": bad tolerance");
    } else if (key == "tau") {
      double x, y;
      if (!(ls >> x >> y) || y <= 0)
        throw config_error("line " + std::to_string(line) + ": tau needs x y with y > 0");
      cfg.tau_samples.emplace_back(x, y);
    } else {
      throw config_error("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  if (!have_gram) throw config_error("config: missing gram matrix");
  if (cfg.gram.rows() < 3) throw config_error("config: gram rank must be at least 3");
  for (const auto& c : cfg.cusps)
    if (c.t.rows() != cfg.gram.rows())
      throw config_error("config: cusp '" + c.label + "' matrix size differs from gram");
  if (cfg.tau_samples.empty())
    cfg.tau_samples = {{0.0, 1.0}, {1.0 / 3.0, 1.0}, {0.0, 2.0}};
  return cfg;
}

inline JobConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  return parse_config(in);
}

}  // namespace degtheta
