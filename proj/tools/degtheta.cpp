// degtheta: boundary invariants and non-holomorphic boundary terms of
// vector-valued generating series attached to degenerating weight-two
// variations. Subcommands: analyze, boundary, check, verify-residue.

#include "degtheta/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::string m_max, w_max;
  double tol = -1.0;
  std::vector<std::string> taus;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "job config file")->required();
  cmd->add_option("--out", o.out_path, "write the JSON report to this path");
  cmd->add_option("--m-max", o.m_max, "override the q-expansion truncation (rational)");
  cmd->add_option("--w-max", o.w_max, "override the negative-exponent truncation (rational)");
  cmd->add_option("--tol", o.tol, "override the residual tolerance");
  cmd->add_option("--tau", o.taus, "tau sample as x,y (repeatable)")->delimiter(';');
}

degtheta::JobConfig load(const CommonOpts& o) {
  degtheta::JobConfig cfg = degtheta::load_config(o.config_path);
  if (!o.m_max.empty()) cfg.m_max = degtheta::rat_from_str(o.m_max);
  if (!o.w_max.empty()) cfg.w_max = degtheta::rat_from_str(o.w_max);
  if (o.tol > 0) cfg.tol = o.tol;
  if (!o.taus.empty()) {
    cfg.tau_samples.clear();
    for (const std::string& s : o.taus) {
      auto comma = s.find(',');
      if (comma == std::string::npos)
        throw degtheta::config_error("--tau expects x,y");
      double x = std::stod(s.substr(0, comma));
      double y = std::stod(s.substr(comma + 1));
      if (y <= 0) throw degtheta::config_error("--tau needs y > 0");
      cfg.tau_samples.emplace_back(x, y);
    }
  }
  return cfg;
}

int emit(const degtheta::CommandResult& r, const CommonOpts& o) {
  std::string text = r.report.dump(2);
  if (!o.out_path.empty()) {
    std::ofstream out(o.out_path);
    if (!out) {
      std::cerr << "error: cannot write " << o.out_path << "\n";
      return 2;
    }
    out << text << "\n";
  } else {
    std::cout << text << "\n";
  }
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundary terms and modularity checks for degenerating weight-two variations"};
  app.require_subcommand(1);

  CommonOpts analyze_o, boundary_o, check_o, residue_o;
  CLI::App* analyze = app.add_subcommand("analyze", "monodromy, filtration and invariants per cusp");
  add_common(analyze, analyze_o);
  CLI::App* boundary = app.add_subcommand("boundary", "compute and serialize the Z^- series");
  add_common(boundary, boundary_o);
  CLI::App* check = app.add_subcommand("check", "assemble Z = Z^+ + sum Z^- and test modularity");
  add_common(check, check_o);
  CLI::App* residue =
      app.add_subcommand("verify-residue", "fit boundary residue slopes against the Z^- prediction");
  add_common(residue, residue_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return emit(degtheta::cmd_analyze(load(analyze_o)), analyze_o);
    if (boundary->parsed()) return emit(degtheta::cmd_boundary(load(boundary_o)), boundary_o);
    if (check->parsed()) return emit(degtheta::cmd_check(load(check_o)), check_o);
    if (residue->parsed())
      return emit(degtheta::cmd_verify_residue(load(residue_o)), residue_o);
  } catch (const degtheta::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const degtheta::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
