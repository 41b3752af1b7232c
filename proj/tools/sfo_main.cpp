#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "sfo/config.hpp"
#include "sfo/models.hpp"
#include "sfo/orbit.hpp"
#include "sfo/simulate.hpp"

namespace {

using sfo::ordered_json;
using sfo::Vec;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAssumptions = 2;
constexpr int kExitSolver = 3;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    out.push_back(std::stod(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  f << text;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json report_assumptions(const sfo::AssumptionReport& rep) {
  ordered_json out;
  for (const auto& c : rep.checks)
    out[c.id] = ordered_json{{"pass", c.pass}, {"witnesses", c.witnesses}};
  return out;
}

ordered_json matrix_json(const sfo::ode::Mat& M) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < M.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_json(const Vec& v) {
  ordered_json out = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

struct Loaded {
  sfo::ConfigSpec spec;
  sfo::SlowFastSystem sys;
  sfo::ManifoldChain chain;
};

Loaded load(const std::string& path) {
  Loaded l;
  l.spec = sfo::load_config_file(path);
  l.sys = sfo::build_system(l.spec);
  l.chain = sfo::build_chain(l.spec);
  return l;
}

sfo::OrbitOptions orbit_options(const sfo::ConfigSpec& spec) {
  sfo::OrbitOptions oo;
  oo.newton_tol = spec.tol.newton;
  oo.transit.rtol = spec.tol.rtol;
  oo.transit.atol = spec.tol.atol;
  return oo;
}

int cmd_analyze(const std::string& config_path, const std::string& out_path) {
  const Loaded l = load(config_path);
  const sfo::AssumptionReport structure = sfo::check_assumptions(l.sys, l.chain);
  if (!structure.all_pass()) {
    ordered_json rep;
    rep["assumption_report"] = report_assumptions(structure);
    write_text(out_path, rep.dump(2) + "\n");
    std::cerr << "assumption structure checks failed\n";
    return kExitAssumptions;
  }

  sfo::SingularOrbit orbit;
  sfo::StabilityReport stab;
  try {
    std::tie(orbit, stab) = sfo::find_singular_orbit(l.sys, l.chain, orbit_options(l.spec));
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }

  const sfo::AssumptionReport full = sfo::check_assumptions(l.sys, l.chain, &orbit);

  ordered_json rep;
  ordered_json legs = ordered_json::array();
  for (std::size_t i = 0; i < orbit.legs.size(); ++i) {
    const auto& tr = orbit.legs[i];
    legs.push_back(ordered_json{{"A", vector_json(tr.entry_p)},
                                {"B", vector_json(tr.exit_p)},
                                {"tau", tr.tau},
                                {"zeta", vector_json(Vec(-tr.entry_d))}});
  }
  rep["orbit"] = ordered_json{{"legs", std::move(legs)}, {"residual", orbit.residual}};
  ordered_json jac;
  ordered_json dq = ordered_json::array(), dqh = ordered_json::array(),
               dpi = ordered_json::array();
  for (const auto& lj : orbit.leg_jacobians) {
    dq.push_back(matrix_json(lj.DQ));
    dqh.push_back(matrix_json(lj.DQhat));
  }
  for (const auto& jj : orbit.jump_jacobians) dpi.push_back(matrix_json(jj.Dpi));
  jac["DQ"] = std::move(dq);
  jac["DQhat"] = std::move(dqh);
  jac["Dpi"] = std::move(dpi);
  rep["jacobians"] = std::move(jac);
  ordered_json eigs = ordered_json::array();
  for (const auto& ev : stab.eigenvalues)
    eigs.push_back(ordered_json::array({ev.real(), ev.imag()}));
  rep["eigenvalues"] = std::move(eigs);
  rep["spectral_radius"] = stab.spectral_radius;
  rep["det_DP_minus_I"] = stab.det_DP_minus_I;
  rep["classification"] = sfo::to_string(stab.classification);
  rep["assumption_report"] = report_assumptions(full);
  write_text(out_path, rep.dump(2) + "\n");

  if (!full.all_pass()) {
    std::cerr << "assumption checks failed on the converged orbit\n";
    return kExitAssumptions;
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, double eps, const std::string& init_str,
                 double t_max, const std::string& out_path) {
  const Loaded l = load(config_path);
  if (!(eps > 0)) {
    std::cerr << "eps must be positive (the singular analysis is `analyze`)\n";
    return kExitUsage;
  }
  const std::vector<double> init_list = parse_list(init_str);
  if (static_cast<int>(init_list.size()) != l.sys.n + l.sys.m) {
    std::cerr << "init must have n + m = " << l.sys.n + l.sys.m << " components\n";
    return kExitUsage;
  }
  const Vec init = Eigen::Map<const Vec>(init_list.data(), init_list.size());

  sfo::SimOptions so;
  so.rtol = l.spec.tol.rtol;
  so.atol = l.spec.tol.atol;
  const sfo::ode::Trajectory traj = sfo::run(l.sys, eps, init, t_max, so);

  std::string csv = "tau";
  for (int i = 1; i <= l.sys.n; ++i) csv += ",p_" + std::to_string(i);
  for (int j = 1; j <= l.sys.m; ++j) csv += ",z_" + std::to_string(j);
  csv += "\n";
  for (std::size_t k = 0; k < traj.times().size(); ++k) {
    csv += format_g17(traj.times()[k]);
    const Vec& y = traj.states()[k];
    for (int i = 0; i < y.size(); ++i) csv += "," + format_g17(y[i]);
    csv += "\n";
  }
  write_text(out_path, csv);
  return kExitOk;
}

int cmd_verify(const std::string& config_path, const std::string& eps_list_str,
               const std::string& init_str, double t_max, const std::string& out_path) {
  const Loaded l = load(config_path);
  const std::vector<double> eps_list = parse_list(eps_list_str);
  if (eps_list.empty()) {
    std::cerr << "--eps-list must name at least one value\n";
    return kExitUsage;
  }

  Vec init(l.sys.n + l.sys.m);
  if (!init_str.empty()) {
    const std::vector<double> v = parse_list(init_str);
    if (static_cast<int>(v.size()) != l.sys.n + l.sys.m) {
      std::cerr << "init must have n + m components\n";
      return kExitUsage;
    }
    init = Eigen::Map<const Vec>(v.data(), v.size());
  } else {
    init.head(l.sys.n) = l.chain.legs[0].a_guess;
    for (int j = 0; j < l.sys.m; ++j) {
      const auto [lo, hi] = l.sys.z_bounds[j];
      init[l.sys.n + j] = std::isfinite(hi) ? 0.5 * (lo + hi) : lo + 0.5;
    }
  }

  sfo::SingularOrbit orbit;
  sfo::StabilityReport stab;
  try {
    std::tie(orbit, stab) = sfo::find_singular_orbit(l.sys, l.chain, orbit_options(l.spec));
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }

  sfo::SimOptions so;
  so.rtol = l.spec.tol.rtol;
  so.atol = l.spec.tol.atol;
  const auto rows = sfo::convergence_study(l.sys, l.chain, orbit, eps_list, init, t_max, so);
  std::string csv = "eps,hausdorff_distance,cycle_period\n";
  for (const auto& r : rows)
    csv += format_g17(r.eps) + "," + format_g17(r.hausdorff) + "," + format_g17(r.period) +
           "\n";
  write_text(out_path, csv);
  return kExitOk;
}

int cmd_catalog(const std::string& export_name, const std::string& out_path) {
  if (export_name.empty()) {
    for (const auto& e : sfo::catalog())
      std::cout << e.name << "  -  " << e.summary << "\n";
    return kExitOk;
  }
  const sfo::ModelCatalogEntry* entry = sfo::find_model(export_name);
  if (!entry) {
    std::cerr << "unknown model '" << export_name << "'\n";
    return kExitUsage;
  }
  const std::string path = out_path.empty() ? export_name + ".json" : out_path;
  write_text(path, sfo::config_to_json(entry->config()).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slow-fast entry-exit analysis of relaxation oscillations"};
  app.require_subcommand(1);

  std::string config_path, out_path = "-", init_str, eps_list_str, export_name;
  double eps = 0.1, t_max = 200.0;

  auto* analyze = app.add_subcommand("analyze", "locate the singular orbit and classify it");
  analyze->add_option("config", config_path, "JSON system config")->required();
  analyze->add_option("--out", out_path, "report path ('-' = stdout)");

  auto* simulate = app.add_subcommand("simulate", "integrate the full system at eps > 0");
  simulate->add_option("config", config_path)->required();
  simulate->add_option("--eps", eps, "timescale separation")->required();
  simulate->add_option("--init", init_str, "comma-separated initial state")->required();
  simulate->add_option("--tmax", t_max, "slow-time horizon");
  simulate->add_option("--out", out_path, "CSV path ('-' = stdout)");

  auto* verify = app.add_subcommand("verify", "finite-eps convergence toward the singular orbit");
  verify->add_option("config", config_path)->required();
  verify->add_option("--eps-list", eps_list_str, "descending eps values")->required();
  verify->add_option("--init", init_str, "initial state (default: interior seed)");
  verify->add_option("--tmax", t_max, "slow-time horizon per run");
  verify->add_option("--out", out_path, "CSV path ('-' = stdout)");

  auto* cat = app.add_subcommand("catalog", "list or export bundled example systems");
  cat->add_option("--export", export_name, "model to export as a config file");
  cat->add_option("--out", out_path, "output path (default NAME.json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) return cmd_analyze(config_path, out_path);
    if (*simulate) return cmd_simulate(config_path, eps, init_str, t_max, out_path);
    if (*verify) return cmd_verify(config_path, eps_list_str, init_str, t_max, out_path);
    if (*cat) return cmd_catalog(export_name, cat->count("--out") > 0 ? out_path : "");
  } catch (const sfo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sfo::PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sfo::ode::OdeError& e) {
    std::cerr << "integration failure: " << e.what() << " at t=" << e.t;
    if (e.kind == sfo::ode::OdeError::Kind::StepUnderflow)
      std::cerr << " (for very small eps, reduce eps gradually or loosen tolerances)";
    std::cerr << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}
