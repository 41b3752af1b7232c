#include "sfo/system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sfo/orbit.hpp"

namespace sfo {

namespace {

double fd_step(double x) { return 1e-6 * std::max(1.0, std::abs(x)); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string fmt(const Vec& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

}  // namespace

Mat SlowFastSystem::jac_f(const Vec& p, const Vec& z) const {
  if (df_dp) return df_dp(p, z);
  Mat J(n, n);
  for (int k = 0; k < n; ++k) {
    const double hk = fd_step(p[k]);
    Vec pp = p, pm = p;
    pp[k] += hk;
    pm[k] -= hk;
    J.col(k) = (f(pp, z, 0.0) - f(pm, z, 0.0)) / (2 * hk);
  }
  return J;
}

Vec SlowFastSystem::grad_gz(int j, const Vec& p, const Vec& z) const {
  if (dgz_dp) return dgz_dp(j, p, z);
  Vec gr(n);
  for (int k = 0; k < n; ++k) {
    const double hk = fd_step(p[k]);
    Vec pp = p, pm = p;
    pp[k] += hk;
    pm[k] -= hk;
    gr[k] = (gz_partial(j, pp, z, 0.0) - gz_partial(j, pm, z, 0.0)) / (2 * hk);
  }
  return gr;
}

Vec SlowFastSystem::dh_dzj(int j, const Vec& p, const Vec& z) const {
  const double hj = fd_step(z[j]);
  Vec zp = z, zm = z;
  zp[j] += hj;
  zm[j] -= hj;
  return (h(p, zp, 0.0) - h(p, zm, 0.0)) / (2 * hj);
}

ode::VectorField slow_field(const SlowFastSystem& sys, const LegSpec& leg) {
  ode::VectorField vf;
  vf.dim = sys.n;
  const Vec z = leg.z;
  vf.eval = [&sys, z](double, const Vec& p, Vec& dp) { dp = sys.f(p, z, 0.0); };
  return vf;
}

ode::VectorField fast_field(const SlowFastSystem& sys) {
  ode::VectorField vf;
  vf.dim = sys.n + sys.m;
  vf.eval = [&sys](double, const Vec& y, Vec& dy) {
    const Vec p = y.head(sys.n);
    const Vec z = y.tail(sys.m);
    dy.head(sys.n) = sys.h(p, z, 0.0);
    dy.tail(sys.m) = sys.g(p, z, 0.0);
  };
  return vf;
}

bool AssumptionReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const AssumptionCheck& c) { return c.pass; });
}

const AssumptionCheck* AssumptionReport::find(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return &c;
  return nullptr;
}

namespace {

// Sampling box for the slow point: orbit hull when available, anchor hull otherwise.
std::pair<Vec, Vec> slow_box(const SlowFastSystem& sys, const ManifoldChain& chain,
                             const SingularOrbit* orbit, double margin) {
  Vec lo = Vec::Constant(sys.n, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  auto absorb = [&](const Vec& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  if (orbit && !orbit->legs.empty()) {
    for (const auto& tr : orbit->legs)
      for (const auto& s : tr.aug.states()) absorb(s.head(sys.n));
  } else {
    for (const auto& leg : chain.legs) absorb(leg.a_guess);
  }
  const Vec span = (hi - lo).cwiseMax(Vec::Constant(sys.n, 1e-3));
  return {lo - margin * span, hi + margin * span};
}

// Fast-coordinate sample values: finite bound faces plus chain values.
std::vector<double> fast_samples(const SlowFastSystem& sys, const ManifoldChain& chain,
                                 int j, int points) {
  std::vector<double> vals;
  const auto [lo, hi] = sys.z_bounds[j];
  if (std::isfinite(lo) && std::isfinite(hi)) {
    for (int k = 0; k < points; ++k)
      vals.push_back(lo + (hi - lo) * k / std::max(1, points - 1));
  } else {
    for (const auto& leg : chain.legs) vals.push_back(leg.z[j]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  }
  return vals;
}

void check_a1(const SlowFastSystem& sys, const ManifoldChain& chain,
              const SingularOrbit* orbit, const AssumptionOptions& opts,
              AssumptionCheck& out) {
  const auto [plo, phi] = slow_box(sys, chain, orbit, opts.box_margin);
  const int gp = std::max(2, opts.grid_points);
  double worst = 0;
  Vec worst_p;
  Vec worst_z;
  std::string worst_kind;

  // iterate a gp^n grid of slow points (n is small for the supported systems)
  std::vector<int> idx(sys.n, 0);
  const double eps_samples[] = {0.0, 1e-6, 1e-3};
  while (true) {
    Vec p(sys.n);
    for (int k = 0; k < sys.n; ++k)
      p[k] = plo[k] + (phi[k] - plo[k]) * idx[k] / (gp - 1);
    for (int j = 0; j < sys.m; ++j) {
      for (int face = 0; face < 2; ++face) {
        const double zf = sys.z_bounds[j][face];
        if (!std::isfinite(zf)) continue;
        // other fast coordinates roam over their sampled values
        std::vector<std::vector<double>> other(sys.m);
        for (int k = 0; k < sys.m; ++k)
          other[k] = (k == j) ? std::vector<double>{zf}
                              : fast_samples(sys, chain, k, 3);
        std::vector<std::size_t> zi(sys.m, 0);
        while (true) {
          Vec z(sys.m);
          for (int k = 0; k < sys.m; ++k) z[k] = other[k][zi[k]];
          for (const double eps : eps_samples) {
            const double rh = sys.h(p, z, eps).cwiseAbs().maxCoeff();
            const double rg = std::abs(sys.g(p, z, eps)[j]);
            if (rh > worst) {
              worst = rh;
              worst_p = p;
              worst_z = z;
              worst_kind = "h";
            }
            if (rg > worst) {
              worst = rg;
              worst_p = p;
              worst_z = z;
              worst_kind = "g^(" + std::to_string(j + 1) + ")";
            }
          }
          int c = 0;
          while (c < sys.m && ++zi[c] == other[c].size()) zi[c++] = 0;
          if (c == sys.m) break;
        }
      }
    }
    int c = 0;
    while (c < sys.n && ++idx[c] == gp) idx[c++] = 0;
    if (c == sys.n) break;
  }
  out.witnesses.push_back("max boundary residual " + fmt(worst) +
                          (worst_kind.empty() ? "" : " in " + worst_kind + " at p=" +
                                                         fmt(worst_p) + " z=" + fmt(worst_z)));
  out.pass = worst <= opts.a1_tol;
}

void check_a2(const SlowFastSystem& sys, const ManifoldChain& chain, AssumptionCheck& out) {
  const int N = chain.size();
  for (int i = 0; i < N; ++i) {
    const LegSpec& leg = chain.legs[i];
    if (leg.z.size() != sys.m || leg.a_guess.size() != sys.n) {
      out.pass = false;
      out.witnesses.push_back("leg " + std::to_string(i + 1) + " has wrong dimensions");
      continue;
    }
    for (int j = 0; j < sys.m; ++j) {
      const auto [lo, hi] = sys.z_bounds[j];
      const double zj = leg.z[j];
      if (!std::isfinite(zj) || (zj != lo && zj != hi)) {
        out.pass = false;
        out.witnesses.push_back("leg " + std::to_string(i + 1) + " component " +
                                std::to_string(j + 1) + " = " + fmt(zj) +
                                " is not a finite bound face");
      }
    }
    const LegSpec& prev = chain.leg(i - 1);
    for (int j = 0; j < sys.m; ++j) {
      if (j != leg.j_in && prev.z[j] != leg.z[j]) {
        out.pass = false;
        out.witnesses.push_back("legs " + std::to_string(((i - 1 + N) % N) + 1) + "->" +
                                std::to_string(i + 1) + " differ in component " +
                                std::to_string(j + 1) + " which is not the incoming jump");
      }
    }
  }
  for (int j = 0; j < sys.m; ++j) {
    const bool hit = std::any_of(chain.legs.begin(), chain.legs.end(),
                                 [j](const LegSpec& l) { return l.j_in == j; });
    if (!hit) {
      out.pass = false;
      out.witnesses.push_back("fast component " + std::to_string(j + 1) +
                              " never jumps along the chain");
    }
  }
  if (out.pass) out.witnesses.push_back("chain structure consistent");
}

void check_a3(const SlowFastSystem& sys, const ManifoldChain& chain,
              const SingularOrbit& orbit, AssumptionCheck& out) {
  for (int i = 0; i < chain.size(); ++i) {
    const LegTransit& tr = orbit.legs[i];
    const double fn = sys.f(tr.entry_p, chain.legs[i].z, 0.0).norm();
    if (fn < 1e-10) {
      out.pass = false;
      out.witnesses.push_back("leg " + std::to_string(i + 1) + ": f vanishes at entry");
    }
    if (!(tr.tau > 0)) {
      out.pass = false;
      out.witnesses.push_back("leg " + std::to_string(i + 1) + ": no transit");
    }
  }
  if (out.pass) out.witnesses.push_back("all legs have nonzero slow speed and finite transit");
}

void check_a4(const SlowFastSystem& sys, const ManifoldChain& chain,
              const SingularOrbit& orbit, AssumptionCheck& out) {
  for (int i = 0; i < chain.size(); ++i) {
    const int jo = chain.j_out(i);
    const Vec& z = chain.legs[i].z;
    const LegTransit& tr = orbit.legs[i];
    const double ga = sys.gz_partial(jo, tr.entry_p, z, 0.0);
    const double gb = sys.gz_partial(jo, tr.exit_p, z, 0.0);
    out.witnesses.push_back("leg " + std::to_string(i + 1) + ": gz(J_out) at entry " +
                            fmt(ga) + ", at exit " + fmt(gb));
    if (!(ga < 0)) {
      out.pass = false;
      out.witnesses.push_back("leg " + std::to_string(i + 1) +
                              ": landing side not attracting (gz >= 0)");
    }
    if (!(gb > 0)) {
      out.pass = false;
      out.witnesses.push_back("leg " + std::to_string(i + 1) +
                              ": exit side not repelling (gz <= 0)");
    }
  }
}

void check_a5(const SlowFastSystem& sys, const ManifoldChain& chain,
              const SingularOrbit& orbit, const AssumptionOptions& opts,
              AssumptionCheck& out) {
  for (int i = 0; i < chain.size(); ++i) {
    const LegTransit& tr = orbit.legs[i];
    const int jo = chain.j_out(i);
    const double t_lo = 1e-6 * tr.tau;
    for (int s = 1; s <= opts.a5_samples; ++s) {
      const double t = tr.tau * s / (opts.a5_samples + 1);
      if (t < t_lo) continue;
      const Vec st = tr.aug.eval(t);
      for (int j = 0; j < sys.m; ++j) {
        const double dj = st[sys.n + j];
        if (j == jo) {
          if (!(dj < 0)) {
            out.pass = false;
            out.witnesses.push_back("leg " + std::to_string(i + 1) +
                                    ": exiting accumulator nonnegative at tau=" + fmt(t));
          }
        } else if (j != chain.legs[i].j_in || t > 1e-3 * tr.tau) {
          if (std::abs(dj) < 1e-12) {
            out.pass = false;
            out.witnesses.push_back("leg " + std::to_string(i + 1) + ": component " +
                                    std::to_string(j + 1) +
                                    " accumulator vanishes at tau=" + fmt(t));
          }
        }
      }
    }
    if (std::abs(tr.exit_d[jo]) > 1e-8) {
      out.pass = false;
      out.witnesses.push_back("leg " + std::to_string(i + 1) +
                              ": exit accumulator not zero: " + fmt(tr.exit_d[jo]));
    }
    if (tr.premature_zero) {
      out.pass = false;
      out.witnesses.push_back("leg " + std::to_string(i + 1) + ": " + tr.premature_note);
    }
  }
  if (out.pass)
    out.witnesses.push_back("delay accumulators strictly negative in leg interiors");
}

}  // namespace

AssumptionReport check_assumptions(const SlowFastSystem& sys, const ManifoldChain& chain,
                                   const SingularOrbit* orbit,
                                   const AssumptionOptions& opts) {
  AssumptionReport rep;
  rep.checks.resize(orbit ? 5 : 2);
  rep.checks[0].id = "A1";
  check_a1(sys, chain, orbit, opts, rep.checks[0]);
  rep.checks[1].id = "A2";
  check_a2(sys, chain, rep.checks[1]);
  if (orbit) {
    rep.checks[2].id = "A3";
    check_a3(sys, chain, *orbit, rep.checks[2]);
    rep.checks[3].id = "A4";
    check_a4(sys, chain, *orbit, rep.checks[3]);
    rep.checks[4].id = "A5";
    check_a5(sys, chain, *orbit, opts, rep.checks[4]);
  }
  return rep;
}

}  // namespace sfo
