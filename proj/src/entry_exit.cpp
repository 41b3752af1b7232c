#include "sfo/entry_exit.hpp"

#include <cmath>
#include <sstream>

namespace sfo {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

ode::VectorField augmented_leg_field(const SlowFastSystem& sys, const Vec& z) {
  ode::VectorField vf;
  vf.dim = sys.n + sys.m;
  vf.eval = [&sys, z](double, const Vec& y, Vec& dy) {
    const Vec p = y.head(sys.n);
    dy.head(sys.n) = sys.f(p, z, 0.0);
    for (int j = 0; j < sys.m; ++j) dy[sys.n + j] = sys.gz_partial(j, p, z, 0.0);
  };
  return vf;
}

}  // namespace

LegTransit transit_leg(const SlowFastSystem& sys, const ManifoldChain& chain, int i,
                       const Vec& entry_p, const DelayState& entry_d,
                       const TransitOptions& opts) {
  const LegSpec& leg = chain.legs[i];
  const int jo = chain.j_out(i);
  const int n = sys.n, m = sys.m;

  if (std::abs(entry_d[leg.j_in]) > 1e-9)
    throw PreconditionError("leg " + std::to_string(i + 1) +
                            ": incoming component's delay must be zero at entry");
  const double gz_in = sys.gz_partial(jo, entry_p, leg.z, 0.0);
  if (!(entry_d[jo] < 0.0) && !(gz_in < 0.0))
    throw PreconditionError("leg " + std::to_string(i + 1) +
                            ": no delay credit and exit component not attracting");

  const ode::VectorField field = augmented_leg_field(sys, leg.z);
  Vec y0(n + m);
  y0.head(n) = entry_p;
  y0.tail(m) = entry_d;

  ode::EventSpec ev;
  ev.direction = ode::Crossing::Rising;
  ev.dead_band = opts.dead_band;
  ev.root_tol = opts.event_root_tol;
  ev.time_tol = opts.event_time_tol;
  ev.value = [n, jo](double, const Vec& y) { return y[n + jo]; };

  ode::IntegrateOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  ode::EventResult res = integrate_until(field, y0, 0.0, ev, opts.t_max, io);
  if (!res.found)
    throw NoExitError("leg " + std::to_string(i + 1) +
                          ": delay accumulator never returned to zero before t_max=" +
                          fmt(opts.t_max),
                      std::move(res.traj));

  LegTransit tr;
  tr.leg = i;
  tr.tau = res.t;
  tr.entry_p = entry_p;
  tr.entry_d = entry_d;
  tr.exit_p = res.y.head(n);
  tr.exit_d = res.y.tail(m);
  tr.aug = std::move(res.traj);

  // A5 witness scan: non-exiting accumulators must stay away from zero inside.
  const int scan = 100;
  for (int s = 1; s < scan && !tr.premature_zero; ++s) {
    const double t = tr.tau * s / scan;
    const Vec st = tr.aug.eval(t);
    for (int j = 0; j < m; ++j) {
      if (j == jo) continue;
      if (j == leg.j_in && t < 1e-3 * tr.tau) continue;  // starts at zero by design
      if (std::abs(st[n + j]) < 1e-12) {
        tr.premature_zero = true;
        tr.premature_note = "component " + std::to_string(j + 1) +
                            " accumulator touched zero at tau=" + fmt(t);
        break;
      }
    }
  }
  return tr;
}

LegJacobian leg_jacobian(const SlowFastSystem& sys, const ManifoldChain& chain, int i,
                         const LegTransit& transit, const TransitOptions& opts) {
  const LegSpec& leg = chain.legs[i];
  const int jo = chain.j_out(i);
  const int n = sys.n, m = sys.m;
  const Vec z = leg.z;

  // state: (p, L column-major, M column-major)
  ode::VectorField vf;
  vf.dim = n + n * n + m * n;
  vf.eval = [&sys, z, n, m](double, const Vec& y, Vec& dy) {
    const Vec p = y.head(n);
    Eigen::Map<const Mat> L(y.data() + n, n, n);
    dy.head(n) = sys.f(p, z, 0.0);
    const Mat Df = sys.jac_f(p, z);
    Eigen::Map<Mat>(dy.data() + n, n, n) = Df * L;
    Mat G(m, n);
    for (int j = 0; j < m; ++j) G.row(j) = sys.grad_gz(j, p, z).transpose();
    Eigen::Map<Mat>(dy.data() + n + n * n, m, n) = G * L;
  };

  Vec y0 = Vec::Zero(vf.dim);
  y0.head(n) = transit.entry_p;
  Eigen::Map<Mat>(y0.data() + n, n, n).setIdentity();

  ode::IntegrateOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  const ode::Trajectory traj = integrate(vf, y0, 0.0, transit.tau, io);
  const Vec& yf = traj.y_end();

  LegJacobian lj;
  lj.L = Eigen::Map<const Mat>(yf.data() + n, n, n);
  lj.M = Eigen::Map<const Mat>(yf.data() + n + n * n, m, n);
  lj.mu = lj.M.row(jo).transpose();

  const Vec fB = sys.f(transit.exit_p, z, 0.0);
  Vec gzB(m);
  for (int j = 0; j < m; ++j) gzB[j] = sys.gz_partial(j, transit.exit_p, z, 0.0);
  lj.gz_entry = sys.gz_partial(jo, transit.entry_p, z, 0.0);
  lj.gz_exit = gzB[jo];
  if (std::abs(lj.gz_exit) < 1e-10)
    throw DegenerateGzError("leg " + std::to_string(i + 1) +
                            ": exit gz below guard (normal hyperbolicity lost)");

  lj.DQ = lj.L - fB * lj.M.row(jo) / lj.gz_exit;

  // full derivative on (p, d), then restrict to section coordinates
  Mat D = Mat::Zero(n + m, n + m);
  D.topLeftCorner(n, n) = lj.DQ;
  D.block(0, n + jo, n, 1) = -fB / lj.gz_exit;
  for (int k = 0; k < m; ++k) {
    D.block(n + k, 0, 1, n) = lj.M.row(k) - gzB[k] * lj.M.row(jo) / lj.gz_exit;
    D(n + k, n + k) += 1.0;
    D(n + k, n + jo) += -gzB[k] / lj.gz_exit;
  }
  std::vector<int> rows, cols;
  for (int r = 0; r < n; ++r) rows.push_back(r);
  for (int k = 0; k < m; ++k)
    if (k != jo) rows.push_back(n + k);
  for (int c = 0; c < n; ++c) cols.push_back(c);
  for (int j = 0; j < m; ++j)
    if (j != leg.j_in) cols.push_back(n + j);
  lj.DQhat.resize(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) lj.DQhat(r, c) = D(rows[r], cols[c]);
  return lj;
}

namespace {

struct JumpGeometry {
  int j;                 // jumping component
  double z_from, z_to;   // face values
  double omega_from, omega_to;
  bool same_face;
  Vec fiber_base;        // fast coords with component j free
};

JumpGeometry jump_geometry(const SlowFastSystem& sys, const ManifoldChain& chain, int from,
                           int to) {
  JumpGeometry geo;
  geo.j = chain.legs[to].j_in;
  geo.z_from = chain.legs[from].z[geo.j];
  geo.z_to = chain.legs[to].z[geo.j];
  geo.same_face = geo.z_from == geo.z_to;
  auto omega = [&](double zf) {
    return zf == sys.z_bounds[geo.j][0] ? 1.0 : -1.0;  // +1 on the lower face
  };
  geo.omega_from = omega(geo.z_from);
  geo.omega_to = omega(geo.z_to);
  geo.fiber_base = chain.legs[from].z;
  return geo;
}

}  // namespace

ode::VectorField regularized_jump_field(const SlowFastSystem& sys, const ManifoldChain& chain,
                                        int to, const JumpOptions& opts) {
  const int from = (to + chain.size() - 1) % chain.size();
  const JumpGeometry geo = jump_geometry(sys, chain, from, to);
  const int n = sys.n;
  const double window = opts.series_window;

  ode::VectorField vf;
  vf.dim = n + 1;
  vf.eval = [&sys, geo, n, window](double, const Vec& y, Vec& dy) {
    const Vec p = y.head(n);
    const double q = y[n];
    Vec z = geo.fiber_base;
    z[geo.j] = q;

    struct Face {
      double zf, omega;
    };
    Face faces[2];
    int nfaces = 0;
    faces[nfaces++] = {geo.z_to, geo.omega_to};
    if (!geo.same_face) faces[nfaces++] = {geo.z_from, geo.omega_from};

    int near = -1;
    for (int k = 0; k < nfaces; ++k)
      if (std::abs(q - faces[k].zf) < window) near = k;

    double g_reg;
    Vec h_reg;
    if (near >= 0) {
      // series limit: g^(j)/(q - zf) -> dg^(j)/dz^(j), likewise for h
      g_reg = faces[near].omega * sys.gz_partial(geo.j, p, z, 0.0);
      h_reg = faces[near].omega * sys.dh_dzj(geo.j, p, z);
    } else {
      g_reg = sys.g(p, z, 0.0)[geo.j];
      h_reg = sys.h(p, z, 0.0);
    }
    for (int k = 0; k < nfaces; ++k) {
      if (k == near) continue;
      const double c = faces[k].omega / (q - faces[k].zf);
      g_reg *= c;
      h_reg *= c;
    }
    dy.head(n) = h_reg;
    dy[n] = g_reg;
  };
  return vf;
}

RegJumpOrbit regularized_jump_orbit(const SlowFastSystem& sys, const ManifoldChain& chain,
                                    int to, const Vec& exit_p, const JumpOptions& opts) {
  const int from = (to + chain.size() - 1) % chain.size();
  const JumpGeometry geo = jump_geometry(sys, chain, from, to);
  const ode::VectorField vf = regularized_jump_field(sys, chain, to, opts);

  Vec y0(sys.n + 1);
  y0.head(sys.n) = exit_p;
  y0[sys.n] = geo.z_from;

  ode::EventSpec ev;
  ev.value = [n = sys.n, zt = geo.z_to](double, const Vec& y) { return y[n] - zt; };
  ev.direction = geo.same_face
                     ? (geo.omega_to > 0 ? ode::Crossing::Falling : ode::Crossing::Rising)
                     : (geo.z_to > geo.z_from ? ode::Crossing::Rising
                                              : ode::Crossing::Falling);
  ev.dead_band = 1e-8;

  ode::IntegrateOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  ode::EventResult res = integrate_until(vf, y0, 0.0, ev, opts.t_max, io);
  if (!res.found)
    throw NoHeteroclinicError(
        "regularized jump into leg " + std::to_string(to + 1) + " never reaches the target face",
        std::move(res.traj));
  for (const Vec& s : res.traj.states())
    if (s.cwiseAbs().maxCoeff() > opts.box_scale)
      throw NoHeteroclinicError("regularized jump escapes the state box", std::move(res.traj));

  RegJumpOrbit out;
  out.t1 = res.t;
  out.landing_p = res.y.head(sys.n);
  out.traj = std::move(res.traj);
  return out;
}

namespace {

bool h_vanishes_on_fiber(const SlowFastSystem& sys, const JumpGeometry& geo,
                         const Vec& exit_p) {
  if (sys.h_zero) return true;
  const double lo = geo.z_from, hi = geo.same_face ? geo.z_from + geo.omega_from : geo.z_to;
  for (int k = 0; k <= 10; ++k) {
    Vec z = geo.fiber_base;
    z[geo.j] = lo + (hi - lo) * k / 10.0;
    if (sys.h(exit_p, z, 0.0).cwiseAbs().maxCoeff() > 1e-12) return false;
  }
  return true;
}

// Physical jump run at one seeding offset; returns the landing slow point.
std::pair<Vec, ode::Trajectory> physical_jump(const SlowFastSystem& sys,
                                              const JumpGeometry& geo, const Vec& exit_p,
                                              double delta, const JumpOptions& opts) {
  const int n = sys.n, m = sys.m;
  ode::VectorField vf = fast_field(sys);

  Vec y0(n + m);
  y0.head(n) = exit_p;
  y0.tail(m) = geo.fiber_base;
  y0[n + geo.j] = geo.z_from + geo.omega_from * delta;

  ode::EventSpec ev;
  ev.direction = ode::Crossing::Falling;
  ev.dead_band = 1e-10;
  ev.value = [n, m, geo, &sys, &opts](double, const Vec& y) {
    const double zdist = std::abs(y[n + geo.j] - geo.z_to) - opts.delta_land;
    Vec dy(n + m);
    const Vec p = y.head(n);
    const Vec z = y.tail(m);
    dy.head(n) = sys.h(p, z, 0.0);
    dy.tail(m) = sys.g(p, z, 0.0);
    const double speed = dy.norm() - opts.v_land;
    return std::max(zdist, speed);
  };

  ode::IntegrateOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  ode::EventResult res = integrate_until(vf, y0, 0.0, ev, opts.t_max, io);
  for (const Vec& s : res.traj.states())
    if (s.cwiseAbs().maxCoeff() > opts.box_scale)
      throw NoHeteroclinicError("fast trajectory escapes the state box (no heteroclinic)",
                                std::move(res.traj));
  if (!res.found)
    throw NoHeteroclinicError("fast trajectory did not land before t_max",
                              std::move(res.traj));
  return {res.y.head(n), std::move(res.traj)};
}

}  // namespace

JumpMapResult jump_map(const SlowFastSystem& sys, const ManifoldChain& chain, int from,
                       int to, const Vec& exit_p, const JumpOptions& opts) {
  if ((from + 1) % chain.size() != to)
    throw PreconditionError("jump must connect consecutive legs");
  const JumpGeometry geo = jump_geometry(sys, chain, from, to);

  const double gz_exit = sys.gz_partial(geo.j, exit_p, chain.legs[from].z, 0.0);
  if (!(gz_exit > 0))
    throw PreconditionError("exit point is not repelling in the jumping component (gz = " +
                            fmt(gz_exit) + ")");

  JumpMapResult out;
  if (h_vanishes_on_fiber(sys, geo, exit_p)) {
    out.identity = true;
    out.landing_p = exit_p;
    auto [land, traj] = physical_jump(sys, geo, exit_p, opts.delta_jump, opts);
    out.fast_traj = std::move(traj);
    return out;
  }
  auto [land1, traj1] = physical_jump(sys, geo, exit_p, opts.delta_jump, opts);
  auto [land2, traj2] = physical_jump(sys, geo, exit_p, opts.delta_jump / 2, opts);
  out.landing_p = 2.0 * land2 - land1;  // linear Richardson in the seed offset
  out.fast_traj = std::move(traj1);
  return out;
}

JumpJacobian jump_jacobian(const SlowFastSystem& sys, const ManifoldChain& chain, int from,
                           int to, const Vec& exit_p, const JumpOptions& opts) {
  if ((from + 1) % chain.size() != to)
    throw PreconditionError("jump must connect consecutive legs");
  const int n = sys.n;
  const JumpGeometry geo = jump_geometry(sys, chain, from, to);

  JumpJacobian jj;
  if (h_vanishes_on_fiber(sys, geo, exit_p)) {
    jj.identity = true;
    jj.R = Mat::Identity(n, n);
    jj.nu = Vec::Zero(n);
    jj.Dpi = Mat::Identity(n, n);
    return jj;
  }

  const ode::VectorField reg = regularized_jump_field(sys, chain, to, opts);
  const RegJumpOrbit orbit = regularized_jump_orbit(sys, chain, to, exit_p, opts);

  // FD Jacobian of the regularized field
  auto reg_jac = [&](const Vec& y) {
    Mat J(n + 1, n + 1);
    Vec fp(n + 1), fm(n + 1), yp = y, ym = y;
    for (int c = 0; c <= n; ++c) {
      const double hc = 1e-6 * std::max(1.0, std::abs(y[c]));
      yp[c] += hc;
      ym[c] -= hc;
      reg.eval(0.0, yp, fp);
      reg.eval(0.0, ym, fm);
      J.col(c) = (fp - fm) / (2 * hc);
      yp[c] = y[c];
      ym[c] = y[c];
    }
    return J;
  };

  // state: (p, q, V column-major (n+1)^2, trace integral)
  const int k = n + 1;
  ode::VectorField vf;
  vf.dim = k + k * k + 1;
  Vec base(k);
  vf.eval = [&, base](double, const Vec& y, Vec& dy) mutable {
    base = y.head(k);
    Vec db(k);
    reg.eval(0.0, base, db);
    const Mat J = reg_jac(base);
    dy.head(k) = db;
    Eigen::Map<const Mat> V(y.data() + k, k, k);
    Eigen::Map<Mat>(dy.data() + k, k, k) = J * V;
    dy[k + k * k] = J.trace();
  };

  Vec y0 = Vec::Zero(vf.dim);
  y0.head(n) = exit_p;
  y0[n] = geo.z_from;
  Eigen::Map<Mat>(y0.data() + k, k, k).setIdentity();

  ode::IntegrateOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  const ode::Trajectory traj = integrate(vf, y0, 0.0, orbit.t1, io);
  const Vec& yf = traj.y_end();
  const Mat V = Eigen::Map<const Mat>(yf.data() + k, k, k);
  jj.trace_integral = yf[k + k * k];
  jj.R = V.topLeftCorner(n, n);
  jj.nu = V.block(n, 0, 1, n).transpose();

  // regularized field values at landing and exit
  Vec fl(k), fe(k), yl(k), ye(k);
  yl.head(n) = orbit.landing_p;
  yl[n] = geo.z_to;
  ye.head(n) = exit_p;
  ye[n] = geo.z_from;
  reg.eval(0.0, yl, fl);
  reg.eval(0.0, ye, fe);
  const double g_land = fl[n];
  if (std::abs(g_land) < 1e-10)
    throw DegenerateGzError("jump into leg " + std::to_string(to + 1) +
                            ": landing-side fast factor below guard");
  jj.Dpi = jj.R - fl.head(n) * jj.nu.transpose() / g_land;
  if (n == 1) jj.abel = fe[n] / g_land * std::exp(jj.trace_integral);
  return jj;
}

}  // namespace sfo
