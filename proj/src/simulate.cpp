#include "sfo/simulate.hpp"

#include <cmath>

#include "sfo/entry_exit.hpp"

namespace sfo {

ode::Trajectory run(const SlowFastSystem& sys, double eps, const Vec& init, double t_max,
                    const SimOptions& opts) {
  if (!(eps > 0)) throw PreconditionError("eps must be positive");
  if (init.size() != sys.n + sys.m)
    throw PreconditionError("initial state must have n + m components");
  for (int j = 0; j < sys.m; ++j) {
    const auto [lo, hi] = sys.z_bounds[j];
    if (!(init[sys.n + j] > lo && init[sys.n + j] < hi))
      throw PreconditionError("fast component " + std::to_string(j + 1) +
                              " must start strictly between its bounds");
  }

  ode::VectorField vf;
  vf.dim = sys.n + sys.m;
  vf.eval = [&sys, eps](double, const Vec& y, Vec& dy) {
    const Vec p = y.head(sys.n);
    const Vec z = y.tail(sys.m);
    dy.head(sys.n) = sys.f(p, z, eps) + sys.h(p, z, eps) / eps;
    dy.tail(sys.m) = sys.g(p, z, eps) / eps;
  };
  ode::IntegrateOptions io;
  io.rtol = opts.rtol;
  io.atol = opts.atol;
  ode::Trajectory traj = integrate(vf, init, 0.0, t_max, io);
  for (const Vec& s : traj.states())
    if (s.cwiseAbs().maxCoeff() > opts.box_scale)
      throw SimulationError("trajectory escaped the state box");
  return traj;
}

std::vector<Vec> singular_polyline(const SlowFastSystem& sys, const ManifoldChain& chain,
                                   const SingularOrbit& orbit, int per_leg) {
  const int N = chain.size();
  std::vector<Vec> poly;
  for (int i = 0; i < N; ++i) {
    const LegTransit& tr = orbit.legs[i];
    for (int s = 0; s <= per_leg; ++s) {
      const double t = tr.tau * s / per_leg;
      const Vec st = tr.aug.eval(t);
      Vec full(sys.n + sys.m);
      full.head(sys.n) = st.head(sys.n);
      full.tail(sys.m) = chain.legs[i].z;
      poly.push_back(std::move(full));
    }
    // jump fiber into the next leg
    const int to = (i + 1) % N;
    const int j = chain.legs[to].j_in;
    if (sys.h_zero) {
      const Vec& p = orbit.landings[i];
      for (int s = 0; s <= 50; ++s) {
        Vec full(sys.n + sys.m);
        full.head(sys.n) = p;
        full.tail(sys.m) = chain.legs[i].z;
        full[sys.n + j] = chain.legs[i].z[j] +
                          (chain.legs[to].z[j] - chain.legs[i].z[j]) * s / 50.0;
        poly.push_back(std::move(full));
      }
    } else {
      const RegJumpOrbit reg =
          regularized_jump_orbit(sys, chain, to, orbit.legs[i].exit_p, {});
      for (int s = 0; s <= 100; ++s) {
        const double t = reg.t1 * s / 100.0;
        const Vec st = reg.traj.eval(t);
        Vec full(sys.n + sys.m);
        full.head(sys.n) = st.head(sys.n);
        full.tail(sys.m) = chain.legs[i].z;
        full[sys.n + j] = st[sys.n];
        poly.push_back(std::move(full));
      }
    }
  }
  poly.push_back(poly.front());  // closed
  return poly;
}

std::vector<Vec> resample_polyline(const std::vector<Vec>& poly, int count) {
  std::vector<double> arc(poly.size(), 0.0);
  for (std::size_t i = 1; i < poly.size(); ++i)
    arc[i] = arc[i - 1] + (poly[i] - poly[i - 1]).norm();
  const double total = arc.back();
  std::vector<Vec> out;
  out.reserve(count);
  std::size_t seg = 0;
  for (int k = 0; k < count; ++k) {
    const double s = total * k / (count - 1);
    while (seg + 1 < arc.size() && arc[seg + 1] < s) ++seg;
    if (seg + 1 >= poly.size()) {
      out.push_back(poly.back());
      continue;
    }
    const double den = arc[seg + 1] - arc[seg];
    const double w = den > 0 ? (s - arc[seg]) / den : 0.0;
    out.push_back(poly[seg] + w * (poly[seg + 1] - poly[seg]));
  }
  return out;
}

namespace {

double point_segment_dist(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double worst = 0;
  for (const Vec& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
      best = std::min(best, point_segment_dist(p, b[i], b[i + 1]));
    worst = std::max(worst, best);
  }
  return worst;
}

CycleData extract_cycle(const SlowFastSystem& sys, const ManifoldChain& chain,
                        const SingularOrbit& orbit, const ode::Trajectory& traj,
                        double t_burn, const SimOptions& opts) {
  const Vec A1 = orbit.legs[0].entry_p;
  const Vec z1 = chain.legs[0].z;
  Vec normal = sys.f(A1, z1, 0.0);
  normal /= normal.norm();

  // gate radius from the singular orbit's slow-point extent
  double pdiam = 0;
  for (const auto& tr : orbit.legs)
    for (const auto& st : tr.aug.states())
      pdiam = std::max(pdiam, (st.head(sys.n) - A1).norm());
  const double gate = opts.gate_fraction * std::max(pdiam, 1e-6);

  auto s_of = [&](const Vec& y) { return normal.dot(y.head(sys.n) - A1); };

  CycleData cd;
  const auto& ts = traj.times();
  const int scan = 20000;
  const double t0 = traj.t_begin(), t1 = traj.t_end();
  double prev_t = t0, prev_s = s_of(traj.eval(t0));
  for (int k = 1; k <= scan; ++k) {
    const double t = t0 + (t1 - t0) * k / scan;
    const double s = s_of(traj.eval(t));
    if (prev_s < 0 && s >= 0 && t > t_burn) {
      // bisect
      double lo = prev_t, hi = t;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (s_of(traj.eval(mid)) < 0 ? lo : hi) = mid;
      }
      const Vec y = traj.eval(hi);
      if ((y.head(sys.n) - A1).norm() <= gate) {
        cd.crossing_times.push_back(hi);
        cd.crossing_states.push_back(y);
      }
    }
    prev_t = t;
    prev_s = s;
  }
  (void)ts;
  if (cd.crossing_times.size() < 2)
    throw SimulationError("cycle detection failed: fewer than two section returns after burn-in");

  const double ta = cd.crossing_times[cd.crossing_times.size() - 2];
  const double tb = cd.crossing_times.back();
  cd.period = tb - ta;
  const Vec ya = traj.eval(ta), yb = traj.eval(tb);
  std::vector<Vec> raw;
  const int samples = 2000;
  for (int k = 0; k <= samples; ++k) raw.push_back(traj.eval(ta + (tb - ta) * k / samples));
  double diam = 0;
  for (const auto& p : raw) diam = std::max(diam, (p - raw.front()).norm());
  if ((yb - ya).norm() > 0.1 * std::max(diam, 1e-9))
    throw SimulationError("cycle detection failed: successive returns do not recur");
  cd.points = resample_polyline(raw, 1000);
  return cd;
}

std::vector<ConvergenceRow> convergence_study(const SlowFastSystem& sys,
                                              const ManifoldChain& chain,
                                              const SingularOrbit& orbit,
                                              const std::vector<double>& eps_list,
                                              const Vec& init, double t_max,
                                              const SimOptions& opts) {
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw PreconditionError("eps list must be strictly descending");

  const std::vector<Vec> sing = resample_polyline(singular_polyline(sys, chain, orbit), 1000);
  const double t_burn = opts.t_burn >= 0 ? opts.t_burn : 0.5 * t_max;

  std::vector<ConvergenceRow> rows;
  for (const double eps : eps_list) {
    const ode::Trajectory traj = run(sys, eps, init, t_max, opts);
    const CycleData cd = extract_cycle(sys, chain, orbit, traj, t_burn, opts);
    rows.push_back({eps, directed_hausdorff(cd.points, sing), cd.period});
  }
  return rows;
}

}  // namespace sfo
