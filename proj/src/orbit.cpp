#include "sfo/orbit.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace sfo {

const char* to_string(Classification c) {
  switch (c) {
    case Classification::Stable: return "stable";
    case Classification::Unstable: return "unstable";
    case Classification::Inconclusive: return "inconclusive";
  }
  return "?";
}

Vec pack_section(const SlowFastSystem& sys, const ManifoldChain& chain, const Vec& p,
                 const DelayState& d) {
  Vec x(sys.n + sys.m - 1);
  x.head(sys.n) = p;
  int c = sys.n;
  for (int j = 0; j < sys.m; ++j)
    if (j != chain.legs[0].j_in) x[c++] = d[j];
  return x;
}

std::pair<Vec, DelayState> unpack_section(const SlowFastSystem& sys,
                                          const ManifoldChain& chain, const Vec& x) {
  Vec p = x.head(sys.n);
  DelayState d = Vec::Zero(sys.m);
  int c = sys.n;
  for (int j = 0; j < sys.m; ++j)
    if (j != chain.legs[0].j_in) d[j] = x[c++];
  return {std::move(p), std::move(d)};
}

Vec return_map(const SlowFastSystem& sys, const ManifoldChain& chain, const Vec& x,
               const OrbitOptions& opts, ReturnMapDetail* detail) {
  const int N = chain.size();
  const int sec = sys.n + sys.m - 1;
  auto [p, d] = unpack_section(sys, chain, x);

  Mat DP;
  if (detail) {
    detail->legs.clear();
    detail->landings.clear();
    detail->leg_jacobians.clear();
    detail->jump_jacobians.clear();
    DP = Mat::Identity(sec, sec);
  }

  for (int i = 0; i < N; ++i) {
    LegTransit tr = transit_leg(sys, chain, i, p, d, opts.transit);
    const int jo = chain.j_out(i);
    if (detail) {
      LegJacobian lj = leg_jacobian(sys, chain, i, tr, opts.transit);
      DP = lj.DQhat * DP;
      detail->leg_jacobians.push_back(std::move(lj));
    }
    p = tr.exit_p;
    d = tr.exit_d;
    d[jo] = 0.0;  // pinned exactly at the jump epoch

    const int to = (i + 1) % N;
    JumpMapResult jm = jump_map(sys, chain, i, to, p, opts.jump);
    if (detail) {
      JumpJacobian jj = jump_jacobian(sys, chain, i, to, p, opts.jump);
      Mat B = Mat::Identity(sec, sec);
      B.topLeftCorner(sys.n, sys.n) = jj.Dpi;
      DP = B * DP;
      detail->jump_jacobians.push_back(std::move(jj));
      detail->landings.push_back(jm.landing_p);
      detail->legs.push_back(std::move(tr));
    }
    p = jm.landing_p;
  }
  if (detail) detail->DP = std::move(DP);
  return pack_section(sys, chain, p, d);
}

namespace {

// Seeds the free delay coordinates by chasing anchor guesses around the chain
// twice, accumulating every component's integral and resetting it at its jumps.
DelayState pilot_delays(const SlowFastSystem& sys, const ManifoldChain& chain,
                        const OrbitOptions& opts) {
  const int N = chain.size();
  DelayState d = Vec::Zero(sys.m);
  ode::IntegrateOptions io;
  io.rtol = opts.transit.rtol;
  io.atol = opts.transit.atol;
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < N; ++i) {
      const LegSpec& leg = chain.legs[i];
      const LegSpec& next = chain.legs[(i + 1) % N];
      ode::VectorField vf;
      vf.dim = sys.n + sys.m;
      const Vec z = leg.z;
      vf.eval = [&sys, z](double, const Vec& y, Vec& dy) {
        const Vec p = y.head(sys.n);
        dy.head(sys.n) = sys.f(p, z, 0.0);
        for (int j = 0; j < sys.m; ++j) dy[sys.n + j] = sys.gz_partial(j, p, z, 0.0);
      };
      Vec y0(sys.n + sys.m);
      y0.head(sys.n) = leg.a_guess;
      y0.tail(sys.m) = d;
      const ode::Trajectory traj = integrate(vf, y0, 0.0, opts.pilot_horizon, io);
      double best = std::numeric_limits<double>::infinity();
      Vec best_d = d;
      const int samples = 2000;
      for (int s = 1; s <= samples; ++s) {
        const double t = opts.pilot_horizon * s / samples;
        const Vec st = traj.eval(t);
        const double dist = (st.head(sys.n) - next.a_guess).norm();
        if (dist < best) {
          best = dist;
          best_d = st.tail(sys.m);
        }
      }
      d = best_d;
      d[next.j_in] = 0.0;
    }
  }
  return d;
}

}  // namespace

std::pair<SingularOrbit, StabilityReport> find_singular_orbit(const SlowFastSystem& sys,
                                                              const ManifoldChain& chain,
                                                              const OrbitOptions& opts) {
  const int sec = sys.n + sys.m - 1;
  DelayState d0 = sys.m > 1 ? pilot_delays(sys, chain, opts) : Vec::Zero(sys.m);
  Vec x = pack_section(sys, chain, chain.legs[0].a_guess, d0);

  ReturnMapDetail detail;
  double res_norm = std::numeric_limits<double>::infinity();
  bool converged = false;

  for (int it = 0; it < opts.max_iterations; ++it) {
    const Vec Px = return_map(sys, chain, x, opts, &detail);
    const Vec G = Px - x;
    res_norm = G.cwiseAbs().maxCoeff();
    if (res_norm < opts.newton_tol) {
      converged = true;
      break;
    }
    const Mat A = detail.DP - Mat::Identity(sec, sec);
    Vec step = A.colPivHouseholderQr().solve(-G);
    double scale = 1.0;
    for (int halve = 0; halve <= opts.max_halvings; ++halve) {
      try {
        const Vec trial = return_map(sys, chain, x + scale * step, opts, nullptr);
        const double trial_res = (trial - (x + scale * step)).cwiseAbs().maxCoeff();
        if (trial_res < res_norm || halve == opts.max_halvings) {
          x += scale * step;
          break;
        }
      } catch (const std::exception&) {
        if (halve == opts.max_halvings)
          throw SolverError("singular-orbit iteration left the admissible region");
      }
      scale *= 0.5;
    }
  }
  if (!converged)
    throw SolverError("singular-orbit iteration did not converge: residual " +
                      std::to_string(res_norm));

  SingularOrbit orbit;
  orbit.legs = std::move(detail.legs);
  orbit.landings = std::move(detail.landings);
  orbit.leg_jacobians = std::move(detail.leg_jacobians);
  orbit.jump_jacobians = std::move(detail.jump_jacobians);
  orbit.section_point = x;
  orbit.residual = res_norm;

  StabilityReport rep;
  rep.margin = opts.margin;
  rep.DP = detail.DP;
  const Eigen::EigenSolver<Mat> es(rep.DP);
  rep.spectral_radius = 0;
  for (int i = 0; i < sec; ++i) {
    rep.eigenvalues.push_back(es.eigenvalues()[i]);
    rep.spectral_radius = std::max(rep.spectral_radius, std::abs(es.eigenvalues()[i]));
  }
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
            [](auto a, auto b) { return std::abs(a) > std::abs(b); });
  rep.det_DP_minus_I = (rep.DP - Mat::Identity(sec, sec)).fullPivLu().determinant();
  if (std::abs(rep.det_DP_minus_I) < rep.margin)
    rep.classification = Classification::Inconclusive;
  else if (rep.spectral_radius < 1.0 - rep.margin)
    rep.classification = Classification::Stable;
  else if (rep.spectral_radius > 1.0 + rep.margin)
    rep.classification = Classification::Unstable;
  else
    rep.classification = Classification::Inconclusive;
  return {std::move(orbit), std::move(rep)};
}

double planar_lambda(const SlowFastSystem& sys, const ManifoldChain& chain, double a0,
                     double a1, const OrbitOptions& opts, PlanarDetail* detail) {
  if (sys.n != 1 || sys.m != 1 || chain.size() != 1)
    throw PreconditionError("planar criterion requires n = 1, m = 1, single-leg chain");
  const Vec z = chain.legs[0].z;
  PlanarDetail local;
  PlanarDetail& det = detail ? *detail : local;
  det.conditions_ok = true;
  auto fail = [&](const std::string& note) {
    det.conditions_ok = false;
    det.condition_notes.push_back(note);
  };

  auto F = [&](double a) { return sys.f(Vec::Constant(1, a), z, 0.0)[0]; };
  auto G0 = [&](double a) { return sys.gz_partial(0, Vec::Constant(1, a), z, 0.0); };

  // (ii) positive slow speed between entry and exit
  for (int s = 0; s <= 200; ++s) {
    const double a = a0 + (a1 - a0) * s / 200.0;
    if (!(F(a) > 0)) {
      fail("slow speed not positive at a=" + std::to_string(a));
      break;
    }
  }
  // (iii) endpoint normal stability signs
  if (!(G0(a0) < 0)) fail("entry point not attracting");
  if (!(G0(a1) > 0)) fail("exit point not repelling");

  // (iv) delay integral: zero at a1, strictly negative inside
  {
    ode::VectorField vf;
    vf.dim = 1;
    vf.eval = [&](double a, const Vec&, Vec& dy) { dy[0] = G0(a) / F(a); };
    const ode::Trajectory traj = integrate(vf, Vec::Zero(1), a0, a1, {});
    const double total = traj.y_end()[0];
    if (std::abs(total) > 1e-6)
      fail("delay integral over the leg is " + std::to_string(total) + ", not zero");
    for (int s = 1; s < 200; ++s) {
      const double a = a0 + (a1 - a0) * s / 200.0;
      if (!(traj.eval(a)[0] < 0)) {
        fail("delay integral not negative at a=" + std::to_string(a));
        break;
      }
    }
  }
  if (!det.conditions_ok)
    throw PreconditionError("planar conditions violated: " + det.condition_notes.front());

  // jump quantities along the regularized heteroclinic from (a1, face)
  const Vec exit_p = Vec::Constant(1, a1);
  const JumpJacobian jj = jump_jacobian(sys, chain, 0, 0, exit_p, opts.jump);
  const RegJumpOrbit orb = regularized_jump_orbit(sys, chain, 0, exit_p, opts.jump);
  det.landing_mismatch = std::abs(orb.landing_p[0] - a0);
  if (det.landing_mismatch > 1e-3)
    throw PreconditionError("fast connection lands at " + std::to_string(orb.landing_p[0]) +
                            ", not at the slow entry " + std::to_string(a0));

  det.divergence_integral = jj.trace_integral;
  det.log_F_ratio = std::log(std::abs(F(a1) / F(a0)));
  det.lambda = det.log_F_ratio + det.divergence_integral;

  // closed-form cross-check of the sign via the composed one-dimensional map
  det.dQ_da = (F(a1) / G0(a1)) * (G0(a0) / F(a0));
  det.dpi_da = jj.abel;
  const double composed = std::abs(det.dpi_da * det.dQ_da);
  const int sign_from_map = composed > 1.0 ? 1 : -1;
  const int sign_lambda = det.lambda > 0 ? 1 : -1;
  if (std::abs(det.lambda) > 1e-9 && sign_from_map != sign_lambda)
    throw PreconditionError("stability exponent sign disagrees with the composed map");
  return det.lambda;
}

}  // namespace sfo
