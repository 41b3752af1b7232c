#pragma once

#include "sfo/system.hpp"

namespace sfo {

/// Per-component delay accumulators: d^(j) integrates dg^(j)/dz^(j) along slow
/// legs since component j's last jump; d^(j) <= 0 in leg interiors and exactly
/// 0 at j's jump epochs. (Printed entry delays are zeta = -d.)
using DelayState = Vec;

struct TransitOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double t_max = 1e4;
  double dead_band = 1e-8;
  double event_root_tol = 1e-12;
  double event_time_tol = 1e-10;
};

struct NoExitError : std::runtime_error {
  ode::Trajectory traj;
  NoExitError(std::string msg, ode::Trajectory t)
      : std::runtime_error(std::move(msg)), traj(std::move(t)) {}
};

struct LegTransit {
  int leg = 0;
  double tau = 0.0;
  Vec entry_p, exit_p;
  DelayState entry_d, exit_d;
  ode::Trajectory aug;  // augmented states (p, d), dense over [0, tau]
  bool premature_zero = false;  // a non-exiting accumulator touched zero
  std::string premature_note;
};

/// Integrates dp/dtau = f(p, z_i, 0), dd^(j)/dtau = gz_j(p) until the exiting
/// component's accumulator rises through zero.
LegTransit transit_leg(const SlowFastSystem& sys, const ManifoldChain& chain, int i,
                       const Vec& entry_p, const DelayState& entry_d,
                       const TransitOptions& opts = {});

struct LegJacobian {
  Mat L;      // n x n fundamental matrix at tau
  Mat M;      // m x n, row k = integral of grad gz_k composed with L
  Vec mu;     // row J_out of M
  Mat DQ;     // n x n slow-block derivative
  Mat DQhat;  // (n+m-1) x (n+m-1) on section coordinates
  double gz_entry = 0, gz_exit = 0;  // exiting component's partial at A_i, B_i
};

LegJacobian leg_jacobian(const SlowFastSystem& sys, const ManifoldChain& chain, int i,
                         const LegTransit& transit, const TransitOptions& opts = {});

struct JumpOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double delta_jump = 1e-3;   // seeding offset off the exit face
  double delta_land = 1e-3;   // landing gate on |z^(J) - z_to^(J)|
  double v_land = 1e-6;       // landing gate on fast speed
  double t_max = 1e4;
  double box_scale = 1e4;     // escape box: |state| beyond this aborts
  double series_window = 1e-6;  // switch to gz series near the face
};

struct NoHeteroclinicError : std::runtime_error {
  ode::Trajectory traj;
  NoHeteroclinicError(std::string msg, ode::Trajectory t)
      : std::runtime_error(std::move(msg)), traj(std::move(t)) {}
};

struct JumpMapResult {
  Vec landing_p;
  ode::Trajectory fast_traj;  // (p, z) states of the delta_jump = delta_jump[0] run
  bool identity = false;      // h == 0 on the fiber: landing_p == exit_p exactly
};

/// Fast transition entering leg `to`; for h == 0 the slow point is fixed.
/// Otherwise integrates the limiting fast field from a seed delta off the exit
/// face and Richardson-extrapolates the landing point in the seed offset.
JumpMapResult jump_map(const SlowFastSystem& sys, const ManifoldChain& chain, int from,
                       int to, const Vec& exit_p, const JumpOptions& opts = {});

/// Regularized jump system on (p, q): the fast field along the jump fiber with
/// the vanishing fast factor divided out; finite transit time between faces.
ode::VectorField regularized_jump_field(const SlowFastSystem& sys, const ManifoldChain& chain,
                                        int to, const JumpOptions& opts = {});

struct RegJumpOrbit {
  double t1 = 0;       // regularized transit time
  Vec landing_p;
  ode::Trajectory traj;  // (p, q) states
};

RegJumpOrbit regularized_jump_orbit(const SlowFastSystem& sys, const ManifoldChain& chain,
                                    int to, const Vec& exit_p, const JumpOptions& opts = {});

struct JumpJacobian {
  Mat R;       // n x n
  Vec nu;      // length n
  Mat Dpi;     // n x n
  bool identity = false;
  double abel = std::numeric_limits<double>::quiet_NaN();  // n == 1 cross-check
  double trace_integral = 0;
};

JumpJacobian jump_jacobian(const SlowFastSystem& sys, const ManifoldChain& chain, int from,
                           int to, const Vec& exit_p, const JumpOptions& opts = {});

}  // namespace sfo
