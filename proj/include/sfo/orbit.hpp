#pragma once

#include <complex>

#include "sfo/entry_exit.hpp"

namespace sfo {

struct SingularOrbit {
  std::vector<LegTransit> legs;          // converged transit per leg
  std::vector<Vec> landings;             // landing point entering leg i
  std::vector<LegJacobian> leg_jacobians;
  std::vector<JumpJacobian> jump_jacobians;
  Vec section_point;                     // (p, d^(j) for j != j_in of leg 0)
  double residual = 0;                   // ||P(x) - x||_inf at convergence
};

enum class Classification { Stable, Unstable, Inconclusive };

const char* to_string(Classification c);

struct StabilityReport {
  Mat DP;  // section dimension: n + m - 1
  std::vector<std::complex<double>> eigenvalues;
  double spectral_radius = 0;
  double det_DP_minus_I = 0;
  Classification classification = Classification::Inconclusive;
  double margin = 1e-3;
};

struct OrbitOptions {
  double newton_tol = 1e-9;
  int max_iterations = 50;
  int max_halvings = 8;
  double margin = 1e-3;
  double pilot_horizon = 50.0;  // per-leg horizon of the delay-seeding pre-pass
  TransitOptions transit;
  JumpOptions jump;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Section coordinates at leg-0 entry: slow point then free delay components
/// (ascending j, skipping leg 0's incoming component, whose delay is pinned 0).
Vec pack_section(const SlowFastSystem& sys, const ManifoldChain& chain, const Vec& p,
                 const DelayState& d);
std::pair<Vec, DelayState> unpack_section(const SlowFastSystem& sys,
                                          const ManifoldChain& chain, const Vec& x);

struct ReturnMapDetail {
  std::vector<LegTransit> legs;
  std::vector<Vec> landings;
  std::vector<LegJacobian> leg_jacobians;
  std::vector<JumpJacobian> jump_jacobians;
  Mat DP;  // composed analytic Jacobian of the map at the input point
};

/// One full trip around the chain starting from a leg-0 entry section point.
Vec return_map(const SlowFastSystem& sys, const ManifoldChain& chain, const Vec& x,
               const OrbitOptions& opts = {}, ReturnMapDetail* detail = nullptr);

std::pair<SingularOrbit, StabilityReport> find_singular_orbit(
    const SlowFastSystem& sys, const ManifoldChain& chain, const OrbitOptions& opts = {});

struct PlanarDetail {
  double lambda = 0;
  double log_F_ratio = 0;
  double divergence_integral = 0;  // along the regularized heteroclinic
  double dQ_da = 0;                // flow-relation closed form
  double dpi_da = 0;               // Abel closed form
  double landing_mismatch = 0;     // |pi(a1) - a0|
  bool conditions_ok = false;
  std::vector<std::string> condition_notes;
};

/// Stability exponent of the planar (n = m = 1) closed singular orbit with
/// slow entry a0 and exit a1; conditions (sign of the slow speed, endpoint
/// repulsion/attraction, delay integral) are verified numerically first.
double planar_lambda(const SlowFastSystem& sys, const ManifoldChain& chain, double a0,
                     double a1, const OrbitOptions& opts = {},
                     PlanarDetail* detail = nullptr);

}  // namespace sfo
