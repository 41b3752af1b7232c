#pragma once

#include "sfo/orbit.hpp"

namespace sfo {

struct SimOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double box_scale = 1e6;   // escape guard on |state|
  double t_burn = -1.0;     // < 0: half of t_max
  double gate_fraction = 0.5;  // section gate radius as a fraction of orbit size
};

struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full system in slow time: p' = f + h/eps, z' = g/eps.
ode::Trajectory run(const SlowFastSystem& sys, double eps, const Vec& init, double t_max,
                    const SimOptions& opts = {});

/// Full-state polyline of the singular closed orbit (slow legs plus jumps).
std::vector<Vec> singular_polyline(const SlowFastSystem& sys, const ManifoldChain& chain,
                                   const SingularOrbit& orbit, int per_leg = 400);

std::vector<Vec> resample_polyline(const std::vector<Vec>& poly, int count);

/// max over points of A of the distance to the segments of B.
double directed_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b);

struct CycleData {
  std::vector<Vec> points;             // resampled full-state polyline, 1000 points
  double period = 0;
  std::vector<double> crossing_times;  // gated section hits after burn-in
  std::vector<Vec> crossing_states;
};

/// Extracts the last full cycle via the Poincare section through the singular
/// leg-1 entry, normal to the slow flow there.
CycleData extract_cycle(const SlowFastSystem& sys, const ManifoldChain& chain,
                        const SingularOrbit& orbit, const ode::Trajectory& traj,
                        double t_burn, const SimOptions& opts = {});

struct ConvergenceRow {
  double eps = 0;
  double hausdorff = 0;
  double period = 0;
};

std::vector<ConvergenceRow> convergence_study(const SlowFastSystem& sys,
                                              const ManifoldChain& chain,
                                              const SingularOrbit& orbit,
                                              const std::vector<double>& eps_list,
                                              const Vec& init, double t_max,
                                              const SimOptions& opts = {});

}  // namespace sfo
