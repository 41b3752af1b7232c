#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfo/ode.hpp"

namespace sfo {

using ode::Mat;
using ode::Vec;

/// Slow-fast system  p' = eps f(p,z,eps) + h(p,z,eps),  z' = g(p,z,eps)
/// with invariant manifolds on the fast-coordinate bound faces.
struct SlowFastSystem {
  int n = 0;  // slow dimension
  int m = 0;  // fast dimension
  std::vector<std::string> slow_names, fast_names;
  std::map<std::string, double> params;

  std::function<Vec(const Vec& p, const Vec& z, double eps)> f;  // length n
  std::function<Vec(const Vec& p, const Vec& z, double eps)> g;  // length m
  std::function<Vec(const Vec& p, const Vec& z, double eps)> h;  // length n
  /// Diagonal fast partial dg^(j)/dz^(j).
  std::function<double(int j, const Vec& p, const Vec& z, double eps)> gz_partial;

  // Optional closed-form derivatives; finite differences otherwise.
  std::function<Mat(const Vec& p, const Vec& z)> df_dp;        // at eps = 0
  std::function<Vec(int j, const Vec& p, const Vec& z)> dgz_dp;  // at eps = 0

  std::vector<std::array<double, 2>> z_bounds;  // per fast coord; +-inf allowed
  bool h_zero = true;

  Mat jac_f(const Vec& p, const Vec& z) const;
  Vec grad_gz(int j, const Vec& p, const Vec& z) const;
  /// d h / d z^(j); used by the regularized jump field near faces.
  Vec dh_dzj(int j, const Vec& p, const Vec& z) const;
};

/// One slow leg: the manifold's fast coordinates, the component changed by the
/// incoming jump, and the Newton anchor guess.
struct LegSpec {
  Vec z;
  int j_in = 0;  // 0-based
  Vec a_guess;
};

struct ManifoldChain {
  std::vector<LegSpec> legs;

  int size() const { return static_cast<int>(legs.size()); }
  int j_out(int i) const { return legs[(i + 1) % size()].j_in; }
  const LegSpec& leg(int i) const { return legs[(i % size() + size()) % size()]; }
};

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// |gz| below the guard where a formula would divide by it.
struct DegenerateGzError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ode::VectorField slow_field(const SlowFastSystem& sys, const LegSpec& leg);
ode::VectorField fast_field(const SlowFastSystem& sys);

struct SingularOrbit;  // orbit.hpp

struct AssumptionCheck {
  std::string id;  // "A1".."A5"
  bool pass = true;
  std::vector<std::string> witnesses;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_pass() const;
  const AssumptionCheck* find(const std::string& id) const;
};

struct AssumptionOptions {
  int grid_points = 10;      // per axis
  double a1_tol = 1e-10;
  double box_margin = 0.2;   // relative enlargement of the sampling box
  int a5_samples = 200;      // per leg
};

/// Runs A1-A2 structure checks always; A3-A5 when an orbit is supplied.
AssumptionReport check_assumptions(const SlowFastSystem& sys, const ManifoldChain& chain,
                                   const SingularOrbit* orbit = nullptr,
                                   const AssumptionOptions& opts = {});

}  // namespace sfo
