#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "sfo/entry_exit.hpp"
#include "sfo/models.hpp"

using namespace sfo;

namespace {

// n = 1, m = 1 synthetic leg: f = 1, dg/dz = p (so g = p z on the face z = 0).
SlowFastSystem ramp_system() {
  SlowFastSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.slow_names = {"p"};
  sys.fast_names = {"z"};
  sys.z_bounds = {{0.0, std::numeric_limits<double>::infinity()}};
  sys.h_zero = true;
  sys.f = [](const Vec&, const Vec&, double) { return Vec::Constant(1, 1.0); };
  sys.g = [](const Vec& p, const Vec& z, double) { return Vec::Constant(1, p[0] * z[0]); };
  sys.h = [](const Vec&, const Vec&, double) { return Vec::Zero(1); };
  sys.gz_partial = [](int, const Vec& p, const Vec&, double) { return p[0]; };
  sys.df_dp = [](const Vec&, const Vec&) { return Mat::Zero(1, 1); };
  sys.dgz_dp = [](int, const Vec&, const Vec&) { return Vec::Constant(1, 1.0); };
  return sys;
}

ManifoldChain single_leg_chain() {
  ManifoldChain chain;
  LegSpec leg;
  leg.z = Vec::Zero(1);
  leg.j_in = 0;
  leg.a_guess = Vec::Constant(1, -1.0);
  chain.legs.push_back(leg);
  return chain;
}

// Transit exit (p, d) as a map of the full entry state, for FD oracles.
Vec transit_exit_state(const SlowFastSystem& sys, const ManifoldChain& chain, int leg,
                       const Vec& state) {
  const Vec p = state.head(sys.n);
  const Vec d = state.tail(sys.m);
  TransitOptions topts;
  topts.rtol = 1e-11;
  topts.atol = 1e-13;
  const LegTransit tr = transit_leg(sys, chain, leg, p, d, topts);
  Vec out(sys.n + sys.m);
  out.head(sys.n) = tr.exit_p;
  out.tail(sys.m) = tr.exit_d;
  return out;
}

// Central-difference DQhat on the section coordinates.
Mat fd_dqhat(const SlowFastSystem& sys, const ManifoldChain& chain, int leg, const Vec& p,
             const Vec& d, double step = 1e-6) {
  const int n = sys.n, m = sys.m;
  const int jin = chain.legs[leg].j_in;
  const int jout = chain.j_out(leg);
  std::vector<int> cols, rows;
  for (int c = 0; c < n; ++c) cols.push_back(c);
  for (int j = 0; j < m; ++j)
    if (j != jin) cols.push_back(n + j);
  for (int r = 0; r < n; ++r) rows.push_back(r);
  for (int k = 0; k < m; ++k)
    if (k != jout) rows.push_back(n + k);

  Vec base(n + m);
  base.head(n) = p;
  base.tail(m) = d;
  Mat J(rows.size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const double h = step * std::max(1.0, std::abs(base[cols[c]]));
    Vec sp = base, sm = base;
    sp[cols[c]] += h;
    sm[cols[c]] -= h;
    const Vec fp = transit_exit_state(sys, chain, leg, sp);
    const Vec fm = transit_exit_state(sys, chain, leg, sm);
    for (std::size_t r = 0; r < rows.size(); ++r)
      J(r, c) = (fp[rows[r]] - fm[rows[r]]) / (2 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("synthetic antisymmetric leg: exit mirrors entry, tau = 2") {
  const SlowFastSystem sys = ramp_system();
  const ManifoldChain chain = single_leg_chain();
  const LegTransit tr = transit_leg(sys, chain, 0, Vec::Constant(1, -1.0), Vec::Zero(1));
  CHECK(tr.exit_p[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(tr.tau == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(std::abs(tr.exit_d[0]) < 1e-9);
}

TEST_CASE("tradeoff leg 1: published landing/jumping pair and zero closure") {
  const auto& entry = *find_model("tradeoff");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  Vec A1(2);
  A1 << 5.570561637733969, 11.032060445229588;
  const LegTransit tr = transit_leg(sys, chain, 0, A1, Vec::Zero(1));
  CHECK(tr.exit_p[0] == doctest::Approx(9.96).epsilon(0.002));
  CHECK(tr.exit_p[1] == doctest::Approx(0.362).epsilon(0.01));
  CHECK(std::abs(tr.exit_d[0]) < 1e-9);
  CHECK(tr.tau == doctest::Approx(1.8001908).epsilon(1e-5));
  // the accumulator is strictly negative throughout the interior
  for (int s = 1; s < 100; ++s) {
    const double t = tr.tau * s / 100.0;
    CHECK(tr.aug.eval(t)[2] < 0.0);
  }
}

TEST_CASE("coevolution leg 1: delay credit consumed exactly at the exit") {
  const auto& entry = *find_model("coevolution");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  Vec A1(2);
  A1 << 0.3287169, 1.9854409;
  Vec d0(2);
  d0 << 0.0, -0.9768272;
  const LegTransit tr = transit_leg(sys, chain, 0, A1, d0);
  CHECK(tr.exit_p[0] == doctest::Approx(0.92).epsilon(0.01));
  CHECK(tr.exit_p[1] == doctest::Approx(0.56).epsilon(0.01));
  CHECK(std::abs(tr.exit_d[1]) < 1e-9);  // exiting trait's accumulator closes
  CHECK(tr.exit_d[0] < -3.0);            // the other trait keeps its debt
}

TEST_CASE("transit preconditions") {
  const SlowFastSystem sys = ramp_system();
  const ManifoldChain chain = single_leg_chain();
  // nonzero incoming delay is rejected
  CHECK_THROWS_AS(
      transit_leg(sys, chain, 0, Vec::Constant(1, -1.0), Vec::Constant(1, -0.5)),
      PreconditionError);
  // repelling entry without delay credit is rejected
  CHECK_THROWS_AS(transit_leg(sys, chain, 0, Vec::Constant(1, 0.5), Vec::Zero(1)),
                  PreconditionError);
}

TEST_CASE("no-exit transit reports the horizon trajectory") {
  SlowFastSystem sys = ramp_system();
  // dg/dz = -1 everywhere: the accumulator never comes back
  sys.gz_partial = [](int, const Vec&, const Vec&, double) { return -1.0; };
  sys.g = [](const Vec&, const Vec& z, double) { return Vec::Constant(1, -z[0]); };
  const ManifoldChain chain = single_leg_chain();
  TransitOptions topts;
  topts.t_max = 50.0;
  try {
    transit_leg(sys, chain, 0, Vec::Constant(1, -1.0), Vec::Zero(1), topts);
    FAIL("expected NoExitError");
  } catch (const NoExitError& e) {
    CHECK(e.traj.t_end() == doctest::Approx(50.0));
  }
}

TEST_CASE("leg jacobian identities on every tradeoff and coevolution leg") {
  for (const char* name : {"tradeoff", "coevolution"}) {
    const auto& entry = *find_model(name);
    const SlowFastSystem sys = entry.build();
    const ManifoldChain chain = entry.chain();
    // follow the converged orbit around the chain
    Vec p(sys.n);
    Vec d = Vec::Zero(sys.m);
    if (std::string(name) == "tradeoff") {
      p << 5.570561637733969, 11.032060445229588;
    } else {
      p << 0.3287169, 1.9854409;
      d << 0.0, -0.9768272;
    }
    for (int i = 0; i < chain.size(); ++i) {
      const LegTransit tr = transit_leg(sys, chain, i, p, d);
      const LegJacobian lj = leg_jacobian(sys, chain, i, tr);
      const int jo = chain.j_out(i);
      const Vec fA = sys.f(tr.entry_p, chain.legs[i].z, 0.0);
      const Vec fB = sys.f(tr.exit_p, chain.legs[i].z, 0.0);
      // flow-direction eigenrelation
      const Vec got = lj.DQ * fA;
      const Vec want = (lj.gz_entry / lj.gz_exit) * fB;
      CHECK((got - want).norm() / want.norm() < 1e-6);
      // mu identity
      CHECK(lj.mu.dot(fA) ==
            doctest::Approx(lj.gz_exit - lj.gz_entry).epsilon(1e-6));
      p = tr.exit_p;
      d = tr.exit_d;
      d[jo] = 0.0;
    }
  }
}

TEST_CASE("tradeoff DQ matches its finite-difference oracle and frozen values") {
  const auto& entry = *find_model("tradeoff");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  Vec A1(2);
  A1 << 5.570561637733969, 11.032060445229588;
  const LegTransit tr = transit_leg(sys, chain, 0, A1, Vec::Zero(1));
  const LegJacobian lj = leg_jacobian(sys, chain, 0, tr);

  Mat frozen(2, 2);
  frozen << -0.0069719384, 0.0112218920, 0.0614179161, -0.0988538566;
  CHECK(oracles::max_rel_err(lj.DQ, frozen) < 1e-4);

  const Mat fd = fd_dqhat(sys, chain, 0, A1, Vec::Zero(1));
  CHECK(oracles::max_rel_err(lj.DQhat, fd) < 1e-4);
  CHECK(oracles::max_rel_err(lj.DQ, fd) < 1e-4);  // m = 1: same matrix
}

TEST_CASE("coevolution DQhat matches finite differences on leg 1") {
  const auto& entry = *find_model("coevolution");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  Vec A1(2);
  A1 << 0.3287169, 1.9854409;
  Vec d0(2);
  d0 << 0.0, -0.9768272;
  const LegTransit tr = transit_leg(sys, chain, 0, A1, d0);
  const LegJacobian lj = leg_jacobian(sys, chain, 0, tr);
  REQUIRE(lj.DQhat.rows() == 3);
  const Mat fd = fd_dqhat(sys, chain, 0, A1, d0);
  CHECK(oracles::max_rel_err(lj.DQhat, fd) < 1e-4);

  Mat frozen(3, 3);
  frozen << -0.013382, 0.004315, -0.006512,
             0.079011, -0.025422, 0.038392,
            -3.291028, -2.426231, 0.671935;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK(lj.DQhat(r, c) == doctest::Approx(frozen(r, c)).epsilon(2e-4));
}

TEST_CASE("non-exiting delay columns pass through as identity") {
  // n = 1, m = 3 synthetic system with one non-exiting free delay direction
  SlowFastSystem sys;
  sys.n = 1;
  sys.m = 3;
  sys.slow_names = {"p"};
  sys.fast_names = {"z1", "z2", "z3"};
  const double inf = std::numeric_limits<double>::infinity();
  sys.z_bounds = {{0.0, inf}, {0.0, inf}, {0.0, inf}};
  sys.h_zero = true;
  const double c[3] = {-2.0, 0.0, -1.0};
  sys.f = [](const Vec&, const Vec&, double) { return Vec::Constant(1, 1.0); };
  sys.g = [c](const Vec& p, const Vec& z, double) {
    Vec g(3);
    for (int j = 0; j < 3; ++j) g[j] = (p[0] + c[j]) * z[j];
    return g;
  };
  sys.h = [](const Vec&, const Vec&, double) { return Vec::Zero(1); };
  sys.gz_partial = [c](int j, const Vec& p, const Vec&, double) { return p[0] + c[j]; };
  sys.df_dp = [](const Vec&, const Vec&) { return Mat::Zero(1, 1); };
  sys.dgz_dp = [](int, const Vec&, const Vec&) { return Vec::Constant(1, 1.0); };

  ManifoldChain chain;
  for (int j = 0; j < 3; ++j) {
    LegSpec leg;
    leg.z = Vec::Zero(3);
    leg.j_in = j;
    leg.a_guess = Vec::Constant(1, -1.0);
    chain.legs.push_back(leg);
  }

  Vec p0 = Vec::Constant(1, -1.0);
  Vec d0(3);
  d0 << 0.0, -2.0, -5.0;  // leg 0: j_in = 0, j_out = 1
  const LegTransit tr = transit_leg(sys, chain, 0, p0, d0);
  CHECK(tr.tau == doctest::Approx(1.0 + std::sqrt(5.0)).epsilon(1e-8));
  const LegJacobian lj = leg_jacobian(sys, chain, 0, tr);
  // input coords (p, d2, d3), output coords (p, d1, d3); the d3 -> d3 column
  // is untouched by the exit-time correction
  REQUIRE(lj.DQhat.rows() == 3);
  CHECK(lj.DQhat(0, 2) == doctest::Approx(0.0));
  CHECK(lj.DQhat(1, 2) == doctest::Approx(0.0));
  CHECK(lj.DQhat(2, 2) == doctest::Approx(1.0));
  const Mat fd = fd_dqhat(sys, chain, 0, p0, d0);
  CHECK(oracles::max_rel_err(lj.DQhat, fd) < 1e-4);
}

TEST_CASE("h = 0 jumps fix the slow point; wrong-side exits are rejected") {
  const auto& entry = *find_model("tradeoff");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  Vec B1(2);
  B1 << 9.959139317479396, 0.36222286197953785;
  const JumpMapResult jm = jump_map(sys, chain, 0, 1, B1);
  CHECK(jm.identity);
  CHECK((jm.landing_p - B1).norm() == 0.0);
  // the fiber trajectory sweeps the fast component across
  CHECK(jm.fast_traj.y_end()[2] == doctest::Approx(1.0).epsilon(1e-3));

  Vec A1(2);
  A1 << 5.570561637733969, 11.032060445229588;  // attracting side: cannot jump
  CHECK_THROWS_AS(jump_map(sys, chain, 0, 1, A1), PreconditionError);

  const JumpJacobian jj = jump_jacobian(sys, chain, 0, 1, B1);
  CHECK(jj.identity);
  CHECK((jj.Dpi - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("planar jump: Richardson landing matches a tight-seed reference") {
  const auto& entry = *find_model("planar");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  const double a1 = 2.969274905829;
  const Vec exit_p = Vec::Constant(1, a1);

  const JumpMapResult jm = jump_map(sys, chain, 0, 0, exit_p);
  CHECK(!jm.identity);

  JumpOptions tight;
  tight.delta_jump = 1e-6;
  tight.rtol = 1e-12;
  tight.atol = 1e-14;
  const JumpMapResult ref = jump_map(sys, chain, 0, 0, exit_p, tight);
  CHECK(std::abs(jm.landing_p[0] - ref.landing_p[0]) < 1e-4);
  CHECK(jm.landing_p[0] == doctest::Approx(-0.408377160121).epsilon(1e-4));
}

TEST_CASE("planar jump jacobian: variational, Abel, and finite differences agree") {
  const auto& entry = *find_model("planar");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  const double a1 = 2.969274905829;
  const Vec exit_p = Vec::Constant(1, a1);

  const JumpJacobian jj = jump_jacobian(sys, chain, 0, 0, exit_p);
  CHECK(!jj.identity);
  CHECK(jj.Dpi(0, 0) == doctest::Approx(jj.abel).epsilon(1e-5));
  CHECK(jj.Dpi(0, 0) == doctest::Approx(-0.4445285398).epsilon(1e-4));

  // finite differences of the jump map itself
  auto pi_of = [&](const Vec& a) {
    return jump_map(sys, chain, 0, 0, a).landing_p;
  };
  const Mat fd = oracles::central_jacobian(pi_of, exit_p, 1e-5);
  CHECK(jj.Dpi(0, 0) == doctest::Approx(fd(0, 0)).epsilon(1e-3));
}

TEST_CASE("regularized jump orbit lands at the slow entry point") {
  const auto& entry = *find_model("planar");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  const RegJumpOrbit orb =
      regularized_jump_orbit(sys, chain, 0, Vec::Constant(1, 2.969274905829), {});
  CHECK(orb.landing_p[0] == doctest::Approx(-0.408377160121).epsilon(1e-6));
  CHECK(orb.t1 == doctest::Approx(4.407570519645).epsilon(1e-6));
}
