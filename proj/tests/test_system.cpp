#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sfo/models.hpp"
#include "sfo/system.hpp"

using namespace sfo;

TEST_CASE("boundary residuals vanish on every catalog model") {
  for (const auto& entry : catalog()) {
    const SlowFastSystem sys = entry.build();
    const ManifoldChain chain = entry.chain();
    const AssumptionReport rep = check_assumptions(sys, chain);
    const AssumptionCheck* a1 = rep.find("A1");
    REQUIRE(a1 != nullptr);
    CHECK_MESSAGE(a1->pass, entry.name, ": ", a1->witnesses.front());
    const AssumptionCheck* a2 = rep.find("A2");
    CHECK_MESSAGE(a2->pass, entry.name, " chain structure");
  }
}

TEST_CASE("a chain whose z vectors differ in two components fails A2") {
  const auto& entry = *find_model("coevolution");
  const SlowFastSystem sys = entry.build();
  ManifoldChain chain = entry.chain();
  chain.legs[1].z[0] = 1.0;  // now legs 1->2 change both traits
  const AssumptionReport rep = check_assumptions(sys, chain);
  const AssumptionCheck* a2 = rep.find("A2");
  REQUIRE(a2 != nullptr);
  CHECK(!a2->pass);
  bool mentions_pair = false;
  for (const auto& w : a2->witnesses)
    if (w.find("differ in component") != std::string::npos) mentions_pair = true;
  CHECK(mentions_pair);
}

TEST_CASE("gz_partial agrees with finite differences of g") {
  auto gen = oracles::rng(11);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::uniform_real_distribution<double> uz(0.05, 0.95);
  for (const auto& entry : catalog()) {
    const SlowFastSystem sys = entry.build();
    for (int rep = 0; rep < 40; ++rep) {
      Vec p(sys.n), z(sys.m);
      for (int i = 0; i < sys.n; ++i) p[i] = u(gen);
      for (int j = 0; j < sys.m; ++j) {
        const auto [lo, hi] = sys.z_bounds[j];
        z[j] = std::isfinite(hi) ? lo + (hi - lo) * uz(gen) : lo + uz(gen);
      }
      for (int j = 0; j < sys.m; ++j) {
        const double got = sys.gz_partial(j, p, z, 0.0);
        const double h = 1e-6 * std::max(1.0, std::abs(z[j]));
        Vec zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        const double fd = (sys.g(p, zp, 0.0)[j] - sys.g(p, zm, 0.0)[j]) / (2 * h);
        if (std::abs(fd) > 1e-8)
          CHECK(got == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("slow field evaluates f on the leg manifold") {
  const auto& entry = *find_model("tradeoff");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  const ode::VectorField vf = slow_field(sys, chain.legs[0]);
  Vec p(2);
  p << 5.57, 11.03;
  Vec dp(2);
  vf.eval(0.0, p, dp);
  // x' = x(r - kx) - x y c/(1+x); y' = x y c/(1+x) - d y, with alpha = 0
  const double pred = 5.57 * 11.03 * 1.0 / 6.57;
  CHECK(dp[0] == doctest::Approx(5.57 * (10.0 - 5.57) - pred).epsilon(1e-12));
  CHECK(dp[1] == doctest::Approx(pred - 2.8 * 11.03).epsilon(1e-12));
  // definition: equal to f itself anywhere
  Vec q(2);
  q << 1.7, 0.3;
  vf.eval(0.0, q, dp);
  CHECK((dp - sys.f(q, chain.legs[0].z, 0.0)).norm() == 0.0);
}

TEST_CASE("slow field matches the coevolution system on leg 1") {
  const auto& entry = *find_model("coevolution");
  const SlowFastSystem sys = entry.build();
  const ManifoldChain chain = entry.chain();
  const ode::VectorField vf = slow_field(sys, chain.legs[0]);
  Vec p(2);
  p << 0.33, 1.99;
  Vec dp(2);
  vf.eval(0.0, p, dp);
  // hand evaluation with (alpha, beta) = (0, 0)
  const double F = 0.33 * 2.5 * (1 - 0.33 / 1.0);
  const double G = 0.65 * 0.33 * 1.99 / (1 + 0.33);
  const double D = std::pow(1.99, 1.5) * 0.76;
  CHECK(dp[0] == doctest::Approx(F - G).epsilon(1e-12));
  CHECK(dp[1] == doctest::Approx(1.7 * G - D).epsilon(1e-12));
}

TEST_CASE("fast field: p-block zero for h = 0 models, full zero on manifolds") {
  const auto& entry = *find_model("tradeoff");
  const SlowFastSystem sys = entry.build();
  const ode::VectorField vf = fast_field(sys);
  Vec y(3), dy(3);
  y << 9.96, 0.36, 0.5;
  vf.eval(0.0, y, dy);
  CHECK(dy[0] == 0.0);
  CHECK(dy[1] == 0.0);
  const double E = 1 - 0.36 * (2 * -0.1 * 0.5 + 3.0) / (1 + 9.96);
  CHECK(dy[2] == doctest::Approx(0.25 * E).epsilon(1e-12));
  // on the manifold the whole field vanishes
  y << 2.34, 5.67, 0.0;
  vf.eval(0.0, y, dy);
  CHECK(dy.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("every catalog chain jumps every fast component") {
  for (const auto& entry : catalog()) {
    const SlowFastSystem sys = entry.build();
    const ManifoldChain chain = entry.chain();
    for (int j = 0; j < sys.m; ++j) {
      bool hit = false;
      for (const auto& leg : chain.legs) hit = hit || leg.j_in == j;
      CHECK_MESSAGE(hit, entry.name, " component ", j + 1);
    }
  }
}

TEST_CASE("finite-difference fallbacks match closed-form derivatives") {
  const auto& entry = *find_model("coevolution");
  const SlowFastSystem full = entry.build();
  SlowFastSystem stripped = entry.build();
  stripped.df_dp = nullptr;
  stripped.dgz_dp = nullptr;

  Vec p(2), z(2);
  p << 0.6, 0.9;
  z << 0.0, 1.0;
  CHECK(oracles::max_rel_err(stripped.jac_f(p, z), full.jac_f(p, z)) < 1e-6);
  for (int j = 0; j < 2; ++j) {
    const Vec a = stripped.grad_gz(j, p, z);
    const Vec b = full.grad_gz(j, p, z);
    CHECK((a - b).norm() / std::max(1e-12, b.norm()) < 1e-6);
  }
}
