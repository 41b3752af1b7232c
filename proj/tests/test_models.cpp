#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "sfo/models.hpp"

using namespace sfo;

TEST_CASE("catalog lists the four example systems with published defaults") {
  const auto& cat = catalog();
  REQUIRE(cat.size() == 4);
  CHECK(cat[0].name == "tradeoff");
  CHECK(cat[1].name == "switching");
  CHECK(cat[2].name == "coevolution");
  CHECK(cat[3].name == "planar");

  const SlowFastSystem tr = cat[0].build();
  CHECK(tr.params.at("a") == -0.1);
  CHECK(tr.params.at("b") == 3.0);
  CHECK(tr.params.at("c") == 1.0);
  CHECK(tr.params.at("d") == 2.8);
  CHECK(tr.params.at("k") == 1.0);
  CHECK(tr.params.at("r") == 10.0);

  const SlowFastSystem sw = cat[1].build();
  CHECK(sw.params.at("r") == 0.5);
  CHECK(sw.params.at("m") == 0.4);

  const SlowFastSystem co = cat[2].build();
  CHECK(co.params.at("s0") == 2.5);
  CHECK(co.params.at("s1") == 3.5);
  CHECK(co.params.at("k0") == 1.0);
  CHECK(co.params.at("k1") == 0.1);
  CHECK(co.params.at("r0") == 0.65);
  CHECK(co.params.at("r1") == 3.0);
  CHECK(co.params.at("r2") == 2.3);
  CHECK(co.params.at("r3") == -0.2);
  CHECK(co.params.at("r4") == 0.01);
  CHECK(co.params.at("c0") == 1.7);
  CHECK(co.params.at("d0") == 0.76);
  CHECK(co.params.at("d1") == 1.77);
  CHECK(co.params.at("h") == 1.0);

  CHECK(find_model("nonsense") == nullptr);
}

TEST_CASE("chains carry the published anchor guesses") {
  const ManifoldChain tr = find_model("tradeoff")->chain();
  REQUIRE(tr.size() == 2);
  CHECK(tr.legs[0].a_guess[0] == doctest::Approx(5.6));
  CHECK(tr.legs[0].a_guess[1] == doctest::Approx(11.0));
  CHECK(tr.legs[1].a_guess[0] == doctest::Approx(10.0));
  CHECK(tr.legs[1].a_guess[1] == doctest::Approx(0.36));
  CHECK(tr.legs[0].z[0] == 0.0);
  CHECK(tr.legs[1].z[0] == 1.0);

  const ManifoldChain co = find_model("coevolution")->chain();
  REQUIRE(co.size() == 4);
  const double want[4][2] = {{0.33, 1.99}, {0.92, 0.56}, {0.60, 0.55}, {0.30, 0.93}};
  const double faces[4][2] = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
  const int jin[4] = {0, 1, 0, 1};
  for (int i = 0; i < 4; ++i) {
    CHECK(co.legs[i].a_guess[0] == doctest::Approx(want[i][0]));
    CHECK(co.legs[i].a_guess[1] == doctest::Approx(want[i][1]));
    CHECK(co.legs[i].z[0] == faces[i][0]);
    CHECK(co.legs[i].z[1] == faces[i][1]);
    CHECK(co.legs[i].j_in == jin[i]);
  }

  const ManifoldChain sw = find_model("switching")->chain();
  REQUIRE(sw.size() == 2);
  CHECK(sw.legs[0].a_guess[2] == doctest::Approx(1.50));
}

TEST_CASE("closed forms match the expression-parser rendering to 1e-12") {
  auto gen = oracles::rng(99);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::uniform_real_distribution<double> uz(0.02, 0.98);
  for (const auto& entry : catalog()) {
    const SlowFastSystem closed = entry.build();
    const SlowFastSystem parsed = build_system(entry.config());
    for (int rep = 0; rep < 100; ++rep) {
      Vec p(closed.n), z(closed.m);
      for (int i = 0; i < closed.n; ++i) p[i] = u(gen);
      for (int j = 0; j < closed.m; ++j) {
        const auto [lo, hi] = closed.z_bounds[j];
        z[j] = std::isfinite(hi) ? lo + (hi - lo) * uz(gen) : lo + uz(gen);
      }
      const double eps = 0.05;
      CHECK((closed.f(p, z, eps) - parsed.f(p, z, eps)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((closed.g(p, z, eps) - parsed.g(p, z, eps)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((closed.h(p, z, eps) - parsed.h(p, z, eps)).cwiseAbs().maxCoeff() < 1e-12);
      for (int j = 0; j < closed.m; ++j)
        CHECK(std::abs(closed.gz_partial(j, p, z, eps) - parsed.gz_partial(j, p, z, eps)) <
              1e-12);
    }
  }
}

TEST_CASE("coevolution trait slopes are the fitness gradients") {
  const SlowFastSystem sys = find_model("coevolution")->build();
  // E1 = d/d alpha of (x'/x), E2 = d/d beta of (y'/y), by finite differences
  auto gen = oracles::rng(5);
  std::uniform_real_distribution<double> u(0.2, 1.8);
  std::uniform_real_distribution<double> ut(0.1, 0.9);
  for (int rep = 0; rep < 50; ++rep) {
    Vec p(2), z(2);
    p << u(gen), u(gen);
    z << ut(gen), ut(gen);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
      Vec zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      const double fit_p = sys.f(p, zp, 0.0)[j] / p[j];
      const double fit_m = sys.f(p, zm, 0.0)[j] / p[j];
      const double fd = (fit_p - fit_m) / (2 * h);
      // g^(j) = z_j (1 - z_j) E_j
      const double Ej = sys.g(p, z, 0.0)[j] / (z[j] * (1 - z[j]));
      CHECK(Ej == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("builders pass the structural assumption checks") {
  for (const auto& entry : catalog()) {
    const SlowFastSystem sys = entry.build();
    const AssumptionReport rep = check_assumptions(sys, entry.chain());
    CHECK_MESSAGE(rep.all_pass(), entry.name);
  }
}
