#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfo/models.hpp"

using namespace sfo;

TEST_CASE("config round-trip is byte-identical for every catalog model") {
  for (const auto& entry : catalog()) {
    const std::string first = config_to_json(entry.config()).dump(2);
    const ConfigSpec reloaded = config_from_json(json::parse(first));
    const std::string second = config_to_json(reloaded).dump(2);
    CHECK_MESSAGE(first == second, entry.name);
  }
}

TEST_CASE("missing chain legs is reported with its JSON pointer") {
  json j = json::parse(config_to_json(find_model("tradeoff")->config()).dump());
  j["chain"].erase("legs");
  try {
    config_from_json(j);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.pointer == "/chain/legs");
  }
}

TEST_CASE("schema violations carry pointers") {
  json base = json::parse(config_to_json(find_model("tradeoff")->config()).dump());

  {
    json j = base;
    j.erase("f");
    CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("/f"), ConfigError);
  }
  {
    json j = base;
    j["f"][0] = "x*(";  // malformed expression
    try {
      build_system(config_from_json(j));
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(e.pointer == "/f/0");
    }
  }
  {
    json j = base;
    j["chain"]["legs"][0]["j_in"] = 7;
    try {
      config_from_json(j);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(e.pointer == "/chain/legs/0/j_in");
    }
  }
  {
    json j = base;
    j["z_bounds"] = json::array();
    CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("/z_bounds"), ConfigError);
  }
  {
    json j = base;
    j["g"][0] = "al*(1 - al)*(1 - y*(2*a*al + b)/(1 + x)) + nosuchvar";
    try {
      build_system(config_from_json(j));
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(e.pointer == "/g/0");
    }
  }
}

TEST_CASE("null bounds load as infinities and re-export as null") {
  const ConfigSpec spec = find_model("planar")->config();
  const ordered_json j = config_to_json(spec);
  CHECK(j["z_bounds"][0][0] == 0.0);
  CHECK(j["z_bounds"][0][1].is_null());
  const ConfigSpec back = config_from_json(json::parse(j.dump()));
  CHECK(back.z_bounds[0][0] == 0.0);
  CHECK(std::isinf(back.z_bounds[0][1]));
}

TEST_CASE("h defaults to zero when omitted") {
  const ConfigSpec spec = find_model("tradeoff")->config();
  CHECK(spec.h.empty());
  const SlowFastSystem sys = build_system(spec);
  CHECK(sys.h_zero);
  Vec p(2), z(1);
  p << 1.0, 2.0;
  z << 0.5;
  CHECK(sys.h(p, z, 0.1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("expressions may reference eps") {
  ConfigSpec spec = find_model("tradeoff")->config();
  spec.f[0] += " + eps*x";
  const SlowFastSystem sys = build_system(spec);
  Vec p(2), z(1);
  p << 2.0, 1.0;
  z << 0.0;
  const double base = build_system(find_model("tradeoff")->config()).f(p, z, 0.0)[0];
  CHECK(sys.f(p, z, 0.0)[0] == doctest::Approx(base));
  CHECK(sys.f(p, z, 0.5)[0] == doctest::Approx(base + 1.0));
}

TEST_CASE("tolerances round-trip") {
  ConfigSpec spec = find_model("tradeoff")->config();
  spec.tol.rtol = 1e-8;
  spec.tol.newton = 1e-7;
  const ConfigSpec back = config_from_json(json::parse(config_to_json(spec).dump()));
  CHECK(back.tol.rtol == 1e-8);
  CHECK(back.tol.atol == spec.tol.atol);
  CHECK(back.tol.newton == 1e-7);
}
