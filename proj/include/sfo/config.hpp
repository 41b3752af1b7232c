#pragma once

#include <nlohmann/json.hpp>

#include "sfo/system.hpp"

namespace sfo {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct ToleranceSet {
  double rtol = 1e-9;
  double atol = 1e-11;
  double newton = 1e-9;
};

/// Declarative system description: expression strings plus chain data.
/// This is the exchange format behind the JSON config files.
struct ConfigSpec {
  int n = 0, m = 0;
  std::vector<std::string> slow_vars, fast_vars;
  std::map<std::string, double> params;
  std::vector<std::string> f, g, h;  // h empty means identically zero
  std::vector<std::array<double, 2>> z_bounds;
  struct LegCfg {
    std::vector<double> z;
    int j_in = 1;  // 1-based in the file format
    std::vector<double> a_guess;
  };
  std::vector<LegCfg> legs;
  ToleranceSet tol;
};

struct ConfigError : std::runtime_error {
  std::string pointer;  // JSON pointer to the offending element
  ConfigError(std::string msg, std::string ptr)
      : std::runtime_error(msg + " at " + (ptr.empty() ? "/" : ptr)), pointer(std::move(ptr)) {}
};

ordered_json config_to_json(const ConfigSpec& spec);
ConfigSpec config_from_json(const json& j);
ConfigSpec load_config_file(const std::string& path);

/// Expression-backed system; derivatives via forward-mode duals.
SlowFastSystem build_system(const ConfigSpec& spec);
ManifoldChain build_chain(const ConfigSpec& spec);

}  // namespace sfo
