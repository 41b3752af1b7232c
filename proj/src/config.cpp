#include "sfo/config.hpp"

#include <fstream>

#include "sfo/expr.hpp"

namespace sfo {

ordered_json config_to_json(const ConfigSpec& spec) {
  ordered_json j;
  j["n"] = spec.n;
  j["m"] = spec.m;
  j["slow_vars"] = spec.slow_vars;
  j["fast_vars"] = spec.fast_vars;
  ordered_json params;
  for (const auto& [k, v] : spec.params) params[k] = v;
  j["params"] = std::move(params);
  j["f"] = spec.f;
  j["g"] = spec.g;
  if (!spec.h.empty()) j["h"] = spec.h;
  ordered_json bounds = ordered_json::array();
  for (const auto& [lo, hi] : spec.z_bounds) {
    ordered_json pair = ordered_json::array();
    if (std::isfinite(lo))
      pair.push_back(lo);
    else
      pair.push_back(nullptr);
    if (std::isfinite(hi))
      pair.push_back(hi);
    else
      pair.push_back(nullptr);
    bounds.push_back(std::move(pair));
  }
  j["z_bounds"] = std::move(bounds);
  ordered_json legs = ordered_json::array();
  for (const auto& leg : spec.legs) {
    ordered_json lj;
    lj["z"] = leg.z;
    lj["j_in"] = leg.j_in;
    lj["a_guess"] = leg.a_guess;
    legs.push_back(std::move(lj));
  }
  j["chain"] = ordered_json{{"legs", std::move(legs)}};
  j["tolerances"] = ordered_json{
      {"rtol", spec.tol.rtol}, {"atol", spec.tol.atol}, {"newton", spec.tol.newton}};
  return j;
}

namespace {

const json& need(const json& j, const char* key, const std::string& ptr) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError("missing required field", ptr + "/" + key);
  return j.at(key);
}

int need_int(const json& j, const char* key, const std::string& ptr) {
  const json& v = need(j, key, ptr);
  if (!v.is_number_integer()) throw ConfigError("expected an integer", ptr + "/" + key);
  return v.get<int>();
}

std::vector<std::string> need_strings(const json& j, const char* key, const std::string& ptr,
                                      std::size_t count) {
  const json& v = need(j, key, ptr);
  if (!v.is_array() || v.size() != count)
    throw ConfigError("expected an array of " + std::to_string(count) + " strings",
                      ptr + "/" + key);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string())
      throw ConfigError("expected a string", ptr + "/" + key + "/" + std::to_string(i));
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

std::vector<double> need_numbers(const json& v, const std::string& ptr, std::size_t count) {
  if (!v.is_array() || v.size() != count)
    throw ConfigError("expected an array of " + std::to_string(count) + " numbers", ptr);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ConfigError("expected a number", ptr + "/" + std::to_string(i));
    out.push_back(v[i].get<double>());
  }
  return out;
}

}  // namespace

ConfigSpec config_from_json(const json& j) {
  ConfigSpec spec;
  spec.n = need_int(j, "n", "");
  spec.m = need_int(j, "m", "");
  if (spec.n < 1) throw ConfigError("slow dimension must be positive", "/n");
  if (spec.m < 1) throw ConfigError("fast dimension must be positive", "/m");
  spec.slow_vars = need_strings(j, "slow_vars", "", spec.n);
  spec.fast_vars = need_strings(j, "fast_vars", "", spec.m);

  const json& params = need(j, "params", "");
  if (!params.is_object()) throw ConfigError("expected an object", "/params");
  for (const auto& [k, v] : params.items()) {
    if (!v.is_number()) throw ConfigError("expected a number", "/params/" + k);
    spec.params[k] = v.get<double>();
  }

  spec.f = need_strings(j, "f", "", spec.n);
  spec.g = need_strings(j, "g", "", spec.m);
  if (j.contains("h")) spec.h = need_strings(j, "h", "", spec.n);

  const json& zb = need(j, "z_bounds", "");
  if (!zb.is_array() || zb.size() != static_cast<std::size_t>(spec.m))
    throw ConfigError("expected one [lo, hi] pair per fast variable", "/z_bounds");
  for (int jdx = 0; jdx < spec.m; ++jdx) {
    const json& pair = zb[jdx];
    const std::string ptr = "/z_bounds/" + std::to_string(jdx);
    if (!pair.is_array() || pair.size() != 2) throw ConfigError("expected [lo, hi]", ptr);
    auto bound = [&](int k, double inf_sign) {
      if (pair[k].is_null()) return inf_sign * std::numeric_limits<double>::infinity();
      if (!pair[k].is_number())
        throw ConfigError("expected a number or null", ptr + "/" + std::to_string(k));
      return pair[k].get<double>();
    };
    spec.z_bounds.push_back({bound(0, -1.0), bound(1, +1.0)});
    if (!(spec.z_bounds.back()[0] < spec.z_bounds.back()[1]))
      throw ConfigError("lower bound must be below upper bound", ptr);
  }

  const json& chain = need(j, "chain", "");
  const json& legs = need(chain, "legs", "/chain");
  if (!legs.is_array() || legs.empty())
    throw ConfigError("expected a non-empty array of legs", "/chain/legs");
  for (std::size_t i = 0; i < legs.size(); ++i) {
    const std::string ptr = "/chain/legs/" + std::to_string(i);
    ConfigSpec::LegCfg leg;
    leg.z = need_numbers(need(legs[i], "z", ptr), ptr + "/z", spec.m);
    leg.j_in = need_int(legs[i], "j_in", ptr);
    if (leg.j_in < 1 || leg.j_in > spec.m)
      throw ConfigError("j_in out of range 1..m", ptr + "/j_in");
    leg.a_guess = need_numbers(need(legs[i], "a_guess", ptr), ptr + "/a_guess", spec.n);
    spec.legs.push_back(std::move(leg));
  }

  if (j.contains("tolerances")) {
    const json& tol = j.at("tolerances");
    if (!tol.is_object()) throw ConfigError("expected an object", "/tolerances");
    if (tol.contains("rtol")) spec.tol.rtol = tol.at("rtol").get<double>();
    if (tol.contains("atol")) spec.tol.atol = tol.at("atol").get<double>();
    if (tol.contains("newton")) spec.tol.newton = tol.at("newton").get<double>();
  }
  return spec;
}

ConfigSpec load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", "");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what(), "");
  }
  return config_from_json(j);
}

namespace {

// Shared evaluation state for an expression-backed system.
struct ExprSystem {
  int n, m;
  std::vector<std::string> names;  // slow, fast, eps, params
  std::vector<double> base;        // parameter slots prefilled
  std::vector<expr::BoundExpr> f, g, h;

  int slots() const { return static_cast<int>(names.size()); }

  void fill(std::vector<double>& buf, const Vec& p, const Vec& z, double eps) const {
    buf = base;
    for (int i = 0; i < n; ++i) buf[i] = p[i];
    for (int j = 0; j < m; ++j) buf[n + j] = z[j];
    buf[n + m] = eps;
  }
};

}  // namespace

SlowFastSystem build_system(const ConfigSpec& spec) {
  auto es = std::make_shared<ExprSystem>();
  es->n = spec.n;
  es->m = spec.m;
  for (const auto& v : spec.slow_vars) es->names.push_back(v);
  for (const auto& v : spec.fast_vars) es->names.push_back(v);
  es->names.push_back("eps");
  for (const auto& [k, v] : spec.params) es->names.push_back(k);
  es->base.assign(es->names.size(), 0.0);
  {
    int c = spec.n + spec.m + 1;
    for (const auto& [k, v] : spec.params) es->base[c++] = v;
  }
  auto compile = [&](const std::string& src, const std::string& where) {
    try {
      return expr::bind(expr::parse(src), es->names);
    } catch (const expr::ParseError& e) {
      throw ConfigError(std::string("expression error: ") + e.what(), where);
    } catch (const expr::EvalError& e) {
      throw ConfigError(std::string("expression error: ") + e.what(), where);
    }
  };
  for (std::size_t i = 0; i < spec.f.size(); ++i)
    es->f.push_back(compile(spec.f[i], "/f/" + std::to_string(i)));
  for (std::size_t i = 0; i < spec.g.size(); ++i)
    es->g.push_back(compile(spec.g[i], "/g/" + std::to_string(i)));
  for (std::size_t i = 0; i < spec.h.size(); ++i)
    es->h.push_back(compile(spec.h[i], "/h/" + std::to_string(i)));

  SlowFastSystem sys;
  sys.n = spec.n;
  sys.m = spec.m;
  sys.slow_names = spec.slow_vars;
  sys.fast_names = spec.fast_vars;
  sys.params = spec.params;
  sys.z_bounds = spec.z_bounds;
  sys.h_zero = spec.h.empty();

  sys.f = [es](const Vec& p, const Vec& z, double eps) {
    thread_local std::vector<double> buf;
    es->fill(buf, p, z, eps);
    Vec out(es->n);
    for (int i = 0; i < es->n; ++i) out[i] = es->f[i].eval(buf);
    return out;
  };
  sys.g = [es](const Vec& p, const Vec& z, double eps) {
    thread_local std::vector<double> buf;
    es->fill(buf, p, z, eps);
    Vec out(es->m);
    for (int j = 0; j < es->m; ++j) out[j] = es->g[j].eval(buf);
    return out;
  };
  if (sys.h_zero) {
    sys.h = [n = spec.n](const Vec&, const Vec&, double) { return Vec::Zero(n); };
  } else {
    sys.h = [es](const Vec& p, const Vec& z, double eps) {
      thread_local std::vector<double> buf;
      es->fill(buf, p, z, eps);
      Vec out(es->n);
      for (int i = 0; i < es->n; ++i) out[i] = es->h[i].eval(buf);
      return out;
    };
  }
  sys.gz_partial = [es](int j, const Vec& p, const Vec& z, double eps) {
    thread_local std::vector<double> buf;
    es->fill(buf, p, z, eps);
    return es->g[j].eval_dual(buf, es->n + j).der;
  };
  sys.df_dp = [es](const Vec& p, const Vec& z) {
    thread_local std::vector<double> buf;
    es->fill(buf, p, z, 0.0);
    Mat J(es->n, es->n);
    for (int i = 0; i < es->n; ++i)
      for (int k = 0; k < es->n; ++k) J(i, k) = es->f[i].eval_dual(buf, k).der;
    return J;
  };
  // dgz_dp stays empty: central differences of the dual-mode partial.
  return sys;
}

ManifoldChain build_chain(const ConfigSpec& spec) {
  ManifoldChain chain;
  for (const auto& leg : spec.legs) {
    LegSpec l;
    l.z = Eigen::Map<const Vec>(leg.z.data(), leg.z.size());
    l.j_in = leg.j_in - 1;
    l.a_guess = Eigen::Map<const Vec>(leg.a_guess.data(), leg.a_guess.size());
    chain.legs.push_back(std::move(l));
  }
  return chain;
}

}  // namespace sfo
