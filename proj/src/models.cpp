#include "sfo/models.hpp"

#include <cmath>

namespace sfo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// ---------------------------------------------------------------- tradeoff

SlowFastSystem build_tradeoff() {
  const double a = -0.1, b = 3.0, c = 1.0, d = 2.8, k = 1.0, r = 10.0;
  SlowFastSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.slow_names = {"x", "y"};
  sys.fast_names = {"al"};
  sys.params = {{"a", a}, {"b", b}, {"c", c}, {"d", d}, {"k", k}, {"r", r}};
  sys.z_bounds = {{0.0, 1.0}};
  sys.h_zero = true;

  sys.f = [=](const Vec& p, const Vec& z, double) {
    const double x = p[0], y = p[1], al = z[0];
    const double sig = a * al * al + b * al + c;
    const double pred = x * y * sig / (1 + x);
    return vec2(x * (al + r - k * x) - pred, pred - d * y);
  };
  sys.h = [](const Vec&, const Vec&, double) { return Vec::Zero(2); };
  sys.g = [=](const Vec& p, const Vec& z, double) {
    const double x = p[0], y = p[1], al = z[0];
    const double E = 1 - y * (2 * a * al + b) / (1 + x);
    return Vec::Constant(1, al * (1 - al) * E);
  };
  sys.gz_partial = [=](int, const Vec& p, const Vec& z, double) {
    const double x = p[0], y = p[1], al = z[0];
    const double E = 1 - y * (2 * a * al + b) / (1 + x);
    const double dE = -2 * a * y / (1 + x);
    return (1 - 2 * al) * E + al * (1 - al) * dE;
  };
  sys.df_dp = [=](const Vec& p, const Vec& z) {
    const double x = p[0], y = p[1], al = z[0];
    const double sig = a * al * al + b * al + c;
    const double hx = 1 + x;
    Mat J(2, 2);
    J << al + r - 2 * k * x - y * sig / (hx * hx), -x * sig / hx,
        y * sig / (hx * hx), x * sig / hx - d;
    return J;
  };
  sys.dgz_dp = [=](int, const Vec& p, const Vec& z) {
    const double x = p[0], y = p[1], al = z[0];
    const double w = 2 * a * al + b;
    const double hx = 1 + x;
    Vec gr = vec2((1 - 2 * al) * y * w / (hx * hx), -(1 - 2 * al) * w / hx);
    gr += al * (1 - al) * vec2(2 * a * y / (hx * hx), -2 * a / hx);
    return gr;
  };
  return sys;
}

ConfigSpec config_tradeoff() {
  ConfigSpec s;
  s.n = 2;
  s.m = 1;
  s.slow_vars = {"x", "y"};
  s.fast_vars = {"al"};
  s.params = {{"a", -0.1}, {"b", 3.0}, {"c", 1.0}, {"d", 2.8}, {"k", 1.0}, {"r", 10.0}};
  s.f = {"x*(al + r - k*x) - x*y*(a*al^2 + b*al + c)/(1 + x)",
         "x*y*(a*al^2 + b*al + c)/(1 + x) - d*y"};
  s.g = {"al*(1 - al)*(1 - y*(2*a*al + b)/(1 + x))"};
  s.z_bounds = {{0.0, 1.0}};
  s.legs = {{{0.0}, 1, {5.6, 11.0}}, {{1.0}, 1, {10.0, 0.36}}};
  return s;
}

// ---------------------------------------------------------------- switching

SlowFastSystem build_switching() {
  const double r = 0.5;
  SlowFastSystem sys;
  sys.n = 3;
  sys.m = 1;
  sys.slow_names = {"p1", "p2", "z"};
  sys.fast_names = {"q"};
  sys.params = {{"r", r}, {"m", 0.4}};  // m is the pre-rescaling mortality
  sys.z_bounds = {{0.0, 1.0}};
  sys.h_zero = true;

  sys.f = [=](const Vec& p, const Vec& zv, double) {
    const double p1 = p[0], p2 = p[1], z = p[2], q = zv[0];
    Vec out(3);
    out << (1 - q * z) * p1, (r - (1 - q) * z) * p2, (q * p1 + (1 - q) * p2 - 1) * z;
    return out;
  };
  sys.h = [](const Vec&, const Vec&, double) { return Vec::Zero(3); };
  sys.g = [](const Vec& p, const Vec& zv, double) {
    const double q = zv[0];
    return Vec::Constant(1, q * (1 - q) * (p[0] - p[1]));
  };
  sys.gz_partial = [](int, const Vec& p, const Vec& zv, double) {
    return (1 - 2 * zv[0]) * (p[0] - p[1]);
  };
  sys.df_dp = [=](const Vec& p, const Vec& zv) {
    const double p1 = p[0], p2 = p[1], z = p[2], q = zv[0];
    Mat J(3, 3);
    J << 1 - q * z, 0, -q * p1,
        0, r - (1 - q) * z, -(1 - q) * p2,
        q * z, (1 - q) * z, q * p1 + (1 - q) * p2 - 1;
    return J;
  };
  sys.dgz_dp = [](int, const Vec&, const Vec& zv) {
    Vec gr(3);
    gr << (1 - 2 * zv[0]), -(1 - 2 * zv[0]), 0.0;
    return gr;
  };
  return sys;
}

ConfigSpec config_switching() {
  ConfigSpec s;
  s.n = 3;
  s.m = 1;
  s.slow_vars = {"p1", "p2", "z"};
  s.fast_vars = {"q"};
  s.params = {{"r", 0.5}, {"m", 0.4}};
  s.f = {"(1 - q*z)*p1", "(r - (1 - q)*z)*p2", "(q*p1 + (1 - q)*p2 - 1)*z"};
  s.g = {"q*(1 - q)*(p1 - p2)"};
  s.z_bounds = {{0.0, 1.0}};
  s.legs = {{{0.0}, 1, {0.92, 1.08, 1.50}}, {{1.0}, 1, {1.08, 0.92, 1.50}}};
  return s;
}

// -------------------------------------------------------------- coevolution

struct CoevolParams {
  double s0 = 2.5, s1 = 3.5, k0 = 1.0, k1 = 0.1;
  double r0 = 0.65, r1 = 3.0, r2 = 2.3, r3 = -0.2, r4 = 0.01;
  double c0 = 1.7, d0 = 0.76, d1 = 1.77, h = 1.0;
};

SlowFastSystem build_coevolution() {
  const CoevolParams q;
  SlowFastSystem sys;
  sys.n = 2;
  sys.m = 2;
  sys.slow_names = {"x", "y"};
  sys.fast_names = {"al", "be"};
  sys.params = {{"s0", q.s0}, {"s1", q.s1}, {"k0", q.k0}, {"k1", q.k1}, {"r0", q.r0},
                {"r1", q.r1}, {"r2", q.r2}, {"r3", q.r3}, {"r4", q.r4}, {"c0", q.c0},
                {"d0", q.d0}, {"d1", q.d1}, {"h", q.h}};
  sys.z_bounds = {{0.0, 1.0}, {0.0, 1.0}};
  sys.h_zero = true;

  auto rho = [q](double al, double be) {
    return q.r0 + q.r1 * al + q.r2 * be + q.r3 * al * be + q.r4 * be * be;
  };
  auto E1 = [q](double x, double y, double al, double be) {
    const double s = q.s0 + q.s1 * al, k = q.k0 + q.k1 * al;
    return q.s1 * (1 - x / k) + s * x * q.k1 / (k * k) -
           (q.r1 + q.r3 * be) * y / (1 + q.h * x);
  };
  auto E2 = [q](double x, double y, double al, double be) {
    return q.c0 * x * (q.r2 + q.r3 * al + 2 * q.r4 * be) / (1 + q.h * x) -
           q.d1 * std::sqrt(y);
  };

  sys.f = [q, rho](const Vec& p, const Vec& z, double) {
    const double x = p[0], y = p[1], al = z[0], be = z[1];
    const double s = q.s0 + q.s1 * al, k = q.k0 + q.k1 * al;
    const double F = x * s * (1 - x / k);
    const double G = rho(al, be) * x * y / (1 + q.h * x);
    const double D = std::pow(y, 1.5) * (q.d0 + q.d1 * be);
    return vec2(F - G, q.c0 * G - D);
  };
  sys.h = [](const Vec&, const Vec&, double) { return Vec::Zero(2); };
  sys.g = [E1, E2](const Vec& p, const Vec& z, double) {
    const double al = z[0], be = z[1];
    return vec2(al * (1 - al) * E1(p[0], p[1], al, be),
                be * (1 - be) * E2(p[0], p[1], al, be));
  };
  sys.gz_partial = [q, E1, E2](int j, const Vec& p, const Vec& z, double) {
    const double x = p[0], y = p[1], al = z[0], be = z[1];
    if (j == 0) {
      const double s = q.s0 + q.s1 * al, k = q.k0 + q.k1 * al;
      const double dE1 = 2 * q.s1 * x * q.k1 / (k * k) - 2 * s * x * q.k1 * q.k1 / (k * k * k);
      return (1 - 2 * al) * E1(x, y, al, be) + al * (1 - al) * dE1;
    }
    const double dE2 = q.c0 * x * 2 * q.r4 / (1 + q.h * x);
    return (1 - 2 * be) * E2(x, y, al, be) + be * (1 - be) * dE2;
  };
  sys.df_dp = [q, rho](const Vec& p, const Vec& z) {
    const double x = p[0], y = p[1], al = z[0], be = z[1];
    const double s = q.s0 + q.s1 * al, k = q.k0 + q.k1 * al, rr = rho(al, be);
    const double hx = 1 + q.h * x;
    Mat J(2, 2);
    J << s * (1 - 2 * x / k) - rr * y / (hx * hx), -rr * x / hx,
        q.c0 * rr * y / (hx * hx),
        q.c0 * rr * x / hx - 1.5 * std::sqrt(y) * (q.d0 + q.d1 * be);
    return J;
  };
  sys.dgz_dp = [q](int j, const Vec& p, const Vec& z) {
    const double x = p[0], y = p[1], al = z[0], be = z[1];
    const double hx = 1 + q.h * x;
    if (j == 0) {
      const double s = q.s0 + q.s1 * al, k = q.k0 + q.k1 * al;
      Vec gr = vec2(-q.s1 / k + s * q.k1 / (k * k) + (q.r1 + q.r3 * be) * y * q.h / (hx * hx),
                    -(q.r1 + q.r3 * be) / hx);
      gr *= (1 - 2 * al);
      gr += al * (1 - al) *
            vec2(2 * q.s1 * q.k1 / (k * k) - 2 * s * q.k1 * q.k1 / (k * k * k), 0.0);
      return gr;
    }
    Vec gr = vec2(q.c0 * (q.r2 + q.r3 * al + 2 * q.r4 * be) / (hx * hx),
                  -q.d1 / (2 * std::sqrt(y)));
    gr *= (1 - 2 * be);
    gr += be * (1 - be) * vec2(2 * q.r4 * q.c0 / (hx * hx), 0.0);
    return gr;
  };
  return sys;
}

ConfigSpec config_coevolution() {
  const CoevolParams q;
  ConfigSpec s;
  s.n = 2;
  s.m = 2;
  s.slow_vars = {"x", "y"};
  s.fast_vars = {"al", "be"};
  s.params = {{"s0", q.s0}, {"s1", q.s1}, {"k0", q.k0}, {"k1", q.k1}, {"r0", q.r0},
              {"r1", q.r1}, {"r2", q.r2}, {"r3", q.r3}, {"r4", q.r4}, {"c0", q.c0},
              {"d0", q.d0}, {"d1", q.d1}, {"h", q.h}};
  const std::string rho = "(r0 + r1*al + r2*be + r3*al*be + r4*be^2)";
  s.f = {"x*(s0 + s1*al)*(1 - x/(k0 + k1*al)) - " + rho + "*x*y/(1 + h*x)",
         "c0*" + rho + "*x*y/(1 + h*x) - y^1.5*(d0 + d1*be)"};
  s.g = {"al*(1 - al)*(s1*(1 - x/(k0 + k1*al)) + (s0 + s1*al)*x*k1/(k0 + k1*al)^2"
         " - (r1 + r3*be)*y/(1 + h*x))",
         "be*(1 - be)*(c0*x*(r2 + r3*al + 2*r4*be)/(1 + h*x) - d1*y^0.5)"};
  s.z_bounds = {{0.0, 1.0}, {0.0, 1.0}};
  s.legs = {{{0.0, 0.0}, 1, {0.33, 1.99}},
            {{0.0, 1.0}, 2, {0.92, 0.56}},
            {{1.0, 1.0}, 1, {0.60, 0.55}},
            {{1.0, 0.0}, 2, {0.30, 0.93}}};
  return s;
}

// ------------------------------------------------------------------- planar

SlowFastSystem build_planar() {
  const double v0 = 1.0, v1 = 0.3, cG = 0.34, k0 = 1.0, k1 = 0.6;
  SlowFastSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.slow_names = {"a"};
  sys.fast_names = {"b"};
  sys.params = {{"v0", v0}, {"v1", v1}, {"cG", cG}, {"k0", k0}, {"k1", k1}};
  sys.z_bounds = {{0.0, kInf}};
  sys.h_zero = false;

  sys.f = [=](const Vec& p, const Vec&, double) {
    return Vec::Constant(1, v0 + v1 * (p[0] - 1));
  };
  sys.g = [=](const Vec& p, const Vec& z, double) {
    return Vec::Constant(1, z[0] * ((p[0] - 1) + cG * z[0]));
  };
  sys.h = [=](const Vec& p, const Vec& z, double) {
    return Vec::Constant(1, -z[0] * (k0 + k1 * (p[0] - 1)));
  };
  sys.gz_partial = [=](int, const Vec& p, const Vec& z, double) {
    return (p[0] - 1) + 2 * cG * z[0];
  };
  sys.df_dp = [=](const Vec&, const Vec&) { return Mat::Constant(1, 1, v1); };
  sys.dgz_dp = [](int, const Vec&, const Vec&) { return Vec::Constant(1, 1.0); };
  return sys;
}

ConfigSpec config_planar() {
  ConfigSpec s;
  s.n = 1;
  s.m = 1;
  s.slow_vars = {"a"};
  s.fast_vars = {"b"};
  s.params = {{"v0", 1.0}, {"v1", 0.3}, {"cG", 0.34}, {"k0", 1.0}, {"k1", 0.6}};
  s.f = {"v0 + v1*(a - 1)"};
  s.g = {"b*((a - 1) + cG*b)"};
  s.h = {"-b*(k0 + k1*(a - 1))"};
  s.z_bounds = {{0.0, kInf}};
  s.legs = {{{0.0}, 1, {-0.4}}};
  return s;
}

}  // namespace

const std::vector<ModelCatalogEntry>& catalog() {
  static const std::vector<ModelCatalogEntry> entries = {
      {"tradeoff", "predator-prey with rapid prey evolution along a quadratic tradeoff",
       build_tradeoff, config_tradeoff},
      {"switching", "one predator, two prey, rapid predator preference switching",
       build_switching, config_switching},
      {"coevolution", "predator-prey with two coevolving traits", build_coevolution,
       config_coevolution},
      {"planar", "planar slow-fast template with a synthetic closed orbit", build_planar,
       config_planar},
  };
  return entries;
}

const ModelCatalogEntry* find_model(std::string_view name) {
  for (const auto& e : catalog())
    if (e.name == name) return &e;
  return nullptr;
}

}  // namespace sfo
