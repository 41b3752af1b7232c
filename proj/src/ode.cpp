#include "sfo/ode.hpp"

#include <algorithm>
#include <cmath>

namespace sfo::ode {

namespace {

// Dormand-Prince 5(4) tableau, FSAL.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Stepper {
  const VectorField& f;
  Vec k1, k2, k3, k4, k5, k6, k7, ytmp;

  explicit Stepper(const VectorField& field) : f(field) {
    const int n = field.dim;
    for (Vec* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &ytmp}) v->resize(n);
  }

  // One trial step from (t, y) with derivative k1 already evaluated.
  // Fills y1 (5th order), err components in k-space, and k7 = f(t+h, y1).
  void step(double t, const Vec& y, double h, Vec& y1, double& err_norm, double atol,
            double rtol) {
    ytmp = y + h * (a21 * k1);
    f.eval(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f.eval(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f.eval(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f.eval(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f.eval(t + h, ytmp, k6);
    y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f.eval(t + h, y1, k7);
    double acc = 0.0;
    const int n = f.dim;
    for (int i = 0; i < n; ++i) {
      const double e =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      acc += (e / sc) * (e / sc);
    }
    err_norm = std::sqrt(acc / n);
  }

  DenseStep dense(double t, double h, const Vec& y, const Vec& y1) const {
    DenseStep ds;
    ds.t0 = t;
    ds.h = h;
    ds.r1 = y;
    ds.r2 = y1 - y;
    ds.r3 = h * k1 - ds.r2;
    ds.r4 = ds.r2 - h * k7 - ds.r3;
    ds.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    return ds;
  }
};

double initial_step(const VectorField& f, double t0, const Vec& y0, const Vec& f0,
                    double dir, double atol, double rtol, double hmax) {
  const int n = f.dim;
  double d0 = 0, d1n = 0;
  for (int i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::abs(y0[i]);
    d0 += (y0[i] / sc) * (y0[i] / sc);
    d1n += (f0[i] / sc) * (f0[i] / sc);
  }
  d0 = std::sqrt(d0 / n);
  d1n = std::sqrt(d1n / n);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, hmax);
  Vec y1 = y0 + dir * h0 * f0;
  Vec f1(n);
  f.eval(t0 + dir * h0, y1, f1);
  double d2 = 0;
  for (int i = 0; i < n; ++i) {
    const double sc = atol + rtol * std::abs(y0[i]);
    d2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
  }
  d2 = std::sqrt(d2 / n) / h0;
  const double dmax = std::max(d1n, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                  : std::pow(0.01 / dmax, 0.2);
  return std::min({100 * h0, h1, hmax});
}

bool finite(const Vec& v) { return v.allFinite(); }

}  // namespace

Vec DenseStep::eval(double t) const {
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

void Trajectory::start(double t0, Vec y0) {
  ts_.assign(1, t0);
  ys_.assign(1, std::move(y0));
  steps_.clear();
}

void Trajectory::append(const DenseStep& step, double t1, Vec y1) {
  steps_.push_back(step);
  ts_.push_back(t1);
  ys_.push_back(std::move(y1));
}

Vec Trajectory::eval(double t) const {
  if (steps_.empty()) return ys_.front();
  if (t <= ts_.front()) return ys_.front();
  if (t >= ts_.back()) return ys_.back();
  const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
  std::size_t idx = static_cast<std::size_t>(it - ts_.begin());
  idx = std::min(std::max<std::size_t>(idx, 1), steps_.size()) - 1;
  return steps_[idx].eval(t);
}

namespace {

// Shared integration loop. on_step is called after each accepted step with the
// dense interpolant; returning false stops the run.
template <typename OnStep>
void run_dopri5(const VectorField& field, const Vec& y0, double t0, double t1,
                const IntegrateOptions& opts, Trajectory& traj, OnStep&& on_step) {
  if (field.dim != y0.size()) throw std::invalid_argument("field/state dimension mismatch");
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  if (span == 0.0) throw std::invalid_argument("degenerate time span");

  Stepper st(field);
  Vec y = y0;
  double t = t0;
  traj.start(t0, y0);

  field.eval(t, y, st.k1);
  if (!finite(st.k1))
    throw OdeError(OdeError::Kind::NonFinite, "non-finite derivative at initial state", t, y);

  const double hmax = std::min(opts.hmax, span);
  double h = opts.h0 > 0 ? std::min(opts.h0, hmax)
                         : initial_step(field, t, y, st.k1, dir, opts.atol, opts.rtol, hmax);
  bool rejected = false;
  Vec y1(field.dim);

  for (long nstep = 0; nstep < opts.max_steps; ++nstep) {
    if (dir * (t - t1) >= 0) return;
    bool last = false;
    if (dir * (t + dir * h - t1) > 0) {
      h = std::abs(t1 - t);
      last = true;
    }
    if (h <= std::abs(t) * 1e-15 + 1e-300)
      throw OdeError(OdeError::Kind::StepUnderflow, "step size underflow", t, y);

    double err = 0;
    st.step(t, y, dir * h, y1, err, opts.atol, opts.rtol);
    if (!finite(y1) || !std::isfinite(err)) {
      // treat as a failed step; shrink
      h *= 0.25;
      rejected = true;
      if (h <= std::abs(t) * 1e-15 + 1e-300)
        throw OdeError(OdeError::Kind::NonFinite, "non-finite state during step", t, y);
      continue;
    }

    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2,
                                  rejected ? 1.0 : 10.0);
    if (err <= 1.0) {
      const DenseStep ds = st.dense(t, dir * h, y, y1);
      const double t_new = last ? t1 : t + dir * h;
      traj.append(ds, t_new, y1);
      if (!on_step(ds, t_new)) return;
      t = t_new;
      y.swap(y1);
      st.k1.swap(st.k7);  // FSAL
      rejected = false;
      h = std::min(h * fac, hmax);
    } else {
      rejected = true;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
  throw OdeError(OdeError::Kind::TooManySteps, "exceeded max_steps", t, y);
}

}  // namespace

Trajectory integrate(const VectorField& field, const Vec& y0, double t0, double t1,
                     const IntegrateOptions& opts) {
  Trajectory traj;
  run_dopri5(field, y0, t0, t1, opts, traj, [](const DenseStep&, double) { return true; });
  return traj;
}

namespace {

bool crossing_matches(double sa, double sb, Crossing dir) {
  switch (dir) {
    case Crossing::Rising: return sa < 0.0 && sb >= 0.0;
    case Crossing::Falling: return sa > 0.0 && sb <= 0.0;
    case Crossing::Either:
      return (sa < 0.0 && sb >= 0.0) || (sa > 0.0 && sb <= 0.0);
  }
  return false;
}

}  // namespace

EventResult integrate_until(const VectorField& field, const Vec& y0, double t0,
                            const EventSpec& event, double t_max,
                            const IntegrateOptions& opts) {
  EventResult res;
  const double dir_t = t_max >= t0 ? 1.0 : -1.0;
  const double t_arm = t0 + dir_t * event.dead_band;

  run_dopri5(field, y0, t0, t_max, opts, res.traj, [&](const DenseStep& ds, double t_new) {
    // scan the step's dense output for the first directional sign change
    const int samples = 8;
    if (dir_t * (t_new - t_arm) <= 0) return true;  // whole step inside the dead band
    const double ta = dir_t > 0 ? std::max(ds.t0, t_arm) : std::min(ds.t0, t_arm);
    double prev_t = ta;
    double prev_s = event.value(prev_t, ds.eval(prev_t));
    for (int i = 1; i <= samples; ++i) {
      const double ti = ta + (t_new - ta) * (static_cast<double>(i) / samples);
      const double si = event.value(ti, ds.eval(ti));
      if (crossing_matches(prev_s, si, event.direction)) {
        double lo = prev_t, hi = ti, slo = prev_s;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double sm = event.value(mid, ds.eval(mid));
          if (crossing_matches(slo, sm, event.direction)) {
            hi = mid;
          } else {
            lo = mid;
            slo = sm;
          }
          if (std::abs(hi - lo) < event.time_tol &&
              std::abs(event.value(hi, ds.eval(hi))) < event.root_tol)
            break;
          if (std::abs(hi - lo) < 1e-15 * std::max(1.0, std::abs(hi))) break;
        }
        res.found = true;
        res.t = hi;
        res.y = ds.eval(hi);
        return false;
      }
      prev_t = ti;
      prev_s = si;
    }
    return true;
  });
  return res;
}

std::pair<Vec, Mat> propagate_variational(const VectorField& field, const JacobianFn& jac,
                                          const Vec& y0, const Mat& V0, double t0, double t1,
                                          const IntegrateOptions& opts) {
  const int n = field.dim;
  const int r = static_cast<int>(V0.cols());
  if (V0.rows() != n) throw std::invalid_argument("tangent seed dimension mismatch");

  VectorField stacked;
  stacked.dim = n + n * r;
  Vec dy(n);
  stacked.eval = [&, dy](double t, const Vec& s, Vec& ds) mutable {
    const Vec y = s.head(n);
    field.eval(t, y, dy);
    ds.head(n) = dy;
    const Mat J = jac(t, y);
    Eigen::Map<const Mat> V(s.data() + n, n, r);
    Eigen::Map<Mat>(ds.data() + n, n, r) = J * V;
  };

  Vec s0(n + n * r);
  s0.head(n) = y0;
  Eigen::Map<Mat>(s0.data() + n, n, r) = V0;
  const Trajectory traj = integrate(stacked, s0, t0, t1, opts);
  const Vec& sf = traj.y_end();
  Mat Vf = Eigen::Map<const Mat>(sf.data() + n, n, r);
  return {sf.head(n), Vf};
}

}  // namespace sfo::ode
