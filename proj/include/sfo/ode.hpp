#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfo::ode {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Deterministic, side-effect-free right-hand side dy/dt = eval(t, y).
struct VectorField {
  int dim = 0;
  std::function<void(double t, const Vec& y, Vec& dy)> eval;
};

struct OdeError : std::runtime_error {
  enum class Kind { StepUnderflow, NonFinite, TooManySteps };
  Kind kind;
  double t;
  Vec last_state;
  OdeError(Kind k, std::string msg, double time, Vec state)
      : std::runtime_error(std::move(msg)), kind(k), t(time), last_state(std::move(state)) {}
};

/// One accepted step's quartic interpolant in theta = (t - t0)/h.
struct DenseStep {
  double t0 = 0, h = 0;
  Vec r1, r2, r3, r4, r5;
  Vec eval(double t) const;
};

/// Continuous solution: knots plus per-step dense interpolants.
class Trajectory {
 public:
  const std::vector<double>& times() const { return ts_; }
  const std::vector<Vec>& states() const { return ys_; }
  double t_begin() const { return ts_.front(); }
  double t_end() const { return ts_.back(); }
  const Vec& y_begin() const { return ys_.front(); }
  const Vec& y_end() const { return ys_.back(); }

  /// Interpolated state; t clamped to the covered span.
  Vec eval(double t) const;

  void start(double t0, Vec y0);
  void append(const DenseStep& step, double t1, Vec y1);

 private:
  std::vector<double> ts_;
  std::vector<Vec> ys_;
  std::vector<DenseStep> steps_;
};

enum class Crossing { Rising, Falling, Either };

struct EventSpec {
  std::function<double(double t, const Vec& y)> value;
  Crossing direction = Crossing::Either;
  double root_tol = 1e-12;    // |value| at the reported event
  double time_tol = 1e-10;    // bisection bracket width
  double dead_band = 1e-8;    // crossings before t0 + dead_band are ignored
};

struct IntegrateOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double hmax = std::numeric_limits<double>::infinity();
  double h0 = 0.0;  // 0 = automatic
  long max_steps = 5'000'000;
};

Trajectory integrate(const VectorField& field, const Vec& y0, double t0, double t1,
                     const IntegrateOptions& opts = {});

struct EventResult {
  bool found = false;
  double t = 0;
  Vec y;
  Trajectory traj;  // up to the event, or the whole horizon when not found
};

EventResult integrate_until(const VectorField& field, const Vec& y0, double t0,
                            const EventSpec& event, double t_max,
                            const IntegrateOptions& opts = {});

using JacobianFn = std::function<Mat(double t, const Vec& y)>;

/// Propagates y together with tangents V (columns) under the variational flow.
std::pair<Vec, Mat> propagate_variational(const VectorField& field, const JacobianFn& jac,
                                          const Vec& y0, const Mat& V0, double t0, double t1,
                                          const IntegrateOptions& opts = {});

}  // namespace sfo::ode
