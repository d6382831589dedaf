#include "stitcher/primitives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "stitcher/errors.hpp"
#include "stitcher/polynomial.hpp"

namespace stitcher {

bool BoundaryState::finite() const {
  return position.allFinite() && velocity.allFinite() &&
         (!acceleration || acceleration->allFinite());
}

// ---------------------------------------------------------------------------
// PolynomialTrajectory

PolynomialTrajectory::PolynomialTrajectory(const Coefficients& coeffs, double duration) {
  append(coeffs, duration);
}

void PolynomialTrajectory::append(const Coefficients& coeffs, double duration) {
  if (!(duration > 0.0)) {
    throw StitcherError(ErrorCode::kParameter, "trajectory piece duration must be > 0");
  }
  if (breakpoints_.empty()) breakpoints_.push_back(0.0);
  pieces_.push_back(coeffs);
  breakpoints_.push_back(breakpoints_.back() + duration);
}

Eigen::Matrix<double, 1, PolynomialTrajectory::kCoeffs> differentiate_row(
    const Eigen::Matrix<double, 1, PolynomialTrajectory::kCoeffs>& row, int order) {
  Eigen::Matrix<double, 1, PolynomialTrajectory::kCoeffs> out = row;
  for (int o = 0; o < order; ++o) {
    for (int k = 0; k + 1 < PolynomialTrajectory::kCoeffs; ++k) out[k] = (k + 1) * out[k + 1];
    out[PolynomialTrajectory::kCoeffs - 1] = 0.0;
  }
  return out;
}

Vec3 PolynomialTrajectory::evaluate(double t, int order) const {
  if (order < 0 || order > 3) {
    throw StitcherError(ErrorCode::kParameter, "derivative order must be in 0..3");
  }
  if (pieces_.empty() || !(t >= 0.0) || t > duration()) {
    throw StitcherError(ErrorCode::kDomain, "evaluation time outside [0, T]");
  }
  // First piece whose end time is >= t (left-continuous at breakpoints).
  const auto it = std::lower_bound(breakpoints_.begin() + 1, breakpoints_.end(), t);
  const auto k = static_cast<std::size_t>(std::distance(breakpoints_.begin() + 1, it));
  const double tau = t - breakpoints_[k];
  Vec3 out;
  for (int axis = 0; axis < 3; ++axis) {
    const auto d = differentiate_row(pieces_[k].row(axis), order);
    double acc = 0.0;
    for (int c = kCoeffs - 1; c >= 0; --c) acc = acc * tau + d[c];
    out[axis] = acc;
  }
  return out;
}

double PolynomialTrajectory::jerk_cost() const {
  double total = 0.0;
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const double dt = breakpoints_[k + 1] - breakpoints_[k];
    for (int axis = 0; axis < 3; ++axis) {
      const auto j = differentiate_row(pieces_[k].row(axis), 3);
      const std::array<double, 3> jc{j[0], j[1], j[2]};
      const auto sq = poly::multiply(jc, jc);
      total += poly::integrate(sq, dt);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Minimum-time double integrator

Eigen::Vector2d BangBangSolution::state_at(double t) const {
  t = std::clamp(t, 0.0, final_time);
  const double a1 = initial_sign * u_max;
  const double t1 = std::min(t, t_switch);
  double s = s0 + v0 * t1 + 0.5 * a1 * t1 * t1;
  double v = v0 + a1 * t1;
  if (t > t_switch) {
    const double t2 = t - t_switch;
    s += v * t2 - 0.5 * a1 * t2 * t2;
    v -= a1 * t2;
  }
  return {s, v};
}

PolynomialTrajectory BangBangSolution::as_trajectory() const {
  PolynomialTrajectory traj;
  const double a1 = initial_sign * u_max;
  if (t_switch > 0.0) {
    PolynomialTrajectory::Coefficients c = PolynomialTrajectory::Coefficients::Zero();
    c(0, 0) = s0;
    c(0, 1) = v0;
    c(0, 2) = 0.5 * a1;
    traj.append(c, t_switch);
  }
  const double t2 = final_time - t_switch;
  if (t2 > 0.0) {
    const Eigen::Vector2d sw = state_at(t_switch);
    PolynomialTrajectory::Coefficients c = PolynomialTrajectory::Coefficients::Zero();
    c(0, 0) = sw[0];
    c(0, 1) = sw[1];
    c(0, 2) = -0.5 * a1;
    traj.append(c, t2);
  }
  return traj;
}

BangBangSolution min_time_1d(double s0, double v0, double sf, double vf, double u_max) {
  if (!(u_max > 0.0) || !std::isfinite(u_max)) {
    throw StitcherError(ErrorCode::kParameter, "u_max must be > 0");
  }
  if (!std::isfinite(s0) || !std::isfinite(v0) || !std::isfinite(sf) || !std::isfinite(vf)) {
    throw StitcherError(ErrorCode::kParameter, "boundary values must be finite");
  }
  BangBangSolution best;
  best.s0 = s0;
  best.v0 = v0;
  best.u_max = u_max;
  best.final_time = std::numeric_limits<double>::infinity();

  const double ds = sf - s0;
  const double mean_sq = 0.5 * (v0 * v0 + vf * vf);
  // For ordering `sign`, the switching velocity v_s satisfies
  // v_s^2 = sign*u*ds + (v0^2 + vf^2)/2 (the switching-time quadratic solved for
  // the velocity at the switch), with v_s on the side of both v0 and vf.
  double best_violation = std::numeric_limits<double>::infinity();
  BangBangSolution fallback = best;
  for (int sign : {1, -1}) {
    const double disc = sign * u_max * ds + mean_sq;
    const double vs = sign * std::sqrt(std::max(disc, 0.0));
    double t1 = sign * (vs - v0) / u_max;
    double t2 = sign * (vs - vf) / u_max;
    const double tol = 1e-12 * (1.0 + std::abs(v0) + std::abs(vf)) / u_max;
    const double violation = std::max({0.0, -t1, -t2, -disc / (u_max * u_max)});
    t1 = std::max(t1, 0.0);
    t2 = std::max(t2, 0.0);
    BangBangSolution cand = best;
    cand.t_switch = t1;
    cand.final_time = t1 + t2;
    cand.initial_sign = sign;
    if (violation <= tol) {
      if (cand.final_time < best.final_time) best = cand;
    } else if (violation < best_violation) {
      best_violation = violation;
      fallback = cand;
    }
  }
  if (!std::isfinite(best.final_time)) best = fallback;
  return best;
}

double min_time_3d(const BoundaryState& x0, const BoundaryState& xf, const Vec3& u_max) {
  double t = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const auto sol = min_time_1d(x0.position[axis], x0.velocity[axis], xf.position[axis],
                                 xf.velocity[axis], u_max[axis]);
    t = std::max(t, sol.final_time);
  }
  return t;
}

double min_time_3d(const BoundaryState& x0, const BoundaryState& xf, double u_max) {
  return min_time_3d(x0, xf, Vec3::Constant(u_max));
}

Vec3 axis_acceleration_bounds(double f_min, double f_max, double theta_max_rad, double gravity) {
  const double horizontal = f_max * std::sin(theta_max_rad);
  const double vertical = std::max(f_max - gravity, gravity - f_min);
  return {horizontal, horizontal, vertical};
}

// ---------------------------------------------------------------------------
// LQMT triple integrator, free terminal acceleration.
//
// Per axis with D = pf - (p0 + v0 T + a0 T^2/2) and E = (vf - v0 - a0 T) T the
// quintic is fixed by p(T) = pf, v(T) = vf, jerk(T) = 0:
//   c3 T^3 = 20D/3 - 2E,  c4 T^4 = 3E - 25D/3,  c5 T^5 = 8D/3 - E,
// and with A = 40D - 12E, C = 160D - 60E the control cost is
//   integral jerk^2 = (A^2/3 - A C/6 + C^2/30) / T^5.

namespace {

Vec3 initial_acceleration(const BoundaryState& x0) {
  return x0.acceleration.value_or(Vec3::Zero());
}

struct AxisResiduals {
  double D;
  double E;
};

AxisResiduals residuals(double p0, double v0, double a0, double pf, double vf, double T) {
  return {pf - (p0 + v0 * T + 0.5 * a0 * T * T), (vf - v0 - a0 * T) * T};
}

double axis_cost_numerator(double D, double E) {
  const double A = 40.0 * D - 12.0 * E;
  const double C = 160.0 * D - 60.0 * E;
  return A * A / 3.0 - A * C / 6.0 + C * C / 30.0;
}

// Numerator P(T) of the summed control cost P(T)/T^5, ascending powers (deg 4).
std::vector<double> control_cost_numerator(const BoundaryState& x0, const BoundaryState& xf) {
  const Vec3 a0 = initial_acceleration(x0);
  std::vector<double> total(5, 0.0);
  for (int axis = 0; axis < 3; ++axis) {
    const double p0 = x0.position[axis], v0 = x0.velocity[axis], a = a0[axis];
    const double pf = xf.position[axis], vf = xf.velocity[axis];
    const std::array<double, 3> D{pf - p0, -v0, -0.5 * a};
    const std::array<double, 3> E{0.0, vf - v0, -a};
    const auto A = poly::add(poly::scale(D, 40.0), poly::scale(E, -12.0));
    const auto C = poly::add(poly::scale(D, 160.0), poly::scale(E, -60.0));
    auto q = poly::add(poly::scale(poly::multiply(A, A), 1.0 / 3.0),
                       poly::scale(poly::multiply(A, C), -1.0 / 6.0));
    q = poly::add(q, poly::scale(poly::multiply(C, C), 1.0 / 30.0));
    total = poly::add(total, q);
  }
  total.resize(5, 0.0);
  return total;
}

constexpr double kMinFixedDuration = 1e-6;
constexpr double kMinOptimalDuration = 1e-3;

}  // namespace

PolynomialTrajectory lqmt_fixed_T(const BoundaryState& x0, const BoundaryState& xf, double T) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw StitcherError(ErrorCode::kParameter, "primitive duration must be > 0");
  }
  if (T < kMinFixedDuration) {
    throw StitcherError(ErrorCode::kConditioning, "primitive duration too small for a stable solve");
  }
  const Vec3 a0 = initial_acceleration(x0);
  PolynomialTrajectory::Coefficients c = PolynomialTrajectory::Coefficients::Zero();
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  for (int axis = 0; axis < 3; ++axis) {
    const auto [D, E] = residuals(x0.position[axis], x0.velocity[axis], a0[axis],
                                  xf.position[axis], xf.velocity[axis], T);
    c(axis, 0) = x0.position[axis];
    c(axis, 1) = x0.velocity[axis];
    c(axis, 2) = 0.5 * a0[axis];
    c(axis, 3) = (20.0 / 3.0 * D - 2.0 * E) / T3;
    c(axis, 4) = (3.0 * E - 25.0 / 3.0 * D) / T4;
    c(axis, 5) = (8.0 / 3.0 * D - E) / T5;
  }
  return PolynomialTrajectory(c, T);
}

double lqmt_control_cost(const BoundaryState& x0, const BoundaryState& xf, double T) {
  if (!(T > 0.0)) throw StitcherError(ErrorCode::kParameter, "duration must be > 0");
  const Vec3 a0 = initial_acceleration(x0);
  double total = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const auto [D, E] = residuals(x0.position[axis], x0.velocity[axis], a0[axis],
                                  xf.position[axis], xf.velocity[axis], T);
    total += axis_cost_numerator(D, E);
  }
  return total / std::pow(T, 5);
}

LqmtSolution lqmt_optimal(const BoundaryState& x0, const BoundaryState& xf, double rho) {
  if (!(rho > 1.0) || !std::isfinite(rho)) {
    throw StitcherError(ErrorCode::kParameter, "time penalty rho must be > 1");
  }
  if (!x0.finite() || !xf.finite()) {
    throw StitcherError(ErrorCode::kParameter, "boundary states must be finite");
  }
  const std::vector<double> P = control_cost_numerator(x0, xf);
  double scale = 0.0;
  for (double v : P) scale = std::max(scale, std::abs(v));
  if (scale <= 1e-24) {
    // Same position, both at rest, zero initial acceleration.
    return LqmtSolution{};
  }

  // d/dT [rho T + P(T)/T^5] = 0  <=>  rho T^6 + T P'(T) - 5 P(T) = 0.
  std::vector<double> stationarity(7, 0.0);
  stationarity[6] = rho;
  for (int k = 0; k <= 4; ++k) stationarity[k] = (k - 5) * P[k];

  auto cost_at = [&](double T) { return rho * T + poly::evaluate(P, T) / std::pow(T, 5); };

  double best_T = -1.0;
  double best_J = std::numeric_limits<double>::infinity();
  for (double r : poly::real_roots(stationarity)) {
    if (!(r > 0.0)) continue;
    const double T = std::max(r, kMinOptimalDuration);
    const double J = cost_at(T);
    if (J < best_J) {
      best_J = J;
      best_T = T;
    }
  }
  if (best_T <= 0.0) {
    throw StitcherError(ErrorCode::kRootFailure, "no positive real root for the optimal duration");
  }

  LqmtSolution out;
  out.duration = best_T;
  out.control_cost = poly::evaluate(P, best_T) / std::pow(best_T, 5);
  out.cost = rho * best_T + out.control_cost;
  out.trajectory = lqmt_fixed_T(x0, xf, best_T);
  return out;
}

}  // namespace stitcher
