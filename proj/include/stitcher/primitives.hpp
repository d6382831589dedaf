#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "stitcher/environment.hpp"

namespace stitcher {

/// Boundary condition of a primitive. A missing acceleration means "free".
struct BoundaryState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  std::optional<Vec3> acceleration;

  bool finite() const;
};

/// Piecewise polynomial in three axes. Each piece stores ascending-power
/// coefficients in local time (t - breakpoint). Degree is at most 5.
class PolynomialTrajectory {
 public:
  static constexpr int kCoeffs = 6;
  using Coefficients = Eigen::Matrix<double, 3, kCoeffs>;

  PolynomialTrajectory() = default;
  /// Single piece of the given duration.
  PolynomialTrajectory(const Coefficients& coeffs, double duration);

  /// Appends a piece that starts at the current end time.
  void append(const Coefficients& coeffs, double duration);

  double duration() const { return breakpoints_.empty() ? 0.0 : breakpoints_.back(); }
  bool empty() const { return pieces_.empty(); }
  std::size_t piece_count() const { return pieces_.size(); }
  const Coefficients& piece(std::size_t i) const { return pieces_[i]; }
  /// Piece start times plus the final time; size piece_count() + 1.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  /// Derivative of the given order (0..3) at t in [0, T]. At an interior
  /// breakpoint the piece that ends there is used.
  Vec3 evaluate(double t, int order) const;

  /// Integral of ||jerk||^2 over the whole trajectory, exact.
  double jerk_cost() const;

 private:
  std::vector<Coefficients> pieces_;
  std::vector<double> breakpoints_;
};

/// Coefficients of the `order`-th derivative of one axis row, in ascending power.
Eigen::Matrix<double, 1, PolynomialTrajectory::kCoeffs> differentiate_row(
    const Eigen::Matrix<double, 1, PolynomialTrajectory::kCoeffs>& row, int order);

/// One-axis minimum-time bang-bang profile: u = sign*u_max on [0, t_switch),
/// then -sign*u_max until final_time.
struct BangBangSolution {
  double s0 = 0, v0 = 0;
  double u_max = 1;
  double t_switch = 0;
  double final_time = 0;
  int initial_sign = 1;

  /// Position and velocity at t (clamped into [0, final_time]).
  Eigen::Vector2d state_at(double t) const;
  /// Same profile as a two-piece trajectory on the x axis.
  PolynomialTrajectory as_trajectory() const;
};

BangBangSolution min_time_1d(double s0, double v0, double sf, double vf, double u_max);

/// Per-axis minimum times; the 3D edge cost is their maximum.
double min_time_3d(const BoundaryState& x0, const BoundaryState& xf, const Vec3& u_max);
double min_time_3d(const BoundaryState& x0, const BoundaryState& xf, double u_max);

/// Per-axis acceleration bounds implied by thrust magnitude and tilt limits:
/// horizontal f_max sin(theta_max); vertical max(f_max - g, g - f_min).
Vec3 axis_acceleration_bounds(double f_min, double f_max, double theta_max_rad, double gravity);

/// Triple-integrator primitive of fixed duration: initial position, velocity and
/// acceleration; final position and velocity; terminal acceleration free.
PolynomialTrajectory lqmt_fixed_T(const BoundaryState& x0, const BoundaryState& xf, double T);

struct LqmtSolution {
  double duration = 0;
  double cost = 0;
  double control_cost = 0;
  PolynomialTrajectory trajectory;
};

/// Control cost sum_axes integral of jerk^2 of the fixed-T solution, in closed form.
double lqmt_control_cost(const BoundaryState& x0, const BoundaryState& xf, double T);

/// Minimises rho*T + integral ||jerk||^2 over T. The stationarity condition is
/// a degree-6 polynomial in T whose real positive roots are candidates.
LqmtSolution lqmt_optimal(const BoundaryState& x0, const BoundaryState& xf, double rho);

}  // namespace stitcher
