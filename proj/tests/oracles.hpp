#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the closed forms under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "stitcher/primitives.hpp"

namespace stitcher::oracle {

/// Quintic on [0, T] with p(0)=p0, p'(0)=v0, p''(0)=a0, p(T)=pf, p'(T)=vf and
/// zero jerk at T (natural condition for a free terminal acceleration), from a
/// dense 6x6 solve. Ascending coefficients.
inline Eigen::Matrix<double, 6, 1> quintic_free_af(double p0, double v0, double a0, double pf,
                                                   double vf, double T) {
  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> b;
  A(0, 0) = 1;
  A(1, 1) = 1;
  A(2, 2) = 2;
  for (int k = 0; k < 6; ++k) {
    A(3, k) = std::pow(T, k);
    if (k >= 1) A(4, k) = k * std::pow(T, k - 1);
    if (k >= 3) A(5, k) = k * (k - 1) * (k - 2) * std::pow(T, k - 3);
  }
  b << p0, v0, a0, pf, vf, 0.0;
  return A.fullPivLu().solve(b);
}

/// Integral of jerk^2 by composite Gauss-Legendre (exact for the quartic integrand).
inline double jerk_cost_quadrature(const Eigen::Matrix<double, 6, 1>& c, double T, int panels = 8) {
  static const std::array<double, 3> x{-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const std::array<double, 3> w{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  auto jerk = [&](double t) { return 6 * c[3] + 24 * c[4] * t + 60 * c[5] * t * t; };
  double total = 0;
  const double h = T / panels;
  for (int i = 0; i < panels; ++i) {
    const double mid = (i + 0.5) * h;
    for (int k = 0; k < 3; ++k) {
      const double j = jerk(mid + 0.5 * h * x[k]);
      total += 0.5 * h * w[k] * j * j;
    }
  }
  return total;
}

inline double fixed_T_cost(const BoundaryState& x0, const BoundaryState& xf, double T) {
  const Vec3 a0 = x0.acceleration.value_or(Vec3::Zero());
  double cost = 0;
  for (int i = 0; i < 3; ++i) {
    cost += jerk_cost_quadrature(
        quintic_free_af(x0.position[i], x0.velocity[i], a0[i], xf.position[i], xf.velocity[i], T),
        T);
  }
  return cost;
}

struct GridSearchResult {
  double T = 0;
  double J = std::numeric_limits<double>::infinity();
};

/// Dense log-spaced grid over T followed by golden-section refinement
/// around the best grid point.
inline GridSearchResult lqmt_grid_search(const BoundaryState& x0, const BoundaryState& xf,
                                         double rho, double t_lo = 1e-3, double t_hi = 200.0,
                                         int samples = 4000) {
  auto J = [&](double T) { return rho * T + fixed_T_cost(x0, xf, T); };
  GridSearchResult best;
  const double ratio = std::pow(t_hi / t_lo, 1.0 / (samples - 1));
  int best_i = 0;
  double T = t_lo;
  for (int i = 0; i < samples; ++i, T *= ratio) {
    const double v = J(T);
    if (v < best.J) {
      best = {T, v};
      best_i = i;
    }
  }
  double a = t_lo * std::pow(ratio, std::max(0, best_i - 1));
  double b = t_lo * std::pow(ratio, std::min(samples - 1, best_i + 1));
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (J(c) < J(d)) b = d; else a = c;
  }
  const double Tm = 0.5 * (a + b);
  if (J(Tm) < best.J) best = {Tm, J(Tm)};
  return best;
}

/// Position interval reachable at exactly time T with final velocity vf under
/// |u| <= u_max, from the two extremal single-switch controls. Empty
/// (lo > hi) when |vf - v0| > u_max T.
inline std::pair<double, double> reachable_positions(double s0, double v0, double vf, double u,
                                                     double T) {
  if (std::abs(vf - v0) > u * T) return {1.0, -1.0};
  auto run = [&](double sign) {
    const double t1 = (sign * (vf - v0) + u * T) / (2 * u);
    const double t2 = T - t1;
    const double a = sign * u;
    const double v1 = v0 + a * t1;
    return s0 + v0 * t1 + 0.5 * a * t1 * t1 + v1 * t2 - 0.5 * a * t2 * t2;
  };
  return {run(-1.0), run(1.0)};
}

inline bool reachable(double s0, double v0, double sf, double vf, double u, double T,
                      double tol = 1e-9) {
  const auto [lo, hi] = reachable_positions(s0, v0, vf, u, T);
  return lo - tol <= sf && sf <= hi + tol;
}

}  // namespace stitcher::oracle
