#include "stitcher/checks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>

#include "stitcher/errors.hpp"
#include "stitcher/polynomial.hpp"

namespace stitcher {

namespace {
// Relative slack on limit comparisons so that states sampled exactly at a
// limit (e.g. a node velocity of exactly v_max) are not rejected by rounding.
constexpr double kLimitSlack = 1e-9;

bool exceeds(double value, double limit) { return value > limit * (1.0 + kLimitSlack) + kLimitSlack; }
bool below(double value, double limit) { return value < limit * (1.0 - kLimitSlack) - kLimitSlack; }
}  // namespace

void ConstraintLimits::validate() const {
  auto bad = [](const std::string& what) { throw StitcherError(ErrorCode::kParameter, what); };
  if (!(f_min >= 0.0) || !(f_max >= f_min)) bad("thrust limits must satisfy 0 <= f_min <= f_max");
  if (!(theta_max_deg > 0.0 && theta_max_deg < 90.0)) bad("theta_max must be in (0, 90) degrees");
  if (!(v_max > 0.0)) bad("v_max must be > 0");
  if (!(omega_max > 0.0)) bad("omega_max must be > 0");
  if (!(gravity > 0.0)) bad("gravity must be > 0");
}

double ConstraintLimits::theta_max_rad() const { return theta_max_deg * std::numbers::pi / 180.0; }

Vec3 ConstraintLimits::axis_acceleration_bounds() const {
  return stitcher::axis_acceleration_bounds(f_min, f_max, theta_max_rad(), gravity);
}

FlatOutputs flat_outputs(const Vec3& acceleration, const Vec3& jerk, double gravity) {
  FlatOutputs out;
  out.thrust = acceleration + Vec3(0.0, 0.0, gravity);
  const double f = out.thrust.norm();
  if (f < 1e-9) {
    out.singular = true;
    return out;
  }
  const Vec3 zb = out.thrust / f;
  out.omega_norm = (jerk - jerk.dot(zb) * zb).norm() / f;
  return out;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kThrust: return "thrust";
    case ViolationKind::kTilt: return "tilt";
    case ViolationKind::kVelocity: return "velocity";
    case ViolationKind::kOmega: return "omega";
    case ViolationKind::kCollision: return "collision";
    case ViolationKind::kSingular: return "singular";
  }
  return "unknown";
}

nlohmann::json Violation::to_json() const {
  return {{"time_s", time_s}, {"kind", to_string(kind)}, {"value", value}, {"limit", limit}};
}

double tilt_deg(const Vec3& thrust) {
  const double f = thrust.norm();
  if (f <= 0.0) return 180.0;
  return std::acos(std::clamp(thrust.z() / f, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

std::optional<Violation> check_state(const Vec3& velocity, const Vec3& acceleration,
                                     const Vec3& jerk, const ConstraintLimits& limits,
                                     double time_s) {
  const FlatOutputs fo = flat_outputs(acceleration, jerk, limits.gravity);
  if (fo.singular) return Violation{time_s, ViolationKind::kSingular, 0.0, limits.f_min};
  const double f = fo.thrust.norm();
  if (below(f, limits.f_min)) return Violation{time_s, ViolationKind::kThrust, f, limits.f_min};
  if (exceeds(f, limits.f_max)) return Violation{time_s, ViolationKind::kThrust, f, limits.f_max};
  if (below(fo.thrust.z(), f * std::cos(limits.theta_max_rad()))) {
    return Violation{time_s, ViolationKind::kTilt, tilt_deg(fo.thrust), limits.theta_max_deg};
  }
  const double speed = velocity.norm();
  if (exceeds(speed, limits.v_max)) {
    return Violation{time_s, ViolationKind::kVelocity, speed, limits.v_max};
  }
  if (exceeds(fo.omega_norm, limits.omega_max)) {
    return Violation{time_s, ViolationKind::kOmega, fo.omega_norm, limits.omega_max};
  }
  return std::nullopt;
}

std::optional<Violation> check_constraints(const PolynomialTrajectory& traj,
                                           const ConstraintLimits& limits, double dt) {
  if (!(dt > 0.0)) throw StitcherError(ErrorCode::kParameter, "constraint dt must be > 0");
  if (traj.empty()) return std::nullopt;
  const double T = traj.duration();
  for (std::size_t k = 0;; ++k) {
    const double t = std::min(static_cast<double>(k) * dt, T);
    auto v = check_state(traj.evaluate(t, 1), traj.evaluate(t, 2), traj.evaluate(t, 3), limits, t);
    if (v) return v;
    if (t >= T) break;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SafeSphereCache

double SafeSphereCache::clearance(Key key, const Vec3& p) const {
  std::shared_lock lock(mutex_);
  const auto it = spheres_.find(key);
  if (it == spheres_.end()) return 0.0;
  double best = 0.0;
  for (const SafeSphere& s : it->second) best = std::max(best, s.radius - (p - s.center).norm());
  return best;
}

void SafeSphereCache::insert(Key key, const SafeSphere& sphere) {
  std::unique_lock lock(mutex_);
  spheres_[key].push_back(sphere);
}

std::size_t SafeSphereCache::size(Key key) const {
  std::shared_lock lock(mutex_);
  const auto it = spheres_.find(key);
  return it == spheres_.end() ? 0 : it->second.size();
}

std::size_t SafeSphereCache::total_size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [key, v] : spheres_) n += v.size();
  return n;
}

std::vector<SafeSphere> SafeSphereCache::spheres(Key key) const {
  std::shared_lock lock(mutex_);
  const auto it = spheres_.find(key);
  return it == spheres_.end() ? std::vector<SafeSphere>{} : it->second;
}

void SafeSphereCache::clear() {
  std::unique_lock lock(mutex_);
  spheres_.clear();
}

// ---------------------------------------------------------------------------
// Collision checking

std::optional<double> first_out_of_bounds(const PolynomialTrajectory& traj, const VoxelGrid& grid) {
  if (traj.empty()) return std::nullopt;
  const Vec3 lo = grid.min_corner();
  const Vec3 hi = grid.max_corner();
  std::optional<double> first;
  const auto& bp = traj.breakpoints();
  for (std::size_t k = 0; k < traj.piece_count(); ++k) {
    const double len = bp[k + 1] - bp[k];
    for (int axis = 0; axis < 3; ++axis) {
      const auto row = traj.piece(k).row(axis);
      const std::array<double, PolynomialTrajectory::kCoeffs> c{row[0], row[1], row[2],
                                                                row[3], row[4], row[5]};
      std::vector<double> candidates{0.0, len};
      for (double r : poly::real_roots(poly::derivative(c))) {
        if (r > 0.0 && r < len) candidates.push_back(r);
      }
      for (double tau : candidates) {
        const double x = poly::evaluate(c, tau);
        // Upper face is exclusive: index_of(hi) is already out of bounds.
        if (x < lo[axis] || x >= hi[axis]) {
          const double t = bp[k] + tau;
          if (!first || t < *first) first = t;
        }
      }
    }
    if (first) break;
  }
  return first;
}

std::optional<Violation> check_collision(const PolynomialTrajectory& traj,
                                         const DistanceIndex& index, SafeSphereCache& cache,
                                         SafeSphereCache::Key pair_key,
                                         const CollisionCheckOptions& options,
                                         CollisionStats* stats) {
  if (!(options.v_max > 0.0) || !(options.dt_min > 0.0)) {
    throw StitcherError(ErrorCode::kParameter, "collision check needs v_max > 0 and dt_min > 0");
  }
  if (traj.empty()) return std::nullopt;
  CollisionStats local;
  CollisionStats& st = stats ? *stats : local;

  if (auto t_out = first_out_of_bounds(traj, index.grid())) {
    return Violation{*t_out, ViolationKind::kCollision, 0.0, 0.0};
  }

  const double T = traj.duration();
  double t = 0.0;
  while (true) {
    const Vec3 p = traj.evaluate(t, 0);
    ++st.samples;
    double clearance = cache.clearance(pair_key, p);
    if (clearance >= options.v_max * options.dt_min) {
      ++st.cache_hits;
    } else {
      clearance = index.box_distance(p);
      ++st.distance_queries;
      if (clearance <= 0.0) return Violation{t, ViolationKind::kCollision, clearance, 0.0};
      if (std::isfinite(clearance)) cache.insert(pair_key, {p, clearance});
    }
    const double advance = clearance / options.v_max;
    if (t + advance >= T) break;
    // Stepping by dt_min here could jump over a graze, so closer than
    // v_max * dt_min to an obstacle counts as contact.
    if (advance < options.dt_min) return Violation{t, ViolationKind::kCollision, clearance, 0.0};
    t = std::min(t + advance, T);
  }
  return std::nullopt;
}

std::optional<double> dense_collision_time(const PolynomialTrajectory& traj,
                                           const VoxelGrid& grid, double dt) {
  if (traj.empty()) return std::nullopt;
  const double T = traj.duration();
  for (std::size_t k = 0;; ++k) {
    const double t = std::min(static_cast<double>(k) * dt, T);
    if (grid.occupied(traj.evaluate(t, 0))) return t;
    if (t >= T) break;
  }
  return std::nullopt;
}

}  // namespace stitcher
