#pragma once

#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "stitcher/environment.hpp"
#include "stitcher/primitives.hpp"

namespace stitcher {

/// Mass-normalized actuator and state limits. Gravity acts along -z.
struct ConstraintLimits {
  double f_min = 0.85;
  double f_max = 18.75;
  double theta_max_deg = 60.0;
  double v_max = 10.0;
  double omega_max = 6.0;
  double gravity = 9.81;

  void validate() const;
  double theta_max_rad() const;
  /// Per-axis bound on achievable acceleration inside the thrust set.
  Vec3 axis_acceleration_bounds() const;
};

struct FlatOutputs {
  Vec3 thrust = Vec3::Zero();  ///< a + g z
  double omega_norm = 0.0;     ///< body rate magnitude, zero yaw rate
  bool singular = false;       ///< ||thrust|| below 1e-9
};

FlatOutputs flat_outputs(const Vec3& acceleration, const Vec3& jerk, double gravity);

enum class ViolationKind { kThrust, kTilt, kVelocity, kOmega, kCollision, kSingular };

const char* to_string(ViolationKind kind);

struct Violation {
  double time_s = 0.0;
  ViolationKind kind = ViolationKind::kCollision;
  double value = 0.0;
  double limit = 0.0;

  nlohmann::json to_json() const;
};

/// Tilt of the thrust vector from +z, degrees.
double tilt_deg(const Vec3& thrust);

/// Checks one state against the thrust magnitude, tilt, speed and body-rate
/// limits; returns the first failing limit in that order.
std::optional<Violation> check_state(const Vec3& velocity, const Vec3& acceleration,
                                     const Vec3& jerk, const ConstraintLimits& limits,
                                     double time_s = 0.0);

/// Uniform samples at 0, dt, 2dt, ... and always at T. Returns the earliest violation.
std::optional<Violation> check_constraints(const PolynomialTrajectory& traj,
                                           const ConstraintLimits& limits, double dt);

struct SafeSphere {
  Vec3 center;
  double radius;
};

/// Obstacle-free spheres recorded while checking primitives, grouped by the
/// waypoint pair the primitives connect. Readers may run concurrently.
class SafeSphereCache {
 public:
  using Key = std::int64_t;

  static Key pair_key(int from_waypoint, int to_waypoint) {
    return (static_cast<Key>(from_waypoint) << 32) | static_cast<std::uint32_t>(to_waypoint);
  }

  /// Largest remaining clearance R - ||p - c|| over spheres containing p; <= 0 if none.
  double clearance(Key key, const Vec3& p) const;
  void insert(Key key, const SafeSphere& sphere);

  std::size_t size(Key key) const;
  std::size_t total_size() const;
  std::vector<SafeSphere> spheres(Key key) const;
  void clear();

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<Key, std::vector<SafeSphere>> spheres_;
};

struct CollisionStats {
  std::size_t distance_queries = 0;
  std::size_t cache_hits = 0;
  std::size_t samples = 0;
};

struct CollisionCheckOptions {
  double v_max = 10.0;
  double dt_min = 1e-3;
};

/// Exact per-axis range of the trajectory (from velocity roots) checked
/// against the grid box; returns the time of the first out-of-bounds extremum.
std::optional<double> first_out_of_bounds(const PolynomialTrajectory& traj, const VoxelGrid& grid);

/// Adaptive time-of-collision sampling. At each sample the trajectory is
/// certified free for (clearance / v_max) seconds, where clearance comes from a
/// cached sphere when the sample lies inside one and from the exact voxel-box
/// distance otherwise. A sample whose certified advance is below dt_min is
/// reported as contact. Only sound when ||v|| <= v_max has been checked separately.
std::optional<Violation> check_collision(const PolynomialTrajectory& traj,
                                         const DistanceIndex& index, SafeSphereCache& cache,
                                         SafeSphereCache::Key pair_key,
                                         const CollisionCheckOptions& options,
                                         CollisionStats* stats = nullptr);

/// Independent dense verification: samples every `dt` and tests the voxel
/// containing each sample point.
std::optional<double> dense_collision_time(const PolynomialTrajectory& traj,
                                           const VoxelGrid& grid, double dt = 1e-3);

}  // namespace stitcher
