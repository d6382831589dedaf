#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "stitcher/checks.hpp"
#include "stitcher/environment.hpp"
#include "stitcher/geometric_path.hpp"
#include "stitcher/mp_search.hpp"
#include "stitcher/velocity_graph.hpp"

namespace stitcher {

struct PerlinParams {
  std::uint64_t seed = 0;
  Index3 dims = Index3(250, 250, 25);
  double resolution = 0.2;
  double threshold = 0.05;
  PerlinOptions options;
  Vec3 origin = Vec3::Zero();
};

/// Either a grid file or procedural Perlin parameters.
struct GridSource {
  std::optional<std::filesystem::path> file;
  PerlinParams perlin;
};

/// Everything the planner needs; validated before any planning starts.
///
/// JSON keys (all optional except where noted):
///   limits: {f_min, f_max, theta_max_deg, v_max, omega_max, gravity}
///   rho, constraint_dt, inflation_radius, seed
///   velocity_sampling: {magnitudes: [m/s...] | magnitude_count: n,
///                       cone_half_angle_deg, boundary_direction_count}
///   start: {position (required), velocity, acceleration}
///   goal:  {position (required), velocity}
///   grid:  {file: path} | {perlin: {seed, dims, resolution, threshold,
///                                   octaves, persistence, feature_size, origin}}
///   benchmark: {waypoint_counts: [..], max_attempts}
struct PlannerConfig {
  ConstraintLimits limits;
  double rho = 1000.0;
  VelocitySampleConfig sampling;
  BoundaryState start;
  BoundaryState goal;
  double constraint_dt = 0.1;
  double inflation_radius = 0.3;
  GridSource grid;
  std::uint64_t seed = 0;

  std::vector<int> benchmark_waypoint_counts{4, 6, 8};
  int benchmark_max_attempts = 200;

  PlannerConfig();

  void validate() const;
  /// Per-axis bound for the double-integrator heuristic.
  Vec3 heuristic_u_max() const { return limits.axis_acceleration_bounds(); }

  static PlannerConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

PlannerConfig load_config(const std::filesystem::path& path);

/// Raw grid, inflated collision grid and its distance index, built once and
/// shared read-only by any number of planning queries.
class Environment {
 public:
  Environment(VoxelGrid raw, double inflation_radius);

  static Environment from_source(const GridSource& source, double inflation_radius);

  const VoxelGrid& raw() const { return *raw_; }
  const VoxelGrid& grid() const { return *inflated_; }
  const DistanceIndex& index() const { return *index_; }

 private:
  std::shared_ptr<const VoxelGrid> raw_;
  std::shared_ptr<const VoxelGrid> inflated_;
  std::shared_ptr<const DistanceIndex> index_;
};

struct StageTimes {
  double geometric_s = 0;       ///< grid search + sparsification
  double velocity_graph_s = 0;  ///< sampling, graph build, cost-to-go
  double mp_search_s = 0;       ///< primitive search excluding checks
  double constraint_check_s = 0;
  double collision_check_s = 0;
  double total_s = 0;

  double stage_sum() const {
    return geometric_s + velocity_graph_s + mp_search_s + constraint_check_s + collision_check_s;
  }
  nlohmann::json to_json() const;
};

struct PlanResult {
  WaypointPath waypoints;
  StitchedTrajectory trajectory;
  std::vector<int> node_path;
  MpSearchTelemetry search;
  StageTimes times;
  std::size_t samples_per_waypoint = 0;
  std::size_t graph_nodes = 0;
  std::size_t graph_edges = 0;

  nlohmann::json telemetry_json() const;
};

/// Stage 1 -> 2 -> 3. Errors propagate as StitcherError (kInvalidEndpoint,
/// kNoGeometricPath, kInvalidStart, kGraphDisconnected).
PlanResult plan(const Environment& env, const PlannerConfig& config, bool use_heuristic = true);

/// Stage 3 only, on a prepared graph (used to compare heuristics on one graph).
MpSearchResult search_graph(const Environment& env, const VelocityGraph& graph,
                            const PlannerConfig& config, bool use_heuristic);

/// Builds the velocity graph and its cost-to-go tables for given waypoints.
VelocityGraph build_velocity_graph(const WaypointPath& waypoints, const PlannerConfig& config);

nlohmann::json trajectory_json(const PlanResult& result);
/// Columns t,x,y,z,vx,vy,vz,ax,ay,az,jx,jy,jz,thrust_norm,tilt_deg,omega_norm.
std::string states_csv(const StitchedTrajectory& traj, double dt, double gravity);

}  // namespace stitcher
