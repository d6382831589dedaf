#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stitcher/planner.hpp"

namespace stitcher {

/// A start/goal pair whose sparsified path has the requested waypoint count.
struct BenchmarkInstance {
  std::uint64_t seed = 0;
  int target_waypoints = 0;
  BoundaryState start;
  BoundaryState goal;
  WaypointPath waypoints;
  int attempts = 0;
};

/// Draws free start/goal pairs from `seed` until Stage 1 yields exactly
/// `target_waypoints` waypoints. The straight-line distance between the pair
/// grows or shrinks depending on whether the last attempt had too few or too
/// many waypoints. Returns nullopt after `max_attempts` draws. With
/// `components` (from label_free_components on env.grid()) pairs in different
/// free-space components are redrawn without running the grid search.
std::optional<BenchmarkInstance> make_instance(const Environment& env, std::uint64_t seed,
                                               int target_waypoints, int max_attempts,
                                               const std::vector<std::int32_t>* components = nullptr);

/// Independent re-checks of a returned trajectory.
struct TrajectoryVerification {
  std::size_t constraint_violations = 0;  ///< per segment on the constraint_dt grid
  std::size_t dense_constraint_violations = 0;  ///< 1 ms samples, informational
  std::size_t collisions = 0;  ///< segments with an occupied 1 ms sample
  double max_waypoint_error = 0.0;
  double max_seam_discontinuity = 0.0;

  nlohmann::json to_json() const;
};

TrajectoryVerification verify_trajectory(const StitchedTrajectory& traj, const WaypointPath& waypoints,
                                         const VoxelGrid& grid, const ConstraintLimits& limits,
                                         double constraint_dt, double dense_dt = 1e-3);

enum class TrialStatus { kOk, kNoInstance, kNoGeometricPath, kDisconnected, kError };
const char* to_string(TrialStatus status);

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  int target_waypoints = 0;
  int instance_attempts = 0;
  TrialStatus status = TrialStatus::kOk;
  std::string message;

  std::size_t waypoints = 0;
  std::size_t samples_per_waypoint = 0;
  std::size_t graph_nodes = 0;
  std::size_t graph_edges = 0;

  bool astar_ok = false;
  bool dijkstra_ok = false;
  std::size_t astar_edges = 0;
  std::size_t dijkstra_edges = 0;
  std::size_t astar_expanded = 0;
  std::size_t dijkstra_expanded = 0;
  double astar_cost = 0.0;
  double dijkstra_cost = 0.0;
  double astar_time_s = 0.0;
  double dijkstra_time_s = 0.0;

  TrajectoryVerification verification;
  StageTimes times;  ///< stage breakdown of the A* run

  /// 100 * (dijkstra - astar) / dijkstra edges generated.
  double edge_reduction_pct() const;
  double cost_relative_difference() const;
  bool both_succeeded() const { return astar_ok && dijkstra_ok; }

  nlohmann::json to_json() const;
};

struct BenchmarkReport {
  std::vector<TrialRecord> trials;
  nlohmann::json environment;  ///< grid parameters and occupancy

  nlohmann::json summary() const;
  std::string csv() const;
};

/// Runs `trials` seeded trials in parallel. Trial i uses seed config.seed + i
/// and targets config.benchmark_waypoint_counts[i % size] waypoints. Each trial
/// runs Stage 3 with A* and with Dijkstra on the same velocity graph.
/// `threads` <= 0 uses the hardware concurrency.
BenchmarkReport run_benchmark(const Environment& env, const PlannerConfig& config, int trials,
                              int threads = 0);

}  // namespace stitcher
