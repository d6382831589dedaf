#pragma once

#include <vector>

#include <json.hpp>

#include "stitcher/checks.hpp"
#include "stitcher/primitives.hpp"
#include "stitcher/velocity_graph.hpp"

namespace stitcher {

/// Primitives concatenated in time. Evaluating exactly at a seam returns the
/// state of the segment that starts there.
class StitchedTrajectory {
 public:
  StitchedTrajectory() = default;

  const std::vector<PolynomialTrajectory>& segments() const { return segments_; }
  /// Start time of each segment plus the total duration.
  const std::vector<double>& offsets() const { return offsets_; }
  double total_duration() const { return offsets_.empty() ? 0.0 : offsets_.back(); }
  double total_cost() const { return total_cost_; }
  void set_total_cost(double cost) { total_cost_ = cost; }
  bool empty() const { return segments_.empty(); }

  Vec3 evaluate(double t, int order) const;

  /// Largest jump in position, velocity or acceleration over all seams,
  /// computed from segment coefficients.
  double max_seam_discontinuity() const;

  nlohmann::json to_json() const;

 private:
  friend StitchedTrajectory stitch(const std::vector<PolynomialTrajectory>& segments,
                                   double tolerance);
  std::vector<PolynomialTrajectory> segments_;
  std::vector<double> offsets_;
  double total_cost_ = 0.0;
};

/// Concatenates segments with cumulative time offsets. Consecutive segments
/// must agree in position, velocity and acceleration within `tolerance`.
StitchedTrajectory stitch(const std::vector<PolynomialTrajectory>& segments,
                          double tolerance = 1e-9);

struct MpSearchOptions {
  double rho = 1000.0;
  ConstraintLimits limits;
  double constraint_dt = 0.1;
  double collision_dt_min = 1e-3;
  /// false turns the search into Dijkstra on the same graph.
  bool use_heuristic = true;
};

struct MpSearchTelemetry {
  std::size_t nodes_expanded = 0;
  std::size_t edges_generated = 0;
  std::size_t edges_pruned_collision = 0;
  std::size_t edges_pruned_constraint = 0;
  std::size_t distance_queries = 0;
  std::size_t cache_hits = 0;
  double primitive_time_s = 0.0;
  double constraint_time_s = 0.0;
  double collision_time_s = 0.0;
  double search_time_s = 0.0;  ///< total wall time of the search call

  nlohmann::json to_json() const;
};

struct MpSearchResult {
  StitchedTrajectory trajectory;
  std::vector<int> node_path;  ///< velocity-graph node ids, start to goal
  MpSearchTelemetry telemetry;
};

/// Best-first search over triple-integrator primitives on the velocity graph
/// with h(n) = rho * V*(n).
///
/// A node's acceleration is frozen when it is settled, taken from the terminal
/// acceleration of its best incoming primitive at that moment; cheaper arrivals
/// after settling are ignored, so the search graph has the velocity graph's size.
/// Primitives are pruned on constraint violations first, then collisions.
///
/// Throws kInvalidStart if the start state violates the limits and
/// kGraphDisconnected if the goal cannot be reached.
MpSearchResult astar_mp(const VelocityGraph& graph, const DistanceIndex& index,
                        const MpSearchOptions& options, MpSearchTelemetry* telemetry_out = nullptr);

}  // namespace stitcher
