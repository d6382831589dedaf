#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "stitcher/geometric_path.hpp"
#include "stitcher/primitives.hpp"

namespace stitcher {

struct VelocitySampleConfig {
  /// Candidate speeds in m/s; each must lie in [0, v_max].
  std::vector<double> magnitudes;
  double cone_half_angle_deg = 10.0;
  int boundary_direction_count = 2;

  /// {0, v_max/(count-1), ..., v_max}.
  static std::vector<double> uniform_magnitudes(int count, double v_max);
};

/// Unit directions sampled at an interior waypoint: the cone axis first, then
/// `boundary_direction_count` directions evenly spaced in azimuth on the cone.
/// The first boundary direction lies in the horizontal plane through the axis
/// unless the axis is (near) vertical.
std::vector<Vec3> cone_directions(const Vec3& axis, double half_angle_deg, int boundary_count);

/// Velocity set per waypoint. Interior waypoints get magnitude x direction
/// products with zero speed collapsed to one sample and duplicates removed; the
/// first and last entries are left empty (their velocity is the boundary state).
std::vector<std::vector<Vec3>> sample_velocities(const WaypointPath& path,
                                                 const VelocitySampleConfig& cfg);

struct VelocityNode {
  int id = 0;
  int layer = 0;  ///< waypoint index
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
};

/// One outgoing edge in the ranked cost-to-go list of a node.
struct RankedEdge {
  int target = 0;
  double edge_time = 0;  ///< minimum double-integrator time
  double cost_to_go = 0;  ///< edge_time + V*(target)
};

/// Layered graph over (waypoint, velocity) nodes; consecutive layers are fully
/// connected. Node ids are assigned layer by layer starting at the start node.
class VelocityGraph {
 public:
  VelocityGraph(const WaypointPath& path, const std::vector<std::vector<Vec3>>& samples,
                const BoundaryState& start, const BoundaryState& goal);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const;
  std::size_t layer_count() const { return layers_.size(); }

  const VelocityNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<int>& layer(std::size_t i) const { return layers_[i]; }
  /// Ids of the nodes in the next layer.
  const std::vector<int>& successors(int id) const;

  int start_id() const { return 0; }
  int goal_id() const { return static_cast<int>(nodes_.size()) - 1; }
  const BoundaryState& start_state() const { return start_; }
  const BoundaryState& goal_state() const { return goal_; }
  const WaypointPath& waypoints() const { return path_; }

  /// Backward Bellman recursion with minimum-time edge costs.
  void compute_cost_to_go(const Vec3& u_max);
  bool has_cost_to_go() const { return !cost_to_go_.empty(); }

  /// V*(n) in seconds.
  double cost_to_go(int id) const { return cost_to_go_[static_cast<std::size_t>(id)]; }
  /// Outgoing edges sorted by ascending cost-to-go (ties by target id).
  const std::vector<RankedEdge>& ranked_edges(int id) const {
    return ranked_[static_cast<std::size_t>(id)];
  }

  nlohmann::json to_json() const;

 private:
  WaypointPath path_;
  BoundaryState start_, goal_;
  std::vector<VelocityNode> nodes_;
  std::vector<std::vector<int>> layers_;
  std::vector<double> cost_to_go_;
  std::vector<std::vector<RankedEdge>> ranked_;
};

/// Closed forms: (N-2)M + 2 nodes; (N-3)M^2 + 2M edges for
/// N > 2, one edge for N = 2.
std::size_t expected_node_count(std::size_t waypoints, std::size_t samples);
std::size_t expected_edge_count(std::size_t waypoints, std::size_t samples);

}  // namespace stitcher
