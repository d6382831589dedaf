#pragma once

#include <cstdint>
#include <vector>

#include "stitcher/environment.hpp"

namespace stitcher {

/// Voxel-center path from the grid search; consecutive points are 26-neighbors.
struct GeometricPath {
  std::vector<Vec3> points;
  double cost = 0.0;
};

/// Sparse waypoints joined by free straight segments.
struct WaypointPath {
  std::vector<Vec3> waypoints;

  std::size_t size() const { return waypoints.size(); }
};

/// Shortest 26-connected voxel path (Euclidean edge costs, exact free-space
/// 26-connected distance as heuristic).
///
/// Diagonal moves are only taken when every voxel in the move's bounding box is
/// free, so consecutive points always pass raycast_free.
/// Throws kInvalidEndpoint for occupied endpoints and kNoGeometricPath when the
/// goal voxel is unreachable.
GeometricPath astar_grid(const VoxelGrid& grid, const Vec3& start, const Vec3& goal);

/// Greedy farthest-visible pruning; endpoints are always kept.
WaypointPath sparsify(const VoxelGrid& grid, const GeometricPath& path);

/// Stage 1 end to end: grid search, sparsification, then the exact start and
/// goal positions replace the first and last voxel centers.
WaypointPath plan_waypoints(const VoxelGrid& grid, const Vec3& start, const Vec3& goal);

/// Component label per voxel (linear index order), -1 for occupied voxels.
/// Uses 6-connectivity, which joins exactly the voxels that astar_grid can
/// connect since its diagonal moves need a free bounding box.
std::vector<std::int32_t> label_free_components(const VoxelGrid& grid);

}  // namespace stitcher
