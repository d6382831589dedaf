#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace stitcher {

using Vec3 = Eigen::Vector3d;
using Index3 = Eigen::Vector3i;

/// Dense 3D occupancy grid. Anything outside the grid bounds is occupied.
class VoxelGrid {
 public:
  VoxelGrid(const Index3& dims, double resolution, const Vec3& origin);

  const Index3& dims() const { return dims_; }
  double resolution() const { return resolution_; }
  const Vec3& origin() const { return origin_; }
  double inflation_radius() const { return inflation_radius_; }
  std::size_t voxel_count() const { return occupancy_.size(); }

  /// floor((p - origin) / resolution), component-wise.
  Index3 index_of(const Vec3& p) const;
  Vec3 center_of(const Index3& idx) const;
  bool in_bounds(const Index3& idx) const;
  bool contains(const Vec3& p) const;

  bool occupied(const Index3& idx) const;
  bool occupied(const Vec3& p) const { return occupied(index_of(p)); }
  void set_occupied(const Index3& idx, bool value);

  std::size_t linear_index(const Index3& idx) const {
    return static_cast<std::size_t>(idx.x()) +
           static_cast<std::size_t>(dims_.x()) *
               (static_cast<std::size_t>(idx.y()) +
                static_cast<std::size_t>(dims_.y()) * static_cast<std::size_t>(idx.z()));
  }
  Index3 from_linear(std::size_t lin) const;

  std::size_t occupied_count() const;
  double occupied_fraction() const;

  /// Lower / upper corners of the mapped volume in world coordinates.
  Vec3 min_corner() const { return origin_; }
  Vec3 max_corner() const { return origin_ + resolution_ * dims_.cast<double>(); }

  /// Raw occupancy, x fastest then y then z.
  const std::vector<std::uint8_t>& cells() const { return occupancy_; }

  /// Returns a copy in which every voxel whose center lies within `radius` of
  /// an occupied voxel center is occupied.
  VoxelGrid inflated(double radius) const;

  friend bool operator==(const VoxelGrid& a, const VoxelGrid& b);

 private:
  Index3 dims_;
  double resolution_;
  Vec3 origin_;
  double inflation_radius_ = 0.0;
  std::vector<std::uint8_t> occupancy_;
};

struct PerlinOptions {
  int octaves = 4;
  double persistence = 0.5;
  /// Wavelength of the lowest octave in meters.
  double feature_size = 8.0;
};

/// Fractal gradient noise in [-1, 1]; voxel is occupied iff noise >= threshold.
VoxelGrid generate_perlin(std::uint64_t seed, const Index3& dims, double resolution,
                          double threshold, const PerlinOptions& options = {},
                          const Vec3& origin = Vec3::Zero());

/// Grid file: `stitchgrid v1 nx ny nz res ox oy oz\n` then packed occupancy bits.
void save_grid(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid load_grid(const std::filesystem::path& path);

/// Nearest-obstacle distance queries over occupied voxel centers.
///
/// Only occupied voxels with a free 6-neighbor are indexed; for query points in
/// free space the nearest occupied center is always one of those. Points that
/// fall inside an occupied voxel (or outside the grid) short-circuit to zero.
class DistanceIndex {
 public:
  explicit DistanceIndex(std::shared_ptr<const VoxelGrid> grid);
  ~DistanceIndex();
  DistanceIndex(DistanceIndex&&) noexcept;
  DistanceIndex& operator=(DistanceIndex&&) noexcept;

  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  /// min ||p - c|| over occupied centers c, minus half the voxel diagonal,
  /// clamped at zero. +infinity when the grid has no obstacles.
  double nearest_obstacle_distance(const Vec3& p) const;

  /// Exact distance from p to the nearest occupied voxel box; zero inside an
  /// occupied voxel or outside the grid, +infinity with no obstacles.
  double box_distance(const Vec3& p) const;

  std::size_t indexed_points() const;
  const VoxelGrid& grid() const { return *grid_; }
  std::shared_ptr<const VoxelGrid> grid_ptr() const { return grid_; }

 private:
  struct Tree;
  std::shared_ptr<const VoxelGrid> grid_;
  std::unique_ptr<Tree> tree_;
};

inline double nearest_obstacle_distance(const DistanceIndex& index, const Vec3& p) {
  return index.nearest_obstacle_distance(p);
}

/// True iff every voxel visited by the 3D DDA traversal from a to b is free.
bool raycast_free(const VoxelGrid& grid, const Vec3& a, const Vec3& b);

}  // namespace stitcher
