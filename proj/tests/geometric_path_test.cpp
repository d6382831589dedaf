#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <queue>
#include <random>
#include <set>

#include "stitcher/errors.hpp"
#include "stitcher/geometric_path.hpp"

using namespace stitcher;

namespace {

VoxelGrid random_grid(std::uint64_t seed, const Index3& dims, double fill) {
  VoxelGrid g(dims, 0.1, Vec3::Zero());
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution occ(fill);
  for (std::size_t lin = 0; lin < g.voxel_count(); ++lin) g.set_occupied(g.from_linear(lin), occ(rng));
  return g;
}

bool box_free(const VoxelGrid& g, const Index3& a, const Index3& b) {
  for (int z = std::min(a.z(), b.z()); z <= std::max(a.z(), b.z()); ++z)
    for (int y = std::min(a.y(), b.y()); y <= std::max(a.y(), b.y()); ++y)
      for (int x = std::min(a.x(), b.x()); x <= std::max(a.x(), b.x()); ++x)
        if (g.occupied(Index3(x, y, z))) return false;
  return true;
}

// Plain Dijkstra with the same move set: 26 neighbors, Euclidean step length,
// diagonal only through a free bounding box.
double dijkstra_cost(const VoxelGrid& g, const Index3& s, const Index3& t) {
  std::vector<double> dist(g.voxel_count(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[g.linear_index(s)] = 0;
  open.push({0, g.linear_index(s)});
  while (!open.empty()) {
    const auto [d, lin] = open.top();
    open.pop();
    if (d > dist[lin]) continue;
    const Index3 c = g.from_linear(lin);
    if (c == t) return d;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          const Index3 n = c + Index3(dx, dy, dz);
          if (!g.in_bounds(n) || !box_free(g, c, n)) continue;
          const double nd = d + g.resolution() * std::sqrt(double(dx * dx + dy * dy + dz * dz));
          if (nd < dist[g.linear_index(n)]) {
            dist[g.linear_index(n)] = nd;
            open.push({nd, g.linear_index(n)});
          }
        }
  }
  return std::numeric_limits<double>::infinity();
}

Index3 random_free(const VoxelGrid& g, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> u(0, g.voxel_count() - 1);
  for (;;) {
    const auto lin = u(rng);
    if (!g.cells()[lin]) return g.from_linear(lin);
  }
}

}  // namespace

TEST(GridAstar, MatchesDijkstraCost) {
  std::mt19937_64 rng(9);
  int reached = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const VoxelGrid g = random_grid(trial, Index3(18, 14, 6), 0.25);
    const Index3 s = random_free(g, rng), t = random_free(g, rng);
    const double ref = dijkstra_cost(g, s, t);
    if (!std::isfinite(ref)) {
      try {
        astar_grid(g, g.center_of(s), g.center_of(t));
        ADD_FAILURE() << "expected no path";
      } catch (const StitcherError& e) {
        EXPECT_EQ(e.code(), ErrorCode::kNoGeometricPath);
      }
      continue;
    }
    ++reached;
    const auto path = astar_grid(g, g.center_of(s), g.center_of(t));
    EXPECT_NEAR(path.cost, ref, 1e-9);
    ASSERT_GE(path.points.size(), 1u);
    EXPECT_LT((path.points.front() - g.center_of(s)).norm(), 1e-12);
    EXPECT_LT((path.points.back() - g.center_of(t)).norm(), 1e-12);
    double len = 0;
    for (std::size_t i = 1; i < path.points.size(); ++i) {
      const Index3 a = g.index_of(path.points[i - 1]), b = g.index_of(path.points[i]);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1);
      EXPECT_TRUE(raycast_free(g, path.points[i - 1], path.points[i]));
      len += (path.points[i] - path.points[i - 1]).norm();
    }
    EXPECT_NEAR(len, path.cost, 1e-9);
  }
  EXPECT_GT(reached, 20);
}

TEST(GridAstar, OccupiedEndpointsAreRejected) {
  VoxelGrid g(Index3(5, 5, 5), 0.1, Vec3::Zero());
  g.set_occupied(Index3(0, 0, 0), true);
  auto code_of = [&](const Vec3& a, const Vec3& b) {
    try {
      astar_grid(g, a, b);
    } catch (const StitcherError& e) {
      return e.code();
    }
    return ErrorCode::kStitch;
  };
  EXPECT_EQ(code_of(Vec3(0.05, 0.05, 0.05), Vec3(0.45, 0.45, 0.45)), ErrorCode::kInvalidEndpoint);
  EXPECT_EQ(code_of(Vec3(0.45, 0.45, 0.45), Vec3(0.05, 0.05, 0.05)), ErrorCode::kInvalidEndpoint);
  EXPECT_EQ(code_of(Vec3(0.45, 0.45, 0.45), Vec3(1.0, 0.05, 0.05)), ErrorCode::kInvalidEndpoint);
}

TEST(GridAstar, WalledOffGoal) {
  VoxelGrid g(Index3(20, 10, 5), 0.1, Vec3::Zero());
  for (int z = 0; z < 5; ++z)
    for (int y = 0; y < 10; ++y) g.set_occupied(Index3(10, y, z), true);
  try {
    plan_waypoints(g, Vec3(0.15, 0.5, 0.25), Vec3(1.85, 0.5, 0.25));
    FAIL();
  } catch (const StitcherError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoGeometricPath);
  }
}

TEST(Sparsify, EmptyMapKeepsOnlyEndpoints) {
  VoxelGrid g(Index3(40, 30, 10), 0.1, Vec3::Zero());
  const Vec3 s(0.23, 0.31, 0.17), t(3.71, 2.52, 0.88);
  const auto wp = plan_waypoints(g, s, t);
  ASSERT_EQ(wp.size(), 2u);
  EXPECT_EQ(wp.waypoints.front(), s);
  EXPECT_EQ(wp.waypoints.back(), t);
}

TEST(Sparsify, SegmentsAreVisibleAndGreedy) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const VoxelGrid g = random_grid(500 + trial, Index3(20, 20, 5), 0.2);
    const Index3 s = random_free(g, rng), t = random_free(g, rng);
    GeometricPath path;
    try {
      path = astar_grid(g, g.center_of(s), g.center_of(t));
    } catch (const StitcherError&) {
      continue;
    }
    const auto wp = sparsify(g, path);
    ASSERT_GE(wp.size(), path.points.size() > 1 ? 2u : 1u);
    EXPECT_EQ(wp.waypoints.front(), path.points.front());
    EXPECT_EQ(wp.waypoints.back(), path.points.back());
    // Waypoints are a subsequence of the path, each hop is visible, and the
    // next path point after each kept waypoint's successor is not.
    std::size_t cursor = 0;
    for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
      EXPECT_TRUE(raycast_free(g, wp.waypoints[i], wp.waypoints[i + 1]));
      while (cursor < path.points.size() && path.points[cursor] != wp.waypoints[i + 1]) ++cursor;
      ASSERT_LT(cursor, path.points.size());
      if (cursor + 1 < path.points.size()) {
        EXPECT_FALSE(raycast_free(g, wp.waypoints[i], path.points[cursor + 1]));
      }
    }
    EXPECT_LE(wp.size(), path.points.size());
  }
}

TEST(Components, SixConnectedLabelsMatchReachability) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const VoxelGrid g = random_grid(900 + trial, Index3(12, 12, 4), 0.35);
    const auto labels = label_free_components(g);
    ASSERT_EQ(labels.size(), g.voxel_count());
    for (std::size_t lin = 0; lin < g.voxel_count(); ++lin) EXPECT_EQ(labels[lin] < 0, g.cells()[lin] != 0);
    for (int k = 0; k < 10; ++k) {
      const Index3 s = random_free(g, rng), t = random_free(g, rng);
      const bool same = labels[g.linear_index(s)] == labels[g.linear_index(t)];
      EXPECT_EQ(same, std::isfinite(dijkstra_cost(g, s, t)));
    }
  }
}
