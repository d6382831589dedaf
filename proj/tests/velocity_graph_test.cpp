#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "stitcher/errors.hpp"
#include "stitcher/velocity_graph.hpp"

using namespace stitcher;

namespace {

WaypointPath zigzag(int n) {
  WaypointPath p;
  for (int i = 0; i < n; ++i) p.waypoints.emplace_back(2.0 * i, (i % 2) ? 1.5 : 0.0, 0.3 * i);
  return p;
}

BoundaryState rest(const Vec3& p) {
  BoundaryState s;
  s.position = p;
  return s;
}

VelocityGraph make_graph(const WaypointPath& path, const VelocitySampleConfig& cfg) {
  return VelocityGraph(path, sample_velocities(path, cfg), rest(path.waypoints.front()),
                       rest(path.waypoints.back()));
}

// M samples from a fixed velocity list, independent of cone sampling.
std::vector<std::vector<Vec3>> synthetic_samples(int n, int m) {
  std::vector<std::vector<Vec3>> out(static_cast<std::size_t>(n));
  for (int i = 1; i + 1 < n; ++i)
    for (int k = 0; k < m; ++k) out[static_cast<std::size_t>(i)].emplace_back(0.1 * k, 0.05 * k * k, -0.02 * k);
  return out;
}

}  // namespace

TEST(VelocityGraph, CountsMatchLayeredFormula) {
  for (int n = 2; n <= 10; ++n) {
    for (int m = 1; m <= 31; ++m) {
      const WaypointPath path = zigzag(n);
      const VelocityGraph g(path, synthetic_samples(n, m), rest(path.waypoints.front()),
                            rest(path.waypoints.back()));
      const std::size_t nodes = n == 2 ? 2 : static_cast<std::size_t>((n - 2) * m + 2);
      const std::size_t edges = n == 2 ? 1 : static_cast<std::size_t>((n - 3) * m * m + 2 * m);
      EXPECT_EQ(g.node_count(), nodes);
      EXPECT_EQ(g.edge_count(), edges);
      EXPECT_EQ(expected_node_count(n, m), nodes);
      EXPECT_EQ(expected_edge_count(n, m), edges);
      std::size_t succ_total = 0;
      for (std::size_t id = 0; id < g.node_count(); ++id) succ_total += g.successors(static_cast<int>(id)).size();
      EXPECT_EQ(succ_total, edges);
    }
  }
}

TEST(VelocityGraph, TableSizesForThirtyOneSamples) {
  VelocitySampleConfig cfg;
  cfg.magnitudes = VelocitySampleConfig::uniform_magnitudes(7, 10.0);
  cfg.boundary_direction_count = 4;
  const std::size_t expect_edges[] = {1023, 2945, 4867};
  const std::size_t expect_nodes[] = {64, 126, 188};
  int i = 0;
  for (int n : {4, 6, 8}) {
    const auto g = make_graph(zigzag(n), cfg);
    for (std::size_t l = 1; l + 1 < g.layer_count(); ++l) EXPECT_EQ(g.layer(l).size(), 31u);
    EXPECT_EQ(g.edge_count(), expect_edges[i]);
    EXPECT_EQ(g.node_count(), expect_nodes[i]);
    ++i;
  }
}

TEST(Sampling, FiveMagnitudesThreeDirectionsGiveThirteen) {
  VelocitySampleConfig cfg;
  cfg.magnitudes = VelocitySampleConfig::uniform_magnitudes(5, 10.0);
  EXPECT_EQ(cfg.magnitudes, (std::vector<double>{0, 2.5, 5, 7.5, 10}));
  const auto s = sample_velocities(zigzag(5), cfg);
  EXPECT_TRUE(s.front().empty());
  EXPECT_TRUE(s.back().empty());
  for (std::size_t i = 1; i + 1 < s.size(); ++i) EXPECT_EQ(s[i].size(), 13u);
  cfg.magnitudes = {0, 5, 10};
  for (std::size_t i = 1; i + 1 < 4; ++i) EXPECT_EQ(sample_velocities(zigzag(4), cfg)[i].size(), 7u);
}

TEST(Sampling, ConeGeometry) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 200; ++t) {
    Vec3 axis(n(rng), n(rng), n(rng));
    if (t == 0) axis = Vec3::UnitZ();
    for (double half : {0.0, 10.0, 35.0}) {
      const auto dirs = cone_directions(axis, half, 4);
      ASSERT_EQ(dirs.size(), 5u);
      EXPECT_NEAR(dirs[0].dot(axis.normalized()), 1.0, 1e-12);
      for (std::size_t k = 1; k < dirs.size(); ++k) {
        EXPECT_NEAR(dirs[k].norm(), 1.0, 1e-12);
        EXPECT_NEAR(dirs[k].dot(axis.normalized()), std::cos(half * M_PI / 180.0), 1e-12);
      }
      if (half > 0 && std::abs(axis.normalized().z()) < 0.99) {
        // First boundary direction stays in the horizontal plane through the axis.
        const Vec3 off = dirs[1] - dirs[0] * dirs[1].dot(dirs[0]);
        EXPECT_NEAR(off.z(), 0.0, 1e-9);
      }
    }
  }
  EXPECT_THROW(cone_directions(Vec3::Zero(), 10, 2), StitcherError);
  EXPECT_THROW(cone_directions(Vec3::UnitX(), 90, 2), StitcherError);
}

TEST(Sampling, AxisPointsAlongNeighborChord) {
  VelocitySampleConfig cfg;
  cfg.magnitudes = {4.0};
  cfg.boundary_direction_count = 0;
  const auto path = zigzag(4);
  const auto s = sample_velocities(path, cfg);
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    ASSERT_EQ(s[i].size(), 1u);
    const Vec3 chord = (path.waypoints[i + 1] - path.waypoints[i - 1]).normalized();
    EXPECT_LT((s[i][0] - 4.0 * chord).norm(), 1e-12);
  }
}

TEST(CostToGo, MatchesExhaustiveEnumeration) {
  const Vec3 u(16.24, 16.24, 8.96);
  std::mt19937_64 rng(10);
  for (int n : {2, 3, 4, 5}) {
    const int m = 4;
    WaypointPath path = zigzag(n);
    std::vector<std::vector<Vec3>> samples(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> v(-6, 6);
    for (int i = 1; i + 1 < n; ++i)
      for (int k = 0; k < m; ++k) samples[static_cast<std::size_t>(i)].emplace_back(v(rng), v(rng), v(rng));
    VelocityGraph g(path, samples, rest(path.waypoints.front()), rest(path.waypoints.back()));
    g.compute_cost_to_go(u);

    auto st = [&](int id) {
      BoundaryState s;
      s.position = g.node(id).position;
      s.velocity = g.node(id).velocity;
      return s;
    };
    // Enumerate every start-to-goal path.
    std::function<double(int)> best = [&](int id) {
      if (id == g.goal_id()) return 0.0;
      double b = std::numeric_limits<double>::infinity();
      for (int s : g.successors(id)) b = std::min(b, min_time_3d(st(id), st(s), u) + best(s));
      return b;
    };
    for (std::size_t id = 0; id < g.node_count(); ++id) {
      EXPECT_NEAR(g.cost_to_go(static_cast<int>(id)), best(static_cast<int>(id)), 1e-12);
      const auto& ranked = g.ranked_edges(static_cast<int>(id));
      EXPECT_EQ(ranked.size(), g.successors(static_cast<int>(id)).size());
      for (std::size_t k = 1; k < ranked.size(); ++k) EXPECT_LE(ranked[k - 1].cost_to_go, ranked[k].cost_to_go);
      if (!ranked.empty()) EXPECT_EQ(ranked.front().cost_to_go, g.cost_to_go(static_cast<int>(id)));
    }
    EXPECT_EQ(g.cost_to_go(g.goal_id()), 0.0);
  }
}

TEST(VelocityGraph, RejectsMissingSamples) {
  const auto path = zigzag(4);
  EXPECT_THROW(VelocityGraph(path, synthetic_samples(3, 2), rest(path.waypoints.front()),
                             rest(path.waypoints.back())),
               StitcherError);
  EXPECT_THROW(VelocityGraph(path, synthetic_samples(4, 0), rest(path.waypoints.front()),
                             rest(path.waypoints.back())),
               StitcherError);
}
