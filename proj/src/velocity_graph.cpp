#include "stitcher/velocity_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "stitcher/errors.hpp"

namespace stitcher {

std::vector<double> VelocitySampleConfig::uniform_magnitudes(int count, double v_max) {
  if (count < 1) throw StitcherError(ErrorCode::kParameter, "magnitude count must be >= 1");
  if (count == 1) return {v_max};
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = v_max * i / (count - 1);
  return out;
}

std::vector<Vec3> cone_directions(const Vec3& axis, double half_angle_deg, int boundary_count) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw StitcherError(ErrorCode::kParameter, "cone axis must be non-zero");
  if (half_angle_deg < 0.0 || half_angle_deg >= 90.0) {
    throw StitcherError(ErrorCode::kParameter, "cone half angle must be in [0, 90)");
  }
  if (boundary_count < 0) {
    throw StitcherError(ErrorCode::kParameter, "boundary direction count must be >= 0");
  }
  const Vec3 c = axis / n;
  std::vector<Vec3> dirs{c};
  if (boundary_count == 0) return dirs;

  Vec3 u1 = Vec3::UnitZ().cross(c);
  if (u1.norm() < 1e-6) {
    // Near-vertical axis: project the coordinate axis with the smallest
    // component of c.
    Eigen::Index k = 0;
    c.cwiseAbs().minCoeff(&k);
    const Vec3 e = Vec3::Unit(k);
    u1 = e - e.dot(c) * c;
  }
  u1.normalize();
  const Vec3 u2 = c.cross(u1);

  const double alpha = half_angle_deg * std::numbers::pi / 180.0;
  for (int k = 0; k < boundary_count; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / boundary_count;
    dirs.push_back((std::cos(alpha) * c +
                    std::sin(alpha) * (std::cos(phi) * u1 + std::sin(phi) * u2))
                       .normalized());
  }
  return dirs;
}

std::vector<std::vector<Vec3>> sample_velocities(const WaypointPath& path,
                                                 const VelocitySampleConfig& cfg) {
  const auto& w = path.waypoints;
  if (w.size() < 2) throw StitcherError(ErrorCode::kParameter, "need at least two waypoints");
  for (double m : cfg.magnitudes) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw StitcherError(ErrorCode::kParameter, "velocity magnitudes must be finite and >= 0");
    }
  }
  if (cfg.magnitudes.empty()) {
    throw StitcherError(ErrorCode::kParameter, "at least one velocity magnitude is required");
  }

  std::vector<std::vector<Vec3>> out(w.size());
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    Vec3 axis = w[i + 1] - w[i - 1];
    if (axis.norm() < 1e-12) axis = w[i + 1] - w[i];
    if (axis.norm() < 1e-12) axis = Vec3::UnitX();
    const auto dirs = cone_directions(axis, cfg.cone_half_angle_deg, cfg.boundary_direction_count);

    auto& set = out[i];
    auto push_unique = [&set](const Vec3& v) {
      for (const Vec3& u : set) {
        if ((u - v).norm() <= 1e-9) return;
      }
      set.push_back(v);
    };
    if (std::any_of(cfg.magnitudes.begin(), cfg.magnitudes.end(),
                    [](double m) { return m == 0.0; })) {
      push_unique(Vec3::Zero());
    }
    for (double m : cfg.magnitudes) {
      if (m == 0.0) continue;
      for (const Vec3& d : dirs) push_unique(m * d);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

VelocityGraph::VelocityGraph(const WaypointPath& path,
                             const std::vector<std::vector<Vec3>>& samples,
                             const BoundaryState& start, const BoundaryState& goal)
    : path_(path), start_(start), goal_(goal) {
  const std::size_t N = path.size();
  if (N < 2) throw StitcherError(ErrorCode::kParameter, "need at least two waypoints");
  if (samples.size() != N) {
    throw StitcherError(ErrorCode::kParameter, "one velocity set per waypoint is required");
  }
  layers_.resize(N);
  auto add_node = [&](std::size_t layer, const Vec3& velocity) {
    VelocityNode n;
    n.id = static_cast<int>(nodes_.size());
    n.layer = static_cast<int>(layer);
    n.position = path.waypoints[layer];
    n.velocity = velocity;
    nodes_.push_back(n);
    layers_[layer].push_back(n.id);
  };
  add_node(0, start.velocity);
  for (std::size_t i = 1; i + 1 < N; ++i) {
    if (samples[i].empty()) {
      throw StitcherError(ErrorCode::kParameter, "interior waypoint has no velocity samples");
    }
    for (const Vec3& v : samples[i]) add_node(i, v);
  }
  add_node(N - 1, goal.velocity);
}

std::size_t VelocityGraph::edge_count() const {
  std::size_t edges = 0;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) edges += layers_[i].size() * layers_[i + 1].size();
  return edges;
}

const std::vector<int>& VelocityGraph::successors(int id) const {
  static const std::vector<int> kNone;
  const auto layer = static_cast<std::size_t>(node(id).layer);
  return layer + 1 < layers_.size() ? layers_[layer + 1] : kNone;
}

void VelocityGraph::compute_cost_to_go(const Vec3& u_max) {
  cost_to_go_.assign(nodes_.size(), 0.0);
  ranked_.assign(nodes_.size(), {});
  auto state_of = [this](int id) {
    BoundaryState s;
    s.position = node(id).position;
    s.velocity = node(id).velocity;
    return s;
  };
  for (std::size_t layer = layers_.size() - 1; layer-- > 0;) {
    for (int id : layers_[layer]) {
      const BoundaryState from = state_of(id);
      auto& ranked = ranked_[static_cast<std::size_t>(id)];
      ranked.reserve(layers_[layer + 1].size());
      for (int succ : layers_[layer + 1]) {
        const double t = min_time_3d(from, state_of(succ), u_max);
        ranked.push_back({succ, t, t + cost_to_go_[static_cast<std::size_t>(succ)]});
      }
      std::sort(ranked.begin(), ranked.end(), [](const RankedEdge& a, const RankedEdge& b) {
        if (a.cost_to_go != b.cost_to_go) return a.cost_to_go < b.cost_to_go;
        return a.target < b.target;
      });
      cost_to_go_[static_cast<std::size_t>(id)] = ranked.front().cost_to_go;
    }
  }
}

nlohmann::json VelocityGraph::to_json() const {
  using nlohmann::json;
  auto vec = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
  json nodes = json::array();
  json edges = json::array();
  for (const auto& n : nodes_) {
    json jn{{"id", n.id}, {"layer", n.layer}, {"position", vec(n.position)},
            {"velocity", vec(n.velocity)}};
    if (has_cost_to_go()) {
      jn["cost_to_go"] = cost_to_go(n.id);
      for (const auto& e : ranked_edges(n.id)) {
        edges.push_back({{"from", n.id}, {"to", e.target}, {"time", e.edge_time},
                         {"cost_to_go", e.cost_to_go}});
      }
    }
    nodes.push_back(std::move(jn));
  }
  return json{{"node_count", node_count()}, {"edge_count", edge_count()}, {"nodes", nodes},
              {"edges", edges}};
}

std::size_t expected_node_count(std::size_t waypoints, std::size_t samples) {
  if (waypoints < 2) return waypoints;
  return (waypoints - 2) * samples + 2;
}

std::size_t expected_edge_count(std::size_t waypoints, std::size_t samples) {
  if (waypoints < 2) return 0;
  if (waypoints == 2) return 1;
  return (waypoints - 3) * samples * samples + 2 * samples;
}

}  // namespace stitcher
