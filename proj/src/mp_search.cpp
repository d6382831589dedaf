#include "stitcher/mp_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "stitcher/errors.hpp"

namespace stitcher {

// ---------------------------------------------------------------------------
// StitchedTrajectory

StitchedTrajectory stitch(const std::vector<PolynomialTrajectory>& segments, double tolerance) {
  StitchedTrajectory out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (seg.empty()) {
      throw StitcherError(ErrorCode::kStitch, "cannot stitch an empty segment");
    }
    if (i > 0) {
      const auto& prev = segments[i - 1];
      const double Tp = prev.duration();
      for (int order = 0; order <= 2; ++order) {
        const double jump = (prev.evaluate(Tp, order) - seg.evaluate(0.0, order)).cwiseAbs().maxCoeff();
        if (!(jump <= tolerance)) {
          throw StitcherError(ErrorCode::kStitch,
                              "segment boundary mismatch at seam " + std::to_string(i) +
                                  " (derivative order " + std::to_string(order) + ")");
        }
      }
    }
    if (out.offsets_.empty()) out.offsets_.push_back(0.0);
    out.segments_.push_back(seg);
    out.offsets_.push_back(out.offsets_.back() + seg.duration());
  }
  return out;
}

Vec3 StitchedTrajectory::evaluate(double t, int order) const {
  if (segments_.empty() || !(t >= 0.0) || t > total_duration()) {
    throw StitcherError(ErrorCode::kDomain, "evaluation time outside [0, T]");
  }
  // Last segment whose start time is <= t: seams dispatch to the right segment.
  auto it = std::upper_bound(offsets_.begin(), offsets_.end() - 1, t);
  auto k = static_cast<std::size_t>(std::distance(offsets_.begin(), it)) - 1;
  k = std::min(k, segments_.size() - 1);
  const double local = std::min(t - offsets_[k], segments_[k].duration());
  return segments_[k].evaluate(local, order);
}

double StitchedTrajectory::max_seam_discontinuity() const {
  double worst = 0.0;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    const auto& prev = segments_[i - 1];
    const auto& next = segments_[i];
    for (int order = 0; order <= 2; ++order) {
      // Left side: the previous segment's last piece at its end; right side:
      // the constant, linear and quadratic coefficients of the next segment.
      const std::size_t last = prev.piece_count() - 1;
      const double len = prev.breakpoints()[last + 1] - prev.breakpoints()[last];
      for (int axis = 0; axis < 3; ++axis) {
        const auto d = differentiate_row(prev.piece(last).row(axis), order);
        double left = 0.0;
        for (int c = PolynomialTrajectory::kCoeffs - 1; c >= 0; --c) left = left * len + d[c];
        const double right = differentiate_row(next.piece(0).row(axis), order)[0];
        worst = std::max(worst, std::abs(left - right));
      }
    }
  }
  return worst;
}

nlohmann::json StitchedTrajectory::to_json() const {
  using nlohmann::json;
  json segs = json::array();
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& seg = segments_[i];
    json pieces = json::array();
    for (std::size_t k = 0; k < seg.piece_count(); ++k) {
      json axes = json::array();
      for (int axis = 0; axis < 3; ++axis) {
        json row = json::array();
        for (int c = 0; c < PolynomialTrajectory::kCoeffs; ++c) row.push_back(seg.piece(k)(axis, c));
        axes.push_back(std::move(row));
      }
      pieces.push_back({{"start_time", seg.breakpoints()[k]},
                        {"duration", seg.breakpoints()[k + 1] - seg.breakpoints()[k]},
                        {"coefficients", std::move(axes)}});
    }
    segs.push_back({{"start_time", offsets_[i]}, {"duration", seg.duration()},
                    {"pieces", std::move(pieces)}});
  }
  return json{{"total_duration", total_duration()}, {"total_cost", total_cost_},
              {"segment_count", segments_.size()}, {"segments", std::move(segs)}};
}

nlohmann::json MpSearchTelemetry::to_json() const {
  return {{"nodes_expanded", nodes_expanded},
          {"edges_generated", edges_generated},
          {"edges_pruned_collision", edges_pruned_collision},
          {"edges_pruned_constraint", edges_pruned_constraint},
          {"distance_queries", distance_queries},
          {"cache_hits", cache_hits},
          {"primitive_time_s", primitive_time_s},
          {"constraint_time_s", constraint_time_s},
          {"collision_time_s", collision_time_s},
          {"search_time_s", search_time_s}};
}

// ---------------------------------------------------------------------------
// Search

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct MpNode {
  double g = std::numeric_limits<double>::infinity();
  int parent = -1;
  bool settled = false;
  Vec3 arrival_acceleration = Vec3::Zero();
  PolynomialTrajectory incoming;
};

struct OpenEntry {
  double f;
  double h;
  double g;
  int id;
};

// Min f, then smaller h, then lower node id.
struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.h != b.h) return a.h > b.h;
    return a.id > b.id;
  }
};

}  // namespace

MpSearchResult astar_mp(const VelocityGraph& graph, const DistanceIndex& index,
                        const MpSearchOptions& options, MpSearchTelemetry* telemetry_out) {
  const auto t_begin = Clock::now();
  if (!graph.has_cost_to_go()) {
    throw StitcherError(ErrorCode::kParameter, "velocity graph has no cost-to-go tables");
  }
  options.limits.validate();
  if (!(options.rho > 1.0)) throw StitcherError(ErrorCode::kParameter, "rho must be > 1");

  MpSearchResult result;
  MpSearchTelemetry& tel = result.telemetry;

  const BoundaryState& start = graph.start_state();
  const Vec3 start_acc = start.acceleration.value_or(Vec3::Zero());
  if (auto v = check_state(start.velocity, start_acc, Vec3::Zero(), options.limits)) {
    throw StitcherError(ErrorCode::kInvalidStart,
                        std::string("start state violates the ") + to_string(v->kind) + " limit");
  }

  std::vector<MpNode> nodes(graph.node_count());
  auto heuristic = [&](int id) {
    return options.use_heuristic ? options.rho * graph.cost_to_go(id) : 0.0;
  };

  SafeSphereCache cache;
  CollisionStats collision_stats;
  const CollisionCheckOptions collision_options{options.limits.v_max, options.collision_dt_min};

  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
  nodes[0].g = 0.0;
  nodes[0].arrival_acceleration = start_acc;
  open.push({heuristic(0), heuristic(0), 0.0, 0});

  const int goal = graph.goal_id();
  bool reached = false;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    MpNode& node = nodes[static_cast<std::size_t>(top.id)];
    if (node.settled || top.g != node.g) continue;
    node.settled = true;
    if (top.id != 0 && !node.incoming.empty()) {
      node.arrival_acceleration = node.incoming.evaluate(node.incoming.duration(), 2);
    }
    if (top.id == goal) {
      reached = true;
      break;
    }
    ++tel.nodes_expanded;

    const VelocityNode& vn = graph.node(top.id);
    BoundaryState from;
    from.position = vn.position;
    from.velocity = vn.velocity;
    from.acceleration = node.arrival_acceleration;

    for (int succ : graph.successors(top.id)) {
      MpNode& next = nodes[static_cast<std::size_t>(succ)];
      if (next.settled) continue;
      const VelocityNode& vs = graph.node(succ);
      BoundaryState to;
      to.position = vs.position;
      to.velocity = vs.velocity;

      auto t0 = Clock::now();
      ++tel.edges_generated;
      LqmtSolution prim;
      try {
        prim = lqmt_optimal(from, to, options.rho);
      } catch (const StitcherError&) {
        tel.primitive_time_s += seconds_since(t0);
        ++tel.edges_pruned_constraint;
        continue;
      }
      tel.primitive_time_s += seconds_since(t0);

      if (!prim.trajectory.empty()) {
        t0 = Clock::now();
        const bool feasible =
            !check_constraints(prim.trajectory, options.limits, options.constraint_dt);
        tel.constraint_time_s += seconds_since(t0);
        if (!feasible) {
          ++tel.edges_pruned_constraint;
          continue;
        }
        t0 = Clock::now();
        const auto key = SafeSphereCache::pair_key(vn.layer, vs.layer);
        const bool free = !check_collision(prim.trajectory, index, cache, key, collision_options,
                                           &collision_stats);
        tel.collision_time_s += seconds_since(t0);
        if (!free) {
          ++tel.edges_pruned_collision;
          continue;
        }
      }

      const double g = top.g + prim.cost;
      if (g < next.g) {
        next.g = g;
        next.parent = top.id;
        next.incoming = std::move(prim.trajectory);
        const double h = heuristic(succ);
        open.push({g + h, h, g, succ});
      }
    }
  }
  tel.distance_queries = collision_stats.distance_queries;
  tel.cache_hits = collision_stats.cache_hits;
  tel.search_time_s = seconds_since(t_begin);
  if (telemetry_out) *telemetry_out = tel;
  if (!reached) {
    throw StitcherError(ErrorCode::kGraphDisconnected,
                        "motion primitive graph has no feasible path to the goal");
  }

  for (int id = goal; id >= 0; id = nodes[static_cast<std::size_t>(id)].parent) {
    result.node_path.push_back(id);
  }
  std::reverse(result.node_path.begin(), result.node_path.end());
  std::vector<PolynomialTrajectory> segments;
  for (std::size_t i = 1; i < result.node_path.size(); ++i) {
    const auto& seg = nodes[static_cast<std::size_t>(result.node_path[i])].incoming;
    if (!seg.empty()) segments.push_back(seg);
  }
  result.trajectory = stitch(segments);
  result.trajectory.set_total_cost(nodes[static_cast<std::size_t>(goal)].g);
  return result;
}

}  // namespace stitcher
