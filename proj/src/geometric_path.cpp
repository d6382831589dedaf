#include "stitcher/geometric_path.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <cmath>
#include <queue>

#include "stitcher/errors.hpp"

namespace stitcher {

namespace {

struct Move {
  Index3 delta;
  double length;  // in voxels
};

std::vector<Move> make_moves() {
  std::vector<Move> moves;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        moves.push_back({Index3(dx, dy, dz), std::sqrt(double(dx * dx + dy * dy + dz * dz))});
      }
    }
  }
  return moves;
}

// A diagonal move is legal when all voxels spanned by its bounding box are free.
bool move_clear(const VoxelGrid& grid, const Index3& from, const Index3& delta) {
  for (int mz = 0; mz <= std::abs(delta.z()); ++mz) {
    for (int my = 0; my <= std::abs(delta.y()); ++my) {
      for (int mx = 0; mx <= std::abs(delta.x()); ++mx) {
        const Index3 n = from + Index3(mx * delta.x(), my * delta.y(), mz * delta.z());
        if (grid.occupied(n)) return false;
      }
    }
  }
  return true;
}

struct OpenEntry {
  double f;
  double g;
  std::int64_t id;
};

// Min-f; on equal f prefer the larger g, then the smaller id.
struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return a.id > b.id;
  }
};

// Shortest 26-connected distance in free space, in voxels.
double octile_distance(const Index3& a, const Index3& b) {
  std::array<int, 3> d{std::abs(a.x() - b.x()), std::abs(a.y() - b.y()), std::abs(a.z() - b.z())};
  std::sort(d.begin(), d.end());
  return (std::sqrt(3.0) - std::sqrt(2.0)) * d[0] + (std::sqrt(2.0) - 1.0) * d[1] + d[2];
}

constexpr std::uint8_t kNoParent = 0xff;
constexpr std::uint8_t kClosedBit = 0x80;

}  // namespace

GeometricPath astar_grid(const VoxelGrid& grid, const Vec3& start, const Vec3& goal) {
  const Index3 s = grid.index_of(start);
  const Index3 t = grid.index_of(goal);
  if (grid.occupied(s)) {
    throw StitcherError(ErrorCode::kInvalidEndpoint, "start position is occupied or out of bounds");
  }
  if (grid.occupied(t)) {
    throw StitcherError(ErrorCode::kInvalidEndpoint, "goal position is occupied or out of bounds");
  }

  static const std::vector<Move> kMoves = make_moves();
  const double res = grid.resolution();
  auto heuristic = [&](const Index3& idx) { return res * octile_distance(idx, t); };

  const auto sid = static_cast<std::int64_t>(grid.linear_index(s));
  const auto tid = static_cast<std::int64_t>(grid.linear_index(t));

  // Flat per-voxel state: best g and the move that reached the voxel (low 7
  // bits) plus a closed flag.
  const std::size_t cells = grid.cells().size();
  std::vector<double> g_cost(cells, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> state(cells, kNoParent & ~kClosedBit);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
  g_cost[static_cast<std::size_t>(sid)] = 0.0;
  open.push({heuristic(s), 0.0, sid});

  bool found = false;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    const auto cur_lin = static_cast<std::size_t>(top.id);
    if ((state[cur_lin] & kClosedBit) || top.g > g_cost[cur_lin]) continue;
    state[cur_lin] |= kClosedBit;
    if (top.id == tid) {
      found = true;
      break;
    }
    const Index3 cur = grid.from_linear(cur_lin);
    for (std::size_t k = 0; k < kMoves.size(); ++k) {
      const Move& m = kMoves[k];
      const Index3 nb = cur + m.delta;
      if (!grid.in_bounds(nb)) continue;
      const std::size_t nid = grid.linear_index(nb);
      if (state[nid] & kClosedBit) continue;
      const double g = top.g + m.length * res;
      if (g >= g_cost[nid]) continue;
      if (!move_clear(grid, cur, m.delta)) continue;
      g_cost[nid] = g;
      state[nid] = static_cast<std::uint8_t>(k);
      open.push({g + heuristic(nb), g, static_cast<std::int64_t>(nid)});
    }
  }
  if (!found) {
    throw StitcherError(ErrorCode::kNoGeometricPath, "goal is not reachable from start");
  }

  GeometricPath path;
  path.cost = g_cost[static_cast<std::size_t>(tid)];
  Index3 cur = t;
  while (true) {
    path.points.push_back(grid.center_of(cur));
    const std::uint8_t move = state[grid.linear_index(cur)] & ~kClosedBit;
    if (cur == s) break;
    cur -= kMoves[move].delta;
  }
  std::reverse(path.points.begin(), path.points.end());
  return path;
}

WaypointPath sparsify(const VoxelGrid& grid, const GeometricPath& path) {
  WaypointPath out;
  const auto& pts = path.points;
  if (pts.size() <= 2) {
    out.waypoints = pts;
    return out;
  }
  std::size_t anchor = 0;
  out.waypoints.push_back(pts.front());
  while (anchor + 1 < pts.size()) {
    // Farthest later point with line of sight; the adjacent point is the
    // fallback since grid-search steps are always clear.
    std::size_t next = anchor + 1;
    for (std::size_t j = pts.size() - 1; j > anchor + 1; --j) {
      if (raycast_free(grid, pts[anchor], pts[j])) {
        next = j;
        break;
      }
    }
    out.waypoints.push_back(pts[next]);
    anchor = next;
  }
  return out;
}

WaypointPath plan_waypoints(const VoxelGrid& grid, const Vec3& start, const Vec3& goal) {
  const GeometricPath path = astar_grid(grid, start, goal);
  WaypointPath sparse = sparsify(grid, path);
  auto& w = sparse.waypoints;
  if (w.size() == 1) {
    return WaypointPath{{start, goal}};
  }

  // Swap voxel centers for the exact endpoints. If the exact point loses line
  // of sight to its neighbor, keep the center as an extra waypoint; the
  // endpoint and its own voxel center are always mutually visible.
  const Vec3 first_center = w.front();
  w.front() = start;
  if (!raycast_free(grid, start, w[1])) w.insert(w.begin() + 1, first_center);

  const Vec3 last_center = w.back();
  w.back() = goal;
  if (!raycast_free(grid, w[w.size() - 2], goal)) w.insert(w.end() - 1, last_center);
  return sparse;
}

std::vector<std::int32_t> label_free_components(const VoxelGrid& grid) {
  const auto& cells = grid.cells();
  std::vector<std::int32_t> label(cells.size(), -1);
  std::vector<std::size_t> stack;
  static const Index3 kFaces[6] = {Index3(1, 0, 0),  Index3(-1, 0, 0), Index3(0, 1, 0),
                                   Index3(0, -1, 0), Index3(0, 0, 1),  Index3(0, 0, -1)};
  std::int32_t next = 0;
  for (std::size_t seed = 0; seed < cells.size(); ++seed) {
    if (cells[seed] || label[seed] >= 0) continue;
    label[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const Index3 idx = grid.from_linear(cur);
      for (const Index3& f : kFaces) {
        const Index3 nb = idx + f;
        if (!grid.in_bounds(nb)) continue;
        const std::size_t lin = grid.linear_index(nb);
        if (cells[lin] || label[lin] >= 0) continue;
        label[lin] = next;
        stack.push_back(lin);
      }
    }
    ++next;
  }
  return label;
}

}  // namespace stitcher
