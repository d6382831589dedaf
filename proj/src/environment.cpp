#include "stitcher/environment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "stitcher/errors.hpp"

namespace stitcher {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParameter: return "parameter";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kConditioning: return "conditioning";
    case ErrorCode::kRootFailure: return "root_failure";
    case ErrorCode::kGridHeader: return "grid_header";
    case ErrorCode::kGridPayload: return "grid_payload";
    case ErrorCode::kGridIo: return "grid_io";
    case ErrorCode::kInvalidEndpoint: return "invalid_endpoint";
    case ErrorCode::kNoGeometricPath: return "no_geometric_path";
    case ErrorCode::kGraphDisconnected: return "graph_disconnected";
    case ErrorCode::kInvalidStart: return "invalid_start";
    case ErrorCode::kStitch: return "stitch";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// VoxelGrid

VoxelGrid::VoxelGrid(const Index3& dims, double resolution, const Vec3& origin)
    : dims_(dims), resolution_(resolution), origin_(origin) {
  if (dims.minCoeff() < 1) {
    throw StitcherError(ErrorCode::kParameter, "grid dims must be >= 1");
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw StitcherError(ErrorCode::kParameter, "grid resolution must be > 0");
  }
  occupancy_.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(), 0);
}

Index3 VoxelGrid::index_of(const Vec3& p) const {
  const Vec3 rel = (p - origin_) / resolution_;
  // Clamp before the int cast so far-away points stay out of bounds instead of
  // overflowing.
  const Vec3 clamped = rel.array().floor().max(-1.0).min(dims_.cast<double>().array());
  return clamped.cast<int>();
}

Vec3 VoxelGrid::center_of(const Index3& idx) const {
  return origin_ + resolution_ * (idx.cast<double>().array() + 0.5).matrix();
}

bool VoxelGrid::in_bounds(const Index3& idx) const {
  return (idx.array() >= 0).all() && (idx.array() < dims_.array()).all();
}

bool VoxelGrid::contains(const Vec3& p) const { return in_bounds(index_of(p)); }

bool VoxelGrid::occupied(const Index3& idx) const {
  if (!in_bounds(idx)) return true;
  return occupancy_[linear_index(idx)] != 0;
}

void VoxelGrid::set_occupied(const Index3& idx, bool value) {
  if (!in_bounds(idx)) {
    throw StitcherError(ErrorCode::kDomain, "voxel index out of bounds");
  }
  occupancy_[linear_index(idx)] = value ? 1 : 0;
}

Index3 VoxelGrid::from_linear(std::size_t lin) const {
  const std::size_t nx = dims_.x();
  const std::size_t ny = dims_.y();
  return Index3(static_cast<int>(lin % nx), static_cast<int>((lin / nx) % ny),
                static_cast<int>(lin / (nx * ny)));
}

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), 1));
}

double VoxelGrid::occupied_fraction() const {
  return static_cast<double>(occupied_count()) / static_cast<double>(occupancy_.size());
}

bool operator==(const VoxelGrid& a, const VoxelGrid& b) {
  return a.dims_ == b.dims_ && a.resolution_ == b.resolution_ && a.origin_ == b.origin_ &&
         a.inflation_radius_ == b.inflation_radius_ && a.occupancy_ == b.occupancy_;
}

namespace {

constexpr std::array<std::array<int, 3>, 6> kFaceNeighbors{{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

// Occupied in-bounds voxel with at least one free in-bounds face neighbor.
bool is_surface_voxel(const VoxelGrid& grid, const Index3& idx) {
  for (const auto& d : kFaceNeighbors) {
    const Index3 n = idx + Index3(d[0], d[1], d[2]);
    if (grid.in_bounds(n) && !grid.occupied(n)) return true;
  }
  return false;
}

}  // namespace

VoxelGrid VoxelGrid::inflated(double radius) const {
  if (radius < 0.0) {
    throw StitcherError(ErrorCode::kParameter, "inflation radius must be >= 0");
  }
  VoxelGrid out = *this;
  out.inflation_radius_ = inflation_radius_ + radius;
  const int reach = static_cast<int>(std::floor(radius / resolution_ + 1e-9));
  if (reach == 0) return out;

  std::vector<Index3> stencil;
  const double r2 = radius * radius + 1e-12;
  for (int dz = -reach; dz <= reach; ++dz) {
    for (int dy = -reach; dy <= reach; ++dy) {
      for (int dx = -reach; dx <= reach; ++dx) {
        const double d2 = resolution_ * resolution_ * (dx * dx + dy * dy + dz * dz);
        if (d2 <= r2) stencil.emplace_back(dx, dy, dz);
      }
    }
  }

  // Dilating from surface voxels alone is exact: stepping one axis at a time
  // from any occupied voxel toward a free target never increases distance, and
  // the last occupied voxel on that walk is a surface voxel.
  for (std::size_t lin = 0; lin < occupancy_.size(); ++lin) {
    if (!occupancy_[lin]) continue;
    const Index3 idx = from_linear(lin);
    if (!is_surface_voxel(*this, idx)) continue;
    for (const Index3& off : stencil) {
      const Index3 n = idx + off;
      if (in_bounds(n)) out.occupancy_[linear_index(n)] = 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Perlin noise

namespace {

class GradientNoise {
 public:
  explicit GradientNoise(std::uint64_t seed) {
    std::array<int, 256> p{};
    for (int i = 0; i < 256; ++i) p[i] = i;
    std::mt19937_64 rng(seed);
    // Explicit Fisher-Yates: std::shuffle's draw sequence is implementation-defined.
    for (int i = 255; i > 0; --i) {
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(p[i], p[j]);
    }
    for (int i = 0; i < 512; ++i) perm_[i] = p[i & 255];
  }

  double operator()(double x, double y, double z) const {
    const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
    const int X = static_cast<int>(fx) & 255;
    const int Y = static_cast<int>(fy) & 255;
    const int Z = static_cast<int>(fz) & 255;
    x -= fx;
    y -= fy;
    z -= fz;
    const double u = fade(x), v = fade(y), w = fade(z);
    const int A = perm_[X] + Y, AA = perm_[A] + Z, AB = perm_[A + 1] + Z;
    const int B = perm_[X + 1] + Y, BA = perm_[B] + Z, BB = perm_[B + 1] + Z;
    return lerp(w,
                lerp(v, lerp(u, grad(perm_[AA], x, y, z), grad(perm_[BA], x - 1, y, z)),
                     lerp(u, grad(perm_[AB], x, y - 1, z), grad(perm_[BB], x - 1, y - 1, z))),
                lerp(v,
                     lerp(u, grad(perm_[AA + 1], x, y, z - 1),
                          grad(perm_[BA + 1], x - 1, y, z - 1)),
                     lerp(u, grad(perm_[AB + 1], x, y - 1, z - 1),
                          grad(perm_[BB + 1], x - 1, y - 1, z - 1))));
  }

 private:
  static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }
  static double lerp(double t, double a, double b) { return a + t * (b - a); }
  static double grad(int hash, double x, double y, double z) {
    const int h = hash & 15;
    const double u = h < 8 ? x : y;
    const double v = h < 4 ? y : (h == 12 || h == 14 ? x : z);
    return ((h & 1) == 0 ? u : -u) + ((h & 2) == 0 ? v : -v);
  }

  std::array<int, 512> perm_{};
};

}  // namespace

VoxelGrid generate_perlin(std::uint64_t seed, const Index3& dims, double resolution,
                          double threshold, const PerlinOptions& options, const Vec3& origin) {
  if (options.octaves < 1) {
    throw StitcherError(ErrorCode::kParameter, "octaves must be >= 1");
  }
  if (!(options.feature_size > 0.0)) {
    throw StitcherError(ErrorCode::kParameter, "feature_size must be > 0");
  }
  VoxelGrid grid(dims, resolution, origin);
  const GradientNoise noise(seed);

  double amplitude_sum = 0.0;
  for (int o = 0; o < options.octaves; ++o) {
    amplitude_sum += std::pow(options.persistence, o);
  }

  for (int iz = 0; iz < dims.z(); ++iz) {
    for (int iy = 0; iy < dims.y(); ++iy) {
      for (int ix = 0; ix < dims.x(); ++ix) {
        const Index3 idx(ix, iy, iz);
        // Noise is sampled relative to the grid origin so translating the grid
        // does not change its content.
        const Vec3 p = grid.center_of(idx) - origin;
        double value = 0.0;
        double freq = 1.0 / options.feature_size;
        double amp = 1.0;
        for (int o = 0; o < options.octaves; ++o) {
          value += amp * noise(p.x() * freq, p.y() * freq, p.z() * freq);
          freq *= 2.0;
          amp *= options.persistence;
        }
        value = std::clamp(value / amplitude_sum, -1.0, 1.0);
        if (value >= threshold) grid.set_occupied(idx, true);
      }
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Grid file I/O

void save_grid(const VoxelGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw StitcherError(ErrorCode::kGridIo, "cannot open grid file for writing: " + path.string());
  }
  char header[256];
  const auto& d = grid.dims();
  const auto& o = grid.origin();
  std::snprintf(header, sizeof(header), "stitchgrid v1 %d %d %d %.17g %.17g %.17g %.17g\n",
                d.x(), d.y(), d.z(), grid.resolution(), o.x(), o.y(), o.z());
  out << header;

  const auto& cells = grid.cells();
  std::vector<char> bytes((cells.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i]) bytes[i / 8] = static_cast<char>(bytes[i / 8] | (1 << (i % 8)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw StitcherError(ErrorCode::kGridIo, "failed writing grid file: " + path.string());
  }
}

VoxelGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw StitcherError(ErrorCode::kGridIo, "cannot open grid file: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw StitcherError(ErrorCode::kGridHeader, "missing grid header");
  }
  std::istringstream hs(line);
  std::string magic, version;
  long long nx = 0, ny = 0, nz = 0;
  double res = 0, ox = 0, oy = 0, oz = 0;
  hs >> magic >> version >> nx >> ny >> nz >> res >> ox >> oy >> oz;
  std::string trailing;
  if (hs.fail() || (hs >> trailing) || magic != "stitchgrid" || version != "v1") {
    throw StitcherError(ErrorCode::kGridHeader, "malformed grid header: " + line);
  }
  constexpr long long kMaxDim = 1 << 20;
  if (nx < 1 || ny < 1 || nz < 1 || nx > kMaxDim || ny > kMaxDim || nz > kMaxDim) {
    throw StitcherError(ErrorCode::kGridHeader, "grid header has invalid dims");
  }
  if (!(res > 0.0) || !std::isfinite(res) || !std::isfinite(ox) || !std::isfinite(oy) ||
      !std::isfinite(oz)) {
    throw StitcherError(ErrorCode::kGridHeader, "grid header has invalid resolution or origin");
  }

  VoxelGrid grid(Index3(static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nz)), res,
                 Vec3(ox, oy, oz));
  const std::size_t n = grid.voxel_count();
  const std::size_t expected = (n + 7) / 8;
  std::vector<char> bytes(expected);
  in.read(bytes.data(), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected) {
    throw StitcherError(ErrorCode::kGridPayload, "grid payload shorter than header dims imply");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw StitcherError(ErrorCode::kGridPayload, "grid payload longer than header dims imply");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((static_cast<unsigned char>(bytes[i / 8]) >> (i % 8)) & 1u) {
      grid.set_occupied(grid.from_linear(i), true);
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// DistanceIndex

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

struct DistanceIndex::Tree {
  using Point = bg::model::point<double, 3, bg::cs::cartesian>;
  bgi::rtree<Point, bgi::rstar<16>> rtree;
};

DistanceIndex::DistanceIndex(std::shared_ptr<const VoxelGrid> grid)
    : grid_(std::move(grid)), tree_(std::make_unique<Tree>()) {
  if (!grid_) throw StitcherError(ErrorCode::kParameter, "DistanceIndex needs a grid");
  std::vector<Tree::Point> points;
  const auto& cells = grid_->cells();
  for (std::size_t lin = 0; lin < cells.size(); ++lin) {
    if (!cells[lin]) continue;
    const Index3 idx = grid_->from_linear(lin);
    if (!is_surface_voxel(*grid_, idx)) continue;
    const Vec3 c = grid_->center_of(idx);
    points.emplace_back(c.x(), c.y(), c.z());
  }
  // Packing constructor bulk-loads the tree.
  tree_->rtree = decltype(tree_->rtree)(points.begin(), points.end());
}

DistanceIndex::~DistanceIndex() = default;
DistanceIndex::DistanceIndex(DistanceIndex&&) noexcept = default;
DistanceIndex& DistanceIndex::operator=(DistanceIndex&&) noexcept = default;

std::size_t DistanceIndex::indexed_points() const { return tree_->rtree.size(); }

double DistanceIndex::nearest_obstacle_distance(const Vec3& p) const {
  const Index3 idx = grid_->index_of(p);
  if (!grid_->in_bounds(idx)) return 0.0;
  if (grid_->occupied(idx)) return 0.0;
  if (tree_->rtree.empty()) return kInfinity;
  const Tree::Point q(p.x(), p.y(), p.z());
  const auto it = tree_->rtree.qbegin(bgi::nearest(q, 1));
  const double d = bg::distance(q, *it);
  const double half_diagonal = 0.5 * std::sqrt(3.0) * grid_->resolution();
  return std::max(0.0, d - half_diagonal);
}

double DistanceIndex::box_distance(const Vec3& p) const {
  const Index3 idx = grid_->index_of(p);
  if (!grid_->in_bounds(idx)) return 0.0;
  if (grid_->occupied(idx)) return 0.0;
  if (tree_->rtree.empty()) return kInfinity;
  const double half = 0.5 * grid_->resolution();
  const Tree::Point q(p.x(), p.y(), p.z());
  auto gap = [&](const Tree::Point& c) {
    const Vec3 d = (p - Vec3(bg::get<0>(c), bg::get<1>(c), bg::get<2>(c))).cwiseAbs();
    return (d.array() - half).max(0.0).matrix().norm();
  };
  // The nearest center's box bounds the answer; any closer box has its center
  // within that bound plus the half diagonal.
  const auto nearest = tree_->rtree.qbegin(bgi::nearest(q, 1));
  double best = gap(*nearest);
  const double r = best + std::sqrt(3.0) * half;
  const bg::model::box<Tree::Point> window(Tree::Point(p.x() - r, p.y() - r, p.z() - r),
                                           Tree::Point(p.x() + r, p.y() + r, p.z() + r));
  for (auto it = tree_->rtree.qbegin(bgi::intersects(window)); it != tree_->rtree.qend(); ++it) {
    best = std::min(best, gap(*it));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Raycast

bool raycast_free(const VoxelGrid& grid, const Vec3& a, const Vec3& b) {
  Index3 cur = grid.index_of(a);
  const Index3 end = grid.index_of(b);
  if (!grid.in_bounds(cur) || !grid.in_bounds(end)) return false;
  if (grid.occupied(cur)) return false;

  const Vec3 dir = b - a;
  Index3 step;
  Vec3 t_max, t_delta;
  for (int k = 0; k < 3; ++k) {
    step[k] = end[k] > cur[k] ? 1 : (end[k] < cur[k] ? -1 : 0);
    if (step[k] == 0 || dir[k] == 0.0) {
      t_max[k] = std::numeric_limits<double>::infinity();
      t_delta[k] = std::numeric_limits<double>::infinity();
      continue;
    }
    const double boundary =
        grid.origin()[k] + grid.resolution() * (cur[k] + (step[k] > 0 ? 1 : 0));
    t_max[k] = (boundary - a[k]) / dir[k];
    t_delta[k] = grid.resolution() / std::abs(dir[k]);
  }

  // Axes already at the end coordinate are never stepped, so rounding cannot
  // overshoot. When the ray crosses an edge or corner exactly, every voxel
  // sharing that edge or corner is checked.
  while (cur != end) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      if (cur[k] != end[k]) best = std::min(best, t_max[k]);
    }
    std::array<int, 3> tied{};
    int n_tied = 0;
    for (int k = 0; k < 3; ++k) {
      if (cur[k] == end[k]) continue;
      if (t_max[k] <= best + 1e-12 * (1.0 + std::abs(best))) tied[n_tied++] = k;
    }
    if (n_tied == 0) {
      // Only reachable when dir is zero along every unfinished axis, i.e. a
      // degenerate segment inside one voxel column; step the first axis.
      for (int k = 0; k < 3; ++k) {
        if (cur[k] != end[k]) tied[n_tied++] = k;
        if (n_tied) break;
      }
    }
    for (int mask = 1; mask < (1 << n_tied) - 1; ++mask) {
      Index3 side = cur;
      for (int i = 0; i < n_tied; ++i) {
        if (mask & (1 << i)) side[tied[i]] += step[tied[i]];
      }
      if (grid.occupied(side)) return false;
    }
    for (int i = 0; i < n_tied; ++i) {
      cur[tied[i]] += step[tied[i]];
      t_max[tied[i]] += t_delta[tied[i]];
    }
    if (grid.occupied(cur)) return false;
  }
  return true;
}

}  // namespace stitcher
