#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "stitcher/environment.hpp"
#include "stitcher/errors.hpp"

using namespace stitcher;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "stitcher_env_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

VoxelGrid random_grid(std::uint64_t seed, const Index3& dims, double res, double fill) {
  VoxelGrid g(dims, res, Vec3(-0.3, 0.1, 0.0));
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution occ(fill);
  for (int z = 0; z < dims.z(); ++z)
    for (int y = 0; y < dims.y(); ++y)
      for (int x = 0; x < dims.x(); ++x) g.set_occupied(Index3(x, y, z), occ(rng));
  return g;
}

// Brute-force oracles over every occupied voxel.
double brute_center_distance(const VoxelGrid& g, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t lin = 0; lin < g.voxel_count(); ++lin) {
    if (!g.cells()[lin]) continue;
    best = std::min(best, (g.center_of(g.from_linear(lin)) - p).norm());
  }
  return best;
}

double brute_box_distance(const VoxelGrid& g, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  const double h = 0.5 * g.resolution();
  for (std::size_t lin = 0; lin < g.voxel_count(); ++lin) {
    if (!g.cells()[lin]) continue;
    const Vec3 c = g.center_of(g.from_linear(lin));
    Vec3 d;
    for (int i = 0; i < 3; ++i) d[i] = std::max(0.0, std::abs(p[i] - c[i]) - h);
    best = std::min(best, d.norm());
  }
  return best;
}

}  // namespace

TEST(VoxelGrid, IndexingAndBounds) {
  VoxelGrid g(Index3(4, 5, 6), 0.5, Vec3(1.0, -1.0, 0.0));
  EXPECT_EQ(g.voxel_count(), 120u);
  EXPECT_EQ(g.index_of(Vec3(1.0, -1.0, 0.0)), Index3(0, 0, 0));
  EXPECT_EQ(g.index_of(Vec3(1.49, -0.51, 0.99)), Index3(0, 0, 1));
  EXPECT_TRUE(g.center_of(Index3(1, 2, 3)).isApprox(Vec3(1.75, 0.25, 1.75)));
  EXPECT_TRUE(g.contains(Vec3(2.9, 1.4, 2.9)));
  EXPECT_FALSE(g.contains(Vec3(3.0, 0.0, 0.0)));
  EXPECT_FALSE(g.contains(Vec3(0.99, 0.0, 0.0)));
  // Anything outside is occupied.
  EXPECT_TRUE(g.occupied(Index3(-1, 0, 0)));
  EXPECT_TRUE(g.occupied(Vec3(100, 0, 0)));
  EXPECT_FALSE(g.occupied(Index3(0, 0, 0)));
  g.set_occupied(Index3(3, 4, 5), true);
  EXPECT_TRUE(g.occupied(Index3(3, 4, 5)));
  EXPECT_EQ(g.occupied_count(), 1u);
  for (std::size_t lin : {0ul, 7ul, 119ul}) EXPECT_EQ(g.linear_index(g.from_linear(lin)), lin);
}

TEST(VoxelGrid, RejectsBadConstruction) {
  EXPECT_THROW(VoxelGrid(Index3(0, 1, 1), 0.1, Vec3::Zero()), StitcherError);
  EXPECT_THROW(VoxelGrid(Index3(1, 1, 1), 0.0, Vec3::Zero()), StitcherError);
  EXPECT_THROW(VoxelGrid(Index3(1, 1, 1), -1.0, Vec3::Zero()), StitcherError);
}

TEST(GridFile, RoundTripIsLossless) {
  const VoxelGrid g = random_grid(3, Index3(7, 5, 3), 0.13, 0.4);
  const fs::path p = temp_path("roundtrip.grid");
  save_grid(g, p);
  const VoxelGrid back = load_grid(p);
  EXPECT_TRUE(back == g);
  EXPECT_EQ(back.resolution(), g.resolution());
  EXPECT_EQ(back.origin(), g.origin());
  // Saving again gives identical bytes.
  const fs::path p2 = temp_path("roundtrip2.grid");
  save_grid(back, p2);
  EXPECT_EQ(read_bytes(p), read_bytes(p2));
}

TEST(GridFile, TruncatedPayloadIsPayloadError) {
  const VoxelGrid g = random_grid(4, Index3(9, 9, 9), 0.2, 0.3);
  const fs::path p = temp_path("trunc.grid");
  save_grid(g, p);
  std::string bytes = read_bytes(p);
  write_bytes(p, bytes.substr(0, bytes.size() - 5));
  try {
    load_grid(p);
    FAIL() << "expected payload error";
  } catch (const StitcherError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGridPayload);
  }
  write_bytes(p, bytes + "xx");
  try {
    load_grid(p);
    FAIL() << "expected payload error";
  } catch (const StitcherError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGridPayload);
  }
}

TEST(GridFile, BadHeadersAreHeaderErrors) {
  const VoxelGrid g = random_grid(5, Index3(2, 2, 2), 0.2, 0.5);
  const fs::path p = temp_path("hdr.grid");
  save_grid(g, p);
  const std::string bytes = read_bytes(p);
  const auto eol = bytes.find('\n');
  ASSERT_NE(eol, std::string::npos);
  const std::string header = bytes.substr(0, eol);
  const std::string payload = bytes.substr(eol);

  auto expect_header_error = [&](const std::string& h) {
    write_bytes(p, h + payload);
    try {
      load_grid(p);
      ADD_FAILURE() << "accepted header: " << h;
    } catch (const StitcherError& e) {
      EXPECT_EQ(e.code(), ErrorCode::kGridHeader) << h;
    }
  };
  // Tokens: magic version nx ny nz res ox oy oz.
  std::istringstream in(header);
  std::vector<std::string> tok{std::istream_iterator<std::string>(in), {}};
  ASSERT_EQ(tok.size(), 9u);
  auto join = [](std::vector<std::string> t) {
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? " " : "") + t[i];
    return s;
  };
  for (const char* bad : {"0", "-0.1", "nan"}) {
    auto t = tok;
    t[5] = bad;
    expect_header_error(join(t));
  }
  auto t = tok;
  t[0] = "NOTAGRID";
  expect_header_error(join(t));
  t = tok;
  t[1] = "v2";
  expect_header_error(join(t));
  t = tok;
  t[2] = "0";
  expect_header_error(join(t));
  t = tok;
  t.pop_back();
  expect_header_error(join(t));
}

TEST(GridFile, MissingFileIsIoError) {
  try {
    load_grid(temp_path("does_not_exist.grid"));
    FAIL();
  } catch (const StitcherError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGridIo);
  }
}

TEST(Perlin, DeterministicBySeed) {
  const auto a = generate_perlin(11, Index3(30, 20, 8), 0.2, 0.1);
  const auto b = generate_perlin(11, Index3(30, 20, 8), 0.2, 0.1);
  const auto c = generate_perlin(12, Index3(30, 20, 8), 0.2, 0.1);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  const fs::path pa = temp_path("pa.grid"), pb = temp_path("pb.grid");
  save_grid(a, pa);
  save_grid(b, pb);
  EXPECT_EQ(read_bytes(pa), read_bytes(pb));
}

TEST(Perlin, OccupancyNonIncreasingInThreshold) {
  double prev = 1.1;
  for (double thr = -1.0; thr <= 1.0; thr += 0.1) {
    const double f = generate_perlin(5, Index3(40, 40, 10), 0.2, thr).occupied_fraction();
    EXPECT_LE(f, prev) << thr;
    prev = f;
  }
  EXPECT_EQ(generate_perlin(5, Index3(10, 10, 4), 0.2, 1.01).occupied_count(), 0u);
  EXPECT_EQ(generate_perlin(5, Index3(10, 10, 4), 0.2, -1.0).occupied_fraction(), 1.0);
}

TEST(Inflation, MatchesBruteForceAndIsMonotone) {
  const VoxelGrid g = random_grid(8, Index3(12, 10, 6), 0.1, 0.05);
  for (double r : {0.0, 0.1, 0.15, 0.25}) {
    const VoxelGrid inf = g.inflated(r);
    for (std::size_t lin = 0; lin < g.voxel_count(); ++lin) {
      const Vec3 c = g.center_of(g.from_linear(lin));
      const bool expect = brute_center_distance(g, c) <= r + 1e-12;
      EXPECT_EQ(static_cast<bool>(inf.cells()[lin]), expect) << "r=" << r << " lin=" << lin;
      if (g.cells()[lin]) EXPECT_TRUE(inf.cells()[lin]);
    }
    EXPECT_DOUBLE_EQ(inf.inflation_radius(), r);
  }
}

TEST(DistanceIndex, SingleVoxelFarAway) {
  auto g = std::make_shared<VoxelGrid>(Index3(60, 10, 10), 0.1, Vec3::Zero());
  g->set_occupied(Index3(2, 5, 5), true);
  const DistanceIndex index(g);
  const Vec3 c = g->center_of(Index3(2, 5, 5));
  const Vec3 p = c + Vec3(5.0, 0.0, 0.0);
  EXPECT_NEAR(index.nearest_obstacle_distance(p), 5.0 - 0.5 * std::sqrt(3.0) * 0.1, 1e-9);
  EXPECT_NEAR(index.box_distance(p), 5.0 - 0.05, 1e-9);
  EXPECT_EQ(index.nearest_obstacle_distance(c), 0.0);
  EXPECT_EQ(index.box_distance(c), 0.0);
}

TEST(DistanceIndex, EmptyGridIsInfinite) {
  auto g = std::make_shared<VoxelGrid>(Index3(5, 5, 5), 0.2, Vec3::Zero());
  const DistanceIndex index(g);
  EXPECT_EQ(index.nearest_obstacle_distance(Vec3(0.5, 0.5, 0.5)), DistanceIndex::kInfinity);
  EXPECT_EQ(index.box_distance(Vec3(0.5, 0.5, 0.5)), DistanceIndex::kInfinity);
  // Outside the grid counts as occupied.
  EXPECT_EQ(index.nearest_obstacle_distance(Vec3(-1, 0.5, 0.5)), 0.0);
}

TEST(DistanceIndex, MatchesBruteForceOnRandomGrids) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 4; ++trial) {
    auto g = std::make_shared<VoxelGrid>(random_grid(100 + trial, Index3(14, 11, 7), 0.15, 0.08));
    const DistanceIndex index(g);
    std::uniform_real_distribution<double> ux(g->min_corner().x(), g->max_corner().x());
    std::uniform_real_distribution<double> uy(g->min_corner().y(), g->max_corner().y());
    std::uniform_real_distribution<double> uz(g->min_corner().z(), g->max_corner().z());
    for (int k = 0; k < 200; ++k) {
      const Vec3 p(ux(rng), uy(rng), uz(rng));
      if (g->occupied(p)) {
        EXPECT_EQ(index.nearest_obstacle_distance(p), 0.0);
        continue;
      }
      const double expect =
          std::max(0.0, brute_center_distance(*g, p) - 0.5 * std::sqrt(3.0) * g->resolution());
      EXPECT_NEAR(index.nearest_obstacle_distance(p), expect, 1e-9);
      EXPECT_NEAR(index.box_distance(p), brute_box_distance(*g, p), 1e-9);
      // The conservative value never exceeds the exact box distance.
      EXPECT_LE(index.nearest_obstacle_distance(p), index.box_distance(p) + 1e-12);
    }
  }
}

TEST(Raycast, AgreesWithDenseSampling) {
  std::mt19937_64 rng(4);
  const VoxelGrid g = random_grid(9, Index3(20, 20, 8), 0.1, 0.03);
  std::uniform_real_distribution<double> ux(0.0, 1.999), uz(0.0, 0.799);
  int free_count = 0;
  for (int k = 0; k < 400; ++k) {
    const Vec3 a(ux(rng) - 0.3, ux(rng) + 0.1, uz(rng));
    const Vec3 b(ux(rng) - 0.3, ux(rng) + 0.1, uz(rng));
    bool dense_free = true;
    for (int i = 0; i <= 20000; ++i) {
      if (g.occupied(Vec3(a + (b - a) * (i / 20000.0)))) {
        dense_free = false;
        break;
      }
    }
    const bool ray = raycast_free(g, a, b);
    // A free ray never crosses an occupied voxel; a blocked dense sample
    // always blocks the ray.
    if (ray) {
      EXPECT_TRUE(dense_free);
      ++free_count;
    }
    if (!dense_free) EXPECT_FALSE(ray);
  }
  EXPECT_GT(free_count, 10);
}

TEST(Raycast, ExactCornerTiesAreConservative) {
  VoxelGrid g(Index3(3, 3, 1), 1.0, Vec3::Zero());
  g.set_occupied(Index3(1, 0, 0), true);
  // Diagonal through the shared corner of (0,0), (1,0), (0,1), (1,1).
  EXPECT_FALSE(raycast_free(g, Vec3(0.5, 0.5, 0.5), Vec3(1.5, 1.5, 0.5)));
  g.set_occupied(Index3(1, 0, 0), false);
  EXPECT_TRUE(raycast_free(g, Vec3(0.5, 0.5, 0.5), Vec3(1.5, 1.5, 0.5)));
  EXPECT_FALSE(raycast_free(g, Vec3(0.5, 0.5, 0.5), Vec3(5.0, 0.5, 0.5)));
}

TEST(DistanceIndex, DistanceImpliesLineOfSight) {
  std::mt19937_64 rng(77);
  auto g = std::make_shared<VoxelGrid>(random_grid(31, Index3(20, 20, 10), 0.1, 0.01));
  const DistanceIndex index(g);
  std::uniform_real_distribution<double> ux(-0.3, 1.69), uy(0.1, 2.09), uz(0.0, 0.99);
  int checked = 0;
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> frac(0.0, 0.999);
  for (int k = 0; k < 2000; ++k) {
    const Vec3 p(ux(rng), uy(rng), uz(rng));
    const double d = index.box_distance(p);
    if (!(d > 0.0) || !std::isfinite(d)) continue;
    // Any in-bounds target closer than the clearance is visible.
    const Vec3 b = p + Vec3(n(rng), n(rng), n(rng)).normalized() * (d * frac(rng));
    if (!g->contains(b)) continue;
    EXPECT_TRUE(raycast_free(*g, p, b));
    EXPECT_LE(index.nearest_obstacle_distance(p), d);
    ++checked;
  }
  EXPECT_GT(checked, 5);
}
