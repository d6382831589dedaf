// Command-line front end: plan, benchmark and gen-env subcommands.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stitcher/benchmark.hpp"
#include "stitcher/errors.hpp"
#include "stitcher/planner.hpp"

namespace fs = std::filesystem;
using namespace stitcher;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidConfig = 2,
  kNoGeometricPath = 3,
  kGraphDisconnected = 4,
  kInvalidEndpoint = 5,
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kParameter: return kInvalidConfig;
    case ErrorCode::kNoGeometricPath: return kNoGeometricPath;
    case ErrorCode::kGraphDisconnected: return kGraphDisconnected;
    case ErrorCode::kInvalidEndpoint:
    case ErrorCode::kInvalidStart: return kInvalidEndpoint;
    default: return kFailure;
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

int cmd_plan(const fs::path& config_path, const fs::path& out_dir) {
  const PlannerConfig config = load_config(config_path);
  fs::create_directories(out_dir);
  const Environment env = Environment::from_source(config.grid, config.inflation_radius);
  PlanResult result;
  try {
    result = plan(env, config);
  } catch (const StitcherError& e) {
    nlohmann::json failure = {{"error", to_string(e.code())}, {"message", e.what()}};
    write_file(out_dir / "telemetry.json", failure.dump(2) + "\n");
    throw;
  }
  write_file(out_dir / "trajectory.json", trajectory_json(result).dump(2) + "\n");
  write_file(out_dir / "trajectory.csv",
             states_csv(result.trajectory, config.constraint_dt, config.limits.gravity));
  write_file(out_dir / "telemetry.json", result.telemetry_json().dump(2) + "\n");
  std::printf("planned %zu waypoints, %zu segments, duration %.3f s, cost %.6g in %.2f ms\n",
              result.waypoints.size(), result.trajectory.segments().size(),
              result.trajectory.total_duration(), result.trajectory.total_cost(),
              1e3 * result.times.total_s);
  return kOk;
}

int cmd_benchmark(const fs::path& config_path, int trials, int threads, const fs::path& out_dir) {
  const PlannerConfig config = load_config(config_path);
  fs::create_directories(out_dir);
  const Environment env = Environment::from_source(config.grid, config.inflation_radius);
  const BenchmarkReport report = run_benchmark(env, config, trials, threads);

  nlohmann::json trials_json = nlohmann::json::array();
  for (const auto& t : report.trials) trials_json.push_back(t.to_json());
  const nlohmann::json summary = report.summary();
  write_file(out_dir / "benchmark.csv", report.csv());
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  write_file(out_dir / "trials.json", trials_json.dump(2) + "\n");
  std::printf("%d trials, %d with both searches ok, mean edge reduction %.2f%%, "
              "%d constraint violations, %d collisions\n",
              trials, summary["both_succeeded"].get<int>(),
              summary["mean_edge_reduction_pct"].get<double>(),
              summary["constraint_violations"].get<int>(), summary["collisions"].get<int>());
  return kOk;
}

int cmd_gen_env(std::uint64_t seed, const std::vector<int>& dims, double resolution, double threshold,
                const PerlinOptions& options, const fs::path& out) {
  const VoxelGrid grid =
      generate_perlin(seed, Index3(dims[0], dims[1], dims[2]), resolution, threshold, options);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_grid(grid, out);
  std::printf("wrote %s: %dx%dx%d voxels at %g m, occupied fraction %.4f\n", out.string().c_str(),
              dims[0], dims[1], dims[2], resolution, grid.occupied_fraction());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-stage quadrotor trajectory planner"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* plan_cmd = app.add_subcommand("plan", "Plan one trajectory from a config file");
  plan_cmd->add_option("--config", config_path, "JSON config file")->required();
  plan_cmd->add_option("--out", out_dir, "Output directory")->required();

  int trials = 50;
  int threads = 0;
  auto* bench_cmd = app.add_subcommand("benchmark", "Compare A* against Dijkstra on seeded trials");
  bench_cmd->add_option("--config", config_path, "JSON config file")->required();
  bench_cmd->add_option("--trials", trials, "Number of trials")->required()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  bench_cmd->add_option("--out", out_dir, "Output directory")->required();

  std::uint64_t seed = 0;
  std::vector<int> dims;
  double resolution = 0.1, threshold = 0.3;
  PerlinOptions perlin;
  std::string grid_out;
  auto* gen_cmd = app.add_subcommand("gen-env", "Generate a Perlin noise occupancy grid");
  gen_cmd->add_option("--seed", seed, "Noise seed")->required();
  gen_cmd->add_option("--dims", dims, "Voxel counts nx,ny,nz")
      ->required()
      ->delimiter(',')
      ->expected(3)
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--resolution", resolution, "Voxel edge length in m")
      ->required()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--threshold", threshold, "Occupied where noise >= threshold")->required();
  gen_cmd->add_option("--octaves", perlin.octaves, "Noise octaves")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--persistence", perlin.persistence, "Amplitude ratio between octaves");
  gen_cmd->add_option("--feature-size", perlin.feature_size, "Base noise wavelength in m")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", grid_out, "Output grid file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalidConfig;
  }

  try {
    if (*plan_cmd) return cmd_plan(config_path, out_dir);
    if (*bench_cmd) return cmd_benchmark(config_path, trials, threads, out_dir);
    if (*gen_cmd) return cmd_gen_env(seed, dims, resolution, threshold, perlin, grid_out);
  } catch (const StitcherError& e) {
    std::fprintf(stderr, "error (%s): %s\n", to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
