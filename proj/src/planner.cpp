#include "stitcher/planner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "stitcher/errors.hpp"

namespace stitcher {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[noreturn]] void config_error(const std::string& what) {
  throw StitcherError(ErrorCode::kConfig, what);
}

Vec3 read_vec3(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 3) config_error(name + " must be an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) config_error(name + " must contain numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) config_error("unknown key '" + k + "' in " + where);
  }
}

template <typename T>
T read_number(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_error(std::string(key) + " must be a number");
  return j[key].get<T>();
}

}  // namespace

// ---------------------------------------------------------------------------
// PlannerConfig

PlannerConfig::PlannerConfig() {
  sampling.magnitudes = VelocitySampleConfig::uniform_magnitudes(5, limits.v_max);
}

void PlannerConfig::validate() const {
  try {
    limits.validate();
  } catch (const StitcherError& e) {
    config_error(e.what());
  }
  if (!(rho > 1.0)) config_error("rho must be > 1");
  if (!(constraint_dt > 0.0)) config_error("constraint_dt must be > 0");
  if (!(inflation_radius >= 0.0)) config_error("inflation_radius must be >= 0");
  if (sampling.magnitudes.empty()) config_error("velocity_sampling needs at least one magnitude");
  for (double m : sampling.magnitudes) {
    if (!(m >= 0.0) || m > limits.v_max * (1.0 + 1e-12)) {
      config_error("velocity magnitudes must lie in [0, v_max]");
    }
  }
  if (!(sampling.cone_half_angle_deg >= 0.0 && sampling.cone_half_angle_deg < 90.0)) {
    config_error("cone_half_angle_deg must be in [0, 90)");
  }
  if (sampling.boundary_direction_count < 0) config_error("boundary_direction_count must be >= 0");
  if (!start.finite() || !goal.finite()) config_error("start and goal states must be finite");
  if (grid.perlin.dims.minCoeff() < 1 || !(grid.perlin.resolution > 0.0)) {
    config_error("perlin grid needs dims >= 1 and resolution > 0");
  }
  if (grid.perlin.options.octaves < 1) config_error("perlin octaves must be >= 1");
  if (benchmark_waypoint_counts.empty()) config_error("benchmark.waypoint_counts must not be empty");
  for (int n : benchmark_waypoint_counts) {
    if (n < 2) config_error("benchmark waypoint counts must be >= 2");
  }
  if (benchmark_max_attempts < 1) config_error("benchmark.max_attempts must be >= 1");
}

PlannerConfig PlannerConfig::from_json(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  reject_unknown(j,
                 {"limits", "rho", "velocity_sampling", "start", "goal", "constraint_dt",
                  "inflation_radius", "grid", "seed", "benchmark"},
                 "config");
  PlannerConfig c;
  try {
    if (j.contains("limits")) {
      const json& l = j["limits"];
      reject_unknown(l, {"f_min", "f_max", "theta_max_deg", "v_max", "omega_max", "gravity"}, "limits");
      c.limits.f_min = read_number(l, "f_min", c.limits.f_min);
      c.limits.f_max = read_number(l, "f_max", c.limits.f_max);
      c.limits.theta_max_deg = read_number(l, "theta_max_deg", c.limits.theta_max_deg);
      c.limits.v_max = read_number(l, "v_max", c.limits.v_max);
      c.limits.omega_max = read_number(l, "omega_max", c.limits.omega_max);
      c.limits.gravity = read_number(l, "gravity", c.limits.gravity);
    }
    c.rho = read_number(j, "rho", c.rho);
    c.constraint_dt = read_number(j, "constraint_dt", c.constraint_dt);
    c.inflation_radius = read_number(j, "inflation_radius", c.inflation_radius);
    c.seed = read_number<std::uint64_t>(j, "seed", c.seed);

    c.sampling.magnitudes = VelocitySampleConfig::uniform_magnitudes(5, c.limits.v_max);
    if (j.contains("velocity_sampling")) {
      const json& s = j["velocity_sampling"];
      reject_unknown(s, {"magnitudes", "magnitude_count", "cone_half_angle_deg", "boundary_direction_count"},
                     "velocity_sampling");
      if (s.contains("magnitudes") && s.contains("magnitude_count")) {
        config_error("give either magnitudes or magnitude_count, not both");
      }
      if (s.contains("magnitudes")) {
        c.sampling.magnitudes = s["magnitudes"].get<std::vector<double>>();
      } else if (s.contains("magnitude_count")) {
        c.sampling.magnitudes = VelocitySampleConfig::uniform_magnitudes(
            read_number<int>(s, "magnitude_count", 5), c.limits.v_max);
      }
      c.sampling.cone_half_angle_deg =
          read_number(s, "cone_half_angle_deg", c.sampling.cone_half_angle_deg);
      c.sampling.boundary_direction_count =
          read_number(s, "boundary_direction_count", c.sampling.boundary_direction_count);
    }

    if (j.contains("start")) {
      const json& s = j["start"];
      reject_unknown(s, {"position", "velocity", "acceleration"}, "start");
      if (!s.contains("position")) config_error("start.position is required");
      c.start.position = read_vec3(s["position"], "start.position");
      if (s.contains("velocity")) c.start.velocity = read_vec3(s["velocity"], "start.velocity");
      c.start.acceleration =
          s.contains("acceleration") ? read_vec3(s["acceleration"], "start.acceleration") : Vec3::Zero();
    }
    if (j.contains("goal")) {
      const json& g = j["goal"];
      reject_unknown(g, {"position", "velocity"}, "goal");
      if (!g.contains("position")) config_error("goal.position is required");
      c.goal.position = read_vec3(g["position"], "goal.position");
      if (g.contains("velocity")) c.goal.velocity = read_vec3(g["velocity"], "goal.velocity");
    }

    if (j.contains("grid")) {
      const json& g = j["grid"];
      reject_unknown(g, {"file", "perlin"}, "grid");
      if (g.contains("file") == g.contains("perlin")) {
        config_error("grid needs exactly one of 'file' or 'perlin'");
      }
      if (g.contains("file")) {
        c.grid.file = g["file"].get<std::string>();
      } else {
        const json& p = g["perlin"];
        reject_unknown(p, {"seed", "dims", "resolution", "threshold", "octaves", "persistence",
                           "feature_size", "origin"},
                       "grid.perlin");
        auto& pp = c.grid.perlin;
        pp.seed = read_number<std::uint64_t>(p, "seed", pp.seed);
        if (p.contains("dims")) {
          const auto d = p["dims"].get<std::vector<int>>();
          if (d.size() != 3) config_error("grid.perlin.dims must have 3 entries");
          pp.dims = Index3(d[0], d[1], d[2]);
        }
        pp.resolution = read_number(p, "resolution", pp.resolution);
        pp.threshold = read_number(p, "threshold", pp.threshold);
        pp.options.octaves = read_number(p, "octaves", pp.options.octaves);
        pp.options.persistence = read_number(p, "persistence", pp.options.persistence);
        pp.options.feature_size = read_number(p, "feature_size", pp.options.feature_size);
        if (p.contains("origin")) pp.origin = read_vec3(p["origin"], "grid.perlin.origin");
      }
    }

    if (j.contains("benchmark")) {
      const json& b = j["benchmark"];
      reject_unknown(b, {"waypoint_counts", "max_attempts"}, "benchmark");
      if (b.contains("waypoint_counts")) {
        c.benchmark_waypoint_counts = b["waypoint_counts"].get<std::vector<int>>();
      }
      c.benchmark_max_attempts = read_number(b, "max_attempts", c.benchmark_max_attempts);
    }
  } catch (const json::exception& e) {
    config_error(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

json PlannerConfig::to_json() const {
  json grid_json;
  if (grid.file) {
    grid_json = {{"file", grid.file->string()}};
  } else {
    const auto& p = grid.perlin;
    grid_json = {{"perlin",
                  {{"seed", p.seed},
                   {"dims", {p.dims.x(), p.dims.y(), p.dims.z()}},
                   {"resolution", p.resolution},
                   {"threshold", p.threshold},
                   {"octaves", p.options.octaves},
                   {"persistence", p.options.persistence},
                   {"feature_size", p.options.feature_size},
                   {"origin", vec_json(p.origin)}}}};
  }
  return {{"limits",
           {{"f_min", limits.f_min},
            {"f_max", limits.f_max},
            {"theta_max_deg", limits.theta_max_deg},
            {"v_max", limits.v_max},
            {"omega_max", limits.omega_max},
            {"gravity", limits.gravity}}},
          {"rho", rho},
          {"velocity_sampling",
           {{"magnitudes", sampling.magnitudes},
            {"cone_half_angle_deg", sampling.cone_half_angle_deg},
            {"boundary_direction_count", sampling.boundary_direction_count}}},
          {"start",
           {{"position", vec_json(start.position)},
            {"velocity", vec_json(start.velocity)},
            {"acceleration", vec_json(start.acceleration.value_or(Vec3::Zero()))}}},
          {"goal", {{"position", vec_json(goal.position)}, {"velocity", vec_json(goal.velocity)}}},
          {"constraint_dt", constraint_dt},
          {"inflation_radius", inflation_radius},
          {"grid", grid_json},
          {"seed", seed},
          {"benchmark",
           {{"waypoint_counts", benchmark_waypoint_counts}, {"max_attempts", benchmark_max_attempts}}}};
}

PlannerConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  PlannerConfig c = PlannerConfig::from_json(j);
  // Relative grid paths resolve against the config file's directory.
  if (c.grid.file && c.grid.file->is_relative()) {
    c.grid.file = path.parent_path() / *c.grid.file;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Environment

Environment::Environment(VoxelGrid raw, double inflation_radius) {
  raw_ = std::make_shared<const VoxelGrid>(std::move(raw));
  inflated_ = std::make_shared<const VoxelGrid>(raw_->inflated(inflation_radius));
  index_ = std::make_shared<const DistanceIndex>(inflated_);
}

Environment Environment::from_source(const GridSource& source, double inflation_radius) {
  if (source.file) return Environment(load_grid(*source.file), inflation_radius);
  const auto& p = source.perlin;
  return Environment(generate_perlin(p.seed, p.dims, p.resolution, p.threshold, p.options, p.origin),
                     inflation_radius);
}

// ---------------------------------------------------------------------------
// Pipeline

json StageTimes::to_json() const {
  return {{"geometric_s", geometric_s},
          {"velocity_graph_s", velocity_graph_s},
          {"mp_search_s", mp_search_s},
          {"constraint_check_s", constraint_check_s},
          {"collision_check_s", collision_check_s},
          {"total_s", total_s}};
}

json PlanResult::telemetry_json() const {
  return {{"stage_times", times.to_json()},
          {"search", search.to_json()},
          {"waypoint_count", waypoints.size()},
          {"samples_per_waypoint", samples_per_waypoint},
          {"graph_nodes", graph_nodes},
          {"graph_edges", graph_edges},
          {"segment_count", trajectory.segments().size()},
          {"trajectory_duration_s", trajectory.total_duration()},
          {"trajectory_cost", trajectory.total_cost()}};
}

VelocityGraph build_velocity_graph(const WaypointPath& waypoints, const PlannerConfig& config) {
  const auto samples = sample_velocities(waypoints, config.sampling);
  VelocityGraph graph(waypoints, samples, config.start, config.goal);
  graph.compute_cost_to_go(config.heuristic_u_max());
  return graph;
}

MpSearchResult search_graph(const Environment& env, const VelocityGraph& graph,
                            const PlannerConfig& config, bool use_heuristic) {
  MpSearchOptions opts;
  opts.rho = config.rho;
  opts.limits = config.limits;
  opts.constraint_dt = config.constraint_dt;
  opts.use_heuristic = use_heuristic;
  return astar_mp(graph, env.index(), opts);
}

PlanResult plan(const Environment& env, const PlannerConfig& config, bool use_heuristic) {
  config.validate();
  const auto t_begin = Clock::now();
  PlanResult result;

  auto t0 = Clock::now();
  result.waypoints = plan_waypoints(env.grid(), config.start.position, config.goal.position);
  result.times.geometric_s = seconds_since(t0);

  t0 = Clock::now();
  const VelocityGraph graph = build_velocity_graph(result.waypoints, config);
  result.times.velocity_graph_s = seconds_since(t0);
  result.graph_nodes = graph.node_count();
  result.graph_edges = graph.edge_count();
  result.samples_per_waypoint = graph.layer_count() > 2 ? graph.layer(1).size() : 0;

  MpSearchTelemetry partial;
  MpSearchOptions opts;
  opts.rho = config.rho;
  opts.limits = config.limits;
  opts.constraint_dt = config.constraint_dt;
  opts.use_heuristic = use_heuristic;
  MpSearchResult search;
  try {
    search = astar_mp(graph, env.index(), opts, &partial);
  } catch (...) {
    result.search = partial;
    throw;
  }
  result.trajectory = std::move(search.trajectory);
  result.node_path = std::move(search.node_path);
  result.search = search.telemetry;
  result.times.constraint_check_s = search.telemetry.constraint_time_s;
  result.times.collision_check_s = search.telemetry.collision_time_s;
  result.times.mp_search_s = search.telemetry.search_time_s - result.times.constraint_check_s -
                             result.times.collision_check_s;
  result.times.total_s = seconds_since(t_begin);
  return result;
}

json trajectory_json(const PlanResult& result) {
  json w = json::array();
  for (const Vec3& p : result.waypoints.waypoints) w.push_back(vec_json(p));
  json j = result.trajectory.to_json();
  j["waypoints"] = std::move(w);
  j["node_path"] = result.node_path;
  return j;
}

std::string states_csv(const StitchedTrajectory& traj, double dt, double gravity) {
  std::ostringstream out;
  out << "t,x,y,z,vx,vy,vz,ax,ay,az,jx,jy,jz,thrust_norm,tilt_deg,omega_norm\n";
  if (traj.empty()) return out.str();
  const double T = traj.total_duration();
  char line[512];
  for (std::size_t k = 0;; ++k) {
    const double t = std::min(static_cast<double>(k) * dt, T);
    const Vec3 p = traj.evaluate(t, 0), v = traj.evaluate(t, 1);
    const Vec3 a = traj.evaluate(t, 2), jr = traj.evaluate(t, 3);
    const FlatOutputs fo = flat_outputs(a, jr, gravity);
    std::snprintf(line, sizeof(line),
                  "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  t, p.x(), p.y(), p.z(), v.x(), v.y(), v.z(), a.x(), a.y(), a.z(), jr.x(), jr.y(),
                  jr.z(), fo.thrust.norm(), tilt_deg(fo.thrust), fo.omega_norm);
    out << line;
    if (t >= T) break;
  }
  return out.str();
}

}  // namespace stitcher
