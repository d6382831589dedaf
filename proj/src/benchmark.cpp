#include "stitcher/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "stitcher/errors.hpp"

namespace stitcher {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Uniform free point with a 1 m margin to the side walls, kept in the middle
// half of the grid height.
std::optional<Vec3> sample_free_point(const VoxelGrid& grid, std::mt19937_64& rng) {
  const Vec3 lo = grid.min_corner();
  const Vec3 hi = grid.max_corner();
  const double margin = std::min(1.0, 0.1 * (hi - lo).head<2>().minCoeff());
  const double h = hi.z() - lo.z();
  std::uniform_real_distribution<double> ux(lo.x() + margin, hi.x() - margin);
  std::uniform_real_distribution<double> uy(lo.y() + margin, hi.y() - margin);
  std::uniform_real_distribution<double> uz(lo.z() + 0.25 * h, lo.z() + 0.75 * h);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(ux(rng), uy(rng), uz(rng));
    if (!grid.occupied(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

std::optional<BenchmarkInstance> make_instance(const Environment& env, std::uint64_t seed,
                                               int target_waypoints, int max_attempts,
                                               const std::vector<std::int32_t>* components) {
  if (target_waypoints < 2) throw StitcherError(ErrorCode::kParameter, "target waypoints must be >= 2");
  const VoxelGrid& grid = env.grid();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  const double diag = (grid.max_corner() - grid.min_corner()).head<2>().norm();
  double distance = std::clamp(5.0 * (target_waypoints - 1), 2.0, 0.9 * diag);

  auto same_component = [&](const Vec3& a, const Vec3& b) {
    return !components || (*components)[grid.linear_index(grid.index_of(a))] ==
                              (*components)[grid.linear_index(grid.index_of(b))];
  };
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const auto start = sample_free_point(grid, rng);
    if (!start) return std::nullopt;
    std::optional<Vec3> goal_pick;
    for (int k = 0; k < 64 && !goal_pick; ++k) {
      const double a = angle(rng);
      const auto zpick = sample_free_point(grid, rng);
      Vec3 g = *start + distance * Vec3(std::cos(a), std::sin(a), 0.0);
      if (zpick) g.z() = zpick->z();
      if (grid.contains(g) && !grid.occupied(g) && same_component(*start, g)) goal_pick = g;
    }
    if (!goal_pick) {
      distance = std::max(1.0, 0.9 * distance);
      continue;
    }
    const Vec3 goal = *goal_pick;

    WaypointPath path;
    try {
      path = plan_waypoints(grid, *start, goal);
    } catch (const StitcherError&) {
      continue;
    }
    const int n = static_cast<int>(path.size());
    if (n == target_waypoints) {
      BenchmarkInstance inst;
      inst.seed = seed;
      inst.target_waypoints = target_waypoints;
      inst.start.position = *start;
      inst.start.velocity = Vec3::Zero();
      inst.start.acceleration = Vec3::Zero();
      inst.goal.position = goal;
      inst.goal.velocity = Vec3::Zero();
      inst.waypoints = std::move(path);
      inst.attempts = attempt;
      return inst;
    }
    // Jitter keeps the distance from cycling between the same few values.
    const double step = (n < target_waypoints ? 1.25 : 0.8) * jitter(rng);
    distance = std::clamp(distance * step, 1.0, 0.9 * diag);
  }
  return std::nullopt;
}

json TrajectoryVerification::to_json() const {
  return {{"constraint_violations", constraint_violations},
          {"dense_constraint_violations", dense_constraint_violations},
          {"collisions", collisions},
          {"max_waypoint_error", max_waypoint_error},
          {"max_seam_discontinuity", max_seam_discontinuity}};
}

TrajectoryVerification verify_trajectory(const StitchedTrajectory& traj, const WaypointPath& waypoints,
                                         const VoxelGrid& grid, const ConstraintLimits& limits,
                                         double constraint_dt, double dense_dt) {
  TrajectoryVerification out;
  const auto& segs = traj.segments();
  if (segs.size() + 1 != waypoints.size()) {
    out.max_waypoint_error = std::numeric_limits<double>::infinity();
  }
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& seg = segs[k];
    if (check_constraints(seg, limits, constraint_dt)) ++out.constraint_violations;
    if (dense_collision_time(seg, grid, dense_dt)) ++out.collisions;

    const double T = seg.duration();
    for (std::size_t i = 0;; ++i) {
      const double t = std::min(static_cast<double>(i) * dense_dt, T);
      if (check_state(seg.evaluate(t, 1), seg.evaluate(t, 2), seg.evaluate(t, 3), limits, t)) {
        ++out.dense_constraint_violations;
        break;
      }
      if (t >= T) break;
    }

    if (k + 1 < waypoints.size()) {
      const double e0 = (seg.evaluate(0.0, 0) - waypoints.waypoints[k]).norm();
      const double e1 = (seg.evaluate(T, 0) - waypoints.waypoints[k + 1]).norm();
      out.max_waypoint_error = std::max({out.max_waypoint_error, e0, e1});
    }
  }
  out.max_seam_discontinuity = traj.max_seam_discontinuity();
  return out;
}

const char* to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::kOk: return "ok";
    case TrialStatus::kNoInstance: return "no_instance";
    case TrialStatus::kNoGeometricPath: return "no_geometric_path";
    case TrialStatus::kDisconnected: return "graph_disconnected";
    case TrialStatus::kError: return "error";
  }
  return "unknown";
}

double TrialRecord::edge_reduction_pct() const {
  if (dijkstra_edges == 0) return 0.0;
  return 100.0 * (static_cast<double>(dijkstra_edges) - static_cast<double>(astar_edges)) /
         static_cast<double>(dijkstra_edges);
}

double TrialRecord::cost_relative_difference() const {
  const double scale = std::max(std::abs(dijkstra_cost), 1e-300);
  return std::abs(astar_cost - dijkstra_cost) / scale;
}

json TrialRecord::to_json() const {
  return {{"trial", trial},
          {"seed", seed},
          {"target_waypoints", target_waypoints},
          {"instance_attempts", instance_attempts},
          {"status", to_string(status)},
          {"message", message},
          {"waypoints", waypoints},
          {"samples_per_waypoint", samples_per_waypoint},
          {"graph_nodes", graph_nodes},
          {"graph_edges", graph_edges},
          {"astar_ok", astar_ok},
          {"dijkstra_ok", dijkstra_ok},
          {"astar_edges", astar_edges},
          {"dijkstra_edges", dijkstra_edges},
          {"astar_expanded", astar_expanded},
          {"dijkstra_expanded", dijkstra_expanded},
          {"astar_cost", astar_cost},
          {"dijkstra_cost", dijkstra_cost},
          {"edge_reduction_pct", edge_reduction_pct()},
          {"cost_relative_difference", both_succeeded() ? json(cost_relative_difference()) : json()},
          {"astar_time_s", astar_time_s},
          {"dijkstra_time_s", dijkstra_time_s},
          {"verification", verification.to_json()},
          {"stage_times", times.to_json()}};
}

namespace {

TrialRecord run_trial(const Environment& env, const PlannerConfig& config,
                      const std::vector<std::int32_t>& components, int trial) {
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = config.seed + static_cast<std::uint64_t>(trial);
  const auto& counts = config.benchmark_waypoint_counts;
  rec.target_waypoints = counts[static_cast<std::size_t>(trial) % counts.size()];

  const auto inst = make_instance(env, rec.seed, rec.target_waypoints, config.benchmark_max_attempts,
                                  &components);
  if (!inst) {
    rec.status = TrialStatus::kNoInstance;
    rec.message = "no start/goal pair with the requested waypoint count";
    return rec;
  }
  rec.instance_attempts = inst->attempts;
  // Stage 1 cost of the accepted pair alone, not of the search for it.
  auto t0 = Clock::now();
  try {
    plan_waypoints(env.grid(), inst->start.position, inst->goal.position);
  } catch (const StitcherError&) {
  }
  rec.times.geometric_s = seconds_since(t0);

  PlannerConfig cfg = config;
  cfg.start = inst->start;
  cfg.goal = inst->goal;
  rec.waypoints = inst->waypoints.size();

  t0 = Clock::now();
  const VelocityGraph graph = build_velocity_graph(inst->waypoints, cfg);
  rec.times.velocity_graph_s = seconds_since(t0);
  rec.graph_nodes = graph.node_count();
  rec.graph_edges = graph.edge_count();
  rec.samples_per_waypoint = graph.layer_count() > 2 ? graph.layer(1).size() : 0;

  MpSearchOptions opts;
  opts.rho = cfg.rho;
  opts.limits = cfg.limits;
  opts.constraint_dt = cfg.constraint_dt;

  auto run = [&](bool heuristic, bool& ok, std::size_t& edges, std::size_t& expanded, double& cost,
                 double& time_s, MpSearchResult* keep) {
    opts.use_heuristic = heuristic;
    MpSearchTelemetry tel;
    const auto t = Clock::now();
    try {
      MpSearchResult r = astar_mp(graph, env.index(), opts, &tel);
      ok = true;
      cost = r.trajectory.total_cost();
      if (keep) *keep = std::move(r);
    } catch (const StitcherError& e) {
      if (e.code() != ErrorCode::kGraphDisconnected) throw;
      ok = false;
    }
    time_s = seconds_since(t);
    edges = tel.edges_generated;
    expanded = tel.nodes_expanded;
    return tel;
  };

  try {
    MpSearchResult astar;
    const MpSearchTelemetry tel = run(true, rec.astar_ok, rec.astar_edges, rec.astar_expanded,
                                      rec.astar_cost, rec.astar_time_s, &astar);
    rec.times.constraint_check_s = tel.constraint_time_s;
    rec.times.collision_check_s = tel.collision_time_s;
    rec.times.mp_search_s = tel.search_time_s - tel.constraint_time_s - tel.collision_time_s;
    rec.times.total_s = rec.times.geometric_s + rec.times.velocity_graph_s + rec.astar_time_s;
    run(false, rec.dijkstra_ok, rec.dijkstra_edges, rec.dijkstra_expanded, rec.dijkstra_cost,
        rec.dijkstra_time_s, nullptr);

    if (rec.astar_ok) {
      rec.verification = verify_trajectory(astar.trajectory, inst->waypoints, env.grid(), cfg.limits,
                                           cfg.constraint_dt);
    }
    if (!rec.astar_ok || !rec.dijkstra_ok) {
      rec.status = TrialStatus::kDisconnected;
      rec.message = rec.astar_ok ? "dijkstra found no path" : "no feasible primitive path";
    }
  } catch (const std::exception& e) {
    rec.status = TrialStatus::kError;
    rec.message = e.what();
  }
  return rec;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

BenchmarkReport run_benchmark(const Environment& env, const PlannerConfig& config, int trials,
                              int threads) {
  config.validate();
  if (trials < 1) throw StitcherError(ErrorCode::kParameter, "trials must be >= 1");
  BenchmarkReport report;
  report.trials.resize(static_cast<std::size_t>(trials));
  const std::vector<std::int32_t> components = label_free_components(env.grid());

  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, trials);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < trials; i = next++) {
      TrialRecord rec;
      try {
        rec = run_trial(env, config, components, i);
      } catch (const std::exception& e) {
        rec.trial = i;
        rec.seed = config.seed + static_cast<std::uint64_t>(i);
        rec.status = TrialStatus::kError;
        rec.message = e.what();
      }
      report.trials[static_cast<std::size_t>(i)] = std::move(rec);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  const VoxelGrid& raw = env.raw();
  report.environment = {{"dims", {raw.dims().x(), raw.dims().y(), raw.dims().z()}},
                        {"resolution", raw.resolution()},
                        {"inflation_radius", config.inflation_radius},
                        {"occupied_fraction", raw.occupied_fraction()},
                        {"inflated_occupied_fraction", env.grid().occupied_fraction()}};
  if (!config.grid.file) {
    const auto& p = config.grid.perlin;
    report.environment["perlin"] = {{"seed", p.seed},
                                    {"threshold", p.threshold},
                                    {"octaves", p.options.octaves},
                                    {"persistence", p.options.persistence},
                                    {"feature_size", p.options.feature_size}};
  }
  return report;
}

json BenchmarkReport::summary() const {
  std::map<std::string, int> status_counts;
  std::vector<double> reductions, astar_times, dijkstra_times, geo, vg, mp, cc, col, total;
  double min_reduction = std::numeric_limits<double>::infinity();
  double max_cost_diff = 0.0, max_wp_err = 0.0, max_seam = 0.0;
  std::size_t both = 0, constraint_violations = 0, dense_violations = 0, collisions = 0;
  std::map<int, std::vector<std::size_t>> edges_by_n;
  for (const auto& r : trials) {
    ++status_counts[to_string(r.status)];
    if (r.astar_ok) {
      constraint_violations += r.verification.constraint_violations;
      dense_violations += r.verification.dense_constraint_violations;
      collisions += r.verification.collisions;
      max_wp_err = std::max(max_wp_err, r.verification.max_waypoint_error);
      max_seam = std::max(max_seam, r.verification.max_seam_discontinuity);
      geo.push_back(r.times.geometric_s);
      vg.push_back(r.times.velocity_graph_s);
      mp.push_back(r.times.mp_search_s);
      cc.push_back(r.times.constraint_check_s);
      col.push_back(r.times.collision_check_s);
      total.push_back(r.times.total_s);
    }
    if (r.graph_edges > 0) edges_by_n[static_cast<int>(r.waypoints)].push_back(r.graph_edges);
    if (!r.both_succeeded()) continue;
    ++both;
    reductions.push_back(r.edge_reduction_pct());
    min_reduction = std::min(min_reduction, r.edge_reduction_pct());
    max_cost_diff = std::max(max_cost_diff, r.cost_relative_difference());
    astar_times.push_back(r.astar_time_s);
    dijkstra_times.push_back(r.dijkstra_time_s);
  }
  json by_n = json::object();
  for (const auto& [n, e] : edges_by_n) by_n[std::to_string(n)] = e.front();
  return {{"trials", trials.size()},
          {"status_counts", status_counts},
          {"both_succeeded", both},
          {"mean_edge_reduction_pct", mean(reductions)},
          {"min_edge_reduction_pct", both ? json(min_reduction) : json()},
          {"max_cost_relative_difference", max_cost_diff},
          {"constraint_violations", constraint_violations},
          {"dense_constraint_violations", dense_violations},
          {"collisions", collisions},
          {"max_waypoint_error", max_wp_err},
          {"max_seam_discontinuity", max_seam},
          {"total_edges_by_waypoint_count", by_n},
          {"mean_astar_time_s", mean(astar_times)},
          {"mean_dijkstra_time_s", mean(dijkstra_times)},
          {"mean_stage_times",
           {{"geometric_s", mean(geo)},
            {"velocity_graph_s", mean(vg)},
            {"mp_search_s", mean(mp)},
            {"constraint_check_s", mean(cc)},
            {"collision_check_s", mean(col)},
            {"total_s", mean(total)}}},
          {"environment", environment}};
}

std::string BenchmarkReport::csv() const {
  std::ostringstream out;
  out << "trial,seed,status,target_waypoints,waypoints,samples_per_waypoint,graph_nodes,graph_edges,"
         "astar_ok,dijkstra_ok,astar_edges,dijkstra_edges,edge_reduction_pct,astar_cost,"
         "dijkstra_cost,cost_relative_difference,astar_time_s,dijkstra_time_s,"
         "constraint_violations,collisions,max_waypoint_error,max_seam_discontinuity\n";
  char buf[1024];
  for (const auto& r : trials) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%llu,%s,%d,%zu,%zu,%zu,%zu,%d,%d,%zu,%zu,%.6f,%.17g,%.17g,%.3g,%.6f,%.6f,%zu,%zu,"
                  "%.3g,%.3g\n",
                  r.trial, static_cast<unsigned long long>(r.seed), to_string(r.status),
                  r.target_waypoints, r.waypoints, r.samples_per_waypoint, r.graph_nodes,
                  r.graph_edges, r.astar_ok ? 1 : 0, r.dijkstra_ok ? 1 : 0, r.astar_edges,
                  r.dijkstra_edges, r.edge_reduction_pct(), r.astar_cost, r.dijkstra_cost,
                  r.both_succeeded() ? r.cost_relative_difference() : 0.0, r.astar_time_s,
                  r.dijkstra_time_s, r.verification.constraint_violations,
                  r.verification.collisions, r.verification.max_waypoint_error,
                  r.verification.max_seam_discontinuity);
    out << buf;
  }
  return out.str();
}

}  // namespace stitcher
