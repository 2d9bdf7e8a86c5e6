#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "perturbation.hpp"

namespace lazykdp
{
inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct PlannerSettings
{
  double greedy_probability = 0.9;
  double goal_radius = 0.25;
  double time_budget = 10.0;
  uint64_t rng_seed = 11;
  uint64_t max_iterations = 0;
  /// SST selection radius; <= 0 uses the bundle theta.
  double sst_selection_radius = 0.0;
};

struct BenchmarkSettings
{
  uint64_t n_problems = 20;
  double time_budget = 10.0;
  uint64_t rng_seed = 2024;
  std::vector<std::string> planners = {"lazyboe", "boe", "rrt",
                                       "sst0.5",  "sst1", "sst2"};
  /// Run (planner, problem) cells concurrently; timings become unreliable.
  bool parallel = false;
  uint64_t max_iterations = 0;
};

/// Everything a CLI invocation needs, read from one JSON document:
///
///   { "schema_version": 1,
///     "robot": {...}, "limits": {...}, "world": {...},
///     "generation": {...}, "perturbation": {...},
///     "planner": {...}, "benchmark": {...} }
///
/// Omitted sections and fields keep their defaults (the 3-link desk arm).
struct RunConfig
{
  int schema_version = kConfigSchemaVersion;
  Scene scene{RobotModel::DefaultArm(), WorldModel{}, Limits::DefaultArm()};
  GenerationConfig generation;
  PerturbationConfig perturbation;
  PlannerSettings planner;
  BenchmarkSettings benchmark;

  /// Overrides every seed, as the CLI's --seed does.
  void OverrideSeed(const uint64_t seed)
  {
    generation.rng_seed = seed;
    perturbation.rng_seed = seed;
    planner.rng_seed = seed;
    benchmark.rng_seed = seed;
  }
};

/// Five discs around the desk arm's workspace.
inline WorldModel DefaultWorld()
{
  WorldModel world;
  world.link_radius = 0.04;
  world.collision_resolution = 0.05;
  world.obstacles = {
      {{0.75, 0.55}, 0.12}, {{-0.6, 0.7}, 0.15}, {{0.2, -0.85}, 0.12},
      {{-0.85, -0.35}, 0.1}, {{0.95, -0.3}, 0.08},
  };
  return world;
}

namespace detail
{
using Json = nlohmann::json;

template <typename T>
void Read(const Json& j, const char* key, T& out)
{
  if (j.contains(key))
  {
    out = j.at(key).get<T>();
  }
}

inline void ReadVector(const Json& j, const char* key, JointVector& out)
{
  if (j.contains(key))
  {
    const auto values = j.at(key).get<std::vector<double>>();
    out = Eigen::Map<const JointVector>(values.data(),
                                        static_cast<Eigen::Index>(values.size()));
  }
}

inline Json ToJson(const JointVector& v)
{
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}
}  // namespace detail

inline RunConfig ParseRunConfig(const nlohmann::json& j)
{
  using detail::Read;
  using detail::ReadVector;
  RunConfig cfg;
  cfg.scene.world = DefaultWorld();
  try
  {
    Read(j, "schema_version", cfg.schema_version);
    if (cfg.schema_version != kConfigSchemaVersion)
    {
      throw ConfigError("config: unsupported schema_version " +
                        std::to_string(cfg.schema_version));
    }
    if (j.contains("robot"))
    {
      const auto& r = j.at("robot");
      RobotModel& m = cfg.scene.model;
      Read(r, "link_length", m.link_length);
      Read(r, "link_mass", m.link_mass);
      Read(r, "com_offset", m.com_offset);
      Read(r, "link_inertia", m.link_inertia);
      Read(r, "viscous_friction", m.viscous_friction);
      Read(r, "coulomb_friction", m.coulomb_friction);
      Read(r, "gravity", m.gravity);
      if (r.contains("dof") &&
          r.at("dof").get<int>() != static_cast<int>(m.link_length.size()))
      {
        throw ConfigError("config: robot.dof does not match link_length");
      }
    }
    if (j.contains("limits"))
    {
      const auto& l = j.at("limits");
      Limits& lim = cfg.scene.limits;
      ReadVector(l, "q_min", lim.q_min);
      ReadVector(l, "q_max", lim.q_max);
      ReadVector(l, "dq_min", lim.dq_min);
      ReadVector(l, "dq_max", lim.dq_max);
      ReadVector(l, "ddq_min", lim.ddq_min);
      ReadVector(l, "ddq_max", lim.ddq_max);
      ReadVector(l, "tau_min", lim.tau_min);
      ReadVector(l, "tau_max", lim.tau_max);
    }
    if (j.contains("world"))
    {
      const auto& w = j.at("world");
      WorldModel& world = cfg.scene.world;
      Read(w, "link_radius", world.link_radius);
      Read(w, "collision_resolution", world.collision_resolution);
      if (w.contains("obstacles"))
      {
        world.obstacles.clear();
        for (const auto& o : w.at("obstacles"))
        {
          const auto c = o.at("center").get<std::vector<double>>();
          if (c.size() != 2)
          {
            throw ConfigError("config: obstacle center must have 2 entries");
          }
          world.obstacles.push_back({{c[0], c[1]}, o.at("radius").get<double>()});
        }
      }
    }
    if (j.contains("generation"))
    {
      const auto& g = j.at("generation");
      GenerationConfig& gen = cfg.generation;
      Read(g, "n_edges", gen.n_edges);
      Read(g, "steps_min", gen.steps_min);
      Read(g, "steps_max", gen.steps_max);
      Read(g, "segment_len", gen.segment_len);
      Read(g, "dt", gen.dt);
      Read(g, "rng_seed", gen.rng_seed);
      if (g.contains("max_accel_jump"))
      {
        gen.max_accel_jump = g.at("max_accel_jump").is_null()
                                 ? std::numeric_limits<double>::infinity()
                                 : g.at("max_accel_jump").get<double>();
      }
      Read(g, "attempt_budget_factor", gen.attempt_budget_factor);
      Read(g, "theta", gen.theta);
    }
    if (j.contains("perturbation"))
    {
      const auto& p = j.at("perturbation");
      Read(p, "p", cfg.perturbation.perturbations);
      Read(p, "theta", cfg.perturbation.theta);
      Read(p, "rng_seed", cfg.perturbation.rng_seed);
    }
    if (j.contains("planner"))
    {
      const auto& p = j.at("planner");
      Read(p, "greedy_probability", cfg.planner.greedy_probability);
      Read(p, "goal_radius", cfg.planner.goal_radius);
      Read(p, "time_budget", cfg.planner.time_budget);
      Read(p, "rng_seed", cfg.planner.rng_seed);
      Read(p, "max_iterations", cfg.planner.max_iterations);
      Read(p, "sst_selection_radius", cfg.planner.sst_selection_radius);
    }
    if (j.contains("benchmark"))
    {
      const auto& b = j.at("benchmark");
      Read(b, "n_problems", cfg.benchmark.n_problems);
      Read(b, "time_budget", cfg.benchmark.time_budget);
      Read(b, "rng_seed", cfg.benchmark.rng_seed);
      Read(b, "planners", cfg.benchmark.planners);
      Read(b, "parallel", cfg.benchmark.parallel);
      Read(b, "max_iterations", cfg.benchmark.max_iterations);
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try
  {
    cfg.scene.Validate();
    cfg.generation.Validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig LoadRunConfig(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ConfigError("cannot open config file " + path.string());
  }
  nlohmann::json j;
  try
  {
    in >> j;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return ParseRunConfig(j);
}

inline nlohmann::json RunConfigToJson(const RunConfig& cfg)
{
  using detail::ToJson;
  nlohmann::json j;
  j["schema_version"] = cfg.schema_version;
  const RobotModel& m = cfg.scene.model;
  j["robot"] = {{"dof", m.Dof()},
                {"link_length", m.link_length},
                {"link_mass", m.link_mass},
                {"com_offset", m.com_offset},
                {"link_inertia", m.link_inertia},
                {"viscous_friction", m.viscous_friction},
                {"coulomb_friction", m.coulomb_friction},
                {"gravity", m.gravity}};
  const Limits& l = cfg.scene.limits;
  j["limits"] = {{"q_min", ToJson(l.q_min)},     {"q_max", ToJson(l.q_max)},
                 {"dq_min", ToJson(l.dq_min)},   {"dq_max", ToJson(l.dq_max)},
                 {"ddq_min", ToJson(l.ddq_min)}, {"ddq_max", ToJson(l.ddq_max)},
                 {"tau_min", ToJson(l.tau_min)}, {"tau_max", ToJson(l.tau_max)}};
  nlohmann::json obstacles = nlohmann::json::array();
  for (const auto& o : cfg.scene.world.obstacles)
  {
    obstacles.push_back(
        {{"center", {o.center.x(), o.center.y()}}, {"radius", o.radius}});
  }
  j["world"] = {{"link_radius", cfg.scene.world.link_radius},
                {"collision_resolution", cfg.scene.world.collision_resolution},
                {"obstacles", obstacles}};
  const GenerationConfig& g = cfg.generation;
  j["generation"] = {{"n_edges", g.n_edges},
                     {"steps_min", g.steps_min},
                     {"steps_max", g.steps_max},
                     {"segment_len", g.segment_len},
                     {"dt", g.dt},
                     {"rng_seed", g.rng_seed},
                     {"attempt_budget_factor", g.attempt_budget_factor},
                     {"theta", g.theta}};
  if (std::isinf(g.max_accel_jump))
  {
    j["generation"]["max_accel_jump"] = nullptr;
  }
  else
  {
    j["generation"]["max_accel_jump"] = g.max_accel_jump;
  }
  j["perturbation"] = {{"p", cfg.perturbation.perturbations},
                       {"theta", cfg.perturbation.theta},
                       {"rng_seed", cfg.perturbation.rng_seed}};
  j["planner"] = {{"greedy_probability", cfg.planner.greedy_probability},
                  {"goal_radius", cfg.planner.goal_radius},
                  {"time_budget", cfg.planner.time_budget},
                  {"rng_seed", cfg.planner.rng_seed},
                  {"max_iterations", cfg.planner.max_iterations},
                  {"sst_selection_radius", cfg.planner.sst_selection_radius}};
  j["benchmark"] = {{"n_problems", cfg.benchmark.n_problems},
                    {"time_budget", cfg.benchmark.time_budget},
                    {"rng_seed", cfg.benchmark.rng_seed},
                    {"planners", cfg.benchmark.planners},
                    {"parallel", cfg.benchmark.parallel},
                    {"max_iterations", cfg.benchmark.max_iterations}};
  return j;
}

inline RunConfig DefaultRunConfig()
{
  return ParseRunConfig(nlohmann::json::object());
}
}  // namespace lazykdp
