#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "planner.hpp"

namespace lazykdp
{
/// Control sampling shared by the single-query baselines.
struct KinodynamicConfig
{
  double dt = 0.02;
  uint32_t steps_min = 10;
  uint32_t steps_max = 40;
  double max_accel_jump = std::numeric_limits<double>::infinity();
  double goal_bias = 0.05;

  static KinodynamicConfig From(const GenerationConfig& g)
  {
    KinodynamicConfig c;
    c.dt = g.dt;
    c.steps_min = g.steps_min;
    c.steps_max = g.steps_max;
    c.max_accel_jump = g.max_accel_jump;
    return c;
  }
};

struct SstConfig
{
  double selection_radius = 0.0;
  double pruning_radius = 0.0;

  void Validate() const
  {
    if (!(selection_radius > 0.0) || !(pruning_radius > 0.0))
    {
      throw std::invalid_argument("SstConfig: radii must be positive");
    }
  }

  /// pruning = ratio * selection, the selection radius being theta.
  static SstConfig FromRatio(const double theta, const double ratio)
  {
    return SstConfig{theta, ratio * theta};
  }
};

namespace detail
{
inline JointVector SampleState(const Scene& scene, const Query& query,
                               const double goal_bias, Rng& rng)
{
  if (rng.Uniform() < goal_bias)
  {
    return query.goal.center;
  }
  const int m = scene.model.Dof();
  JointVector q(m);
  for (int i = 0; i < m; ++i)
  {
    q[i] = rng.Uniform(scene.limits.q_min[i], scene.limits.q_max[i]);
  }
  return q;
}

/// One piecewise-constant extension: a single random velocity held over a
/// random number of steps.
inline std::vector<JointVector> SampleConstantControl(
    const Scene& scene, const KinodynamicConfig& config, Rng& rng)
{
  const int m = scene.model.Dof();
  JointVector u(m);
  for (int i = 0; i < m; ++i)
  {
    u[i] = rng.Uniform(scene.limits.dq_min[i], scene.limits.dq_max[i]);
  }
  const auto steps = static_cast<size_t>(
      rng.UniformInt(config.steps_min, config.steps_max));
  return std::vector<JointVector>(steps, u);
}

struct ExtensionNode
{
  JointVector state;
  std::optional<size_t> parent;
  std::vector<JointVector> controls;
  double cost = 0.0;
};

inline Trajectory ExtractExtensionPath(const Scene& scene,
                                       const std::vector<ExtensionNode>& nodes,
                                       size_t id, const Query& query,
                                       const double dt)
{
  std::vector<std::vector<JointVector>> segments;
  while (nodes[id].parent)
  {
    segments.push_back(nodes[id].controls);
    id = *nodes[id].parent;
  }
  std::reverse(segments.begin(), segments.end());
  std::vector<int64_t> ids(segments.size(), -1);
  return AssembleTrajectory(scene, query.start, std::move(segments),
                            std::move(ids), dt);
}

inline Trajectory TrivialTrajectory(const Scene& scene, const Query& query,
                                    const double dt)
{
  return AssembleTrajectory(scene, query.start, {}, {}, dt);
}
}  // namespace detail

struct BaselineStats
{
  uint64_t iterations = 0;
  uint64_t simulated_edges = 0;
  uint64_t nodes = 0;
  uint64_t active_nodes = 0;
};

struct BaselineResult
{
  std::vector<Trajectory> solutions;
  std::vector<double> solution_times;
  BaselineStats stats;

  bool success() const { return !solutions.empty(); }
};

/// Kinodynamic RRT: goal-biased sampling, nearest-node extension with a random
/// constant velocity, stops at the first goal-reaching node.
inline BaselineResult PlanRrt(const Scene& scene, const Query& query,
                              const KinodynamicConfig& config)
{
  RequireValidQuery(scene, query);
  BaselineResult out;
  const Budget budget(query);
  if (query.goal.Contains(query.start))
  {
    out.solutions.push_back(detail::TrivialTrajectory(scene, query, config.dt));
    out.solution_times.push_back(budget.Elapsed());
    return out;
  }
  Rng rng = Substream(query.rng_seed, StreamDomain::kPlannerPropagation, 0);
  const CheckContext ctx = scene.Checks(config.max_accel_jump);
  std::vector<detail::ExtensionNode> nodes;
  nodes.push_back({query.start, std::nullopt, {}, 0.0});
  while (!budget.Exhausted(out.stats.iterations))
  {
    ++out.stats.iterations;
    const JointVector target = detail::SampleState(scene, query, config.goal_bias, rng);
    size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < nodes.size(); ++i)
    {
      const double d = (nodes[i].state - target).squaredNorm();
      if (d < best)
      {
        best = d;
        nearest = i;
      }
    }
    auto controls = detail::SampleConstantControl(scene, config, rng);
    const Rollout r = Propagate(scene.model, scene.limits, nodes[nearest].state,
                                controls, config.dt);
    ++out.stats.simulated_edges;
    if (CheckRollout(ctx, r, controls, config.dt) != CheckResult::kValid)
    {
      continue;
    }
    nodes.push_back({r.Terminal(), nearest, std::move(controls),
                     nodes[nearest].cost + Arclength(r.states)});
    if (query.goal.Contains(nodes.back().state))
    {
      Trajectory traj = detail::ExtractExtensionPath(scene, nodes, nodes.size() - 1,
                                                     query, config.dt);
      if (ValidateTrajectory(scene, config.max_accel_jump, traj, query).ok)
      {
        out.solutions.push_back(std::move(traj));
        out.solution_times.push_back(budget.Elapsed());
        break;
      }
    }
  }
  out.stats.nodes = nodes.size();
  out.stats.active_nodes = nodes.size();
  return out;
}

/// Stable Sparse RRT node set with a witness set. Kept separate from the
/// search loop so the best-near and dominance rules can be exercised directly.
class SparseTree
{
public:
  struct Node
  {
    JointVector state;
    std::optional<size_t> parent;
    std::vector<JointVector> controls;
    double cost = 0.0;
    bool active = true;
    bool removed = false;
    size_t children = 0;
  };

  SparseTree(const JointVector& root, const SstConfig& config) : config_(config)
  {
    config_.Validate();
    nodes_.push_back({root, std::nullopt, {}, 0.0});
    witnesses_.push_back({root, 0});
  }

  /// Best-near selection: least-cost active node within the selection radius
  /// of target, else the nearest active node.
  size_t SelectNear(const JointVector& target) const
  {
    std::optional<size_t> best_near;
    std::optional<size_t> nearest;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < nodes_.size(); ++i)
    {
      const Node& n = nodes_[i];
      if (!n.active)
      {
        continue;
      }
      const double d = (n.state - target).norm();
      if (d <= config_.selection_radius &&
          (!best_near || n.cost < nodes_[*best_near].cost))
      {
        best_near = i;
      }
      if (d < nearest_dist)
      {
        nearest_dist = d;
        nearest = i;
      }
    }
    return best_near ? *best_near : *nearest;
  }

  /// Witness dominance: the candidate is kept only if its witness has no
  /// representative or the candidate is cheaper; the displaced representative
  /// becomes inactive and inactive leaves are removed. Returns the new node id.
  std::optional<size_t> Insert(const JointVector& state, const size_t parent,
                               std::vector<JointVector> controls,
                               const double cost)
  {
    size_t witness = NearestWitness(state);
    if ((witnesses_[witness].state - state).norm() > config_.pruning_radius)
    {
      witnesses_.push_back({state, std::nullopt});
      witness = witnesses_.size() - 1;
    }
    const std::optional<size_t> rep = witnesses_[witness].representative;
    if (rep && !(cost < nodes_[*rep].cost))
    {
      return std::nullopt;
    }
    nodes_.push_back({state, parent, std::move(controls), cost});
    const size_t id = nodes_.size() - 1;
    ++nodes_[parent].children;
    witnesses_[witness].representative = id;
    if (rep)
    {
      nodes_[*rep].active = false;
      PruneInactiveLeaves(*rep);
    }
    return id;
  }

  const Node& node(const size_t id) const { return nodes_[id]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  size_t WitnessCount() const { return witnesses_.size(); }

  size_t ActiveCount() const
  {
    size_t n = 0;
    for (const auto& node : nodes_)
    {
      n += node.active ? 1 : 0;
    }
    return n;
  }

  size_t LiveCount() const
  {
    size_t n = 0;
    for (const auto& node : nodes_)
    {
      n += node.removed ? 0 : 1;
    }
    return n;
  }

private:
  struct Witness
  {
    JointVector state;
    std::optional<size_t> representative;
  };

  size_t NearestWitness(const JointVector& q) const
  {
    size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < witnesses_.size(); ++i)
    {
      const double d = (witnesses_[i].state - q).squaredNorm();
      if (d < best_dist)
      {
        best_dist = d;
        best = i;
      }
    }
    return best;
  }

  void PruneInactiveLeaves(size_t id)
  {
    while (!nodes_[id].active && !nodes_[id].removed && nodes_[id].children == 0 &&
           nodes_[id].parent)
    {
      nodes_[id].removed = true;
      const size_t parent = *nodes_[id].parent;
      --nodes_[parent].children;
      id = parent;
    }
  }

  SstConfig config_;
  std::vector<Node> nodes_;
  std::vector<Witness> witnesses_;
};

/// Stable Sparse RRT, anytime: records each strictly cheaper goal-reaching
/// node until the budget runs out.
inline BaselineResult PlanSst(const Scene& scene, const Query& query,
                              const KinodynamicConfig& config,
                              const SstConfig& sst)
{
  RequireValidQuery(scene, query);
  BaselineResult out;
  const Budget budget(query);
  if (query.goal.Contains(query.start))
  {
    out.solutions.push_back(detail::TrivialTrajectory(scene, query, config.dt));
    out.solution_times.push_back(budget.Elapsed());
    return out;
  }
  Rng rng = Substream(query.rng_seed, StreamDomain::kPlannerPropagation, 0);
  const CheckContext ctx = scene.Checks(config.max_accel_jump);
  SparseTree tree(query.start, sst);
  double best_cost = std::numeric_limits<double>::infinity();
  while (!budget.Exhausted(out.stats.iterations))
  {
    ++out.stats.iterations;
    const JointVector target = detail::SampleState(scene, query, config.goal_bias, rng);
    const size_t from = tree.SelectNear(target);
    auto controls = detail::SampleConstantControl(scene, config, rng);
    const Rollout r = Propagate(scene.model, scene.limits, tree.node(from).state,
                                controls, config.dt);
    ++out.stats.simulated_edges;
    if (CheckRollout(ctx, r, controls, config.dt) != CheckResult::kValid)
    {
      continue;
    }
    const double cost = tree.node(from).cost + Arclength(r.states);
    const auto id = tree.Insert(r.Terminal(), from, std::move(controls), cost);
    if (!id || !query.goal.Contains(tree.node(*id).state) || !(cost < best_cost))
    {
      continue;
    }
    std::vector<size_t> chain{*id};
    while (tree.node(chain.back()).parent)
    {
      chain.push_back(*tree.node(chain.back()).parent);
    }
    std::vector<std::vector<JointVector>> segments;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    {
      if (tree.node(*it).parent)
      {
        segments.push_back(tree.node(*it).controls);
      }
    }
    std::vector<int64_t> ids(segments.size(), -1);
    Trajectory traj = AssembleTrajectory(scene, query.start, std::move(segments),
                                         std::move(ids), config.dt);
    if (ValidateTrajectory(scene, config.max_accel_jump, traj, query).ok)
    {
      best_cost = cost;
      out.solutions.push_back(std::move(traj));
      out.solution_times.push_back(budget.Elapsed());
    }
  }
  out.stats.nodes = tree.LiveCount();
  out.stats.active_nodes = tree.ActiveCount();
  return out;
}

/// BoE: the bundle search with laziness disabled and purely greedy selection.
inline PlanResult PlanBoe(const EdgeBundle& bundle, const Scene& scene,
                          const Query& query)
{
  PlannerConfig config;
  config.lazy = false;
  config.greedy_probability = 1.0;
  return Plan(bundle, scene, query, config);
}
}  // namespace lazykdp
