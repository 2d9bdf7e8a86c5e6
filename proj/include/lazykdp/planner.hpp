#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "trajectory.hpp"

namespace lazykdp
{
/// Probability that an edge is attached lazily instead of simulated.
inline double PSelect(const Edge& edge)
{
  return std::clamp((1.0 - edge.p_collision) * edge.p_lazy_prop, 0.0, 1.0);
}

struct TreeNode
{
  size_t id = 0;
  JointVector state;
  std::optional<size_t> parent;
  std::optional<uint64_t> edge;
  bool lazy = false;
  double cost_to_come = 0.0;
  double h = 0.0;
  bool alive = true;
};

/// A lazy chain ends when the heuristic starts increasing or the newest state
/// reaches the goal region.
inline bool ShouldTerminateLazy(const std::vector<const TreeNode*>& chain,
                                const GoalRegion& goal)
{
  if (chain.empty())
  {
    throw std::invalid_argument("ShouldTerminateLazy: empty chain");
  }
  const TreeNode& newest = *chain.back();
  if (goal.Contains(newest.state))
  {
    return true;
  }
  return chain.size() >= 2 && newest.h > chain[chain.size() - 2]->h;
}

/// Search tree with parent links and child lists; nodes are never erased,
/// only marked dead.
class SearchTree
{
public:
  size_t Add(TreeNode node)
  {
    node.id = nodes_.size();
    children_.emplace_back();
    if (node.parent)
    {
      children_[*node.parent].push_back(node.id);
    }
    nodes_.push_back(std::move(node));
    return nodes_.back().id;
  }

  TreeNode& operator[](const size_t id) { return nodes_[id]; }
  const TreeNode& operator[](const size_t id) const { return nodes_[id]; }
  size_t size() const { return nodes_.size(); }
  const std::vector<size_t>& Children(const size_t id) const
  {
    return children_[id];
  }

  /// Marks a node and its whole subtree dead; returns the ids killed.
  std::vector<size_t> KillSubtree(const size_t id)
  {
    std::vector<size_t> killed;
    std::vector<size_t> stack{id};
    while (!stack.empty())
    {
      const size_t n = stack.back();
      stack.pop_back();
      if (!nodes_[n].alive)
      {
        continue;
      }
      nodes_[n].alive = false;
      killed.push_back(n);
      for (const size_t c : children_[n])
      {
        stack.push_back(c);
      }
    }
    return killed;
  }

  /// Path from the nearest non-lazy ancestor (inclusive) down to id.
  std::vector<size_t> LazyChain(const size_t id) const
  {
    std::vector<size_t> chain{id};
    while (nodes_[chain.back()].lazy)
    {
      chain.push_back(*nodes_[chain.back()].parent);
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
  }

  /// Root-to-node path.
  std::vector<size_t> PathTo(const size_t id) const
  {
    std::vector<size_t> path{id};
    while (nodes_[path.back()].parent)
    {
      path.push_back(*nodes_[path.back()].parent);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

private:
  std::vector<TreeNode> nodes_;
  std::vector<std::vector<size_t>> children_;
};

enum class RealizeFailure
{
  kNone,
  kCollision,
  kLimitViolation,
  kTorqueViolation,
  kConsistencyViolation,
};

struct RealizeOutcome
{
  RealizeFailure failure = RealizeFailure::kNone;
  /// Nodes that became non-lazy, in chain order.
  std::vector<size_t> realized;
  /// Node whose edge failed (already killed with its subtree).
  std::optional<size_t> failed_node;
  std::optional<uint64_t> failed_edge;
  std::vector<size_t> killed;
  size_t simulations = 0;

  bool ok() const { return failure == RealizeFailure::kNone; }
};

/// Re-simulates every lazy edge on a chain (ids from a non-lazy anchor down)
/// from the actual realized state of its parent. A realized segment must pass
/// every check and land within `consistency_bound` of the stored end state;
/// on failure the chain is cut at the last valid node.
inline RealizeOutcome RealizeChain(const Scene& scene, const EdgeBundle& bundle,
                                   SearchTree& tree,
                                   const std::vector<size_t>& chain,
                                   const GoalRegion& goal,
                                   const double consistency_bound)
{
  RealizeOutcome out;
  if (chain.empty())
  {
    return out;
  }
  if (tree[chain.front()].lazy)
  {
    throw std::invalid_argument("RealizeChain: chain must start at a real node");
  }
  const CheckContext ctx =
      scene.Checks(bundle.metadata().generation.max_accel_jump);
  for (size_t i = 1; i < chain.size(); ++i)
  {
    TreeNode& node = tree[chain[i]];
    const TreeNode& parent = tree[*node.parent];
    const Edge& edge = bundle.edge(*node.edge);
    const Rollout r =
        Propagate(scene.model, scene.limits, parent.state, edge.controls, edge.dt);
    ++out.simulations;
    const CheckResult check = CheckRollout(ctx, r, edge.controls, edge.dt);
    RealizeFailure failure = RealizeFailure::kNone;
    switch (check)
    {
      case CheckResult::kValid: break;
      case CheckResult::kCollision: failure = RealizeFailure::kCollision; break;
      case CheckResult::kTorqueViolation:
        failure = RealizeFailure::kTorqueViolation;
        break;
      default: failure = RealizeFailure::kLimitViolation; break;
    }
    if (failure == RealizeFailure::kNone &&
        (r.Terminal() - edge.qf).norm() > consistency_bound)
    {
      failure = RealizeFailure::kConsistencyViolation;
    }
    if (failure != RealizeFailure::kNone)
    {
      out.failure = failure;
      out.failed_node = node.id;
      out.failed_edge = edge.id;
      out.killed = tree.KillSubtree(node.id);
      return out;
    }
    node.state = r.Terminal();
    node.lazy = false;
    node.cost_to_come = parent.cost_to_come + Arclength(r.states);
    node.h = goal.Distance(node.state);
    out.realized.push_back(node.id);
  }
  return out;
}

struct PlannerConfig
{
  /// Probability of expanding the open node with least h; otherwise uniform.
  double greedy_probability = 0.9;
  /// When false, every edge is simulated on selection (plain BoE).
  bool lazy = true;
};

struct PlannerStats
{
  uint64_t iterations = 0;
  uint64_t simulated_edges = 0;
  uint64_t lazy_attachments = 0;
  uint64_t realizations = 0;
  uint64_t realization_failures = 0;
  uint64_t invalid_expansions = 0;
  uint64_t revalidation_failures = 0;
  uint64_t nodes = 0;
  uint64_t simulated_edges_at_first_solution = 0;
};

struct PlanResult
{
  std::vector<Trajectory> solutions;
  /// Seconds from the start of planning at which each solution was recorded.
  std::vector<double> solution_times;
  PlannerStats stats;

  bool success() const { return !solutions.empty(); }
  double BestCost() const
  {
    return solutions.empty() ? std::numeric_limits<double>::infinity()
                             : solutions.back().cost;
  }
};

/// Monotonic wall-clock budget plus an optional iteration cap.
class Budget
{
public:
  explicit Budget(const Query& query)
      : start_(std::chrono::steady_clock::now()),
        seconds_(query.time_budget),
        max_iterations_(query.max_iterations)
  {
  }

  double Elapsed() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

  bool Exhausted(const uint64_t iterations) const
  {
    if (max_iterations_ != 0 && iterations >= max_iterations_)
    {
      return true;
    }
    return Elapsed() >= seconds_;
  }

private:
  std::chrono::steady_clock::time_point start_;
  double seconds_;
  uint64_t max_iterations_;
};

inline void RequireValidQuery(const Scene& scene, const Query& query)
{
  RequireDof(query.start, scene.model.Dof(), "Query start");
  RequireDof(query.goal.center, scene.model.Dof(), "Query goal");
  if (!(query.goal.radius > 0.0))
  {
    throw std::invalid_argument("Query: goal radius must be positive");
  }
  if (!Within(query.start, scene.limits.q_min, scene.limits.q_max) ||
      StateInCollision(scene.model, scene.world, query.start))
  {
    throw std::invalid_argument("Query: start must be collision-free and within limits");
  }
}

namespace detail
{
/// Greedy-by-h plus uniform selection over the open nodes.
class OpenSet
{
public:
  void Insert(const size_t id, const double h)
  {
    if (position_.size() <= id)
    {
      position_.resize(id + 1, kAbsent);
      key_.resize(id + 1, 0.0);
    }
    if (position_[id] != kAbsent)
    {
      return;
    }
    position_[id] = members_.size();
    members_.push_back(id);
    key_[id] = h;
    by_h_.emplace(h, id);
  }

  void Erase(const size_t id)
  {
    if (id >= position_.size() || position_[id] == kAbsent)
    {
      return;
    }
    by_h_.erase({key_[id], id});
    const size_t pos = position_[id];
    members_[pos] = members_.back();
    position_[members_[pos]] = pos;
    members_.pop_back();
    position_[id] = kAbsent;
  }

  void Rekey(const size_t id, const double h)
  {
    if (Contains(id))
    {
      Erase(id);
      Insert(id, h);
    }
  }

  bool Contains(const size_t id) const
  {
    return id < position_.size() && position_[id] != kAbsent;
  }
  bool empty() const { return members_.empty(); }
  size_t Best() const { return by_h_.begin()->second; }
  size_t Uniform(Rng& rng) const
  {
    return members_[static_cast<size_t>(
        rng.UniformInt(0, static_cast<int64_t>(members_.size()) - 1))];
  }

private:
  static constexpr size_t kAbsent = std::numeric_limits<size_t>::max();
  std::set<std::pair<double, size_t>> by_h_;
  std::vector<size_t> members_;
  std::vector<size_t> position_;
  std::vector<double> key_;
};

/// Heuristic forward search over a bundle. With lazy disabled this is the
/// BoE planner; with it enabled, edges are attached by their stored end state
/// with probability PSelect and simulated only when a chain terminates.
class BundleSearch
{
public:
  BundleSearch(const EdgeBundle& bundle, const Scene& scene, const Query& query,
               const PlannerConfig& config)
      : bundle_(bundle),
        scene_(scene),
        query_(query),
        config_(config),
        budget_(query),
        select_rng_(Substream(query.rng_seed, StreamDomain::kPlannerSelection, 0)),
        candidate_rng_(
            Substream(query.rng_seed, StreamDomain::kPlannerCandidates, 0)),
        coin_rng_(Substream(query.rng_seed, StreamDomain::kPlannerLazyCoin, 0)),
        max_accel_jump_(bundle.metadata().generation.max_accel_jump)
  {
  }

  PlanResult Run()
  {
    RequireValidQuery(scene_, query_);
    TreeNode root;
    root.state = query_.start;
    root.h = query_.goal.Distance(root.state);
    const size_t root_id = AddNode(std::move(root));
    if (query_.goal.Contains(query_.start))
    {
      RecordSolution(root_id);
      return Finish();
    }
    open_.Insert(root_id, tree_[root_id].h);

    while (!budget_.Exhausted(result_.stats.iterations) && !open_.empty())
    {
      ++result_.stats.iterations;
      const size_t n = SelectNode();
      if (Pruned(n))
      {
        open_.Erase(n);
        continue;
      }
      const std::optional<uint64_t> candidate = NextCandidate(n);
      if (!candidate)
      {
        open_.Erase(n);
        continue;
      }
      const Edge& edge = bundle_.edge(*candidate);
      // The coin is always flipped so that lazy and non-lazy runs consume the
      // same random streams.
      const bool attach_lazily =
          coin_rng_.Uniform() < PSelect(edge) && config_.lazy;
      if (attach_lazily)
      {
        AttachLazy(n, edge);
      }
      else
      {
        ExpandReal(n, edge);
      }
    }
    return Finish();
  }

private:
  size_t AddNode(TreeNode node)
  {
    const size_t id = tree_.Add(std::move(node));
    candidates_.emplace_back();
    candidates_ready_.push_back(false);
    ++result_.stats.nodes;
    return id;
  }

  size_t SelectNode()
  {
    if (select_rng_.Uniform() < config_.greedy_probability)
    {
      return open_.Best();
    }
    return open_.Uniform(select_rng_);
  }

  /// Branch-and-bound: a node whose cost plus distance to the goal region
  /// cannot beat the incumbent is not expanded.
  bool Pruned(const size_t n) const
  {
    const TreeNode& node = tree_[n];
    const double bound =
        node.cost_to_come + std::max(0.0, node.h - query_.goal.radius);
    return bound >= best_cost_;
  }

  std::optional<uint64_t> NextCandidate(const size_t n)
  {
    if (!candidates_ready_[n])
    {
      candidates_[n] = bundle_.empty() ? std::vector<uint64_t>{}
                                       : bundle_.Neighbors(tree_[n].state);
      candidates_ready_[n] = true;
    }
    auto& pool = candidates_[n];
    if (pool.empty())
    {
      return std::nullopt;
    }
    // Uniform draw among edges not yet expanded at this node.
    const auto pick = static_cast<size_t>(
        candidate_rng_.UniformInt(0, static_cast<int64_t>(pool.size()) - 1));
    std::swap(pool[pick], pool.back());
    const uint64_t id = pool.back();
    pool.pop_back();
    return id;
  }

  void AttachLazy(const size_t n, const Edge& edge)
  {
    ++result_.stats.lazy_attachments;
    TreeNode child;
    child.state = edge.qf;
    child.parent = n;
    child.edge = edge.id;
    child.lazy = true;
    child.cost_to_come = tree_[n].cost_to_come + edge.Length();
    child.h = query_.goal.Distance(child.state);
    const size_t c = AddNode(std::move(child));

    const std::vector<size_t> chain = tree_.LazyChain(c);
    std::vector<const TreeNode*> view;
    for (const size_t id : chain)
    {
      view.push_back(&tree_[id]);
    }
    if (ShouldTerminateLazy(view, query_.goal))
    {
      Realize(chain);
    }
    else
    {
      open_.Insert(c, tree_[c].h);
    }
  }

  /// Realizes a lazy chain; returns false if the chain tip did not survive.
  bool Realize(const std::vector<size_t>& chain)
  {
    if (chain.size() < 2)
    {
      return true;
    }
    ++result_.stats.realizations;
    RealizeOutcome out = RealizeChain(scene_, bundle_, tree_, chain, query_.goal,
                                      bundle_.theta());
    result_.stats.simulated_edges += out.simulations;
    for (const size_t id : out.killed)
    {
      open_.Erase(id);
    }
    for (const size_t id : out.realized)
    {
      OnRealNode(id);
    }
    if (!out.ok())
    {
      ++result_.stats.realization_failures;
      return false;
    }
    return true;
  }

  /// Bookkeeping for a node that just became real.
  void OnRealNode(const size_t id)
  {
    const TreeNode& node = tree_[id];
    if (query_.goal.Contains(node.state))
    {
      open_.Erase(id);
      RecordSolution(id);
      return;
    }
    if (open_.Contains(id))
    {
      open_.Rekey(id, node.h);
    }
    else
    {
      open_.Insert(id, node.h);
    }
  }

  void ExpandReal(const size_t n, const Edge& edge)
  {
    if (tree_[n].lazy)
    {
      // A real propagation requested on a lazy tip triggers its chain first.
      if (!Realize(tree_.LazyChain(n)) || !tree_[n].alive)
      {
        return;
      }
      if (query_.goal.Contains(tree_[n].state))
      {
        return;
      }
    }
    const Rollout r = Propagate(scene_.model, scene_.limits, tree_[n].state,
                                edge.controls, edge.dt);
    ++result_.stats.simulated_edges;
    if (CheckRollout(scene_.Checks(max_accel_jump_), r, edge.controls,
                     edge.dt) != CheckResult::kValid)
    {
      ++result_.stats.invalid_expansions;
      return;
    }
    TreeNode child;
    child.state = r.Terminal();
    child.parent = n;
    child.edge = edge.id;
    child.cost_to_come = tree_[n].cost_to_come + Arclength(r.states);
    child.h = query_.goal.Distance(child.state);
    OnRealNode(AddNode(std::move(child)));
  }

  void RecordSolution(const size_t id)
  {
    const TreeNode& node = tree_[id];
    if (!(node.cost_to_come < best_cost_))
    {
      return;
    }
    std::vector<std::vector<JointVector>> segments;
    std::vector<int64_t> edge_ids;
    for (const size_t p : tree_.PathTo(id))
    {
      if (tree_[p].edge)
      {
        const Edge& e = bundle_.edge(*tree_[p].edge);
        segments.push_back(e.controls);
        edge_ids.push_back(static_cast<int64_t>(e.id));
      }
    }
    const double dt =
        segments.empty() ? bundle_.metadata().generation.dt
                         : bundle_.edge(static_cast<uint64_t>(edge_ids.front())).dt;
    Trajectory traj = AssembleTrajectory(scene_, query_.start, std::move(segments),
                                         std::move(edge_ids), dt);
    // Node costs and the re-simulated arclength can differ in the last bits;
    // the recorded sequence must improve in the latter.
    if (!(traj.cost < result_.BestCost()))
    {
      return;
    }
    if (!ValidateTrajectory(scene_, max_accel_jump_, traj, query_).ok)
    {
      ++result_.stats.revalidation_failures;
      return;
    }
    best_cost_ = node.cost_to_come;
    if (result_.solutions.empty())
    {
      result_.stats.simulated_edges_at_first_solution =
          result_.stats.simulated_edges;
    }
    result_.solutions.push_back(std::move(traj));
    result_.solution_times.push_back(budget_.Elapsed());
  }

  PlanResult Finish() { return std::move(result_); }

  const EdgeBundle& bundle_;
  const Scene& scene_;
  const Query& query_;
  PlannerConfig config_;
  Budget budget_;
  Rng select_rng_;
  Rng candidate_rng_;
  Rng coin_rng_;
  double max_accel_jump_;

  SearchTree tree_;
  OpenSet open_;
  std::vector<std::vector<uint64_t>> candidates_;
  std::vector<bool> candidates_ready_;
  double best_cost_ = std::numeric_limits<double>::infinity();
  PlanResult result_;
};
}  // namespace detail

/// LazyBoE: anytime search over an annotated bundle. Every returned
/// trajectory is fully simulated and has passed ValidateTrajectory.
inline PlanResult Plan(const EdgeBundle& bundle, const Scene& scene,
                       const Query& query, const PlannerConfig& config = {})
{
  return detail::BundleSearch(bundle, scene, query, config).Run();
}
}  // namespace lazykdp
