#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "digest.hpp"
#include "kdtree.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "validation.hpp"

namespace lazykdp
{
inline constexpr uint32_t kBundleSchemaVersion = 1;

/// One validated rollout of the dynamics model together with its empirical
/// lazy-propagation and collision probabilities.
struct Edge
{
  uint64_t id = 0;
  JointVector q0;
  std::vector<JointVector> controls;
  double dt = 0.0;
  JointVector qf;
  double p_lazy_prop = 0.0;
  double p_collision = 1.0;

  double Duration() const { return dt * static_cast<double>(controls.size()); }

  /// Joint-space arclength of the stored rollout.
  double Length() const
  {
    double total = 0.0;
    for (const auto& u : controls)
    {
      total += dt * u.norm();
    }
    return total;
  }

  friend bool operator==(const Edge& a, const Edge& b)
  {
    if (a.id != b.id || a.dt != b.dt || a.p_lazy_prop != b.p_lazy_prop ||
        a.p_collision != b.p_collision || a.q0.size() != b.q0.size() ||
        a.qf.size() != b.qf.size() || a.controls.size() != b.controls.size())
    {
      return false;
    }
    if (a.q0 != b.q0 || a.qf != b.qf)
    {
      return false;
    }
    for (size_t k = 0; k < a.controls.size(); ++k)
    {
      if (a.controls[k].size() != b.controls[k].size() ||
          a.controls[k] != b.controls[k])
      {
        return false;
      }
    }
    return true;
  }
};

/// Default neighborhood radius, scaled with the state dimension.
inline double DefaultTheta(const int dof)
{
  return 0.35 * std::sqrt(static_cast<double>(dof));
}

struct GenerationConfig
{
  uint64_t n_edges = 4000;
  uint32_t steps_min = 10;
  uint32_t steps_max = 40;
  uint32_t segment_len = 10;
  double dt = 0.02;
  uint64_t rng_seed = 1;
  /// Bound on |u_{k+1} - u_k|_inf / dt; infinity disables the check.
  double max_accel_jump = 60.0;
  /// Total attempts allowed are attempt_budget_factor * n_edges.
  uint64_t attempt_budget_factor = 100;
  /// Neighborhood radius stored with the bundle; <= 0 selects DefaultTheta.
  double theta = 0.0;

  void Validate() const
  {
    if (steps_min < 1 || steps_min > steps_max)
    {
      throw std::invalid_argument("GenerationConfig: need 1 <= steps_min <= steps_max");
    }
    if (segment_len < 1)
    {
      throw std::invalid_argument("GenerationConfig: segment_len must be >= 1");
    }
    if (!(dt > 0.0))
    {
      throw std::invalid_argument("GenerationConfig: dt must be positive");
    }
    if (!(max_accel_jump > 0.0))
    {
      throw std::invalid_argument("GenerationConfig: max_accel_jump must be positive");
    }
  }

  double ThetaFor(const int dof) const
  {
    return theta > 0.0 ? theta : DefaultTheta(dof);
  }
};

/// Perturbation settings recorded once a bundle has been annotated.
struct AnnotationInfo
{
  bool annotated = false;
  uint64_t perturbations = 0;
  double theta = 0.0;
  uint64_t rng_seed = 0;

  friend bool operator==(const AnnotationInfo&, const AnnotationInfo&) = default;
};

struct BundleMetadata
{
  uint32_t schema_version = kBundleSchemaVersion;
  uint64_t robot_digest = 0;
  uint64_t world_digest = 0;
  GenerationConfig generation;
  AnnotationInfo annotation;
};

inline bool operator==(const GenerationConfig& a, const GenerationConfig& b)
{
  return a.n_edges == b.n_edges && a.steps_min == b.steps_min &&
         a.steps_max == b.steps_max && a.segment_len == b.segment_len &&
         a.dt == b.dt && a.rng_seed == b.rng_seed &&
         a.max_accel_jump == b.max_accel_jump &&
         a.attempt_budget_factor == b.attempt_budget_factor &&
         a.theta == b.theta;
}

inline bool operator==(const BundleMetadata& a, const BundleMetadata& b)
{
  return a.schema_version == b.schema_version &&
         a.robot_digest == b.robot_digest && a.world_digest == b.world_digest &&
         a.generation == b.generation && a.annotation == b.annotation;
}

/// The multi-query discretization: immutable edges, a start-state index and
/// provenance. Safe for concurrent readers once built.
class EdgeBundle
{
public:
  EdgeBundle() = default;

  EdgeBundle(std::vector<Edge> edges, const double theta, BundleMetadata metadata)
      : edges_(std::move(edges)), theta_(theta), metadata_(metadata)
  {
    if (!(theta_ > 0.0))
    {
      throw std::invalid_argument("EdgeBundle: theta must be positive");
    }
    for (size_t i = 0; i < edges_.size(); ++i)
    {
      if (edges_[i].id != i)
      {
        throw std::invalid_argument("EdgeBundle: edge ids must equal ordinals");
      }
    }
    std::vector<Eigen::VectorXd> starts;
    starts.reserve(edges_.size());
    for (const auto& e : edges_)
    {
      starts.push_back(e.q0);
    }
    index_ = KdTree(std::move(starts));
  }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(const uint64_t id) const { return edges_.at(id); }
  size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  double theta() const { return theta_; }
  const BundleMetadata& metadata() const { return metadata_; }

  /// Edge ids whose start lies within `radius` of q, nearest first, ties by id.
  std::vector<uint64_t> Neighbors(const JointVector& q, const double radius) const
  {
    if (!(radius > 0.0))
    {
      throw std::invalid_argument("Neighbors: radius must be positive");
    }
    std::vector<uint64_t> ids;
    for (const auto& hit : index_.RadiusSearch(q, radius))
    {
      ids.push_back(hit.index);
    }
    return ids;
  }

  std::vector<uint64_t> Neighbors(const JointVector& q) const
  {
    return Neighbors(q, theta_);
  }

  friend bool operator==(const EdgeBundle& a, const EdgeBundle& b)
  {
    return a.theta_ == b.theta_ && a.metadata_ == b.metadata_ &&
           a.edges_ == b.edges_;
  }

private:
  std::vector<Edge> edges_;
  double theta_ = 1.0;
  BundleMetadata metadata_;
  KdTree index_;
};

enum class RejectionReason
{
  kStartInCollision,
  kLimitViolation,
  kTorqueViolation,
  kContinuityViolation,
  kRolloutCollision,
};

inline constexpr std::array<RejectionReason, 5> kAllRejectionReasons = {
    RejectionReason::kStartInCollision, RejectionReason::kLimitViolation,
    RejectionReason::kTorqueViolation, RejectionReason::kContinuityViolation,
    RejectionReason::kRolloutCollision};

inline std::string_view ToString(const RejectionReason r)
{
  switch (r)
  {
    case RejectionReason::kStartInCollision: return "start_in_collision";
    case RejectionReason::kLimitViolation: return "limit_violation";
    case RejectionReason::kTorqueViolation: return "torque_violation";
    case RejectionReason::kContinuityViolation: return "continuity_violation";
    case RejectionReason::kRolloutCollision: return "rollout_collision";
  }
  return "unknown";
}

inline RejectionReason ToRejection(const CheckResult r)
{
  switch (r)
  {
    case CheckResult::kLimitViolation: return RejectionReason::kLimitViolation;
    case CheckResult::kTorqueViolation: return RejectionReason::kTorqueViolation;
    case CheckResult::kContinuityViolation:
      return RejectionReason::kContinuityViolation;
    default: return RejectionReason::kRolloutCollision;
  }
}

/// Everything edge generation and validation need about the robot and scene.
struct Scene
{
  RobotModel model;
  WorldModel world;
  Limits limits;

  void Validate() const
  {
    model.Validate();
    world.Validate();
    limits.Validate(model.Dof());
  }

  uint64_t RobotDigest() const { return lazykdp::RobotDigest(model, limits); }
  uint64_t WorldDigest() const { return lazykdp::WorldDigest(world); }

  CheckContext Checks(const double max_accel_jump) const
  {
    return CheckContext{model, world, limits, max_accel_jump};
  }
};

/// Samples one Monte Carlo rollout: a uniform collision-free start, a uniform
/// step count, and velocity commands re-sampled every segment_len steps.
/// Returns the edge (id unset, probabilities at their unanalyzed defaults) or
/// the first check that failed.
inline std::variant<Edge, RejectionReason> GenerateEdge(
    const Scene& scene, const GenerationConfig& config, Rng& rng)
{
  const int m = scene.model.Dof();
  const Limits& lim = scene.limits;
  JointVector q0(m);
  for (int i = 0; i < m; ++i)
  {
    q0[i] = rng.Uniform(lim.q_min[i], lim.q_max[i]);
  }
  if (StateInCollision(scene.model, scene.world, q0))
  {
    return RejectionReason::kStartInCollision;
  }
  const auto steps = static_cast<size_t>(
      rng.UniformInt(config.steps_min, config.steps_max));
  std::vector<JointVector> controls;
  controls.reserve(steps);
  JointVector command(m);
  for (size_t k = 0; k < steps; ++k)
  {
    if (k % config.segment_len == 0)
    {
      for (int i = 0; i < m; ++i)
      {
        command[i] = rng.Uniform(lim.dq_min[i], lim.dq_max[i]);
      }
    }
    controls.push_back(command);
  }
  const Rollout rollout =
      Propagate(scene.model, lim, q0, controls, config.dt);
  const CheckResult check = CheckRollout(
      scene.Checks(config.max_accel_jump), rollout, controls, config.dt);
  if (check != CheckResult::kValid)
  {
    return ToRejection(check);
  }
  Edge edge;
  edge.q0 = q0;
  edge.controls = std::move(controls);
  edge.dt = config.dt;
  edge.qf = rollout.Terminal();
  return edge;
}

/// Re-propagates an edge from its stored start and re-runs every check.
inline CheckResult RevalidateEdge(const Scene& scene, const Edge& edge,
                                  const double max_accel_jump,
                                  const double qf_tolerance = 1e-9)
{
  const Rollout rollout =
      Propagate(scene.model, scene.limits, edge.q0, edge.controls, edge.dt);
  if ((rollout.Terminal() - edge.qf).lpNorm<Eigen::Infinity>() > qf_tolerance)
  {
    return CheckResult::kLimitViolation;
  }
  if (StateInCollision(scene.model, scene.world, edge.q0))
  {
    return CheckResult::kCollision;
  }
  return CheckRollout(scene.Checks(max_accel_jump), rollout, edge.controls,
                      edge.dt);
}

class BundleBuildError : public std::runtime_error
{
public:
  BundleBuildError(const std::string& what,
                   std::map<RejectionReason, uint64_t> rejections)
      : std::runtime_error(what), rejections_(std::move(rejections))
  {
  }

  const std::map<RejectionReason, uint64_t>& rejections() const
  {
    return rejections_;
  }

private:
  std::map<RejectionReason, uint64_t> rejections_;
};

/// Rejection statistics of a successful build.
struct BuildStats
{
  uint64_t attempts = 0;
  std::map<RejectionReason, uint64_t> rejections;
};

/// Generates exactly config.n_edges edges. Edge i draws from its own substream
/// of (rng_seed, i), so the result does not depend on the thread schedule.
inline EdgeBundle BuildBundle(const Scene& scene, const GenerationConfig& config,
                              BuildStats* stats = nullptr)
{
  scene.Validate();
  config.Validate();
  if (config.n_edges < 1)
  {
    throw std::invalid_argument("BuildBundle: n_edges must be >= 1");
  }
  const uint64_t budget = config.attempt_budget_factor * config.n_edges;
  std::atomic<uint64_t> attempts_used{0};
  std::atomic<bool> exhausted{false};
  std::vector<std::optional<Edge>> slots(config.n_edges);
  std::vector<std::array<uint64_t, kAllRejectionReasons.size()>> counts(
      config.n_edges);

  ParallelFor(config.n_edges, [&](const size_t ordinal) {
    Rng rng = Substream(config.rng_seed, StreamDomain::kEdgeGeneration, ordinal);
    auto& local = counts[ordinal];
    local.fill(0);
    while (!exhausted.load(std::memory_order_relaxed))
    {
      if (attempts_used.fetch_add(1) >= budget)
      {
        exhausted.store(true);
        return;
      }
      auto result = GenerateEdge(scene, config, rng);
      if (auto* edge = std::get_if<Edge>(&result))
      {
        edge->id = ordinal;
        slots[ordinal] = std::move(*edge);
        return;
      }
      ++local[static_cast<size_t>(std::get<RejectionReason>(result))];
    }
  });

  std::map<RejectionReason, uint64_t> totals;
  for (const auto& local : counts)
  {
    for (size_t r = 0; r < local.size(); ++r)
    {
      totals[kAllRejectionReasons[r]] += local[r];
    }
  }
  if (exhausted.load())
  {
    std::ostringstream msg;
    msg << "BuildBundle: attempt budget of " << budget
        << " exhausted; rejections:";
    for (const auto& [reason, count] : totals)
    {
      msg << ' ' << ToString(reason) << '=' << count;
    }
    throw BundleBuildError(msg.str(), totals);
  }
  std::vector<Edge> edges;
  edges.reserve(config.n_edges);
  uint64_t rejected = 0;
  for (auto& slot : slots)
  {
    edges.push_back(std::move(*slot));
  }
  for (const auto& [reason, count] : totals)
  {
    rejected += count;
  }
  if (stats != nullptr)
  {
    stats->attempts = rejected + config.n_edges;
    stats->rejections = totals;
  }
  BundleMetadata meta;
  meta.robot_digest = scene.RobotDigest();
  meta.world_digest = scene.WorldDigest();
  meta.generation = config;
  return EdgeBundle(std::move(edges), config.ThetaFor(scene.model.Dof()), meta);
}
}  // namespace lazykdp
