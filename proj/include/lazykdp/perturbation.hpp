#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bundle.hpp"

namespace lazykdp
{
struct PerturbationConfig
{
  uint64_t perturbations = 200;
  /// Disturbance radius; <= 0 means "use the bundle's theta".
  double theta = 0.0;
  uint64_t rng_seed = 7;
};

struct PerturbationReport
{
  uint64_t p_total = 0;
  uint64_t p_valid = 0;
  uint64_t n_collide = 0;
  uint64_t n_within_half_theta = 0;
  double max_end_error = 0.0;
  double p_lazy_prop = 0.0;
  double p_collision = 0.0;
};

/// Uniform sample from the m-ball of the given radius, origin excluded.
inline JointVector SampleBall(const int dof, const double radius, Rng& rng)
{
  JointVector v(dof);
  while (true)
  {
    for (int i = 0; i < dof; ++i)
    {
      v[i] = rng.Uniform(-radius, radius);
    }
    const double n = v.norm();
    if (n > 0.0 && n <= radius)
    {
      return v;
    }
  }
}

/// Empirical lazy-propagation and collision probabilities of one edge.
///
/// Each trial re-propagates the edge's controls from q0 + dq, dq uniform in
/// the theta-ball. Colliding trials count toward n_collide; trials that are
/// collision-free and dynamically feasible are valid, and a valid trial is
/// within tolerance when its end state lies strictly closer than theta/2 to
/// the stored qf.
inline PerturbationReport AnalyzeEdge(const Scene& scene, const Edge& edge,
                                      const uint64_t perturbations,
                                      const double theta,
                                      const double max_accel_jump, Rng& rng)
{
  if (!(theta > 0.0))
  {
    throw std::invalid_argument("AnalyzeEdge: theta must be positive");
  }
  if (perturbations < 1)
  {
    throw std::invalid_argument("AnalyzeEdge: need at least one perturbation");
  }
  const int m = scene.model.Dof();
  const CheckContext ctx = scene.Checks(max_accel_jump);
  PerturbationReport report;
  report.p_total = perturbations;
  for (uint64_t t = 0; t < perturbations; ++t)
  {
    const JointVector start = edge.q0 + SampleBall(m, theta, rng);
    const Rollout rollout =
        Propagate(scene.model, scene.limits, start, edge.controls, edge.dt);
    if (RolloutInCollision(scene.model, scene.world, rollout.states))
    {
      ++report.n_collide;
      continue;
    }
    if (CheckFeasibility(ctx, rollout, edge.controls, edge.dt) !=
        CheckResult::kValid)
    {
      continue;
    }
    ++report.p_valid;
    const double error = (rollout.Terminal() - edge.qf).norm();
    report.max_end_error = std::max(report.max_end_error, error);
    if (error < 0.5 * theta)
    {
      ++report.n_within_half_theta;
    }
  }
  report.p_collision = static_cast<double>(report.n_collide) /
                       static_cast<double>(report.p_total);
  report.p_lazy_prop = report.p_valid == 0
                           ? 0.0
                           : static_cast<double>(report.n_within_half_theta) /
                                 static_cast<double>(report.p_valid);
  return report;
}

inline PerturbationReport AnalyzeEdge(const Scene& scene,
                                      const EdgeBundle& bundle,
                                      const Edge& edge,
                                      const PerturbationConfig& config)
{
  Rng rng = Substream(config.rng_seed, StreamDomain::kPerturbation, edge.id);
  const double theta = config.theta > 0.0 ? config.theta : bundle.theta();
  return AnalyzeEdge(scene, edge, config.perturbations, theta,
                     bundle.metadata().generation.max_accel_jump, rng);
}

class DigestMismatch : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline void RequireMatchingScene(const EdgeBundle& bundle, const Scene& scene)
{
  if (bundle.metadata().robot_digest != scene.RobotDigest() ||
      bundle.metadata().world_digest != scene.WorldDigest())
  {
    throw DigestMismatch(
        "bundle was generated for a different robot/world configuration");
  }
}

/// Returns a copy of the bundle with every edge's probabilities filled in.
/// Edge e uses substream (rng_seed, e.id), so results are schedule-independent.
inline EdgeBundle AnnotateBundle(const EdgeBundle& bundle, const Scene& scene,
                                 const PerturbationConfig& config,
                                 std::vector<PerturbationReport>* reports = nullptr)
{
  RequireMatchingScene(bundle, scene);
  std::vector<PerturbationReport> local(bundle.size());
  ParallelFor(bundle.size(), [&](const size_t i) {
    local[i] = AnalyzeEdge(scene, bundle, bundle.edge(i), config);
  });
  std::vector<Edge> edges = bundle.edges();
  for (size_t i = 0; i < edges.size(); ++i)
  {
    edges[i].p_lazy_prop = local[i].p_lazy_prop;
    edges[i].p_collision = local[i].p_collision;
  }
  BundleMetadata meta = bundle.metadata();
  meta.annotation.annotated = true;
  meta.annotation.perturbations = config.perturbations;
  meta.annotation.theta = config.theta > 0.0 ? config.theta : bundle.theta();
  meta.annotation.rng_seed = config.rng_seed;
  if (reports != nullptr)
  {
    *reports = std::move(local);
  }
  return EdgeBundle(std::move(edges), bundle.theta(), meta);
}
}  // namespace lazykdp
