#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bundle.hpp"

namespace lazykdp
{
struct GoalRegion
{
  JointVector center;
  double radius = 0.25;

  bool Contains(const JointVector& q) const
  {
    return (q - center).norm() <= radius;
  }
  /// Heuristic: distance to the goal center.
  double Distance(const JointVector& q) const { return (q - center).norm(); }
};

struct Query
{
  JointVector start;
  GoalRegion goal;
  double time_budget = 10.0;
  uint64_t rng_seed = 1;
  /// Optional iteration cap (0 = none). With a cap and an ample time budget a
  /// run is reproducible bit-for-bit regardless of machine speed.
  uint64_t max_iterations = 0;
};

struct Waypoint
{
  double time = 0.0;
  JointVector q;
  JointVector dq;
};

/// A fully simulated path. Each segment is one rollout (a bundle edge or a
/// baseline extension); every segment spins up from a zero command, exactly as
/// when it was validated in isolation.
struct Trajectory
{
  std::vector<Waypoint> waypoints;
  std::vector<std::vector<JointVector>> segments;
  /// Bundle edge id per segment, -1 for baseline extensions.
  std::vector<int64_t> edge_ids;
  double dt = 0.0;
  double cost = 0.0;

  size_t StepCount() const
  {
    size_t n = 0;
    for (const auto& s : segments)
    {
      n += s.size();
    }
    return n;
  }
};

/// Simulates segments in order from start and assembles the waypoint list.
inline Trajectory AssembleTrajectory(const Scene& scene, const JointVector& start,
                                     std::vector<std::vector<JointVector>> segments,
                                     std::vector<int64_t> edge_ids,
                                     const double dt)
{
  const int m = scene.model.Dof();
  Trajectory traj;
  traj.dt = dt;
  JointVector q = start;
  size_t step = 0;
  for (const auto& controls : segments)
  {
    const Rollout r = Propagate(scene.model, scene.limits, q, controls, dt);
    for (size_t k = 0; k < controls.size(); ++k, ++step)
    {
      traj.waypoints.push_back(
          Waypoint{dt * static_cast<double>(step), r.states[k], controls[k]});
    }
    q = r.Terminal();
  }
  traj.waypoints.push_back(
      Waypoint{dt * static_cast<double>(step), q, JointVector::Zero(m)});
  for (size_t k = 1; k < traj.waypoints.size(); ++k)
  {
    traj.cost += (traj.waypoints[k].q - traj.waypoints[k - 1].q).norm();
  }
  traj.segments = std::move(segments);
  traj.edge_ids = std::move(edge_ids);
  return traj;
}

struct TrajectoryCheck
{
  bool ok = true;
  std::string reason;

  static TrajectoryCheck Fail(std::string why) { return {false, std::move(why)}; }
};

/// Independent end-to-end revalidation: re-simulates every segment from the
/// query start, re-runs all check classes, and confirms the recorded
/// waypoints, timing, cost and goal membership.
inline TrajectoryCheck ValidateTrajectory(const Scene& scene,
                                          const double max_accel_jump,
                                          const Trajectory& traj,
                                          const Query& query)
{
  constexpr double kStateTolerance = 1e-9;
  if (traj.waypoints.empty())
  {
    return TrajectoryCheck::Fail("no waypoints");
  }
  if (traj.waypoints.front().q.size() != query.start.size() ||
      traj.waypoints.front().q != query.start)
  {
    return TrajectoryCheck::Fail("first waypoint is not the query start");
  }
  if (!traj.segments.empty() && !(traj.dt > 0.0))
  {
    return TrajectoryCheck::Fail("non-positive dt");
  }
  for (size_t k = 1; k < traj.waypoints.size(); ++k)
  {
    if (!(traj.waypoints[k].time > traj.waypoints[k - 1].time))
    {
      return TrajectoryCheck::Fail("times not strictly increasing");
    }
  }
  if (traj.StepCount() + 1 != traj.waypoints.size())
  {
    return TrajectoryCheck::Fail("waypoint count does not match segments");
  }
  const CheckContext ctx = scene.Checks(max_accel_jump);
  JointVector q = query.start;
  size_t step = 0;
  double cost = 0.0;
  for (const auto& controls : traj.segments)
  {
    if (controls.empty())
    {
      return TrajectoryCheck::Fail("empty segment");
    }
    const Rollout r = Propagate(scene.model, scene.limits, q, controls, traj.dt);
    const CheckResult check = CheckRollout(ctx, r, controls, traj.dt);
    if (check != CheckResult::kValid)
    {
      return TrajectoryCheck::Fail("segment fails " +
                                   std::string(ToString(check)));
    }
    for (size_t k = 0; k < controls.size(); ++k, ++step)
    {
      const Waypoint& w = traj.waypoints[step];
      if ((w.q - r.states[k]).lpNorm<Eigen::Infinity>() > kStateTolerance ||
          w.dq != controls[k])
      {
        return TrajectoryCheck::Fail("recorded waypoint differs from simulation");
      }
      cost += (r.states[k + 1] - r.states[k]).norm();
    }
    q = r.Terminal();
  }
  if ((traj.waypoints.back().q - q).lpNorm<Eigen::Infinity>() > kStateTolerance)
  {
    return TrajectoryCheck::Fail("final waypoint differs from simulation");
  }
  if (!query.goal.Contains(q))
  {
    return TrajectoryCheck::Fail("final state outside the goal region");
  }
  if (std::abs(cost - traj.cost) > 1e-9 * std::max(1.0, cost))
  {
    return TrajectoryCheck::Fail("recorded cost differs from arclength");
  }
  return {};
}

/// CSV with header time,q0..q{m-1},dq0..dq{m-1}.
inline void WriteTrajectoryCsv(const Trajectory& traj, std::ostream& out)
{
  const Eigen::Index m =
      traj.waypoints.empty() ? 0 : traj.waypoints.front().q.size();
  out << "time";
  for (Eigen::Index i = 0; i < m; ++i)
  {
    out << ",q" << i;
  }
  for (Eigen::Index i = 0; i < m; ++i)
  {
    out << ",dq" << i;
  }
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& w : traj.waypoints)
  {
    out << w.time;
    for (Eigen::Index i = 0; i < m; ++i)
    {
      out << ',' << w.q[i];
    }
    for (Eigen::Index i = 0; i < m; ++i)
    {
      out << ',' << w.dq[i];
    }
    out << '\n';
  }
}

inline void WriteTrajectoryCsv(const Trajectory& traj,
                               const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  WriteTrajectoryCsv(traj, out);
}
}  // namespace lazykdp
