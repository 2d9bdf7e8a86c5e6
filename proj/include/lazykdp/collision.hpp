#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "robot.hpp"

namespace lazykdp
{
struct Obstacle
{
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
};

/// Static planar environment: disc obstacles, a common capsule radius for
/// every link, and the joint-space step used when checking rollouts.
struct WorldModel
{
  std::vector<Obstacle> obstacles;
  double link_radius = 0.04;
  double collision_resolution = 0.05;

  void Validate() const
  {
    if (!(link_radius > 0.0) || !(collision_resolution > 0.0))
    {
      throw std::invalid_argument(
          "WorldModel: link_radius and collision_resolution must be > 0");
    }
    for (const auto& o : obstacles)
    {
      if (!(o.radius > 0.0) || !o.center.allFinite())
      {
        throw std::invalid_argument("WorldModel: obstacle radius must be > 0");
      }
    }
  }
};

/// Joint positions of the planar arm; joints[0] is the base at the origin and
/// joints[m] the tip.
struct LinkPose
{
  std::vector<Eigen::Vector2d> joints;

  size_t SegmentCount() const { return joints.empty() ? 0 : joints.size() - 1; }
  const Eigen::Vector2d& Tip() const { return joints.back(); }
};

inline LinkPose ForwardKinematics(const RobotModel& model, const JointVector& q)
{
  RequireDof(q, model.Dof(), "ForwardKinematics");
  LinkPose pose;
  pose.joints.reserve(q.size() + 1);
  pose.joints.emplace_back(0.0, 0.0);
  double phi = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
  {
    phi += q[i];
    pose.joints.push_back(pose.joints.back() +
                          model.link_length[i] *
                              Eigen::Vector2d(std::cos(phi), std::sin(phi)));
  }
  return pose;
}

inline double PointSegmentDistance(const Eigen::Vector2d& p,
                                   const Eigen::Vector2d& a,
                                   const Eigen::Vector2d& b)
{
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

namespace detail
{
inline double Cross(const Eigen::Vector2d& u, const Eigen::Vector2d& v)
{
  return u.x() * v.y() - u.y() * v.x();
}

inline bool SegmentsIntersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& c, const Eigen::Vector2d& d)
{
  const double d1 = Cross(b - a, c - a);
  const double d2 = Cross(b - a, d - a);
  const double d3 = Cross(d - c, a - c);
  const double d4 = Cross(d - c, b - c);
  return ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
         ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0));
}
}  // namespace detail

/// Exact closest distance between two planar segments.
inline double SegmentSegmentDistance(const Eigen::Vector2d& a,
                                     const Eigen::Vector2d& b,
                                     const Eigen::Vector2d& c,
                                     const Eigen::Vector2d& d)
{
  if (detail::SegmentsIntersect(a, b, c, d))
  {
    return 0.0;
  }
  return std::min({PointSegmentDistance(a, c, d), PointSegmentDistance(b, c, d),
                   PointSegmentDistance(c, a, b), PointSegmentDistance(d, a, b)});
}

/// Capsule pair test between links i and j. Adjacent links share a joint and
/// are never tested against each other.
inline bool LinksCollide(const LinkPose& pose, const size_t i, const size_t j,
                         const double link_radius)
{
  const double dist = SegmentSegmentDistance(pose.joints[i], pose.joints[i + 1],
                                             pose.joints[j], pose.joints[j + 1]);
  return dist < 2.0 * link_radius;
}

inline bool PoseInCollision(const LinkPose& pose, const WorldModel& world)
{
  const size_t links = pose.SegmentCount();
  for (size_t i = 0; i < links; ++i)
  {
    const auto& a = pose.joints[i];
    const auto& b = pose.joints[i + 1];
    for (const auto& o : world.obstacles)
    {
      if (PointSegmentDistance(o.center, a, b) < o.radius + world.link_radius)
      {
        return true;
      }
    }
  }
  for (size_t i = 0; i < links; ++i)
  {
    for (size_t j = i + 2; j < links; ++j)
    {
      if (LinksCollide(pose, i, j, world.link_radius))
      {
        return true;
      }
    }
  }
  return false;
}

inline bool StateInCollision(const RobotModel& model, const WorldModel& world,
                             const JointVector& q)
{
  return PoseInCollision(ForwardKinematics(model, q), world);
}

/// Checks every state and linear interpolants between consecutive states so
/// that no joint moves more than `resolution` between checked configurations.
inline bool RolloutInCollision(const RobotModel& model, const WorldModel& world,
                               const std::vector<JointVector>& states,
                               const double resolution)
{
  if (states.empty())
  {
    throw std::invalid_argument("RolloutInCollision: empty state sequence");
  }
  if (StateInCollision(model, world, states.front()))
  {
    return true;
  }
  for (size_t k = 1; k < states.size(); ++k)
  {
    const JointVector delta = states[k] - states[k - 1];
    const double span = delta.lpNorm<Eigen::Infinity>();
    const int steps = std::max(1, static_cast<int>(std::ceil(span / resolution)));
    for (int s = 1; s <= steps; ++s)
    {
      const JointVector q =
          s == steps ? states[k]
                     : JointVector(states[k - 1] +
                                   (static_cast<double>(s) / steps) * delta);
      if (StateInCollision(model, world, q))
      {
        return true;
      }
    }
  }
  return false;
}

inline bool RolloutInCollision(const RobotModel& model, const WorldModel& world,
                               const std::vector<JointVector>& states)
{
  return RolloutInCollision(model, world, states, world.collision_resolution);
}
}  // namespace lazykdp
