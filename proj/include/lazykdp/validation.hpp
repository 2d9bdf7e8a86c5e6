#pragma once

#include <limits>
#include <string_view>
#include <vector>

#include "collision.hpp"
#include "dynamics.hpp"

namespace lazykdp
{
/// Outcome of the limit, torque, continuity and collision checks on a
/// rollout. Ordered by check precedence.
enum class CheckResult
{
  kValid,
  kLimitViolation,
  kTorqueViolation,
  kContinuityViolation,
  kCollision,
};

inline std::string_view ToString(const CheckResult r)
{
  switch (r)
  {
    case CheckResult::kValid: return "valid";
    case CheckResult::kLimitViolation: return "limit_violation";
    case CheckResult::kTorqueViolation: return "torque_violation";
    case CheckResult::kContinuityViolation: return "continuity_violation";
    case CheckResult::kCollision: return "collision";
  }
  return "unknown";
}

/// Largest velocity-command jump per unit time allowed between consecutive
/// steps of one rollout. Infinity disables the check.
inline bool CommandsContinuous(const std::vector<JointVector>& controls,
                               const double dt, const double max_accel_jump)
{
  if (max_accel_jump == std::numeric_limits<double>::infinity())
  {
    return true;
  }
  for (size_t k = 1; k < controls.size(); ++k)
  {
    const double jump =
        (controls[k] - controls[k - 1]).lpNorm<Eigen::Infinity>() / dt;
    if (jump > max_accel_jump)
    {
      return false;
    }
  }
  return true;
}

/// Parameters shared by everything that validates rollouts.
struct CheckContext
{
  const RobotModel& model;
  const WorldModel& world;
  const Limits& limits;
  double max_accel_jump = std::numeric_limits<double>::infinity();
};

/// Dynamic feasibility only (no collision).
inline CheckResult CheckFeasibility(const CheckContext& ctx,
                                    const Rollout& rollout,
                                    const std::vector<JointVector>& controls,
                                    const double dt)
{
  if (!rollout.limits.KinematicOk())
  {
    return CheckResult::kLimitViolation;
  }
  if (!rollout.limits.torques_ok)
  {
    return CheckResult::kTorqueViolation;
  }
  if (!CommandsContinuous(controls, dt, ctx.max_accel_jump))
  {
    return CheckResult::kContinuityViolation;
  }
  return CheckResult::kValid;
}

/// All three check classes: state/torque limits, continuity, collision.
inline CheckResult CheckRollout(const CheckContext& ctx, const Rollout& rollout,
                                const std::vector<JointVector>& controls,
                                const double dt)
{
  const CheckResult feasible = CheckFeasibility(ctx, rollout, controls, dt);
  if (feasible != CheckResult::kValid)
  {
    return feasible;
  }
  if (RolloutInCollision(ctx.model, ctx.world, rollout.states))
  {
    return CheckResult::kCollision;
  }
  return CheckResult::kValid;
}
}  // namespace lazykdp
