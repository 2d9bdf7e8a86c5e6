#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lazykdp
{
/// Joint-space vector. Units depend on role: rad, rad/s, rad/s^2 or N*m.
using JointVector = Eigen::VectorXd;

/// Planar serial arm of revolute joints moving in a vertical plane, gravity
/// along -y. Joint angle i is measured relative to link i-1; q = 0 lays the
/// arm straight along +x.
struct RobotModel
{
  std::vector<double> link_length;
  std::vector<double> link_mass;
  std::vector<double> com_offset;
  std::vector<double> link_inertia;
  std::vector<double> viscous_friction;
  std::vector<double> coulomb_friction;
  double gravity = 9.81;

  int Dof() const { return static_cast<int>(link_length.size()); }

  void Validate() const
  {
    const size_t m = link_length.size();
    if (m == 0)
    {
      throw std::invalid_argument("RobotModel: dof must be positive");
    }
    if (link_mass.size() != m || com_offset.size() != m ||
        link_inertia.size() != m || viscous_friction.size() != m ||
        coulomb_friction.size() != m)
    {
      throw std::invalid_argument("RobotModel: per-link arrays differ in length");
    }
    for (size_t i = 0; i < m; ++i)
    {
      if (!(link_length[i] > 0.0) || !(link_mass[i] > 0.0))
      {
        throw std::invalid_argument("RobotModel: lengths and masses must be > 0");
      }
      if (!(com_offset[i] >= 0.0) || com_offset[i] > link_length[i])
      {
        throw std::invalid_argument("RobotModel: com_offset outside [0, length]");
      }
      if (!(link_inertia[i] >= 0.0) || !(viscous_friction[i] >= 0.0) ||
          !(coulomb_friction[i] >= 0.0))
      {
        throw std::invalid_argument(
            "RobotModel: inertia and friction must be non-negative");
      }
    }
    if (!std::isfinite(gravity))
    {
      throw std::invalid_argument("RobotModel: gravity must be finite");
    }
  }

  /// Uniform slender links with the center of mass at mid-length.
  static RobotModel UniformRods(const std::vector<double>& lengths,
                                const std::vector<double>& masses,
                                const double viscous, const double coulomb,
                                const double gravity = 9.81)
  {
    RobotModel model;
    model.link_length = lengths;
    model.link_mass = masses;
    for (size_t i = 0; i < lengths.size(); ++i)
    {
      model.com_offset.push_back(0.5 * lengths[i]);
      model.link_inertia.push_back(masses[i] * lengths[i] * lengths[i] / 12.0);
      model.viscous_friction.push_back(viscous);
      model.coulomb_friction.push_back(coulomb);
    }
    model.gravity = gravity;
    model.Validate();
    return model;
  }

  /// Default three-link desk-scale arm.
  static RobotModel DefaultArm()
  {
    return UniformRods({0.5, 0.4, 0.3}, {2.0, 1.5, 1.0}, 0.5, 0.2);
  }
};

/// Box limits on joint angle, velocity, acceleration and torque. All checks
/// are strict: min < x < max.
struct Limits
{
  JointVector q_min, q_max;
  JointVector dq_min, dq_max;
  JointVector ddq_min, ddq_max;
  JointVector tau_min, tau_max;

  int Dof() const { return static_cast<int>(q_min.size()); }

  void Validate(const int dof) const
  {
    const auto check = [dof](const JointVector& lo, const JointVector& hi,
                             const char* name) {
      if (lo.size() != dof || hi.size() != dof)
      {
        throw std::invalid_argument(std::string("Limits: ") + name +
                                    " has wrong dimension");
      }
      for (int i = 0; i < dof; ++i)
      {
        if (!(lo[i] < hi[i]))
        {
          throw std::invalid_argument(std::string("Limits: ") + name +
                                      " requires min < max");
        }
      }
    };
    check(q_min, q_max, "q");
    check(dq_min, dq_max, "dq");
    check(ddq_min, ddq_max, "ddq");
    check(tau_min, tau_max, "tau");
  }

  /// Symmetric limits: +-bound for each pair.
  static Limits Symmetric(const JointVector& q, const JointVector& dq,
                          const JointVector& ddq, const JointVector& tau)
  {
    return Limits{-q, q, -dq, dq, -ddq, ddq, -tau, tau};
  }

  static Limits DefaultArm()
  {
    return Symmetric(JointVector::Constant(3, 2.8),
                     JointVector::Constant(3, 1.0),
                     JointVector::Constant(3, 100.0),
                     (JointVector(3) << 90.0, 30.0, 8.0).finished());
  }
};

inline bool Within(const JointVector& x, const JointVector& lo,
                   const JointVector& hi)
{
  for (Eigen::Index i = 0; i < x.size(); ++i)
  {
    if (!(lo[i] < x[i] && x[i] < hi[i]))
    {
      return false;
    }
  }
  return true;
}

inline void RequireDof(const JointVector& v, const int dof, const char* what)
{
  if (v.size() != dof)
  {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(dof) + " entries, got " +
                                std::to_string(v.size()));
  }
}
}  // namespace lazykdp
