#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "robot.hpp"

namespace lazykdp
{
namespace detail
{
/// Absolute link angles phi_i = q_0 + ... + q_i.
inline JointVector AbsoluteAngles(const JointVector& q)
{
  JointVector phi(q.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
  {
    acc += q[i];
    phi[i] = acc;
  }
  return phi;
}

/// Translational Jacobian (2 x m) of link i's center of mass.
inline Eigen::Matrix2Xd ComJacobian(const RobotModel& model,
                                    const JointVector& phi, const int link)
{
  const int m = model.Dof();
  Eigen::Matrix2Xd jac = Eigen::Matrix2Xd::Zero(2, m);
  const Eigen::Vector2d own(-std::sin(phi[link]), std::cos(phi[link]));
  // Column j accumulates the lever arms of links j..link-1 plus the COM arm.
  Eigen::Vector2d tail = model.com_offset[link] * own;
  for (int j = link; j >= 0; --j)
  {
    if (j < link)
    {
      tail += model.link_length[j] *
              Eigen::Vector2d(-std::sin(phi[j]), std::cos(phi[j]));
    }
    jac.col(j) = tail;
  }
  return jac;
}

/// d(ComJacobian(link))/dq_k.
inline Eigen::Matrix2Xd ComJacobianPartial(const RobotModel& model,
                                           const JointVector& phi,
                                           const int link, const int k)
{
  const int m = model.Dof();
  Eigen::Matrix2Xd d = Eigen::Matrix2Xd::Zero(2, m);
  if (k > link)
  {
    return d;
  }
  for (int j = 0; j <= link; ++j)
  {
    Eigen::Vector2d col =
        model.com_offset[link] *
        Eigen::Vector2d(-std::cos(phi[link]), -std::sin(phi[link]));
    for (int s = std::max(j, k); s < link; ++s)
    {
      col += model.link_length[s] *
             Eigen::Vector2d(-std::cos(phi[s]), -std::sin(phi[s]));
    }
    d.col(j) = col;
  }
  return d;
}
}  // namespace detail

/// Joint-space inertia matrix M(q); symmetric positive definite.
inline Eigen::MatrixXd InertiaMatrix(const RobotModel& model,
                                     const JointVector& q)
{
  const int m = model.Dof();
  RequireDof(q, m, "InertiaMatrix");
  const JointVector phi = detail::AbsoluteAngles(q);
  Eigen::MatrixXd inertia = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
  {
    const Eigen::Matrix2Xd jac = detail::ComJacobian(model, phi, i);
    inertia.noalias() += model.link_mass[i] * jac.transpose() * jac;
    // Angular velocity of link i is the sum of joint rates 0..i.
    inertia.topLeftCorner(i + 1, i + 1).array() += model.link_inertia[i];
  }
  return inertia;
}

/// dM/dq_k for every k.
inline std::vector<Eigen::MatrixXd> InertiaPartials(const RobotModel& model,
                                                    const JointVector& q)
{
  const int m = model.Dof();
  RequireDof(q, m, "InertiaPartials");
  const JointVector phi = detail::AbsoluteAngles(q);
  std::vector<Eigen::Matrix2Xd> jacs;
  jacs.reserve(m);
  for (int i = 0; i < m; ++i)
  {
    jacs.push_back(detail::ComJacobian(model, phi, i));
  }
  std::vector<Eigen::MatrixXd> partials(m, Eigen::MatrixXd::Zero(m, m));
  for (int k = 0; k < m; ++k)
  {
    for (int i = k; i < m; ++i)
    {
      const Eigen::Matrix2Xd d = detail::ComJacobianPartial(model, phi, i, k);
      const Eigen::MatrixXd cross = d.transpose() * jacs[i];
      partials[k] += model.link_mass[i] * (cross + cross.transpose());
    }
  }
  return partials;
}

/// Christoffel-symbol Coriolis matrix C(q, dq), so that dM/dt - 2C is skew.
inline Eigen::MatrixXd CoriolisMatrix(const RobotModel& model,
                                      const JointVector& q,
                                      const JointVector& dq)
{
  const int m = model.Dof();
  RequireDof(dq, m, "CoriolisMatrix");
  const auto dm = InertiaPartials(model, q);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
  {
    for (int j = 0; j < m; ++j)
    {
      double sum = 0.0;
      for (int k = 0; k < m; ++k)
      {
        sum += 0.5 * (dm[k](i, j) + dm[j](i, k) - dm[i](j, k)) * dq[k];
      }
      c(i, j) = sum;
    }
  }
  return c;
}

/// Coriolis and centrifugal torque C(q, dq) dq.
inline JointVector CoriolisVector(const RobotModel& model, const JointVector& q,
                                  const JointVector& dq)
{
  return CoriolisMatrix(model, q, dq) * dq;
}

/// Torque that holds q statically against gravity.
inline JointVector GravityVector(const RobotModel& model, const JointVector& q)
{
  const int m = model.Dof();
  RequireDof(q, m, "GravityVector");
  const JointVector phi = detail::AbsoluteAngles(q);
  JointVector g = JointVector::Zero(m);
  if (model.gravity == 0.0)
  {
    return g;
  }
  for (int i = 0; i < m; ++i)
  {
    const Eigen::Matrix2Xd jac = detail::ComJacobian(model, phi, i);
    g += model.link_mass[i] * model.gravity * jac.row(1).transpose();
  }
  return g;
}

/// Viscous plus Coulomb friction; sign(0) is 0.
inline JointVector FrictionVector(const RobotModel& model,
                                  const JointVector& dq)
{
  const int m = model.Dof();
  RequireDof(dq, m, "FrictionVector");
  JointVector f(m);
  for (int i = 0; i < m; ++i)
  {
    const double sign = (dq[i] > 0.0) - (dq[i] < 0.0);
    f[i] = model.viscous_friction[i] * dq[i] + model.coulomb_friction[i] * sign;
  }
  return f;
}

/// tau = M(q) ddq + C(q, dq) dq + g(q) + f(dq).
inline JointVector InverseDynamics(const RobotModel& model, const JointVector& q,
                                   const JointVector& dq,
                                   const JointVector& ddq)
{
  RequireDof(ddq, model.Dof(), "InverseDynamics");
  return InertiaMatrix(model, q) * ddq + CoriolisVector(model, q, dq) +
         GravityVector(model, q) + FrictionVector(model, dq);
}

/// Which limit classes a rollout satisfies.
struct LimitReport
{
  bool states_ok = true;
  bool velocities_ok = true;
  bool accelerations_ok = true;
  bool torques_ok = true;

  bool KinematicOk() const
  {
    return states_ok && velocities_ok && accelerations_ok;
  }
  bool Ok() const { return KinematicOk() && torques_ok; }
};

/// Result of integrating a velocity-command sequence.
///
/// states has controls.size() + 1 entries; accelerations and torques have one
/// entry per control step.
struct Rollout
{
  std::vector<JointVector> states;
  std::vector<JointVector> accelerations;
  std::vector<JointVector> torques;
  double duration = 0.0;
  LimitReport limits;

  const JointVector& Terminal() const { return states.back(); }
};

/// Integrates q_{k+1} = q_k + dt * u_k. Accelerations are backward differences
/// of the command sequence with a zero command before the first step, and
/// torques come from inverse dynamics at (q_k, u_k, a_k).
inline Rollout Propagate(const RobotModel& model, const Limits& limits,
                         const JointVector& q0,
                         const std::vector<JointVector>& controls,
                         const double dt)
{
  const int m = model.Dof();
  RequireDof(q0, m, "Propagate");
  if (!(dt > 0.0))
  {
    throw std::invalid_argument("Propagate: dt must be positive");
  }
  if (controls.empty())
  {
    throw std::invalid_argument("Propagate: empty control sequence");
  }
  Rollout out;
  out.states.reserve(controls.size() + 1);
  out.accelerations.reserve(controls.size());
  out.torques.reserve(controls.size());
  out.states.push_back(q0);
  out.limits.states_ok = Within(q0, limits.q_min, limits.q_max);
  JointVector previous = JointVector::Zero(m);
  for (const JointVector& u : controls)
  {
    RequireDof(u, m, "Propagate control");
    const JointVector& q = out.states.back();
    JointVector accel = (u - previous) / dt;
    JointVector tau = InverseDynamics(model, q, u, accel);
    JointVector next = q + dt * u;
    if (!next.allFinite() || !tau.allFinite())
    {
      throw std::runtime_error("Propagate: non-finite intermediate value");
    }
    out.limits.velocities_ok =
        out.limits.velocities_ok && Within(u, limits.dq_min, limits.dq_max);
    out.limits.accelerations_ok =
        out.limits.accelerations_ok &&
        Within(accel, limits.ddq_min, limits.ddq_max);
    out.limits.torques_ok =
        out.limits.torques_ok && Within(tau, limits.tau_min, limits.tau_max);
    out.limits.states_ok =
        out.limits.states_ok && Within(next, limits.q_min, limits.q_max);
    out.accelerations.push_back(std::move(accel));
    out.torques.push_back(std::move(tau));
    out.states.push_back(std::move(next));
    previous = u;
  }
  out.duration = dt * static_cast<double>(controls.size());
  return out;
}

/// Joint-space arclength of a state sequence.
inline double Arclength(const std::vector<JointVector>& states)
{
  double total = 0.0;
  for (size_t k = 1; k < states.size(); ++k)
  {
    total += (states[k] - states[k - 1]).norm();
  }
  return total;
}
}  // namespace lazykdp
