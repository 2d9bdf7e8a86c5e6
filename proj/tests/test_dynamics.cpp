#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "test_support.hpp"

namespace lazykdp
{
namespace
{
using testing::Vec;

constexpr double kPi = std::numbers::pi;

TEST(Inertia, PointPendulumIsMassTimesLengthSquared)
{
  const RobotModel r = testing::PointPendulum();
  for (const double q : {0.0, 0.7, -2.0})
  {
    const Eigen::MatrixXd m = InertiaMatrix(r, Vec({q}));
    ASSERT_EQ(m.rows(), 1);
    EXPECT_NEAR(m(0, 0), 1.0, 1e-15);
  }
}

TEST(Inertia, TwoLinkStraightMatchesClosedForm)
{
  // Uniform unit rods at q = 0: [[8/3, 5/6], [5/6, 1/3]].
  const Eigen::MatrixXd m = InertiaMatrix(testing::StandardTwoLink(), Vec({0.0, 0.0}));
  EXPECT_NEAR(m(0, 0), 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(m(0, 1), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(m(1, 0), 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(m(1, 1), 1.0 / 3.0, 1e-12);
}

TEST(Inertia, TwoLinkMatchesClosedFormEverywhere)
{
  const RobotModel r =
      RobotModel::UniformRods({0.7, 0.45}, {1.8, 0.9}, 0.0, 0.0, 9.81);
  const testing::TwoLinkOracle oracle(r);
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial)
  {
    const JointVector q = testing::RandomVec(2, kPi, rng);
    const Eigen::MatrixXd m = InertiaMatrix(r, q);
    EXPECT_LT((m - Eigen::MatrixXd(oracle.Inertia(q))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Inertia, SymmetricPositiveDefiniteOnDefaultArm)
{
  const Scene scene = testing::DefaultScene();
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial)
  {
    const JointVector q = testing::RandomIn(scene.limits.q_min, scene.limits.q_max, rng);
    const Eigen::MatrixXd m = InertiaMatrix(scene.model, q);
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Inertia, RejectsWrongDimension)
{
  EXPECT_THROW(InertiaMatrix(testing::StandardTwoLink(), Vec({0.1})),
               std::invalid_argument);
}

TEST(Coriolis, VanishesAtRest)
{
  const Scene scene = testing::DefaultScene();
  const JointVector c =
      CoriolisVector(scene.model, Vec({0.3, -1.0, 2.0}), JointVector::Zero(3));
  EXPECT_EQ(c.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Coriolis, SingleLinkHasNone)
{
  const RobotModel r = RobotModel::UniformRods({0.8}, {2.0}, 0.0, 0.0, 9.81);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial)
  {
    const JointVector c = CoriolisVector(r, testing::RandomVec(1, 3.0, rng),
                                         testing::RandomVec(1, 5.0, rng));
    EXPECT_NEAR(c[0], 0.0, 1e-14);
  }
}

TEST(Coriolis, TwoLinkMatchesClosedFormAndLagrangian)
{
  const RobotModel r = testing::StandardTwoLink();
  const testing::TwoLinkOracle closed(r);
  const testing::LagrangianOracle numeric(
      RobotModel::UniformRods({1.0, 1.0}, {1.0, 1.0}, 0.0, 0.0, 0.0));
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial)
  {
    const JointVector q = testing::RandomVec(2, kPi, rng);
    const JointVector dq = testing::RandomVec(2, 2.0, rng);
    const JointVector c = CoriolisVector(r, q, dq);
    EXPECT_LT((c - JointVector(closed.Coriolis(q, dq))).cwiseAbs().maxCoeff(), 1e-12);
    // Gravity-free, frictionless, zero acceleration: torque is pure Coriolis.
    const JointVector tau = numeric.Torque(q, dq, JointVector::Zero(2));
    EXPECT_LT((c - tau).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Coriolis, SkewSymmetryOfInertiaRateMinusTwoC)
{
  const Scene scene = testing::DefaultScene();
  Rng rng(13);
  constexpr double h = 1e-6;
  for (int trial = 0; trial < 1000; ++trial)
  {
    const JointVector q = testing::RandomIn(scene.limits.q_min, scene.limits.q_max, rng);
    const JointVector dq = testing::RandomVec(3, 1.0, rng);
    const JointVector x = testing::RandomVec(3, 1.0, rng);
    const Eigen::MatrixXd mdot =
        (InertiaMatrix(scene.model, q + h * dq) - InertiaMatrix(scene.model, q - h * dq)) /
        (2 * h);
    const Eigen::MatrixXd n = mdot - 2.0 * CoriolisMatrix(scene.model, q, dq);
    EXPECT_NEAR(x.dot(n * x), 0.0, 1e-6);
  }
}

TEST(Gravity, PendulumValues)
{
  const RobotModel r = testing::PointPendulum();
  EXPECT_NEAR(GravityVector(r, Vec({0.0}))[0], 9.81, 1e-12);
  EXPECT_NEAR(GravityVector(r, Vec({kPi / 2}))[0], 0.0, 1e-12);
}

TEST(Gravity, ZeroGravityGivesZero)
{
  const RobotModel r = testing::FrictionOnly(3);
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial)
  {
    EXPECT_EQ(GravityVector(r, testing::RandomVec(3, kPi, rng)).cwiseAbs().maxCoeff(),
              0.0);
  }
}

TEST(Gravity, TwoLinkMatchesClosedForm)
{
  const RobotModel r =
      RobotModel::UniformRods({0.6, 0.5}, {2.0, 1.2}, 0.0, 0.0, 9.81);
  const testing::TwoLinkOracle oracle(r);
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial)
  {
    const JointVector q = testing::RandomVec(2, kPi, rng);
    EXPECT_LT((GravityVector(r, q) - JointVector(oracle.Gravity(q))).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(Friction, FormulaAndSymmetry)
{
  RobotModel r = testing::PointPendulum();
  r.viscous_friction = {2.0};
  r.coulomb_friction = {1.0};
  EXPECT_DOUBLE_EQ(FrictionVector(r, Vec({3.0}))[0], 7.0);
  EXPECT_DOUBLE_EQ(FrictionVector(r, Vec({-3.0}))[0], -7.0);
  EXPECT_EQ(FrictionVector(r, Vec({0.0}))[0], 0.0);

  const RobotModel arm = testing::DefaultScene().model;
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial)
  {
    const JointVector dq = testing::RandomVec(3, 2.0, rng);
    EXPECT_EQ(FrictionVector(arm, -dq), JointVector(-FrictionVector(arm, dq)));
  }
}

TEST(InverseDynamics, StaticCaseIsGravity)
{
  const Scene scene = testing::DefaultScene();
  const JointVector q = Vec({0.4, -0.9, 1.3});
  const JointVector z = JointVector::Zero(3);
  EXPECT_EQ(InverseDynamics(scene.model, q, z, z), GravityVector(scene.model, q));
}

TEST(InverseDynamics, PureInertia)
{
  const RobotModel r = testing::PointPendulum(0.0);
  EXPECT_NEAR(InverseDynamics(r, Vec({0.3}), Vec({0.0}), Vec({2.0}))[0], 2.0, 1e-14);
}

TEST(InverseDynamics, TwoLinkMatchesSymbolicOracle)
{
  RobotModel r = RobotModel::UniformRods({0.7, 0.45}, {1.8, 0.9}, 0.4, 0.15, 9.81);
  const testing::TwoLinkOracle oracle(r);
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial)
  {
    const JointVector q = testing::RandomVec(2, kPi, rng);
    const JointVector dq = testing::RandomVec(2, 2.0, rng);
    const JointVector ddq = testing::RandomVec(2, 20.0, rng);
    const JointVector expected = oracle.Inertia(q) * ddq + oracle.Coriolis(q, dq) +
                                 oracle.Gravity(q) + FrictionVector(r, dq);
    EXPECT_LT((InverseDynamics(r, q, dq, ddq) - expected).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(InverseDynamics, DefaultArmMatchesLagrangianOracle)
{
  const Scene scene = testing::DefaultScene();
  const testing::LagrangianOracle oracle(scene.model);
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial)
  {
    const JointVector q = testing::RandomIn(scene.limits.q_min, scene.limits.q_max, rng);
    const JointVector dq = testing::RandomVec(3, 1.0, rng);
    const JointVector ddq = testing::RandomVec(3, 50.0, rng);
    EXPECT_LT((InverseDynamics(scene.model, q, dq, ddq) - oracle.Torque(q, dq, ddq))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-6);
  }
}

TEST(InverseDynamics, EnergyBalanceWithoutFriction)
{
  // Along q(t) = a + b sin(w t), d/dt (T + V) must equal tau . dq.
  const RobotModel r = RobotModel::UniformRods({0.5, 0.4, 0.3}, {2, 1.5, 1}, 0.0, 0.0, 9.81);
  const testing::LagrangianOracle energy(r);
  const JointVector a = Vec({0.2, -0.5, 0.9});
  const JointVector b = Vec({0.6, 0.8, -0.7});
  const double w = 1.7;
  const auto state = [&](double t) {
    return std::tuple<JointVector, JointVector, JointVector>{
        a + b * std::sin(w * t), b * (w * std::cos(w * t)),
        b * (-w * w * std::sin(w * t))};
  };
  const auto total = [&](double t) {
    const auto [q, dq, ddq] = state(t);
    (void)ddq;
    const Eigen::MatrixXd m = InertiaMatrix(r, q);
    return 0.5 * dq.dot(m * dq) + energy.Potential(q);
  };
  constexpr double h = 1e-4;
  for (double t = 0.0; t < 4.0; t += 0.37)
  {
    const auto [q, dq, ddq] = state(t);
    const double power = InverseDynamics(r, q, dq, ddq).dot(dq);
    const double rate = (total(t + h) - total(t - h)) / (2 * h);
    EXPECT_NEAR(rate, power, 1e-6);
  }
}

TEST(Propagate, SingleEulerStep)
{
  const RobotModel r = testing::PointPendulum();
  const Limits lim = testing::GenerousLimits(1);
  const Rollout out = Propagate(r, lim, Vec({0.0}), {Vec({0.9})}, 0.1);
  ASSERT_EQ(out.states.size(), 2u);
  EXPECT_NEAR(out.Terminal()[0], 0.09, 1e-15);
  EXPECT_NEAR(out.accelerations[0][0], 9.0, 1e-12);
  EXPECT_NEAR(out.duration, 0.1, 1e-15);
}

TEST(Propagate, ZeroCommandsHoldStateWithGravityTorques)
{
  const Scene scene = testing::DefaultScene();
  const JointVector q0 = Vec({0.3, 0.2, -0.4});
  const std::vector<JointVector> controls(5, JointVector::Zero(3));
  const Rollout out = Propagate(scene.model, scene.limits, q0, controls, 0.02);
  EXPECT_EQ(out.Terminal(), q0);
  for (const auto& tau : out.torques)
  {
    EXPECT_EQ(tau, GravityVector(scene.model, q0));
  }
}

TEST(Propagate, FirstStepCountsSpinUp)
{
  const Scene scene = testing::DefaultScene();
  const std::vector<JointVector> controls(3, Vec({0.5, 0.0, -0.5}));
  const Rollout out = Propagate(scene.model, scene.limits, JointVector::Zero(3), controls, 0.02);
  EXPECT_NEAR(out.accelerations[0][0], 25.0, 1e-12);
  EXPECT_NEAR(out.accelerations[0][2], -25.0, 1e-12);
  EXPECT_EQ(out.accelerations[1], JointVector::Zero(3));
}

TEST(Propagate, TranslationInvarianceWithoutGravity)
{
  const RobotModel r = testing::FrictionOnly(3);
  const Limits lim = testing::GenerousLimits(3);
  Rng rng(37);
  std::vector<JointVector> controls;
  for (int k = 0; k < 25; ++k)
  {
    controls.push_back(testing::RandomVec(3, 0.9, rng));
  }
  const JointVector q0 = Vec({0.1, 0.2, 0.3});
  const JointVector delta = Vec({0.05, -0.02, 0.11});
  const Rollout a = Propagate(r, lim, q0, controls, 0.02);
  const Rollout b = Propagate(r, lim, q0 + delta, controls, 0.02);
  for (size_t k = 0; k < a.states.size(); ++k)
  {
    EXPECT_LT((b.states[k] - a.states[k] - delta).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Propagate, Deterministic)
{
  const Scene scene = testing::DefaultScene();
  Rng rng(41);
  std::vector<JointVector> controls;
  for (int k = 0; k < 30; ++k)
  {
    controls.push_back(testing::RandomVec(3, 0.9, rng));
  }
  const Rollout a = Propagate(scene.model, scene.limits, Vec({0.1, 0.5, -1}), controls, 0.02);
  const Rollout b = Propagate(scene.model, scene.limits, Vec({0.1, 0.5, -1}), controls, 0.02);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.torques, b.torques);
  EXPECT_EQ(a.accelerations, b.accelerations);
}

TEST(Propagate, FlagsLimitViolations)
{
  const Scene scene = testing::DefaultScene();
  // Velocity 1.0 sits on the open bound.
  const Rollout v = Propagate(scene.model, scene.limits, JointVector::Zero(3),
                              {Vec({1.0, 0, 0})}, 0.02);
  EXPECT_FALSE(v.limits.velocities_ok);
  // Jumping to 0.9 rad/s in one 2 ms step is 450 rad/s^2.
  const Rollout a = Propagate(scene.model, scene.limits, JointVector::Zero(3),
                              {Vec({0.9, 0, 0})}, 0.002);
  EXPECT_FALSE(a.limits.accelerations_ok);
  EXPECT_TRUE(a.limits.velocities_ok);
  const Rollout s = Propagate(scene.model, scene.limits, Vec({2.79, 0, 0}),
                              std::vector<JointVector>(10, Vec({0.5, 0, 0})), 0.02);
  EXPECT_FALSE(s.limits.states_ok);
}

TEST(Propagate, RejectsBadInput)
{
  const Scene scene = testing::DefaultScene();
  EXPECT_THROW(Propagate(scene.model, scene.limits, JointVector::Zero(3), {}, 0.02),
               std::invalid_argument);
  EXPECT_THROW(Propagate(scene.model, scene.limits, JointVector::Zero(3),
                         {JointVector::Zero(3)}, 0.0),
               std::invalid_argument);
  EXPECT_THROW(Propagate(scene.model, scene.limits, JointVector::Zero(3),
                         {Vec({NAN, 0, 0})}, 0.02),
               std::runtime_error);
}

TEST(Robot, ValidationRejectsBadModels)
{
  RobotModel r = testing::StandardTwoLink();
  r.com_offset[0] = 1.5;
  EXPECT_THROW(r.Validate(), std::invalid_argument);
  r = testing::StandardTwoLink();
  r.link_mass[1] = 0.0;
  EXPECT_THROW(r.Validate(), std::invalid_argument);
  Limits lim = Limits::DefaultArm();
  lim.dq_min[0] = lim.dq_max[0];
  EXPECT_THROW(lim.Validate(3), std::invalid_argument);
}
}  // namespace
}  // namespace lazykdp
