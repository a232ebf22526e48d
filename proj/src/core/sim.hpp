// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "core/bt.hpp"
#include "core/rewards.hpp"
#include "core/skills.hpp"
#include "core/world.hpp"

namespace btlab {

// Kinematic arm: yaw at the base, two pitch joints, and a rigid tool that
// points straight down from the wrist. The end effector frame sits at the
// peg tip and keeps the identity orientation; the task never commands a
// rotation, so the rotational rows of the Jacobian are zero.
struct ArmModel {
  double base_height = 0.55;
  double link_offset = 0.10;  // radial offset from the yaw axis
  double link_upper = 0.35;
  double link_fore = 0.30;
  double tool_length = 0.20;

  Eigen::Vector3d joint_lower{-3.141592653589793, -2.00, -3.05};
  Eigen::Vector3d joint_upper{3.141592653589793, 2.40, -0.02};
  double velocity_limit = 2.5;  // per joint, rad/s

  // Diagonal task-space stiffness and damping; rows 3..5 act on the
  // rotational error, which is identically zero here.
  Eigen::Matrix<double, 6, 1> stiffness{
      (Eigen::Matrix<double, 6, 1>() << 80, 80, 80, 1, 1, 1).finished()};
  Eigen::Matrix<double, 6, 1> damping{
      (Eigen::Matrix<double, 6, 1>() << 0.5, 0.5, 0.5, 0.01, 0.01, 0.01)
          .finished()};
};

struct Pose {
  Eigen::Vector3d position{0.0, 0.0, 0.0};
  Eigen::Quaterniond orientation{1.0, 0.0, 0.0, 0.0};
};

struct ArmState {
  Eigen::Vector3d q{0.0, 0.0, 0.0};
  Eigen::Vector3d qdot{0.0, 0.0, 0.0};
  Pose x_ee;                              // kinematic tool center point
  Eigen::Vector3d peg_tip{0.0, 0.0, 0.0}; // contact-resolved tip
  bool in_contact = false;
  bool captured = false;   // peg caught by the hole; latches
  bool faulted = false;
  double contact_pressure = 0.0;  // commanded penetration proxy
  double t = 0.0;
};

Pose forward_kinematics(const ArmModel& m, const Eigen::Vector3d& q);

// Geometric Jacobian of the tool center point, 6 x 3 (translation on top,
// rotation rows zero by the orientation-free tool convention).
Eigen::Matrix<double, 6, 3> jacobian(const ArmModel& m,
                                     const Eigen::Vector3d& q);

// Elbow-up closed-form solution placing the tip at `target`. Returns false
// when the target is out of reach; q_out then holds the clamped best effort.
bool inverse_kinematics(const ArmModel& m, const Eigen::Vector3d& target,
                        Eigen::Vector3d& q_out);

ArmState make_arm_state(const ArmModel& m, const Eigen::Vector3d& q);

// One control step toward attractor position x_d: joint velocity command
// q_dot = J^T (K (x_d - x_ee) - D J q_dot_prev), per-joint velocity clamp,
// semi-implicit Euler position update, joint limit clamp.
void control_step(const ArmModel& m, ArmState& s, const Eigen::Vector3d& x_d,
                  double dt);

// Resolves the reported peg tip against the surface and hole, maintains the
// capture latch, and refreshes the pressure proxy. `x_d_raw` is the
// unconstrained attractor (its commanded penetration is the pressure);
// `spiral_speed` enters the capture threshold.
void contact_step(const WorldModel& w, ArmState& s,
                  const Eigen::Vector3d& x_d_raw, double spiral_speed);

// Anything the episode loop can draw commands from: a behavior tree over a
// parameter vector, a network, or a scripted fixture.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset() {}
  virtual TickStatus step(Blackboard& bb) = 0;
};

struct EpisodeStep {
  double t = 0.0;
  Eigen::Vector3d q{0.0, 0.0, 0.0};
  Eigen::Vector3d x_ee{0.0, 0.0, 0.0};
  Eigen::Vector3d peg_tip{0.0, 0.0, 0.0};
  Eigen::Vector3d x_d{0.0, 0.0, 0.0};
  double r_goal = 0.0;   // raw shaping terms
  double r_avoid = 0.0;
  double r_hole = 0.0;
  double total = 0.0;    // weighted by the episode's reward spec
  TickStatus status = TickStatus::Running;
  bool in_contact = false;
  bool captured = false;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  bool success = false;
  bool faulted = false;
  bool penetrated = false;  // obstacle distance reached zero
  double min_obstacle_distance = std::numeric_limits<double>::infinity();
  TickStatus final_status = TickStatus::Running;
  double dt = 0.01;
};

struct EpisodeConfig {
  int max_steps = 1000;
  double dt = 0.01;
  Eigen::Vector3d initial_q{0.0, 0.0, 0.0};
  RewardSpec rewards;
  // Optional external success predicate; ends the episode in success.
  std::function<bool(const ArmState&)> goal_reached;
};

// Ticks the policy once per control step (1:1), integrates the attractor,
// the controller, and the contact resolution, and records every step.
// Deterministic: equal inputs give bit-identical logs.
EpisodeLog run_episode(const ArmModel& m, const WorldModel& w, Policy& policy,
                       const EpisodeConfig& cfg);

// CSV with one row per step; doubles are printed with %.17g so equal logs
// produce byte-identical files.
std::string episode_csv(const EpisodeLog& log);
void write_episode_csv(const EpisodeLog& log, const std::string& path);

}  // namespace btlab
