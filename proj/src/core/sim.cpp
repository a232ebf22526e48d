// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "core/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "core/errors.hpp"

namespace btlab {

Pose forward_kinematics(const ArmModel& m, const Eigen::Vector3d& q) {
  const double c1 = std::cos(q[0]), s1 = std::sin(q[0]);
  const double c2 = std::cos(q[1]), s2 = std::sin(q[1]);
  const double c23 = std::cos(q[1] + q[2]), s23 = std::sin(q[1] + q[2]);
  const double radial = m.link_offset + m.link_upper * c2 + m.link_fore * c23;
  const double rise = m.link_upper * s2 + m.link_fore * s23;
  Pose p;
  p.position = {radial * c1, radial * s1,
                m.base_height + rise - m.tool_length};
  p.orientation = Eigen::Quaterniond::Identity();
  return p;
}

Eigen::Matrix<double, 6, 3> jacobian(const ArmModel& m,
                                     const Eigen::Vector3d& q) {
  const double c1 = std::cos(q[0]), s1 = std::sin(q[0]);
  const double c2 = std::cos(q[1]), s2 = std::sin(q[1]);
  const double c23 = std::cos(q[1] + q[2]), s23 = std::sin(q[1] + q[2]);
  const double radial = m.link_offset + m.link_upper * c2 + m.link_fore * c23;
  const double dr_dq2 = -m.link_upper * s2 - m.link_fore * s23;
  const double dr_dq3 = -m.link_fore * s23;
  const double dz_dq2 = m.link_upper * c2 + m.link_fore * c23;
  const double dz_dq3 = m.link_fore * c23;

  Eigen::Matrix<double, 6, 3> J = Eigen::Matrix<double, 6, 3>::Zero();
  J(0, 0) = -radial * s1;
  J(1, 0) = radial * c1;
  J(0, 1) = dr_dq2 * c1;
  J(1, 1) = dr_dq2 * s1;
  J(2, 1) = dz_dq2;
  J(0, 2) = dr_dq3 * c1;
  J(1, 2) = dr_dq3 * s1;
  J(2, 2) = dz_dq3;
  return J;
}

bool inverse_kinematics(const ArmModel& m, const Eigen::Vector3d& target,
                        Eigen::Vector3d& q_out) {
  const Eigen::Vector3d wrist = target + Eigen::Vector3d(0, 0, m.tool_length);
  const double q1 = (wrist.x() == 0.0 && wrist.y() == 0.0)
                        ? 0.0
                        : std::atan2(wrist.y(), wrist.x());
  const double u = std::hypot(wrist.x(), wrist.y()) - m.link_offset;
  const double v = wrist.z() - m.base_height;
  const double d2 = u * u + v * v;
  const double l2 = m.link_upper, l3 = m.link_fore;
  double cos3 = (d2 - l2 * l2 - l3 * l3) / (2.0 * l2 * l3);
  const bool reachable_raw = cos3 >= -1.0 && cos3 <= 1.0;
  cos3 = std::clamp(cos3, -1.0, 1.0);
  const double q3 = -std::acos(cos3);  // elbow-up branch
  const double q2 =
      std::atan2(v, u) - std::atan2(l3 * std::sin(q3), l2 + l3 * std::cos(q3));

  Eigen::Vector3d q(q1, q2, q3);
  for (int i = 0; i < 3; ++i)
    q[i] = std::clamp(q[i], m.joint_lower[i], m.joint_upper[i]);
  q_out = q;
  const Eigen::Vector3d reached = forward_kinematics(m, q).position;
  return reachable_raw && (reached - target).norm() < 1e-9;
}

ArmState make_arm_state(const ArmModel& m, const Eigen::Vector3d& q) {
  ArmState s;
  s.q = q;
  s.qdot.setZero();
  s.x_ee = forward_kinematics(m, q);
  s.peg_tip = s.x_ee.position;
  s.t = 0.0;
  return s;
}

void control_step(const ArmModel& m, ArmState& s, const Eigen::Vector3d& x_d,
                  double dt) {
  const Eigen::Matrix<double, 6, 3> J = jacobian(m, s.q);
  Eigen::Matrix<double, 6, 1> err = Eigen::Matrix<double, 6, 1>::Zero();
  err.head<3>() = x_d - s.x_ee.position;
  const Eigen::Matrix<double, 6, 1> xdot = J * s.qdot;
  const Eigen::Matrix<double, 6, 1> wrench =
      m.stiffness.cwiseProduct(err) - m.damping.cwiseProduct(xdot);
  Eigen::Vector3d qdot_cmd = J.transpose() * wrench;

  for (int i = 0; i < 3; ++i)
    qdot_cmd[i] = std::clamp(qdot_cmd[i], -m.velocity_limit, m.velocity_limit);

  s.q += qdot_cmd * dt;
  for (int i = 0; i < 3; ++i) {
    if (s.q[i] < m.joint_lower[i]) {
      s.q[i] = m.joint_lower[i];
      qdot_cmd[i] = 0.0;
    } else if (s.q[i] > m.joint_upper[i]) {
      s.q[i] = m.joint_upper[i];
      qdot_cmd[i] = 0.0;
    }
  }
  s.qdot = qdot_cmd;
  s.x_ee = forward_kinematics(m, s.q);
  s.t += dt;
  if (!s.q.allFinite() || !s.qdot.allFinite() ||
      !s.x_ee.position.allFinite() || s.q.cwiseAbs().maxCoeff() > 1e6)
    s.faulted = true;
}

void contact_step(const WorldModel& w, ArmState& s,
                  const Eigen::Vector3d& x_d_raw, double spiral_speed) {
  s.contact_pressure = std::max(0.0, w.surface_height - x_d_raw.z());
  const Eigen::Vector3d tip = s.x_ee.position;
  const Eigen::Vector2d c = w.hole_center();
  const double cr = w.clearance_radius();

  if (!s.captured && tip.z() <= w.surface_height + w.capture_band) {
    const double lateral = (tip.head<2>() - c).norm();
    const double kappa =
        w.capture_kappa0 + w.capture_kappa1 * std::max(0.0, spiral_speed);
    if (lateral <= cr && s.contact_pressure >= kappa) s.captured = true;
  }

  Eigen::Vector3d out = tip;
  if (s.captured) {
    const Eigen::Vector2d rel = out.head<2>() - c;
    const double r = rel.norm();
    if (r > cr) out.head<2>() = c + rel * (cr / r);
    out.z() = std::max(out.z(), w.surface_height - w.hole_depth);
    s.in_contact = tip.z() < w.surface_height;
  } else {
    if (tip.z() < w.surface_height) {
      out.z() = w.surface_height;
      s.in_contact = true;
    } else {
      s.in_contact = false;
    }
  }
  s.peg_tip = out;
}

EpisodeLog run_episode(const ArmModel& m, const WorldModel& w, Policy& policy,
                       const EpisodeConfig& cfg) {
  if (cfg.max_steps <= 0)
    throw_error(ErrorCode::Config, "episode needs a positive step budget");
  if (!(cfg.dt > 0.0)) throw_error(ErrorCode::Config, "dt must be positive");

  EpisodeLog log;
  log.dt = cfg.dt;
  log.steps.reserve(static_cast<size_t>(cfg.max_steps));

  policy.reset();
  ArmState s = make_arm_state(m, cfg.initial_q);
  contact_step(w, s, s.x_ee.position, 0.0);  // resolve the start pose

  AttractorState attr;
  attr.position = s.x_ee.position;
  std::optional<AttractorCommand> cmd;
  Blackboard bb;

  for (int i = 0; i < cfg.max_steps; ++i) {
    bb.end_effector_position = s.x_ee.position;
    bb.end_effector_orientation = s.x_ee.orientation;
    bb.peg_position = s.peg_tip;
    bb.contact_force_proxy = s.contact_pressure;
    bb.elapsed_time = s.t;
    bb.skill_command.reset();

    const TickStatus status = policy.step(bb);
    if (bb.skill_command) cmd = bb.skill_command;

    if (cmd) attr = step_attractor(attr, *cmd, cfg.dt);
    control_step(m, s, attr.position, cfg.dt);
    const double vs = (cmd && attr.spiral_active) ? cmd->spiral_velocity : 0.0;
    contact_step(w, s, attr.position, vs);

    const double d_obs = obstacle_distance(w, s.peg_tip);
    log.min_obstacle_distance = std::min(log.min_obstacle_distance, d_obs);
    if (d_obs <= 0.0) log.penetrated = true;

    const RewardBreakdown r = step_reward(s.peg_tip, w, cfg.rewards);
    EpisodeStep row;
    row.t = s.t;
    row.q = s.q;
    row.x_ee = s.x_ee.position;
    row.peg_tip = s.peg_tip;
    row.x_d = attr.position;
    row.r_goal = r.r_goal;
    row.r_avoid = r.r_avoid;
    row.r_hole = r.r_hole;
    row.total = r.total;
    row.status = status;
    row.in_contact = s.in_contact;
    row.captured = s.captured;
    log.steps.push_back(row);

    if (s.faulted) {
      log.faulted = true;
      log.final_status = status;
      return log;
    }
    if (status == TickStatus::Success) {
      log.success = true;
      log.final_status = status;
      return log;
    }
    if (status == TickStatus::Failure) {
      log.final_status = status;
      return log;
    }
    if (cfg.goal_reached && cfg.goal_reached(s)) {
      log.success = true;
      log.final_status = status;
      return log;
    }
  }
  log.final_status = TickStatus::Running;
  return log;
}

namespace {

void append_g17(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string episode_csv(const EpisodeLog& log) {
  std::string out =
      "t,q0,q1,q2,xee_x,xee_y,xee_z,tip_x,tip_y,tip_z,"
      "xd_x,xd_y,xd_z,r_goal,r_avoid,r_hole,r_total,status,contact,captured\n";
  for (const EpisodeStep& s : log.steps) {
    const double cols[] = {s.t,       s.q[0],     s.q[1],    s.q[2],
                           s.x_ee[0], s.x_ee[1],  s.x_ee[2], s.peg_tip[0],
                           s.peg_tip[1], s.peg_tip[2], s.x_d[0], s.x_d[1],
                           s.x_d[2],  s.r_goal,   s.r_avoid, s.r_hole,
                           s.total};
    for (double c : cols) {
      append_g17(out, c);
      out += ',';
    }
    out += tick_status_letter(s.status);
    out += ',';
    out += s.in_contact ? '1' : '0';
    out += ',';
    out += s.captured ? '1' : '0';
    out += '\n';
  }
  return out;
}

void write_episode_csv(const EpisodeLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw_error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  const std::string text = episode_csv(log);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw_error(ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace btlab
