// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "core/skills.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace btlab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

SpiralOverlay advance_spiral(const SpiralOverlay& o, double arc) {
  if (o.radius <= 0.0)
    throw_error(ErrorCode::Config, "spiral radius must be positive");
  if (arc < 0.0)
    throw_error(ErrorCode::Config, "spiral arc must be non-negative");
  const double delta_alpha = arc / o.radius;
  SpiralOverlay next = o;
  next.angle = o.angle + delta_alpha;
  next.radius = o.radius + delta_alpha * o.pitch / kTwoPi;
  return next;
}

SpiralOverlay step_spiral(const SpiralOverlay& o) {
  return advance_spiral(o, o.velocity);
}

Eigen::Vector2d spiral_offset(const SpiralOverlay& o) {
  return {o.radius * std::cos(o.angle), o.radius * std::sin(o.angle)};
}

AttractorState step_attractor(AttractorState st, const AttractorCommand& cmd,
                              double dt) {
  if (!(dt > 0.0)) throw_error(ErrorCode::Config, "dt must be positive");
  if (cmd.path_velocity < 0.0)
    throw_error(ErrorCode::Config, "path velocity must be non-negative");

  const bool goal_changed = !st.has_goal || cmd.goal != st.goal;
  if (goal_changed) {
    st.path_start = st.position;
    st.goal = cmd.goal;
    st.progress = 0.0;
    st.has_goal = true;
    st.spiral_active = false;  // a new segment restarts any overlay
  }

  const bool want_spiral = cmd.spiral_velocity > 0.0 && cmd.spiral_pitch > 0.0;
  if (want_spiral && !st.spiral_active) {
    st.spiral = SpiralOverlay{cmd.spiral_velocity, cmd.spiral_pitch,
                              spiral_initial_radius(cmd.spiral_pitch), 0.0};
    st.spiral_center = st.goal.head<2>();
    st.spiral_active = true;
  } else if (!want_spiral) {
    st.spiral_active = false;
  }

  const Eigen::Vector3d seg = st.goal - st.path_start;
  const double seg_len = seg.norm();
  st.progress = std::min(st.progress + cmd.path_velocity * dt, seg_len);

  Eigen::Vector3d base;
  if (st.progress >= seg_len || seg_len == 0.0) {
    base = st.goal;  // saturate exactly, no rounding residue
  } else {
    base = st.path_start + (st.progress / seg_len) * seg;
  }

  if (st.spiral_active) {
    st.spiral.velocity = cmd.spiral_velocity;
    st.spiral.pitch = cmd.spiral_pitch;
    st.spiral = advance_spiral(st.spiral, cmd.spiral_velocity * dt);
    const Eigen::Vector2d xy = st.spiral_center + spiral_offset(st.spiral);
    st.position = {xy.x(), xy.y(), base.z()};
  } else {
    st.position = base;
  }
  return st;
}

}  // namespace btlab
