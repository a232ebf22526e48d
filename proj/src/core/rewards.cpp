// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "core/rewards.hpp"

#include <cmath>

#include "core/sim.hpp"

namespace btlab {

double goal_reward(const Eigen::Vector3d& p, const RewardSpec& spec) {
  const double d = (p - spec.goal_point).norm();
  return std::exp(-(d + spec.d_g) / (2.0 * spec.sigma_c * spec.sigma_c));
}

double collision_penalty_from_distance(double distance,
                                       const RewardSpec& spec) {
  const double s = distance + spec.d_a;
  return -1.0 / (s * s);
}

double collision_penalty(const Eigen::Vector3d& p, const WorldModel& w,
                         const RewardSpec& spec) {
  return collision_penalty_from_distance(obstacle_distance(w, p), spec);
}

double hole_reward_from_distance(double distance, const RewardSpec& spec) {
  return 1.0 / (2.0 * (distance + spec.d_h));
}

double hole_reward(const Eigen::Vector3d& p, const WorldModel& w,
                   const RewardSpec& spec) {
  return hole_reward_from_distance(hole_region_distance(w, p), spec);
}

RewardBreakdown step_reward(const Eigen::Vector3d& p, const WorldModel& w,
                            const RewardSpec& spec) {
  RewardBreakdown out;
  out.r_goal = goal_reward(p, spec);
  out.r_avoid = collision_penalty(p, w, spec);
  out.r_hole = hole_reward(p, w, spec);
  out.total = spec.w_goal * out.r_goal + spec.w_avoid * out.r_avoid +
              spec.w_hole * out.r_hole;
  return out;
}

double episode_return(const EpisodeLog& log, const RewardSpec& spec) {
  double sum = 0.0;
  for (const EpisodeStep& s : log.steps) {
    sum += spec.w_goal * s.r_goal + spec.w_avoid * s.r_avoid +
           spec.w_hole * s.r_hole;
  }
  if (log.success) sum += spec.finish_bonus;
  return sum;
}

}  // namespace btlab
