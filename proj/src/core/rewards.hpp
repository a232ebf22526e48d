// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "core/world.hpp"

namespace btlab {

struct EpisodeLog;

// Shaping terms and their fixed shape constants. Weights select which terms
// a task uses; finish_bonus is paid once when an episode ends in success.
struct RewardSpec {
  double sigma_c = 0.4;  // goal closeness length scale
  double d_g = 0.25;     // goal closeness offset
  double d_a = 0.03;     // collision penalty offset
  double d_h = 0.006;    // hole attraction offset

  Eigen::Vector3d goal_point{0.0, 0.0, 0.0};

  double w_goal = 1.0;
  double w_avoid = 1.0;
  double w_hole = 0.0;
  double finish_bonus = 0.0;
};

struct RewardBreakdown {
  double r_goal = 0.0;   // raw terms, unweighted
  double r_avoid = 0.0;
  double r_hole = 0.0;
  double total = 0.0;    // weighted sum per the spec
};

// Goal closeness, maximal at the goal point and strictly decreasing in the
// distance to it.
double goal_reward(const Eigen::Vector3d& p, const RewardSpec& spec);

// Collision penalty as a function of obstacle distance; always negative,
// steeply so near contact.
double collision_penalty_from_distance(double distance, const RewardSpec& spec);
double collision_penalty(const Eigen::Vector3d& p, const WorldModel& w,
                         const RewardSpec& spec);

// Hole attraction as a function of distance to the in-hole target region.
double hole_reward_from_distance(double distance, const RewardSpec& spec);
double hole_reward(const Eigen::Vector3d& p, const WorldModel& w,
                   const RewardSpec& spec);

RewardBreakdown step_reward(const Eigen::Vector3d& p, const WorldModel& w,
                            const RewardSpec& spec);

// Sum of weighted step terms over a logged episode plus the finish bonus if
// the episode ended in success. Recomputes from raw logged terms, so the
// same log can be scored under different weights.
double episode_return(const EpisodeLog& log, const RewardSpec& spec);

}  // namespace btlab
