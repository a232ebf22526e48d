// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#include "core/world.hpp"

#include <algorithm>
#include <cmath>

namespace btlab {

double point_box_distance(const Eigen::Vector3d& p,
                          const Eigen::Vector3d& center,
                          const Eigen::Vector3d& half) {
  double sq = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = std::abs(p[i] - center[i]) - half[i];
    if (d > 0.0) sq += d * d;
  }
  return std::sqrt(sq);
}

double obstacle_distance(const WorldModel& w, const Eigen::Vector3d& p) {
  return point_box_distance(p, w.obstacle_center, w.obstacle_half);
}

double hole_region_distance(const WorldModel& w, const Eigen::Vector3d& p) {
  const Eigen::Vector2d c = w.hole_center();
  const double z_lo = w.surface_height - w.hole_depth;
  const double z_hi = w.surface_height - 0.001;
  const Eigen::Vector3d center(c.x(), c.y(), 0.5 * (z_lo + z_hi));
  const Eigen::Vector3d half(0.001, 0.001, 0.5 * (z_hi - z_lo));
  return point_box_distance(p, center, half);
}

}  // namespace btlab
