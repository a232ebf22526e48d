// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace btlab {

// Static scene description shared by all tasks: one axis-aligned avoidance
// box, a horizontal work surface, and a round hole whose true position is
// the nominal center plus a per-episode displacement.
struct WorldModel {
  Eigen::Vector3d obstacle_center{0.0, 0.0, 0.0};
  Eigen::Vector3d obstacle_half{0.0, 0.0, 0.0};

  double surface_height = 0.0;
  Eigen::Vector2d hole_center_nominal{0.0, 0.0};
  Eigen::Vector2d hole_displacement{0.0, 0.0};
  double hole_radius = 0.005;
  double hole_depth = 0.03;
  double peg_radius = 0.0025;

  // Capture threshold kappa(v_s) = kappa0 + kappa1 * v_s on the commanded
  // pressure proxy; capture_band is how close above the surface the tip must
  // be for capture to be considered.
  double capture_kappa0 = 0.004;
  double capture_kappa1 = 0.60;
  double capture_band = 0.002;

  Eigen::Vector2d hole_center() const {
    return hole_center_nominal + hole_displacement;
  }
  // Radial slack of the peg inside the hole.
  double clearance_radius() const { return hole_radius - peg_radius; }
};

// Euclidean distance from a point to an axis-aligned box; zero inside.
double point_box_distance(const Eigen::Vector3d& p,
                          const Eigen::Vector3d& center,
                          const Eigen::Vector3d& half);

// Distance to the avoidance obstacle.
double obstacle_distance(const WorldModel& w, const Eigen::Vector3d& p);

// Distance to the in-hole target region: a box of 2 mm x 2 mm footprint
// around the true hole center reaching from the hole bottom up to 1 mm
// below the surface.
double hole_region_distance(const WorldModel& w, const Eigen::Vector3d& p);

}  // namespace btlab
