// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace btlab {

// Archimedes spiral overlay state. radius/angle are the current polar
// coordinates about the overlay center; velocity is arc speed, pitch the
// radial growth per full turn.
struct SpiralOverlay {
  double velocity = 0.0;  // v_s, arc length per unit time
  double pitch = 0.0;     // c, radial growth per turn
  double radius = 0.0;    // r_i
  double angle = 0.0;     // alpha_i, radians
};

// One spiral increment of the given arc length:
//   delta_alpha = arc / r_i,  r_{i+1} = r_i + delta_alpha * c / (2 pi).
// Requires radius > 0. pitch == 0 keeps the radius constant (a circle).
SpiralOverlay advance_spiral(const SpiralOverlay& o, double arc);

// Unit-time step: advances by arc length equal to o.velocity.
SpiralOverlay step_spiral(const SpiralOverlay& o);

// Cartesian offset of the current spiral point about its center.
Eigen::Vector2d spiral_offset(const SpiralOverlay& o);

// Initial spiral radius for a given pitch.
inline double spiral_initial_radius(double pitch) { return pitch / 4.0; }

// What a behavior leaf commands of the movement skill each tick. A positive
// spiral_velocity together with a positive pitch enables the search overlay
// centered at the goal's xy position.
struct AttractorCommand {
  Eigen::Vector3d goal{0.0, 0.0, 0.0};
  double path_velocity = 0.0;   // v_p along the straight path
  double spiral_velocity = 0.0; // v_s of the overlay, 0 disables
  double spiral_pitch = 0.0;    // c of the overlay
};

// Integrator state of the moving attractor x_d. The attractor advances from
// path_start toward goal at the commanded path velocity; a goal change
// restarts the segment from the current position.
struct AttractorState {
  Eigen::Vector3d position{0.0, 0.0, 0.0};  // current x_d
  Eigen::Vector3d path_start{0.0, 0.0, 0.0};
  Eigen::Vector3d goal{0.0, 0.0, 0.0};
  double progress = 0.0;  // arc length advanced along the segment
  bool has_goal = false;

  bool spiral_active = false;
  SpiralOverlay spiral;
  Eigen::Vector2d spiral_center{0.0, 0.0};
};

// Advances the attractor one control step. Pure: the returned state depends
// only on the inputs. The attractor saturates exactly at the goal; with an
// active overlay the xy position orbits the goal while z follows the path.
AttractorState step_attractor(AttractorState st, const AttractorCommand& cmd,
                              double dt);

}  // namespace btlab
