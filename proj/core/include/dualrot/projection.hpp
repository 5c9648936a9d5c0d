// SPDX-License-Identifier: Apache-2.0
//
// Convex projections used by the rotation updates: the spherical cap of
// feasible boresight vectors, and Dykstra's alternating projection onto the
// Euler-angle box intersected with a (linearized) visibility half-space.

#pragma once

#include "dualrot/types.hpp"

namespace dualrot {

struct BoxLimits {
  vec3 lower;
  vec3 upper;

  static BoxLimits symmetric(const vec3& half_width) { return {-half_width, half_width}; }
  bool contains(const vec3& x, double tol = 0.0) const {
    return (x.array() >= lower.array() - tol).all() && (x.array() <= upper.array() + tol).all();
  }
};

// normal^T x >= offset.
struct Halfspace {
  vec3 normal;
  double offset;

  bool contains(const vec3& x, double tol = 0.0) const { return normal.dot(x) >= offset - tol; }
};

vec3 box_clamp(const vec3& x, const BoxLimits& box);
vec3 halfspace_project(const vec3& x, const Halfspace& halfspace);

// Normalizes f, then snaps it onto the elevation cap around the reference
// direction [0,1,0] when outside (rotation toward the reference in their
// common plane). Antiparallel inputs break the tie in the x-y plane.
// Idempotent; throws std::invalid_argument for f = 0.
vec3 cap_project(const vec3& f, double max_elevation);

// Euclidean projection onto box ∩ halfspace via Dykstra's corrected
// alternating projections (increments below 1e-10 or 100 rounds). The
// intersection must be nonempty.
vec3 dykstra_project(const vec3& point, const BoxLimits& box, const Halfspace& halfspace);

} // namespace dualrot
