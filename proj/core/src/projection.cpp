// SPDX-License-Identifier: Apache-2.0

#include "dualrot/projection.hpp"

#include <cmath>
#include <stdexcept>

namespace dualrot {

vec3 box_clamp(const vec3& x, const BoxLimits& box) {
  return x.cwiseMax(box.lower).cwiseMin(box.upper);
}

vec3 halfspace_project(const vec3& x, const Halfspace& halfspace) {
  const double nn = halfspace.normal.squaredNorm();
  if (nn == 0.0) return x; // degenerate constraint, nothing to enforce
  const double violation = halfspace.offset - halfspace.normal.dot(x);
  if (violation <= 0.0) return x;
  return x + (violation / nn) * halfspace.normal;
}

vec3 cap_project(const vec3& f, double max_elevation) {
  const double norm = f.norm();
  if (norm == 0.0) throw std::invalid_argument("cap_project: zero input direction");
  const vec3 unit = f / norm;
  const double cos_max = std::cos(max_elevation);
  if (unit.y() >= cos_max) return unit;

  vec3 perp(unit.x(), 0.0, unit.z());
  const double s = perp.norm();
  if (s < 1e-12) {
    perp = vec3::UnitX(); // antiparallel tie-break: rotate in the x-y plane
  } else {
    perp /= s;
  }
  return cos_max * vec3::UnitY() + std::sin(max_elevation) * perp;
}

vec3 dykstra_project(const vec3& point, const BoxLimits& box, const Halfspace& halfspace) {
  vec3 x = point;
  vec3 p = vec3::Zero(), q = vec3::Zero();
  // The increment test is the effective stop; the round cap is a backstop
  // large enough that linear-rate cases still reach the 1e-8 accuracy
  // contract (rounds are a handful of 3-vector operations each).
  for (int round = 0; round < 100000; ++round) {
    const vec3 y = box_clamp(x + p, box);
    p = x + p - y;
    const vec3 x_next = halfspace_project(y + q, halfspace);
    q = y + q - x_next;
    const double increment = (x_next - x).norm() + (y - x_next).norm();
    x = x_next;
    if (increment < 1e-10) break;
  }
  // Final clamp keeps the box constraint exact; the residual is within the
  // convergence tolerance.
  return box_clamp(x, box);
}

} // namespace dualrot
