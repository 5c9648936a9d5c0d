// SPDX-License-Identifier: Apache-2.0

#include "dualrot/geometry.hpp"

#include <cmath>

namespace dualrot {

namespace {

mat3 rot_x(double a) {
  mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}

mat3 rot_y(double a) {
  mat3 r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}

mat3 rot_z(double a) {
  mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

mat3 rot_x_prime(double a) {
  mat3 r;
  r << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
  return r;
}

mat3 rot_y_prime(double a) {
  mat3 r;
  r << -std::sin(a), 0, std::cos(a), 0, 0, 0, -std::cos(a), 0, -std::sin(a);
  return r;
}

mat3 rot_z_prime(double a) {
  mat3 r;
  r << -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a), 0, 0, 0, 0;
  return r;
}

double wrap_azimuth(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a;
}

} // namespace

vec3 boresight_vector(const BoresightAngles& angles) {
  const double se = std::sin(angles.elevation), ce = std::cos(angles.elevation);
  const double sa = std::sin(angles.azimuth), ca = std::cos(angles.azimuth);
  return vec3(se * ca, ce, se * sa);
}

Eigen::Matrix<double, 3, 2> boresight_jacobian(const BoresightAngles& angles) {
  const double se = std::sin(angles.elevation), ce = std::cos(angles.elevation);
  const double sa = std::sin(angles.azimuth), ca = std::cos(angles.azimuth);
  Eigen::Matrix<double, 3, 2> j;
  j << ce * ca, -se * sa, -se, 0.0, ce * sa, se * ca;
  return j;
}

BoresightAngles angles_from_boresight(const vec3& f, double max_elevation) {
  if (std::abs(f.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("angles_from_boresight: input is not unit norm");
  if (f.y() < std::cos(max_elevation) - 1e-9)
    throw CapError("angles_from_boresight: boresight outside the elevation cap; project first");
  BoresightAngles angles;
  angles.elevation = std::acos(std::min(1.0, std::max(-1.0, f.y())));
  angles.azimuth = (angles.elevation == 0.0) ? 0.0 : wrap_azimuth(std::atan2(f.z(), f.x()));
  return angles;
}

mat3 euler_rotation(const EulerOrientation& psi) {
  return rot_x(psi.phi) * rot_y(psi.beta) * rot_z(psi.alpha);
}

mat3 euler_rotation_partial(const EulerOrientation& psi, int axis) {
  switch (axis) {
    case 0: return rot_x(psi.phi) * rot_y(psi.beta) * rot_z_prime(psi.alpha);
    case 1: return rot_x(psi.phi) * rot_y_prime(psi.beta) * rot_z(psi.alpha);
    case 2: return rot_x_prime(psi.phi) * rot_y(psi.beta) * rot_z(psi.alpha);
    default: throw std::invalid_argument("euler_rotation_partial: axis must be 0, 1 or 2");
  }
}

std::vector<vec3> irs_element_positions(const ArrayGeometry& geom,
                                        const EulerOrientation& psi) {
  const mat3 r = euler_rotation(psi);
  std::vector<vec3> positions;
  positions.reserve(geom.irs_offsets.size());
  for (const vec3& offset : geom.irs_offsets) positions.push_back(geom.irs_center + r * offset);
  return positions;
}

vec3 irs_normal(const ArrayGeometry& geom, const EulerOrientation& psi) {
  return euler_rotation(psi) * geom.reference_normal;
}

ArrayGeometry build_geometry(const ScenarioConfig& config) {
  if (config.bs_count_x < 1 || config.bs_count_z < 1)
    throw ConfigError("bs_count", "antenna counts must be positive");
  if (config.irs_side_count < 1)
    throw ConfigError("irs_side_count", "element count must be positive");
  if (config.bs_spacing <= 0.0) throw ConfigError("bs_spacing", "spacing must be positive");
  if (config.irs_spacing <= 0.0) throw ConfigError("irs_spacing", "spacing must be positive");
  if (config.wavelength <= 0.0) throw ConfigError("wavelength", "wavelength must be positive");

  ArrayGeometry geom;
  geom.bs_center = config.bs_center;
  geom.irs_center = config.irs_center;
  geom.wavelength = config.wavelength;
  geom.irs_spacing = config.irs_spacing;

  const double bs_sep = (config.bs_center - config.irs_center).norm();
  if (bs_sep <= 0.0) throw ConfigError("irs_center", "IRS and BS centers coincide");
  geom.reference_normal = (config.bs_center - config.irs_center) / bs_sep;

  // BS phase centers on a centered x-z grid at the configured spacing.
  geom.bs_offsets.reserve(static_cast<std::size_t>(config.bs_count()));
  const double cx = 0.5 * (config.bs_count_x - 1);
  const double cz = 0.5 * (config.bs_count_z - 1);
  for (int ix = 0; ix < config.bs_count_x; ++ix)
    for (int iz = 0; iz < config.bs_count_z; ++iz)
      geom.bs_offsets.push_back(vec3((ix - cx) * config.bs_spacing, 0.0,
                                     (iz - cz) * config.bs_spacing));
  geom.bs_diagonal = std::hypot((config.bs_count_x - 1) * config.bs_spacing,
                                (config.bs_count_z - 1) * config.bs_spacing);

  // In-plane IRS basis: Gram-Schmidt of global z against the normal, then the
  // cross product. Any orthonormal pair is physically equivalent.
  vec3 vertical = vec3::UnitZ() - geom.reference_normal.z() * geom.reference_normal;
  if (vertical.norm() < 1e-9) vertical = vec3::UnitX() - geom.reference_normal.x() * geom.reference_normal;
  vertical.normalize();
  const vec3 lateral = geom.reference_normal.cross(vertical);

  geom.irs_offsets.reserve(static_cast<std::size_t>(config.irs_count()));
  const double c = 0.5 * (config.irs_side_count - 1);
  for (int iy = 0; iy < config.irs_side_count; ++iy)
    for (int iz = 0; iz < config.irs_side_count; ++iz)
      geom.irs_offsets.push_back(((iy - c) * config.irs_spacing) * lateral +
                                 ((iz - c) * config.irs_spacing) * vertical);
  geom.irs_side_length = (config.irs_side_count - 1) * config.irs_spacing;
  geom.irs_diagonal = geom.irs_side_length * std::sqrt(2.0);
  return geom;
}

double visibility_margin(const ArrayGeometry& geom, const EulerOrientation& psi) {
  return irs_normal(geom, psi).dot(geom.bs_center - geom.irs_center);
}

vec3 visibility_gradient(const ArrayGeometry& geom, const EulerOrientation& psi) {
  const vec3 to_bs = geom.bs_center - geom.irs_center;
  vec3 grad;
  for (int axis = 0; axis < 3; ++axis)
    grad[axis] = (euler_rotation_partial(psi, axis) * geom.reference_normal).dot(to_bs);
  return grad;
}

} // namespace dualrot
