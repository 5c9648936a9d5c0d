// SPDX-License-Identifier: Apache-2.0
//
// Rotation parameterizations, array layouts and their analytic derivatives.
// Boresights are elevation/azimuth pairs measured off the +y array normal;
// the IRS panel orientation is an Euler-angle triple applied as the active
// rotation Rx(phi) * Ry(beta) * Rz(alpha).

#pragma once

#include <stdexcept>
#include <vector>

#include "dualrot/config.hpp"
#include "dualrot/types.hpp"

namespace dualrot {

struct BoresightAngles {
  double elevation = 0.0; // rad, in [0, max_elevation]
  double azimuth = 0.0;   // rad, stored modulo 2*pi
};

struct EulerOrientation {
  double alpha = 0.0; // rad, about global z
  double beta = 0.0;  // rad, about global y
  double phi = 0.0;   // rad, about global x

  vec3 to_vector() const { return vec3(alpha, beta, phi); }
  static EulerOrientation from_vector(const vec3& v) { return {v[0], v[1], v[2]}; }
};

// BS boresight set plus IRS panel orientation: the full mechanical state.
struct RotationState {
  std::vector<BoresightAngles> boresights; // one per BS antenna
  EulerOrientation orientation;

  // Reference state: boresights at the array normal, panel at the BS-facing
  // orientation.
  static RotationState reference(int num_antennas) {
    RotationState state;
    state.boresights.assign(static_cast<std::size_t>(num_antennas), BoresightAngles{});
    return state;
  }
};

// Mechanical steering limits shared by both solvers.
struct RotationLimits {
  double max_elevation = deg2rad(60.0); // rad
  vec3 euler_max{deg2rad(60.0), deg2rad(60.0), deg2rad(60.0)};

  static RotationLimits from_config(const ScenarioConfig& config) {
    RotationLimits limits;
    limits.max_elevation = config.max_elevation();
    limits.euler_max = vec3(config.max_alpha(), config.max_beta(), config.max_phi());
    return limits;
  }
};

struct ArrayGeometry {
  vec3 bs_center;                 // m
  std::vector<vec3> bs_offsets;   // M phase-center offsets on the x-z plane
  vec3 irs_center;                // m
  std::vector<vec3> irs_offsets;  // N reference offsets, orthogonal to the normal
  vec3 reference_normal;          // unit vector from irs_center toward bs_center
  double wavelength = 0.05;       // m
  double irs_spacing = 0.025;     // m
  double irs_side_length = 0.5;   // m, (N_side - 1) * spacing
  double irs_diagonal = 0.0;      // m, side * sqrt(2)
  double bs_diagonal = 0.0;       // m

  int bs_count() const { return static_cast<int>(bs_offsets.size()); }
  int irs_count() const { return static_cast<int>(irs_offsets.size()); }
  double wavenumber() const { return 2.0 * kPi / wavelength; }
  double bs_irs_distance() const { return (bs_center - irs_center).norm(); }
  // Normalized aperture-to-distance ratio xi = D_R / d_RB.
  double aperture_ratio() const { return irs_diagonal / bs_irs_distance(); }
};

// Unit boresight vector [sin(e)cos(a), cos(e), sin(e)sin(a)].
vec3 boresight_vector(const BoresightAngles& angles);

// 3x2 Jacobian of boresight_vector with respect to (elevation, azimuth).
Eigen::Matrix<double, 3, 2> boresight_jacobian(const BoresightAngles& angles);

// Inverse of boresight_vector on the feasible cap. Throws
// std::invalid_argument for non-unit input and CapError when f lies outside
// the elevation cap (callers must project first). Azimuth ties at zero
// elevation break to 0.
struct CapError : std::domain_error {
  using std::domain_error::domain_error;
};
BoresightAngles angles_from_boresight(const vec3& f, double max_elevation);

// Active rotation Rx(phi) * Ry(beta) * Rz(alpha).
mat3 euler_rotation(const EulerOrientation& psi);

// Entrywise analytic partial of euler_rotation; axis 0 = alpha, 1 = beta,
// 2 = phi.
mat3 euler_rotation_partial(const EulerOrientation& psi, int axis);

// Global element positions r_0 + R(psi) * offset_n.
std::vector<vec3> irs_element_positions(const ArrayGeometry& geom,
                                        const EulerOrientation& psi);

// Rotated unit surface normal R(psi) * n_0.
vec3 irs_normal(const ArrayGeometry& geom, const EulerOrientation& psi);

// Builds the centered BS and IRS grids from the configured counts/spacings.
// The IRS in-plane axes come from Gram-Schmidt of the global z axis against
// the reference normal. Throws ConfigError on degenerate dimensions.
ArrayGeometry build_geometry(const ScenarioConfig& config);

// Visibility margin n(psi)^T (b_0 - r_0); feasible orientations keep it >= 0.
double visibility_margin(const ArrayGeometry& geom, const EulerOrientation& psi);

// Gradient of visibility_margin with respect to the Euler angles.
vec3 visibility_gradient(const ArrayGeometry& geom, const EulerOrientation& psi);

} // namespace dualrot
