// SPDX-License-Identifier: Apache-2.0
//
// Common scalar/linear-algebra aliases used across the dualrot library.

#pragma once

#include <complex>
#include <Eigen/Dense>

namespace dualrot {

using cd = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using vec3 = Eigen::Vector3d;
using mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0; // m/s

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Amplitude factor for a positive attenuation in dB (25 dB -> 10^(-25/20)).
inline double attenuation_amplitude(double db) { return std::pow(10.0, -db / 20.0); }

} // namespace dualrot
