// SPDX-License-Identifier: Apache-2.0
//
// Scenario configuration: physical layout, channel statistics and solver
// controls. Defaults reproduce the reference deployment (6 GHz carrier,
// 4x4 boresight-steerable UPA, 21x21 IRS panel 0.5 m wide mounted near the
// BS, four users, 25 dB direct-link blockage).

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "dualrot/types.hpp"

namespace dualrot {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config error [" + field + "]: " + what), field(field) {}
  std::string field;
};

struct SolverControls {
  // Outer alternating optimization. The stagnation tolerance is tiny by
  // default: orientation escapes from the reference plateau produce
  // near-zero progress for an iteration or two before the spectral step
  // breaks out, so the iteration budget is the effective stop.
  double ao_tol = 1e-10;
  int ao_max_iters = 30;
  // Rotation block (boresight sweep + orientation update).
  double rot_tol = 1e-6;
  double rot_floor = 1e-12; // denominator floor in the relative-change test
  int rot_max_iters = 10;
  double step_max = 1.0;
  double step_min = 1e-6;
  double backtrack = 0.5;
  // Safeguarded Barzilai-Borwein step for the orientation update.
  double bb_init = 1e-2;
  double bb_min = 1e-8;
  double bb_max = 1e2;
  // Fractional-programming phase update.
  int fp_iters = 10;
  int rcg_max_iters = 50;
  double rcg_tol_per_element = 1e-6; // gradient-norm tolerance is this * N
  // Single-user solver.
  int bcd_max_sweeps = 3;
  double bcd_tol = 1e-8;
  double su_tol = 1e-6;
  int su_max_iters = 100;
  // Near-field reflected-power estimation.
  int nf_restarts = 8;
};

struct ScenarioConfig {
  // Wavelength is authoritative; the carrier frequency is c/wavelength.
  double wavelength = 0.05; // m

  vec3 bs_center{0.0, 0.0, 10.0};  // m
  vec3 irs_center{2.0, 4.0, 14.0}; // m

  int bs_count_x = 4;
  int bs_count_z = 4;
  int irs_side_count = 21;
  double bs_spacing = 0.025;  // m, half wavelength
  double irs_spacing = 0.025; // m, half wavelength

  int num_users = 4;
  double user_power_dbm = 20.0;
  double noise_dbm = -80.0;

  int direct_paths = 4; // paths per user on the user-BS link (first is LoS)
  int irs_paths = 4;    // paths per user on the user-IRS link (first is LoS)
  double nlos_amplitude = 0.3;
  double direct_attenuation_db = 25.0;

  double bs_exponent = 6.0; // cosine-power beamwidth exponents
  double irs_exponent = 5.0;

  double max_elevation_deg = 60.0;
  double max_alpha_deg = 60.0;
  double max_beta_deg = 60.0;
  double max_phi_deg = 60.0;

  // User and scatterer placement laws.
  double user_distance_min = 30.0;  // m, horizontal range from the BS ground point
  double user_distance_max = 100.0; // m
  double user_height = 1.5;         // m
  double user_azimuth_deg = 60.0;   // azimuths drawn uniformly on +/- this
  double scatterer_radius = 20.0;   // m, horizontal disc around the user
  double scatterer_height_min = 1.0;
  double scatterer_height_max = 20.0;

  // Cascaded-LoS analysis mode: no direct link, LoS-only user-IRS paths.
  bool cascaded_los_only = false;

  std::uint64_t seed = 1;
  int trials = 50;

  SolverControls solver;

  double carrier_hz() const { return kSpeedOfLight / wavelength; }
  int bs_count() const { return bs_count_x * bs_count_z; }
  int irs_count() const { return irs_side_count * irs_side_count; }
  double user_power_w() const { return dbm_to_watt(user_power_dbm); }
  double noise_w() const { return dbm_to_watt(noise_dbm); }
  double max_elevation() const { return deg2rad(max_elevation_deg); }
  double max_alpha() const { return deg2rad(max_alpha_deg); }
  double max_beta() const { return deg2rad(max_beta_deg); }
  double max_phi() const { return deg2rad(max_phi_deg); }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Parses a flat key-value config file ("key = value", '#' comments). Missing
// keys keep their defaults; unknown keys and out-of-range values throw
// ConfigError. An empty path returns the defaults.
ScenarioConfig load_config(const std::string& path);

// Applies one "key=value" override on top of an existing config.
void apply_config_override(ScenarioConfig& config, const std::string& key,
                           const std::string& value);

} // namespace dualrot
