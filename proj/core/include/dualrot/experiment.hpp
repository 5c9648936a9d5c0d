// SPDX-License-Identifier: Apache-2.0
//
// Seeded Monte Carlo experiment driver: the four benchmark schemes, the
// convergence / sweep / decomposition / proposition experiments, and the
// per-cell summaries. Cells are independent jobs with RNG streams derived
// from (seed, cell), so worker count cannot affect results.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualrot/analysis.hpp"
#include "dualrot/config.hpp"
#include "dualrot/mu_solver.hpp"

namespace dualrot {

enum class SweepAxis { Power, Antennas, Users, Xi };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);
std::string to_string(SweepAxis axis);
SweepAxis axis_from_string(const std::string& name);

// One completed run (or decomposition point). Wall time stays out of the
// CSVs so reruns are byte-identical.
struct ExperimentResult {
  std::string experiment; // converge | sweep | decompose
  std::string scheme;     // dual | bs | irs | fixed ("" for decompose rows)
  std::string axis;       // "" | power | antennas | users | xi
  double value = 0.0;     // swept value (dBm, M, K, or xi)
  std::uint64_t seed = 0;
  double sum_rate = 0.0; // bps/Hz
  int iterations = 0;
  bool converged = false;
  std::vector<double> sinrs;

  // Diagnostics at the final rotation state.
  double xi = 0.0;
  double rho_bar = 0.0;
  double delta = 0.0;
  double gain_variance = 0.0;
  double beta = 0.0; // combining efficiency of user 0's cascade

  // Decomposition columns (decompose rows only).
  double power_gain = 0.0;
  double efficiency_gain = 0.0;
  double dual_gain = 0.0;
  double beta_fixed = 0.0;
  double beta_dual = 0.0;
  bool decompose_valid = false;

  std::vector<double> trace; // sum rate per AO iteration
  double wall_time_s = 0.0;
};

// Seeds used by an experiment: seed, seed+1, ..., seed+trials-1.
std::vector<std::uint64_t> experiment_seeds(const ScenarioConfig& config);

// Deterministic warm start for the boresight-steering schemes: antennas are
// assigned round-robin to users and aimed at the assigned user's LoS arrival
// (cap-projected). Schemes with fixed boresights keep the reference state.
RotationState matched_boresight_init(const Scenario& scenario, const ArrayGeometry& geom,
                                     const RotationLimits& limits);

// Samples the scenario for `seed`, draws the scheme-independent phase
// initialization, runs the gated AO and attaches diagnostics.
ExperimentResult run_scheme(const ScenarioConfig& config, Scheme scheme, std::uint64_t seed);

// Convergence experiment: every scheme on the default operating point.
std::vector<ExperimentResult> run_convergence(const ScenarioConfig& config,
                                              const std::vector<Scheme>& schemes, int threads);

// Full scheme x value x seed cross product along one axis.
std::vector<ExperimentResult> run_sweep(const ScenarioConfig& config, SweepAxis axis,
                                        const std::vector<double>& values,
                                        const std::vector<Scheme>& schemes, int threads);

std::vector<double> default_axis_values(SweepAxis axis);

// Returns the config with the axis value applied (power in dBm, antennas as
// a square UPA count, user count, or aperture ratio via the panel distance).
ScenarioConfig apply_axis_value(const ScenarioConfig& config, SweepAxis axis, double value);

// Reflected-channel decomposition versus the aperture ratio in cascaded-LoS
// mode with a fixed single user.
struct DecomposeOptions {
  std::vector<double> ratios;      // xi values, default {0.0707 .. 0.707}
  double user_azimuth_deg = -50.0; // user placed inside the reference panel's view
  double user_distance = 35.0;     // m
};
std::vector<ExperimentResult> run_decompose(const ScenarioConfig& config,
                                            const DecomposeOptions& options);

// Proposition suite (separability, power bounds, alignment tradeoff).
struct PropsReport {
  double max_ff_residual = 0.0;          // over random rotation pairs
  double max_ff_efficiency_error = 0.0;  // |beta_FF - 1| on LoS-only channels
  int prop1_pairs = 0;
  bool prop1_pass = false;

  int prop2_geometries = 0;
  int prop2_upper_violations = 0; // ||Av||^2 > N^2 p-bar occurrences
  int prop2_lower_violations = 0; // best-of-restarts < N p-bar occurrences
  double min_upper_margin = 0.0;
  bool prop2_pass = false;

  Proposition3Report prop3;
  bool prop3_pass = false;
};
PropsReport run_props(const ScenarioConfig& config, int prop1_pairs, int prop2_geometries,
                      int prop2_random_phases, int prop3_samples, std::uint64_t seed);

// Per-cell mean and standard error over seeds.
struct CellSummary {
  std::string scheme;
  std::string axis;
  double value = 0.0;
  int count = 0;
  double mean = 0.0;
  double std_error = 0.0;
};
std::vector<CellSummary> summarize(const std::vector<ExperimentResult>& rows);

} // namespace dualrot
