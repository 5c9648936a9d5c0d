// SPDX-License-Identifier: Apache-2.0
//
// Executable form of the single-user power-scaling analysis: reflected-
// channel power functionals under the far-field and near-field IRS-BS
// models, rotation-gain ratios, coherent-combining efficiencies, and the
// aperture-ratio tradeoff statistics behind the three propositions.

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dualrot/channel.hpp"
#include "dualrot/config.hpp"
#include "dualrot/geometry.hpp"
#include "dualrot/types.hpp"

namespace dualrot {

enum class PowerModel { FarField, NearField };

// J = N^2 * avg_column_power * efficiency; efficiency_defined is false when
// the reflected channel vanishes.
struct ReflectedPowerBreakdown {
  double total = 0.0;            // J, optimized reflected-channel power
  double avg_column_power = 0.0; // p-bar
  double efficiency = 0.0;       // beta in (0, 1]
  bool efficiency_defined = true;
  PowerModel model = PowerModel::NearField;
};

// Closed-form far-field breakdown (phase alignment is exactly optimal for a
// rank-one cascade).
ReflectedPowerBreakdown reflected_power_ff(const Scenario& scenario, const ArrayGeometry& geom,
                                           const std::vector<vec3>& boresights,
                                           const EulerOrientation& psi, int user = 0);

// Near-field breakdown: avg column power in closed form (LoS-dominant
// user-IRS mode required), J estimated as the best of `restarts`
// BCD-optimized random starts — a certified lower bound on the true max.
// An optional warm start is added to the candidate set.
ReflectedPowerBreakdown reflected_power_nf(const Scenario& scenario, const ArrayGeometry& geom,
                                           const std::vector<vec3>& boresights,
                                           const EulerOrientation& psi, int restarts,
                                           std::uint64_t seed, int user = 0,
                                           const cvec* warm_start = nullptr);

// Column-power form without the LoS-dominance requirement; used for run
// diagnostics on general multipath scenarios.
ReflectedPowerBreakdown reflected_power_general(const cmat& cascade, int restarts,
                                                std::uint64_t seed,
                                                const cvec* warm_start = nullptr);

// Best-of-restarts BCD maximization of ||A v||^2 over unit-modulus v.
double optimize_reflected_power(const cmat& cascade, int restarts, std::uint64_t seed,
                                const cvec* warm_start = nullptr);

// Maximizes the reflected-channel power over the gated rotation variables
// (the direct link is ignored). Deterministic for a fixed seed.
RotationState maximize_reflected_power(const Scenario& scenario, const ArrayGeometry& geom,
                                       const RotationLimits& limits, PowerModel model,
                                       bool optimize_boresights, bool optimize_orientation,
                                       const SolverControls& controls, std::uint64_t seed,
                                       int user = 0);

struct RotationGains {
  double bs = 1.0;
  double irs = 1.0;
  double dual = 1.0;
  bool defined = true; // false when the baseline power is zero
};

// Hook returning the optimized rotation for a gating choice; the default
// forwards to maximize_reflected_power. Tests may substitute a no-op.
using RotationOptimizer = std::function<RotationState(bool optimize_bs, bool optimize_irs)>;

RotationGains rotation_gains(const Scenario& scenario, const ArrayGeometry& geom,
                             PowerModel model, const RotationOptimizer& optimizer, int restarts,
                             std::uint64_t seed, int user = 0);

// Four-point multiplicative-separability residual
// |J11 J22 - J12 J21| / max(J11 J22, J12 J21).
double ff_separability_residual(const Scenario& scenario, const ArrayGeometry& geom,
                                const std::vector<vec3>& boresights_a,
                                const std::vector<vec3>& boresights_b,
                                const EulerOrientation& psi_a, const EulerOrientation& psi_b,
                                int user = 0);
double nf_separability_residual(const Scenario& scenario, const ArrayGeometry& geom,
                                const std::vector<vec3>& boresights_a,
                                const std::vector<vec3>& boresights_b,
                                const EulerOrientation& psi_a, const EulerOrientation& psi_b,
                                int restarts, std::uint64_t seed, int user = 0);

// eta_dual = G_p * G_beta relative to the reference rotation.
struct NfDecomposition {
  ReflectedPowerBreakdown optimized;
  ReflectedPowerBreakdown baseline;
  double power_gain = 1.0;      // G_p
  double efficiency_gain = 1.0; // G_beta
  double dual_gain = 1.0;       // eta_dual
  bool defined = true;
};
NfDecomposition nf_dual_decomposition(const Scenario& scenario, const ArrayGeometry& geom,
                                      const RotationState& optimized, int restarts,
                                      std::uint64_t seed, int user = 0);

// Alignment of the panel normal with the element-to-antenna directions:
// mean, spread, reflection-gain variance and aggregate gain.
struct AlignmentStats {
  double mean_alignment = 0.0;      // rho-bar
  double alignment_variation = 0.0; // Delta
  double gain_variance = 0.0;       // S
  double aggregate_gain = 0.0;      // G
  double aperture_ratio = 0.0;      // xi
};
AlignmentStats alignment_stats(const ArrayGeometry& geom, const GainPattern& irs_pattern,
                               const EulerOrientation& psi);

struct Proposition3Report {
  int samples = 0;
  bool inequalities_hold = true;  // G <= MN G0 rho-bar and G <= MN G0 (1 - Delta^2)
  double worst_mean_margin = 0.0; // min over samples of MN G0 rho-bar - G
  double worst_variation_margin = 0.0;
  std::vector<double> sweep_ratios; // xi values of the fixed-orientation sweep
  std::vector<double> sweep_deltas; // Delta(xi) at psi = 0
  double max_delta_over_xi = 0.0;
  double min_delta_over_xi = 0.0;
  bool ratio_bounded = true;  // max Delta/xi <= 2x its smallest-xi value
  bool delta_monotone = true; // Delta decreases with xi along the sweep
};

// Samples (psi, d_RB) pairs with all alignments positive (the proposition's
// hypothesis) and sweeps xi at the reference orientation by moving the panel
// center along its default direction from the BS.
Proposition3Report proposition3_check(const ScenarioConfig& config, int samples,
                                      const std::vector<double>& sweep_ratios,
                                      std::uint64_t seed);

} // namespace dualrot
