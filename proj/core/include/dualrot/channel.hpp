// SPDX-License-Identifier: Apache-2.0
//
// Directional gain patterns, scenario sampling, the three channel
// constructors (user-BS, user-IRS, IRS-BS), the composite channel and the
// analytic channel derivatives consumed by the solvers.
//
// The user links are far-field plane-wave sums over sparse paths; the IRS-BS
// link is a single LoS component evaluated per element-antenna pair with
// spherical wavefronts (per-pair distances, directions and gains).

#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "dualrot/config.hpp"
#include "dualrot/geometry.hpp"
#include "dualrot/types.hpp"

namespace dualrot {

// Cosine-power element pattern G0 * cos(eps)^(2p) on the front hemisphere,
// zero behind; G0 = 2(2p+1) conserves radiated power.
struct GainPattern {
  explicit GainPattern(double p)
      : exponent(p), peak(2.0 * (2.0 * p + 1.0)) {
    if (p < 0.5) throw std::invalid_argument("GainPattern: exponent must be >= 1/2");
  }
  double exponent;
  double peak;
};

// Directional cosine below which gain *derivatives* are treated as zero.
// Objectives and feasibility always use the exact pattern; the dead zone only
// guards the c^(p-1) factor in gradients near the hemisphere boundary.
inline constexpr double kGainBoundary = 1e-6;

// G0 * c^(2p) for c > 0, exactly 0 otherwise.
double element_gain(const GainPattern& pattern, double cosine);

// sqrt(G0) * c^p for c > 0, 0 otherwise.
double element_gain_sqrt(const GainPattern& pattern, double cosine);

// d sqrt(G0 c^(2p)) / dc = p * sqrt(G0) * c^(p-1) for c > kGainBoundary,
// 0 otherwise.
double element_gain_sqrt_derivative_factor(const GainPattern& pattern, double cosine);

struct PathComponent {
  bool is_los = true;
  vec3 scatterer = vec3::Zero(); // meaningful only when !is_los
  double distance = 0.0;         // total propagation distance, m
  vec3 direction = vec3::Zero(); // unit arrival direction at the receiver
  cd gain = 0.0;                 // complex path amplitude
  double phase = 0.0;            // NLoS random phase, 0 for LoS
};

// One sampled realization; all channels are deterministic functions of it.
struct Scenario {
  std::vector<vec3> users;
  std::vector<std::vector<PathComponent>> direct_paths; // per user (empty in cascaded-LoS mode)
  std::vector<std::vector<PathComponent>> irs_paths;    // per user (LoS-only in cascaded-LoS mode)
  double direct_attenuation_db = 0.0;
  std::vector<double> power_w;
  double noise_w = 0.0;
  GainPattern bs_pattern{6.0};
  GainPattern irs_pattern{5.0};

  int num_users() const { return static_cast<int>(users.size()); }
  double direct_amplitude() const { return attenuation_amplitude(direct_attenuation_db); }
};

// Deterministic for a fixed (config, seed); see config fields for the
// placement laws. Throws if a sampled user violates the IRS far-field guard
// (distance below 2 * D_R^2 / lambda).
Scenario sample_scenario(const ScenarioConfig& config, std::uint64_t seed);

// Cascaded-LoS scenario at fixed user positions: no direct link, a single
// LoS path per user-IRS link (the analysis-mode counterpart of
// sample_scenario).
Scenario make_cascaded_scenario(const ScenarioConfig& config, const std::vector<vec3>& users);

// psi-dependent rigid-body state shared by the IRS-side constructors.
struct OrientationCache {
  EulerOrientation psi;
  mat3 rotation;
  vec3 normal;
  std::vector<vec3> positions; // N global element positions
};
OrientationCache orientation_cache(const ArrayGeometry& geom, const EulerOrientation& psi);

struct InfeasibleOrientationError : std::domain_error {
  using std::domain_error::domain_error;
};

// --- channel constructors ------------------------------------------------

// Direct user-BS channel; the blockage attenuation is applied as a common
// amplitude factor.
cvec user_bs_channel(const Scenario& scenario, const ArrayGeometry& geom,
                     const std::vector<vec3>& boresights, int user);
cvec user_bs_channel(const Scenario& scenario, const ArrayGeometry& geom,
                     const std::vector<BoresightAngles>& angles, int user);
// Single entry m, used for incremental per-antenna updates.
cd user_bs_channel_entry(const Scenario& scenario, const ArrayGeometry& geom,
                         const vec3& boresight, int m, int user);

cvec user_irs_channel(const Scenario& scenario, const ArrayGeometry& geom,
                      const OrientationCache& cache, int user);
cvec user_irs_channel(const Scenario& scenario, const ArrayGeometry& geom,
                      const EulerOrientation& psi, int user);

// Near-field IRS-BS matrix. Throws InfeasibleOrientationError when the
// orientation violates the visibility half-space.
cmat irs_bs_channel(const ArrayGeometry& geom, const GainPattern& bs_pattern,
                    const GainPattern& irs_pattern, const std::vector<vec3>& boresights,
                    const OrientationCache& cache);
cmat irs_bs_channel(const ArrayGeometry& geom, const GainPattern& bs_pattern,
                    const GainPattern& irs_pattern,
                    const std::vector<BoresightAngles>& angles, const EulerOrientation& psi);
// Row m only (boresight m changed, orientation unchanged).
void irs_bs_channel_row(const ArrayGeometry& geom, const GainPattern& bs_pattern,
                        const GainPattern& irs_pattern, const vec3& boresight, int m,
                        const OrientationCache& cache, cmat& matrix);

// Rank-one far-field factors: H_FF = coefficient * bs_factor * irs_factor^T.
struct FarFieldFactors {
  cd coefficient;  // lambda * e^(-j k d_RB) / (4 pi d_RB)
  cvec bs_factor;  // M entries, common direction gains and steering phases
  cvec irs_factor; // N entries
};
FarFieldFactors irs_bs_channel_farfield(const ArrayGeometry& geom,
                                        const GainPattern& bs_pattern,
                                        const GainPattern& irs_pattern,
                                        const std::vector<vec3>& boresights,
                                        const OrientationCache& cache);

// H diag(v) h_irs without any modulus check (the reflected part is linear
// in v).
cvec cascade_apply(const cmat& irs_bs, const cvec& v, const cvec& h_irs);

// h_direct + H diag(v) h_irs; v must be unit-modulus entrywise.
cvec composite_channel(const cvec& h_direct, const cmat& irs_bs, const cvec& v,
                       const cvec& h_irs);

// All channels of one (Theta, psi, v) point.
struct ChannelSet {
  std::vector<cvec> direct;   // K x M
  std::vector<cvec> user_irs; // K x N
  cmat irs_bs;                // M x N
  std::vector<cvec> composite;
};
ChannelSet build_channel_set(const Scenario& scenario, const ArrayGeometry& geom,
                             const std::vector<vec3>& boresights,
                             const EulerOrientation& psi, const cvec& v);

// --- analytic derivatives -------------------------------------------------

// Nonzero row of d h_k / d f_m^T (direct-path terms plus all N reflected
// terms); one 1x3 row per user. Gain-derivative factors use the boundary
// dead zone.
std::vector<Eigen::RowVector3cd> channel_derivative_boresight(
    const Scenario& scenario, const ArrayGeometry& geom,
    const std::vector<vec3>& boresights, const OrientationCache& cache, const cvec& v,
    int m);

// Same row for a single user given the precomputed reflected weighting
// v ⊙ h_irs (solver hot path).
Eigen::RowVector3cd channel_derivative_boresight_row(const Scenario& scenario,
                                                     const ArrayGeometry& geom, const vec3& f,
                                                     int m, const OrientationCache& cache,
                                                     const cvec& weighted_irs, int user);

// d h_irs / d psi_axis for one user (gain tilt plus steering-phase motion
// per path).
std::array<cvec, 3> user_irs_orientation_partials(const Scenario& scenario,
                                                  const ArrayGeometry& geom,
                                                  const OrientationCache& cache, int user);

// d H / d psi_axis and d h_irs / d psi_axis for every user; shared by the
// orientation gradient of both solvers.
struct OrientationDerivatives {
  std::array<cmat, 3> irs_bs_partial;
  std::vector<std::array<cvec, 3>> user_irs_partial; // per user
};
OrientationDerivatives orientation_derivatives(const Scenario& scenario,
                                               const ArrayGeometry& geom,
                                               const std::vector<vec3>& boresights,
                                               const OrientationCache& cache);

// d h_k / d psi_axis = H diag(v) d h_irs + dH diag(v) h_irs, one M-vector
// per user.
std::vector<cvec> channel_derivative_orientation(const Scenario& scenario,
                                                 const ArrayGeometry& geom,
                                                 const std::vector<vec3>& boresights,
                                                 const OrientationCache& cache,
                                                 const cvec& v, int axis);

std::vector<vec3> boresights_to_vectors(const std::vector<BoresightAngles>& angles);

} // namespace dualrot
