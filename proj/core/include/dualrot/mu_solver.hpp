// SPDX-License-Identifier: Apache-2.0
//
// Multi-user alternating optimization for uplink sum rate: MMSE combining in
// closed form, IRS phase shifts via a fractional-programming surrogate
// maximized by Riemannian conjugate gradient, per-antenna boresight updates
// on spherical caps, and safeguarded Barzilai-Borwein orientation updates
// with Dykstra projection.

#pragma once

#include <utility>
#include <vector>

#include "dualrot/channel.hpp"
#include "dualrot/geometry.hpp"
#include "dualrot/manifold.hpp"
#include "dualrot/projection.hpp"
#include "dualrot/types.hpp"

namespace dualrot {

enum class Scheme { Dual, BsOnly, IrsOnly, Fixed };

// SINRs and sum rate (bps/Hz) for combiner columns w_k; scale-invariant in
// each w_k.
std::pair<rvec, double> sinr_and_sum_rate(const cmat& combiners,
                                          const std::vector<cvec>& channels,
                                          const std::vector<double>& power, double noise);

// Unit-norm MMSE combiners w_k ∝ C_k^{-1} h_k with C_k the per-user
// interference-plus-noise covariance.
cmat mmse_combiners(const std::vector<cvec>& channels, const std::vector<double>& power,
                    double noise);

// Fractional-programming auxiliaries: mu_k equals the supplied SINR, nu_k =
// sqrt(1 + mu_k) * u_kk / rho_k.
struct FpAuxiliary {
  rvec mu;
  cvec nu;
};
FpAuxiliary fp_auxiliary_update(const rvec& sinrs, const cmat& signal_amplitudes,
                                const rvec& received_power);

// Quadratic surrogate of the sum rate in v (negative-semidefinite Q by
// construction); differs from the FP objective by a v-independent constant.
QuadraticObjective fp_quadratic_build(const FpAuxiliary& aux, const std::vector<cvec>& h_direct,
                                      const cmat& irs_bs, const std::vector<cvec>& h_irs,
                                      const cmat& combiners, const std::vector<double>& power);

// The FP surrogate itself at fixed auxiliaries (test oracle for the constant
// offset between the surrogate and fp_quadratic_build's value).
double fp_surrogate_value(const FpAuxiliary& aux, const std::vector<cvec>& h_direct,
                          const cmat& irs_bs, const std::vector<cvec>& h_irs,
                          const cmat& combiners, const std::vector<double>& power, double noise,
                          const cvec& v);

// controls.fp_iters outer rounds of {auxiliary update, quadratic build,
// rcg_maximize}; the returned vector never has a lower true sum rate than
// v0 (candidates are rejected in favor of the incumbent).
PhaseVector fp_rcg_phase_update(const std::vector<cvec>& h_direct, const cmat& irs_bs,
                                const std::vector<cvec>& h_irs, const cmat& combiners,
                                const std::vector<double>& power, double noise,
                                const PhaseVector& v0, const SolverControls& controls);

// Sum-rate gradients assembled from the analytic channel derivatives.
vec3 sum_rate_gradient_boresight(const Scenario& scenario, const ArrayGeometry& geom,
                                 const std::vector<vec3>& boresights,
                                 const EulerOrientation& psi, const cvec& v,
                                 const cmat& combiners, int m);
vec3 sum_rate_gradient_orientation(const Scenario& scenario, const ArrayGeometry& geom,
                                   const std::vector<vec3>& boresights,
                                   const EulerOrientation& psi, const cvec& v,
                                   const cmat& combiners);

// Solver state with incremental channel caches.
struct MuState {
  const Scenario* scenario = nullptr;
  const ArrayGeometry* geom = nullptr;
  RotationLimits limits;
  SolverControls controls;

  std::vector<vec3> boresights;
  EulerOrientation psi;
  PhaseVector v;
  cmat combiners; // M x K

  OrientationCache cache;
  cmat irs_bs;
  std::vector<cvec> h_direct;
  std::vector<cvec> h_irs;
  std::vector<cvec> weighted_irs; // v ⊙ h_irs per user
  std::vector<cvec> h;            // composite channels
  rvec sinrs;
  double sum_rate = 0.0;

  // Barzilai-Borwein memory: previous orientation/gradient pair, and which
  // of the two spectral steps to use next.
  bool bb_has_memory = false;
  bool bb_use_first = true;
  vec3 bb_prev_psi = vec3::Zero();
  vec3 bb_prev_grad = vec3::Zero();

  static MuState create(const Scenario& scenario, const ArrayGeometry& geom,
                        const RotationLimits& limits, const SolverControls& controls,
                        const RotationState& init, const PhaseVector& v0);

  void refresh_rates();
  void set_phase(const PhaseVector& v_new);
  void set_boresight(int m, const vec3& f);
  void set_orientation(const EulerOrientation& psi_new);
  void set_combiners(const cmat& combiners_new);
  RotationState rotation() const;
};

// Sequential projected-gradient candidates over all antennas; each accepted
// only if the true sum rate is non-decreasing, otherwise backtracked and
// finally retained.
void boresight_update_sweep(MuState& state);

// One safeguarded-BB orientation step projected by Dykstra onto the box and
// the locally linearized visibility constraint; accepted only if the
// original constraint holds and the sum rate is non-decreasing.
void orientation_bb_update(MuState& state);

// Alternates boresight sweeps and orientation updates until the relative
// sum-rate change falls below controls.rot_tol or rot_max_iters is reached.
void rotation_update(MuState& state, bool update_boresights, bool update_orientation);

struct SolveReport {
  std::vector<double> trace; // sum rate per AO iteration, index 0 = initial
  cmat combiners;
  PhaseVector v;
  std::vector<BoresightAngles> boresights;
  EulerOrientation orientation;
  rvec sinrs;
  int iterations = 0;
  bool converged = false;
};

// Three-block alternating optimization (phase update, gated rotation update,
// MMSE refresh) with a monotone accepted-value trace.
SolveReport ao_optimize(const Scenario& scenario, const ArrayGeometry& geom,
                        const RotationLimits& limits, const RotationState& init,
                        const PhaseVector& v0, const SolverControls& controls, Scheme scheme);

} // namespace dualrot
