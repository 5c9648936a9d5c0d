// SPDX-License-Identifier: Apache-2.0
//
// Single-user alternating optimization maximizing the effective channel
// power ||h||^2: MRC combining, closed-form coordinate-descent phase
// updates, and projected-gradient updates of the boresights and the panel
// orientation.

#pragma once

#include <stdexcept>
#include <vector>

#include "dualrot/channel.hpp"
#include "dualrot/geometry.hpp"
#include "dualrot/manifold.hpp"
#include "dualrot/types.hpp"

namespace dualrot {

struct DegenerateChannelError : std::domain_error {
  using std::domain_error::domain_error;
};

// Cascade columns a_n = [h_irs]_n * (column n of H), so that A v equals the
// reflected composite H diag(v) h_irs for every v.
cmat cascade_columns(const cmat& irs_bs, const cvec& h_irs);

// h / ||h||; throws DegenerateChannelError for a (numerically) zero channel.
cvec mrc_combiner(const cvec& h);

// One full sweep n = 1..N of closed-form per-coordinate phase updates on
// ||h_direct + A v||^2; the objective is non-decreasing after every single
// update and eta_n = 0 leaves the coordinate unchanged.
PhaseVector bcd_phase_sweep(const cvec& h_direct, const cmat& cascade, const PhaseVector& v);

// Mutable solver state for one user with the caches needed to evaluate
// ||h||^2 incrementally.
struct SuState {
  const Scenario* scenario = nullptr;
  const ArrayGeometry* geom = nullptr;
  RotationLimits limits;
  int user = 0;

  std::vector<vec3> boresights;
  EulerOrientation psi;
  PhaseVector v;

  OrientationCache cache;
  cmat irs_bs;   // M x N
  cmat cascade;  // A = H diag(h_irs)
  cvec h_direct; // M
  cvec h_irs;    // N
  cvec h;        // composite
  double objective = 0.0;      // ||h||^2
  double gradient_scale = 1.0; // fixed normalization for gradient steps

  static SuState create(const Scenario& scenario, const ArrayGeometry& geom,
                        const RotationLimits& limits, const RotationState& init,
                        const PhaseVector& v0, int user = 0);

  void refresh_composite(); // h and objective from current caches
  void set_phase(const PhaseVector& v_new);
  void set_boresight(int m, const vec3& f); // row-m incremental update
  void set_orientation(const EulerOrientation& psi_new);
  RotationState rotation() const;
};

// Projected-gradient step on antenna m's deflection angles with
// backtracking; the objective never decreases (the boresight is retained
// when no acceptable step exists). Returns true when the state moved.
bool su_boresight_step(SuState& state, int m, const SolverControls& controls);

// Projected-gradient step on the Euler angles: trial point projected onto
// box ∩ linearized-visibility, accepted only if the original visibility
// constraint holds and the objective is non-decreasing.
bool su_orientation_step(SuState& state, const SolverControls& controls);

struct SuSolveReport {
  std::vector<double> trace; // ||h||^2 per outer iteration, index 0 = initial
  std::vector<BoresightAngles> boresights;
  EulerOrientation orientation;
  PhaseVector v;
  cvec combiner; // MRC at the final channel (zero vector if degenerate)
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Alternates phase sweeps, per-antenna boresight steps and the orientation
// step until the relative objective change falls below controls.su_tol or
// the iteration budget is spent. The gating flags disable rotation blocks
// (used by the benchmark schemes and the reflected-power analysis).
SuSolveReport su_alternating_optimize(const Scenario& scenario, const ArrayGeometry& geom,
                                      const RotationLimits& limits, const RotationState& init,
                                      const PhaseVector& v0, const SolverControls& controls,
                                      bool optimize_boresights = true,
                                      bool optimize_orientation = true, int user = 0);

} // namespace dualrot
