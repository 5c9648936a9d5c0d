// SPDX-License-Identifier: Apache-2.0

#include "dualrot/su_solver.hpp"

#include <cmath>

#include "dualrot/projection.hpp"

namespace dualrot {

namespace {

double wrap_azimuth(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a;
}

} // namespace

cmat cascade_columns(const cmat& irs_bs, const cvec& h_irs) {
  return irs_bs * h_irs.asDiagonal();
}

cvec mrc_combiner(const cvec& h) {
  const double norm = h.norm();
  if (norm < 1e-300) throw DegenerateChannelError("mrc_combiner: zero channel");
  return h / norm;
}

PhaseVector bcd_phase_sweep(const cvec& h_direct, const cmat& cascade, const PhaseVector& v) {
  PhaseVector out = v;
  cvec residual = h_direct + cascade * out;
  for (Eigen::Index n = 0; n < out.size(); ++n) {
    const auto column = cascade.col(n);
    const cd eta = column.dot(residual) - out[n] * column.squaredNorm();
    const double mag = std::abs(eta);
    if (mag == 0.0) continue; // any unit value is optimal, keep the current one
    const cd updated = eta / mag;
    residual += (updated - out[n]) * column;
    out[n] = updated;
  }
  return out;
}

SuState SuState::create(const Scenario& scenario, const ArrayGeometry& geom,
                        const RotationLimits& limits, const RotationState& init,
                        const PhaseVector& v0, int user) {
  SuState state;
  state.scenario = &scenario;
  state.geom = &geom;
  state.limits = limits;
  state.user = user;
  state.boresights = boresights_to_vectors(init.boresights);
  state.psi = init.orientation;
  state.v = v0;
  state.cache = orientation_cache(geom, init.orientation);
  state.irs_bs = irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern,
                                state.boresights, state.cache);
  state.h_irs = user_irs_channel(scenario, geom, state.cache, user);
  state.cascade = cascade_columns(state.irs_bs, state.h_irs);
  state.h_direct = user_bs_channel(scenario, geom, state.boresights, user);
  state.refresh_composite();
  state.gradient_scale = std::max(state.objective, 1e-300);
  return state;
}

void SuState::refresh_composite() {
  h = h_direct + cascade * v;
  objective = h.squaredNorm();
}

void SuState::set_phase(const PhaseVector& v_new) {
  v = v_new;
  refresh_composite();
}

void SuState::set_boresight(int m, const vec3& f) {
  boresights[m] = f;
  irs_bs_channel_row(*geom, scenario->bs_pattern, scenario->irs_pattern, f, m, cache, irs_bs);
  cascade.row(m) = irs_bs.row(m).cwiseProduct(h_irs.transpose());
  h_direct[m] = user_bs_channel_entry(*scenario, *geom, f, m, user);
  h[m] = h_direct[m] + (cascade.row(m) * v).value();
  objective = h.squaredNorm();
}

void SuState::set_orientation(const EulerOrientation& psi_new) {
  psi = psi_new;
  cache = orientation_cache(*geom, psi_new);
  irs_bs = irs_bs_channel(*geom, scenario->bs_pattern, scenario->irs_pattern, boresights, cache);
  h_irs = user_irs_channel(*scenario, *geom, cache, user);
  cascade = cascade_columns(irs_bs, h_irs);
  refresh_composite();
}

RotationState SuState::rotation() const {
  RotationState rotation;
  rotation.boresights.reserve(boresights.size());
  for (const vec3& f : boresights) {
    BoresightAngles angles;
    angles.elevation =
        std::min(std::acos(std::min(1.0, std::max(-1.0, f.y()))), limits.max_elevation);
    angles.azimuth = angles.elevation == 0.0 ? 0.0 : wrap_azimuth(std::atan2(f.z(), f.x()));
    rotation.boresights.push_back(angles);
  }
  rotation.orientation = psi;
  return rotation;
}

bool su_boresight_step(SuState& state, int m, const SolverControls& controls) {
  // Gradient of ||h||^2 with respect to theta_m via the single nonzero
  // channel row and the angular Jacobian, rescaled by the initial power so
  // unit steps are meaningfully sized.
  const cvec weighted_irs = (state.v.array() * state.h_irs.array()).matrix();
  const Eigen::RowVector3cd row = channel_derivative_boresight_row(
      *state.scenario, *state.geom, state.boresights[m], m, state.cache, weighted_irs,
      state.user);
  const BoresightAngles angles = state.rotation().boresights[m];
  const Eigen::Matrix<double, 3, 2> jacobian = boresight_jacobian(angles);
  Eigen::Vector2d grad;
  for (int i = 0; i < 2; ++i) {
    const cd dh = row * jacobian.col(i);
    grad[i] = 2.0 * (std::conj(state.h[m]) * dh).real();
  }
  grad /= state.gradient_scale;
  if (grad.norm() == 0.0) return false; // fixed point

  const vec3 f_before = state.boresights[m];
  const double objective_before = state.objective;

  double step = controls.step_max;
  while (step >= controls.step_min) {
    BoresightAngles candidate;
    candidate.elevation =
        std::min(std::max(angles.elevation + step * grad[0], 0.0), state.limits.max_elevation);
    candidate.azimuth = wrap_azimuth(angles.azimuth + step * grad[1]);
    state.set_boresight(m, boresight_vector(candidate));
    if (state.objective >= objective_before) return true;
    step *= controls.backtrack;
  }
  state.set_boresight(m, f_before); // no acceptable step, retain
  return false;
}

bool su_orientation_step(SuState& state, const SolverControls& controls) {
  const ArrayGeometry& geom = *state.geom;

  const OrientationDerivatives derivs =
      orientation_derivatives(*state.scenario, geom, state.boresights, state.cache);
  vec3 grad;
  for (int axis = 0; axis < 3; ++axis) {
    const cvec dh = cascade_apply(state.irs_bs, state.v, derivs.user_irs_partial[state.user][axis]) +
                    cascade_apply(derivs.irs_bs_partial[axis], state.v, state.h_irs);
    grad[axis] = 2.0 * (dh.dot(state.h)).real();
  }
  grad /= state.gradient_scale;
  if (grad.norm() == 0.0) return false; // fixed point

  const vec3 psi_vec = state.psi.to_vector();
  const BoxLimits box = BoxLimits::symmetric(state.limits.euler_max);
  const vec3 vis_grad = visibility_gradient(geom, state.psi);
  const Halfspace halfspace{vis_grad, vis_grad.dot(psi_vec) - visibility_margin(geom, state.psi)};

  const EulerOrientation psi_before = state.psi;
  const double objective_before = state.objective;

  double step = controls.step_max;
  while (step >= controls.step_min) {
    const vec3 candidate_vec = dykstra_project(psi_vec + step * grad, box, halfspace);
    const EulerOrientation candidate = EulerOrientation::from_vector(candidate_vec);
    if (visibility_margin(geom, candidate) >= 0.0) {
      state.set_orientation(candidate);
      if (state.objective >= objective_before) return true;
      state.set_orientation(psi_before);
    }
    step *= controls.backtrack;
  }
  return false;
}

SuSolveReport su_alternating_optimize(const Scenario& scenario, const ArrayGeometry& geom,
                                      const RotationLimits& limits, const RotationState& init,
                                      const PhaseVector& v0, const SolverControls& controls,
                                      bool optimize_boresights, bool optimize_orientation,
                                      int user) {
  SuState state = SuState::create(scenario, geom, limits, init, v0, user);

  SuSolveReport report;
  report.trace.push_back(state.objective);

  for (int iter = 0; iter < controls.su_max_iters; ++iter) {
    const double before = state.objective;

    for (int sweep = 0; sweep < controls.bcd_max_sweeps; ++sweep) {
      const double sweep_before = state.objective;
      state.set_phase(bcd_phase_sweep(state.h_direct, state.cascade, state.v));
      if (std::abs(state.objective - sweep_before) <=
          controls.bcd_tol * std::max(sweep_before, 1e-300))
        break;
    }

    if (optimize_boresights)
      for (int m = 0; m < geom.bs_count(); ++m) su_boresight_step(state, m, controls);
    if (optimize_orientation) su_orientation_step(state, controls);

    report.trace.push_back(state.objective);
    report.iterations = iter + 1;
    if (std::abs(state.objective - before) <= controls.su_tol * std::max(before, 1e-300)) {
      report.converged = true;
      break;
    }
  }

  const RotationState rotation = state.rotation();
  report.boresights = rotation.boresights;
  report.orientation = rotation.orientation;
  report.v = state.v;
  report.objective = state.objective;
  report.combiner =
      state.h.norm() > 1e-300 ? mrc_combiner(state.h) : cvec(cvec::Zero(state.h.size()));
  return report;
}

} // namespace dualrot
