// SPDX-License-Identifier: Apache-2.0

#include "dualrot/mu_solver.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace dualrot {

namespace {

constexpr double kLn2 = 0.69314718055994531;

double wrap_azimuth(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a;
}

// Per-user SINR pieces shared by the rate and gradient evaluations:
// inner(k,j) = w_k^H h_j, denom_k = I_k + Z_k.
struct RateWeights {
  cmat inner;
  rvec wnorm2;
  rvec denom;
  rvec gamma;
};

RateWeights rate_weights(const cmat& combiners, const std::vector<cvec>& channels,
                         const std::vector<double>& power, double noise) {
  const int users = static_cast<int>(channels.size());
  RateWeights weights;
  weights.inner.resize(users, users);
  weights.wnorm2.resize(users);
  weights.denom.resize(users);
  weights.gamma.resize(users);
  for (int k = 0; k < users; ++k) {
    const auto w = combiners.col(k);
    weights.wnorm2[k] = w.squaredNorm();
    for (int j = 0; j < users; ++j) weights.inner(k, j) = w.dot(channels[j]);
    double interference = 0.0;
    for (int j = 0; j < users; ++j)
      if (j != k) interference += power[j] * std::norm(weights.inner(k, j));
    weights.denom[k] = interference + noise * weights.wnorm2[k];
    weights.gamma[k] = power[k] * std::norm(weights.inner(k, k)) / weights.denom[k];
  }
  return weights;
}

double sum_rate_from(const RateWeights& weights) {
  double rate = 0.0;
  for (int k = 0; k < weights.gamma.size(); ++k) rate += std::log2(1.0 + weights.gamma[k]);
  return rate;
}

// Gradient assembly from the signal/interference weights: the projections
// are D_j^H w_k with D_j the channel-derivative matrix of user j.
template <typename ProjFn>
vec3 assemble_sum_rate_gradient(const RateWeights& weights, const std::vector<double>& power,
                                ProjFn&& projection) {
  const int users = weights.gamma.size();
  vec3 grad = vec3::Zero();
  for (int k = 0; k < users; ++k) {
    const cd sig_weight = power[k] * weights.inner(k, k) / weights.denom[k];
    Eigen::Vector3cd acc = sig_weight * projection(k, k);
    for (int j = 0; j < users; ++j) {
      if (j == k) continue;
      const cd int_weight = weights.gamma[k] * power[j] * weights.inner(k, j) / weights.denom[k];
      acc -= int_weight * projection(k, j);
    }
    grad += acc.real() / (1.0 + weights.gamma[k]);
  }
  return 2.0 / kLn2 * grad;
}

} // namespace

std::pair<rvec, double> sinr_and_sum_rate(const cmat& combiners,
                                          const std::vector<cvec>& channels,
                                          const std::vector<double>& power, double noise) {
  const RateWeights weights = rate_weights(combiners, channels, power, noise);
  return {weights.gamma, sum_rate_from(weights)};
}

cmat mmse_combiners(const std::vector<cvec>& channels, const std::vector<double>& power,
                    double noise) {
  const int users = static_cast<int>(channels.size());
  const int antennas = static_cast<int>(channels[0].size());
  cmat combiners(antennas, users);
  for (int k = 0; k < users; ++k) {
    cmat covariance = noise * cmat::Identity(antennas, antennas);
    for (int j = 0; j < users; ++j)
      if (j != k)
        covariance.noalias() += power[j] * channels[j] * channels[j].adjoint();
    cvec w = covariance.ldlt().solve(channels[k]);
    const double norm = w.norm();
    combiners.col(k) = norm > 0.0 ? cvec(w / norm) : cvec(cvec::Zero(antennas));
  }
  return combiners;
}

FpAuxiliary fp_auxiliary_update(const rvec& sinrs, const cmat& signal_amplitudes,
                                const rvec& received_power) {
  const int users = sinrs.size();
  FpAuxiliary aux;
  aux.mu = sinrs;
  aux.nu.resize(users);
  for (int k = 0; k < users; ++k)
    aux.nu[k] = std::sqrt(1.0 + aux.mu[k]) * signal_amplitudes(k, k) / received_power[k];
  return aux;
}

QuadraticObjective fp_quadratic_build(const FpAuxiliary& aux, const std::vector<cvec>& h_direct,
                                      const cmat& irs_bs, const std::vector<cvec>& h_irs,
                                      const cmat& combiners, const std::vector<double>& power) {
  const int users = static_cast<int>(h_direct.size());
  const int elements = static_cast<int>(irs_bs.cols());

  QuadraticObjective objective;
  objective.Q = cmat::Zero(elements, elements);
  objective.q = cvec::Zero(elements);

  for (int k = 0; k < users; ++k) {
    const auto w = combiners.col(k);
    const cvec z = irs_bs.adjoint() * w; // shared across the j terms
    const double nu_sq = std::norm(aux.nu[k]);
    cvec d = cvec::Zero(elements);
    for (int j = 0; j < users; ++j) {
      const cvec t = (h_irs[j].conjugate().array() * z.array()).matrix();
      objective.Q.selfadjointView<Eigen::Lower>().rankUpdate(t, -nu_sq * power[j] / kLn2);
      const cd b = w.dot(h_direct[j]);
      d += power[j] * b * t;
      if (j == k) objective.q += (aux.nu[k] / kLn2) * std::sqrt((1.0 + aux.mu[k]) * power[k]) * t;
    }
    objective.q -= (std::norm(aux.nu[k]) / kLn2) * d;
  }
  objective.Q = cmat(objective.Q.selfadjointView<Eigen::Lower>());
  return objective;
}

double fp_surrogate_value(const FpAuxiliary& aux, const std::vector<cvec>& h_direct,
                          const cmat& irs_bs, const std::vector<cvec>& h_irs,
                          const cmat& combiners, const std::vector<double>& power, double noise,
                          const cvec& v) {
  const int users = static_cast<int>(h_direct.size());
  std::vector<cvec> channels;
  channels.reserve(users);
  for (int j = 0; j < users; ++j)
    channels.push_back(h_direct[j] + cascade_apply(irs_bs, v, h_irs[j]));

  double value = 0.0;
  for (int k = 0; k < users; ++k) {
    const auto w = combiners.col(k);
    double received = noise * w.squaredNorm();
    for (int j = 0; j < users; ++j) received += power[j] * std::norm(w.dot(channels[j]));
    const cd signal = std::sqrt(power[k]) * w.dot(channels[k]);
    value += std::log2(1.0 + aux.mu[k]) - aux.mu[k] / kLn2 +
             (2.0 * std::sqrt(1.0 + aux.mu[k]) * (std::conj(aux.nu[k]) * signal).real() -
              std::norm(aux.nu[k]) * received) /
                 kLn2;
  }
  return value;
}

namespace {

// Affine SINR evaluator in v at fixed combiners: u_kj(v) = sqrt(P_j) *
// (b_kj + t_kj^H v).
struct AffineRates {
  cmat b;                        // K x K
  std::vector<std::vector<cvec>> t; // [k][j], N each
  rvec noise_term;               // sigma^2 ||w_k||^2
  std::vector<double> power;

  static AffineRates build(const std::vector<cvec>& h_direct, const cmat& irs_bs,
                           const std::vector<cvec>& h_irs, const cmat& combiners,
                           const std::vector<double>& power, double noise) {
    const int users = static_cast<int>(h_direct.size());
    AffineRates affine;
    affine.power = power;
    affine.b.resize(users, users);
    affine.noise_term.resize(users);
    affine.t.assign(users, std::vector<cvec>(users));
    for (int k = 0; k < users; ++k) {
      const auto w = combiners.col(k);
      affine.noise_term[k] = noise * w.squaredNorm();
      const cvec z = irs_bs.adjoint() * w;
      for (int j = 0; j < users; ++j) {
        affine.b(k, j) = w.dot(h_direct[j]);
        affine.t[k][j] = (h_irs[j].conjugate().array() * z.array()).matrix();
      }
    }
    return affine;
  }

  // signal amplitudes u(k,j), received powers rho_k, SINRs and sum rate.
  void evaluate(const cvec& v, cmat& u, rvec& rho, rvec& gamma, double& rate) const {
    const int users = static_cast<int>(b.rows());
    u.resize(users, users);
    rho.resize(users);
    gamma.resize(users);
    rate = 0.0;
    for (int k = 0; k < users; ++k) {
      double interference = noise_term[k];
      for (int j = 0; j < users; ++j) {
        u(k, j) = std::sqrt(power[j]) * (b(k, j) + t[k][j].dot(v));
        if (j != k) interference += std::norm(u(k, j));
      }
      const double signal = std::norm(u(k, k));
      rho[k] = interference + signal;
      gamma[k] = signal / interference;
      rate += std::log2(1.0 + gamma[k]);
    }
  }
};

} // namespace

PhaseVector fp_rcg_phase_update(const std::vector<cvec>& h_direct, const cmat& irs_bs,
                                const std::vector<cvec>& h_irs, const cmat& combiners,
                                const std::vector<double>& power, double noise,
                                const PhaseVector& v0, const SolverControls& controls) {
  const AffineRates affine = AffineRates::build(h_direct, irs_bs, h_irs, combiners, power, noise);
  const double rcg_tol = controls.rcg_tol_per_element * static_cast<double>(v0.size());

  cmat u;
  rvec rho, gamma;
  double rate = 0.0;

  PhaseVector best = v0;
  affine.evaluate(best, u, rho, gamma, rate);
  double best_rate = rate;

  for (int i = 0; i < controls.fp_iters; ++i) {
    const FpAuxiliary aux = fp_auxiliary_update(gamma, u, rho);
    const QuadraticObjective objective =
        fp_quadratic_build(aux, h_direct, irs_bs, h_irs, combiners, power);
    const RcgResult result = rcg_maximize(objective, best, controls.rcg_max_iters, rcg_tol);

    affine.evaluate(result.v, u, rho, gamma, rate);
    if (rate < best_rate) break; // candidate rejected in favor of the incumbent
    const bool progressed = rate > best_rate + 1e-12 * std::max(best_rate, 1.0);
    best = result.v;
    best_rate = rate;
    if (!progressed) break;
  }
  return best;
}

vec3 sum_rate_gradient_boresight(const Scenario& scenario, const ArrayGeometry& geom,
                                 const std::vector<vec3>& boresights,
                                 const EulerOrientation& psi, const cvec& v,
                                 const cmat& combiners, int m) {
  const OrientationCache cache = orientation_cache(geom, psi);
  const cmat irs_bs =
      irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern, boresights, cache);
  const int users = scenario.num_users();

  std::vector<cvec> channels(users);
  std::vector<Eigen::RowVector3cd> rows(users);
  for (int k = 0; k < users; ++k) {
    const cvec h_irs = user_irs_channel(scenario, geom, cache, k);
    const cvec weighted = (v.array() * h_irs.array()).matrix();
    channels[k] = user_bs_channel(scenario, geom, boresights, k) + irs_bs * weighted;
    rows[k] =
        channel_derivative_boresight_row(scenario, geom, boresights[m], m, cache, weighted, k);
  }

  const RateWeights weights =
      rate_weights(combiners, channels, scenario.power_w, scenario.noise_w);
  return assemble_sum_rate_gradient(weights, scenario.power_w, [&](int k, int j) {
    return Eigen::Vector3cd(combiners(m, k) * rows[j].adjoint());
  });
}

vec3 sum_rate_gradient_orientation(const Scenario& scenario, const ArrayGeometry& geom,
                                   const std::vector<vec3>& boresights,
                                   const EulerOrientation& psi, const cvec& v,
                                   const cmat& combiners) {
  const OrientationCache cache = orientation_cache(geom, psi);
  const cmat irs_bs =
      irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern, boresights, cache);
  const OrientationDerivatives derivs =
      orientation_derivatives(scenario, geom, boresights, cache);
  const int users = scenario.num_users();

  std::vector<cvec> channels(users);
  std::vector<cmat> jacobians(users); // M x 3 per user
  for (int j = 0; j < users; ++j) {
    const cvec h_irs = user_irs_channel(scenario, geom, cache, j);
    channels[j] = user_bs_channel(scenario, geom, boresights, j) +
                  cascade_apply(irs_bs, v, h_irs);
    jacobians[j].resize(irs_bs.rows(), 3);
    for (int axis = 0; axis < 3; ++axis)
      jacobians[j].col(axis) = cascade_apply(irs_bs, v, derivs.user_irs_partial[j][axis]) +
                               cascade_apply(derivs.irs_bs_partial[axis], v, h_irs);
  }

  const RateWeights weights =
      rate_weights(combiners, channels, scenario.power_w, scenario.noise_w);
  return assemble_sum_rate_gradient(weights, scenario.power_w, [&](int k, int j) {
    return Eigen::Vector3cd(jacobians[j].adjoint() * combiners.col(k));
  });
}

MuState MuState::create(const Scenario& scenario, const ArrayGeometry& geom,
                        const RotationLimits& limits, const SolverControls& controls,
                        const RotationState& init, const PhaseVector& v0) {
  MuState state;
  state.scenario = &scenario;
  state.geom = &geom;
  state.limits = limits;
  state.controls = controls;
  state.boresights = boresights_to_vectors(init.boresights);
  state.psi = init.orientation;
  state.v = v0;
  state.cache = orientation_cache(geom, init.orientation);
  state.irs_bs = irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern,
                                state.boresights, state.cache);
  const int users = scenario.num_users();
  state.h_direct.resize(users);
  state.h_irs.resize(users);
  state.weighted_irs.resize(users);
  state.h.resize(users);
  for (int k = 0; k < users; ++k) {
    state.h_direct[k] = user_bs_channel(scenario, geom, state.boresights, k);
    state.h_irs[k] = user_irs_channel(scenario, geom, state.cache, k);
    state.weighted_irs[k] = (v0.array() * state.h_irs[k].array()).matrix();
    state.h[k] = state.h_direct[k] + state.irs_bs * state.weighted_irs[k];
  }
  state.combiners = mmse_combiners(state.h, scenario.power_w, scenario.noise_w);
  state.refresh_rates();
  return state;
}

void MuState::refresh_rates() {
  const auto [gamma, rate] = sinr_and_sum_rate(combiners, h, scenario->power_w, scenario->noise_w);
  sinrs = gamma;
  sum_rate = rate;
}

void MuState::set_phase(const PhaseVector& v_new) {
  v = v_new;
  for (int k = 0; k < scenario->num_users(); ++k) {
    weighted_irs[k] = (v.array() * h_irs[k].array()).matrix();
    h[k] = h_direct[k] + irs_bs * weighted_irs[k];
  }
  refresh_rates();
}

void MuState::set_boresight(int m, const vec3& f) {
  boresights[m] = f;
  irs_bs_channel_row(*geom, scenario->bs_pattern, scenario->irs_pattern, f, m, cache, irs_bs);
  for (int k = 0; k < scenario->num_users(); ++k) {
    h_direct[k][m] = user_bs_channel_entry(*scenario, *geom, f, m, k);
    h[k][m] = h_direct[k][m] + (irs_bs.row(m) * weighted_irs[k]).value();
  }
  refresh_rates();
}

void MuState::set_orientation(const EulerOrientation& psi_new) {
  psi = psi_new;
  cache = orientation_cache(*geom, psi_new);
  irs_bs = irs_bs_channel(*geom, scenario->bs_pattern, scenario->irs_pattern, boresights, cache);
  for (int k = 0; k < scenario->num_users(); ++k) {
    h_irs[k] = user_irs_channel(*scenario, *geom, cache, k);
    weighted_irs[k] = (v.array() * h_irs[k].array()).matrix();
    h[k] = h_direct[k] + irs_bs * weighted_irs[k];
  }
  refresh_rates();
}

void MuState::set_combiners(const cmat& combiners_new) {
  combiners = combiners_new;
  refresh_rates();
}

RotationState MuState::rotation() const {
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

void boresight_update_sweep(MuState& state) {
  for (int m = 0; m < state.geom->bs_count(); ++m) {
    std::vector<Eigen::RowVector3cd> rows(state.scenario->num_users());
    for (int j = 0; j < state.scenario->num_users(); ++j)
      rows[j] = channel_derivative_boresight_row(*state.scenario, *state.geom,
                                                 state.boresights[m], m, state.cache,
                                                 state.weighted_irs[j], j);
    const RateWeights current = rate_weights(state.combiners, state.h, state.scenario->power_w,
                                             state.scenario->noise_w);
    const vec3 grad =
        assemble_sum_rate_gradient(current, state.scenario->power_w, [&](int k, int j) {
          return Eigen::Vector3cd(state.combiners(m, k) * rows[j].adjoint());
        });
    if (grad.norm() == 0.0) continue; // fixed point

    const vec3 f_before = state.boresights[m];
    const double rate_before = state.sum_rate;
    bool accepted = false;
    double step = state.controls.step_max;
    while (step >= state.controls.step_min) {
      const vec3 candidate = cap_project(f_before + step * grad, state.limits.max_elevation);
      state.set_boresight(m, candidate);
      if (state.sum_rate >= rate_before) {
        accepted = true;
        break;
      }
      step *= state.controls.backtrack;
    }
    if (!accepted) state.set_boresight(m, f_before);
  }
}

void orientation_bb_update(MuState& state) {
  const OrientationDerivatives derivs =
      orientation_derivatives(*state.scenario, *state.geom, state.boresights, state.cache);
  const int users = state.scenario->num_users();
  std::vector<cmat> jacobians(users);
  for (int j = 0; j < users; ++j) {
    jacobians[j].resize(state.irs_bs.rows(), 3);
    for (int axis = 0; axis < 3; ++axis)
      jacobians[j].col(axis) =
          cascade_apply(state.irs_bs, state.v, derivs.user_irs_partial[j][axis]) +
          cascade_apply(derivs.irs_bs_partial[axis], state.v, state.h_irs[j]);
  }
  const RateWeights weights =
      rate_weights(state.combiners, state.h, state.scenario->power_w, state.scenario->noise_w);
  const vec3 grad =
      assemble_sum_rate_gradient(weights, state.scenario->power_w, [&](int k, int j) {
        return Eigen::Vector3cd(jacobians[j].adjoint() * state.combiners.col(k));
      });

  // Safeguarded alternating BB1/BB2 step from consecutive (psi, gradient)
  // pairs; tau_ini on the first call. Nonpositive curvature along the path
  // (the gain pattern's convex skirt) takes the maximum step so the update
  // can leave flat regions; the rate check below still guards acceptance.
  const vec3 psi_vec = state.psi.to_vector();
  double tau = state.controls.bb_init;
  if (state.bb_has_memory) {
    const vec3 s = psi_vec - state.bb_prev_psi;
    const vec3 y = state.bb_prev_grad - grad;
    const double sy = s.dot(y);
    if (sy > 0.0) {
      tau = state.bb_use_first ? s.squaredNorm() / sy : sy / y.squaredNorm();
      state.bb_use_first = !state.bb_use_first;
    } else if (s.squaredNorm() > 0.0) {
      tau = state.controls.bb_max;
    }
  }
  tau = std::min(std::max(tau, state.controls.bb_min), state.controls.bb_max);
  state.bb_has_memory = true;
  state.bb_prev_psi = psi_vec;
  state.bb_prev_grad = grad;

  if (grad.norm() == 0.0) return; // fixed point

  const BoxLimits box = BoxLimits::symmetric(state.limits.euler_max);
  const vec3 vis_grad = visibility_gradient(*state.geom, state.psi);
  const Halfspace halfspace{vis_grad,
                            vis_grad.dot(psi_vec) - visibility_margin(*state.geom, state.psi)};

  const EulerOrientation psi_before = state.psi;
  const double rate_before = state.sum_rate;
  while (tau >= state.controls.bb_min) {
    const vec3 candidate_vec = dykstra_project(psi_vec + tau * grad, box, halfspace);
    const EulerOrientation candidate = EulerOrientation::from_vector(candidate_vec);
    if (visibility_margin(*state.geom, candidate) >= 0.0) {
      state.set_orientation(candidate);
      if (state.sum_rate >= rate_before) return;
      state.set_orientation(psi_before);
    }
    tau *= 0.5;
  }
}

void rotation_update(MuState& state, bool update_boresights, bool update_orientation) {
  for (int t = 0; t < state.controls.rot_max_iters; ++t) {
    const double rate_before = state.sum_rate;
    if (update_boresights) boresight_update_sweep(state);
    if (update_orientation) orientation_bb_update(state);
    const double denom = std::max(rate_before, state.controls.rot_floor);
    if (std::abs(state.sum_rate - rate_before) / denom <= state.controls.rot_tol) break;
  }
}

SolveReport ao_optimize(const Scenario& scenario, const ArrayGeometry& geom,
                        const RotationLimits& limits, const RotationState& init,
                        const PhaseVector& v0, const SolverControls& controls, Scheme scheme) {
  MuState state = MuState::create(scenario, geom, limits, controls, init, v0);

  SolveReport report;
  report.trace.push_back(state.sum_rate);

  const bool update_bs = scheme == Scheme::Dual || scheme == Scheme::BsOnly;
  const bool update_irs = scheme == Scheme::Dual || scheme == Scheme::IrsOnly;

  for (int t = 0; t < controls.ao_max_iters; ++t) {
    const double rate_before = state.sum_rate;

    state.set_phase(fp_rcg_phase_update(state.h_direct, state.irs_bs, state.h_irs,
                                        state.combiners, scenario.power_w, scenario.noise_w,
                                        state.v, controls));
    if (scheme != Scheme::Fixed) rotation_update(state, update_bs, update_irs);
    state.set_combiners(mmse_combiners(state.h, scenario.power_w, scenario.noise_w));

    report.trace.push_back(state.sum_rate);
    report.iterations = t + 1;
    if (std::abs(state.sum_rate - rate_before) / std::max(rate_before, 1e-300) <=
        controls.ao_tol) {
      report.converged = true;
      break;
    }
  }

  const RotationState rotation = state.rotation();
  report.combiners = state.combiners;
  report.v = state.v;
  report.boresights = rotation.boresights;
  report.orientation = rotation.orientation;
  report.sinrs = state.sinrs;
  return report;
}

} // namespace dualrot
