// SPDX-License-Identifier: Apache-2.0

#include "dualrot/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualrot/projection.hpp"
#include "dualrot/rng.hpp"
#include "dualrot/su_solver.hpp"

namespace dualrot {

namespace {

Scenario without_direct_link(const Scenario& scenario) {
  Scenario reflected = scenario;
  for (auto& paths : reflected.direct_paths) paths.clear();
  return reflected;
}

void require_los_dominant(const Scenario& scenario, int user, const char* where) {
  const auto& paths = scenario.irs_paths[user];
  if (paths.size() != 1 || !paths.front().is_los)
    throw std::invalid_argument(std::string(where) +
                                ": LoS-dominant user-IRS mode required (single LoS path)");
}

BoresightAngles angles_from_unit(const vec3& f, double max_elevation) {
  BoresightAngles angles;
  angles.elevation =
      std::min(std::acos(std::min(1.0, std::max(-1.0, f.y()))), max_elevation);
  angles.azimuth = angles.elevation == 0.0 ? 0.0 : std::atan2(f.z(), f.x());
  if (angles.azimuth < 0.0) angles.azimuth += 2.0 * kPi;
  return angles;
}

} // namespace

ReflectedPowerBreakdown reflected_power_ff(const Scenario& scenario, const ArrayGeometry& geom,
                                           const std::vector<vec3>& boresights,
                                           const EulerOrientation& psi, int user) {
  const OrientationCache cache = orientation_cache(geom, psi);
  const FarFieldFactors factors = irs_bs_channel_farfield(
      geom, scenario.bs_pattern, scenario.irs_pattern, boresights, cache);
  const cvec h_irs = user_irs_channel(scenario, geom, cache, user);
  const cvec s = (factors.irs_factor.array() * h_irs.array()).matrix();

  const double coeff_sq = std::norm(factors.coefficient);
  const double bs_power = factors.bs_factor.squaredNorm();
  const double abs_sum = s.cwiseAbs().sum();
  const double sq_sum = s.squaredNorm();
  const int elements = static_cast<int>(s.size());

  ReflectedPowerBreakdown breakdown;
  breakdown.model = PowerModel::FarField;
  breakdown.total = coeff_sq * bs_power * abs_sum * abs_sum;
  breakdown.avg_column_power = coeff_sq / elements * bs_power * sq_sum;
  if (sq_sum == 0.0) {
    breakdown.efficiency = 0.0;
    breakdown.efficiency_defined = false;
  } else {
    breakdown.efficiency = abs_sum * abs_sum / (elements * sq_sum);
  }
  return breakdown;
}

double optimize_reflected_power(const cmat& cascade, int restarts, std::uint64_t seed,
                                const cvec* warm_start) {
  const int elements = static_cast<int>(cascade.cols());
  const cvec zero_direct = cvec::Zero(cascade.rows());

  const auto polish = [&](cvec v) {
    double power = (cascade * v).squaredNorm();
    for (int sweep = 0; sweep < 200; ++sweep) {
      v = bcd_phase_sweep(zero_direct, cascade, v);
      const double next = (cascade * v).squaredNorm();
      const bool done = next - power <= 1e-10 * std::max(power, 1e-300);
      power = next;
      if (done) break;
    }
    return power;
  };

  double best = 0.0;
  if (warm_start != nullptr) best = polish(*warm_start);
  Rng rng(seed);
  for (int r = 0; r < restarts; ++r)
    best = std::max(best, polish(random_phase_vector(rng, elements)));
  return best;
}

ReflectedPowerBreakdown reflected_power_general(const cmat& cascade, int restarts,
                                                std::uint64_t seed, const cvec* warm_start) {
  const int elements = static_cast<int>(cascade.cols());
  ReflectedPowerBreakdown breakdown;
  breakdown.model = PowerModel::NearField;
  breakdown.avg_column_power = cascade.squaredNorm() / elements;
  breakdown.total = optimize_reflected_power(cascade, restarts, seed, warm_start);
  if (breakdown.avg_column_power == 0.0) {
    breakdown.efficiency = 0.0;
    breakdown.efficiency_defined = false;
  } else {
    breakdown.efficiency =
        breakdown.total / (static_cast<double>(elements) * elements * breakdown.avg_column_power);
  }
  return breakdown;
}

ReflectedPowerBreakdown reflected_power_nf(const Scenario& scenario, const ArrayGeometry& geom,
                                           const std::vector<vec3>& boresights,
                                           const EulerOrientation& psi, int restarts,
                                           std::uint64_t seed, int user,
                                           const cvec* warm_start) {
  require_los_dominant(scenario, user, "reflected_power_nf");
  const OrientationCache cache = orientation_cache(geom, psi);
  const cmat irs_bs =
      irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern, boresights, cache);
  const cvec h_irs = user_irs_channel(scenario, geom, cache, user);
  const int elements = geom.irs_count();

  // Average column power in closed form: kappa_0 / N * sum of the pairwise
  // gain products over squared distances, with kappa_0 the common per-element
  // incident power |c|^2 G_inc (lambda / 4 pi)^2.
  const PathComponent& los = scenario.irs_paths[user].front();
  const double incidence = element_gain(scenario.irs_pattern, -cache.normal.dot(los.direction));
  const double amplitude_factor = geom.wavelength / (4.0 * kPi);
  const double kappa = std::norm(los.gain) * incidence * amplitude_factor * amplitude_factor;

  double pair_sum = 0.0;
  for (int m = 0; m < geom.bs_count(); ++m) {
    const vec3 antenna = geom.bs_center + geom.bs_offsets[m];
    for (int n = 0; n < elements; ++n) {
      const vec3 delta = antenna - cache.positions[n];
      const double dist = delta.norm();
      const vec3 dir = delta / dist;
      const double gain_ref = element_gain(scenario.irs_pattern, cache.normal.dot(dir));
      if (gain_ref == 0.0) continue;
      const double gain_bs = element_gain(scenario.bs_pattern, -boresights[m].dot(dir));
      pair_sum += gain_ref * gain_bs / (dist * dist);
    }
  }

  ReflectedPowerBreakdown breakdown;
  breakdown.model = PowerModel::NearField;
  breakdown.avg_column_power = kappa * pair_sum / elements;
  breakdown.total =
      optimize_reflected_power(cascade_columns(irs_bs, h_irs), restarts, seed, warm_start);
  if (breakdown.avg_column_power == 0.0) {
    breakdown.efficiency = 0.0;
    breakdown.efficiency_defined = false;
  } else {
    breakdown.efficiency = breakdown.total / (static_cast<double>(elements) * elements *
                                              breakdown.avg_column_power);
  }
  return breakdown;
}

RotationState maximize_reflected_power(const Scenario& scenario, const ArrayGeometry& geom,
                                       const RotationLimits& limits, PowerModel model,
                                       bool optimize_boresights, bool optimize_orientation,
                                       const SolverControls& controls, std::uint64_t seed,
                                       int user) {
  const Scenario reflected = without_direct_link(scenario);
  const RotationState init = RotationState::reference(geom.bs_count());

  if (model == PowerModel::NearField) {
    Rng rng(seed);
    const PhaseVector v0 = random_phase_vector(rng, geom.irs_count());
    const SuSolveReport report =
        su_alternating_optimize(reflected, geom, limits, init, v0, controls,
                                optimize_boresights, optimize_orientation, user);
    return {report.boresights, report.orientation};
  }

  // Far field: the optimized power separates into a boresight factor and a
  // panel factor. Each boresight is solved in closed form (cap projection of
  // the common BS direction); the panel factor sum_n |s_n(psi)| is maximized
  // by projected gradient ascent with the analytic orientation derivatives.
  RotationState state = init;
  const vec3 to_bs = (geom.bs_center - geom.irs_center).normalized();
  if (optimize_boresights) {
    const vec3 best = cap_project(-to_bs, limits.max_elevation);
    state.boresights.assign(state.boresights.size(),
                            angles_from_unit(best, limits.max_elevation));
  }

  if (optimize_orientation) {
    const GainPattern& pattern = reflected.irs_pattern;
    const BoxLimits box = BoxLimits::symmetric(limits.euler_max);

    const auto panel_sum = [&](const OrientationCache& cache) {
      const cvec h_irs = user_irs_channel(reflected, geom, cache, user);
      return element_gain_sqrt(pattern, cache.normal.dot(to_bs)) * h_irs.cwiseAbs().sum();
    };

    EulerOrientation psi{};
    OrientationCache cache = orientation_cache(geom, psi);
    double value = panel_sum(cache);
    const double scale = std::max(value, 1e-300);

    for (int iter = 0; iter < controls.su_max_iters; ++iter) {
      const cvec h_irs = user_irs_channel(reflected, geom, cache, user);
      const double cos_ref = cache.normal.dot(to_bs);
      const double sqrt_ref = element_gain_sqrt(pattern, cos_ref);
      const double factor_ref = element_gain_sqrt_derivative_factor(pattern, cos_ref);
      const double abs_sum = h_irs.cwiseAbs().sum();
      const auto partials = user_irs_orientation_partials(reflected, geom, cache, user);

      vec3 grad = vec3::Zero();
      for (int axis = 0; axis < 3; ++axis) {
        const vec3 dnormal = euler_rotation_partial(cache.psi, axis) * geom.reference_normal;
        double g = factor_ref * dnormal.dot(to_bs) * abs_sum;
        const cvec& dh = partials[axis];
        for (Eigen::Index n = 0; n < h_irs.size(); ++n) {
          const double mag = std::abs(h_irs[n]);
          if (mag > 0.0) g += sqrt_ref * (std::conj(h_irs[n]) * dh[n]).real() / mag;
        }
        grad[axis] = g;
      }
      grad /= scale;
      if (grad.norm() == 0.0) break;

      const vec3 psi_vec = psi.to_vector();
      const vec3 vis_grad = visibility_gradient(geom, psi);
      const Halfspace halfspace{vis_grad, vis_grad.dot(psi_vec) - visibility_margin(geom, psi)};
      bool progressed = false;
      double step = controls.step_max;
      while (step >= controls.step_min) {
        const vec3 cand_vec = dykstra_project(psi_vec + step * grad, box, halfspace);
        const EulerOrientation cand = EulerOrientation::from_vector(cand_vec);
        if (visibility_margin(geom, cand) >= 0.0) {
          const OrientationCache cand_cache = orientation_cache(geom, cand);
          const double cand_value = panel_sum(cand_cache);
          if (cand_value >= value) {
            progressed = cand_value - value > controls.su_tol * std::max(value, 1e-300);
            psi = cand;
            cache = cand_cache;
            value = cand_value;
            break;
          }
        }
        step *= controls.backtrack;
      }
      if (!progressed) break;
    }
    state.orientation = psi;
  }
  return state;
}

namespace {

double model_power(const Scenario& scenario, const ArrayGeometry& geom, PowerModel model,
                   const RotationState& rotation, int restarts, std::uint64_t seed, int user) {
  const std::vector<vec3> boresights = boresights_to_vectors(rotation.boresights);
  if (model == PowerModel::FarField)
    return reflected_power_ff(scenario, geom, boresights, rotation.orientation, user).total;
  const OrientationCache cache = orientation_cache(geom, rotation.orientation);
  const cmat irs_bs =
      irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern, boresights, cache);
  const cvec h_irs = user_irs_channel(scenario, geom, cache, user);
  return optimize_reflected_power(cascade_columns(irs_bs, h_irs), restarts, seed, nullptr);
}

} // namespace

RotationGains rotation_gains(const Scenario& scenario, const ArrayGeometry& geom,
                             PowerModel model, const RotationOptimizer& optimizer, int restarts,
                             std::uint64_t seed, int user) {
  const RotationState baseline = RotationState::reference(geom.bs_count());
  const double j_base = model_power(scenario, geom, model, baseline, restarts, seed, user);

  RotationGains gains;
  if (j_base <= 0.0) {
    gains.defined = false;
    return gains;
  }
  gains.bs =
      model_power(scenario, geom, model, optimizer(true, false), restarts, seed, user) / j_base;
  gains.irs =
      model_power(scenario, geom, model, optimizer(false, true), restarts, seed, user) / j_base;
  gains.dual =
      model_power(scenario, geom, model, optimizer(true, true), restarts, seed, user) / j_base;
  return gains;
}

double ff_separability_residual(const Scenario& scenario, const ArrayGeometry& geom,
                                const std::vector<vec3>& boresights_a,
                                const std::vector<vec3>& boresights_b,
                                const EulerOrientation& psi_a, const EulerOrientation& psi_b,
                                int user) {
  const double j11 = reflected_power_ff(scenario, geom, boresights_a, psi_a, user).total;
  const double j22 = reflected_power_ff(scenario, geom, boresights_b, psi_b, user).total;
  const double j12 = reflected_power_ff(scenario, geom, boresights_a, psi_b, user).total;
  const double j21 = reflected_power_ff(scenario, geom, boresights_b, psi_a, user).total;
  const double denom = std::max(j11 * j22, j12 * j21);
  if (denom == 0.0) return 0.0;
  return std::abs(j11 * j22 - j12 * j21) / denom;
}

double nf_separability_residual(const Scenario& scenario, const ArrayGeometry& geom,
                                const std::vector<vec3>& boresights_a,
                                const std::vector<vec3>& boresights_b,
                                const EulerOrientation& psi_a, const EulerOrientation& psi_b,
                                int restarts, std::uint64_t seed, int user) {
  const auto power = [&](const std::vector<vec3>& f, const EulerOrientation& psi) {
    const OrientationCache cache = orientation_cache(geom, psi);
    const cmat irs_bs = irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern, f, cache);
    const cvec h_irs = user_irs_channel(scenario, geom, cache, user);
    return optimize_reflected_power(cascade_columns(irs_bs, h_irs), restarts, seed, nullptr);
  };
  const double j11 = power(boresights_a, psi_a);
  const double j22 = power(boresights_b, psi_b);
  const double j12 = power(boresights_a, psi_b);
  const double j21 = power(boresights_b, psi_a);
  const double denom = std::max(j11 * j22, j12 * j21);
  if (denom == 0.0) return 0.0;
  return std::abs(j11 * j22 - j12 * j21) / denom;
}

NfDecomposition nf_dual_decomposition(const Scenario& scenario, const ArrayGeometry& geom,
                                      const RotationState& optimized, int restarts,
                                      std::uint64_t seed, int user) {
  NfDecomposition decomposition;
  decomposition.optimized =
      reflected_power_nf(scenario, geom, boresights_to_vectors(optimized.boresights),
                         optimized.orientation, restarts, seed, user);
  const RotationState baseline = RotationState::reference(geom.bs_count());
  decomposition.baseline =
      reflected_power_nf(scenario, geom, boresights_to_vectors(baseline.boresights),
                         baseline.orientation, restarts, seed, user);
  if (decomposition.baseline.total <= 0.0 || !decomposition.baseline.efficiency_defined) {
    decomposition.defined = false;
    return decomposition;
  }
  decomposition.power_gain =
      decomposition.optimized.avg_column_power / decomposition.baseline.avg_column_power;
  decomposition.efficiency_gain =
      decomposition.optimized.efficiency / decomposition.baseline.efficiency;
  decomposition.dual_gain = decomposition.optimized.total / decomposition.baseline.total;
  return decomposition;
}

AlignmentStats alignment_stats(const ArrayGeometry& geom, const GainPattern& irs_pattern,
                               const EulerOrientation& psi) {
  const OrientationCache cache = orientation_cache(geom, psi);
  const int m_count = geom.bs_count();
  const int n_count = geom.irs_count();
  const double pairs = static_cast<double>(m_count) * n_count;

  double sum_rho = 0.0, sum_rho_sq = 0.0, sum_gain = 0.0, sum_gain_sq = 0.0;
  for (int m = 0; m < m_count; ++m) {
    const vec3 antenna = geom.bs_center + geom.bs_offsets[m];
    for (int n = 0; n < n_count; ++n) {
      const vec3 delta = antenna - cache.positions[n];
      const double rho = cache.normal.dot(delta / delta.norm());
      const double gain = element_gain(irs_pattern, rho);
      sum_rho += rho;
      sum_rho_sq += rho * rho;
      sum_gain += gain;
      sum_gain_sq += gain * gain;
    }
  }

  AlignmentStats stats;
  stats.mean_alignment = sum_rho / pairs;
  stats.alignment_variation =
      std::sqrt(std::max(0.0, sum_rho_sq / pairs - stats.mean_alignment * stats.mean_alignment));
  const double mean_gain = sum_gain / pairs;
  stats.gain_variance = std::max(0.0, sum_gain_sq / pairs - mean_gain * mean_gain);
  stats.aggregate_gain = sum_gain;
  stats.aperture_ratio = geom.aperture_ratio();
  return stats;
}

Proposition3Report proposition3_check(const ScenarioConfig& config, int samples,
                                      const std::vector<double>& sweep_ratios,
                                      std::uint64_t seed) {
  Proposition3Report report;
  const GainPattern irs_pattern(config.irs_exponent);
  const vec3 direction = (config.irs_center - config.bs_center).normalized();
  const RotationLimits limits = RotationLimits::from_config(config);
  Rng rng(seed);

  const auto geometry_at = [&](double distance) {
    ScenarioConfig moved = config;
    moved.irs_center = config.bs_center + distance * direction;
    return build_geometry(moved);
  };

  report.worst_mean_margin = std::numeric_limits<double>::infinity();
  report.worst_variation_margin = std::numeric_limits<double>::infinity();

  for (int i = 0; i < samples; ++i) {
    // Sample until every pairwise alignment is positive (the proposition's
    // hypothesis) and the visibility constraint holds.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double distance = std::exp(rng.uniform(std::log(1.0), std::log(20.0)));
      const ArrayGeometry geom = geometry_at(distance);
      const EulerOrientation psi{rng.uniform(-limits.euler_max[0], limits.euler_max[0]),
                                 rng.uniform(-limits.euler_max[1], limits.euler_max[1]),
                                 rng.uniform(-limits.euler_max[2], limits.euler_max[2])};
      if (visibility_margin(geom, psi) < 0.0) continue;

      const OrientationCache cache = orientation_cache(geom, psi);
      double min_rho = 1.0;
      for (int m = 0; m < geom.bs_count() && min_rho > 0.0; ++m) {
        const vec3 antenna = geom.bs_center + geom.bs_offsets[m];
        for (const vec3& position : cache.positions) {
          const vec3 delta = antenna - position;
          min_rho = std::min(min_rho, cache.normal.dot(delta / delta.norm()));
          if (min_rho <= 0.0) break;
        }
      }
      if (min_rho <= 0.0) continue;

      const AlignmentStats stats = alignment_stats(geom, irs_pattern, psi);
      const double ceiling = geom.bs_count() * geom.irs_count() * irs_pattern.peak;
      const double mean_margin = ceiling * stats.mean_alignment - stats.aggregate_gain;
      const double variation_margin =
          ceiling * (1.0 - stats.alignment_variation * stats.alignment_variation) -
          stats.aggregate_gain;
      report.worst_mean_margin = std::min(report.worst_mean_margin, mean_margin);
      report.worst_variation_margin = std::min(report.worst_variation_margin, variation_margin);
      if (mean_margin < 0.0 || variation_margin < 0.0) report.inequalities_hold = false;
      ++report.samples;
      break;
    }
  }

  // Fixed-orientation xi sweep (ascending): Delta grows near-linearly in xi,
  // so Delta/xi stays within a constant factor of its small-xi value. The
  // sweep orientation must be generic: at the reference orientation the
  // normal coincides with the center direction, the first-order coefficient
  // of the alignment expansion vanishes, and Delta scales quadratically.
  const EulerOrientation sweep_orientation{0.35, -0.3, 0.25};
  std::vector<double> ratios = sweep_ratios;
  std::sort(ratios.begin(), ratios.end());
  const ArrayGeometry base_geom = build_geometry(config);
  double previous_delta = -std::numeric_limits<double>::infinity();
  report.min_delta_over_xi = std::numeric_limits<double>::infinity();
  for (const double ratio : ratios) {
    const ArrayGeometry geom = geometry_at(base_geom.irs_diagonal / ratio);
    const AlignmentStats stats = alignment_stats(geom, irs_pattern, sweep_orientation);
    report.sweep_ratios.push_back(stats.aperture_ratio);
    report.sweep_deltas.push_back(stats.alignment_variation);
    const double delta_over_xi = stats.alignment_variation / stats.aperture_ratio;
    report.max_delta_over_xi = std::max(report.max_delta_over_xi, delta_over_xi);
    report.min_delta_over_xi = std::min(report.min_delta_over_xi, delta_over_xi);
    if (stats.alignment_variation < previous_delta - 1e-12) report.delta_monotone = false;
    previous_delta = stats.alignment_variation;
  }
  if (!report.sweep_ratios.empty()) {
    const double smallest = report.sweep_deltas.front() / report.sweep_ratios.front();
    report.ratio_bounded = report.max_delta_over_xi <= 2.0 * smallest;
  }
  return report;
}

} // namespace dualrot
