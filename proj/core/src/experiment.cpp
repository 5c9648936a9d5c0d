// SPDX-License-Identifier: Apache-2.0

#include "dualrot/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "dualrot/projection.hpp"
#include "dualrot/rng.hpp"
#include "dualrot/su_solver.hpp"

namespace dualrot {

namespace {

// RNG stream tags, so every random draw is attributable to (seed, purpose).
constexpr std::uint64_t kPhaseInitStream = 0x01;
constexpr std::uint64_t kBetaStream = 0x02;
constexpr std::uint64_t kDecomposeStream = 0x03;
constexpr std::uint64_t kPropsStream = 0x04;

template <typename Job>
std::vector<ExperimentResult> run_parallel(const std::vector<Job>& jobs,
                                           const std::function<ExperimentResult(const Job&)>& fn,
                                           int threads) {
  std::vector<ExperimentResult> results(jobs.size());
  if (threads < 1) threads = 1;
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));

  const auto worker = [&](int id) {
    try {
      for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1))
        results[i] = fn(jobs[i]);
    } catch (...) {
      errors[static_cast<std::size_t>(id)] = std::current_exception();
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& error : errors)
    if (error) std::rethrow_exception(error);
  return results;
}

} // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Dual: return "dual";
    case Scheme::BsOnly: return "bs";
    case Scheme::IrsOnly: return "irs";
    case Scheme::Fixed: return "fixed";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "dual") return Scheme::Dual;
  if (name == "bs") return Scheme::BsOnly;
  if (name == "irs") return Scheme::IrsOnly;
  if (name == "fixed") return Scheme::Fixed;
  throw ConfigError("scheme", "unknown scheme '" + name + "' (dual|bs|irs|fixed)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Power: return "power";
    case SweepAxis::Antennas: return "antennas";
    case SweepAxis::Users: return "users";
    case SweepAxis::Xi: return "xi";
  }
  return "?";
}

SweepAxis axis_from_string(const std::string& name) {
  if (name == "power") return SweepAxis::Power;
  if (name == "antennas") return SweepAxis::Antennas;
  if (name == "users") return SweepAxis::Users;
  if (name == "xi") return SweepAxis::Xi;
  throw ConfigError("axis", "unknown axis '" + name + "' (power|antennas|users|xi)");
}

std::vector<std::uint64_t> experiment_seeds(const ScenarioConfig& config) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(config.trials));
  for (int i = 0; i < config.trials; ++i) seeds.push_back(config.seed + static_cast<std::uint64_t>(i));
  return seeds;
}

RotationState matched_boresight_init(const Scenario& scenario, const ArrayGeometry& geom,
                                     const RotationLimits& limits) {
  RotationState state = RotationState::reference(geom.bs_count());
  const int users = scenario.num_users();
  for (int m = 0; m < geom.bs_count(); ++m) {
    const auto& paths = scenario.direct_paths[m % users];
    const vec3 target = paths.empty()
                            ? (scenario.users[m % users] - geom.bs_center).normalized()
                            : -paths.front().direction;
    const vec3 aimed = cap_project(target, limits.max_elevation);
    BoresightAngles angles;
    angles.elevation =
        std::min(std::acos(std::min(1.0, std::max(-1.0, aimed.y()))), limits.max_elevation);
    angles.azimuth = angles.elevation == 0.0 ? 0.0 : std::atan2(aimed.z(), aimed.x());
    if (angles.azimuth < 0.0) angles.azimuth += 2.0 * kPi;
    state.boresights[m] = angles;
  }
  return state;
}

ExperimentResult run_scheme(const ScenarioConfig& config, Scheme scheme, std::uint64_t seed) {
  config.validate();
  const ArrayGeometry geom = build_geometry(config);
  const Scenario scenario = sample_scenario(config, seed);
  const RotationLimits limits = RotationLimits::from_config(config);

  // Identical phase initialization across schemes for the same seed. The
  // boresight-steering schemes run from two deterministic starts (reference
  // boresights and the matched assignment) and keep the better outcome; the
  // orientation always starts at the BS-facing reference.
  Rng phase_rng(Rng::derive(seed, kPhaseInitStream));
  const PhaseVector v0 = random_phase_vector(phase_rng, geom.irs_count());
  const bool steer_bs = scheme == Scheme::Dual || scheme == Scheme::BsOnly;

  const auto start = std::chrono::steady_clock::now();
  SolveReport report =
      ao_optimize(scenario, geom, limits, RotationState::reference(geom.bs_count()), v0,
                  config.solver, scheme);
  if (steer_bs) {
    SolveReport matched = ao_optimize(
        scenario, geom, limits, matched_boresight_init(scenario, geom, limits), v0,
        config.solver, scheme);
    if (matched.trace.back() > report.trace.back()) report = std::move(matched);
  }
  const auto stop = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.scheme = to_string(scheme);
  result.seed = seed;
  result.sum_rate = report.trace.back();
  result.iterations = report.iterations;
  result.converged = report.converged;
  result.sinrs.assign(report.sinrs.data(), report.sinrs.data() + report.sinrs.size());
  result.trace = report.trace;
  result.wall_time_s = std::chrono::duration<double>(stop - start).count();

  const AlignmentStats stats =
      alignment_stats(geom, scenario.irs_pattern, report.orientation);
  result.xi = stats.aperture_ratio;
  result.rho_bar = stats.mean_alignment;
  result.delta = stats.alignment_variation;
  result.gain_variance = stats.gain_variance;

  // Combining efficiency of user 0's cascade at the final rotation; the
  // run's own phase vector seeds the search.
  const OrientationCache cache = orientation_cache(geom, report.orientation);
  const cmat irs_bs = irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern,
                                     boresights_to_vectors(report.boresights), cache);
  const cvec h_irs = user_irs_channel(scenario, geom, cache, 0);
  const ReflectedPowerBreakdown breakdown =
      reflected_power_general(cascade_columns(irs_bs, h_irs), config.solver.nf_restarts,
                              Rng::derive(seed, kBetaStream), &report.v);
  result.beta = breakdown.efficiency_defined ? breakdown.efficiency : 0.0;
  return result;
}

std::vector<ExperimentResult> run_convergence(const ScenarioConfig& config,
                                              const std::vector<Scheme>& schemes, int threads) {
  struct Cell {
    Scheme scheme;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const Scheme scheme : schemes)
    for (const std::uint64_t seed : experiment_seeds(config)) cells.push_back({scheme, seed});

  return run_parallel<Cell>(
      cells,
      [&](const Cell& cell) {
        ExperimentResult result = run_scheme(config, cell.scheme, cell.seed);
        result.experiment = "converge";
        return result;
      },
      threads);
}

std::vector<double> default_axis_values(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Power: return {0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
    case SweepAxis::Antennas: return {4.0, 9.0, 16.0, 25.0, 36.0, 49.0};
    case SweepAxis::Users: return {2.0, 3.0, 4.0, 5.0, 6.0};
    case SweepAxis::Xi:
      return {0.070710678118654752, 0.088388347648318447, 0.11785113019775793,
              0.17677669529663689, 0.23570226039551585, 0.35355339059327379,
              0.70710678118654752};
  }
  return {};
}

ScenarioConfig apply_axis_value(const ScenarioConfig& config, SweepAxis axis, double value) {
  ScenarioConfig out = config;
  switch (axis) {
    case SweepAxis::Power:
      out.user_power_dbm = value;
      break;
    case SweepAxis::Antennas: {
      const int side = static_cast<int>(std::llround(std::sqrt(value)));
      if (side * side != static_cast<int>(std::llround(value)))
        throw ConfigError("antennas", "axis value must be a perfect square (UPA)");
      out.bs_count_x = side;
      out.bs_count_z = side;
      break;
    }
    case SweepAxis::Users:
      out.num_users = static_cast<int>(std::llround(value));
      break;
    case SweepAxis::Xi: {
      if (value <= 0.0) throw ConfigError("xi", "aperture ratio must be positive");
      const double diagonal = (config.irs_side_count - 1) * config.irs_spacing * std::sqrt(2.0);
      const vec3 direction = (config.irs_center - config.bs_center).normalized();
      out.irs_center = config.bs_center + (diagonal / value) * direction;
      break;
    }
  }
  out.validate();
  return out;
}

std::vector<ExperimentResult> run_sweep(const ScenarioConfig& config, SweepAxis axis,
                                        const std::vector<double>& values,
                                        const std::vector<Scheme>& schemes, int threads) {
  struct Cell {
    Scheme scheme;
    double value;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const Scheme scheme : schemes)
    for (const double value : values)
      for (const std::uint64_t seed : experiment_seeds(config))
        cells.push_back({scheme, value, seed});

  const std::string axis_name = to_string(axis);
  return run_parallel<Cell>(
      cells,
      [&](const Cell& cell) {
        const ScenarioConfig cell_config = apply_axis_value(config, axis, cell.value);
        ExperimentResult result = run_scheme(cell_config, cell.scheme, cell.seed);
        result.experiment = "sweep";
        result.axis = axis_name;
        result.value = cell.value;
        return result;
      },
      threads);
}

std::vector<ExperimentResult> run_decompose(const ScenarioConfig& config,
                                            const DecomposeOptions& options) {
  std::vector<double> ratios =
      options.ratios.empty() ? default_axis_values(SweepAxis::Xi) : options.ratios;

  std::vector<ExperimentResult> rows;
  rows.reserve(ratios.size());
  const RotationLimits limits = RotationLimits::from_config(config);

  for (std::size_t i = 0; i < ratios.size(); ++i) {
    ScenarioConfig point = apply_axis_value(config, SweepAxis::Xi, ratios[i]);
    point.cascaded_los_only = true;
    point.num_users = 1;

    const double azimuth = deg2rad(options.user_azimuth_deg);
    const vec3 user(options.user_distance * std::sin(azimuth),
                    options.user_distance * std::cos(azimuth), point.user_height);
    const ArrayGeometry geom = build_geometry(point);
    const Scenario scenario = make_cascaded_scenario(point, {user});

    const std::uint64_t stream = Rng::derive(config.seed, kDecomposeStream + i);
    const RotationState optimized =
        maximize_reflected_power(scenario, geom, limits, PowerModel::NearField, true, true,
                                 point.solver, stream);
    const NfDecomposition decomposition =
        nf_dual_decomposition(scenario, geom, optimized, point.solver.nf_restarts, stream);

    ExperimentResult row;
    row.experiment = "decompose";
    row.axis = "xi";
    row.value = geom.aperture_ratio();
    row.seed = config.seed;
    row.xi = geom.aperture_ratio();
    row.decompose_valid = decomposition.defined;
    if (decomposition.defined) {
      row.power_gain = decomposition.power_gain;
      row.efficiency_gain = decomposition.efficiency_gain;
      row.dual_gain = decomposition.dual_gain;
      row.beta_fixed = decomposition.baseline.efficiency;
      row.beta_dual = decomposition.optimized.efficiency;
    }
    const AlignmentStats stats =
        alignment_stats(geom, scenario.irs_pattern, optimized.orientation);
    row.rho_bar = stats.mean_alignment;
    row.delta = stats.alignment_variation;
    row.gain_variance = stats.gain_variance;
    rows.push_back(std::move(row));
  }
  return rows;
}

PropsReport run_props(const ScenarioConfig& config, int prop1_pairs, int prop2_geometries,
                      int prop2_random_phases, int prop3_samples, std::uint64_t seed) {
  PropsReport report;
  const RotationLimits limits = RotationLimits::from_config(config);
  Rng rng(Rng::derive(seed, kPropsStream));

  const auto random_feasible_rotation = [&](const ArrayGeometry& geom) {
    RotationState state = RotationState::reference(geom.bs_count());
    for (BoresightAngles& angles : state.boresights) {
      angles.elevation = rng.uniform(0.0, limits.max_elevation);
      angles.azimuth = rng.angle();
    }
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const EulerOrientation psi{rng.uniform(-limits.euler_max[0], limits.euler_max[0]),
                                 rng.uniform(-limits.euler_max[1], limits.euler_max[1]),
                                 rng.uniform(-limits.euler_max[2], limits.euler_max[2])};
      if (visibility_margin(geom, psi) >= 0.0) {
        state.orientation = psi;
        return state;
      }
    }
    return state; // reference orientation is always feasible
  };

  // Proposition 1: four-point separability of the far-field power, and unit
  // combining efficiency for LoS-only user-IRS channels.
  {
    const ArrayGeometry geom = build_geometry(config);
    const Scenario scenario = sample_scenario(config, seed);
    ScenarioConfig los_config = config;
    los_config.cascaded_los_only = true;
    const Scenario los_scenario = sample_scenario(los_config, seed);

    for (int i = 0; i < prop1_pairs; ++i) {
      const RotationState a = random_feasible_rotation(geom);
      const RotationState b = random_feasible_rotation(geom);
      const double residual = ff_separability_residual(
          scenario, geom, boresights_to_vectors(a.boresights), boresights_to_vectors(b.boresights),
          a.orientation, b.orientation);
      report.max_ff_residual = std::max(report.max_ff_residual, residual);

      const ReflectedPowerBreakdown breakdown = reflected_power_ff(
          los_scenario, geom, boresights_to_vectors(a.boresights), a.orientation);
      if (breakdown.efficiency_defined)
        report.max_ff_efficiency_error =
            std::max(report.max_ff_efficiency_error, std::abs(breakdown.efficiency - 1.0));
      ++report.prop1_pairs;
    }
    report.prop1_pass =
        report.max_ff_residual < 1e-9 && report.max_ff_efficiency_error < 1e-12;
  }

  // Proposition 2: near-field power bounds on random cascaded-LoS geometries.
  {
    const int sides[] = {3, 7, 21};
    report.min_upper_margin = std::numeric_limits<double>::infinity();
    for (int g = 0; g < prop2_geometries; ++g) {
      ScenarioConfig point = config;
      point.cascaded_los_only = true;
      point.num_users = 1;
      point.irs_side_count = sides[g % 3];
      const double distance = std::exp(rng.uniform(std::log(1.0), std::log(10.0)));
      point.irs_center =
          config.bs_center + distance * (config.irs_center - config.bs_center).normalized();

      const ArrayGeometry geom = build_geometry(point);
      const Scenario scenario = sample_scenario(point, Rng::derive(seed, 100 + g));

      // Rotation with a visible user (nonzero column power).
      ReflectedPowerBreakdown breakdown;
      RotationState rotation = RotationState::reference(geom.bs_count());
      bool visible = false;
      for (int attempt = 0; attempt < 200 && !visible; ++attempt) {
        rotation = random_feasible_rotation(geom);
        breakdown = reflected_power_nf(scenario, geom, boresights_to_vectors(rotation.boresights),
                                       rotation.orientation, config.solver.nf_restarts,
                                       Rng::derive(seed, 200 + g));
        visible = breakdown.avg_column_power > 0.0;
      }
      if (!visible) continue;
      ++report.prop2_geometries;

      const int elements = geom.irs_count();
      const double upper = static_cast<double>(elements) * elements * breakdown.avg_column_power;
      const double lower = elements * breakdown.avg_column_power;

      const OrientationCache cache = orientation_cache(geom, rotation.orientation);
      const cmat irs_bs =
          irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern,
                         boresights_to_vectors(rotation.boresights), cache);
      const cmat cascade = cascade_columns(irs_bs, user_irs_channel(scenario, geom, cache, 0));
      for (int r = 0; r < prop2_random_phases; ++r) {
        const double power = (cascade * random_phase_vector(rng, elements)).squaredNorm();
        report.min_upper_margin = std::min(report.min_upper_margin, upper - power);
        if (power > upper) ++report.prop2_upper_violations;
      }
      if (breakdown.total > upper) ++report.prop2_upper_violations;
      if (breakdown.total < lower) ++report.prop2_lower_violations;
    }
    report.prop2_pass = report.prop2_geometries > 0 && report.prop2_upper_violations == 0 &&
                        report.prop2_lower_violations == 0;
  }

  report.prop3 = proposition3_check(config, prop3_samples,
                                    {0.025, 0.05, 0.1, 0.2, 0.4, 0.8}, Rng::derive(seed, 7));
  report.prop3_pass = report.prop3.inequalities_hold && report.prop3.ratio_bounded &&
                      report.prop3.delta_monotone;
  return report;
}

std::vector<CellSummary> summarize(const std::vector<ExperimentResult>& rows) {
  std::vector<CellSummary> cells;
  for (const ExperimentResult& row : rows) {
    CellSummary* cell = nullptr;
    for (CellSummary& existing : cells)
      if (existing.scheme == row.scheme && existing.axis == row.axis &&
          existing.value == row.value) {
        cell = &existing;
        break;
      }
    if (cell == nullptr) {
      cells.push_back({row.scheme, row.axis, row.value, 0, 0.0, 0.0});
      cell = &cells.back();
    }
    ++cell->count;
    cell->mean += row.sum_rate;
    cell->std_error += row.sum_rate * row.sum_rate;
  }
  for (CellSummary& cell : cells) {
    const double mean = cell.mean / cell.count;
    const double variance =
        cell.count > 1
            ? std::max(0.0, (cell.std_error - cell.count * mean * mean) / (cell.count - 1))
            : 0.0;
    cell.mean = mean;
    cell.std_error = std::sqrt(variance / cell.count);
  }
  return cells;
}

} // namespace dualrot
