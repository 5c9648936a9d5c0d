// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit and acceptance suites: finite differences,
// exhaustive phase-grid search (with local refinement so the oracle's own
// quantization error is negligible), small scenario builders and feasible
// rotation samplers. Everything here is independent of the production
// optimizer paths it is used to check.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dualrot/channel.hpp"
#include "dualrot/config.hpp"
#include "dualrot/geometry.hpp"
#include "dualrot/rng.hpp"
#include "dualrot/types.hpp"

namespace testsupport {

using namespace dualrot;

inline double rel_error(double actual, double expected) {
  const double scale = std::max(std::abs(expected), 1e-300);
  return std::abs(actual - expected) / scale;
}

// Central difference of a scalar-valued function along one coordinate.
template <typename F>
double central_difference(F&& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Exhaustive maximization of a phase objective over `levels`^n grid points,
// then `refine_rounds` of local 5-point-per-axis zooming around the best
// point. The refinement drives the oracle's quantization error far below the
// comparison tolerances.
template <typename F>
double grid_max_phases(int n, int levels, int refine_rounds, F&& objective) {
  std::vector<double> phases(n, 0.0), best_phases(n, 0.0);
  double best = -std::numeric_limits<double>::infinity();

  const std::function<void(int)> sweep = [&](int dim) {
    if (dim == n) {
      const double value = objective(phases);
      if (value > best) {
        best = value;
        best_phases = phases;
      }
      return;
    }
    for (int k = 0; k < levels; ++k) {
      phases[dim] = 2.0 * kPi * k / levels;
      sweep(dim + 1);
    }
  };
  sweep(0);

  double width = 2.0 * kPi / levels;
  for (int round = 0; round < refine_rounds; ++round) {
    const std::vector<double> center = best_phases;
    const std::function<void(int)> refine = [&](int dim) {
      if (dim == n) {
        const double value = objective(phases);
        if (value > best) {
          best = value;
          best_phases = phases;
        }
        return;
      }
      for (int k = -2; k <= 2; ++k) {
        phases[dim] = center[dim] + 0.5 * width * k / 2.0;
        refine(dim + 1);
      }
    };
    refine(0);
    width *= 0.5;
  }
  return best;
}

inline cvec phases_to_vector(const std::vector<double>& phases) {
  cvec v(static_cast<Eigen::Index>(phases.size()));
  for (std::size_t i = 0; i < phases.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = cd(std::cos(phases[i]), std::sin(phases[i]));
  return v;
}

// Reduced-size configuration for fast tests.
inline ScenarioConfig small_config(int bs_side = 2, int irs_side = 3, int users = 2) {
  ScenarioConfig config;
  config.bs_count_x = bs_side;
  config.bs_count_z = bs_side;
  config.irs_side_count = irs_side;
  config.num_users = users;
  return config;
}

inline EulerOrientation random_orientation(Rng& rng, const RotationLimits& limits,
                                           double shrink = 1.0) {
  return {rng.uniform(-limits.euler_max[0], limits.euler_max[0]) * shrink,
          rng.uniform(-limits.euler_max[1], limits.euler_max[1]) * shrink,
          rng.uniform(-limits.euler_max[2], limits.euler_max[2]) * shrink};
}

// Random rotation with the orientation resampled until the visibility
// constraint holds.
inline RotationState random_feasible_rotation(Rng& rng, const ArrayGeometry& geom,
                                              const RotationLimits& limits,
                                              double shrink = 1.0) {
  RotationState state = RotationState::reference(geom.bs_count());
  for (BoresightAngles& angles : state.boresights) {
    angles.elevation = rng.uniform(0.0, limits.max_elevation * shrink);
    angles.azimuth = rng.angle();
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const EulerOrientation psi = random_orientation(rng, limits, shrink);
    if (visibility_margin(geom, psi) >= 0.0) {
      state.orientation = psi;
      break;
    }
  }
  return state;
}

// Complex unit vector with uniformly random phases.
inline cvec random_unit_complex(Rng& rng, int n) {
  cvec v(n);
  for (int i = 0; i < n; ++i) v[i] = cd(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return v.normalized();
}

inline PathComponent make_test_path(const vec3& source, const vec3& receiver,
                                    const vec3* scatterer, double kappa, double phase,
                                    double wavelength, double wavenumber) {
  PathComponent path;
  if (scatterer == nullptr) {
    path.is_los = true;
    path.distance = (receiver - source).norm();
    path.direction = (receiver - source) / path.distance;
    path.gain = wavelength / (4.0 * kPi * path.distance) *
                cd(std::cos(-wavenumber * path.distance), std::sin(-wavenumber * path.distance));
  } else {
    path.is_los = false;
    path.scatterer = *scatterer;
    path.distance = (*scatterer - source).norm() + (receiver - *scatterer).norm();
    path.direction = (receiver - *scatterer).normalized();
    path.phase = phase;
    const double arg = -wavenumber * path.distance + phase;
    path.gain = kappa * wavelength / (4.0 * kPi * path.distance) * cd(std::cos(arg), std::sin(arg));
  }
  return path;
}

// Two users and hand-placed scatterers, all comfortably inside the front
// hemispheres of the BS array and the reference panel: every directional
// cosine stays positive under modest rotations, so finite-difference checks
// sample interior points deterministically.
inline Scenario interior_test_scenario(const ScenarioConfig& config) {
  const ArrayGeometry geom = build_geometry(config);
  const double wl = geom.wavelength, k = geom.wavenumber();
  const double kappa = config.nlos_amplitude;

  Scenario scenario;
  scenario.bs_pattern = GainPattern(config.bs_exponent);
  scenario.irs_pattern = GainPattern(config.irs_exponent);
  scenario.direct_attenuation_db = config.direct_attenuation_db;
  scenario.noise_w = config.noise_w();

  const std::vector<vec3> users{vec3(-25.0, 10.0, 1.5), vec3(-20.0, 14.0, 1.5)};
  const std::vector<std::vector<vec3>> scatterers{
      {vec3(-20.0, 8.0, 6.0), vec3(-18.0, 14.0, 4.0)},
      {vec3(-15.0, 9.0, 5.0), vec3(-22.0, 16.0, 7.0)}};

  for (std::size_t u = 0; u < users.size() && static_cast<int>(u) < config.num_users; ++u) {
    scenario.users.push_back(users[u]);
    std::vector<PathComponent> direct{
        make_test_path(users[u], geom.bs_center, nullptr, kappa, 0.0, wl, k)};
    std::vector<PathComponent> reflected{
        make_test_path(users[u], geom.irs_center, nullptr, kappa, 0.0, wl, k)};
    double phase = 0.7;
    for (const vec3& scatterer : scatterers[u]) {
      direct.push_back(
          make_test_path(users[u], geom.bs_center, &scatterer, kappa, phase, wl, k));
      reflected.push_back(
          make_test_path(users[u], geom.irs_center, &scatterer, kappa, phase + 1.1, wl, k));
      phase += 2.0;
    }
    scenario.direct_paths.push_back(std::move(direct));
    scenario.irs_paths.push_back(std::move(reflected));
    scenario.power_w.push_back(config.user_power_w());
  }
  return scenario;
}

} // namespace testsupport
