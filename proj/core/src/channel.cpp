// SPDX-License-Identifier: Apache-2.0

#include "dualrot/channel.hpp"

#include <cmath>

#include "dualrot/rng.hpp"

namespace dualrot {

namespace {

cd unit_phasor(double phase) { return cd(std::cos(phase), std::sin(phase)); }

// Free-space LoS amplitude lambda / (4 pi d) with propagation phase.
cd los_gain(double wavelength, double wavenumber, double distance) {
  return wavelength / (4.0 * kPi * distance) * unit_phasor(-wavenumber * distance);
}

PathComponent make_los_path(const vec3& source, const vec3& receiver, double wavelength,
                            double wavenumber) {
  PathComponent path;
  path.is_los = true;
  path.distance = (receiver - source).norm();
  path.direction = (receiver - source) / path.distance;
  path.gain = los_gain(wavelength, wavenumber, path.distance);
  return path;
}

PathComponent make_nlos_path(const vec3& source, const vec3& receiver, const vec3& scatterer,
                             double kappa, double phase, double wavelength,
                             double wavenumber) {
  PathComponent path;
  path.is_los = false;
  path.scatterer = scatterer;
  path.distance = (scatterer - source).norm() + (receiver - scatterer).norm();
  path.direction = (receiver - scatterer).normalized();
  path.phase = phase;
  path.gain = kappa * wavelength / (4.0 * kPi * path.distance) *
              unit_phasor(-wavenumber * path.distance + phase);
  return path;
}

} // namespace

double element_gain(const GainPattern& pattern, double cosine) {
  if (cosine <= 0.0) return 0.0;
  return pattern.peak * std::pow(cosine, 2.0 * pattern.exponent);
}

double element_gain_sqrt(const GainPattern& pattern, double cosine) {
  if (cosine <= 0.0) return 0.0;
  return std::sqrt(pattern.peak) * std::pow(cosine, pattern.exponent);
}

double element_gain_sqrt_derivative_factor(const GainPattern& pattern, double cosine) {
  if (cosine <= kGainBoundary) return 0.0;
  return pattern.exponent * std::sqrt(pattern.peak) * std::pow(cosine, pattern.exponent - 1.0);
}

Scenario sample_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const ArrayGeometry geom = build_geometry(config);
  const double wavenumber = geom.wavenumber();
  const double rayleigh = 2.0 * geom.irs_diagonal * geom.irs_diagonal / geom.wavelength;

  Scenario scenario;
  scenario.bs_pattern = GainPattern(config.bs_exponent);
  scenario.irs_pattern = GainPattern(config.irs_exponent);
  scenario.direct_attenuation_db = config.direct_attenuation_db;
  scenario.noise_w = config.noise_w();

  Rng rng(seed);
  const double az_max = deg2rad(config.user_azimuth_deg);

  // Scatterer draw: uniform over a horizontal disc around the user, height
  // uniform; resampled while behind the receiving aperture's reference plane,
  // with a bounded retry (a kept draw behind the plane contributes zero gain
  // until rotations light it up, like a baseline-invisible user's LoS path).
  const auto draw_scatterer = [&](const vec3& user, auto&& in_front) {
    vec3 scatterer;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double angle = rng.angle();
      const double radius = config.scatterer_radius * std::sqrt(rng.uniform());
      const double height = rng.uniform(config.scatterer_height_min, config.scatterer_height_max);
      scatterer = vec3(user.x() + radius * std::cos(angle), user.y() + radius * std::sin(angle),
                       height);
      if (in_front(scatterer)) break;
    }
    return scatterer;
  };

  const vec3 bs = geom.bs_center;
  const vec3 irs = geom.irs_center;
  const vec3 normal = geom.reference_normal;

  for (int k = 0; k < config.num_users; ++k) {
    const double azimuth = rng.uniform(-az_max, az_max);
    const double range = rng.uniform(config.user_distance_min, config.user_distance_max);
    const vec3 user(range * std::sin(azimuth), range * std::cos(azimuth), config.user_height);
    if ((user - irs).norm() <= rayleigh)
      throw std::runtime_error("sample_scenario: user inside the IRS Rayleigh distance (" +
                               std::to_string(rayleigh) + " m); far-field model invalid");
    scenario.users.push_back(user);

    std::vector<PathComponent> direct;
    if (!config.cascaded_los_only) {
      direct.push_back(make_los_path(user, bs, geom.wavelength, wavenumber));
      for (int l = 1; l < config.direct_paths; ++l) {
        const vec3 scatterer =
            draw_scatterer(user, [&](const vec3& o) { return o.y() > 0.0; });
        direct.push_back(make_nlos_path(user, bs, scatterer, config.nlos_amplitude, rng.angle(),
                                        geom.wavelength, wavenumber));
      }
    }
    scenario.direct_paths.push_back(std::move(direct));

    std::vector<PathComponent> reflected;
    reflected.push_back(make_los_path(user, irs, geom.wavelength, wavenumber));
    if (!config.cascaded_los_only) {
      for (int l = 1; l < config.irs_paths; ++l) {
        const vec3 scatterer = draw_scatterer(
            user, [&](const vec3& o) { return (o - irs).dot(normal) > 0.0; });
        reflected.push_back(make_nlos_path(user, irs, scatterer, config.nlos_amplitude,
                                           rng.angle(), geom.wavelength, wavenumber));
      }
    }
    scenario.irs_paths.push_back(std::move(reflected));

    scenario.power_w.push_back(config.user_power_w());
  }
  return scenario;
}

Scenario make_cascaded_scenario(const ScenarioConfig& config, const std::vector<vec3>& users) {
  const ArrayGeometry geom = build_geometry(config);
  Scenario scenario;
  scenario.bs_pattern = GainPattern(config.bs_exponent);
  scenario.irs_pattern = GainPattern(config.irs_exponent);
  scenario.direct_attenuation_db = config.direct_attenuation_db;
  scenario.noise_w = config.noise_w();
  for (const vec3& user : users) {
    scenario.users.push_back(user);
    scenario.direct_paths.emplace_back();
    scenario.irs_paths.push_back(
        {make_los_path(user, geom.irs_center, geom.wavelength, geom.wavenumber())});
    scenario.power_w.push_back(config.user_power_w());
  }
  return scenario;
}

OrientationCache orientation_cache(const ArrayGeometry& geom, const EulerOrientation& psi) {
  OrientationCache cache;
  cache.psi = psi;
  cache.rotation = euler_rotation(psi);
  cache.normal = cache.rotation * geom.reference_normal;
  cache.positions.reserve(geom.irs_offsets.size());
  for (const vec3& offset : geom.irs_offsets)
    cache.positions.push_back(geom.irs_center + cache.rotation * offset);
  return cache;
}

cd user_bs_channel_entry(const Scenario& scenario, const ArrayGeometry& geom,
                         const vec3& boresight, int m, int user) {
  const double wavenumber = geom.wavenumber();
  cd entry = 0.0;
  for (const PathComponent& path : scenario.direct_paths[user]) {
    const double cosine = -boresight.dot(path.direction);
    const double amplitude = element_gain_sqrt(scenario.bs_pattern, cosine);
    if (amplitude == 0.0) continue;
    const double steer = -wavenumber * path.direction.dot(geom.bs_offsets[m]);
    entry += path.gain * amplitude * unit_phasor(steer);
  }
  return scenario.direct_amplitude() * entry;
}

cvec user_bs_channel(const Scenario& scenario, const ArrayGeometry& geom,
                     const std::vector<vec3>& boresights, int user) {
  const int m_count = geom.bs_count();
  cvec h = cvec::Zero(m_count);
  for (int m = 0; m < m_count; ++m)
    h[m] = user_bs_channel_entry(scenario, geom, boresights[m], m, user);
  return h;
}

cvec user_bs_channel(const Scenario& scenario, const ArrayGeometry& geom,
                     const std::vector<BoresightAngles>& angles, int user) {
  return user_bs_channel(scenario, geom, boresights_to_vectors(angles), user);
}

cvec user_irs_channel(const Scenario& scenario, const ArrayGeometry& geom,
                      const OrientationCache& cache, int user) {
  const double wavenumber = geom.wavenumber();
  const int n_count = geom.irs_count();
  cvec h = cvec::Zero(n_count);
  for (const PathComponent& path : scenario.irs_paths[user]) {
    const double cosine = -cache.normal.dot(path.direction);
    const double amplitude = element_gain_sqrt(scenario.irs_pattern, cosine);
    if (amplitude == 0.0) continue;
    const cd weight = path.gain * amplitude;
    for (int n = 0; n < n_count; ++n) {
      const double steer = -wavenumber * path.direction.dot(cache.positions[n] - geom.irs_center);
      h[n] += weight * unit_phasor(steer);
    }
  }
  return h;
}

cvec user_irs_channel(const Scenario& scenario, const ArrayGeometry& geom,
                      const EulerOrientation& psi, int user) {
  return user_irs_channel(scenario, geom, orientation_cache(geom, psi), user);
}

void irs_bs_channel_row(const ArrayGeometry& geom, const GainPattern& bs_pattern,
                        const GainPattern& irs_pattern, const vec3& boresight, int m,
                        const OrientationCache& cache, cmat& matrix) {
  const double wavenumber = geom.wavenumber();
  const vec3 antenna = geom.bs_center + geom.bs_offsets[m];
  const int n_count = static_cast<int>(cache.positions.size());
  for (int n = 0; n < n_count; ++n) {
    const vec3 delta = antenna - cache.positions[n];
    const double dist = delta.norm();
    const vec3 dir = delta / dist;
    const double ref = element_gain_sqrt(irs_pattern, cache.normal.dot(dir));
    if (ref == 0.0) {
      matrix(m, n) = 0.0;
      continue;
    }
    const double rx = element_gain_sqrt(bs_pattern, -boresight.dot(dir));
    if (rx == 0.0) {
      matrix(m, n) = 0.0;
      continue;
    }
    matrix(m, n) = geom.wavelength * ref * rx / (4.0 * kPi * dist) * unit_phasor(-wavenumber * dist);
  }
}

cmat irs_bs_channel(const ArrayGeometry& geom, const GainPattern& bs_pattern,
                    const GainPattern& irs_pattern, const std::vector<vec3>& boresights,
                    const OrientationCache& cache) {
  if (cache.normal.dot(geom.bs_center - geom.irs_center) < 0.0)
    throw InfeasibleOrientationError("irs_bs_channel: orientation violates the visibility half-space");
  cmat matrix(geom.bs_count(), geom.irs_count());
  for (int m = 0; m < geom.bs_count(); ++m)
    irs_bs_channel_row(geom, bs_pattern, irs_pattern, boresights[m], m, cache, matrix);
  return matrix;
}

cmat irs_bs_channel(const ArrayGeometry& geom, const GainPattern& bs_pattern,
                    const GainPattern& irs_pattern,
                    const std::vector<BoresightAngles>& angles, const EulerOrientation& psi) {
  return irs_bs_channel(geom, bs_pattern, irs_pattern, boresights_to_vectors(angles),
                        orientation_cache(geom, psi));
}

FarFieldFactors irs_bs_channel_farfield(const ArrayGeometry& geom,
                                        const GainPattern& bs_pattern,
                                        const GainPattern& irs_pattern,
                                        const std::vector<vec3>& boresights,
                                        const OrientationCache& cache) {
  if (cache.normal.dot(geom.bs_center - geom.irs_center) < 0.0)
    throw InfeasibleOrientationError(
        "irs_bs_channel_farfield: orientation violates the visibility half-space");
  const double wavenumber = geom.wavenumber();
  const double dist = geom.bs_irs_distance();
  const vec3 dir = (geom.bs_center - geom.irs_center) / dist;

  FarFieldFactors factors;
  factors.coefficient = los_gain(geom.wavelength, wavenumber, dist);

  factors.bs_factor = cvec(geom.bs_count());
  for (int m = 0; m < geom.bs_count(); ++m) {
    const double amplitude = element_gain_sqrt(bs_pattern, -boresights[m].dot(dir));
    factors.bs_factor[m] = amplitude * unit_phasor(-wavenumber * dir.dot(geom.bs_offsets[m]));
  }

  const double ref = element_gain_sqrt(irs_pattern, cache.normal.dot(dir));
  factors.irs_factor = cvec(geom.irs_count());
  for (int n = 0; n < geom.irs_count(); ++n) {
    const double steer = wavenumber * dir.dot(cache.positions[n] - geom.irs_center);
    factors.irs_factor[n] = ref * unit_phasor(steer);
  }
  return factors;
}

cvec cascade_apply(const cmat& irs_bs, const cvec& v, const cvec& h_irs) {
  return irs_bs * (v.array() * h_irs.array()).matrix();
}

cvec composite_channel(const cvec& h_direct, const cmat& irs_bs, const cvec& v,
                       const cvec& h_irs) {
  for (Eigen::Index n = 0; n < v.size(); ++n)
    if (std::abs(std::abs(v[n]) - 1.0) > 1e-9)
      throw std::invalid_argument("composite_channel: phase vector is not unit modulus");
  return h_direct + cascade_apply(irs_bs, v, h_irs);
}

ChannelSet build_channel_set(const Scenario& scenario, const ArrayGeometry& geom,
                             const std::vector<vec3>& boresights,
                             const EulerOrientation& psi, const cvec& v) {
  const OrientationCache cache = orientation_cache(geom, psi);
  ChannelSet set;
  set.irs_bs = irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern, boresights, cache);
  for (int k = 0; k < scenario.num_users(); ++k) {
    set.direct.push_back(user_bs_channel(scenario, geom, boresights, k));
    set.user_irs.push_back(user_irs_channel(scenario, geom, cache, k));
    set.composite.push_back(composite_channel(set.direct[k], set.irs_bs, v, set.user_irs[k]));
  }
  return set;
}

Eigen::RowVector3cd channel_derivative_boresight_row(const Scenario& scenario,
                                                     const ArrayGeometry& geom, const vec3& f,
                                                     int m, const OrientationCache& cache,
                                                     const cvec& weighted_irs, int user) {
  const double wavenumber = geom.wavenumber();
  Eigen::RowVector3cd row = Eigen::RowVector3cd::Zero();

  // Direct-path terms: d sqrt(g_m) / d f = -factor(c) * q per path.
  const double attenuation = scenario.direct_amplitude();
  for (const PathComponent& path : scenario.direct_paths[user]) {
    const double cosine = -f.dot(path.direction);
    const double factor = element_gain_sqrt_derivative_factor(scenario.bs_pattern, cosine);
    if (factor == 0.0) continue;
    const double steer = -wavenumber * path.direction.dot(geom.bs_offsets[m]);
    const cd weight = attenuation * path.gain * unit_phasor(steer) * (-factor);
    row += weight * path.direction.transpose();
  }

  // Reflected terms, weighted per element by v_n * [h_irs]_n.
  const vec3 antenna = geom.bs_center + geom.bs_offsets[m];
  const int n_count = static_cast<int>(cache.positions.size());
  for (int n = 0; n < n_count; ++n) {
    const vec3 delta = antenna - cache.positions[n];
    const double dist = delta.norm();
    const vec3 dir = delta / dist;
    const double ref = element_gain_sqrt(scenario.irs_pattern, cache.normal.dot(dir));
    if (ref == 0.0) continue;
    const double factor = element_gain_sqrt_derivative_factor(scenario.bs_pattern, -f.dot(dir));
    if (factor == 0.0) continue;
    const cd pair = geom.wavelength * ref / (4.0 * kPi * dist) *
                    unit_phasor(-wavenumber * dist) * (-factor);
    row += (pair * weighted_irs[n]) * dir.transpose();
  }
  return row;
}

std::vector<Eigen::RowVector3cd> channel_derivative_boresight(
    const Scenario& scenario, const ArrayGeometry& geom,
    const std::vector<vec3>& boresights, const OrientationCache& cache, const cvec& v,
    int m) {
  std::vector<Eigen::RowVector3cd> rows;
  rows.reserve(scenario.num_users());
  for (int k = 0; k < scenario.num_users(); ++k) {
    const cvec h_irs = user_irs_channel(scenario, geom, cache, k);
    rows.push_back(channel_derivative_boresight_row(
        scenario, geom, boresights[m], m, cache, (v.array() * h_irs.array()).matrix(), k));
  }
  return rows;
}

std::array<cvec, 3> user_irs_orientation_partials(const Scenario& scenario,
                                                  const ArrayGeometry& geom,
                                                  const OrientationCache& cache, int user) {
  const double wavenumber = geom.wavenumber();
  const int n_count = geom.irs_count();

  std::array<mat3, 3> rotation_partial;
  std::array<vec3, 3> normal_partial;
  for (int axis = 0; axis < 3; ++axis) {
    rotation_partial[axis] = euler_rotation_partial(cache.psi, axis);
    normal_partial[axis] = rotation_partial[axis] * geom.reference_normal;
  }

  std::array<cvec, 3> partials{cvec::Zero(n_count), cvec::Zero(n_count), cvec::Zero(n_count)};
  for (const PathComponent& path : scenario.irs_paths[user]) {
    const double cosine = -cache.normal.dot(path.direction);
    const double amplitude = element_gain_sqrt(scenario.irs_pattern, cosine);
    const double factor = element_gain_sqrt_derivative_factor(scenario.irs_pattern, cosine);
    if (amplitude == 0.0 && factor == 0.0) continue;
    for (int axis = 0; axis < 3; ++axis) {
      const double tilt = -factor * normal_partial[axis].dot(path.direction);
      cvec& out = partials[axis];
      for (int n = 0; n < n_count; ++n) {
        const double steer =
            -wavenumber * path.direction.dot(cache.positions[n] - geom.irs_center);
        const cd steering = unit_phasor(steer);
        const cd phase_term =
            amplitude *
            cd(0.0, -wavenumber * path.direction.dot(rotation_partial[axis] * geom.irs_offsets[n]));
        out[n] += path.gain * (tilt + phase_term) * steering;
      }
    }
  }
  return partials;
}

OrientationDerivatives orientation_derivatives(const Scenario& scenario,
                                               const ArrayGeometry& geom,
                                               const std::vector<vec3>& boresights,
                                               const OrientationCache& cache) {
  const double wavenumber = geom.wavenumber();
  const int m_count = geom.bs_count();
  const int n_count = geom.irs_count();
  const int users = scenario.num_users();

  OrientationDerivatives derivs;

  // Rigid-body derivatives per axis: dR/dpsi_i applied to offsets and normal.
  std::array<mat3, 3> rotation_partial;
  std::array<vec3, 3> normal_partial;
  std::array<std::vector<vec3>, 3> position_partial;
  for (int axis = 0; axis < 3; ++axis) {
    rotation_partial[axis] = euler_rotation_partial(cache.psi, axis);
    normal_partial[axis] = rotation_partial[axis] * geom.reference_normal;
    position_partial[axis].reserve(n_count);
    for (const vec3& offset : geom.irs_offsets)
      position_partial[axis].push_back(rotation_partial[axis] * offset);
    derivs.irs_bs_partial[axis] = cmat::Zero(m_count, n_count);
  }

  derivs.user_irs_partial.reserve(users);
  for (int k = 0; k < users; ++k)
    derivs.user_irs_partial.push_back(user_irs_orientation_partials(scenario, geom, cache, k));

  // d H / d psi: distance, direction and the two gain factors all move with
  // the element positions.
  for (int m = 0; m < m_count; ++m) {
    const vec3 antenna = geom.bs_center + geom.bs_offsets[m];
    const vec3& f = boresights[m];
    for (int n = 0; n < n_count; ++n) {
      const vec3 delta = antenna - cache.positions[n];
      const double dist = delta.norm();
      const vec3 dir = delta / dist;
      const double cos_ref = cache.normal.dot(dir);
      const double cos_bs = -f.dot(dir);
      const double sqrt_ref = element_gain_sqrt(scenario.irs_pattern, cos_ref);
      const double sqrt_bs = element_gain_sqrt(scenario.bs_pattern, cos_bs);
      const double factor_ref = element_gain_sqrt_derivative_factor(scenario.irs_pattern, cos_ref);
      const double factor_bs = element_gain_sqrt_derivative_factor(scenario.bs_pattern, cos_bs);
      if (sqrt_ref == 0.0 && factor_ref == 0.0) continue;
      const cd base = geom.wavelength / (4.0 * kPi * dist) * unit_phasor(-wavenumber * dist);
      for (int axis = 0; axis < 3; ++axis) {
        const vec3& dpos = position_partial[axis][n];
        const double ddist = -dir.dot(dpos);
        const vec3 ddir = -(dpos - dir * dir.dot(dpos)) / dist;
        const double dcos_ref = normal_partial[axis].dot(dir) + cache.normal.dot(ddir);
        const double dcos_bs = -f.dot(ddir);
        const double dsqrt_ref = factor_ref * dcos_ref;
        const double dsqrt_bs = factor_bs * dcos_bs;
        derivs.irs_bs_partial[axis](m, n) =
            base * (-ddist / dist * sqrt_ref * sqrt_bs + dsqrt_ref * sqrt_bs +
                    sqrt_ref * dsqrt_bs + cd(0.0, -wavenumber * ddist) * sqrt_ref * sqrt_bs);
      }
    }
  }
  return derivs;
}

std::vector<cvec> channel_derivative_orientation(const Scenario& scenario,
                                                 const ArrayGeometry& geom,
                                                 const std::vector<vec3>& boresights,
                                                 const OrientationCache& cache,
                                                 const cvec& v, int axis) {
  const OrientationDerivatives derivs =
      orientation_derivatives(scenario, geom, boresights, cache);
  const cmat irs_bs =
      irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern, boresights, cache);
  std::vector<cvec> out;
  out.reserve(scenario.num_users());
  for (int k = 0; k < scenario.num_users(); ++k) {
    const cvec h_irs = user_irs_channel(scenario, geom, cache, k);
    out.push_back(cascade_apply(irs_bs, v, derivs.user_irs_partial[k][axis]) +
                  cascade_apply(derivs.irs_bs_partial[axis], v, h_irs));
  }
  return out;
}

std::vector<vec3> boresights_to_vectors(const std::vector<BoresightAngles>& angles) {
  std::vector<vec3> vectors;
  vectors.reserve(angles.size());
  for (const BoresightAngles& a : angles) vectors.push_back(boresight_vector(a));
  return vectors;
}

} // namespace dualrot
