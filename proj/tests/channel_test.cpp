// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/SVD>

#include "dualrot/channel.hpp"
#include "test_support.hpp"

using namespace dualrot;
using namespace testsupport;

namespace {

// Hand-summed per-path direct channel, independent of the library path.
cvec direct_channel_oracle(const Scenario& scenario, const ArrayGeometry& geom,
                           const std::vector<vec3>& boresights, int user) {
  const double k_c = geom.wavenumber();
  cvec h = cvec::Zero(geom.bs_count());
  for (const PathComponent& path : scenario.direct_paths[user]) {
    for (int m = 0; m < geom.bs_count(); ++m) {
      const double cosine = -boresights[m].dot(path.direction);
      if (cosine <= 0.0) continue;
      const double gain = scenario.bs_pattern.peak * std::pow(cosine, 2.0 * scenario.bs_pattern.exponent);
      const double phase = -k_c * path.direction.dot(geom.bs_offsets[m]);
      h[m] += path.gain * std::sqrt(gain) * cd(std::cos(phase), std::sin(phase));
    }
  }
  return std::pow(10.0, -scenario.direct_attenuation_db / 20.0) * h;
}

Scenario single_path_scenario(const ScenarioConfig& config, const vec3& user,
                              double attenuation_db) {
  ScenarioConfig direct_config = config;
  direct_config.direct_attenuation_db = attenuation_db;
  Scenario scenario = make_cascaded_scenario(direct_config, {user});
  // Add the LoS direct path by hand (make_cascaded_scenario leaves it empty).
  const ArrayGeometry geom = build_geometry(direct_config);
  PathComponent los;
  los.is_los = true;
  los.distance = (geom.bs_center - user).norm();
  los.direction = (geom.bs_center - user) / los.distance;
  const double phase = -geom.wavenumber() * los.distance;
  los.gain = geom.wavelength / (4.0 * kPi * los.distance) * cd(std::cos(phase), std::sin(phase));
  scenario.direct_paths[0] = {los};
  return scenario;
}

} // namespace

TEST_CASE("cosine-power gain pattern") {
  const GainPattern p5(5.0);
  CHECK(p5.peak == doctest::Approx(22.0).epsilon(1e-15));
  CHECK(element_gain(p5, 1.0) == doctest::Approx(22.0).epsilon(1e-15));
  CHECK(element_gain(p5, -0.3) == 0.0);
  CHECK(element_gain(p5, 0.0) == 0.0);
  CHECK(element_gain(p5, 1e-8) < 1e-15); // continuous at the hemisphere edge

  const GainPattern p6(6.0);
  CHECK(p6.peak == doctest::Approx(26.0).epsilon(1e-15));
  CHECK(element_gain(p6, 0.5) == doctest::Approx(26.0 * std::pow(0.5, 12.0)).epsilon(1e-12));

  CHECK_THROWS_AS(GainPattern(0.4), std::invalid_argument);
}

TEST_CASE("square-root gain derivative factor") {
  const GainPattern p6(6.0);
  CHECK(element_gain_sqrt_derivative_factor(p6, 1.0) ==
        doctest::Approx(6.0 * std::sqrt(26.0)).epsilon(1e-12));

  const GainPattern p5(5.0);
  CHECK(element_gain_sqrt_derivative_factor(p5, 1e-7) == 0.0);
  CHECK(element_gain_sqrt_derivative_factor(p5, -0.5) == 0.0);

  const double numeric = central_difference(
      [&](double c) { return std::sqrt(element_gain(p5, c)); }, 0.6);
  CHECK(rel_error(element_gain_sqrt_derivative_factor(p5, 0.6), numeric) < 1e-6);
}

TEST_CASE("scenario sampling is deterministic and obeys the placement laws") {
  const ScenarioConfig config; // defaults: K=4, L_B = L_IR = 4
  const Scenario a = sample_scenario(config, 42);
  const Scenario b = sample_scenario(config, 42);

  REQUIRE(a.num_users() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(a.direct_paths[k].size() == 4);
    CHECK(a.irs_paths[k].size() == 4);
    CHECK(a.users[k] == b.users[k]);
    for (std::size_t l = 0; l < a.direct_paths[k].size(); ++l) {
      CHECK(a.direct_paths[k][l].gain == b.direct_paths[k][l].gain);
      CHECK(a.direct_paths[k][l].distance == b.direct_paths[k][l].distance);
      CHECK(a.direct_paths[k][l].direction == b.direct_paths[k][l].direction);
    }
    for (std::size_t l = 0; l < a.irs_paths[k].size(); ++l)
      CHECK(a.irs_paths[k][l].gain == b.irs_paths[k][l].gain);
  }

  const Scenario c = sample_scenario(config, 43);
  CHECK(a.users[0] != c.users[0]);

  // First path is LoS with consistent geometry; users beyond the Rayleigh
  // guard of the 0.5 m panel (2 D^2 / lambda = 20 m).
  const ArrayGeometry geom = build_geometry(config);
  for (int k = 0; k < 4; ++k) {
    const PathComponent& los_bs = a.direct_paths[k].front();
    CHECK(los_bs.is_los);
    CHECK(std::abs(los_bs.distance - (geom.bs_center - a.users[k]).norm()) < 1e-9);
    CHECK((los_bs.direction - (geom.bs_center - a.users[k]).normalized()).norm() < 1e-9);

    const PathComponent& los_irs = a.irs_paths[k].front();
    CHECK(los_irs.is_los);
    CHECK((a.users[k] - geom.irs_center).norm() > 20.0);

    // NLoS magnitudes carry the kappa scaling.
    for (std::size_t l = 1; l < a.direct_paths[k].size(); ++l) {
      const PathComponent& path = a.direct_paths[k][l];
      CHECK(std::abs(path.gain) ==
            doctest::Approx(0.3 * geom.wavelength / (4.0 * kPi * path.distance)).epsilon(1e-12));
    }
  }

  ScenarioConfig cascaded = config;
  cascaded.cascaded_los_only = true;
  const Scenario los_only = sample_scenario(cascaded, 42);
  for (int k = 0; k < 4; ++k) {
    CHECK(los_only.direct_paths[k].empty());
    CHECK(los_only.irs_paths[k].size() == 1);
  }
}

TEST_CASE("direct channel: single-path closed form, cutoff and path-sum oracle") {
  ScenarioConfig config = small_config(1, 1, 1);
  const ArrayGeometry geom = build_geometry(config);
  const vec3 user(0.0, 40.0, 1.5);
  const Scenario scenario = single_path_scenario(config, user, 25.0);
  const vec3 arrival = scenario.direct_paths[0][0].direction;

  // Boresight exactly anti-parallel to the arrival direction.
  const cvec aligned = user_bs_channel(scenario, geom, std::vector<vec3>{-arrival}, 0);
  const double expected = std::pow(10.0, -25.0 / 20.0) * std::sqrt(scenario.bs_pattern.peak) *
                          geom.wavelength / (4.0 * kPi * scenario.direct_paths[0][0].distance);
  CHECK(rel_error(std::abs(aligned[0]), expected) < 1e-12);

  // Boresight beyond the hemisphere: zero channel.
  const cvec dark = user_bs_channel(scenario, geom, std::vector<vec3>{arrival}, 0);
  CHECK(dark.norm() == 0.0);

  // Multi-path channel equals the independent per-path sum.
  ScenarioConfig full = small_config(2, 3, 2);
  const Scenario multi = sample_scenario(full, 5);
  const ArrayGeometry full_geom = build_geometry(full);
  Rng rng(17);
  const RotationState rotation =
      random_feasible_rotation(rng, full_geom, RotationLimits::from_config(full), 0.5);
  const auto boresights = boresights_to_vectors(rotation.boresights);
  for (int k = 0; k < multi.num_users(); ++k) {
    const cvec lib = user_bs_channel(multi, full_geom, boresights, k);
    const cvec oracle = direct_channel_oracle(multi, full_geom, boresights, k);
    CHECK((lib - oracle).norm() <= 1e-12 * std::max(oracle.norm(), 1e-300));
  }
}

TEST_CASE("user-IRS channel: equal LoS magnitudes and the hemisphere cutoff") {
  ScenarioConfig config = small_config(2, 5, 1);
  config.cascaded_los_only = true;
  const ArrayGeometry geom = build_geometry(config);

  // A user inside the reference panel's front half-space.
  const vec3 user(-30.0, 12.0, 1.5);
  REQUIRE((user - geom.irs_center).dot(geom.reference_normal) > 0.0);
  const Scenario scenario = make_cascaded_scenario(config, {user});

  const cvec h = user_irs_channel(scenario, geom, EulerOrientation{}, 0);
  REQUIRE(h.norm() > 0.0);
  double min_mag = 1e300, max_mag = 0.0;
  for (int n = 0; n < h.size(); ++n) {
    min_mag = std::min(min_mag, std::abs(h[n]));
    max_mag = std::max(max_mag, std::abs(h[n]));
  }
  CHECK(max_mag - min_mag < 1e-12 * max_mag);

  // Rotating changes phases and the common gain, not the magnitude spread.
  const EulerOrientation tilted{0.2, -0.3, 0.1};
  const cvec rotated = user_irs_channel(scenario, geom, tilted, 0);
  if (rotated.norm() > 0.0) {
    double lo = 1e300, hi = 0.0;
    for (int n = 0; n < rotated.size(); ++n) {
      lo = std::min(lo, std::abs(rotated[n]));
      hi = std::max(hi, std::abs(rotated[n]));
    }
    CHECK(hi - lo < 1e-12 * hi);
  }

  // A user behind the panel sees zero gain.
  const vec3 behind(0.0, 60.0, 1.5);
  REQUIRE((behind - geom.irs_center).dot(geom.reference_normal) < 0.0);
  const Scenario dark = make_cascaded_scenario(config, {behind});
  CHECK(user_irs_channel(dark, geom, EulerOrientation{}, 0).norm() == 0.0);
}

TEST_CASE("IRS-BS channel: closed-form single pair, peak bound and visibility error") {
  ScenarioConfig config = small_config(1, 1, 1);
  const ArrayGeometry geom = build_geometry(config);
  const GainPattern bs(config.bs_exponent), irs(config.irs_exponent);

  const vec3 dir = (geom.bs_center - geom.irs_center).normalized();
  const double dist = geom.bs_irs_distance();
  const OrientationCache reference = orientation_cache(geom, {0, 0, 0});
  const cmat h = irs_bs_channel(geom, bs, irs, std::vector<vec3>{-dir}, reference);
  const double expected = geom.wavelength * std::sqrt(bs.peak * irs.peak) / (4.0 * kPi * dist);
  CHECK(rel_error(std::abs(h(0, 0)), expected) < 1e-12);

  // Every entry bounded by the peak-gain envelope at the minimum distance.
  ScenarioConfig big = small_config(3, 7, 1);
  const ArrayGeometry big_geom = build_geometry(big);
  Rng rng(23);
  const RotationState rotation =
      random_feasible_rotation(rng, big_geom, RotationLimits::from_config(big), 0.5);
  const OrientationCache cache = orientation_cache(big_geom, rotation.orientation);
  const cmat matrix =
      irs_bs_channel(big_geom, bs, irs, boresights_to_vectors(rotation.boresights), cache);
  double min_dist = 1e300;
  for (int m = 0; m < big_geom.bs_count(); ++m)
    for (int n = 0; n < big_geom.irs_count(); ++n)
      min_dist = std::min(min_dist,
                          (big_geom.bs_center + big_geom.bs_offsets[m] - cache.positions[n]).norm());
  const double bound = big_geom.wavelength * std::sqrt(bs.peak * irs.peak) / (4.0 * kPi * min_dist);
  CHECK(matrix.cwiseAbs().maxCoeff() <= bound * (1.0 + 1e-12));

  // Visibility violation throws: rotate the panel normal past 90 degrees
  // using a config with wide limits.
  EulerOrientation away{0.0, 0.0, 0.0};
  bool found = false;
  for (double alpha = 0.1; alpha < 3.2 && !found; alpha += 0.1) {
    away.alpha = alpha;
    found = visibility_margin(big_geom, away) < 0.0;
  }
  REQUIRE(found);
  CHECK_THROWS_AS(irs_bs_channel(big_geom, bs, irs,
                                 boresights_to_vectors(rotation.boresights),
                                 orientation_cache(big_geom, away)),
                  InfeasibleOrientationError);
}

TEST_CASE("far-field factors: rank one, common magnitudes, near-field agreement") {
  {
    ScenarioConfig config = small_config(3, 5, 1);
    const GainPattern bs(config.bs_exponent), irs(config.irs_exponent);
    const ArrayGeometry geom = build_geometry(config);

    Rng rng(31);
    const RotationState rotation =
        random_feasible_rotation(rng, geom, RotationLimits::from_config(config), 0.4);
    const auto boresights = boresights_to_vectors(rotation.boresights);
    const OrientationCache cache = orientation_cache(geom, rotation.orientation);

    const FarFieldFactors factors = irs_bs_channel_farfield(geom, bs, irs, boresights, cache);
    const cmat reconstructed =
        factors.coefficient * factors.bs_factor * factors.irs_factor.transpose();

    Eigen::JacobiSVD<cmat> svd(reconstructed);
    CHECK(svd.singularValues()[1] <= 1e-12 * svd.singularValues()[0]);

    // Identical boresights give a common magnitude across the BS factor.
    const std::vector<vec3> equal(static_cast<std::size_t>(geom.bs_count()),
                                  boresight_vector({0.3, 1.0}));
    const FarFieldFactors common = irs_bs_channel_farfield(geom, bs, irs, equal, cache);
    for (int m = 1; m < geom.bs_count(); ++m)
      CHECK(std::abs(std::abs(common.bs_factor[m]) - std::abs(common.bs_factor[0])) < 1e-12);
  }

  // Entrywise agreement with the near-field matrix at xi = 0.01. The error
  // has a quadratic-phase part k (D/2)^2 / (2d) and a gain-slope part
  // ~ 2p tan(eps) * (aperture/d), so the 2% regime needs a panel a few
  // wavelengths across and boresights near the panel direction.
  {
    ScenarioConfig config = small_config(1, 3, 1);
    const GainPattern bs(config.bs_exponent), irs(config.irs_exponent);
    const double diagonal = (config.irs_side_count - 1) * config.irs_spacing * std::sqrt(2.0);
    const vec3 direction = (config.irs_center - config.bs_center).normalized();
    config.irs_center = config.bs_center + 100.0 * diagonal * direction;
    const ArrayGeometry geom = build_geometry(config);
    REQUIRE(geom.aperture_ratio() == doctest::Approx(0.01).epsilon(1e-12));

    const std::vector<vec3> boresights{-direction}; // aligned with the panel
    const OrientationCache cache = orientation_cache(geom, {0, 0, 0});
    const cmat nf = irs_bs_channel(geom, bs, irs, boresights, cache);
    const FarFieldFactors factors = irs_bs_channel_farfield(geom, bs, irs, boresights, cache);
    const cmat reconstructed =
        factors.coefficient * factors.bs_factor * factors.irs_factor.transpose();
    double worst = 0.0;
    for (int m = 0; m < nf.rows(); ++m)
      for (int n = 0; n < nf.cols(); ++n)
        if (std::abs(nf(m, n)) > 0.0)
          worst = std::max(worst,
                           std::abs(nf(m, n) - reconstructed(m, n)) / std::abs(nf(m, n)));
    CHECK(worst < 0.02);
  }
}

TEST_CASE("near-field to far-field error decreases monotonically in xi") {
  const GainPattern bs(6.0), irs(5.0);
  double previous = 1e300;
  for (const double xi : {0.1, 0.0562, 0.0316, 0.0178, 0.001}) {
    ScenarioConfig config = small_config(3, 5, 1);
    const double diagonal = (config.irs_side_count - 1) * config.irs_spacing * std::sqrt(2.0);
    const vec3 direction = (config.irs_center - config.bs_center).normalized();
    config.irs_center = config.bs_center + (diagonal / xi) * direction;
    const ArrayGeometry geom = build_geometry(config);

    const std::vector<vec3> boresights(static_cast<std::size_t>(geom.bs_count()),
                                       boresight_vector({0.4, 0.7}));
    const OrientationCache cache = orientation_cache(geom, {0.1, -0.1, 0.05});
    const cmat nf = irs_bs_channel(geom, bs, irs, boresights, cache);
    const FarFieldFactors factors = irs_bs_channel_farfield(geom, bs, irs, boresights, cache);
    const cmat ff = factors.coefficient * factors.bs_factor * factors.irs_factor.transpose();
    const double error = (nf - ff).norm() / nf.norm();
    CHECK(error < previous);
    previous = error;
  }
}

TEST_CASE("composite channel combines direct and reflected parts") {
  Rng rng(41);
  const int antennas = 4, elements = 3;
  const cmat irs_bs = cmat::Random(antennas, elements);
  const cvec h_direct = cvec::Random(antennas);
  const cvec v = random_phase_vector(rng, elements);

  // No reflected path.
  CHECK((composite_channel(h_direct, irs_bs, v, cvec::Zero(elements)) - h_direct).norm() == 0.0);

  // Single element: the reflected part is v_1 [h_irs]_1 times column one.
  const cmat one_col = irs_bs.leftCols(1);
  cvec h_one(1);
  h_one[0] = cd(0.3, -0.8);
  cvec v_one(1);
  v_one[0] = cd(0.0, 1.0);
  const cvec reflected = composite_channel(cvec::Zero(antennas), one_col, v_one, h_one);
  CHECK((reflected - cvec(v_one[0] * h_one[0] * one_col.col(0))).norm() < 1e-15);

  // Affine in v through the cascade operator.
  const cvec h_irs = cvec::Random(elements);
  const cvec v2 = random_phase_vector(rng, elements);
  const cvec lhs = cascade_apply(irs_bs, v + v2, h_irs);
  const cvec rhs = cascade_apply(irs_bs, v, h_irs) + cascade_apply(irs_bs, v2, h_irs);
  CHECK((lhs - rhs).norm() < 1e-12 * std::max(rhs.norm(), 1e-300));

  cvec bad = v;
  bad[0] *= 1.5;
  CHECK_THROWS_AS(composite_channel(h_direct, irs_bs, bad, h_irs), std::invalid_argument);
}

TEST_CASE("boresight channel derivative matches finite differences") {
  ScenarioConfig config = small_config(2, 3, 2);
  const ArrayGeometry geom = build_geometry(config);
  const Scenario scenario = sample_scenario(config, 11);
  Rng rng(47);
  const cvec v = random_phase_vector(rng, geom.irs_count());

  int checked = 0;
  for (int attempt = 0; attempt < 60 && checked < 8; ++attempt) {
    const RotationState rotation =
        random_feasible_rotation(rng, geom, RotationLimits::from_config(config), 0.4);
    const auto boresights = boresights_to_vectors(rotation.boresights);
    const OrientationCache cache = orientation_cache(geom, rotation.orientation);
    const int m = rng.uniform_int(geom.bs_count());

    // Interior point check: all relevant directional cosines comfortably
    // positive for this antenna.
    bool interior = true;
    for (int k = 0; k < scenario.num_users() && interior; ++k)
      for (const PathComponent& path : scenario.direct_paths[k])
        if (-boresights[m].dot(path.direction) < 0.05) interior = false;
    const vec3 antenna = geom.bs_center + geom.bs_offsets[m];
    for (const vec3& position : cache.positions) {
      const vec3 dir = (antenna - position).normalized();
      if (-boresights[m].dot(dir) < 0.05 || cache.normal.dot(dir) < 0.05) interior = false;
      if (!interior) break;
    }
    if (!interior) continue;
    ++checked;

    const auto rows = channel_derivative_boresight(scenario, geom, boresights, cache, v, m);
    for (int k = 0; k < scenario.num_users(); ++k) {
      const auto entry = [&](const vec3& f) {
        cmat matrix(geom.bs_count(), geom.irs_count());
        irs_bs_channel_row(geom, scenario.bs_pattern, scenario.irs_pattern, f, m,
                           cache, matrix);
        const cvec h_irs = user_irs_channel(scenario, geom, cache, k);
        return user_bs_channel_entry(scenario, geom, f, m, k) +
               (matrix.row(m) * (v.array() * h_irs.array()).matrix()).value();
      };
      for (int axis = 0; axis < 3; ++axis) {
        const double h = 1e-6;
        vec3 lo = boresights[m], hi = boresights[m];
        lo[axis] -= h;
        hi[axis] += h;
        const cd numeric = (entry(hi) - entry(lo)) / 2.0 / h;
        CHECK(std::abs(rows[k][axis] - numeric) <=
              1e-4 * std::max(std::abs(numeric), 1e-3 * rows[k].norm()));
      }
    }
  }
  REQUIRE(checked >= 4);
}

TEST_CASE("boresight derivative is zero beyond the hemisphere and reduces to the direct term") {
  ScenarioConfig config = small_config(2, 3, 1);
  const ArrayGeometry geom = build_geometry(config);
  const Scenario scenario = sample_scenario(config, 3);
  const OrientationCache cache = orientation_cache(geom, {0, 0, 0});

  // Zero reflected weighting leaves only the direct-path terms.
  const std::vector<vec3> boresights(static_cast<std::size_t>(geom.bs_count()),
                                     boresight_vector({0.2, kPi / 2}));
  const cvec zero_weight = cvec::Zero(geom.irs_count());
  const auto direct_only = channel_derivative_boresight_row(scenario, geom, boresights[0], 0,
                                                            cache, zero_weight, 0);
  Eigen::RowVector3cd expected = Eigen::RowVector3cd::Zero();
  const double attenuation = std::pow(10.0, -scenario.direct_attenuation_db / 20.0);
  for (const PathComponent& path : scenario.direct_paths[0]) {
    const double cosine = -boresights[0].dot(path.direction);
    if (cosine <= kGainBoundary) continue;
    const double factor = scenario.bs_pattern.exponent * std::sqrt(scenario.bs_pattern.peak) *
                          std::pow(cosine, scenario.bs_pattern.exponent - 1.0);
    const double phase = -geom.wavenumber() * path.direction.dot(geom.bs_offsets[0]);
    expected += attenuation * path.gain * cd(std::cos(phase), std::sin(phase)) * (-factor) *
                path.direction.transpose();
  }
  CHECK((direct_only - expected).norm() <= 1e-12 * std::max(expected.norm(), 1e-300));

  // Zero reflected channel (user behind the panel) also kills the reflected
  // terms regardless of the boresight.
  ScenarioConfig cascaded = small_config(2, 3, 1);
  cascaded.cascaded_los_only = true;
  const vec3 behind(0.0, 60.0, 1.5); // behind the reference panel plane
  const Scenario dark = make_cascaded_scenario(cascaded, {behind});
  const cvec v = cvec::Ones(geom.irs_count());
  const cvec h_irs = user_irs_channel(dark, geom, cache, 0);
  REQUIRE(h_irs.norm() == 0.0);
  const auto row = channel_derivative_boresight_row(
      dark, geom, boresight_vector({0.2, 0.0}), 0, cache,
      (v.array() * h_irs.array()).matrix(), 0);
  CHECK(row.norm() == 0.0);

  // All arrival cosines below the dead zone: a boresight tilted away from
  // both the user and the panel gives an exactly zero row even with a live
  // reflected channel.
  const vec3 user(26.0, 15.0, 1.5);
  const Scenario lit = single_path_scenario(config, user, 0.0);
  const vec3 dark_boresight = boresight_vector({deg2rad(60.0), deg2rad(210.0)});
  CHECK(-dark_boresight.dot(lit.direct_paths[0][0].direction) < 0.0);
  const cvec live_irs = user_irs_channel(lit, geom, cache, 0);
  const auto dark_row = channel_derivative_boresight_row(
      lit, geom, dark_boresight, 0, cache, (v.array() * live_irs.array()).matrix(), 0);
  CHECK(dark_row.norm() == 0.0);
}

TEST_CASE("orientation channel derivative matches finite differences") {
  ScenarioConfig config = small_config(2, 3, 2);
  // Users close enough to sit inside the reference panel's front half-space,
  // so interior points (all cosines positive) exist.
  config.user_distance_min = 10.0;
  config.user_distance_max = 16.0;
  const ArrayGeometry geom = build_geometry(config);
  const Scenario scenario = interior_test_scenario(config);
  Rng rng(53);
  const cvec v = random_phase_vector(rng, geom.irs_count());

  int checked = 0;
  for (int attempt = 0; attempt < 200 && checked < 6; ++attempt) {
    const RotationState rotation =
        random_feasible_rotation(rng, geom, RotationLimits::from_config(config), 0.25);
    if (visibility_margin(geom, rotation.orientation) < 1e-3) continue;
    const auto boresights = boresights_to_vectors(rotation.boresights);
    const OrientationCache cache = orientation_cache(geom, rotation.orientation);

    bool interior = true;
    for (int k = 0; k < scenario.num_users() && interior; ++k)
      for (const PathComponent& path : scenario.irs_paths[k])
        if (-cache.normal.dot(path.direction) < 0.05) interior = false;
    for (int m = 0; m < geom.bs_count() && interior; ++m) {
      const vec3 antenna = geom.bs_center + geom.bs_offsets[m];
      for (const vec3& position : cache.positions) {
        const vec3 dir = (antenna - position).normalized();
        if (cache.normal.dot(dir) < 0.05 || -boresights[m].dot(dir) < 0.05) interior = false;
        if (!interior) break;
      }
    }
    if (!interior) continue;
    ++checked;

    for (int axis = 0; axis < 3; ++axis) {
      const auto analytic =
          channel_derivative_orientation(scenario, geom, boresights, cache, v, axis);
      const double h = 1e-6;
      vec3 lo = rotation.orientation.to_vector(), hi = lo;
      lo[axis] -= h;
      hi[axis] += h;
      for (int k = 0; k < scenario.num_users(); ++k) {
        const auto channel_at = [&](const vec3& psi_vec) {
          const OrientationCache c = orientation_cache(geom, EulerOrientation::from_vector(psi_vec));
          const cmat irs_bs =
              irs_bs_channel(geom, scenario.bs_pattern, scenario.irs_pattern, boresights, c);
          return cvec(cascade_apply(irs_bs, v, user_irs_channel(scenario, geom, c, k)));
        };
        const cvec numeric = (channel_at(hi) - channel_at(lo)) / (2.0 * h);
        CHECK((analytic[k] - numeric).norm() <= 1e-4 * std::max(numeric.norm(), 1e-300));
      }
    }
  }
  REQUIRE(checked >= 3);
}

TEST_CASE("pairwise distance derivative matches finite differences") {
  const ScenarioConfig config = small_config(2, 3, 1);
  const ArrayGeometry geom = build_geometry(config);
  Rng rng(59);
  const EulerOrientation psi{0.3, -0.2, 0.4};
  const mat3 partial = euler_rotation_partial(psi, 1);
  const vec3 antenna = geom.bs_center + geom.bs_offsets[1];
  const vec3 offset = geom.irs_offsets[2];

  const auto distance = [&](double beta) {
    const EulerOrientation p{psi.alpha, beta, psi.phi};
    return (antenna - (geom.irs_center + euler_rotation(p) * offset)).norm();
  };
  const vec3 position = geom.irs_center + euler_rotation(psi) * offset;
  const vec3 dir = (antenna - position).normalized();
  const double analytic = -dir.dot(partial * offset);
  const double numeric = central_difference(distance, psi.beta);
  CHECK(rel_error(analytic, numeric) < 1e-6);

  // Orientation derivative of the user-IRS channel vanishes when the user is
  // dark to the panel (both the gain and its derivative are cut off).
  ScenarioConfig cascaded = small_config(2, 3, 1);
  cascaded.cascaded_los_only = true;
  const Scenario dark = make_cascaded_scenario(cascaded, {vec3(0.0, 60.0, 1.5)});
  const OrientationCache cache = orientation_cache(geom, {0, 0, 0});
  const auto partials = user_irs_orientation_partials(dark, geom, cache, 0);
  for (int axis = 0; axis < 3; ++axis) CHECK(partials[axis].norm() == 0.0);
}
