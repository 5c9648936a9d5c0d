// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "dualrot/geometry.hpp"
#include "test_support.hpp"

using namespace dualrot;
using namespace testsupport;

TEST_CASE("boresight vector evaluates the elevation/azimuth parameterization") {
  CHECK((boresight_vector({0.0, 1.234}) - vec3(0, 1, 0)).norm() == doctest::Approx(0.0));
  CHECK((boresight_vector({kPi / 2, 0.0}) - vec3(1, 0, 0)).norm() < 1e-15);
  const vec3 f = boresight_vector({kPi / 4, kPi / 2});
  CHECK((f - vec3(0.0, std::sqrt(2.0) / 2.0, std::sqrt(2.0) / 2.0)).norm() < 1e-15);

  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const BoresightAngles angles{rng.uniform(0.0, kPi / 2), rng.angle()};
    CHECK(std::abs(boresight_vector(angles).norm() - 1.0) < 1e-15);
  }
}

TEST_CASE("boresight jacobian matches the closed form and finite differences") {
  const auto j0 = boresight_jacobian({0.0, 0.0});
  CHECK(j0(0, 0) == doctest::Approx(1.0));
  CHECK(j0(1, 0) == doctest::Approx(0.0));
  CHECK(j0(2, 0) == doctest::Approx(0.0));
  CHECK(j0.col(1).norm() == doctest::Approx(0.0));

  // Columns orthogonal to the boresight away from the poles.
  const BoresightAngles angles{kPi / 4, kPi / 3};
  const vec3 f = boresight_vector(angles);
  const auto jac = boresight_jacobian(angles);
  CHECK(std::abs(f.dot(jac.col(0))) < 1e-12);
  CHECK(std::abs(f.dot(jac.col(1))) < 1e-12);

  // Central differences at (0.5, 1.0).
  const BoresightAngles base{0.5, 1.0};
  const auto analytic = boresight_jacobian(base);
  for (int component = 0; component < 3; ++component) {
    const double de = central_difference(
        [&](double e) { return boresight_vector({e, base.azimuth})[component]; },
        base.elevation);
    const double da = central_difference(
        [&](double a) { return boresight_vector({base.elevation, a})[component]; },
        base.azimuth);
    CHECK(rel_error(analytic(component, 0), de) < 1e-6);
    CHECK(rel_error(analytic(component, 1), da) < 1e-6);
  }
}

TEST_CASE("angles_from_boresight inverts the parameterization on the cap") {
  const double cap = deg2rad(89.0);
  const BoresightAngles pole = angles_from_boresight(vec3(0, 1, 0), cap);
  CHECK(pole.elevation == doctest::Approx(0.0));
  CHECK(pole.azimuth == doctest::Approx(0.0)); // tie-break at the pole

  const BoresightAngles x = angles_from_boresight(vec3(1, 0, 0), kPi / 2);
  CHECK(x.elevation == doctest::Approx(kPi / 2));
  CHECK(x.azimuth == doctest::Approx(0.0));

  const BoresightAngles original{0.7, 2.1};
  const BoresightAngles round = angles_from_boresight(boresight_vector(original), kPi / 2);
  CHECK(std::abs(round.elevation - original.elevation) < 1e-12);
  CHECK(std::abs(round.azimuth - original.azimuth) < 1e-12);

  CHECK_THROWS_AS(angles_from_boresight(vec3(0, 2, 0), kPi / 2), std::invalid_argument);
  CHECK_THROWS_AS(angles_from_boresight(vec3(1, 0, 0), deg2rad(60.0)), CapError);

  // Identity on the feasible cap.
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const BoresightAngles angles{rng.uniform(0.0, deg2rad(60.0)), rng.angle()};
    const BoresightAngles back =
        angles_from_boresight(boresight_vector(angles), deg2rad(60.0));
    CHECK((boresight_vector(back) - boresight_vector(angles)).norm() < 1e-10);
  }
}

TEST_CASE("euler rotation composes Rx(phi) Ry(beta) Rz(alpha)") {
  CHECK((euler_rotation({0, 0, 0}) - mat3::Identity()).norm() == doctest::Approx(0.0));

  mat3 quarter;
  quarter << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((euler_rotation({kPi / 2, 0, 0}) - quarter).norm() < 1e-15);

  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const EulerOrientation psi{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                               rng.uniform(-1.0, 1.0)};
    const mat3 r = euler_rotation(psi);
    CHECK((r.transpose() * r - mat3::Identity()).norm() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("euler rotation partials match the closed forms at zero and finite differences") {
  mat3 dalpha;
  dalpha << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  CHECK((euler_rotation_partial({0, 0, 0}, 0) - dalpha).norm() < 1e-15);

  mat3 dphi;
  dphi << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK((euler_rotation_partial({0, 0, 0}, 2) - dphi).norm() < 1e-15);

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const EulerOrientation psi{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                               rng.uniform(-1.0, 1.0)};
    for (int axis = 0; axis < 3; ++axis) {
      const mat3 analytic = euler_rotation_partial(psi, axis);
      const double h = 1e-6;
      EulerOrientation lo = psi, hi = psi;
      double* lo_angle = axis == 0 ? &lo.alpha : axis == 1 ? &lo.beta : &lo.phi;
      double* hi_angle = axis == 0 ? &hi.alpha : axis == 1 ? &hi.beta : &hi.phi;
      *lo_angle -= h;
      *hi_angle += h;
      const mat3 numeric = (euler_rotation(hi) - euler_rotation(lo)) / (2.0 * h);
      CHECK((analytic - numeric).norm() / analytic.norm() < 1e-6);
    }
  }
  CHECK_THROWS_AS(euler_rotation_partial({0, 0, 0}, 3), std::invalid_argument);
}

TEST_CASE("panel element positions form a rotated rigid body") {
  const ScenarioConfig config = small_config(2, 5, 1);
  const ArrayGeometry geom = build_geometry(config);

  const auto at_reference = irs_element_positions(geom, {0, 0, 0});
  for (int n = 0; n < geom.irs_count(); ++n)
    CHECK((at_reference[n] - (geom.irs_center + geom.irs_offsets[n])).norm() < 1e-15);

  // Centered grid: positions average to the panel center.
  vec3 mean = vec3::Zero();
  for (const vec3& p : at_reference) mean += p;
  mean /= geom.irs_count();
  CHECK((mean - geom.irs_center).norm() < 1e-12);

  Rng rng(9);
  const EulerOrientation psi{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const auto rotated = irs_element_positions(geom, psi);
  for (int i = 0; i < geom.irs_count(); i += 3)
    for (int j = i + 1; j < geom.irs_count(); j += 5) {
      const double before = (at_reference[i] - at_reference[j]).norm();
      const double after = (rotated[i] - rotated[j]).norm();
      CHECK(std::abs(before - after) < 1e-12);
    }

  const vec3 normal = irs_normal(geom, psi);
  CHECK(std::abs(normal.norm() - 1.0) < 1e-12);
  CHECK((irs_normal(geom, {0, 0, 0}) - geom.reference_normal).norm() < 1e-15);
  const mat3 rotation = euler_rotation(psi);
  for (const vec3& offset : geom.irs_offsets)
    CHECK(std::abs(normal.dot(rotation * offset)) < 1e-12);
}

TEST_CASE("build_geometry reproduces the default deployment numbers") {
  const ScenarioConfig config; // defaults
  const ArrayGeometry geom = build_geometry(config);

  CHECK(geom.bs_count() == 16);
  CHECK(geom.irs_count() == 441);
  CHECK(geom.irs_side_length == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(geom.irs_diagonal == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(geom.bs_irs_distance() == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(geom.aperture_ratio() == doctest::Approx(0.5 * std::sqrt(2.0) / 6.0).epsilon(1e-12));
  CHECK((geom.reference_normal - vec3(-1.0 / 3, -2.0 / 3, -2.0 / 3)).norm() < 1e-12);

  // Offsets orthogonal to the reference normal and summing to zero.
  vec3 offset_sum = vec3::Zero();
  for (const vec3& offset : geom.irs_offsets) {
    CHECK(std::abs(geom.reference_normal.dot(offset)) < 1e-12);
    offset_sum += offset;
  }
  CHECK(offset_sum.norm() < 1e-10);

  vec3 bs_sum = vec3::Zero();
  for (const vec3& offset : geom.bs_offsets) bs_sum += offset;
  CHECK(bs_sum.norm() < 1e-12);

  ScenarioConfig bad = config;
  bad.irs_spacing = 0.0;
  CHECK_THROWS_AS(build_geometry(bad), ConfigError);
}

TEST_CASE("visibility margin and its gradient") {
  const ArrayGeometry geom = build_geometry(ScenarioConfig{});
  CHECK(visibility_margin(geom, {0, 0, 0}) == doctest::Approx(6.0));

  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const EulerOrientation psi{rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8),
                               rng.uniform(-0.8, 0.8)};
    const vec3 grad = visibility_gradient(geom, psi);
    for (int axis = 0; axis < 3; ++axis) {
      const double h = 1e-6;
      vec3 lo = psi.to_vector(), hi = psi.to_vector();
      lo[axis] -= h;
      hi[axis] += h;
      const double numeric = (visibility_margin(geom, EulerOrientation::from_vector(hi)) -
                              visibility_margin(geom, EulerOrientation::from_vector(lo))) /
                             (2.0 * h);
      CHECK(std::abs(grad[axis] - numeric) < 1e-6 * std::max(1.0, std::abs(numeric)));
    }
  }
}
