#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "strainsurf/curves.hpp"
#include "strainsurf/errors.hpp"
#include "strainsurf/pipeline.hpp"

using namespace strainsurf;

namespace {

const BoxDomain kCube(Vec3d::Constant(-1.0), Vec3d::Constant(1.0));

void check_uniform_spacing(const SeedCurve& c) {
  for (std::size_t i = 1; i < c.size(); ++i) {
    CHECK((c.points[i] - c.points[i - 1]).norm() == doctest::Approx(c.h).epsilon(1e-6));
  }
}

void check_inside(const VectorField& f, const SeedCurve& c) {
  for (const Vec3d& p : c.points) CHECK(f.domain().contains(p));
}

bool is_straight(const SeedCurve& c, double tol) {
  const Vec3d d = (c.points.back() - c.points.front()).normalized();
  for (const Vec3d& p : c.points) {
    const Vec3d r = p - c.points.front();
    if ((r - r.dot(d) * d).norm() > tol) return false;
  }
  return true;
}

// Linear field with a second-order vector: random traceless matrices until
// the symmetric K form is indefinite and the cones meet.
VectorField linear_with_second_order(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  while (true) {
    const Mat3d A = oracle::random_divfree_jacobian(rng);
    if (classify(k_form(A)) != Signature::Cone) continue;
    if (!std::holds_alternative<directions::FinitelyMany>(second_order_vectors(A))) continue;
    return catalogue::linear(A, Vec3d::Zero(), kCube);
  }
}

}  // namespace

TEST_CASE("second-order family is empty for a definite K form") {
  const VectorField f = catalogue::linear_diag(1, 1, -2, kCube);
  const Vec3d d0 = Vec3d(std::sqrt(2.0), 0, 1) / std::sqrt(3.0);
  CHECK_THROWS_AS(integrate_direction_field(f, Vec3d::Constant(0.5), d0, CurveFamily::SecondOrder), Error);
  try {
    integrate_direction_field(f, Vec3d::Constant(0.5), d0, CurveFamily::SecondOrder);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoAdmissibleDirection);
  }
  for (const SamplePoint& s : sample_points(f.domain(), SamplingMode::Uniform, 27, 1)) {
    CHECK(second_order_curves(f, s.p).empty());
  }
}

TEST_CASE("interior curves in a constant-Jacobian field are straight") {
  const VectorField f = catalogue::linear_diag(1, 1, -2, kCube);
  const Vec3d d0 = Vec3d(std::sqrt(2.0), 0, 1) / std::sqrt(3.0);
  const SeedCurve c = interior_curve(f, Vec3d::Constant(0.5), d0);
  CHECK(c.family == CurveFamily::FirstOrderInterior);
  CHECK(is_straight(c, 1e-12));
  for (const Vec3d& u : c.tangents) CHECK((u - d0).norm() <= 1e-12);
  check_uniform_spacing(c);
  check_inside(f, c);
  // Reached the boundary: one more step leaves the box.
  CHECK_FALSE(f.domain().contains(c.points.back() + c.h * d0));
  CHECK(max_first_order_residual(f, c) <= 1e-14);
}

TEST_CASE("rotation field curves are straight chords") {
  const VectorField f = catalogue::rotation(Vec3d::UnitZ(), kCube);
  for (const SeedCurve& c : interior_curves(f, Vec3d(0.1, -0.2, 0.3))) {
    CHECK(is_straight(c, 1e-14));
    check_uniform_spacing(c);
  }
  const auto so = second_order_curves(f, Vec3d(0.1, -0.2, 0.3));
  CHECK(so.size() == 3);
  for (const SeedCurve& c : so) CHECK(is_straight(c, 1e-14));
}

TEST_CASE("second-order curves exist where K is indefinite") {
  const VectorField f = linear_with_second_order(4);
  const auto curves = second_order_curves(f, Vec3d(0.05, -0.1, 0.02));
  REQUIRE_FALSE(curves.empty());
  for (const SeedCurve& c : curves) {
    CHECK(c.length() >= f.domain().diameter() / 10);
    CHECK(max_first_order_residual(f, c) <= 1e-8);
    CHECK(max_second_order_residual(f, c) <= 1e-6);
    CHECK(is_straight(c, 1e-10));
    check_uniform_spacing(c);
  }
}

TEST_CASE("fig3 boundary curves on the face y = 0") {
  const VectorField f = catalogue::fig3();
  const int face = 2;  // y-
  REQUIRE(f.domain().face(face).name() == "y-");
  const DirectionSet set = admissible_directions(f, Vec3d::Zero(), CurveFamily::FirstOrderBoundary, face);
  const auto dirs = representative_directions(set, 2);
  REQUIRE(dirs.size() == 2);
  const Vec3d a = Vec3d(std::sqrt(3.0), 0, 1) / 2, b = Vec3d(-std::sqrt(3.0), 0, 1) / 2;
  CHECK(std::min(oracle::projective_angle(dirs[0], a), oracle::projective_angle(dirs[0], b)) <= 1e-12);
  CHECK(std::min(oracle::projective_angle(dirs[1], a), oracle::projective_angle(dirs[1], b)) <= 1e-12);

  // From an interior face point both curves stay on the face.
  for (const SeedCurve& c : boundary_curves(f, face, Vec3d(0.4, 0.0, 0.3))) {
    CHECK(c.family == CurveFamily::FirstOrderBoundary);
    CHECK(c.face == face);
    for (const Vec3d& p : c.points) CHECK(p.y() == 0.0);
    CHECK(max_first_order_residual(f, c) <= 1e-8);
    check_uniform_spacing(c);
  }
}

TEST_CASE("boundary family with a definite restriction is empty") {
  const VectorField f = catalogue::linear_diag(1, 1, -2, kCube);
  CHECK(boundary_curves(f, 4, Vec3d(0.2, 0.3, -1.0)).empty());
}

TEST_CASE("boundary curves in a strain-free field are straight face chords") {
  const VectorField f = catalogue::rotation(Vec3d::UnitZ(), kCube);
  const auto curves = boundary_curves(f, 4, Vec3d(0.2, 0.3, -1.0));
  CHECK(curves.size() == 2);
  for (const SeedCurve& c : curves) {
    CHECK(is_straight(c, 1e-14));
    for (const Vec3d& p : c.points) CHECK(p.z() == -1.0);
  }
}

TEST_CASE("fig3 interior curve satisfies the first-order condition pointwise") {
  const VectorField f = catalogue::fig3();
  const Vec3d d0 = Vec3d(1, 1, 1) / std::sqrt(3.0);
  const SeedCurve c = interior_curve(f, Vec3d::Zero(), d0);
  CHECK(c.size() > 10);
  CHECK(max_first_order_residual(f, c) <= 1e-8);
  check_uniform_spacing(c);
  check_inside(f, c);
  CHECK(c.length() <= f.domain().diameter() + 1e-12);
}

TEST_CASE("curves from every family on fig3 and abc satisfy their residual bounds") {
  for (const char* name : {"fig3", "abc"}) {
    const VectorField f = catalogue::by_name(name);
    const auto pts = sample_points(f.domain(), SamplingMode::Uniform, 27, 1);
    for (CurveFamily fam : {CurveFamily::SecondOrder, CurveFamily::FirstOrderInterior}) {
      for (const SeedCurve& c : generate_candidates(f, pts, fam, {}, 4, 1)) {
        CHECK(max_first_order_residual(f, c) <= 1e-8);
        if (fam == CurveFamily::SecondOrder) CHECK(max_second_order_residual(f, c) <= 1e-6);
        CHECK(c.length() >= f.domain().diameter() / 10 - 1e-12);
        CHECK(c.length() <= f.domain().diameter() + 1e-12);
        check_uniform_spacing(c);
        check_inside(f, c);
      }
    }
  }
}

TEST_CASE("chord residual of second-order curves halves with the step") {
  const VectorField f = catalogue::by_name("abc");
  const auto curves = second_order_curves(f, Vec3d(1.1, 0.7, 0.4));
  REQUIRE_FALSE(curves.empty());
  const SeedCurve& c = curves.front();
  CurveOptions half;
  half.h = c.h / 2;
  const SeedCurve c2 = integrate_direction_field(f, c.seed, c.initial_direction, CurveFamily::SecondOrder, half);
  const double r1 = max_chord_second_order_residual(f, c);
  const double r2 = max_chord_second_order_residual(f, c2);
  CHECK(r2 <= 0.6 * r1);
  CHECK(r2 >= 0.4 * r1);
}

TEST_CASE("reversal symmetry in a constant-Jacobian field") {
  const VectorField f = catalogue::linear_diag(1, 1, -2, kCube);
  const Vec3d d0 = Vec3d(std::sqrt(2.0), 0, 1) / std::sqrt(3.0);
  const SeedCurve c = interior_curve(f, Vec3d(0.1, 0.2, -0.1), d0);
  const SeedCurve r = interior_curve(f, c.points.back(), -c.tangents.back());
  for (const Vec3d& p : c.points) {
    double best = 1e9;
    for (const Vec3d& q : r.points) best = std::min(best, (p - q).norm());
    CHECK(best <= 10 * c.h * 1e-12);
  }
}

TEST_CASE("short curves are rejected") {
  const VectorField f = catalogue::linear_diag(1, 1, -2, kCube);
  const Vec3d d0 = Vec3d(std::sqrt(2.0), 0, 1) / std::sqrt(3.0);
  CurveOptions o;
  o.min_length_fraction = 0.9;
  try {
    interior_curve(f, Vec3d(0.9, 0.0, 0.9), d0, o);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CurveTooShort);
  }
}

TEST_CASE("family names") {
  for (CurveFamily f : {CurveFamily::SecondOrder, CurveFamily::FirstOrderBoundary, CurveFamily::FirstOrderInterior}) {
    CHECK(curve_family_from_string(to_string(f)) == f);
  }
  CHECK_THROWS_AS(curve_family_from_string("third_order"), Error);
}
