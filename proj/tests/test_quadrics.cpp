#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "strainsurf/field.hpp"
#include "strainsurf/quadrics.hpp"

using namespace strainsurf;
namespace dirs = strainsurf::directions;

namespace {

Mat3d diag(double a, double b, double c) { return Vec3d(a, b, c).asDiagonal(); }

double residual(const Mat3d& M, const Vec3d& d) { return d.dot(M * d); }

bool contains_direction(const std::vector<Vec3d>& set, const Vec3d& d, double tol) {
  for (const Vec3d& e : set)
    if (oracle::projective_angle(e, d) <= tol) return true;
  return false;
}

}  // namespace

TEST_CASE("signature classification") {
  CHECK(classify(diag(1, 2, -3)) == Signature::Cone);
  CHECK(classify(diag(2, 2, 8)) == Signature::PointOnly);
  CHECK(classify(Mat3d::Zero()) == Signature::AllSpace);
  CHECK(classify(diag(1, -1, 0)) == Signature::PlanePair);
  CHECK(classify(diag(1, 1, 0)) == Signature::Line);
  CHECK(classify(diag(0, -2, 0)) == Signature::DoublePlane);
  CHECK(classify(diag(-1, -1, -1)) == Signature::PointOnly);
  CHECK(classify(diag(1, 1, 1e-12)) == Signature::Line);

  const SignatureInfo info = classify_form(diag(1, 2, -3));
  CHECK(info.positive == 2);
  CHECK(info.negative == 1);
  CHECK(info.eigenvalues[0] == doctest::Approx(-3));
}

TEST_CASE("first-order cone") {
  const DirectionSet c = first_order_cone(diag(1, 1, -2));
  REQUIRE(std::holds_alternative<dirs::Cone>(c));
  const Vec3d d = Vec3d(std::sqrt(2.0), 0, 1) / std::sqrt(3.0);
  CHECK(std::abs(residual(std::get<dirs::Cone>(c).form, d)) <= 1e-15);

  Mat3d R;
  R << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  CHECK(std::holds_alternative<dirs::AllSpace>(first_order_cone(R)));

  const DirectionSet c2 = first_order_cone(diag(1, 2, -3));
  REQUIRE(std::holds_alternative<dirs::Cone>(c2));
  CHECK(residual(diag(1, 2, -3), Vec3d(1, 1, 1) / std::sqrt(3.0)) == doctest::Approx(0).epsilon(1e-15));

  // Representatives lie on the cone.
  for (const Vec3d& r : representative_directions(c2, 16)) {
    CHECK(r.norm() == doctest::Approx(1.0));
    CHECK(std::abs(residual(diag(1, 2, -3), r)) <= 1e-12);
  }
}

TEST_CASE("boundary first-order directions") {
  const std::array<Vec3d, 2> y0{Vec3d::UnitX(), Vec3d::UnitZ()};
  const DirectionSet s = boundary_first_order(diag(1, 2, -3), y0);
  REQUIRE(std::holds_alternative<dirs::FinitelyMany>(s));
  const auto& v = std::get<dirs::FinitelyMany>(s).dirs;
  CHECK(v.size() == 2);
  CHECK(contains_direction(v, Vec3d(std::sqrt(3.0), 0, 1) / 2, 1e-12));
  CHECK(contains_direction(v, Vec3d(-std::sqrt(3.0), 0, 1) / 2, 1e-12));

  const std::array<Vec3d, 2> z0{Vec3d::UnitX(), Vec3d::UnitY()};
  CHECK(is_empty(boundary_first_order(diag(1, 1, -2), z0)));

  Mat3d R;
  R << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  const DirectionSet all = boundary_first_order(R, z0);
  REQUIRE(std::holds_alternative<dirs::Plane>(all));
  CHECK(oracle::projective_angle(std::get<dirs::Plane>(all).normal, Vec3d::UnitZ()) <= 1e-15);
}

TEST_CASE("second-order vectors: examples") {
  CHECK(is_empty(second_order_vectors(diag(1, 1, -2))));
  Mat3d R;
  R << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  CHECK(std::holds_alternative<dirs::AllSpace>(second_order_vectors(R)));
}

TEST_CASE("pencil determinant coefficients") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const Mat3d A = oracle::random_traceless_symmetric(rng);
    const Mat3d B = oracle::random_traceless_symmetric(rng);
    const auto c = pencil_determinant(A, B);
    for (double lam : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
      const double direct = (A + lam * B).determinant();
      const double poly = c[0] + lam * (c[1] + lam * (c[2] + lam * c[3]));
      CHECK(poly == doctest::Approx(direct).epsilon(1e-10).scale(1.0));
    }
  }
  // Hand example: det(diag(1,1,-2) + l diag(2,2,8)) = (1+2l)^2 (8l-2).
  const auto c = pencil_determinant(diag(1, 1, -2), diag(2, 2, 8));
  CHECK(c[0] == doctest::Approx(-2));
  CHECK(c[1] == doctest::Approx(0));
  CHECK(c[2] == doctest::Approx(24));
  CHECK(c[3] == doctest::Approx(32));
}

TEST_CASE("real polynomial roots") {
  // (x-1)(x+2)(x-0.5) = x^3 + 0.5x^2 - 2.5x + 1
  auto r = real_polynomial_roots({1.0, -2.5, 0.5, 1.0});
  REQUIRE(r.size() == 3);
  std::sort(r.begin(), r.end());
  CHECK(r[0] == doctest::Approx(-2));
  CHECK(r[1] == doctest::Approx(0.5));
  CHECK(r[2] == doctest::Approx(1));
  // x^2 + 1 has none; leading zero coefficient drops the degree.
  CHECK(real_polynomial_roots({1.0, 0.0, 1.0, 0.0}).empty());
  r = real_polynomial_roots({-2.0, 1.0});
  REQUIRE(r.size() == 1);
  CHECK(r[0] == doctest::Approx(2));
}

TEST_CASE("second-order vectors agree with a brute-force cone scan") {
  std::mt19937_64 rng(123);
  int compared = 0;
  for (int t = 0; t < 200; ++t) {
    const Mat3d J = oracle::random_divfree_jacobian(rng);
    const Mat3d A = strain_part(J);
    const Mat3d B = k_form(J);
    if (classify(A) != Signature::Cone) continue;
    const DirectionSet s = second_order_vectors(J);
    const auto scan = dedup_directions(oracle::scan_cone_intersections(A, B, 4000), 1e-6);
    std::vector<Vec3d> found;
    if (auto* f = std::get_if<dirs::FinitelyMany>(&s)) found = f->dirs;
    else REQUIRE(is_empty(s));
    // Every reported direction is a true common zero.
    for (const Vec3d& d : found) {
      CHECK(d.norm() == doctest::Approx(1.0));
      CHECK(std::abs(residual(A, d)) <= 1e-9 * A.norm());
      CHECK(std::abs(residual(B, d)) <= 1e-9 * B.norm());
    }
    // The scan only sees transversal crossings; each one must be found.
    for (const Vec3d& d : scan) CHECK(contains_direction(found, d, 1e-6));
    CHECK(found.size() <= 4);
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("planted common root is recovered") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 100; ++t) {
    const Vec3d d0 = oracle::random_unit(rng);
    auto plant = [&](Mat3d M) {
      M = 0.5 * (M + M.transpose()).eval();
      // Remove the d0 d0^T component so d0^T M d0 = 0.
      return (M - d0.dot(M * d0) * d0 * d0.transpose()).eval();
    };
    const Mat3d A = plant(oracle::random_matrix(rng));
    const Mat3d B = plant(oracle::random_matrix(rng));
    if (classify(A) != Signature::Cone || classify(B) != Signature::Cone) continue;
    const DirectionSet s = cone_cone_intersection(A, B);
    REQUIRE(std::holds_alternative<dirs::FinitelyMany>(s));
    CHECK(contains_direction(std::get<dirs::FinitelyMany>(s).dirs, d0, 1e-8));
  }
}

TEST_CASE("restricted solutions on a plane") {
  const DirectionSet s = restricted_solutions(diag(1, 0, -1), Vec3d::UnitX(), Vec3d::UnitZ());
  REQUIRE(std::holds_alternative<dirs::FinitelyMany>(s));
  const auto& v = std::get<dirs::FinitelyMany>(s).dirs;
  CHECK(v.size() == 2);
  CHECK(contains_direction(v, Vec3d(1, 0, 1).normalized(), 1e-14));
  CHECK(contains_direction(v, Vec3d(1, 0, -1).normalized(), 1e-14));
  // Tangent double root.
  const DirectionSet t = restricted_solutions(diag(0, 0, 1), Vec3d::UnitX(), Vec3d::UnitZ());
  REQUIRE(std::holds_alternative<dirs::FinitelyMany>(t));
  CHECK(std::get<dirs::FinitelyMany>(t).dirs.size() == 1);
}

TEST_CASE("project to cone") {
  const Mat3d M = diag(1, 1, -2);
  const Vec3d p = project_to_cone(Vec3d::UnitX(), M);
  CHECK(oracle::projective_angle(p, Vec3d(2, 0, std::sqrt(2.0)) / std::sqrt(6.0)) <= 1e-12);
  CHECK(p.dot(Vec3d::UnitX()) > 0.0);
  CHECK(std::abs(residual(M, p)) <= 1e-14);

  const Vec3d on = Vec3d(std::sqrt(2.0), 0, 1) / std::sqrt(3.0);
  CHECK((project_to_cone(on, M) - on).norm() <= 1e-14);
  const Vec3d any = Vec3d(0.3, -0.4, 0.5).normalized();
  CHECK(project_to_cone(any, Mat3d::Zero()) == any);

  // Property: result is on the cone and no farther than random cone samples.
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const Mat3d F = oracle::random_traceless_symmetric(rng);
    if (classify(F) != Signature::Cone) continue;
    const Vec3d d = oracle::random_unit(rng);
    const Vec3d q = project_to_cone(d, F);
    CHECK(std::abs(residual(F, q)) <= 1e-12 * F.norm());
    CHECK(q.norm() == doctest::Approx(1.0));
    const double best = (q - d).norm();
    for (const Vec3d& r : representative_directions(dirs::Cone{F}, 360)) {
      CHECK(best <= std::min((r - d).norm(), (r + d).norm()) + 1e-9);
    }
  }
}

TEST_CASE("closest direction picks the sign-aligned nearest member") {
  const DirectionSet s = dirs::FinitelyMany{{Vec3d::UnitX(), Vec3d::UnitY()}};
  auto c = closest_direction(s, Vec3d(-0.9, 0.1, 0).normalized());
  REQUIRE(c.has_value());
  CHECK(*c == Vec3d(-1, 0, 0));
  CHECK_FALSE(closest_direction(dirs::Empty{}, Vec3d::UnitX()).has_value());
  auto pl = closest_direction(dirs::Plane{Vec3d::UnitZ()}, Vec3d(1, 0, 1).normalized());
  REQUIRE(pl.has_value());
  CHECK((*pl - Vec3d::UnitX()).norm() <= 1e-15);
}

TEST_CASE("dedup treats antipodes as one direction") {
  const auto d = dedup_directions({Vec3d::UnitX(), -Vec3d::UnitX(), Vec3d::UnitY(), Vec3d(1, 1e-12, 0).normalized()});
  CHECK(d.size() == 2);
}

TEST_CASE("classification is invariant under positive scaling") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 200; ++t) {
    const Mat3d F = oracle::random_traceless_symmetric(rng) + 0.3 * std::normal_distribution<double>()(rng) * Mat3d::Identity();
    const Signature s = classify(F);
    for (double c : {1e-6, 1.0, 1e6}) CHECK(classify(c * F) == s);
  }
}

TEST_CASE("first-order cone of a divergence-free Jacobian is never empty") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 500; ++t) {
    const Mat3d J = oracle::random_divfree_jacobian(rng);
    CHECK_FALSE(is_empty(first_order_cone(J)));
  }
  CHECK_FALSE(is_empty(first_order_cone(Mat3d::Zero())));
}
