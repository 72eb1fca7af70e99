#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "strainsurf/types.hpp"

namespace strainsurf {

/// Eigenvalue sign pattern of a symmetric 3x3 form.
enum class Signature {
  Cone,         // (+,+,-) or (+,-,-)
  PointOnly,    // (+,+,+) or (-,-,-)
  PlanePair,    // (+,-,0)
  Line,         // (+,+,0) or (-,-,0)
  DoublePlane,  // (+,0,0) or (-,0,0)
  AllSpace,     // (0,0,0)
};

const char* to_string(Signature s);

struct SignatureInfo {
  Signature kind = Signature::AllSpace;
  int positive = 0;
  int negative = 0;
  int zero = 0;
  Vec3d eigenvalues = Vec3d::Zero();  // ascending
  Mat3d eigenvectors = Mat3d::Identity();
};

inline constexpr double kDefaultSignatureEps = 1e-9;

/// Eigenvalues with |l| <= eps * max|l| count as zero.
SignatureInfo classify_form(const Mat3d& form, double eps = kDefaultSignatureEps);
inline Signature classify(const Mat3d& form, double eps = kDefaultSignatureEps) {
  return classify_form(form, eps).kind;
}

// ---------------------------------------------------------------------------
// Direction sets. Directions are projective: d and -d are the same.
// ---------------------------------------------------------------------------

namespace directions {

struct Empty {};
struct FinitelyMany {
  std::vector<Vec3d> dirs;
};
/// Non-degenerate cone d^T form d = 0.
struct Cone {
  Mat3d form;
};
/// Two planes through the apex, given by their unit normals (equal normals
/// encode a double plane).
struct PlanePair {
  std::array<Vec3d, 2> normals;
};
struct Line {
  Vec3d dir;
};
/// Every direction inside the plane with the given normal.
struct Plane {
  Vec3d normal;
};
struct AllSpace {};

}  // namespace directions

using DirectionSet =
    std::variant<directions::Empty, directions::FinitelyMany, directions::Cone,
                 directions::PlanePair, directions::Line, directions::Plane, directions::AllSpace>;

std::string describe(const DirectionSet& set);
bool is_empty(const DirectionSet& set);

/// Member of `set` closest in angle to `previous` (sign-aligned with it),
/// or nullopt for an empty set.
std::optional<Vec3d> closest_direction(const DirectionSet& set, const Vec3d& previous);

/// A handful of representative unit directions of `set`: all explicit ones,
/// or `count` evenly spread members of a continuous family.
std::vector<Vec3d> representative_directions(const DirectionSet& set, int count);

/// Solution set of d^T form d = 0 by signature.
DirectionSet solution_set(const Mat3d& form, double eps = kDefaultSignatureEps);

/// First-order vectors of J: d^T J+ d = 0.
DirectionSet first_order_cone(const Mat3d& J);

/// First-order vectors restricted to span{e1, e2} (orthonormal).
DirectionSet boundary_first_order(const Mat3d& J, const std::array<Vec3d, 2>& tangent_basis);

/// Unit d with d^T A d = 0 restricted to span{e1,e2}; the general routine
/// behind boundary_first_order. Returns FinitelyMany, Plane or Empty.
DirectionSet restricted_solutions(const Mat3d& form, const Vec3d& e1, const Vec3d& e2,
                                  double eps = kDefaultSignatureEps);

/// Common solutions of two symmetric forms via the pencil A + lambda B.
DirectionSet cone_cone_intersection(const Mat3d& A, const Mat3d& B);

/// Second-order vectors of J: d^T J+ d = 0 and d^T K+ d = 0.
DirectionSet second_order_vectors(const Mat3d& J);
DirectionSet second_order_vectors(const Mat3d& J, const Mat3d& K);

/// Closest unit x to unit d with x^T form x = 0. Throws NoConeExists for
/// definite forms.
Vec3d project_to_cone(const Vec3d& d, const Mat3d& form);

/// Real roots of c0 + c1 x + ... + cn x^n via companion-matrix eigenvalues
/// and one Newton polish. Leading zero coefficients are dropped.
std::vector<double> real_polynomial_roots(const std::vector<double>& coeffs);

/// det(A + lambda B) = c0 + c1 lambda + c2 lambda^2 + c3 lambda^3.
std::array<double, 4> pencil_determinant(const Mat3d& A, const Mat3d& B);

/// Drops antipodal/near duplicates (angle below `tol`), normalising.
std::vector<Vec3d> dedup_directions(const std::vector<Vec3d>& dirs, double tol = 1e-7);

}  // namespace strainsurf
