#pragma once

// Seed curves: arc-length sampled polylines whose tangents are admissible
// directions of the strain-free direction fields.

#include <optional>
#include <string>
#include <vector>

#include "strainsurf/field.hpp"
#include "strainsurf/quadrics.hpp"

namespace strainsurf {

enum class CurveFamily { SecondOrder, FirstOrderBoundary, FirstOrderInterior };

const char* to_string(CurveFamily f);
CurveFamily curve_family_from_string(const std::string& name);

struct SeedCurve {
  std::vector<Vec3d> points;
  std::vector<Vec3d> tangents;  // unit, admissible at each point
  std::vector<double> arclength;
  CurveFamily family = CurveFamily::FirstOrderInterior;
  Vec3d seed = Vec3d::Zero();
  Vec3d initial_direction = Vec3d::Zero();
  double h = 0.0;
  int face = -1;  // boundary family only

  std::size_t size() const { return points.size(); }
  double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
};

/// Recompute cumulative chord lengths.
void update_arclength(SeedCurve& curve);

struct CurveOptions {
  double h = 0.0;                  // 0 means 0.01 * diam
  double max_length = 0.0;         // 0 means diam
  double min_length_fraction = 0.1;
  double max_turn = 0.7853981633974483;  // per-step tangent change, radians
  std::optional<int> face;         // required for the boundary family
};

double default_step(const BoxDomain& domain);

/// Admissible direction set of a family at p.
DirectionSet admissible_directions(const VectorField& field, const Vec3d& p, CurveFamily family,
                                   const std::optional<int>& face = std::nullopt);

/// March in both directions from seed along the admissible field, choosing
/// at each step the admissible direction closest to the previous tangent.
/// Throws NoAdmissibleDirection when the seed has none and CurveTooShort when
/// the result is shorter than min_length_fraction * diam.
SeedCurve integrate_direction_field(const VectorField& field, const Vec3d& seed, const Vec3d& d0,
                                    CurveFamily family, const CurveOptions& options = {});

/// One curve per second-order vector at seed; empty when none exist.
std::vector<SeedCurve> second_order_curves(const VectorField& field, const Vec3d& seed,
                                           const CurveOptions& options = {});

/// Curves along the in-face first-order directions at a face point.
std::vector<SeedCurve> boundary_curves(const VectorField& field, int face, const Vec3d& seed,
                                       const CurveOptions& options = {});

SeedCurve interior_curve(const VectorField& field, const Vec3d& seed, const Vec3d& d0,
                         const CurveOptions& options = {});

/// Interior curves started along `count` generators of the cone at seed.
std::vector<SeedCurve> interior_curves(const VectorField& field, const Vec3d& seed, int count = 4,
                                       const CurveOptions& options = {});

/// Largest |u^T M(p) u| along the curve for the strain form (first order)
/// or the symmetric K form (second order).
double max_first_order_residual(const VectorField& field, const SeedCurve& curve);
double max_second_order_residual(const VectorField& field, const SeedCurve& curve);

/// Same measures with the forward chord direction in place of the tangent.
double max_chord_second_order_residual(const VectorField& field, const SeedCurve& curve);

}  // namespace strainsurf
