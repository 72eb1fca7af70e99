#pragma once

// Strain energies of curves and surfaces. Integrals along curves use the
// trapezoidal rule over the chord lengths of the samples.

#include <array>
#include <optional>
#include <span>

#include "strainsurf/curves.hpp"
#include "strainsurf/field.hpp"
#include "strainsurf/mesh.hpp"

namespace strainsurf {

/// Points and unit tangents of a sampled curve.
struct CurveSamples {
  std::span<const Vec3d> points;
  std::span<const Vec3d> tangents;

  CurveSamples(std::span<const Vec3d> p, std::span<const Vec3d> u) : points(p), tangents(u) {}
  CurveSamples(const SeedCurve& c) : points(c.points), tangents(c.tangents) {}  // NOLINT
};

/// Trapezoid integral of per-sample values over the chord lengths.
double trapezoid(std::span<const Vec3d> points, std::span<const double> values);
double polyline_length(std::span<const Vec3d> points);

struct TaylorCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;

  /// Predicted length after time t; c2 is the second derivative.
  double predict(double length0, double t) const { return length0 + c1 * t + 0.5 * c2 * t * t; }
};

TaylorCoefficients taylor_coeffs(const VectorField& field, CurveSamples curve);

double e1(const VectorField& field, CurveSamples curve);
double e2(const VectorField& field, CurveSamples curve);

/// Pointwise integrands of e1 and e2.
double e1_integrand(const Mat3d& J, const Vec3d& u);
double e2_integrand(const Mat3d& J, const Vec3d& u);

struct RigidMotion {
  Vec3d angular = Vec3d::Zero();  // c
  Vec3d linear = Vec3d::Zero();   // c-bar, velocity at the origin

  Vec3d velocity(const Vec3d& p) const { return linear + angular.cross(p); }
};

/// Least-squares instantaneous motion along the curve. When the motion is
/// not identifiable (straight curves) the minimum-norm solution relative to
/// the curve centroid is returned.
RigidMotion fit_rigid_motion(const VectorField& field, CurveSamples curve);

/// Weighted integral of the squared rigid-motion misfit.
double rigid_residual(const VectorField& field, CurveSamples curve, const RigidMotion& motion);

struct AltEnergies {
  std::optional<double> in;
  double ortho = 0.0;
  double para = 0.0;
  double rigid = 0.0;
  RigidMotion motion;
};

AltEnergies alt_energies(const VectorField& field, CurveSamples curve,
                         const std::optional<Vec3d>& inward_normal = std::nullopt);

using RankingWeights = std::array<double, 4>;

struct EnergyReport {
  double c1 = 0.0;
  double c2 = 0.0;
  double E1 = 0.0;
  double E2 = 0.0;
  std::optional<double> E_in;
  double E_ortho = 0.0;
  double E_para = 0.0;
  double E_rigid = 0.0;
  double E = 0.0;
  RankingWeights weights{0.0, 0.0, 0.0, 0.0};
  std::optional<double> E_S;
  std::optional<double> area;
};

double combined_ranking(const EnergyReport& report, const RankingWeights& w);

/// All curve energies. The inward normal is taken from the curve's face for
/// the boundary family.
EnergyReport curve_energies(const VectorField& field, const SeedCurve& curve, const RankingWeights& w = {});

/// E1 of timeline j over its valid vertices, with finite-difference
/// tangents in s. Returns 0 when fewer than two consecutive vertices are valid.
double timeline_e1(const VectorField& field, const StreamSurfaceMesh& mesh, int j);

/// Time-integrated timeline E1 divided by the surface area. Throws
/// DegenerateMesh when the valid area is below 1e-12 diam^2.
double e_surface(const VectorField& field, const StreamSurfaceMesh& mesh);

/// Per-vertex first-order integrand (u^T J+ u)^2, zero at invalid vertices.
std::vector<double> vertex_strain(const VectorField& field, const StreamSurfaceMesh& mesh);

}  // namespace strainsurf
