#include "strainsurf/curves.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "strainsurf/errors.hpp"

namespace strainsurf {

const char* to_string(CurveFamily f) {
  switch (f) {
    case CurveFamily::SecondOrder: return "second_order";
    case CurveFamily::FirstOrderBoundary: return "first_order_boundary";
    case CurveFamily::FirstOrderInterior: return "first_order_interior";
  }
  return "?";
}

CurveFamily curve_family_from_string(const std::string& name) {
  if (name == "second_order" || name == "second-order") return CurveFamily::SecondOrder;
  if (name == "first_order_boundary" || name == "boundary") return CurveFamily::FirstOrderBoundary;
  if (name == "first_order_interior" || name == "interior") return CurveFamily::FirstOrderInterior;
  throw Error(ErrorCode::InvalidArgument, "unknown curve family '" + name + "'");
}

void update_arclength(SeedCurve& curve) {
  curve.arclength.assign(curve.points.size(), 0.0);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    curve.arclength[i] = curve.arclength[i - 1] + (curve.points[i] - curve.points[i - 1]).norm();
  }
}

double default_step(const BoxDomain& domain) { return 0.01 * domain.diameter(); }

DirectionSet admissible_directions(const VectorField& field, const Vec3d& p, CurveFamily family,
                                   const std::optional<int>& face) {
  const Mat3d J = field.jacobian(p);
  switch (family) {
    case CurveFamily::SecondOrder: return second_order_vectors(J);
    case CurveFamily::FirstOrderInterior: return first_order_cone(J);
    case CurveFamily::FirstOrderBoundary:
      if (!face) throw Error(ErrorCode::InvalidArgument, "boundary curves need a face");
      return boundary_first_order(J, field.domain().face(*face).tangent_basis);
  }
  return directions::Empty{};
}

namespace {

struct Branch {
  Branch(const Vec3d& start, const Vec3d& dir) : p(start), u(dir) {}
  Vec3d p;
  Vec3d u;
  bool alive = true;
  std::vector<Vec3d> points;
  std::vector<Vec3d> tangents;
};

double angle_between(const Vec3d& a, const Vec3d& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

}  // namespace

SeedCurve integrate_direction_field(const VectorField& field, const Vec3d& seed_in, const Vec3d& d0,
                                    CurveFamily family, const CurveOptions& options) {
  const BoxDomain& domain = field.domain();
  const double h = options.h > 0.0 ? options.h : default_step(domain);
  const double max_length = options.max_length > 0.0 ? options.max_length : domain.diameter();
  const auto max_segments = static_cast<long>(std::floor(max_length / h + 1e-9));
  if (!(d0.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial direction must be non-zero");

  Vec3d seed = seed_in;
  std::optional<int> face;
  if (family == CurveFamily::FirstOrderBoundary) {
    if (!options.face) throw Error(ErrorCode::InvalidArgument, "boundary curves need a face");
    face = options.face;
    const BoxFace f = domain.face(*face);
    if (!domain.on_face(f, seed)) throw Error(ErrorCode::InvalidArgument, "seed is not on face " + f.name());
    seed[f.axis] = f.coordinate;
  }
  if (!domain.contains(seed)) throw Error(ErrorCode::PointOutsideDomain, "seed outside the domain");

  // Boundary curves stay exactly on their face plane.
  auto on_plane = [&](Vec3d v, bool is_direction) {
    if (!face) return v;
    const BoxFace f = domain.face(*face);
    if (is_direction) {
      v[f.axis] = 0.0;
      return Vec3d(v.normalized());
    }
    v[f.axis] = f.coordinate;
    return v;
  };
  auto closest = [&](const DirectionSet& set, const Vec3d& d) -> std::optional<Vec3d> {
    auto u = closest_direction(set, d);
    if (u) u = on_plane(*u, true);
    return u;
  };

  const DirectionSet start = admissible_directions(field, seed, family, face);
  const auto u0 = closest(start, d0);
  if (!u0) throw Error(ErrorCode::NoAdmissibleDirection, "no admissible direction at the seed");
  const std::size_t kind = start.index();

  auto step = [&](Branch& b) {
    const Vec3d mid = b.p + 0.5 * h * b.u;
    if (!domain.contains(mid)) return false;
    const DirectionSet at_mid = admissible_directions(field, mid, family, face);
    if (at_mid.index() != kind) return false;
    const auto dm = closest(at_mid, b.u);
    if (!dm) return false;
    const Vec3d q = on_plane(b.p + h * *dm, false);
    if (!domain.contains(q)) return false;
    const DirectionSet at_q = admissible_directions(field, q, family, face);
    if (at_q.index() != kind) return false;
    const auto uq = closest(at_q, *dm);
    if (!uq || angle_between(*uq, b.u) > options.max_turn) return false;
    b.p = q;
    b.u = *uq;
    b.points.push_back(q);
    b.tangents.push_back(*uq);
    return true;
  };

  std::array<Branch, 2> branches{Branch{seed, *u0}, Branch{seed, -*u0}};
  long segments = 0;
  while (segments < max_segments && (branches[0].alive || branches[1].alive)) {
    for (Branch& b : branches) {
      if (!b.alive || segments >= max_segments) continue;
      if (step(b)) ++segments;
      else b.alive = false;
    }
  }

  SeedCurve curve;
  curve.family = family;
  curve.seed = seed;
  curve.initial_direction = *u0;
  curve.h = h;
  curve.face = face.value_or(-1);
  const Branch& back = branches[1];
  for (std::size_t k = back.points.size(); k-- > 0;) {
    curve.points.push_back(back.points[k]);
    curve.tangents.push_back(-back.tangents[k]);
  }
  curve.points.push_back(seed);
  curve.tangents.push_back(*u0);
  const Branch& fwd = branches[0];
  curve.points.insert(curve.points.end(), fwd.points.begin(), fwd.points.end());
  curve.tangents.insert(curve.tangents.end(), fwd.tangents.begin(), fwd.tangents.end());
  update_arclength(curve);

  if (curve.length() < options.min_length_fraction * domain.diameter() * (1.0 - 1e-12)) {
    throw Error(ErrorCode::CurveTooShort, "curve of length " + std::to_string(curve.length()) + " rejected");
  }
  return curve;
}

namespace {

std::vector<SeedCurve> curves_along(const VectorField& field, const Vec3d& seed, const std::vector<Vec3d>& dirs,
                                    CurveFamily family, const CurveOptions& options) {
  std::vector<SeedCurve> out;
  for (const Vec3d& d : dirs) {
    try {
      out.push_back(integrate_direction_field(field, seed, d, family, options));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CurveTooShort && e.code() != ErrorCode::NoAdmissibleDirection) throw;
    }
  }
  return out;
}

}  // namespace

std::vector<SeedCurve> second_order_curves(const VectorField& field, const Vec3d& seed, const CurveOptions& options) {
  const DirectionSet set = admissible_directions(field, seed, CurveFamily::SecondOrder);
  if (is_empty(set)) return {};
  return curves_along(field, seed, representative_directions(set, 4), CurveFamily::SecondOrder, options);
}

std::vector<SeedCurve> boundary_curves(const VectorField& field, int face, const Vec3d& seed,
                                       const CurveOptions& options) {
  CurveOptions opts = options;
  opts.face = face;
  const BoxFace f = field.domain().face(face);
  Vec3d p = seed;
  p[f.axis] = f.coordinate;
  const DirectionSet set = admissible_directions(field, p, CurveFamily::FirstOrderBoundary, face);
  if (is_empty(set)) return {};
  return curves_along(field, p, representative_directions(set, 2), CurveFamily::FirstOrderBoundary, opts);
}

SeedCurve interior_curve(const VectorField& field, const Vec3d& seed, const Vec3d& d0, const CurveOptions& options) {
  return integrate_direction_field(field, seed, d0, CurveFamily::FirstOrderInterior, options);
}

std::vector<SeedCurve> interior_curves(const VectorField& field, const Vec3d& seed, int count,
                                       const CurveOptions& options) {
  const DirectionSet set = admissible_directions(field, seed, CurveFamily::FirstOrderInterior);
  if (is_empty(set)) return {};
  return curves_along(field, seed, representative_directions(set, count), CurveFamily::FirstOrderInterior,
                      options);
}

double max_first_order_residual(const VectorField& field, const SeedCurve& curve) {
  double r = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const Vec3d& u = curve.tangents[i];
    r = std::max(r, std::abs(u.dot(strain_part(field.jacobian(curve.points[i])) * u)));
  }
  return r;
}

double max_second_order_residual(const VectorField& field, const SeedCurve& curve) {
  double r = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const Vec3d& u = curve.tangents[i];
    r = std::max(r, std::abs(u.dot(k_form(field.jacobian(curve.points[i])) * u)));
  }
  return r;
}

double max_chord_second_order_residual(const VectorField& field, const SeedCurve& curve) {
  double r = 0.0;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const Vec3d c = (curve.points[i + 1] - curve.points[i]).normalized();
    for (std::size_t k : {i, i + 1}) r = std::max(r, std::abs(c.dot(k_form(field.jacobian(curve.points[k])) * c)));
  }
  return r;
}

}  // namespace strainsurf
