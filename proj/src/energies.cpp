#include "strainsurf/energies.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "strainsurf/errors.hpp"

namespace strainsurf {

double polyline_length(std::span<const Vec3d> points) {
  double L = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) L += (points[i] - points[i - 1]).norm();
  return L;
}

double trapezoid(std::span<const Vec3d> points, std::span<const double> values) {
  double s = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    s += 0.5 * (values[i - 1] + values[i]) * (points[i] - points[i - 1]).norm();
  }
  return s;
}

namespace {

template <typename F>
double integrate(const VectorField& field, CurveSamples curve, F&& integrand) {
  std::vector<double> f(curve.points.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto [v, J] = field.eval_with_jacobian(curve.points[i]);
    f[i] = integrand(curve.points[i], curve.tangents[i], v, J);
  }
  return trapezoid(curve.points, f);
}

double checked_length(CurveSamples curve) {
  const double L = polyline_length(curve.points);
  if (!(L > 0.0)) throw Error(ErrorCode::ZeroLengthCurve, "curve has zero length");
  return L;
}

double sq(double x) { return x * x; }

}  // namespace

double e1_integrand(const Mat3d& J, const Vec3d& u) { return sq(u.dot(strain_part(J) * u)); }

double e2_integrand(const Mat3d& J, const Vec3d& u) { return sq(u.dot(k_form(J) * u)); }

TaylorCoefficients taylor_coeffs(const VectorField& field, CurveSamples curve) {
  TaylorCoefficients c;
  c.c1 = integrate(field, curve, [](const Vec3d&, const Vec3d& u, const Vec3d&, const Mat3d& J) {
    return u.dot(strain_part(J) * u);
  });
  c.c2 = integrate(field, curve, [](const Vec3d&, const Vec3d& u, const Vec3d&, const Mat3d& J) {
    return u.dot(k_form(J) * u) - sq(u.dot(strain_part(J) * u));
  });
  return c;
}

double e1(const VectorField& field, CurveSamples curve) {
  const double L = checked_length(curve);
  return integrate(field, curve, [](const Vec3d&, const Vec3d& u, const Vec3d&, const Mat3d& J) {
           return e1_integrand(J, u);
         }) / L;
}

double e2(const VectorField& field, CurveSamples curve) {
  const double L = checked_length(curve);
  return integrate(field, curve, [](const Vec3d&, const Vec3d& u, const Vec3d&, const Mat3d& J) {
           return e2_integrand(J, u);
         }) / L;
}

RigidMotion fit_rigid_motion(const VectorField& field, CurveSamples curve) {
  const std::size_t n = curve.points.size();
  if (n < 2) throw Error(ErrorCode::ZeroLengthCurve, "curve needs at least two samples");
  // Trapezoid weights per sample.
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double ds = (curve.points[i] - curve.points[i - 1]).norm();
    w[i - 1] += 0.5 * ds;
    w[i] += 0.5 * ds;
  }
  double W = 0.0;
  Vec3d centroid = Vec3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    W += w[i];
    centroid += w[i] * curve.points[i];
  }
  if (!(W > 0.0)) throw Error(ErrorCode::ZeroLengthCurve, "curve has zero length");
  centroid /= W;

  // v ~ b + c x (p - centroid), unknowns x = (c, b).
  Eigen::MatrixXd A(3 * n, 6);
  Eigen::VectorXd rhs(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sw = std::sqrt(w[i]);
    const Vec3d r = curve.points[i] - centroid;
    Mat3d cross_r;  // c x r = -[r]_x c
    cross_r << 0, r.z(), -r.y(), -r.z(), 0, r.x(), r.y(), -r.x(), 0;
    A.block<3, 3>(3 * i, 0) = sw * cross_r;
    A.block<3, 3>(3 * i, 3) = sw * Mat3d::Identity();
    rhs.segment<3>(3 * i) = sw * field.eval(curve.points[i]);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  cod.setThreshold(1e-12);
  const Eigen::VectorXd x = cod.solve(rhs);
  RigidMotion m;
  m.angular = x.head<3>();
  m.linear = x.tail<3>() - m.angular.cross(centroid);
  return m;
}

double rigid_residual(const VectorField& field, CurveSamples curve, const RigidMotion& motion) {
  return integrate(field, curve, [&](const Vec3d& p, const Vec3d&, const Vec3d& v, const Mat3d&) {
    return (motion.velocity(p) - v).squaredNorm();
  });
}

AltEnergies alt_energies(const VectorField& field, CurveSamples curve, const std::optional<Vec3d>& inward_normal) {
  const double L = checked_length(curve);
  AltEnergies out;
  if (inward_normal) {
    const Vec3d m = inward_normal->normalized();
    out.in = integrate(field, curve, [&](const Vec3d&, const Vec3d&, const Vec3d& v, const Mat3d&) {
               const double speed = v.norm();
               if (!(speed > 0.0)) throw Error(ErrorCode::ZeroVelocityOnCurve, "zero velocity on the curve");
               return 1.0 - sq(v.dot(m) / speed);
             }) / L;
  }
  out.ortho = integrate(field, curve, [](const Vec3d&, const Vec3d& u, const Vec3d& v, const Mat3d&) {
                return sq(v.dot(u));
              }) / L;
  out.para = integrate(field, curve, [](const Vec3d&, const Vec3d& u, const Vec3d&, const Mat3d& J) {
               return sq((J * u).squaredNorm());
             }) / L;
  out.motion = fit_rigid_motion(field, curve);
  out.rigid = rigid_residual(field, curve, out.motion) / L;
  return out;
}

double combined_ranking(const EnergyReport& r, const RankingWeights& w) {
  for (double wi : w) {
    if (!(wi >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ranking weights must be non-negative");
  }
  double E = r.E2 + w[1] * r.E_ortho + w[2] * r.E_para + w[3] * r.E_rigid;
  if (w[0] > 0.0) {
    if (!r.E_in) throw Error(ErrorCode::MissingNormal, "E_in weight set for a curve without an inward normal");
    E += w[0] * *r.E_in;
  }
  return E;
}

EnergyReport curve_energies(const VectorField& field, const SeedCurve& curve, const RankingWeights& w) {
  EnergyReport r;
  const TaylorCoefficients c = taylor_coeffs(field, curve);
  r.c1 = c.c1;
  r.c2 = c.c2;
  r.E1 = e1(field, curve);
  r.E2 = e2(field, curve);
  std::optional<Vec3d> normal;
  if (curve.family == CurveFamily::FirstOrderBoundary && curve.face >= 0) {
    normal = field.domain().face(curve.face).inward_normal;
  }
  const AltEnergies alt = alt_energies(field, curve, normal);
  r.E_in = alt.in;
  r.E_ortho = alt.ortho;
  r.E_para = alt.para;
  r.E_rigid = alt.rigid;
  r.weights = w;
  r.E = combined_ranking(r, w);
  return r;
}

// ---------------------------------------------------------------------------
// Surfaces
// ---------------------------------------------------------------------------

namespace {

// Finite-difference tangent of timeline j at row i inside the valid run [a, b].
Vec3d timeline_tangent(const StreamSurfaceMesh& mesh, int i, int j, int a, int b) {
  const int lo = i > a ? i - 1 : i;
  const int hi = i < b ? i + 1 : i;
  const Vec3d d = mesh.at(hi, j) - mesh.at(lo, j);
  const double len = d.norm();
  return len > 0.0 ? Vec3d(d / len) : Vec3d::Zero();
}

template <typename F>
void for_each_run(const StreamSurfaceMesh& mesh, int j, F&& f) {
  int i = 0;
  while (i < mesh.m) {
    if (!mesh.is_valid(i, j)) {
      ++i;
      continue;
    }
    int b = i;
    while (b + 1 < mesh.m && mesh.is_valid(b + 1, j)) ++b;
    if (b > i) f(i, b);
    i = b + 1;
  }
}

}  // namespace

double timeline_e1(const VectorField& field, const StreamSurfaceMesh& mesh, int j) {
  double integral = 0.0, length = 0.0;
  for_each_run(mesh, j, [&](int a, int b) {
    std::vector<Vec3d> pts, tans;
    for (int i = a; i <= b; ++i) {
      pts.push_back(mesh.at(i, j));
      tans.push_back(timeline_tangent(mesh, i, j, a, b));
    }
    std::vector<double> f(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) f[k] = e1_integrand(field.jacobian(pts[k]), tans[k]);
    integral += trapezoid(pts, f);
    length += polyline_length(pts);
  });
  return length > 0.0 ? integral / length : 0.0;
}

double e_surface(const VectorField& field, const StreamSurfaceMesh& mesh) {
  // Ribbons swept along their own tangent enclose no area worth normalising by.
  const double area = mesh_area(mesh);
  const double diam = field.domain().diameter();
  if (!(area > 1e-12 * diam * diam)) throw Error(ErrorCode::DegenerateMesh, "surface has zero area");
  std::vector<double> E(mesh.n);
  for (int j = 0; j < mesh.n; ++j) E[j] = timeline_e1(field, mesh, j);
  double s = 0.0;
  for (int j = 0; j + 1 < mesh.n; ++j) s += 0.5 * (E[j] + E[j + 1]) * (mesh.times[j + 1] - mesh.times[j]);
  return s / area;
}

std::vector<double> vertex_strain(const VectorField& field, const StreamSurfaceMesh& mesh) {
  std::vector<double> out(mesh.vertices.size(), 0.0);
  for (int j = 0; j < mesh.n; ++j) {
    for_each_run(mesh, j, [&](int a, int b) {
      for (int i = a; i <= b; ++i) {
        out[mesh.index(i, j)] = e1_integrand(field.jacobian(mesh.at(i, j)), timeline_tangent(mesh, i, j, a, b));
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mesh helpers
// ---------------------------------------------------------------------------

std::size_t StreamSurfaceMesh::valid_count() const {
  std::size_t c = 0;
  for (auto v : valid) c += v != 0;
  return c;
}

StreamSurfaceMesh StreamSurfaceMesh::reversed() const {
  StreamSurfaceMesh r = *this;
  r.seed_timeline = n - 1 - seed_timeline;
  for (int j = 0; j < n; ++j) r.times[j] = -times[n - 1 - j];
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t to = r.index(m - 1 - i, n - 1 - j), from = index(i, j);
      r.vertices[to] = vertices[from];
      r.valid[to] = valid[from];
      if (!original.empty()) r.original[to] = original[from];
    }
  }
  return r;
}

double mesh_area(const StreamSurfaceMesh& mesh) {
  double area = 0.0;
  for (int i = 0; i + 1 < mesh.m; ++i) {
    for (int j = 0; j + 1 < mesh.n; ++j) {
      if (!mesh.is_valid(i, j) || !mesh.is_valid(i + 1, j) || !mesh.is_valid(i + 1, j + 1) ||
          !mesh.is_valid(i, j + 1)) {
        continue;
      }
      const Vec3d& a = mesh.at(i, j);
      const Vec3d& b = mesh.at(i + 1, j);
      const Vec3d& c = mesh.at(i + 1, j + 1);
      const Vec3d& d = mesh.at(i, j + 1);
      area += 0.5 * (b - a).cross(c - a).norm() + 0.5 * (c - a).cross(d - a).norm();
    }
  }
  return area;
}

}  // namespace strainsurf
