#include "strainsurf/quadrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "strainsurf/errors.hpp"
#include "strainsurf/field.hpp"

namespace strainsurf {

namespace {

using namespace directions;

Vec3d canonical_sign(Vec3d d) {
  // Projective representative: first component with |c| > 1e-12 is positive.
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) > 1e-12) {
      if (d[k] < 0.0) d = -d;
      break;
    }
  }
  return d;
}

Mat3d symmetrised(const Mat3d& M) { return 0.5 * (M + M.transpose()); }

Mat3d adjugate(const Mat3d& M) {
  Mat3d adj;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
      const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      // Cyclic index choice makes the cofactor sign implicit.
      adj(i, j) = M(r0, c0) * M(r1, c1) - M(r0, c1) * M(r1, c0);
    }
  }
  return adj;
}

double quad(const Mat3d& M, const Vec3d& d) { return d.dot(M * d); }

// Newton iteration on the unit sphere for the pair d^T A d = d^T B d = 0.
Vec3d polish_pair(Vec3d d, const Mat3d& A, const Mat3d& B) {
  auto residual = [&](const Vec3d& x) { return std::max(std::abs(quad(A, x)), std::abs(quad(B, x))); };
  Vec3d best = d;
  double best_res = residual(d);
  for (int it = 0; it < 12 && best_res > 1e-16; ++it) {
    Eigen::Matrix<double, 2, 3> G;
    G.row(0) = 2.0 * (A * d).transpose();
    G.row(1) = 2.0 * (B * d).transpose();
    // Restrict to the tangent plane of the sphere.
    const Mat3d P = Mat3d::Identity() - d * d.transpose();
    G = G * P;
    const Eigen::Vector2d f(quad(A, d), quad(B, d));
    Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-12);
    const Vec3d step = svd.solve(-f);
    d = (d + step).normalized();
    const double r = residual(d);
    if (r < best_res) {
      best_res = r;
      best = d;
    } else if (r > 10.0 * best_res) {
      break;
    }
  }
  return best;
}

// Single-form Newton projection back onto d^T M d = 0 along the sphere.
Vec3d polish_single(Vec3d x, const Mat3d& M) {
  for (int it = 0; it < 4; ++it) {
    const double f = quad(M, x);
    Vec3d g = 2.0 * (M * x);
    g -= g.dot(x) * x;
    const double gg = g.squaredNorm();
    if (gg < 1e-300 || std::abs(f) < 1e-17) break;
    x = (x - (f / gg) * g).normalized();
  }
  return x;
}

Vec3d any_in_plane(const Vec3d& normal) { return normal.unitOrthogonal(); }

Vec3d project_onto_plane(const Vec3d& d, const Vec3d& normal) {
  Vec3d x = d - d.dot(normal) * normal;
  if (x.norm() < 1e-12) return any_in_plane(normal);
  x.normalize();
  return x.dot(d) < 0.0 ? -x : x;
}

// Cone generators parametrised by angle, in the form's eigenbasis.
Vec3d cone_generator(const SignatureInfo& info, double theta) {
  // The eigenvalue whose sign differs from the other two.
  int odd = 0;
  const Vec3d& m = info.eigenvalues;
  if (info.positive == 1) {
    for (int k = 0; k < 3; ++k) if (m[k] > 0.0) odd = k;
  } else {
    for (int k = 0; k < 3; ++k) if (m[k] < 0.0) odd = k;
  }
  const int i = (odd + 1) % 3, j = (odd + 2) % 3;
  const Vec3d d = info.eigenvectors.col(i) * (std::cos(theta) / std::sqrt(std::abs(m[i]))) +
                  info.eigenvectors.col(j) * (std::sin(theta) / std::sqrt(std::abs(m[j]))) +
                  info.eigenvectors.col(odd) / std::sqrt(std::abs(m[odd]));
  return d.normalized();
}

}  // namespace

const char* to_string(Signature s) {
  switch (s) {
    case Signature::Cone: return "cone";
    case Signature::PointOnly: return "point-only";
    case Signature::PlanePair: return "plane-pair";
    case Signature::Line: return "line";
    case Signature::DoublePlane: return "double-plane";
    case Signature::AllSpace: return "all-space";
  }
  return "unknown";
}

SignatureInfo classify_form(const Mat3d& form, double eps) {
  SignatureInfo info;
  Eigen::SelfAdjointEigenSolver<Mat3d> es(symmetrised(form));
  info.eigenvalues = es.eigenvalues();
  info.eigenvectors = es.eigenvectors();
  const double scale = info.eigenvalues.cwiseAbs().maxCoeff();
  for (int k = 0; k < 3; ++k) {
    const double l = info.eigenvalues[k];
    if (scale == 0.0 || std::abs(l) <= eps * scale) {
      ++info.zero;
    } else if (l > 0.0) {
      ++info.positive;
    } else {
      ++info.negative;
    }
  }
  if (info.zero == 3) {
    info.kind = Signature::AllSpace;
  } else if (info.zero == 2) {
    info.kind = Signature::DoublePlane;
  } else if (info.zero == 1) {
    info.kind = (info.positive == 1 && info.negative == 1) ? Signature::PlanePair : Signature::Line;
  } else {
    info.kind = (info.positive == 3 || info.negative == 3) ? Signature::PointOnly : Signature::Cone;
  }
  return info;
}

// ---------------------------------------------------------------------------
// Direction set helpers
// ---------------------------------------------------------------------------

std::string describe(const DirectionSet& set) {
  std::ostringstream os;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Empty>) os << "empty";
        else if constexpr (std::is_same_v<T, FinitelyMany>) os << s.dirs.size() << " direction(s)";
        else if constexpr (std::is_same_v<T, Cone>) os << "cone";
        else if constexpr (std::is_same_v<T, PlanePair>) os << "plane pair";
        else if constexpr (std::is_same_v<T, Line>) os << "line";
        else if constexpr (std::is_same_v<T, Plane>) os << "plane";
        else os << "all space";
      },
      set);
  return os.str();
}

bool is_empty(const DirectionSet& set) {
  if (std::holds_alternative<Empty>(set)) return true;
  if (auto* f = std::get_if<FinitelyMany>(&set)) return f->dirs.empty();
  return false;
}

std::vector<Vec3d> dedup_directions(const std::vector<Vec3d>& dirs, double tol) {
  std::vector<Vec3d> out;
  for (const Vec3d& raw : dirs) {
    const double n = raw.norm();
    if (!(n > 0.0) || !std::isfinite(n)) continue;
    const Vec3d d = canonical_sign(raw / n);
    const bool dup = std::any_of(out.begin(), out.end(),
                                 [&](const Vec3d& e) { return e.cross(d).norm() < tol; });
    if (!dup) out.push_back(d);
  }
  return out;
}

std::optional<Vec3d> closest_direction(const DirectionSet& set, const Vec3d& previous) {
  const Vec3d prev = previous.normalized();
  auto align = [&](Vec3d d) { return d.dot(prev) < 0.0 ? Vec3d(-d) : d; };
  return std::visit(
      [&](const auto& s) -> std::optional<Vec3d> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Empty>) {
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, FinitelyMany>) {
          if (s.dirs.empty()) return std::nullopt;
          const Vec3d* best = &s.dirs.front();
          for (const Vec3d& d : s.dirs) {
            if (std::abs(d.dot(prev)) > std::abs(best->dot(prev))) best = &d;
          }
          return align(*best);
        } else if constexpr (std::is_same_v<T, Cone>) {
          return align(project_to_cone(prev, s.form));
        } else if constexpr (std::is_same_v<T, PlanePair>) {
          const Vec3d a = project_onto_plane(prev, s.normals[0]);
          const Vec3d b = project_onto_plane(prev, s.normals[1]);
          return align(a.dot(prev) >= b.dot(prev) ? a : b);
        } else if constexpr (std::is_same_v<T, Line>) {
          return align(s.dir);
        } else if constexpr (std::is_same_v<T, Plane>) {
          return align(project_onto_plane(prev, s.normal));
        } else {
          return prev;
        }
      },
      set);
}

std::vector<Vec3d> representative_directions(const DirectionSet& set, int count) {
  count = std::max(count, 1);
  std::vector<Vec3d> out;
  auto in_plane = [&](const Vec3d& normal, int n) {
    const Vec3d a = any_in_plane(normal);
    const Vec3d b = normal.cross(a).normalized();
    for (int k = 0; k < n; ++k) {
      const double th = std::numbers::pi * k / n;
      out.push_back(std::cos(th) * a + std::sin(th) * b);
    }
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FinitelyMany>) {
          out = s.dirs;
        } else if constexpr (std::is_same_v<T, Cone>) {
          const SignatureInfo info = classify_form(s.form);
          for (int k = 0; k < count; ++k) {
            out.push_back(cone_generator(info, 2.0 * std::numbers::pi * k / count));
          }
        } else if constexpr (std::is_same_v<T, PlanePair>) {
          in_plane(s.normals[0], std::max(1, count / 2));
          if (s.normals[0].cross(s.normals[1]).norm() > 1e-9) in_plane(s.normals[1], std::max(1, count / 2));
        } else if constexpr (std::is_same_v<T, Line>) {
          out.push_back(s.dir);
        } else if constexpr (std::is_same_v<T, Plane>) {
          in_plane(s.normal, count);
        } else if constexpr (std::is_same_v<T, AllSpace>) {
          for (int k = 0; k < std::min(count, 3); ++k) out.push_back(Vec3d::Unit(k));
        }
      },
      set);
  return dedup_directions(out, 1e-9);
}

// ---------------------------------------------------------------------------
// Single forms
// ---------------------------------------------------------------------------

DirectionSet solution_set(const Mat3d& form, double eps) {
  const SignatureInfo info = classify_form(form, eps);
  const Mat3d& V = info.eigenvectors;
  const Vec3d& m = info.eigenvalues;
  switch (info.kind) {
    case Signature::Cone: return Cone{symmetrised(form)};
    case Signature::PointOnly: return Empty{};
    case Signature::AllSpace: return AllSpace{};
    case Signature::Line: {
      int null = 0;
      for (int k = 1; k < 3; ++k) if (std::abs(m[k]) < std::abs(m[null])) null = k;
      return Line{canonical_sign(V.col(null))};
    }
    case Signature::DoublePlane: {
      int big = 0;
      for (int k = 1; k < 3; ++k) if (std::abs(m[k]) > std::abs(m[big])) big = k;
      return Plane{canonical_sign(V.col(big))};
    }
    case Signature::PlanePair: {
      // Eigenvalues ascending: m[0] < 0, m[2] > 0 and the middle one ~0.
      const double a = std::sqrt(m[2]), b = std::sqrt(-m[0]);
      const Vec3d n1 = (a * V.col(2) + b * V.col(0)).normalized();
      const Vec3d n2 = (a * V.col(2) - b * V.col(0)).normalized();
      return PlanePair{{canonical_sign(n1), canonical_sign(n2)}};
    }
  }
  return Empty{};
}

DirectionSet first_order_cone(const Mat3d& J) { return solution_set(strain_part(J)); }

DirectionSet restricted_solutions(const Mat3d& form, const Vec3d& e1, const Vec3d& e2, double eps) {
  const Mat3d S = symmetrised(form);
  Eigen::Matrix<double, 3, 2> E;
  E.col(0) = e1;
  E.col(1) = e2;
  const Eigen::Matrix2d R = E.transpose() * S * E;
  const double ref = S.cwiseAbs().maxCoeff();
  const Vec3d normal = e1.cross(e2).normalized();
  if (ref == 0.0 || R.cwiseAbs().maxCoeff() <= eps * ref) return Plane{canonical_sign(normal)};

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(R);
  const Eigen::Vector2d mu = es.eigenvalues();  // ascending
  const Eigen::Matrix2d W = es.eigenvectors();
  const double scale = mu.cwiseAbs().maxCoeff();
  const bool zero0 = std::abs(mu[0]) <= eps * scale;
  const bool zero1 = std::abs(mu[1]) <= eps * scale;
  auto lift = [&](const Eigen::Vector2d& c) { return canonical_sign((E * c).normalized()); };

  if (zero0 || zero1) {
    return FinitelyMany{{lift(W.col(zero0 ? 0 : 1))}};
  }
  if ((mu[0] > 0.0) == (mu[1] > 0.0)) return Empty{};
  // mu[0] < 0 < mu[1]: mu0 a^2 + mu1 b^2 = 0 along (a, b) in the eigenbasis.
  const double a = std::sqrt(mu[1]), b = std::sqrt(-mu[0]);
  std::vector<Vec3d> dirs{lift(a * W.col(0) + b * W.col(1)), lift(a * W.col(0) - b * W.col(1))};
  dirs = dedup_directions(dirs);
  for (Vec3d& d : dirs) d = canonical_sign(polish_single(d, S));
  return FinitelyMany{std::move(dirs)};
}

DirectionSet boundary_first_order(const Mat3d& J, const std::array<Vec3d, 2>& tangent_basis) {
  return restricted_solutions(strain_part(J), tangent_basis[0], tangent_basis[1]);
}

// ---------------------------------------------------------------------------
// Polynomials and the pencil
// ---------------------------------------------------------------------------

std::vector<double> real_polynomial_roots(const std::vector<double>& coeffs) {
  std::vector<double> c = coeffs;
  double cmax = 0.0;
  for (double v : c) cmax = std::max(cmax, std::abs(v));
  if (cmax == 0.0) return {};
  while (c.size() > 1 && std::abs(c.back()) <= 1e-14 * cmax) c.pop_back();
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return {};

  auto eval = [&](double x) {
    double p = 0.0, dp = 0.0;
    for (int k = n; k >= 0; --k) {
      dp = dp * x + p;
      p = p * x + c[k];
    }
    return std::pair{p, dp};
  };

  std::vector<double> roots;
  if (n == 1) {
    roots.push_back(-c[0] / c[1]);
  } else {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) C(0, k) = -c[n - 1 - k] / c[n];
    for (int k = 1; k < n; ++k) C(k, k - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
    for (int k = 0; k < n; ++k) {
      const std::complex<double> z = es.eigenvalues()[k];
      if (std::abs(z.imag()) <= 1e-7 * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
    }
  }
  for (double& r : roots) {
    const auto [p, dp] = eval(r);
    if (dp != 0.0) {
      const double polished = r - p / dp;
      if (std::isfinite(polished) && std::abs(eval(polished).first) <= std::abs(p)) r = polished;
    }
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots) {
    if (out.empty() || std::abs(r - out.back()) > 1e-12 * (1.0 + std::abs(r))) out.push_back(r);
  }
  return out;
}

std::array<double, 4> pencil_determinant(const Mat3d& A, const Mat3d& B) {
  return {A.determinant(), (adjugate(A) * B).trace(), (adjugate(B) * A).trace(), B.determinant()};
}

DirectionSet cone_cone_intersection(const Mat3d& A_in, const Mat3d& B_in) {
  const Mat3d A = symmetrised(A_in) / symmetrised(A_in).norm();
  const Mat3d B = symmetrised(B_in) / symmetrised(B_in).norm();
  if (!A.allFinite() || !B.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "cone intersection needs two non-zero forms");
  }
  const Signature sa = classify(A), sb = classify(B);
  if (sa == Signature::PointOnly || sb == Signature::PointOnly) return Empty{};

  // Singular members of the pencil.
  std::vector<Mat3d> members;
  const auto c = pencil_determinant(A, B);
  for (double lambda : real_polynomial_roots({c[0], c[1], c[2], c[3]})) {
    members.push_back(A + lambda * B);
  }
  if (std::abs(c[3]) <= 1e-12) members.push_back(B);
  if (std::abs(c[0]) <= 1e-12) members.push_back(A);

  std::vector<Vec3d> candidates;
  std::optional<Vec3d> shared_plane;
  auto intersect_plane = [&](const Vec3d& normal) {
    const Vec3d e1 = any_in_plane(normal);
    const Vec3d e2 = normal.cross(e1).normalized();
    const DirectionSet ra = restricted_solutions(A, e1, e2);
    const DirectionSet rb = restricted_solutions(B, e1, e2);
    if (auto* f = std::get_if<FinitelyMany>(&ra)) candidates.insert(candidates.end(), f->dirs.begin(), f->dirs.end());
    if (auto* f = std::get_if<FinitelyMany>(&rb)) candidates.insert(candidates.end(), f->dirs.begin(), f->dirs.end());
    if (std::holds_alternative<Plane>(ra) && std::holds_alternative<Plane>(rb)) shared_plane = normal;
  };

  for (const Mat3d& M : members) {
    Eigen::SelfAdjointEigenSolver<Mat3d> es(M);
    const Vec3d m = es.eigenvalues();
    const Mat3d V = es.eigenvectors();
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return std::abs(m[i]) < std::abs(m[j]); });
    const int null = order[0], mid = order[1], big = order[2];
    const double scale = std::abs(m[big]);
    if (scale <= 1e-12) {
      // A and B proportional: the whole first cone is shared.
      return solution_set(A);
    }
    if (std::abs(m[mid]) <= 1e-9 * scale) {
      intersect_plane(V.col(big));
    } else if ((m[mid] > 0.0) != (m[big] > 0.0)) {
      const double a = std::sqrt(std::abs(m[big])), b = std::sqrt(std::abs(m[mid]));
      intersect_plane((a * V.col(big) + b * V.col(mid)).normalized());
      intersect_plane((a * V.col(big) - b * V.col(mid)).normalized());
    } else {
      candidates.push_back(V.col(null));
    }
  }

  if (shared_plane && candidates.empty()) return Plane{canonical_sign(*shared_plane)};

  std::vector<Vec3d> accepted;
  for (const Vec3d& cand : candidates) {
    const Vec3d d = polish_pair(cand.normalized(), A, B);
    if (std::abs(quad(A, d)) <= 1e-10 && std::abs(quad(B, d)) <= 1e-10) accepted.push_back(d);
  }
  accepted = dedup_directions(accepted, 1e-6);
  if (accepted.empty()) return Empty{};
  return FinitelyMany{std::move(accepted)};
}

DirectionSet second_order_vectors(const Mat3d& J) { return second_order_vectors(J, k_matrix(J)); }

DirectionSet second_order_vectors(const Mat3d& J, const Mat3d& K) {
  const Mat3d A = strain_part(J);
  const Mat3d B = strain_part(K);
  const double s = J.norm();
  if (s == 0.0) return AllSpace{};
  const bool zero_a = A.norm() <= 1e-12 * s;
  const bool zero_b = B.norm() <= 1e-12 * s * s;
  if (zero_a && zero_b) return AllSpace{};
  if (zero_a) return solution_set(B);
  if (zero_b) return solution_set(A);
  return cone_cone_intersection(A, B);
}

// ---------------------------------------------------------------------------
// Projection
// ---------------------------------------------------------------------------

Vec3d project_to_cone(const Vec3d& d_in, const Mat3d& form) {
  const Vec3d d = d_in.normalized();
  const SignatureInfo info = classify_form(form);
  switch (info.kind) {
    case Signature::AllSpace: return std::abs(d_in.norm() - 1.0) <= 1e-15 ? d_in : d;
    case Signature::PointOnly:
      throw Error(ErrorCode::NoConeExists, "definite form has no real cone");
    case Signature::Line: {
      const auto line = std::get<Line>(solution_set(form));
      return line.dir.dot(d) < 0.0 ? Vec3d(-line.dir) : line.dir;
    }
    case Signature::DoublePlane: {
      const auto plane = std::get<Plane>(solution_set(form));
      return project_onto_plane(d, plane.normal);
    }
    default: break;
  }

  // Cone or plane pair: maximise x.d subject to |x| = 1, x^T M x = 0. In the
  // eigenbasis the stationary points are x_i = c_i / (1 + nu m_i).
  const double scale = info.eigenvalues.cwiseAbs().maxCoeff();
  const Vec3d m = info.eigenvalues / scale;
  const Mat3d& V = info.eigenvectors;
  const Mat3d M = symmetrised(form) / scale;
  const Vec3d c = V.transpose() * d;
  const double eps = kDefaultSignatureEps;

  double m_max = 0.0, m_min = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (m[k] > eps) m_max = std::max(m_max, m[k]);
    if (m[k] < -eps) m_min = std::min(m_min, m[k]);
  }
  const double nu_lo = -1.0 / m_max, nu_hi = -1.0 / m_min;

  auto phi = [&](double nu) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double den = 1.0 + nu * m[k];
      s += m[k] * c[k] * c[k] / (den * den);
    }
    return s;
  };
  auto from_nu = [&](double nu) {
    Vec3d x;
    for (int k = 0; k < 3; ++k) x[k] = c[k] / (1.0 + nu * m[k]);
    return x;
  };

  std::vector<Vec3d> candidates;  // eigenbasis coordinates
  // Interior root: phi decreases strictly on (nu_lo, nu_hi).
  {
    double lo = nu_lo, hi = nu_hi;
    const double width = hi - lo;
    double a = lo + 1e-15 * width, b = hi - 1e-15 * width;
    if (phi(a) > 0.0 && phi(b) < 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        (phi(mid) > 0.0 ? a : b) = mid;
      }
      candidates.push_back(from_nu(0.5 * (a + b)));
    }
  }
  // Pole solutions: components in the pole eigenspace are free.
  for (double nu : {nu_lo, nu_hi}) {
    const double pole_m = -1.0 / nu;
    Vec3d x = Vec3d::Zero();
    double rest = 0.0;
    int first_pole = -1;
    Vec3d pole_dir = Vec3d::Zero();
    for (int k = 0; k < 3; ++k) {
      if (std::abs(m[k] - pole_m) <= 1e-12) {
        if (first_pole < 0) first_pole = k;
        pole_dir[k] = c[k];
      } else {
        x[k] = c[k] / (1.0 + nu * m[k]);
        rest += m[k] * x[k] * x[k];
      }
    }
    const double r2 = -rest / pole_m;
    if (first_pole < 0 || r2 < 0.0) continue;
    if (pole_dir.norm() < 1e-300) pole_dir[first_pole] = 1.0;
    candidates.push_back(x + std::sqrt(r2) * pole_dir.normalized());
  }

  Vec3d best = Vec3d::Zero();
  double best_dot = -2.0;
  for (const Vec3d& cand : candidates) {
    if (!(cand.norm() > 0.0) || !cand.allFinite()) continue;
    Vec3d x = polish_single((V * cand).normalized(), M);
    if (x.dot(d) < 0.0) x = -x;
    if (x.dot(d) > best_dot) {
      best_dot = x.dot(d);
      best = x;
    }
  }
  if (best_dot < -1.0) {
    // Unreachable for indefinite forms; keep a valid cone point regardless.
    best = cone_generator(info, 0.0);
  }
  return best;
}

}  // namespace strainsurf
