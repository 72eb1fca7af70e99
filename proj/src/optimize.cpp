#include "strainsurf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "strainsurf/energies.hpp"
#include "strainsurf/errors.hpp"

namespace strainsurf {

void validate(const OptimizerConfig& c) {
  if (!(c.mu1 >= 0.0) || !(c.mu2 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must be non-negative");
  if (c.max_outer_iters < 1 || c.inner_max_iters < 1) {
    throw Error(ErrorCode::InvalidArgument, "iteration caps must be at least 1");
  }
}

namespace {

// Visits every residual of F. Strain residuals are scalars over a quad;
// fairness residuals are second differences over three collinear stencil
// vertices; proximity residuals touch one vertex.
template <typename Strain, typename Fair, typename Prox>
void visit_terms(const StreamSurfaceMesh& mesh, Strain&& strain, Fair&& fair, Prox&& prox) {
  const int m = mesh.m, n = mesh.n;
  for (int i = 0; i + 1 < m; ++i) {
    for (int j = 0; j + 1 < n; ++j) {
      if (mesh.is_valid(i, j) && mesh.is_valid(i + 1, j) && mesh.is_valid(i + 1, j + 1) && mesh.is_valid(i, j + 1)) {
        strain(mesh.index(i, j), mesh.index(i + 1, j), mesh.index(i + 1, j + 1), mesh.index(i, j + 1));
      }
    }
  }
  for (int i = 1; i + 1 < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (mesh.is_valid(i - 1, j) && mesh.is_valid(i, j) && mesh.is_valid(i + 1, j)) {
        fair(mesh.index(i - 1, j), mesh.index(i, j), mesh.index(i + 1, j));
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 1; j + 1 < n; ++j) {
      if (mesh.is_valid(i, j - 1) && mesh.is_valid(i, j) && mesh.is_valid(i, j + 1)) {
        fair(mesh.index(i, j - 1), mesh.index(i, j), mesh.index(i, j + 1));
      }
    }
  }
  for (std::size_t k = 0; k < mesh.vertices.size(); ++k) {
    if (mesh.valid[k]) prox(k);
  }
}

}  // namespace

ObjectiveTerms objective(const StreamSurfaceMesh& mesh, const OptimizerConfig& config) {
  ObjectiveTerms t;
  const auto& q = mesh.vertices;
  const auto& q0 = mesh.original.empty() ? mesh.vertices : mesh.original;
  visit_terms(
      mesh,
      [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
        const Vec3d e = q[c] - q[b] + q[a] - q[d];
        const double r = (q[b] - q[a]).dot(e);
        t.strain += r * r;
      },
      [&](std::size_t a, std::size_t b, std::size_t c) { t.fair += (q[c] - 2.0 * q[b] + q[a]).squaredNorm(); },
      [&](std::size_t k) { t.prox += (q[k] - q0[k]).squaredNorm(); });
  t.F = t.strain + config.mu1 * t.fair + config.mu2 * t.prox;
  return t;
}

Eigen::VectorXd pack_variables(const StreamSurfaceMesh& mesh) {
  Eigen::VectorXd x(3 * mesh.valid_count());
  Eigen::Index k = 0;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (mesh.valid[v]) {
      x.segment<3>(k) = mesh.vertices[v];
      k += 3;
    }
  }
  return x;
}

void unpack_variables(StreamSurfaceMesh& mesh, const Eigen::VectorXd& x) {
  Eigen::Index k = 0;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (mesh.valid[v]) {
      mesh.vertices[v] = x.segment<3>(k);
      k += 3;
    }
  }
}

ResidualSystem residual_system(const StreamSurfaceMesh& mesh, const OptimizerConfig& config) {
  ResidualSystem sys;
  std::vector<long> column(mesh.vertices.size(), -1);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (mesh.valid[v]) {
      column[v] = static_cast<long>(3 * sys.variables.size());
      sys.variables.push_back(v);
    }
  }
  const auto& q = mesh.vertices;
  const auto& q0 = mesh.original.empty() ? mesh.vertices : mesh.original;
  const double s1 = std::sqrt(config.mu1), s2 = std::sqrt(config.mu2);

  std::vector<double> r;
  std::vector<Eigen::Triplet<double>> trip;
  auto add_block = [&](long row, std::size_t v, const Vec3d& g) {
    for (int c = 0; c < 3; ++c) {
      if (g[c] != 0.0) trip.emplace_back(row, column[v] + c, g[c]);
    }
  };
  auto add_diag = [&](long row, std::size_t v, double w) {
    for (int c = 0; c < 3; ++c) trip.emplace_back(row + c, column[v] + c, w);
  };

  visit_terms(
      mesh,
      [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
        // r = <q_b - q_a, q_c - q_b + q_a - q_d>
        const Vec3d s = q[b] - q[a];
        const Vec3d e = q[c] - q[b] + q[a] - q[d];
        const long row = static_cast<long>(r.size());
        r.push_back(s.dot(e));
        add_block(row, a, s - e);
        add_block(row, b, e - s);
        add_block(row, c, s);
        add_block(row, d, -s);
      },
      [&](std::size_t a, std::size_t b, std::size_t c) {
        const long row = static_cast<long>(r.size());
        const Vec3d f = s1 * (q[c] - 2.0 * q[b] + q[a]);
        r.insert(r.end(), {f.x(), f.y(), f.z()});
        add_diag(row, a, s1);
        add_diag(row, b, -2.0 * s1);
        add_diag(row, c, s1);
      },
      [&](std::size_t k) {
        const long row = static_cast<long>(r.size());
        const Vec3d f = s2 * (q[k] - q0[k]);
        r.insert(r.end(), {f.x(), f.y(), f.z()});
        add_diag(row, k, s2);
      });

  sys.r = Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  sys.J.resize(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(3 * sys.variables.size()));
  sys.J.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

namespace {

constexpr std::size_t kDirectSolverLimit = 10000;  // vertices

// Solve (J^T J + lambda I) dx = -J^T r.
std::optional<Eigen::VectorXd> damped_step(const Eigen::SparseMatrix<double>& JtJ, const Eigen::VectorXd& g,
                                           double lambda, std::size_t vertex_count) {
  Eigen::SparseMatrix<double> A = JtJ;
  if (lambda > 0.0) {
    for (Eigen::Index k = 0; k < A.rows(); ++k) A.coeffRef(k, k) += lambda;
  }
  Eigen::VectorXd dx;
  if (vertex_count <= kDirectSolverLimit) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) return std::nullopt;
    dx = solver.solve(-g);
    if (solver.info() != Eigen::Success) return std::nullopt;
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> solver(A);
    solver.setTolerance(1e-10);
    solver.setMaxIterations(2000);
    dx = solver.solve(-g);
  }
  if (!dx.allFinite()) return std::nullopt;
  return dx;
}

}  // namespace

GaussNewtonResult gauss_newton(const StreamSurfaceMesh& input, const OptimizerConfig& config) {
  validate(config);
  if (input.m < 2 || input.n < 2) throw Error(ErrorCode::InvalidArgument, "mesh needs at least 2x2 vertices");
  GaussNewtonResult out;
  out.mesh = input;
  if (out.mesh.original.empty()) out.mesh.original = out.mesh.vertices;
  ObjectiveTerms cur = objective(out.mesh, config);
  out.history.push_back(cur);

  constexpr double kLambdaMin = 1e-9, kLambdaMax = 1e6;
  double lambda = 0.0;
  for (int it = 0; it < config.inner_max_iters && cur.F > 0.0; ++it) {
    const ResidualSystem sys = residual_system(out.mesh, config);
    const Eigen::SparseMatrix<double> Jt = sys.J.transpose();
    const Eigen::SparseMatrix<double> JtJ = Jt * sys.J;
    const Eigen::VectorXd g = Jt * sys.r;
    if (g.lpNorm<Eigen::Infinity>() == 0.0) break;
    const Eigen::VectorXd x = pack_variables(out.mesh);

    bool accepted = false;
    bool solved_any = false;
    ObjectiveTerms next;
    StreamSurfaceMesh trial = out.mesh;
    while (true) {
      if (auto dx = damped_step(JtJ, g, lambda, sys.variables.size())) {
        solved_any = true;
        unpack_variables(trial, x + *dx);
        next = objective(trial, config);
        if (next.F <= cur.F) {
          accepted = true;
          break;
        }
      }
      if (lambda >= kLambdaMax) break;
      lambda = lambda == 0.0 ? kLambdaMin : std::min(kLambdaMax, lambda * 10.0);
    }
    if (!accepted) {
      if (!solved_any) throw Error(ErrorCode::SingularNormalEquations, "normal equations singular at maximum damping");
      break;  // no descent available: converged to round-off
    }
    out.mesh = std::move(trial);
    const double decrease = cur.F - next.F;
    cur = next;
    out.history.push_back(cur);
    ++out.iterations;
    lambda = lambda > kLambdaMin ? lambda / 10.0 : 0.0;
    if (decrease <= config.inner_tolerance * out.history[out.history.size() - 2].F) break;
  }
  return out;
}

std::vector<Vec3d> resample_polyline(const std::vector<Vec3d>& pts, double h) {
  if (pts.size() < 2 || !(h > 0.0)) return pts;
  std::vector<double> s(pts.size(), 0.0);
  for (std::size_t k = 1; k < pts.size(); ++k) s[k] = s[k - 1] + (pts[k] - pts[k - 1]).norm();
  const double L = s.back();
  const auto segments = static_cast<long>(std::floor(L / h + 1e-9));
  if (segments < 1) return {pts.front(), pts.back()};
  const double offset = 0.5 * std::max(0.0, L - segments * h);
  std::vector<Vec3d> out;
  out.reserve(segments + 1);
  std::size_t seg = 0;
  for (long k = 0; k <= segments; ++k) {
    const double target = std::min(L, offset + k * h);
    while (seg + 2 < pts.size() && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double a = len > 0.0 ? std::clamp((target - s[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back((1.0 - a) * pts[seg] + a * pts[seg + 1]);
  }
  return out;
}

SeedCurve update_seed(const BackIntegration& back, const SeedCurve& previous) {
  if (back.curves.empty()) throw Error(ErrorCode::InsufficientValidPoints, "no back-integrated curves");
  const std::size_t m = back.curves.front().size();
  std::vector<Vec3d> mean(m, Vec3d::Zero());
  for (std::size_t i = 0; i < m; ++i) {
    int count = 0;
    for (std::size_t j = 0; j < back.curves.size(); ++j) {
      if (back.valid[j][i]) {
        mean[i] += back.curves[j][i];
        ++count;
      }
    }
    if (count < 2) {
      throw Error(ErrorCode::InsufficientValidPoints, "row " + std::to_string(i) + " has fewer than two valid points");
    }
    mean[i] /= count;
  }
  SeedCurve out;
  out.family = previous.family;
  out.face = previous.face;
  out.h = previous.h;
  out.points = previous.h > 0.0 ? resample_polyline(mean, previous.h) : mean;
  out.tangents.resize(out.points.size());
  const std::size_t n = out.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3d d = out.points[std::min(i + 1, n - 1)] - out.points[i > 0 ? i - 1 : 0];
    out.tangents[i] = d.norm() > 0.0 ? Vec3d(d.normalized()) : Vec3d::Zero();
  }
  update_arclength(out);
  out.seed = out.points[n / 2];
  out.initial_direction = out.tangents[n / 2];
  return out;
}

OptimizationResult optimise_stream_surface(const VectorField& field, const SeedCurve& seed,
                                           const OptimizerConfig& config) {
  validate(config);
  OptimizationResult result;
  SurfaceOptions surf = config.surface;
  if (!(surf.dt > 0.0)) surf.dt = default_time_step(field);

  SeedCurve current = seed;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < config.max_outer_iters; ++it) {
    StreamSurfaceMesh mesh;
    double E_S = 0.0;
    try {
      mesh = integrate_surface(field, current, surf);
      E_S = e_surface(field, mesh);
    } catch (const Error&) {
      if (it == 0) throw;
      break;  // the averaged seed no longer yields a surface
    }
    OptimizationRecord rec;
    rec.outer_iter = it;
    rec.E_S = E_S;
    result.E_S_history.push_back(E_S);
    const bool improved = it == 0 || E_S < best;
    if (improved) {
      best = E_S;
      result.best_index = it;
      result.mesh = mesh;
      result.seed = current;
    }
    const bool last = !improved || E_S == 0.0 || it + 1 == config.max_outer_iters;
    if (last) {
      rec.terms = objective(mesh, config);
      result.log.push_back(rec);
      break;
    }
    const GaussNewtonResult gn = gauss_newton(mesh, config);
    rec.terms = gn.history.back();
    result.log.push_back(rec);
    try {
      current = update_seed(back_integrate(field, gn.mesh), current);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientValidPoints) throw;
      break;
    }
    if (current.size() < 2) break;
  }
  return result;
}

namespace {

std::string g17(double x) {
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  if (std::isnan(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_log_jsonl(const std::vector<OptimizationRecord>& log, std::ostream& out) {
  for (const OptimizationRecord& r : log) {
    out << "{\"outer_iter\":" << r.outer_iter << ",\"F\":" << g17(r.terms.F) << ",\"F_strain\":" << g17(r.terms.strain)
        << ",\"F_fair\":" << g17(r.terms.fair) << ",\"F_prox\":" << g17(r.terms.prox) << ",\"E_S\":" << g17(r.E_S)
        << "}\n";
  }
}

}  // namespace strainsurf
