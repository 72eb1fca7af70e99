#pragma once

// Surface optimisation cycle: Gauss-Newton on the mesh, back-integration of
// the timelines, averaging into a new seed, and re-integration.

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "strainsurf/curves.hpp"
#include "strainsurf/field.hpp"
#include "strainsurf/mesh.hpp"
#include "strainsurf/surface.hpp"

namespace strainsurf {

struct OptimizerConfig {
  double mu1 = 0.1;   // fairness weight
  double mu2 = 0.02;  // proximity weight
  int max_outer_iters = 10;
  double inner_tolerance = 1e-6;  // relative decrease of F
  int inner_max_iters = 20;
  SurfaceOptions surface;
};

void validate(const OptimizerConfig& config);

struct ObjectiveTerms {
  double F = 0.0;
  double strain = 0.0;
  double fair = 0.0;
  double prox = 0.0;
};

ObjectiveTerms objective(const StreamSurfaceMesh& mesh, const OptimizerConfig& config);

/// Stacked residuals r with F = |r|^2 and their Jacobian with respect to the
/// valid vertices. Variable block k is mesh vertex `variables[k]`.
struct ResidualSystem {
  Eigen::VectorXd r;
  Eigen::SparseMatrix<double> J;
  std::vector<std::size_t> variables;
};

ResidualSystem residual_system(const StreamSurfaceMesh& mesh, const OptimizerConfig& config);

/// Valid-vertex coordinates as one vector, and the inverse.
Eigen::VectorXd pack_variables(const StreamSurfaceMesh& mesh);
void unpack_variables(StreamSurfaceMesh& mesh, const Eigen::VectorXd& x);

struct GaussNewtonResult {
  StreamSurfaceMesh mesh;
  std::vector<ObjectiveTerms> history;  // accepted iterates, starting with the input
  int iterations = 0;
};

/// Damped Gauss-Newton. Every accepted step satisfies F_new <= F_old.
GaussNewtonResult gauss_newton(const StreamSurfaceMesh& mesh, const OptimizerConfig& config);

/// Point-wise mean over the valid back-integrated timelines, re-sampled to
/// arc-length spacing h. Throws InsufficientValidPoints when some row has
/// fewer than two valid points.
SeedCurve update_seed(const BackIntegration& back, const SeedCurve& previous);

/// Re-sample a polyline at arc-length spacing h, centred so the unused
/// remainder is split between both ends.
std::vector<Vec3d> resample_polyline(const std::vector<Vec3d>& points, double h);

struct OptimizationRecord {
  int outer_iter = 0;
  ObjectiveTerms terms;
  double E_S = 0.0;
};

struct OptimizationResult {
  StreamSurfaceMesh mesh;  // stream surface of the best seed
  SeedCurve seed;
  std::vector<double> E_S_history;  // E_S of the surface at each outer iteration
  std::vector<OptimizationRecord> log;
  int best_index = 0;
};

OptimizationResult optimise_stream_surface(const VectorField& field, const SeedCurve& seed,
                                           const OptimizerConfig& config = {});

/// One JSON object per line: outer_iter, F, F_strain, F_fair, F_prox, E_S.
void write_log_jsonl(const std::vector<OptimizationRecord>& log, std::ostream& out);

}  // namespace strainsurf
