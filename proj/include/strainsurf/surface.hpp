#pragma once

// Stream surface integration with constant-step RK4.

#include <iosfwd>
#include <optional>
#include <vector>

#include "strainsurf/curves.hpp"
#include "strainsurf/errors.hpp"
#include "strainsurf/field.hpp"
#include "strainsurf/mesh.hpp"

namespace strainsurf {

enum class TimeDirection { Forward, Backward };

/// Thrown when a step leaves the domain. `last_inside` is the step's start
/// point and `exit_parameter` the fraction of the step at which the chord
/// crosses the boundary.
class LeftDomainError : public Error {
 public:
  LeftDomainError(const Vec3d& last_inside, double exit_parameter)
      : Error(ErrorCode::LeftDomain, "trajectory left the domain"),
        last_inside_(last_inside),
        exit_parameter_(exit_parameter) {}

  const Vec3d& last_inside() const { return last_inside_; }
  double exit_parameter() const { return exit_parameter_; }

 private:
  Vec3d last_inside_;
  double exit_parameter_;
};

Vec3d rk4_step(const VectorField& field, const Vec3d& p, double dt, TimeDirection dir = TimeDirection::Forward);

/// Non-throwing variant: empty when any stage or the result leaves the domain.
std::optional<Vec3d> try_rk4_step(const VectorField& field, const Vec3d& p, double dt,
                                  TimeDirection dir = TimeDirection::Forward);

/// 0.01 * diam / max |v| over an 11^3 lattice of the domain.
double default_time_step(const VectorField& field);

struct SurfaceOptions {
  double dt = 0.0;  // 0 means default_time_step
  int max_steps = 500;
  bool backward = false;  // also integrate backward in time
};

/// Advect every seed sample; a trajectory stops at its first exit. Columns
/// past the last surviving step are dropped. Throws EmptySurface when fewer
/// than two timelines remain.
StreamSurfaceMesh integrate_surface(const VectorField& field, const std::vector<Vec3d>& seed,
                                    const SurfaceOptions& options = {});
inline StreamSurfaceMesh integrate_surface(const VectorField& field, const SeedCurve& seed,
                                           const SurfaceOptions& options = {}) {
  return integrate_surface(field, seed.points, options);
}

/// Timelines carried back to t = 0. curves[j][i] is vertex (i, j) after
/// integrating for -t_j; valid[j][i] is false when the vertex was invalid or
/// the back trajectory left the domain.
struct BackIntegration {
  std::vector<std::vector<Vec3d>> curves;
  std::vector<std::vector<std::uint8_t>> valid;
};

BackIntegration back_integrate(const VectorField& field, const StreamSurfaceMesh& mesh);

/// Wavefront OBJ of the valid part of the mesh: valid vertices i-major,
/// each fully valid quad as two triangles.
void write_obj(const StreamSurfaceMesh& mesh, std::ostream& out);

/// Per-vertex scalar sidecar in the same vertex order as write_obj.
void write_vertex_scalars(const StreamSurfaceMesh& mesh, const std::vector<double>& values, std::ostream& out);

}  // namespace strainsurf
