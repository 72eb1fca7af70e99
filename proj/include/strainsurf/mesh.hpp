#pragma once

#include <cstdint>
#include <vector>

#include "strainsurf/types.hpp"

namespace strainsurf {

/// Rectangular m x n quad mesh q(i, j) = S(s_i, t_j). Index i runs along the
/// seed curve, j along time. Vertices are stored i-major. Trajectories that
/// leave the domain keep their slots but are flagged invalid.
struct StreamSurfaceMesh {
  int m = 0;
  int n = 0;
  double dt = 0.0;
  int seed_timeline = 0;  // j with t_j = 0
  std::vector<double> times;
  std::vector<Vec3d> vertices;
  std::vector<std::uint8_t> valid;
  std::vector<Vec3d> original;  // vertices before any optimisation

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n + j; }
  Vec3d& at(int i, int j) { return vertices[index(i, j)]; }
  const Vec3d& at(int i, int j) const { return vertices[index(i, j)]; }
  bool is_valid(int i, int j) const { return valid[index(i, j)] != 0; }
  std::size_t valid_count() const;

  /// The same surface with both index directions reversed. Each quad keeps
  /// its triangulation diagonal, so area and E_S are unchanged.
  StreamSurfaceMesh reversed() const;
};

/// Sum of quad areas over quads whose four corners are valid, each quad
/// split into two triangles.
double mesh_area(const StreamSurfaceMesh& mesh);

}  // namespace strainsurf
