#include "strainsurf/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace strainsurf {

namespace {

Vec3d stages(const VectorField& field, const Vec3d& p, double h) {
  const Vec3d k1 = field.eval(p);
  const Vec3d k2 = field.eval(p + 0.5 * h * k1);
  const Vec3d k3 = field.eval(p + 0.5 * h * k2);
  const Vec3d k4 = field.eval(p + h * k3);
  return p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::optional<Vec3d> try_rk4_step(const VectorField& field, const Vec3d& p, double dt, TimeDirection dir) {
  const double h = dir == TimeDirection::Forward ? dt : -dt;
  try {
    const Vec3d q = stages(field, p, h);
    if (!field.domain().contains(q)) return std::nullopt;
    return q;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PointOutsideDomain) return std::nullopt;
    throw;
  }
}

Vec3d rk4_step(const VectorField& field, const Vec3d& p, double dt, TimeDirection dir) {
  if (auto q = try_rk4_step(field, p, dt, dir)) return *q;
  // Locate the crossing along the Euler chord for reporting.
  const double h = dir == TimeDirection::Forward ? dt : -dt;
  double frac = 0.0;
  if (field.domain().contains(p)) frac = field.domain().exit_fraction(p, p + h * field.eval(p));
  throw LeftDomainError(p, frac);
}

double default_time_step(const VectorField& field) {
  const BoxDomain& d = field.domain();
  double vmax = 0.0;
  constexpr int n = 11;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3d f(i / double(n - 1), j / double(n - 1), k / double(n - 1));
        vmax = std::max(vmax, field.eval(d.lo() + f.cwiseProduct(d.extent())).norm());
      }
  return vmax > 0.0 ? 0.01 * d.diameter() / vmax : 0.01 * d.diameter();
}

StreamSurfaceMesh integrate_surface(const VectorField& field, const std::vector<Vec3d>& seed,
                                    const SurfaceOptions& options) {
  if (seed.size() < 2) throw Error(ErrorCode::InvalidArgument, "seed curve needs at least two points");
  if (options.max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be at least 1");
  const double dt = options.dt > 0.0 ? options.dt : default_time_step(field);
  const int m = static_cast<int>(seed.size());
  const int N = options.max_steps;

  // Trajectories per row, forward and backward.
  std::vector<std::vector<Vec3d>> fwd(m), bwd(m);
  int nf = 0, nb = 0;
  for (int i = 0; i < m; ++i) {
    if (!field.domain().contains(seed[i])) throw Error(ErrorCode::PointOutsideDomain, "seed point outside domain");
    Vec3d p = seed[i];
    for (int s = 0; s < N; ++s) {
      auto q = try_rk4_step(field, p, dt, TimeDirection::Forward);
      if (!q) break;
      fwd[i].push_back(p = *q);
    }
    nf = std::max(nf, static_cast<int>(fwd[i].size()));
    if (options.backward) {
      p = seed[i];
      for (int s = 0; s < N; ++s) {
        auto q = try_rk4_step(field, p, dt, TimeDirection::Backward);
        if (!q) break;
        bwd[i].push_back(p = *q);
      }
      nb = std::max(nb, static_cast<int>(bwd[i].size()));
    }
  }

  StreamSurfaceMesh mesh;
  mesh.m = m;
  mesh.n = nb + 1 + nf;
  mesh.dt = dt;
  mesh.seed_timeline = nb;
  if (mesh.n < 2) throw Error(ErrorCode::EmptySurface, "every trajectory left the domain in its first step");
  mesh.times.resize(mesh.n);
  for (int j = 0; j < mesh.n; ++j) mesh.times[j] = (j - nb) * dt;
  mesh.vertices.assign(static_cast<std::size_t>(m) * mesh.n, Vec3d::Zero());
  mesh.valid.assign(mesh.vertices.size(), 0);
  for (int i = 0; i < m; ++i) {
    mesh.at(i, nb) = seed[i];
    mesh.valid[mesh.index(i, nb)] = 1;
    for (std::size_t s = 0; s < fwd[i].size(); ++s) {
      mesh.at(i, nb + 1 + static_cast<int>(s)) = fwd[i][s];
      mesh.valid[mesh.index(i, nb + 1 + static_cast<int>(s))] = 1;
    }
    for (std::size_t s = 0; s < bwd[i].size(); ++s) {
      mesh.at(i, nb - 1 - static_cast<int>(s)) = bwd[i][s];
      mesh.valid[mesh.index(i, nb - 1 - static_cast<int>(s))] = 1;
    }
    // Invalid slots carry the last valid position so geometry stays finite.
    for (int j = nb + 1 + static_cast<int>(fwd[i].size()); j < mesh.n; ++j) mesh.at(i, j) = mesh.at(i, j - 1);
    for (int j = nb - 1 - static_cast<int>(bwd[i].size()); j >= 0; --j) mesh.at(i, j) = mesh.at(i, j + 1);
  }
  mesh.original = mesh.vertices;
  return mesh;
}

BackIntegration back_integrate(const VectorField& field, const StreamSurfaceMesh& mesh) {
  BackIntegration out;
  out.curves.assign(mesh.n, std::vector<Vec3d>(mesh.m, Vec3d::Zero()));
  out.valid.assign(mesh.n, std::vector<std::uint8_t>(mesh.m, 0));
  for (int j = 0; j < mesh.n; ++j) {
    const int steps = j - mesh.seed_timeline;
    const TimeDirection dir = steps > 0 ? TimeDirection::Backward : TimeDirection::Forward;
    for (int i = 0; i < mesh.m; ++i) {
      if (!mesh.is_valid(i, j)) continue;
      Vec3d p = mesh.at(i, j);
      if (!field.domain().contains(p)) continue;
      bool ok = true;
      for (int s = 0; s < std::abs(steps) && ok; ++s) {
        auto q = try_rk4_step(field, p, mesh.dt, dir);
        if (q) p = *q;
        else ok = false;
      }
      if (!ok) continue;
      out.curves[j][i] = p;
      out.valid[j][i] = 1;
    }
  }
  return out;
}

void write_obj(const StreamSurfaceMesh& mesh, std::ostream& out) {
  std::vector<long> id(mesh.vertices.size(), 0);
  long next = 1;
  for (int i = 0; i < mesh.m; ++i) {
    for (int j = 0; j < mesh.n; ++j) {
      if (!mesh.is_valid(i, j)) continue;
      const Vec3d& q = mesh.at(i, j);
      out << "v " << format_g17(q.x()) << ' ' << format_g17(q.y()) << ' ' << format_g17(q.z()) << '\n';
      id[mesh.index(i, j)] = next++;
    }
  }
  for (int i = 0; i + 1 < mesh.m; ++i) {
    for (int j = 0; j + 1 < mesh.n; ++j) {
      const long a = id[mesh.index(i, j)], b = id[mesh.index(i + 1, j)];
      const long c = id[mesh.index(i + 1, j + 1)], d = id[mesh.index(i, j + 1)];
      if (!a || !b || !c || !d) continue;
      out << "f " << a << ' ' << b << ' ' << c << '\n';
      out << "f " << a << ' ' << c << ' ' << d << '\n';
    }
  }
}

void write_vertex_scalars(const StreamSurfaceMesh& mesh, const std::vector<double>& values, std::ostream& out) {
  out << "vertex,i,j,t,e1\n";
  long next = 1;
  for (int i = 0; i < mesh.m; ++i) {
    for (int j = 0; j < mesh.n; ++j) {
      if (!mesh.is_valid(i, j)) continue;
      out << next++ << ',' << i << ',' << j << ',' << format_g17(mesh.times[j]) << ','
          << format_g17(values[mesh.index(i, j)]) << '\n';
    }
  }
}

}  // namespace strainsurf
