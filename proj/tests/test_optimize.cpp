#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "strainsurf/energies.hpp"
#include "strainsurf/errors.hpp"
#include "strainsurf/optimize.hpp"
#include "strainsurf/pipeline.hpp"

using namespace strainsurf;

namespace {

const BoxDomain kCube(Vec3d::Constant(-1.0), Vec3d::Constant(1.0));

StreamSurfaceMesh make_mesh(int m, int n, const std::vector<Vec3d>& vertices) {
  StreamSurfaceMesh mesh;
  mesh.m = m;
  mesh.n = n;
  mesh.dt = 0.1;
  for (int j = 0; j < n; ++j) mesh.times.push_back(0.1 * j);
  mesh.vertices = vertices;
  mesh.valid.assign(vertices.size(), 1);
  mesh.original = vertices;
  return mesh;
}

StreamSurfaceMesh single_quad() {
  // i-major: q11 q12 q21 q22
  return make_mesh(2, 2, {Vec3d(0, 0, 0), Vec3d(0, 1, 0), Vec3d(1, 0, 0), Vec3d(2, 1, 0)});
}

StreamSurfaceMesh random_mesh(std::mt19937_64& rng, int m, int n, bool with_invalid) {
  std::normal_distribution<double> g;
  std::vector<Vec3d> v;
  for (int k = 0; k < m * n; ++k) v.emplace_back(g(rng), g(rng), g(rng));
  StreamSurfaceMesh mesh = make_mesh(m, n, v);
  for (Vec3d& q : mesh.original) q += 0.1 * Vec3d(g(rng), g(rng), g(rng));
  if (with_invalid) mesh.valid[mesh.index(m - 1, n - 1)] = 0;
  return mesh;
}

SeedCurve straight_seed(const Vec3d& a, const Vec3d& b, int samples) {
  SeedCurve c;
  for (int k = 0; k < samples; ++k) {
    c.points.push_back(a + (b - a) * (double(k) / (samples - 1)));
    c.tangents.push_back((b - a).normalized());
  }
  c.h = (b - a).norm() / (samples - 1);
  update_arclength(c);
  return c;
}

BackIntegration copies(const std::vector<Vec3d>& base, const std::vector<Vec3d>& offsets) {
  BackIntegration b;
  for (const Vec3d& o : offsets) {
    std::vector<Vec3d> c;
    for (const Vec3d& p : base) c.push_back(p + o);
    b.curves.push_back(c);
    b.valid.emplace_back(base.size(), 1);
  }
  return b;
}

}  // namespace

TEST_CASE("objective on a single quad") {
  const ObjectiveTerms t = objective(single_quad(), {});
  CHECK(t.strain == 1.0);
  CHECK(t.fair == 0.0);
  CHECK(t.prox == 0.0);
  CHECK(t.F == 1.0);
  const ResidualSystem sys = residual_system(single_quad(), {});
  CHECK(sys.r.squaredNorm() == doctest::Approx(t.F).epsilon(1e-15));
}

TEST_CASE("translated extrusion of a straight seed has zero objective") {
  const VectorField f = catalogue::constant(Vec3d(0.3, 0.2, 0.1), kCube);
  SurfaceOptions o;
  o.dt = 0.1;
  o.max_steps = 10;
  const StreamSurfaceMesh mesh = integrate_surface(f, straight_seed(Vec3d(-0.8, -0.5, -0.5), Vec3d(-0.8, 0.5, 0.0), 11), o);
  const ObjectiveTerms t = objective(mesh, {});
  CHECK(t.strain <= 1e-30);
  CHECK(t.fair <= 1e-28);
  CHECK(t.prox == 0.0);
  const GaussNewtonResult gn = gauss_newton(mesh, {});
  for (std::size_t k = 0; k < mesh.vertices.size(); ++k) CHECK((gn.mesh.vertices[k] - mesh.vertices[k]).norm() <= 1e-12);
}

TEST_CASE("objective reproduces the residual norm on random meshes") {
  std::mt19937_64 rng(4);
  OptimizerConfig c;
  for (int k = 0; k < 20; ++k) {
    const StreamSurfaceMesh mesh = random_mesh(rng, 4, 5, k % 2 == 1);
    const ObjectiveTerms t = objective(mesh, c);
    const ResidualSystem sys = residual_system(mesh, c);
    CHECK(sys.r.squaredNorm() == doctest::Approx(t.F).epsilon(1e-12));
    CHECK(t.F == doctest::Approx(t.strain + c.mu1 * t.fair + c.mu2 * t.prox).epsilon(1e-15));
  }
}

TEST_CASE("residual Jacobian matches central differences") {
  std::mt19937_64 rng(12);
  OptimizerConfig c;
  for (int k = 0; k < 20; ++k) {
    const StreamSurfaceMesh mesh = random_mesh(rng, 4, 4, k % 3 == 0);
    const ResidualSystem sys = residual_system(mesh, c);
    const Eigen::MatrixXd J = Eigen::MatrixXd(sys.J);
    const Eigen::VectorXd x = pack_variables(mesh);
    Eigen::MatrixXd fd(J.rows(), J.cols());
    const double h = 1e-6;
    for (Eigen::Index col = 0; col < x.size(); ++col) {
      StreamSurfaceMesh plus = mesh, minus = mesh;
      Eigen::VectorXd xp = x, xm = x;
      xp[col] += h;
      xm[col] -= h;
      unpack_variables(plus, xp);
      unpack_variables(minus, xm);
      fd.col(col) = (residual_system(plus, c).r - residual_system(minus, c).r) / (2 * h);
    }
    CHECK((J - fd).norm() <= 1e-5 * J.norm());
  }
}

TEST_CASE("Jacobian sparsity follows the stencils") {
  std::mt19937_64 rng(2);
  const StreamSurfaceMesh mesh = random_mesh(rng, 2, 2, false);
  const ResidualSystem sys = residual_system(mesh, {});
  // Row 0 is the strain residual of the only quad.
  int touched = 0;
  for (int v = 0; v < 4; ++v) {
    bool any = false;
    for (int c = 0; c < 3; ++c) any = any || sys.J.coeff(0, 3 * v + c) != 0.0;
    touched += any;
  }
  CHECK(touched == 4);
  CHECK(sys.J.rows() == 1 + 3 * 4);
}

TEST_CASE("Gauss-Newton never increases the objective") {
  std::mt19937_64 rng(31);
  for (int run = 0; run < 50; ++run) {
    std::uniform_int_distribution<int> size(2, 7);
    const StreamSurfaceMesh mesh = random_mesh(rng, size(rng), size(rng), run % 4 == 0);
    OptimizerConfig c;
    c.mu1 = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    c.mu2 = std::uniform_real_distribution<double>(0.0, 0.1)(rng);
    const GaussNewtonResult gn = gauss_newton(mesh, c);
    for (std::size_t k = 1; k < gn.history.size(); ++k) CHECK(gn.history[k].F <= gn.history[k - 1].F);
    CHECK(objective(gn.mesh, c).F == gn.history.back().F);
  }
}

TEST_CASE("single quad objective drops on the first step") {
  OptimizerConfig c;
  c.mu2 = 0.02;
  const GaussNewtonResult gn = gauss_newton(single_quad(), c);
  REQUIRE(gn.history.size() >= 2);
  CHECK(gn.history[1].F < gn.history[0].F);
}

TEST_CASE("noisy extrusion loses most of its strain") {
  const VectorField f = catalogue::constant(Vec3d(0.3, 0.2, 0.1), kCube);
  SurfaceOptions o;
  o.dt = 0.1;
  o.max_steps = 10;
  StreamSurfaceMesh mesh = integrate_surface(f, straight_seed(Vec3d(-0.8, -0.5, -0.5), Vec3d(-0.8, 0.5, 0.0), 11), o);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 0.01 * kCube.diameter());
  for (Vec3d& q : mesh.vertices) q += Vec3d(g(rng), g(rng), g(rng));
  mesh.original = mesh.vertices;
  const ObjectiveTerms before = objective(mesh, {});
  const GaussNewtonResult gn = gauss_newton(mesh, {});
  const ObjectiveTerms after = gn.history.back();
  CHECK(after.F <= before.F);
  CHECK(after.strain <= 0.5 * before.strain);
}

TEST_CASE("seed update averages the back-integrated curves") {
  const SeedCurve seed = straight_seed(Vec3d(0, 0, 0), Vec3d(0.2, 0, 0), 3);
  SUBCASE("identical curves leave the seed unchanged") {
    const SeedCurve s = update_seed(copies(seed.points, {Vec3d::Zero(), Vec3d::Zero(), Vec3d::Zero()}), seed);
    REQUIRE(s.size() == seed.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK((s.points[i] - seed.points[i]).norm() <= 1e-15);
  }
  SUBCASE("symmetric displacements give the midpoint") {
    const Vec3d d(0.01, -0.02, 0.03);
    const SeedCurve s = update_seed(copies(seed.points, {d, -d}), seed);
    REQUIRE(s.size() == seed.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK((s.points[i] - seed.points[i]).norm() <= 1e-15);
  }
  SUBCASE("three translated copies give their arithmetic mean") {
    const SeedCurve s = update_seed(copies(seed.points, {Vec3d(0, 0.3, 0), Vec3d(0, 0, 0.6), Vec3d(0.3, 0, 0)}), seed);
    REQUIRE(s.size() == 3);
    CHECK((s.points[0] - Vec3d(0.1, 0.1, 0.2)).norm() <= 1e-15);
    CHECK((s.points[1] - Vec3d(0.2, 0.1, 0.2)).norm() <= 1e-15);
    CHECK((s.points[2] - Vec3d(0.3, 0.1, 0.2)).norm() <= 1e-15);
    CHECK(s.h == seed.h);
  }
  SUBCASE("a row with one valid point is rejected") {
    BackIntegration b = copies(seed.points, {Vec3d::Zero(), Vec3d::Zero()});
    b.valid[1][2] = 0;
    try {
      update_seed(b, seed);
      FAIL("expected InsufficientValidPoints");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientValidPoints);
    }
  }
}

TEST_CASE("resampling keeps arc-length spacing") {
  std::vector<Vec3d> pts;
  for (int k = 0; k <= 40; ++k) {
    const double t = 0.05 * k;
    pts.emplace_back(std::cos(t), std::sin(t), 0.1 * t);
  }
  const auto r = resample_polyline(pts, 0.1);
  for (std::size_t k = 1; k < r.size(); ++k) CHECK((r[k] - r[k - 1]).norm() == doctest::Approx(0.1).epsilon(1e-2));
}

TEST_CASE("optimisation on a strain-free field stops at once") {
  const VectorField f = catalogue::rotation(Vec3d::UnitZ(), kCube);
  const SeedCurve seed = straight_seed(Vec3d(0.1, -0.5, 0.2), Vec3d(0.1, 0.5, -0.2), 21);
  OptimizerConfig c;
  c.surface.max_steps = 50;
  const OptimizationResult r = optimise_stream_surface(f, seed, c);
  CHECK(r.E_S_history.size() == 1);
  CHECK(r.E_S_history.front() == 0.0);
  for (std::size_t i = 0; i < seed.size(); ++i) CHECK(r.seed.points[i] == seed.points[i]);
  const StreamSurfaceMesh exact = integrate_surface(f, seed, c.surface);
  REQUIRE(r.mesh.vertices.size() == exact.vertices.size());
  for (std::size_t k = 0; k < exact.vertices.size(); ++k) {
    CHECK((r.mesh.vertices[k] - exact.vertices[k]).norm() <= 1e-6 * kCube.diameter());
  }
}

TEST_CASE("noisy seed in a constant field reaches zero surface strain") {
  const VectorField f = catalogue::constant(Vec3d(0.2, 0.1, 0.05), kCube);
  SeedCurve seed = straight_seed(Vec3d(-0.5, -0.5, -0.5), Vec3d(-0.5, 0.5, 0.5), 31);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.01);
  for (Vec3d& p : seed.points) p += Vec3d(g(rng), g(rng), g(rng));
  update_arclength(seed);
  OptimizerConfig c;
  c.surface.max_steps = 40;
  const OptimizationResult r = optimise_stream_surface(f, seed, c);
  CHECK(r.E_S_history[r.best_index] <= 1e-10);
}

TEST_CASE("fixed point: Gauss-Newton keeps an exact strain-free surface") {
  const VectorField f = catalogue::constant(Vec3d(0.1, 0.3, 0.0), kCube);
  SurfaceOptions o;
  o.dt = 0.05;
  o.max_steps = 20;
  o.backward = true;
  const SeedCurve seed = straight_seed(Vec3d(-0.2, -0.3, -0.6), Vec3d(0.3, -0.1, 0.6), 25);
  const StreamSurfaceMesh mesh = integrate_surface(f, seed, o);
  const GaussNewtonResult gn = gauss_newton(mesh, {});
  for (std::size_t k = 0; k < mesh.vertices.size(); ++k) {
    CHECK((gn.mesh.vertices[k] - mesh.vertices[k]).norm() <= 1e-6 * kCube.diameter());
  }
  OptimizerConfig c;
  c.surface = o;
  const SeedCurve next = update_seed(back_integrate(f, gn.mesh), seed);
  for (std::size_t i = 0; i < std::min(next.size(), seed.size()); ++i) {
    CHECK((next.points[i] - seed.points[i]).norm() <= 1e-6 * kCube.diameter());
  }
}

TEST_CASE("outer loop returns its best iterate and decreases strictly before it") {
  const VectorField f = catalogue::by_name("abc");
  const auto pts = sample_points(f.domain(), SamplingMode::Uniform, 27, 1);
  const auto curves = generate_candidates(f, pts, CurveFamily::FirstOrderInterior, {}, 4, 0);
  REQUIRE_FALSE(curves.empty());
  OptimizerConfig c;
  c.surface.backward = true;
  bool strict_twice = false;
  for (std::size_t k = 0; k < curves.size() && !strict_twice; k += 9) {
    const OptimizationResult r = optimise_stream_surface(f, curves[k], c);
    const auto& h = r.E_S_history;
    for (double e : h) CHECK(h[r.best_index] <= e);
    for (int i = 0; i < r.best_index; ++i) CHECK(h[i + 1] < h[i]);
    CHECK(h[r.best_index] <= h.front());
    strict_twice = r.best_index >= 2;
    CHECK(r.log.size() == h.size());
  }
  CHECK(strict_twice);
}

TEST_CASE("optimisation log is one JSON object per line") {
  std::vector<OptimizationRecord> log(2);
  log[0].outer_iter = 0;
  log[0].terms = {1.5, 1.0, 2.0, 3.0};
  log[0].E_S = 0.1;
  log[1].outer_iter = 1;
  log[1].E_S = 1.0 / 3.0;
  std::ostringstream out;
  write_log_jsonl(log, out);
  std::istringstream in(out.str());
  int lines = 0;
  for (std::string l; std::getline(in, l); ++lines) {
    const auto j = nlohmann::json::parse(l);
    for (const char* key : {"outer_iter", "F", "F_strain", "F_fair", "F_prox", "E_S"}) CHECK(j.contains(key));
    CHECK(j["outer_iter"] == lines);
    CHECK(j["E_S"].get<double>() == log[lines].E_S);
  }
  CHECK(lines == 2);
}
