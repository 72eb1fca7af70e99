#include <cmath>
#include <set>

#include "doctest.h"
#include "strainsurf/errors.hpp"
#include "strainsurf/pipeline.hpp"

using namespace strainsurf;

namespace {

const BoxDomain kCube(Vec3d::Constant(-1.0), Vec3d::Constant(1.0));

bool is_straight(const SeedCurve& c, double tol) {
  const Vec3d d = (c.points.back() - c.points.front()).normalized();
  for (const Vec3d& p : c.points) {
    const Vec3d r = p - c.points.front();
    if ((r - r.dot(d) * d).norm() > tol) return false;
  }
  return true;
}

bool crosses_plane_x(const SeedCurve& c, double x0) {
  double lo = 1e300, hi = -1e300;
  for (const Vec3d& p : c.points) {
    lo = std::min(lo, p.x() - x0);
    hi = std::max(hi, p.x() - x0);
  }
  return lo < -1e-6 && hi > 1e-6;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.samples = 27;
  c.refine_rounds = 1;
  c.max_steps = 100;
  c.optimizer.max_outer_iters = 3;
  return c;
}

}  // namespace

TEST_CASE("uniform sampling of the unit box gives a 6x6x6 lattice") {
  const auto pts = sample_points(BoxDomain::unit(), SamplingMode::Uniform, 216, 1);
  REQUIRE(pts.size() == 216);
  std::set<std::array<double, 3>> distinct;
  for (const SamplePoint& s : pts) {
    CHECK(BoxDomain::unit().contains(s.p));
    CHECK(s.face == -1);
    for (int a = 0; a < 3; ++a) {
      const double k = s.p[a] * 6 - 0.5;
      CHECK(std::abs(k - std::round(k)) <= 1e-12);
    }
    distinct.insert({s.p.x(), s.p.y(), s.p.z()});
  }
  CHECK(distinct.size() == 216);
}

TEST_CASE("random sampling is reproducible and stays in its region") {
  const auto a = sample_points(kCube, SamplingMode::Random, 500, 42);
  const auto b = sample_points(kCube, SamplingMode::Random, 500, 42);
  const auto c = sample_points(kCube, SamplingMode::Random, 500, 43);
  REQUIRE(a.size() == 500);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].p == b[k].p);
    CHECK(kCube.contains(a[k].p));
    differs = differs || a[k].p != c[k].p;
  }
  CHECK(differs);

  const BoxDomain region = kCube.clipped(Vec3d(0.2, -0.4, 0.5), Vec3d(0.45, -0.15, 0.75));
  for (SamplingMode mode : {SamplingMode::Uniform, SamplingMode::Random}) {
    for (const SamplePoint& s : sample_points(kCube, mode, 64, 7, region)) CHECK(region.contains(s.p));
  }
}

TEST_CASE("face sampling lands on the domain faces the region touches") {
  const auto all = sample_points(kCube, SamplingMode::Uniform, 6 * 16, 1, std::nullopt, true);
  CHECK(all.size() == 6 * 16);
  for (const SamplePoint& s : all) {
    REQUIRE(s.face >= 0);
    CHECK(kCube.on_face(kCube.face(s.face), s.p));
  }
  const BoxDomain corner = kCube.clipped(Vec3d(0.6, 0.6, -0.2), Vec3d(1.0, 1.0, 0.2));
  for (SamplingMode mode : {SamplingMode::Uniform, SamplingMode::Random}) {
    const auto pts = sample_points(kCube, mode, 32, 3, corner, true);
    CHECK_FALSE(pts.empty());
    for (const SamplePoint& s : pts) {
      CHECK(corner.contains(s.p));
      const std::string name = kCube.face(s.face).name();
      CHECK((name == "x+" || name == "y+"));
    }
  }
}

TEST_CASE("keep count rounds up and never drops to zero") {
  CHECK(keep_count(41, 0.05) == 3);
  CHECK(keep_count(20, 0.05) == 1);
  CHECK(keep_count(1, 0.05) == 1);
  CHECK(keep_count(100, 0.05) == 5);
  CHECK(keep_count(7, 1.0) == 7);
  CHECK(keep_count(0, 0.05) == 0);
}

TEST_CASE("rotation field candidates are straight and strain-free") {
  const VectorField f = catalogue::rotation(Vec3d::UnitZ(), kCube);
  const auto pts = sample_points(kCube, SamplingMode::Random, 10, 5);
  const auto curves = generate_candidates(f, pts, CurveFamily::FirstOrderInterior, {}, 4, 1);
  CHECK(curves.size() >= 10);
  for (const SeedCurve& c : curves) CHECK(is_straight(c, 1e-13));

  std::vector<Candidate> cs;
  for (std::size_t k = 0; k < curves.size(); ++k) cs.push_back({static_cast<int>(k), 0, curves[k]});
  SurfaceOptions o;
  o.max_steps = 50;
  const auto ranked = rank_candidates(f, cs, o, {0, 0, 0, 0}, 1);
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    CHECK(*ranked[k].energies.E_S == 0.0);
    if (k > 0) {
      const double la = ranked[k - 1].curve.length(), lb = ranked[k].curve.length();
      CHECK(la >= lb);
      if (la == lb) CHECK(ranked[k - 1].id < ranked[k].id);
    }
  }
}

TEST_CASE("definite K form yields no second-order candidates") {
  const VectorField f = catalogue::linear_diag(1, 1, -2, kCube);
  const auto pts = sample_points(kCube, SamplingMode::Uniform, 64, 1);
  CHECK(generate_candidates(f, pts, CurveFamily::SecondOrder, {}, 4, 1).empty());

  PipelineConfig c = small_config();
  c.family = CurveFamily::SecondOrder;
  try {
    refine_and_select(f, c);
    FAIL("expected NoCandidatesFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoCandidatesFound);
    CHECK(std::string(e.what()).find("second_order") != std::string::npos);
  }
  // Without a fixed family the search falls back to boundary curves.
  c.family.reset();
  const Selection s = refine_and_select(f, c);
  CHECK(s.family == CurveFamily::FirstOrderBoundary);
  REQUIRE(s.attempted.size() == 2);
  CHECK(s.attempted[0] == CurveFamily::SecondOrder);
}

TEST_CASE("fig3 boundary candidates on the face y = 0") {
  const VectorField f = catalogue::fig3();
  const int face = 2;
  const auto pts = sample_points(f.domain(), SamplingMode::Uniform, 16, 1, std::nullopt, true, face);
  REQUIRE(pts.size() == 16);
  const auto curves = generate_candidates(f, pts, CurveFamily::FirstOrderBoundary, {}, 4, 1);
  CHECK_FALSE(curves.empty());
  CHECK(curves.size() <= 2 * pts.size());
  for (const SeedCurve& c : curves) {
    CHECK(c.face == face);
    for (const Vec3d& p : c.points) CHECK(p.y() == 0.0);
  }
}

TEST_CASE("surfaces split by the saddle rank behind strain-free ones") {
  const VectorField f = catalogue::by_name("saddle");
  const double x0 = f.domain().center().x();
  const auto pts = sample_points(f.domain(), SamplingMode::Uniform, 27, 1);
  const auto curves = generate_candidates(f, pts, CurveFamily::FirstOrderInterior, {}, 4, 1);
  std::vector<Candidate> cs;
  for (std::size_t k = 0; k < curves.size(); ++k) cs.push_back({static_cast<int>(k), 0, curves[k]});
  const auto ranked = rank_candidates(f, cs, {}, {0, 0, 0, 0}, 1);
  std::size_t last_free = 0, first_split = ranked.size();
  int split = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const double es = *ranked[k].energies.E_S;
    if (es <= 1e-12) last_free = k;
    if (crosses_plane_x(ranked[k].curve, x0) && std::isfinite(es)) {
      ++split;
      first_split = std::min(first_split, k);
      CHECK(es >= 0.1);
    }
  }
  CHECK(split > 0);
  CHECK(first_split > last_free);
  // Curves on the stagnation line sweep no area and rank last.
  CHECK(std::isinf(*ranked.back().energies.E_S));
}

TEST_CASE("refinement never loses the incumbent") {
  for (const char* name : {"fig3", "abc"}) {
    const VectorField f = catalogue::by_name(name);
    PipelineConfig c;
    c.samples = 64;
    c.refine_rounds = 3;
    c.max_steps = 150;
    const Selection s = refine_and_select(f, c);
    REQUIRE(s.rounds.size() == 4);
    for (std::size_t r = 1; r < s.rounds.size(); ++r) CHECK(s.rounds[r].best <= s.rounds[r - 1].best);
    CHECK(s.survivors.size() == keep_count(s.ranked.size(), c.keep_fraction));
    for (std::size_t k = 1; k < s.ranked.size(); ++k) {
      CHECK(*s.ranked[k - 1].energies.E_S <= *s.ranked[k].energies.E_S);
    }
  }
}

TEST_CASE("zero refinement rounds is a single rank-and-keep pass") {
  const VectorField f = catalogue::fig3();
  PipelineConfig c = small_config();
  c.refine_rounds = 0;
  const Selection s = refine_and_select(f, c);
  CHECK(s.rounds.size() == 1);
  CHECK(s.ranked.size() == s.rounds[0].curves);
}

TEST_CASE("weights switch the ranking key to the combined energy") {
  const VectorField f = catalogue::fig3();
  PipelineConfig c = small_config();
  c.family = CurveFamily::FirstOrderInterior;
  c.weights = {0, 1, 0, 0};
  const Selection s = refine_and_select(f, c);
  for (std::size_t k = 1; k < s.ranked.size(); ++k) CHECK(s.ranked[k - 1].energies.E <= s.ranked[k].energies.E);
}

TEST_CASE("optimisation never worsens a survivor") {
  const VectorField f = catalogue::fig3();
  PipelineConfig c;
  c.samples = 64;
  c.refine_rounds = 2;
  c.keep_fraction = 0.1;
  const PipelineResult r = run_pipeline(f, c);
  REQUIRE_FALSE(r.surfaces.empty());
  for (std::size_t k = 0; k < r.surfaces.size(); ++k) {
    const OptimisedSurface& s = r.surfaces[k];
    CHECK(s.E_S_optimised <= s.E_S_initial + 1e-12);
    CHECK(s.rank == static_cast<int>(k));
    if (k > 0) CHECK(r.surfaces[k - 1].E_S_optimised <= s.E_S_optimised);
  }
}

TEST_CASE("constant field surfaces are strain-free before and after optimisation") {
  const VectorField f = catalogue::constant(Vec3d(0.3, 0.2, 0.1), kCube);
  const PipelineResult r = run_pipeline(f, small_config());
  REQUIRE_FALSE(r.surfaces.empty());
  for (const OptimisedSurface& s : r.surfaces) {
    CHECK(s.E_S_initial <= 1e-20);
    CHECK(s.E_S_optimised <= 1e-20);
  }
}

TEST_CASE("rotation field pipeline reports zero E_S everywhere") {
  const VectorField f = catalogue::rotation(Vec3d::UnitZ(), kCube);
  PipelineConfig c = small_config();
  c.refine_rounds = 3;
  const PipelineResult r = run_pipeline(f, c);
  for (const RankedCandidate& rc : r.selection.ranked) CHECK(*rc.energies.E_S == 0.0);
  for (const OptimisedSurface& s : r.surfaces) CHECK(s.E_S_optimised == 0.0);
}

TEST_CASE("pipeline results are deterministic across thread counts") {
  const VectorField f = catalogue::by_name("abc");
  PipelineConfig c = small_config();
  c.mode = SamplingMode::Random;
  c.rng_seed = 99;
  c.threads = 1;
  const PipelineResult a = run_pipeline(f, c);
  c.threads = 4;
  const PipelineResult b = run_pipeline(f, c);
  REQUIRE(a.selection.ranked.size() == b.selection.ranked.size());
  for (std::size_t k = 0; k < a.selection.ranked.size(); ++k) {
    CHECK(a.selection.ranked[k].id == b.selection.ranked[k].id);
    CHECK(*a.selection.ranked[k].energies.E_S == *b.selection.ranked[k].energies.E_S);
  }
  REQUIRE(a.surfaces.size() == b.surfaces.size());
  for (std::size_t k = 0; k < a.surfaces.size(); ++k) {
    CHECK(a.surfaces[k].E_S_optimised == b.surfaces[k].E_S_optimised);
    CHECK(a.surfaces[k].result.mesh.vertices == b.surfaces[k].result.mesh.vertices);
  }
}

TEST_CASE("configuration is validated") {
  PipelineConfig c;
  c.keep_fraction = 0.0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.refine_rounds = -1;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.samples = 0;
  CHECK_THROWS_AS(validate(c), Error);
  CHECK(sampling_mode_from_string(to_string(SamplingMode::Random)) == SamplingMode::Random);
  CHECK_THROWS_AS(sampling_mode_from_string("sobol"), Error);
}
