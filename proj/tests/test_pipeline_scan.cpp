#include "doctest.h"
#include "strainsurf/pipeline.hpp"

using namespace strainsurf;

// Dense brute-force oracle: every cell centre of a 50^3 lattice seeds
// second-order curves whose surfaces are all ranked. The adaptive search
// must end up in the sub-box around the brute-force minimum.
TEST_CASE("refinement concentrates on the brute-force minimum") {
  const VectorField f = catalogue::fig3();
  const PipelineConfig config;
  CurveOptions curve_opts;
  curve_opts.h = config.h_frac * f.domain().diameter();
  SurfaceOptions surf;
  surf.dt = default_time_step(f);
  surf.max_steps = config.max_steps;

  const auto pts = sample_points(f.domain(), SamplingMode::Uniform, 50 * 50 * 50, 1);
  REQUIRE(pts.size() == 125000);
  std::vector<Candidate> all;
  int id = 0;
  for (auto& c : generate_candidates(f, pts, CurveFamily::SecondOrder, curve_opts, 4, 0)) all.push_back({id++, 0, c});
  const auto dense = rank_candidates(f, all, surf, config.weights, 0);
  REQUIRE_FALSE(dense.empty());
  const Vec3d centre = dense.front().curve.seed;
  const Vec3d half = 0.125 * f.domain().extent();
  const BoxDomain target = f.domain().clipped(centre - half, centre + half);

  const Selection s = refine_and_select(f, config);
  REQUIRE(s.family == CurveFamily::SecondOrder);
  REQUIRE_FALSE(s.survivors.empty());
  int inside = 0;
  for (const RankedCandidate& c : s.survivors) inside += target.contains(c.curve.seed);
  CHECK(target.contains(s.survivors.front().curve.seed));
  CHECK(2 * inside >= static_cast<int>(s.survivors.size()));
  // The adaptive search spends a fraction of the dense budget and stays close to its optimum.
  CHECK(*s.survivors.front().energies.E_S <= 3.0 * *dense.front().energies.E_S);
}
