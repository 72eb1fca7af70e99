#include "strainsurf/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "strainsurf/errors.hpp"
#include "strainsurf/parallel.hpp"
#include "strainsurf/surface.hpp"

namespace strainsurf {

const char* to_string(SamplingMode m) { return m == SamplingMode::Uniform ? "uniform" : "random"; }

SamplingMode sampling_mode_from_string(const std::string& name) {
  if (name == "uniform") return SamplingMode::Uniform;
  if (name == "random") return SamplingMode::Random;
  throw Error(ErrorCode::InvalidArgument, "unknown sampling mode '" + name + "'");
}

void validate(const PipelineConfig& c) {
  if (c.samples < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be at least 1");
  if (c.refine_rounds < 0) throw Error(ErrorCode::InvalidArgument, "refinement rounds must be non-negative");
  if (!(c.keep_fraction > 0.0 && c.keep_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "keep fraction must lie in (0, 1]");
  }
  if (!(c.h_frac > 0.0)) throw Error(ErrorCode::InvalidArgument, "step fraction must be positive");
  if (c.dt < 0.0) throw Error(ErrorCode::InvalidArgument, "time step must be non-negative");
  if (c.max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max steps must be at least 1");
  for (double w : c.weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ranking weights must be non-negative");
  }
  validate(c.optimizer);
}

namespace {

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Faces of `domain` that `region` touches.
std::vector<int> touching_faces(const BoxDomain& domain, const BoxDomain& region) {
  std::vector<int> out;
  for (const BoxFace& f : domain.faces()) {
    const double c = f.upper ? region.hi()[f.axis] : region.lo()[f.axis];
    if (std::abs(c - f.coordinate) <= domain.tolerance()) out.push_back(f.index);
  }
  return out;
}

}  // namespace

std::vector<SamplePoint> sample_points(const BoxDomain& domain, SamplingMode mode, int count, std::uint64_t rng_seed,
                                       const std::optional<BoxDomain>& region_in, bool on_faces,
                                       std::optional<int> only_face) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be at least 1");
  const BoxDomain region = region_in ? *region_in : domain;
  std::vector<SamplePoint> out;
  std::mt19937_64 rng(rng_seed);

  if (!on_faces) {
    if (mode == SamplingMode::Uniform) {
      const int k = std::max(1, static_cast<int>(std::lround(std::cbrt(static_cast<double>(count)))));
      for (int c = 0; c < k; ++c)
        for (int b = 0; b < k; ++b)
          for (int a = 0; a < k; ++a) {
            const Vec3d f((a + 0.5) / k, (b + 0.5) / k, (c + 0.5) / k);
            out.push_back({region.lo() + f.cwiseProduct(region.extent()), -1});
          }
    } else {
      for (int n = 0; n < count; ++n) {
        const double x = unit_draw(rng), y = unit_draw(rng), z = unit_draw(rng);
        out.push_back({region.lo() + Vec3d(x, y, z).cwiseProduct(region.extent()), -1});
      }
    }
    return out;
  }

  std::vector<int> faces = only_face ? std::vector<int>{*only_face} : touching_faces(domain, region);
  if (faces.empty()) return out;
  auto on_face = [&](int fi, double u, double v) {
    const BoxFace f = domain.face(fi);
    const int a1 = (f.axis + 1) % 3, a2 = (f.axis + 2) % 3;
    Vec3d p;
    p[f.axis] = f.coordinate;
    p[a1] = region.lo()[a1] + u * region.extent()[a1];
    p[a2] = region.lo()[a2] + v * region.extent()[a2];
    return SamplePoint{p, fi};
  };
  if (mode == SamplingMode::Uniform) {
    const double per_face = static_cast<double>(count) / static_cast<double>(faces.size());
    const int k = std::max(1, static_cast<int>(std::lround(std::sqrt(per_face))));
    for (int fi : faces)
      for (int b = 0; b < k; ++b)
        for (int a = 0; a < k; ++a) out.push_back(on_face(fi, (a + 0.5) / k, (b + 0.5) / k));
  } else {
    for (int n = 0; n < count; ++n) {
      const int fi = faces[rng() % faces.size()];
      const double u = unit_draw(rng), v = unit_draw(rng);
      out.push_back(on_face(fi, u, v));
    }
  }
  return out;
}

std::vector<SeedCurve> generate_candidates(const VectorField& field, const std::vector<SamplePoint>& points,
                                           CurveFamily family, const CurveOptions& options, int interior_directions,
                                           int threads) {
  std::vector<std::vector<SeedCurve>> per_point(points.size());
  parallel_for(points.size(), threads, [&](std::size_t k) {
    const SamplePoint& s = points[k];
    switch (family) {
      case CurveFamily::SecondOrder: per_point[k] = second_order_curves(field, s.p, options); break;
      case CurveFamily::FirstOrderBoundary:
        if (s.face >= 0) per_point[k] = boundary_curves(field, s.face, s.p, options);
        break;
      case CurveFamily::FirstOrderInterior:
        per_point[k] = interior_curves(field, s.p, interior_directions, options);
        break;
    }
  });
  std::vector<SeedCurve> out;
  for (auto& v : per_point) {
    for (auto& c : v) out.push_back(std::move(c));
  }
  return out;
}

namespace {

bool uses_weights(const RankingWeights& w) {
  return std::any_of(w.begin(), w.end(), [](double x) { return x != 0.0; });
}

double ranking_key(const RankedCandidate& c, const RankingWeights& w) {
  return uses_weights(w) ? c.energies.E : *c.energies.E_S;
}

}  // namespace

void sort_ranked(std::vector<RankedCandidate>& ranked, const RankingWeights& w) {
  std::sort(ranked.begin(), ranked.end(), [&](const RankedCandidate& a, const RankedCandidate& b) {
    const bool ea = std::isinf(*a.energies.E_S), eb = std::isinf(*b.energies.E_S);
    if (ea != eb) return eb;
    const double ka = ranking_key(a, w), kb = ranking_key(b, w);
    if (ka != kb) return ka < kb;
    if (a.curve.length() != b.curve.length()) return a.curve.length() > b.curve.length();
    return a.id < b.id;
  });
  for (std::size_t k = 0; k < ranked.size(); ++k) ranked[k].rank = static_cast<int>(k);
}

std::vector<RankedCandidate> rank_candidates(const VectorField& field, const std::vector<Candidate>& candidates,
                                             const SurfaceOptions& surface, const RankingWeights& w, int threads) {
  SurfaceOptions opts = surface;
  opts.backward = true;
  if (!(opts.dt > 0.0)) opts.dt = default_time_step(field);
  std::vector<RankedCandidate> out(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t k) {
    const Candidate& c = candidates[k];
    RankedCandidate r;
    r.id = c.id;
    r.round = c.round;
    r.curve = c.curve;
    r.energies = curve_energies(field, c.curve, w);
    try {
      const StreamSurfaceMesh mesh = integrate_surface(field, c.curve, opts);
      r.energies.area = mesh_area(mesh);
      r.energies.E_S = e_surface(field, mesh);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptySurface && e.code() != ErrorCode::DegenerateMesh) throw;
      r.energies.area = 0.0;
      r.energies.E_S = std::numeric_limits<double>::infinity();
    }
    out[k] = std::move(r);
  });
  sort_ranked(out, w);
  return out;
}

std::size_t keep_count(std::size_t count, double fraction) {
  if (count == 0) return 0;
  // Guard against products such as 41 * 0.05 landing just above an integer.
  const double x = static_cast<double>(count) * fraction;
  const auto k = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  return std::clamp<std::size_t>(k, 1, count);
}

Selection refine_and_select(const VectorField& field, const PipelineConfig& config) {
  validate(config);
  const BoxDomain& domain = field.domain();
  CurveOptions curve_opts;
  curve_opts.h = config.h_frac * domain.diameter();
  SurfaceOptions surf;
  surf.dt = config.dt > 0.0 ? config.dt : default_time_step(field);
  surf.max_steps = config.max_steps;
  surf.backward = true;

  Selection sel;
  const std::vector<CurveFamily> chain =
      config.family ? std::vector<CurveFamily>{*config.family}
                    : std::vector<CurveFamily>{CurveFamily::SecondOrder, CurveFamily::FirstOrderBoundary,
                                               CurveFamily::FirstOrderInterior};
  for (CurveFamily family : chain) {
    sel.attempted.push_back(family);
    sel.rounds.clear();
    const bool faces = family == CurveFamily::FirstOrderBoundary;
    int next_id = 0;
    auto make_candidates = [&](std::vector<SeedCurve> curves, int round) {
      std::vector<Candidate> cs;
      for (auto& c : curves) cs.push_back({next_id++, round, std::move(c)});
      return cs;
    };

    // Overlapping refinement boxes can repeat lattice points; each point is used once.
    std::set<std::array<double, 3>> seen;
    auto fresh_only = [&](std::vector<SamplePoint> in) {
      std::vector<SamplePoint> out;
      for (SamplePoint& sp : in) {
        if (seen.insert({sp.p.x(), sp.p.y(), sp.p.z()}).second) out.push_back(std::move(sp));
      }
      return out;
    };

    const auto pts0 =
        fresh_only(sample_points(domain, config.mode, config.samples, config.rng_seed, std::nullopt, faces));
    auto curves0 = generate_candidates(field, pts0, family, curve_opts, config.interior_directions, config.threads);
    if (curves0.empty()) continue;
    std::vector<RankedCandidate> ranked =
        rank_candidates(field, make_candidates(std::move(curves0), 0), surf, config.weights, config.threads);
    const std::size_t curves0_count = ranked.size();
    sel.rounds.push_back({0, pts0.size(), curves0_count, ranking_key(ranked.front(), config.weights)});

    Vec3d edge = domain.extent();
    for (int round = 1; round <= config.refine_rounds; ++round) {
      const std::size_t keep = keep_count(ranked.size(), config.keep_fraction);
      std::vector<RankedCandidate> top(ranked.begin(), ranked.begin() + static_cast<long>(keep));
      edge /= 4.0;
      const double density = std::pow(2.0, round) / std::pow(64.0, round);
      const int per_box = std::max(8, static_cast<int>(std::ceil(config.samples * density)));
      std::vector<SamplePoint> pts;
      for (std::size_t k = 0; k < top.size(); ++k) {
        const Vec3d c = top[k].curve.seed;
        const BoxDomain box = domain.clipped(c - 0.5 * edge, c + 0.5 * edge);
        std::optional<int> face;
        if (faces && top[k].curve.face >= 0) face = top[k].curve.face;
        if (faces && !face) continue;
        const auto sub = sample_points(domain, config.mode, per_box, mix_seed(config.rng_seed, round, k), box, faces, face);
        pts.insert(pts.end(), sub.begin(), sub.end());
      }
      pts = fresh_only(std::move(pts));
      auto curves = generate_candidates(field, pts, family, curve_opts, config.interior_directions, config.threads);
      const std::size_t new_curves = curves.size();
      auto fresh = rank_candidates(field, make_candidates(std::move(curves), round), surf, config.weights, config.threads);
      // Incumbents are carried forward so the best never gets worse.
      ranked = std::move(top);
      ranked.insert(ranked.end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
      sort_ranked(ranked, config.weights);
      sel.rounds.push_back({round, pts.size(), new_curves, ranking_key(ranked.front(), config.weights)});
    }

    sel.family = family;
    sel.ranked = ranked;
    const std::size_t keep = keep_count(ranked.size(), config.keep_fraction);
    sel.survivors.assign(ranked.begin(), ranked.begin() + static_cast<long>(keep));
    return sel;
  }

  std::string tried;
  for (CurveFamily f : sel.attempted) tried += std::string(tried.empty() ? "" : " -> ") + to_string(f);
  throw Error(ErrorCode::NoCandidatesFound, "no seed curves found (tried " + tried + ")");
}

PipelineResult run_pipeline(const VectorField& field, const PipelineConfig& config) {
  PipelineResult out;
  out.selection = refine_and_select(field, config);
  out.h = config.h_frac * field.domain().diameter();
  out.dt = config.dt > 0.0 ? config.dt : default_time_step(field);

  OptimizerConfig opt = config.optimizer;
  opt.surface.dt = out.dt;
  opt.surface.max_steps = config.max_steps;
  opt.surface.backward = true;

  const auto& survivors = out.selection.survivors;
  out.surfaces.resize(survivors.size());
  parallel_for(survivors.size(), config.threads, [&](std::size_t k) {
    OptimisedSurface s;
    s.candidate = survivors[k];
    s.E_S_initial = *survivors[k].energies.E_S;
    s.E_S_optimised = s.E_S_initial;
    if (!std::isinf(s.E_S_initial)) {
      if (config.optimise) {
        s.result = optimise_stream_surface(field, survivors[k].curve, opt);
        s.E_S_optimised = s.result.E_S_history[s.result.best_index];
      } else {
        s.result.seed = survivors[k].curve;
        s.result.mesh = integrate_surface(field, survivors[k].curve, opt.surface);
        s.result.E_S_history = {s.E_S_initial};
        s.result.log.push_back({0, objective(s.result.mesh, opt), s.E_S_initial});
      }
    } else {
      s.result.seed = survivors[k].curve;
    }
    out.surfaces[k] = std::move(s);
  });
  std::stable_sort(out.surfaces.begin(), out.surfaces.end(), [](const OptimisedSurface& a, const OptimisedSurface& b) {
    if (a.E_S_optimised != b.E_S_optimised) return a.E_S_optimised < b.E_S_optimised;
    if (a.candidate.curve.length() != b.candidate.curve.length())
      return a.candidate.curve.length() > b.candidate.curve.length();
    return a.candidate.id < b.candidate.id;
  });
  for (std::size_t k = 0; k < out.surfaces.size(); ++k) out.surfaces[k].rank = static_cast<int>(k);
  return out;
}

}  // namespace strainsurf
