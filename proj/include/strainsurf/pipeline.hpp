#pragma once

// End-to-end search: sample seeds, generate candidate curves, rank their
// surfaces, refine around the best, optimise the survivors.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strainsurf/curves.hpp"
#include "strainsurf/energies.hpp"
#include "strainsurf/field.hpp"
#include "strainsurf/optimize.hpp"

namespace strainsurf {

enum class SamplingMode { Uniform, Random };

const char* to_string(SamplingMode m);
SamplingMode sampling_mode_from_string(const std::string& name);

struct SamplePoint {
  Vec3d p = Vec3d::Zero();
  int face = -1;  // set for boundary samples
};

/// Uniform mode lays a k^3 lattice of cell centres with k = round(cbrt(count));
/// random mode draws `count` points from a seeded generator. With `on_faces`
/// the points lie on the boundary faces of the region that touch the domain
/// boundary instead.
std::vector<SamplePoint> sample_points(const BoxDomain& domain, SamplingMode mode, int count, std::uint64_t rng_seed,
                                       const std::optional<BoxDomain>& region = std::nullopt, bool on_faces = false,
                                       std::optional<int> only_face = std::nullopt);

struct PipelineConfig {
  SamplingMode mode = SamplingMode::Uniform;
  std::uint64_t rng_seed = 1;
  int samples = 216;
  int refine_rounds = 3;
  double keep_fraction = 0.05;
  std::optional<CurveFamily> family;  // unset: second order, then boundary, then interior
  int interior_directions = 4;
  RankingWeights weights{0.0, 0.0, 0.0, 0.0};
  double h_frac = 0.01;
  double dt = 0.0;  // 0: velocity-normalised default
  int max_steps = 500;
  OptimizerConfig optimizer;
  bool optimise = true;
  int threads = 0;
};

void validate(const PipelineConfig& config);

struct Candidate {
  int id = 0;
  int round = 0;
  SeedCurve curve;
};

struct RankedCandidate {
  int id = 0;
  int round = 0;
  SeedCurve curve;
  EnergyReport energies;  // E_S and area set; E_S is +inf for empty surfaces
  int rank = 0;
};

/// All admissible curves from the points, in point order.
std::vector<SeedCurve> generate_candidates(const VectorField& field, const std::vector<SamplePoint>& points,
                                           CurveFamily family, const CurveOptions& options,
                                           int interior_directions = 4, int threads = 0);

/// Integrate each candidate's surface forward and backward, evaluate all
/// energies, and sort.
std::vector<RankedCandidate> rank_candidates(const VectorField& field, const std::vector<Candidate>& candidates,
                                             const SurfaceOptions& surface, const RankingWeights& w,
                                             int threads = 0);

/// Sort key order: ranking energy ascending, then length descending, then id.
void sort_ranked(std::vector<RankedCandidate>& ranked, const RankingWeights& w);

std::size_t keep_count(std::size_t count, double fraction);

struct RoundSummary {
  int round = 0;
  std::size_t samples = 0;
  std::size_t curves = 0;
  double best = 0.0;  // best ranking energy after the round
};

struct Selection {
  CurveFamily family = CurveFamily::FirstOrderInterior;
  std::vector<CurveFamily> attempted;
  std::vector<RankedCandidate> ranked;     // final ranking, all kept entries
  std::vector<RankedCandidate> survivors;  // best keep_fraction
  std::vector<RoundSummary> rounds;
};

Selection refine_and_select(const VectorField& field, const PipelineConfig& config);

struct OptimisedSurface {
  RankedCandidate candidate;
  double E_S_initial = 0.0;
  double E_S_optimised = 0.0;
  OptimizationResult result;
  int rank = 0;
};

struct PipelineResult {
  Selection selection;
  std::vector<OptimisedSurface> surfaces;  // ranked by optimised E_S
  double dt = 0.0;
  double h = 0.0;
};

PipelineResult run_pipeline(const VectorField& field, const PipelineConfig& config);

}  // namespace strainsurf
