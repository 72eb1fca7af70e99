// strainsurf command-line front end.
//
// Exit codes: 0 ok, 1 other failure, 2 usage, 3 I/O, 4 no candidates.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "strainsurf/errors.hpp"
#include "strainsurf/io.hpp"
#include "strainsurf/pipeline.hpp"
#include "strainsurf/quadrics.hpp"
#include "strainsurf/surface.hpp"

namespace fs = std::filesystem;
using namespace strainsurf;
using io::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kNoCandidates = 4 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::SyntaxError:
    case ErrorCode::UnknownIdentifier:
      return kUsage;
    case ErrorCode::Io:
      return kIo;
    case ErrorCode::NoCandidatesFound:
      return kNoCandidates;
    default:
      return kFailure;
  }
}

struct FieldArgs {
  std::string field;
  std::string domain;
  bool divergence_free = false;

  void add(CLI::App* app) {
    app->add_option("--field", field, "expr:VX;VY;VZ | catalogue:NAME | grid:PATH")->required();
    app->add_option("--domain", domain, "xmin,ymin,zmin,xmax,ymax,zmax (expression and catalogue fields)");
    app->add_flag("--div-free", divergence_free, "declare the field divergence-free");
  }

  VectorField load() const {
    const io::FieldSpec spec = io::parse_field_spec(field, divergence_free);
    std::optional<BoxDomain> box;
    if (!domain.empty()) box = io::parse_domain(domain);
    return io::load_field(spec, box);
  }
};

struct SearchArgs {
  std::string mode = "uniform";
  int samples = 216;
  int refine = 3;
  double top = 0.05;
  std::string family;
  int directions = 4;
  double h_frac = 0.01;
  double dt = 0.0;
  int max_steps = 500;
  std::string weights = "0,0,0,0";
  std::uint64_t rng_seed = 1;
  int threads = 0;

  void add(CLI::App* app) {
    app->add_option("--mode", mode, "seed sampling: uniform or random")->capture_default_str();
    app->add_option("--samples", samples, "seed samples in the first round")->capture_default_str();
    app->add_option("--refine", refine, "refinement rounds")->capture_default_str();
    app->add_option("--top", top, "fraction kept for refinement and optimisation")->capture_default_str();
    app->add_option("--family", family, "second_order, boundary or interior (default: fall back in that order)");
    app->add_option("--directions", directions, "cone generators per interior seed")->capture_default_str();
    app->add_option("--h-frac", h_frac, "seed curve step as a fraction of the domain diameter")->capture_default_str();
    app->add_option("--dt", dt, "integration time step (default: 0.01 diam / max speed)");
    app->add_option("--max-steps", max_steps, "RK4 steps per direction")->capture_default_str();
    app->add_option("--w", weights, "ranking weights w1,w2,w3,w4")->capture_default_str();
    app->add_option("--rng-seed", rng_seed, "seed for random sampling")->capture_default_str();
    app->add_option("--threads", threads, "worker threads (0: all cores)")->capture_default_str();
  }

  PipelineConfig config() const {
    PipelineConfig c;
    c.mode = sampling_mode_from_string(mode);
    c.samples = samples;
    c.refine_rounds = refine;
    c.keep_fraction = top;
    if (!family.empty()) c.family = curve_family_from_string(family);
    c.interior_directions = directions;
    c.h_frac = h_frac;
    c.dt = dt;
    c.max_steps = max_steps;
    c.weights = io::parse_weights(weights);
    c.rng_seed = rng_seed;
    c.threads = threads;
    return c;
  }
};

struct OptimiseArgs {
  double mu1 = 0.1;
  double mu2 = 0.02;
  int iters = 10;

  void add(CLI::App* app) {
    app->add_option("--mu1", mu1, "fairness weight")->capture_default_str();
    app->add_option("--mu2", mu2, "proximity weight")->capture_default_str();
    app->add_option("--iters", iters, "outer optimisation iterations")->capture_default_str();
  }

  void apply(OptimizerConfig& c) const {
    c.mu1 = mu1;
    c.mu2 = mu2;
    c.max_outer_iters = iters;
  }
};

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string pattern(const SignatureInfo& s) {
  return "(" + std::string(s.positive, '+') + std::string(s.negative, '-') + std::string(s.zero, '0') + ")";
}

std::string pattern_with_commas(const std::string& p) {
  std::string out = "(";
  for (std::size_t k = 1; k + 1 < p.size(); ++k) out += std::string(k > 1 ? "," : "") + p[k];
  return out + ")";
}

// ---------------------------------------------------------------------------

int cmd_field_info(const FieldArgs& fa, std::size_t samples, std::uint64_t seed) {
  const VectorField field = fa.load();
  const BoxDomain& d = field.domain();
  const DivergenceStats div = divergence_stats(field, samples, seed);

  std::map<std::string, std::size_t> strain_hist, k_hist;
  std::size_t second_order = 0, undefined = 0;
  double jacobian_scale = 0.0;
  std::mt19937_64 rng(seed + 1);
  for (std::size_t k = 0; k < samples; ++k) {
    Vec3d p;
    for (int a = 0; a < 3; ++a) p[a] = d.lo()[a] + d.extent()[a] * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    try {
      const Mat3d J = field.jacobian(p);
      jacobian_scale += J.norm();
      ++strain_hist[pattern(classify_form(strain_part(J)))];
      ++k_hist[pattern(classify_form(k_form(J)))];
      if (!is_empty(second_order_vectors(J))) ++second_order;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EvalDomainError) throw;
      ++undefined;
    }
  }
  const std::size_t defined = samples - undefined;
  if (defined > 0) jacobian_scale /= double(defined);

  std::cout << "field: " << field.description() << '\n';
  std::cout << "domain: [" << io::format_double(d.lo().x()) << ", " << io::format_double(d.lo().y()) << ", "
            << io::format_double(d.lo().z()) << "] to [" << io::format_double(d.hi().x()) << ", "
            << io::format_double(d.hi().y()) << ", " << io::format_double(d.hi().z()) << "]\n";
  std::cout << "diameter: " << io::format_double(d.diameter()) << '\n';
  std::cout << "declared divergence-free: " << (field.declared_divergence_free() ? "yes" : "no") << '\n';
  std::cout << "divergence over " << div.samples << " samples: max |tr J| " << io::format_double(div.max_abs)
            << ", mean " << io::format_double(div.mean_abs) << '\n';
  if (field.declared_divergence_free() && div.max_abs > 1e-8 * std::max(1.0, jacobian_scale)) {
    std::cerr << "warning: field is declared divergence-free but max |tr J| = " << io::format_double(div.max_abs)
              << '\n';
  }
  auto print_hist = [&](const char* title, const std::map<std::string, std::size_t>& h) {
    std::cout << title << " signature histogram:\n";
    for (const auto& [key, count] : h) {
      std::cout << "  " << pattern_with_commas(key) << ' ' << double(count) / double(samples) << '\n';
    }
  };
  print_hist("strain form", strain_hist);
  print_hist("second-order form", k_hist);
  std::cout << "second-order directions exist: " << double(second_order) / double(samples) << '\n';
  if (undefined) std::cout << "undefined samples: " << undefined << '\n';
  return kOk;
}

int cmd_seeds(const FieldArgs& fa, const SearchArgs& sa, const std::string& out) {
  const VectorField field = fa.load();
  const PipelineConfig config = sa.config();
  validate(config);
  const Selection sel = refine_and_select(field, config);
  std::vector<io::SeedEntry> entries;
  for (const RankedCandidate& r : sel.ranked) entries.push_back({r.id, r.curve, r.energies});
  if (out.empty() || out == "-") {
    io::write_seeds(std::cout, entries, fa.field);
  } else {
    io::write_seeds(fs::path(out), entries, fa.field);
    std::cout << entries.size() << " " << to_string(sel.family) << " curves written to " << out << '\n';
  }
  return kOk;
}

io::SeedEntry pick_seed(const std::string& path, int index) {
  const std::vector<io::SeedEntry> seeds = io::read_seeds(fs::path(path));
  if (index < 0 || static_cast<std::size_t>(index) >= seeds.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "--index " + std::to_string(index) + " out of range for " + std::to_string(seeds.size()) + " curves");
  }
  return seeds[static_cast<std::size_t>(index)];
}

SurfaceOptions surface_options(const VectorField& field, double dt, int max_steps, bool forward_only) {
  if (dt < 0.0) throw Error(ErrorCode::InvalidArgument, "--dt must be positive");
  if (max_steps < 1) throw Error(ErrorCode::InvalidArgument, "--max-steps must be at least 1");
  SurfaceOptions s;
  s.dt = dt > 0.0 ? dt : default_time_step(field);
  s.max_steps = max_steps;
  s.backward = !forward_only;
  return s;
}

int cmd_surface(const FieldArgs& fa, const std::string& seeds, int index, double dt, int max_steps, bool forward_only,
                const std::string& out) {
  const VectorField field = fa.load();
  const io::SeedEntry seed = pick_seed(seeds, index);
  const StreamSurfaceMesh mesh = integrate_surface(field, seed.curve, surface_options(field, dt, max_steps, forward_only));
  fs::path obj = out.empty() ? fs::path("surface.obj") : fs::path(out);
  fs::path csv = obj;
  csv.replace_extension(".energy.csv");
  if (obj.has_parent_path()) fs::create_directories(obj.parent_path());
  io::write_surface_files(obj, csv, field, mesh);
  std::cout << "mesh " << mesh.m << " x " << mesh.n << ", " << mesh.valid_count() << " valid vertices\n";
  try {
    std::cout << "E_S " << io::format_double(e_surface(field, mesh)) << '\n';
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateMesh) throw;
    std::cout << "E_S inf (degenerate surface)\n";
  }
  return kOk;
}

int cmd_optimize(const FieldArgs& fa, const std::string& seeds, int index, double dt, int max_steps,
                 const OptimiseArgs& oa, const std::string& out) {
  const VectorField field = fa.load();
  const io::SeedEntry seed = pick_seed(seeds, index);
  OptimizerConfig config;
  oa.apply(config);
  config.surface = surface_options(field, dt, max_steps, false);
  validate(config);
  const OptimizationResult result = optimise_stream_surface(field, seed.curve, config);

  const fs::path dir = out.empty() ? fs::path("optimised") : fs::path(out);
  fs::create_directories(dir);
  io::write_surface_files(dir / "surface.obj", dir / "surface.energy.csv", field, result.mesh);
  std::ostringstream log;
  write_log_jsonl(result.log, log);
  io::write_text_file(dir / "optimise.log.jsonl", log.str());
  EnergyReport energies = curve_energies(field, result.seed);
  energies.E_S = result.E_S_history[result.best_index];
  energies.area = mesh_area(result.mesh);
  io::write_seeds(dir / "seeds.json", {{seed.id, result.seed, energies}}, fa.field);

  std::cout << "E_S";
  for (double e : result.E_S_history) std::cout << ' ' << io::format_double(e);
  std::cout << "\nbest iteration " << result.best_index << '\n';
  return kOk;
}

int cmd_pipeline(const FieldArgs& fa, const SearchArgs& sa, const OptimiseArgs& oa, bool no_optimise,
                 bool record_timings, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  const VectorField field = fa.load();
  const double load_time = elapsed(start);
  PipelineConfig config = sa.config();
  oa.apply(config.optimizer);
  config.optimise = !no_optimise;
  validate(config);

  io::RunInfo info;
  info.command = "pipeline";
  info.field_text = fa.field;
  if (!sa.family.empty()) info.requested_family = to_string(*config.family);

  const auto search_start = std::chrono::steady_clock::now();
  PipelineResult result;
  int code = kOk;
  try {
    result = run_pipeline(field, config);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCandidatesFound) throw;
    info.error = e.what();
    result.h = config.h_frac * field.domain().diameter();
    result.dt = config.dt > 0.0 ? config.dt : default_time_step(field);
    std::cerr << e.what() << '\n';
    code = kNoCandidates;
  }
  if (record_timings) {
    info.timings = json{{"load_field_s", load_time}, {"pipeline_s", elapsed(search_start)}, {"total_s", elapsed(start)}};
  }
  io::write_report_directory(fs::path(out), field, config, result, info);
  if (code == kOk) {
    std::cout << result.selection.ranked.size() << " " << to_string(result.selection.family) << " candidates, "
              << result.surfaces.size() << " optimised\n";
    for (const OptimisedSurface& s : result.surfaces) {
      std::cout << "  #" << s.rank << " id " << s.candidate.id << " E_S " << io::format_double(s.E_S_initial) << " -> "
                << io::format_double(s.E_S_optimised) << '\n';
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strain-minimising stream surfaces in 3D vector fields"};
  app.require_subcommand(1);

  FieldArgs info_field;
  std::size_t info_samples = 10000;
  std::uint64_t info_seed = 1;
  CLI::App* info = app.add_subcommand("field-info", "domain, divergence and strain signature statistics");
  info_field.add(info);
  info->add_option("--samples", info_samples, "random sample points")->capture_default_str();
  info->add_option("--rng-seed", info_seed, "sampling seed")->capture_default_str();

  FieldArgs seeds_field;
  SearchArgs seeds_search;
  std::string seeds_out;
  CLI::App* seeds = app.add_subcommand("seeds", "rank candidate seed curves and write seeds.json");
  seeds_field.add(seeds);
  seeds_search.add(seeds);
  seeds->add_option("--out", seeds_out, "output JSON file (default: stdout)");

  FieldArgs surf_field;
  std::string surf_seeds, surf_out;
  int surf_index = 0, surf_steps = 500;
  double surf_dt = 0.0;
  bool surf_forward = false;
  CLI::App* surface = app.add_subcommand("surface", "integrate the stream surface of one seed curve");
  surf_field.add(surface);
  surface->add_option("--seeds", surf_seeds, "seeds.json")->required();
  surface->add_option("--index", surf_index, "curve index in the file")->capture_default_str();
  surface->add_option("--dt", surf_dt, "integration time step (default: 0.01 diam / max speed)");
  surface->add_option("--max-steps", surf_steps, "RK4 steps per direction")->capture_default_str();
  surface->add_flag("--forward-only", surf_forward, "integrate forward in time only");
  surface->add_option("--out", surf_out, "OBJ path; the strain sidecar goes next to it")->capture_default_str();

  FieldArgs opt_field;
  OptimiseArgs opt_args;
  std::string opt_seeds, opt_out;
  int opt_index = 0, opt_steps = 500;
  double opt_dt = 0.0;
  CLI::App* optimise = app.add_subcommand("optimize", "optimise the stream surface of one seed curve");
  opt_field.add(optimise);
  opt_args.add(optimise);
  optimise->add_option("--seeds", opt_seeds, "seeds.json")->required();
  optimise->add_option("--index", opt_index, "curve index in the file")->capture_default_str();
  optimise->add_option("--dt", opt_dt, "integration time step (default: 0.01 diam / max speed)");
  optimise->add_option("--max-steps", opt_steps, "RK4 steps per direction")->capture_default_str();
  optimise->add_option("--out", opt_out, "output directory")->capture_default_str();

  FieldArgs pipe_field;
  SearchArgs pipe_search;
  OptimiseArgs pipe_opt;
  std::string pipe_out;
  bool pipe_no_opt = false, pipe_timings = false;
  CLI::App* pipeline = app.add_subcommand("pipeline", "search, rank and optimise; writes a report directory");
  pipe_field.add(pipeline);
  pipe_search.add(pipeline);
  pipe_opt.add(pipeline);
  pipeline->add_flag("--no-optimise", pipe_no_opt, "rank only, skip surface optimisation");
  pipeline->add_flag("--record-timings", pipe_timings, "add wall-clock timings to report.json");
  pipeline->add_option("--out", pipe_out, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*info) return cmd_field_info(info_field, info_samples, info_seed);
    if (*seeds) return cmd_seeds(seeds_field, seeds_search, seeds_out);
    if (*surface) return cmd_surface(surf_field, surf_seeds, surf_index, surf_dt, surf_steps, surf_forward, surf_out);
    if (*optimise) return cmd_optimize(opt_field, opt_seeds, opt_index, opt_dt, opt_steps, opt_args, opt_out);
    if (*pipeline) return cmd_pipeline(pipe_field, pipe_search, pipe_opt, pipe_no_opt, pipe_timings, pipe_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
