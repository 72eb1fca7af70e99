#pragma once

// Field specifications and artifact serialisation: seeds.json, ranking.csv,
// report.json and the report directory. Every float is written with 17
// significant digits so files round-trip bit for bit.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "strainsurf/energies.hpp"
#include "strainsurf/field.hpp"
#include "strainsurf/pipeline.hpp"

namespace strainsurf::io {

using json = nlohmann::ordered_json;

/// "%.17g"; non-finite values become "inf", "-inf" or "nan".
std::string format_double(double x);

/// Serialise with 17-digit floats. Non-finite floats become the strings
/// "inf", "-inf" or "nan", matching the optimisation log.
/// indent < 0 writes a single line.
std::string dump(const json& value, int indent = 2);

// ---------------------------------------------------------------------------
// Field specification
// ---------------------------------------------------------------------------

struct FieldSpec {
  enum class Kind { Expression, Catalogue, Grid };
  Kind kind = Kind::Catalogue;
  std::string body;  // text after the prefix
  std::string text;  // the full specification as given
  bool divergence_free = false;
};

/// Parses "expr:VX;VY;VZ", "catalogue:NAME" or "grid:PATH". Throws
/// InvalidArgument on a malformed specification.
FieldSpec parse_field_spec(const std::string& text, bool divergence_free = false);

/// Builds the field. Expressions use `domain` (unit box when absent);
/// catalogue fields use it as an override; grids always use their bounds.
/// Missing or malformed grid files throw Io naming the path.
VectorField load_field(const FieldSpec& spec, const std::optional<BoxDomain>& domain = std::nullopt);

/// Parses "xmin,ymin,zmin,xmax,ymax,zmax".
BoxDomain parse_domain(const std::string& text);

/// Parses "w1,w2,w3,w4".
RankingWeights parse_weights(const std::string& text);

// ---------------------------------------------------------------------------
// Seed curves
// ---------------------------------------------------------------------------

struct SeedEntry {
  int id = 0;
  SeedCurve curve;
  std::optional<EnergyReport> energies;
};

json to_json(const Vec3d& v);
json to_json(const EnergyReport& e);
json to_json(const SeedEntry& entry);

SeedEntry seed_entry_from_json(const json& j);

/// {"field": ..., "curves": [...]}.
void write_seeds(std::ostream& out, const std::vector<SeedEntry>& entries, const std::string& field_text);
void write_seeds(const std::filesystem::path& path, const std::vector<SeedEntry>& entries,
                 const std::string& field_text);

/// Accepts the document written by write_seeds, a bare array of curves, or a
/// single curve object.
std::vector<SeedEntry> read_seeds(std::istream& in);
std::vector<SeedEntry> read_seeds(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Tables and reports
// ---------------------------------------------------------------------------

/// Columns: id, family, length, E1, E2, E_in, E_ortho, E_para, E_rigid, E, E_S.
/// Absent optional energies are written as empty cells.
void write_ranking_csv(std::ostream& out, const std::vector<SeedEntry>& rows);

struct RunInfo {
  std::string command;
  std::string field_text;
  std::optional<std::string> requested_family;  // unset: automatic fallback
  std::optional<json> timings;                  // only written when present
  std::optional<std::string> error;             // set when the run stopped early
};

json config_json(const PipelineConfig& config, const VectorField& field, const RunInfo& info, double h, double dt);

/// report.json, ranking.csv, seeds.json and surfaces/NNN.{obj,energy.csv,log.jsonl}.
void write_report_directory(const std::filesystem::path& dir, const VectorField& field, const PipelineConfig& config,
                            const PipelineResult& result, const RunInfo& info);

/// Writes `text` to `path`, throwing Io on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Mesh OBJ plus the per-vertex strain sidecar next to it.
void write_surface_files(const std::filesystem::path& obj_path, const std::filesystem::path& csv_path,
                         const VectorField& field, const StreamSurfaceMesh& mesh);

}  // namespace strainsurf::io
