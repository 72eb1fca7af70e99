#include "strainsurf/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "strainsurf/errors.hpp"
#include "strainsurf/expr.hpp"
#include "strainsurf/grid.hpp"
#include "strainsurf/surface.hpp"

namespace strainsurf::io {

namespace fs = std::filesystem;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void dump_to(const json& v, int indent, int depth, std::string& out) {
  const bool pretty = indent >= 0;
  auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(key).dump();
        out += pretty ? ": " : ":";
        dump_to(item, indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line; points and tangents read better.
      bool flat = true;
      for (const auto& item : v) flat = flat && !item.is_structured();
      out += '[';
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += flat && pretty ? ", " : ",";
        if (!flat) newline(depth + 1);
        dump_to(v[k], indent, depth + 1, out);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double x = v.get<double>();
      out += std::isfinite(x) ? format_double(x) : "\"" + format_double(x) + "\"";
      return;
    }
    default:
      out += v.dump();
  }
}

double number_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw Error(ErrorCode::Io, "expected a number, got " + j.dump());
}

Vec3d vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Io, "expected [x, y, z], got " + j.dump());
  return {number_from_json(j[0]), number_from_json(j[1]), number_from_json(j[2])};
}

std::vector<double> split_numbers(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size()) {
      throw Error(ErrorCode::InvalidArgument, std::string("bad number '") + item + "' in " + what);
    }
    values.push_back(x);
  }
  if (values.size() != expected) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + " needs " + std::to_string(expected) + " comma-separated numbers");
  }
  return values;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_cell(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

}  // namespace

std::string dump(const json& value, int indent) {
  std::string out;
  dump_to(value, indent, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Field specification
// ---------------------------------------------------------------------------

FieldSpec parse_field_spec(const std::string& text, bool divergence_free) {
  FieldSpec spec;
  spec.text = text;
  spec.divergence_free = divergence_free;
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "field must be expr:VX;VY;VZ, catalogue:NAME or grid:PATH");
  }
  const std::string prefix = text.substr(0, colon);
  spec.body = text.substr(colon + 1);
  if (prefix == "expr") {
    spec.kind = FieldSpec::Kind::Expression;
  } else if (prefix == "catalogue") {
    spec.kind = FieldSpec::Kind::Catalogue;
  } else if (prefix == "grid") {
    spec.kind = FieldSpec::Kind::Grid;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown field kind '" + prefix + "'");
  }
  if (spec.body.empty()) throw Error(ErrorCode::InvalidArgument, "empty field specification after '" + prefix + ":'");
  return spec;
}

VectorField load_field(const FieldSpec& spec, const std::optional<BoxDomain>& domain) {
  switch (spec.kind) {
    case FieldSpec::Kind::Expression:
      return expr::parse_field(spec.body, domain.value_or(BoxDomain::unit()), spec.divergence_free);
    case FieldSpec::Kind::Catalogue:
      return domain ? catalogue::by_name(spec.body, &*domain) : catalogue::by_name(spec.body);
    case FieldSpec::Kind::Grid: {
      GridField grid = [&] {
        try {
          return vfgrid::read(spec.body);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Io) throw;
          const std::string what = e.what();
          if (what.find(spec.body) != std::string::npos) throw;
          throw Error(ErrorCode::Io, "'" + spec.body + "': " + what);
        }
      }();
      return vfgrid::as_field(std::move(grid), spec.divergence_free, "grid " + spec.body);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled field kind");
}

BoxDomain parse_domain(const std::string& text) {
  const std::vector<double> v = split_numbers(text, 6, "--domain");
  const Vec3d lo(v[0], v[1], v[2]), hi(v[3], v[4], v[5]);
  if (!((hi - lo).array() > 0.0).all()) throw Error(ErrorCode::InvalidArgument, "--domain needs min < max on every axis");
  return {lo, hi};
}

RankingWeights parse_weights(const std::string& text) {
  const std::vector<double> v = split_numbers(text, 4, "--w");
  RankingWeights w{v[0], v[1], v[2], v[3]};
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "--w weights must be finite and >= 0");
  }
  return w;
}

// ---------------------------------------------------------------------------
// Seed curves
// ---------------------------------------------------------------------------

json to_json(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const EnergyReport& e) {
  json j;
  j["c1"] = e.c1;
  j["c2"] = e.c2;
  j["E1"] = e.E1;
  j["E2"] = e.E2;
  j["E_in"] = e.E_in ? json(*e.E_in) : json(nullptr);
  j["E_ortho"] = e.E_ortho;
  j["E_para"] = e.E_para;
  j["E_rigid"] = e.E_rigid;
  j["E"] = e.E;
  j["weights"] = json::array({e.weights[0], e.weights[1], e.weights[2], e.weights[3]});
  if (e.E_S) j["E_S"] = *e.E_S;
  if (e.area) j["area"] = *e.area;
  return j;
}

json to_json(const SeedEntry& entry) {
  const SeedCurve& c = entry.curve;
  json j;
  j["id"] = entry.id;
  j["family"] = to_string(c.family);
  if (c.face >= 0) j["face"] = c.face;
  j["h"] = c.h;
  j["seed"] = to_json(c.seed);
  j["initial_direction"] = to_json(c.initial_direction);
  j["length"] = c.length();
  json points = json::array(), tangents = json::array();
  for (const Vec3d& p : c.points) points.push_back(to_json(p));
  for (const Vec3d& u : c.tangents) tangents.push_back(to_json(u));
  j["points"] = std::move(points);
  j["tangents"] = std::move(tangents);
  if (entry.energies) j["energies"] = to_json(*entry.energies);
  return j;
}

SeedEntry seed_entry_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Io, "seed curve must be a JSON object");
  if (!j.contains("points") || !j["points"].is_array()) throw Error(ErrorCode::Io, "seed curve needs 'points'");
  SeedEntry e;
  e.id = j.value("id", 0);
  SeedCurve& c = e.curve;
  try {
    c.family = curve_family_from_string(j.value("family", std::string("first_order_interior")));
  } catch (const Error& err) {
    throw Error(ErrorCode::Io, err.what());
  }
  c.face = j.value("face", -1);
  for (const json& p : j["points"]) c.points.push_back(vec_from_json(p));
  if (c.points.size() < 2) throw Error(ErrorCode::Io, "seed curve needs at least two points");
  if (j.contains("tangents")) {
    for (const json& u : j["tangents"]) c.tangents.push_back(vec_from_json(u));
    if (c.tangents.size() != c.points.size()) throw Error(ErrorCode::Io, "seed curve tangents and points differ in count");
  } else {
    // Chord directions; the last sample repeats the final chord.
    for (std::size_t k = 0; k < c.points.size(); ++k) {
      const std::size_t a = std::min(k, c.points.size() - 2);
      c.tangents.push_back((c.points[a + 1] - c.points[a]).normalized());
    }
  }
  update_arclength(c);
  c.h = j.contains("h") ? number_from_json(j["h"]) : c.length() / double(c.points.size() - 1);
  c.seed = j.contains("seed") ? vec_from_json(j["seed"]) : c.points[c.points.size() / 2];
  c.initial_direction = j.contains("initial_direction") ? vec_from_json(j["initial_direction"]) : c.tangents[c.points.size() / 2];
  if (j.contains("energies") && j["energies"].is_object()) {
    const json& en = j["energies"];
    EnergyReport r;
    auto num = [&](const char* key, double& dst) {
      if (en.contains(key)) dst = number_from_json(en[key]);
    };
    num("c1", r.c1);
    num("c2", r.c2);
    num("E1", r.E1);
    num("E2", r.E2);
    num("E_ortho", r.E_ortho);
    num("E_para", r.E_para);
    num("E_rigid", r.E_rigid);
    num("E", r.E);
    if (en.contains("E_in") && !en["E_in"].is_null()) r.E_in = number_from_json(en["E_in"]);
    if (en.contains("E_S")) r.E_S = number_from_json(en["E_S"]);
    if (en.contains("area")) r.area = number_from_json(en["area"]);
    if (en.contains("weights") && en["weights"].is_array() && en["weights"].size() == 4) {
      for (int k = 0; k < 4; ++k) r.weights[k] = number_from_json(en["weights"][k]);
    }
    e.energies = r;
  }
  return e;
}

void write_seeds(std::ostream& out, const std::vector<SeedEntry>& entries, const std::string& field_text) {
  json doc;
  doc["field"] = field_text;
  json curves = json::array();
  for (const SeedEntry& e : entries) curves.push_back(to_json(e));
  doc["curves"] = std::move(curves);
  out << dump(doc) << '\n';
}

void write_seeds(const fs::path& path, const std::vector<SeedEntry>& entries, const std::string& field_text) {
  std::ostringstream ss;
  write_seeds(ss, entries, field_text);
  write_text_file(path, ss.str());
}

std::vector<SeedEntry> read_seeds(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, std::string("invalid seeds JSON: ") + e.what());
  }
  std::vector<SeedEntry> out;
  const json* list = &doc;
  if (doc.is_object() && doc.contains("curves")) list = &doc["curves"];
  if (list->is_array()) {
    for (const json& item : *list) out.push_back(seed_entry_from_json(item));
  } else {
    out.push_back(seed_entry_from_json(*list));
  }
  return out;
}

std::vector<SeedEntry> read_seeds(const fs::path& path) {
  std::istringstream in(read_file(path));
  return read_seeds(in);
}

// ---------------------------------------------------------------------------
// Tables and reports
// ---------------------------------------------------------------------------

void write_ranking_csv(std::ostream& out, const std::vector<SeedEntry>& rows) {
  out << "id,family,length,E1,E2,E_in,E_ortho,E_para,E_rigid,E,E_S\n";
  for (const SeedEntry& row : rows) {
    out << row.id << ',' << to_string(row.curve.family) << ',' << format_double(row.curve.length());
    if (row.energies) {
      const EnergyReport& e = *row.energies;
      out << ',' << format_double(e.E1) << ',' << format_double(e.E2) << ',' << csv_cell(e.E_in) << ','
          << format_double(e.E_ortho) << ',' << format_double(e.E_para) << ',' << format_double(e.E_rigid) << ','
          << format_double(e.E) << ',' << csv_cell(e.E_S);
    } else {
      out << ",,,,,,,,";
    }
    out << '\n';
  }
}

json config_json(const PipelineConfig& config, const VectorField& field, const RunInfo& info, double h, double dt) {
  json c;
  c["command"] = info.command;
  c["field"] = info.field_text;
  c["field_description"] = field.description();
  c["domain"] = {{"lo", to_json(field.domain().lo())}, {"hi", to_json(field.domain().hi())}};
  c["diameter"] = field.domain().diameter();
  c["declared_divergence_free"] = field.declared_divergence_free();
  c["mode"] = to_string(config.mode);
  c["samples"] = config.samples;
  c["refine"] = config.refine_rounds;
  c["top"] = config.keep_fraction;
  c["family"] = info.requested_family ? json(*info.requested_family) : json("auto");
  c["interior_directions"] = config.interior_directions;
  c["h_frac"] = config.h_frac;
  c["h"] = h;
  c["dt"] = dt;
  c["max_steps"] = config.max_steps;
  c["mu1"] = config.optimizer.mu1;
  c["mu2"] = config.optimizer.mu2;
  c["iters"] = config.optimizer.max_outer_iters;
  c["inner_tolerance"] = config.optimizer.inner_tolerance;
  c["inner_max_iters"] = config.optimizer.inner_max_iters;
  c["w"] = json::array({config.weights[0], config.weights[1], config.weights[2], config.weights[3]});
  c["rng_seed"] = config.rng_seed;
  c["optimise"] = config.optimise;
  return c;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

void write_surface_files(const fs::path& obj_path, const fs::path& csv_path, const VectorField& field,
                         const StreamSurfaceMesh& mesh) {
  std::ostringstream obj, csv;
  write_obj(mesh, obj);
  write_vertex_scalars(mesh, vertex_strain(field, mesh), csv);
  write_text_file(obj_path, obj.str());
  write_text_file(csv_path, csv.str());
}

namespace {

std::string padded(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", k);
  return buf;
}

void make_directories(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

void write_report_directory(const fs::path& dir, const VectorField& field, const PipelineConfig& config,
                            const PipelineResult& result, const RunInfo& info) {
  make_directories(dir / "surfaces");
  const Selection& sel = result.selection;

  std::vector<SeedEntry> ranked;
  ranked.reserve(sel.ranked.size());
  for (const RankedCandidate& r : sel.ranked) ranked.push_back({r.id, r.curve, r.energies});

  json report;
  report["config"] = config_json(config, field, info, result.h, result.dt);
  json attempted = json::array();
  for (CurveFamily f : sel.attempted) attempted.push_back(to_string(f));
  report["selection"] = {{"family", sel.ranked.empty() && sel.survivors.empty() ? json(nullptr)
                                                                               : json(to_string(sel.family))},
                         {"attempted", attempted},
                         {"candidates", sel.ranked.size()},
                         {"survivors", sel.survivors.size()}};
  json rounds = json::array();
  for (const RoundSummary& r : sel.rounds) {
    rounds.push_back({{"round", r.round}, {"samples", r.samples}, {"curves", r.curves}, {"best", r.best}});
  }
  report["rounds"] = std::move(rounds);

  json candidates = json::array();
  for (const RankedCandidate& r : sel.ranked) {
    candidates.push_back({{"rank", r.rank},
                          {"id", r.id},
                          {"round", r.round},
                          {"family", to_string(r.curve.family)},
                          {"length", r.curve.length()},
                          {"seed", to_json(r.curve.seed)},
                          {"energies", to_json(r.energies)}});
  }
  report["candidates"] = std::move(candidates);

  json surfaces = json::array();
  for (const OptimisedSurface& s : result.surfaces) {
    const std::string stem = padded(s.rank);
    json history = json::array();
    for (double e : s.result.E_S_history) history.push_back(e);
    surfaces.push_back({{"rank", s.rank},
                        {"id", s.candidate.id},
                        {"family", to_string(s.candidate.curve.family)},
                        {"E_S_initial", s.E_S_initial},
                        {"E_S_optimised", s.E_S_optimised},
                        {"best_iteration", s.result.best_index},
                        {"E_S_history", std::move(history)},
                        {"mesh", {{"m", s.result.mesh.m}, {"n", s.result.mesh.n}, {"valid", s.result.mesh.valid_count()}}},
                        {"obj", "surfaces/" + stem + ".obj"},
                        {"energy_csv", "surfaces/" + stem + ".energy.csv"},
                        {"log", "surfaces/" + stem + ".log.jsonl"}});
    write_surface_files(dir / "surfaces" / (stem + ".obj"), dir / "surfaces" / (stem + ".energy.csv"), field,
                        s.result.mesh);
    std::ostringstream log;
    write_log_jsonl(s.result.log, log);
    write_text_file(dir / "surfaces" / (stem + ".log.jsonl"), log.str());
  }
  report["surfaces"] = std::move(surfaces);
  if (info.error) report["error"] = *info.error;
  if (info.timings) report["timings"] = *info.timings;

  write_text_file(dir / "report.json", dump(report) + "\n");
  std::ostringstream csv;
  write_ranking_csv(csv, ranked);
  write_text_file(dir / "ranking.csv", csv.str());
  write_seeds(dir / "seeds.json", ranked, info.field_text);
}

}  // namespace strainsurf::io
