#include "strainsurf/grid.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "strainsurf/errors.hpp"

namespace strainsurf {

GridField::GridField(int nx, int ny, int nz, BoxDomain bounds, std::vector<Vec3f> samples)
    : dims_{nx, ny, nz}, bounds_(std::move(bounds)), samples_(std::move(samples)) {
  if (nx < 2 || ny < 2 || nz < 2) {
    throw Error(ErrorCode::InvalidArgument, "grid dimensions must be >= 2");
  }
  const std::size_t expected = static_cast<std::size_t>(nx) * ny * nz;
  if (samples_.size() != expected) {
    throw Error(ErrorCode::InvalidArgument, "grid expects " + std::to_string(expected) +
                                                " samples, got " + std::to_string(samples_.size()));
  }
  for (int k = 0; k < 3; ++k) spacing_[k] = bounds_.extent()[k] / (dims_[k] - 1);
}

Vec3d GridField::vertex(int i, int j, int k) const {
  const std::array<int, 3> idx{i, j, k};
  Vec3d p;
  for (int a = 0; a < 3; ++a) {
    p[a] = idx[a] == dims_[a] - 1 ? bounds_.hi()[a] : bounds_.lo()[a] + idx[a] * spacing_[a];
  }
  return p;
}

GridField::Cell GridField::locate(const Vec3d& p) const {
  Cell c;
  for (int a = 0; a < 3; ++a) {
    double t = (p[a] - bounds_.lo()[a]) / bounds_.extent()[a] * (dims_[a] - 1);
    t = std::clamp(t, 0.0, static_cast<double>(dims_[a] - 1));
    // Snap onto vertices so that sampling at a vertex is exact.
    const double r = std::round(t);
    if (std::abs(t - r) < 1e-9) t = r;
    int i = static_cast<int>(std::floor(t));
    if (i >= dims_[a] - 1) i = dims_[a] - 2;
    c.index[a] = i;
    c.frac[a] = t - i;
  }
  return c;
}

std::pair<Vec3d, Mat3d> GridField::value_and_jacobian(const Vec3d& p) const {
  const Cell c = locate(p);
  Vec3d value = Vec3d::Zero();
  Mat3d J = Mat3d::Zero();
  for (int corner = 0; corner < 8; ++corner) {
    const int di = corner & 1, dj = (corner >> 1) & 1, dk = (corner >> 2) & 1;
    const double wx = di ? c.frac.x() : 1.0 - c.frac.x();
    const double wy = dj ? c.frac.y() : 1.0 - c.frac.y();
    const double wz = dk ? c.frac.z() : 1.0 - c.frac.z();
    const double w = wx * wy * wz;
    // Derivatives of the weights with respect to x, y and z.
    const double gx = (di ? 1.0 : -1.0) * wy * wz / spacing_.x();
    const double gy = (dj ? 1.0 : -1.0) * wx * wz / spacing_.y();
    const double gz = (dk ? 1.0 : -1.0) * wx * wy / spacing_.z();
    const Vec3d s = sample(c.index[0] + di, c.index[1] + dj, c.index[2] + dk).cast<double>();
    if (w != 0.0) value += w * s;
    J.col(0) += gx * s;
    J.col(1) += gy * s;
    J.col(2) += gz * s;
  }
  return {value, J};
}

Vec3d GridField::value(const Vec3d& p) const { return value_and_jacobian(p).first; }

Mat3d GridField::jacobian(const Vec3d& p) const { return value_and_jacobian(p).second; }

GridField GridField::resample(const VectorField& field, int nx, int ny, int nz) {
  std::vector<Vec3f> samples;
  samples.reserve(static_cast<std::size_t>(nx) * ny * nz);
  const BoxDomain& dom = field.domain();
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const Vec3d t(double(i) / (nx - 1), double(j) / (ny - 1), double(k) / (nz - 1));
        const Vec3d p = dom.lo() + t.cwiseProduct(dom.extent());
        samples.push_back(field.eval(dom.clamp(p)).cast<float>());
      }
    }
  }
  return {nx, ny, nz, dom, std::move(samples)};
}

namespace vfgrid {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary VFGRID I/O assumes a little-endian host");

template <typename T>
T read_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorCode::Io, "truncated binary VFGRID stream");
  return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

GridField read_ascii(std::istream& in) {
  std::string magic;
  int version = 0, nx = 0, ny = 0, nz = 0;
  Vec3d lo, hi;
  in >> magic >> version >> nx >> ny >> nz >> lo.x() >> lo.y() >> lo.z() >> hi.x() >> hi.y() >>
      hi.z();
  if (!in || magic != "VFGRID" || version != 1) {
    throw Error(ErrorCode::Io, "bad VFGRID header");
  }
  if (nx < 2 || ny < 2 || nz < 2) throw Error(ErrorCode::Io, "VFGRID dimensions must be >= 2");
  const std::size_t count = static_cast<std::size_t>(nx) * ny * nz;
  std::vector<Vec3f> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    double vx, vy, vz;
    if (!(in >> vx >> vy >> vz)) {
      throw Error(ErrorCode::Io, "VFGRID truncated at sample " + std::to_string(i));
    }
    samples[i] = Vec3f(static_cast<float>(vx), static_cast<float>(vy), static_cast<float>(vz));
  }
  return {nx, ny, nz, BoxDomain(lo, hi), std::move(samples)};
}

GridField read_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "VFGB", 4) != 0) throw Error(ErrorCode::Io, "bad VFGB magic");
  const int nx = read_le<std::int32_t>(in);
  const int ny = read_le<std::int32_t>(in);
  const int nz = read_le<std::int32_t>(in);
  if (nx < 2 || ny < 2 || nz < 2) throw Error(ErrorCode::Io, "VFGB dimensions must be >= 2");
  Vec3d lo, hi;
  for (int k = 0; k < 3; ++k) lo[k] = read_le<double>(in);
  for (int k = 0; k < 3; ++k) hi[k] = read_le<double>(in);
  const std::size_t count = static_cast<std::size_t>(nx) * ny * nz;
  std::vector<Vec3f> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < 3; ++k) samples[i][k] = read_le<float>(in);
  }
  return {nx, ny, nz, BoxDomain(lo, hi), std::move(samples)};
}

GridField read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open grid file '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  try {
    if (std::memcmp(magic, "VFGB", 4) == 0) return read_binary(in);
    return read_ascii(in);
  } catch (const Error& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
}

void write_ascii(const GridField& grid, std::ostream& out) {
  out.precision(17);
  out << "VFGRID 1 " << grid.nx() << ' ' << grid.ny() << ' ' << grid.nz();
  for (int k = 0; k < 3; ++k) out << ' ' << grid.bounds().lo()[k];
  for (int k = 0; k < 3; ++k) out << ' ' << grid.bounds().hi()[k];
  out << '\n';
  out.precision(std::numeric_limits<float>::max_digits10);
  for (const Vec3f& s : grid.samples()) out << s.x() << ' ' << s.y() << ' ' << s.z() << '\n';
}

void write_binary(const GridField& grid, std::ostream& out) {
  out.write("VFGB", 4);
  write_le<std::int32_t>(out, grid.nx());
  write_le<std::int32_t>(out, grid.ny());
  write_le<std::int32_t>(out, grid.nz());
  for (int k = 0; k < 3; ++k) write_le<double>(out, grid.bounds().lo()[k]);
  for (int k = 0; k < 3; ++k) write_le<double>(out, grid.bounds().hi()[k]);
  for (const Vec3f& s : grid.samples()) {
    for (int k = 0; k < 3; ++k) write_le<float>(out, s[k]);
  }
}

VectorField as_field(GridField grid, bool divergence_free, std::string description) {
  BoxDomain dom = grid.bounds();
  return {std::make_shared<GridField>(std::move(grid)), dom, divergence_free,
          std::move(description)};
}

}  // namespace vfgrid

}  // namespace strainsurf
