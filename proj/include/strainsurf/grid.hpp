#pragma once

#include <filesystem>
#include <vector>

#include "strainsurf/field.hpp"

namespace strainsurf {

/// Vertex-sampled field on a structured grid, x-fastest ordering.
///
/// Values are trilinearly interpolated; the Jacobian is the exact
/// derivative of that interpolant. Samples are stored as float32 so the
/// ASCII and binary VFGRID variants load to identical fields.
class GridField final : public FieldModel {
 public:
  GridField(int nx, int ny, int nz, BoxDomain bounds, std::vector<Vec3f> samples);

  Vec3d value(const Vec3d& p) const override;
  Mat3d jacobian(const Vec3d& p) const override;
  std::pair<Vec3d, Mat3d> value_and_jacobian(const Vec3d& p) const override;

  int nx() const { return dims_[0]; }
  int ny() const { return dims_[1]; }
  int nz() const { return dims_[2]; }
  const BoxDomain& bounds() const { return bounds_; }
  const std::vector<Vec3f>& samples() const { return samples_; }

  Vec3d vertex(int i, int j, int k) const;
  const Vec3f& sample(int i, int j, int k) const {
    return samples_[static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(dims_[0]) *
                        (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k)];
  }

  /// Samples `field` at every vertex of an nx*ny*nz grid over its domain.
  static GridField resample(const VectorField& field, int nx, int ny, int nz);

 private:
  struct Cell {
    std::array<int, 3> index;
    Vec3d frac;
  };
  Cell locate(const Vec3d& p) const;

  std::array<int, 3> dims_;
  BoxDomain bounds_;
  Vec3d spacing_;
  std::vector<Vec3f> samples_;
};

namespace vfgrid {

/// Reads either variant; the binary one is detected by its `VFGB` magic.
GridField read(const std::filesystem::path& path);
GridField read_ascii(std::istream& in);
GridField read_binary(std::istream& in);

void write_ascii(const GridField& grid, std::ostream& out);
void write_binary(const GridField& grid, std::ostream& out);

/// Wraps a grid as a VectorField over the grid bounds.
VectorField as_field(GridField grid, bool divergence_free, std::string description);

}  // namespace vfgrid

}  // namespace strainsurf
