#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "strainsurf/types.hpp"

namespace strainsurf {

// ---------------------------------------------------------------------------
// Pointwise Jacobian algebra
// ---------------------------------------------------------------------------

/// Symmetric part (J + J^T)/2 of a square matrix: the strain rate.
template <typename Derived>
auto strain_part(const Eigen::MatrixBase<Derived>& J) {
  return (typename Derived::Scalar(0.5) * (J + J.transpose())).eval();
}

/// Antisymmetric part (J - J^T)/2: the vorticity.
template <typename Derived>
auto vorticity_part(const Eigen::MatrixBase<Derived>& J) {
  return (typename Derived::Scalar(0.5) * (J - J.transpose())).eval();
}

template <typename Scalar>
struct StrainVorticity {
  Mat3<Scalar> strain;
  Mat3<Scalar> vorticity;
};

template <typename Derived>
StrainVorticity<typename Derived::Scalar> strain_vorticity(const Eigen::MatrixBase<Derived>& J) {
  return {strain_part(J), vorticity_part(J)};
}

/// Second-order arc-length form K with u^T K u = <Ju, Ju> + <u, J J u>.
///
/// With J_ij = dv_i/dp_j and column vectors, S_st = J u, so the quadratic
/// term is J^T J (equal to J J^T in the row-vector convention).
/// K is not symmetric in general; quadratic forms use sym(K).
template <typename Derived>
auto k_matrix(const Eigen::MatrixBase<Derived>& J) {
  return (J.transpose() * J + J * J).eval();
}

template <typename Derived>
auto k_form(const Eigen::MatrixBase<Derived>& J) {
  return strain_part(k_matrix(J));
}

// ---------------------------------------------------------------------------
// Domain
// ---------------------------------------------------------------------------

/// Axis-aligned box face. `index` = 2*axis + (upper ? 1 : 0).
struct BoxFace {
  int index = 0;
  int axis = 0;
  bool upper = false;
  double coordinate = 0.0;
  Vec3d inward_normal = Vec3d::Zero();
  std::array<Vec3d, 2> tangent_basis{Vec3d::Zero(), Vec3d::Zero()};

  std::string name() const;
};

class BoxDomain {
 public:
  BoxDomain(const Vec3d& lo, const Vec3d& hi);

  static BoxDomain unit() { return {Vec3d::Zero(), Vec3d::Ones()}; }

  const Vec3d& lo() const { return lo_; }
  const Vec3d& hi() const { return hi_; }
  Vec3d extent() const { return hi_ - lo_; }
  Vec3d center() const { return 0.5 * (lo_ + hi_); }
  double diameter() const { return diam_; }

  /// Absolute slack used for every inside/outside decision.
  double tolerance() const { return 1e-10 * diam_; }

  bool contains(const Vec3d& p) const;
  bool contains(const Vec3d& p, double slack) const;
  Vec3d clamp(const Vec3d& p) const;

  BoxFace face(int index) const;
  std::array<BoxFace, 6> faces() const;
  bool on_face(const BoxFace& face, const Vec3d& p) const;

  /// Largest a in [0,1] with p + a*(q - p) inside; p must be inside.
  double exit_fraction(const Vec3d& p, const Vec3d& q) const;

  /// Intersection with another box; the result is clipped to this box.
  BoxDomain clipped(const Vec3d& lo, const Vec3d& hi) const;

  bool operator==(const BoxDomain&) const = default;

 private:
  Vec3d lo_;
  Vec3d hi_;
  double diam_ = 0.0;
};

// ---------------------------------------------------------------------------
// Vector field
// ---------------------------------------------------------------------------

/// Backing implementation of a steady field. Implementations are immutable.
class FieldModel {
 public:
  virtual ~FieldModel() = default;
  virtual Vec3d value(const Vec3d& p) const = 0;
  virtual Mat3d jacobian(const Vec3d& p) const = 0;
  virtual std::pair<Vec3d, Mat3d> value_and_jacobian(const Vec3d& p) const {
    return {value(p), jacobian(p)};
  }
};

/// Steady 3D vector field restricted to a box domain.
///
/// Cheap to copy (shared immutable backing); safe for concurrent reads.
/// Every query outside the domain throws PointOutsideDomain.
class VectorField {
 public:
  VectorField(std::shared_ptr<const FieldModel> model, BoxDomain domain, bool divergence_free,
              std::string description);

  Vec3d eval(const Vec3d& p) const;
  Mat3d jacobian(const Vec3d& p) const;
  std::pair<Vec3d, Mat3d> eval_with_jacobian(const Vec3d& p) const;
  double divergence(const Vec3d& p) const { return jacobian(p).trace(); }

  const BoxDomain& domain() const { return domain_; }
  bool declared_divergence_free() const { return divergence_free_; }
  const std::string& description() const { return description_; }
  const FieldModel& model() const { return *model_; }

  VectorField with_domain(const BoxDomain& domain) const;

 private:
  void check_inside(const Vec3d& p) const;

  std::shared_ptr<const FieldModel> model_;
  BoxDomain domain_;
  bool divergence_free_ = false;
  std::string description_;
};

struct DivergenceStats {
  std::size_t samples = 0;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  Vec3d worst_point = Vec3d::Zero();
};

/// Samples |tr J| at `count` uniform-random points (deterministic in `seed`).
DivergenceStats divergence_stats(const VectorField& field, std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Built-in analytic fields
// ---------------------------------------------------------------------------

namespace catalogue {

/// v = [x + y^2 + 2z^3, 10x^3 + 2y, 2x^2 y - 3z] on the unit box.
VectorField fig3();
VectorField fig3(const BoxDomain& domain);

/// Linear field v = diag(a,b,c) p.  Throws unless a + b + c = 0.
VectorField linear_diag(double a, double b, double c, const BoxDomain& domain);

/// General linear field v = A p (+ offset); divergence-free iff tr A = 0.
VectorField linear(const Mat3d& A, const Vec3d& offset, const BoxDomain& domain);

/// Rigid rotation v = axis x p about the origin.
VectorField rotation(const Vec3d& axis, const BoxDomain& domain);

VectorField constant(const Vec3d& value, const BoxDomain& domain);

/// Arnold-Beltrami-Childress flow, a nonlinear divergence-free field.
VectorField abc(double a, double b, double c, const BoxDomain& domain);

/// Saddle with through-flow: v = (x - cx, -(y - cy), w).
VectorField saddle(double w, const BoxDomain& domain);

/// Resolves "fig3", "rotation", "rotation:ax,ay,az", "constant:a,b,c",
/// "linear-diag:a,b,c", "abc", "abc:A,B,C", "saddle", "saddle:w".
/// Uses the entry's default domain unless `domain` is given.
VectorField by_name(const std::string& spec, const BoxDomain* domain = nullptr);

}  // namespace catalogue

}  // namespace strainsurf
