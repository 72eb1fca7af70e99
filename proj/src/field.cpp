#include "strainsurf/field.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "strainsurf/errors.hpp"

namespace strainsurf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::EvalDomainError: return "EvalDomainError";
    case ErrorCode::NoConeExists: return "NoConeExists";
    case ErrorCode::NoAdmissibleDirection: return "NoAdmissibleDirection";
    case ErrorCode::CurveTooShort: return "CurveTooShort";
    case ErrorCode::ZeroLengthCurve: return "ZeroLengthCurve";
    case ErrorCode::ZeroVelocityOnCurve: return "ZeroVelocityOnCurve";
    case ErrorCode::MissingNormal: return "MissingNormal";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::LeftDomain: return "LeftDomain";
    case ErrorCode::EmptySurface: return "EmptySurface";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::InsufficientValidPoints: return "InsufficientValidPoints";
    case ErrorCode::NoCandidatesFound: return "NoCandidatesFound";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// BoxDomain
// ---------------------------------------------------------------------------

std::string BoxFace::name() const {
  static const char* axes = "xyz";
  return std::string(1, axes[axis]) + (upper ? "+" : "-");
}

BoxDomain::BoxDomain(const Vec3d& lo, const Vec3d& hi) : lo_(lo), hi_(hi) {
  if (!(lo.array() < hi.array()).all() || !lo.allFinite() || !hi.allFinite()) {
    std::ostringstream os;
    os << "box requires min < max componentwise, got [" << lo.transpose() << "] .. ["
       << hi.transpose() << "]";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  diam_ = (hi - lo).norm();
}

bool BoxDomain::contains(const Vec3d& p) const { return contains(p, tolerance()); }

bool BoxDomain::contains(const Vec3d& p, double slack) const {
  return (p.array() >= lo_.array() - slack).all() && (p.array() <= hi_.array() + slack).all();
}

Vec3d BoxDomain::clamp(const Vec3d& p) const { return p.cwiseMax(lo_).cwiseMin(hi_); }

BoxFace BoxDomain::face(int index) const {
  if (index < 0 || index > 5) {
    throw Error(ErrorCode::InvalidArgument, "face index must be in 0..5");
  }
  BoxFace f;
  f.index = index;
  f.axis = index / 2;
  f.upper = (index % 2) == 1;
  f.coordinate = f.upper ? hi_[f.axis] : lo_[f.axis];
  f.inward_normal = Vec3d::Zero();
  f.inward_normal[f.axis] = f.upper ? -1.0 : 1.0;
  // Tangent basis: the two remaining coordinate axes in increasing order.
  int k = 0;
  for (int a = 0; a < 3; ++a) {
    if (a == f.axis) continue;
    f.tangent_basis[k] = Vec3d::Unit(a);
    ++k;
  }
  return f;
}

std::array<BoxFace, 6> BoxDomain::faces() const {
  std::array<BoxFace, 6> out;
  for (int i = 0; i < 6; ++i) out[i] = face(i);
  return out;
}

bool BoxDomain::on_face(const BoxFace& f, const Vec3d& p) const {
  return std::abs(p[f.axis] - f.coordinate) <= tolerance() && contains(p);
}

double BoxDomain::exit_fraction(const Vec3d& p, const Vec3d& q) const {
  double a = 1.0;
  const Vec3d d = q - p;
  for (int k = 0; k < 3; ++k) {
    if (d[k] > 0.0 && q[k] > hi_[k]) a = std::min(a, (hi_[k] - p[k]) / d[k]);
    if (d[k] < 0.0 && q[k] < lo_[k]) a = std::min(a, (lo_[k] - p[k]) / d[k]);
  }
  return std::clamp(a, 0.0, 1.0);
}

BoxDomain BoxDomain::clipped(const Vec3d& lo, const Vec3d& hi) const {
  Vec3d l = lo.cwiseMax(lo_);
  Vec3d h = hi.cwiseMin(hi_);
  // Keep a sliver when the requested box only touches this one.
  for (int k = 0; k < 3; ++k) {
    if (!(l[k] < h[k])) {
      const double mid = std::clamp(0.5 * (lo[k] + hi[k]), lo_[k], hi_[k]);
      const double half = 1e-6 * (hi_[k] - lo_[k]);
      l[k] = std::max(lo_[k], mid - half);
      h[k] = std::min(hi_[k], mid + half);
    }
  }
  return {l, h};
}

// ---------------------------------------------------------------------------
// VectorField
// ---------------------------------------------------------------------------

VectorField::VectorField(std::shared_ptr<const FieldModel> model, BoxDomain domain,
                         bool divergence_free, std::string description)
    : model_(std::move(model)),
      domain_(std::move(domain)),
      divergence_free_(divergence_free),
      description_(std::move(description)) {
  if (!model_) throw Error(ErrorCode::InvalidArgument, "null field model");
}

void VectorField::check_inside(const Vec3d& p) const {
  if (!domain_.contains(p)) {
    std::ostringstream os;
    os << "point (" << p.transpose() << ") outside [" << domain_.lo().transpose() << "] .. ["
       << domain_.hi().transpose() << "]";
    throw Error(ErrorCode::PointOutsideDomain, os.str());
  }
}

Vec3d VectorField::eval(const Vec3d& p) const {
  check_inside(p);
  return model_->value(p);
}

Mat3d VectorField::jacobian(const Vec3d& p) const {
  check_inside(p);
  return model_->jacobian(p);
}

std::pair<Vec3d, Mat3d> VectorField::eval_with_jacobian(const Vec3d& p) const {
  check_inside(p);
  return model_->value_and_jacobian(p);
}

VectorField VectorField::with_domain(const BoxDomain& domain) const {
  return {model_, domain, divergence_free_, description_};
}

DivergenceStats divergence_stats(const VectorField& field, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const BoxDomain& dom = field.domain();
  DivergenceStats stats;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    Vec3d p;
    for (int k = 0; k < 3; ++k) p[k] = dom.lo()[k] + unit(rng) * dom.extent()[k];
    const double div = std::abs(field.divergence(p));
    sum += div;
    if (div > stats.max_abs || i == 0) {
      stats.max_abs = div;
      stats.worst_point = p;
    }
  }
  stats.samples = count;
  stats.mean_abs = count ? sum / static_cast<double>(count) : 0.0;
  return stats;
}

}  // namespace strainsurf
