#include <cmath>
#include <sstream>
#include <vector>

#include "strainsurf/errors.hpp"
#include "strainsurf/field.hpp"

namespace strainsurf::catalogue {

namespace {

class Fig3Field final : public FieldModel {
 public:
  Vec3d value(const Vec3d& p) const override {
    const double x = p.x(), y = p.y(), z = p.z();
    return {x + y * y + 2.0 * z * z * z, 10.0 * x * x * x + 2.0 * y, 2.0 * x * x * y - 3.0 * z};
  }
  Mat3d jacobian(const Vec3d& p) const override {
    const double x = p.x(), y = p.y(), z = p.z();
    Mat3d J;
    J << 1.0, 2.0 * y, 6.0 * z * z,
         30.0 * x * x, 2.0, 0.0,
         4.0 * x * y, 2.0 * x * x, -3.0;
    return J;
  }
};

class LinearField final : public FieldModel {
 public:
  LinearField(const Mat3d& A, const Vec3d& b) : A_(A), b_(b) {}
  Vec3d value(const Vec3d& p) const override { return A_ * p + b_; }
  Mat3d jacobian(const Vec3d&) const override { return A_; }

 private:
  Mat3d A_;
  Vec3d b_;
};

class AbcField final : public FieldModel {
 public:
  AbcField(double a, double b, double c) : a_(a), b_(b), c_(c) {}
  Vec3d value(const Vec3d& p) const override {
    const double x = p.x(), y = p.y(), z = p.z();
    return {a_ * std::sin(z) + c_ * std::cos(y), b_ * std::sin(x) + a_ * std::cos(z),
            c_ * std::sin(y) + b_ * std::cos(x)};
  }
  Mat3d jacobian(const Vec3d& p) const override {
    const double x = p.x(), y = p.y(), z = p.z();
    Mat3d J;
    J << 0.0, -c_ * std::sin(y), a_ * std::cos(z),
         b_ * std::cos(x), 0.0, -a_ * std::sin(z),
         -b_ * std::sin(x), c_ * std::cos(y), 0.0;
    return J;
  }

 private:
  double a_, b_, c_;
};

std::vector<double> parse_numbers(const std::string& text, std::size_t expected,
                                  const std::string& name) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "catalogue " + name + ": bad number '" + item + "'");
    }
  }
  if (out.size() != expected) {
    throw Error(ErrorCode::InvalidArgument,
                "catalogue " + name + " expects " + std::to_string(expected) + " parameters");
  }
  return out;
}

BoxDomain centred_box(double half) { return {Vec3d::Constant(-half), Vec3d::Constant(half)}; }

}  // namespace

VectorField fig3() { return fig3(BoxDomain::unit()); }

VectorField fig3(const BoxDomain& domain) {
  return {std::make_shared<Fig3Field>(), domain, true, "catalogue:fig3"};
}

VectorField linear_diag(double a, double b, double c, const BoxDomain& domain) {
  if (std::abs(a + b + c) > 1e-12 * (std::abs(a) + std::abs(b) + std::abs(c) + 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "linear-diag requires a + b + c = 0");
  }
  std::ostringstream os;
  os.precision(17);
  os << "catalogue:linear-diag:" << a << "," << b << "," << c;
  return {std::make_shared<LinearField>(Vec3d(a, b, c).asDiagonal(), Vec3d::Zero()), domain, true,
          os.str()};
}

VectorField linear(const Mat3d& A, const Vec3d& offset, const BoxDomain& domain) {
  const bool div_free = std::abs(A.trace()) <= 1e-12 * (A.norm() + 1.0);
  return {std::make_shared<LinearField>(A, offset), domain, div_free, "linear"};
}

VectorField rotation(const Vec3d& axis, const BoxDomain& domain) {
  Mat3d W;
  W << 0.0, -axis.z(), axis.y(),
       axis.z(), 0.0, -axis.x(),
       -axis.y(), axis.x(), 0.0;
  std::ostringstream os;
  os.precision(17);
  os << "catalogue:rotation:" << axis.x() << "," << axis.y() << "," << axis.z();
  return {std::make_shared<LinearField>(W, Vec3d::Zero()), domain, true, os.str()};
}

VectorField constant(const Vec3d& value, const BoxDomain& domain) {
  std::ostringstream os;
  os.precision(17);
  os << "catalogue:constant:" << value.x() << "," << value.y() << "," << value.z();
  return {std::make_shared<LinearField>(Mat3d::Zero(), value), domain, true, os.str()};
}

VectorField abc(double a, double b, double c, const BoxDomain& domain) {
  std::ostringstream os;
  os.precision(17);
  os << "catalogue:abc:" << a << "," << b << "," << c;
  return {std::make_shared<AbcField>(a, b, c), domain, true, os.str()};
}

VectorField saddle(double w, const BoxDomain& domain) {
  const Vec3d c = domain.center();
  Mat3d A = Vec3d(1.0, -1.0, 0.0).asDiagonal();
  std::ostringstream os;
  os.precision(17);
  os << "catalogue:saddle:" << w;
  return {std::make_shared<LinearField>(A, Vec3d(-c.x(), c.y(), w)), domain, true, os.str()};
}

VectorField by_name(const std::string& spec, const BoxDomain* domain) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto pick = [&](const BoxDomain& fallback) { return domain ? *domain : fallback; };

  if (name == "fig3") {
    return fig3(pick(BoxDomain::unit()));
  }
  if (name == "rotation") {
    Vec3d axis = Vec3d::UnitZ();
    if (!args.empty()) {
      auto v = parse_numbers(args, 3, name);
      axis = Vec3d(v[0], v[1], v[2]);
    }
    return rotation(axis, pick(centred_box(1.0)));
  }
  if (name == "constant") {
    Vec3d value = Vec3d::UnitX();
    if (!args.empty()) {
      auto v = parse_numbers(args, 3, name);
      value = Vec3d(v[0], v[1], v[2]);
    }
    return constant(value, pick(BoxDomain::unit()));
  }
  if (name == "linear-diag") {
    std::vector<double> v{1.0, 1.0, -2.0};
    if (!args.empty()) v = parse_numbers(args, 3, name);
    return linear_diag(v[0], v[1], v[2], pick(centred_box(1.0)));
  }
  if (name == "abc") {
    std::vector<double> v{std::sqrt(3.0), std::sqrt(2.0), 1.0};
    if (!args.empty()) v = parse_numbers(args, 3, name);
    return abc(v[0], v[1], v[2], pick(BoxDomain(Vec3d::Zero(), Vec3d::Constant(2.0))));
  }
  if (name == "saddle") {
    double w = 1.0;
    if (!args.empty()) w = parse_numbers(args, 1, name)[0];
    return saddle(w, pick(centred_box(1.0)));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown catalogue field '" + name + "'");
}

}  // namespace strainsurf::catalogue
