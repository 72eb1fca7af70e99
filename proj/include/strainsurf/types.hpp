#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace strainsurf {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Vec3f = Vec3<float>;

}  // namespace strainsurf
