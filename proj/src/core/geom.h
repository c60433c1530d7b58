#pragma once

#include <Eigen/Dense>

namespace vpc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
      -a.y(), a.x(), 0.0;
  return s;
}

// y with J^T y = rhs; used to move transported initial-coordinate gradients
// to the current phase-space point: grad_z q(t, z) = J^{-T} grad_{z0} q.
inline Vec6 solve_transposed(const Mat6& J, const Vec6& rhs) {
  return J.transpose().partialPivLu().solve(rhs);
}

inline Vec6 make_vec6(const Vec3& x, const Vec3& v) {
  Vec6 z;
  z << x, v;
  return z;
}

}  // namespace vpc
