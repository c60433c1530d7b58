#pragma once

#include "core/ensemble.h"
#include "core/geom.h"

namespace vpc {

// Compactly supported product bump
//   f(x, v) = A (1 - |x - xc|^2 / r^2)_+^3 (1 - |v - vc|^2 / s^2)_+^3
// which is C^2 with support B_r(xc) x B_s(vc).
struct BumpSpec {
  double amplitude = 1.0;
  double r = 1.0;  // position support radius
  double s = 1.0;  // velocity support radius
  Vec3 xc = Vec3::Zero();
  Vec3 vc = Vec3::Zero();

  double value(const Vec6& z) const;
  Vec6 grad(const Vec6& z) const;
  Mat6 hess(const Vec6& z) const;

  // closed forms: int_0^1 (1 - t^2)^m t^2 dt = Gamma(3/2) Gamma(m+1) /
  // (2 Gamma(m + 5/2)) gives radial factors 16/315 (m = 3) and
  // 46080/2027025 (m = 6) for mass and squared L^2 norm.
  double mass() const;
  double l2sq() const;
};

// Midpoint-rule sampling on a uniform grid over the padded support box;
// zero-density points are dropped. resolution = points per axis.
Ensemble sample_initial(const BumpSpec& spec, int resolution, double pad,
                        int particle_cap);

}  // namespace vpc
