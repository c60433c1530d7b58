#include "core/initial.h"

#include <cmath>
#include <string>

#include "core/error.h"

namespace vpc {

double BumpSpec::value(const Vec6& z) const {
  const double qx = 1.0 - (z.head<3>() - xc).squaredNorm() / (r * r);
  const double qv = 1.0 - (z.tail<3>() - vc).squaredNorm() / (s * s);
  if (qx <= 0.0 || qv <= 0.0) return 0.0;
  return amplitude * qx * qx * qx * qv * qv * qv;
}

Vec6 BumpSpec::grad(const Vec6& z) const {
  Vec6 g = Vec6::Zero();
  const Vec3 dx = z.head<3>() - xc;
  const Vec3 dv = z.tail<3>() - vc;
  const double qx = 1.0 - dx.squaredNorm() / (r * r);
  const double qv = 1.0 - dv.squaredNorm() / (s * s);
  if (qx <= 0.0 || qv <= 0.0) return g;
  g.head<3>() = amplitude * (-6.0 / (r * r)) * qx * qx * qv * qv * qv * dx;
  g.tail<3>() = amplitude * (-6.0 / (s * s)) * qx * qx * qx * qv * qv * dv;
  return g;
}

Mat6 BumpSpec::hess(const Vec6& z) const {
  Mat6 h = Mat6::Zero();
  const Vec3 dx = z.head<3>() - xc;
  const Vec3 dv = z.tail<3>() - vc;
  const double qx = 1.0 - dx.squaredNorm() / (r * r);
  const double qv = 1.0 - dv.squaredNorm() / (s * s);
  if (qx <= 0.0 || qv <= 0.0) return h;
  const double r2 = r * r, s2 = s * s;
  h.topLeftCorner<3, 3>() =
      amplitude * qv * qv * qv *
      ((24.0 / (r2 * r2)) * qx * (dx * dx.transpose()) -
       (6.0 / r2) * qx * qx * Mat3::Identity());
  h.bottomRightCorner<3, 3>() =
      amplitude * qx * qx * qx *
      ((24.0 / (s2 * s2)) * qv * (dv * dv.transpose()) -
       (6.0 / s2) * qv * qv * Mat3::Identity());
  const Mat3 cross = amplitude * (36.0 / (r2 * s2)) * qx * qx * qv * qv *
                     (dx * dv.transpose());
  h.topRightCorner<3, 3>() = cross;
  h.bottomLeftCorner<3, 3>() = cross.transpose();
  return h;
}

double BumpSpec::mass() const {
  constexpr double j3 = 16.0 / 315.0;
  const double c = 4.0 * M_PI * j3;
  return amplitude * (c * r * r * r) * (c * s * s * s);
}

double BumpSpec::l2sq() const {
  constexpr double j6 = 46080.0 / 2027025.0;
  const double c = 4.0 * M_PI * j6;
  return amplitude * amplitude * (c * r * r * r) * (c * s * s * s);
}

double Ensemble::lp_norm(double p) const {
  if (p < 1.0)
    fail(ErrorKind::invalid_argument, "lp_norm requires p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f0) m = std::max(m, v);
    return m;
  }
  double acc = 0.0;
  for (double v : f0) acc += h6 * std::pow(v, p);
  return std::pow(acc, 1.0 / p);
}

double Ensemble::mass() const {
  double acc = 0.0;
  for (double v : w) acc += v;
  return acc;
}

Ensemble sample_initial(const BumpSpec& spec, int resolution, double pad,
                        int particle_cap) {
  if (resolution < 1)
    fail(ErrorKind::invalid_argument, "sampling resolution must be >= 1");
  if (pad <= 0.0)
    fail(ErrorKind::invalid_argument, "sampling pad must be positive");
  Ensemble e;
  const double rx = spec.r * pad;
  const double rv = spec.s * pad;
  const double hx = 2.0 * rx / resolution;
  const double hv = 2.0 * rv / resolution;
  e.h6 = hx * hx * hx * hv * hv * hv;
  e.spacing = hx;
  e.spacing_v = hv;
  for (int i0 = 0; i0 < resolution; ++i0)
    for (int i1 = 0; i1 < resolution; ++i1)
      for (int i2 = 0; i2 < resolution; ++i2)
        for (int i3 = 0; i3 < resolution; ++i3)
          for (int i4 = 0; i4 < resolution; ++i4)
            for (int i5 = 0; i5 < resolution; ++i5) {
              Vec6 z;
              z[0] = spec.xc.x() - rx + hx * (i0 + 0.5);
              z[1] = spec.xc.y() - rx + hx * (i1 + 0.5);
              z[2] = spec.xc.z() - rx + hx * (i2 + 0.5);
              z[3] = spec.vc.x() - rv + hv * (i3 + 0.5);
              z[4] = spec.vc.y() - rv + hv * (i4 + 0.5);
              z[5] = spec.vc.z() - rv + hv * (i5 + 0.5);
              const double f = spec.value(z);
              if (f <= 0.0) continue;
              e.z0.push_back(z);
              e.f0.push_back(f);
              e.w.push_back(f * e.h6);
              e.gradf0.push_back(spec.grad(z));
            }
  if (e.z0.empty())
    fail(ErrorKind::invalid_argument,
         "initial datum vanishes on the sampling grid");
  if (particle_cap > 0 && e.count() > particle_cap)
    fail(ErrorKind::invalid_argument,
         "sampling resolution yields " + std::to_string(e.count()) +
             " particles, above the cap " + std::to_string(particle_cap));
  return e;
}

}  // namespace vpc
