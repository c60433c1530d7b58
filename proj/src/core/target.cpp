#include "core/target.h"

#include <cmath>

#include "core/error.h"
#include "core/kernels.h"

namespace vpc {

void AnalyticTarget::values(const std::vector<Vec6>& z,
                            std::vector<double>* fd) const {
  fd->resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) (*fd)[k] = spec_.value(z[k]);
}

void AnalyticTarget::gradients(const std::vector<Vec6>& z,
                               std::vector<Vec6>* gfd) const {
  gfd->resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) (*gfd)[k] = spec_.grad(z[k]);
}

void AnalyticTarget::hessian_dot(const std::vector<Vec6>& z,
                                 const std::vector<Vec6>& dz,
                                 std::vector<Vec6>* out) const {
  if (dz.size() != z.size())
    fail(ErrorKind::invalid_argument, "hessian_dot size mismatch");
  out->resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    (*out)[k] = spec_.hess(z[k]) * dz[k];
}

ReferenceTarget::ReferenceTarget(const Ensemble& ens, const BumpSpec& f0,
                                 const ControlGrid& u_ref,
                                 const CoilSet& fields, int M_steps,
                                 double eps)
    : f0_(f0), u_ref_(u_ref), fields_(fields), eps_(eps), w_(ens.w) {
  const double l2 = ens.lp_norm(2.0);
  l2sq_ = l2 * l2;
  history_ = integrate_forward(ens, u_ref_, fields_, M_steps, eps_);
}

namespace {

// frozen-field rhs for one tracer batch at one stored level; tangent
// quantities are produced only when directions are supplied
struct TracerRate {
  std::vector<Vec6> dzeta;
  std::vector<Mat6> dR;
  std::vector<Vec6> d_dzeta;
  std::vector<Mat6> d_dR;
};

void tracer_rhs(const StateHistory& hist, int level,
                const std::vector<double>& w, const ControlGrid& u_ref,
                const CoilSet& fields, double eps, double t_mid,
                const std::vector<Vec6>& zeta, const std::vector<Mat6>& R,
                const std::vector<Vec6>* dzeta, const std::vector<Mat6>* dR,
                TracerRate* r) {
  const int n = static_cast<int>(zeta.size());
  const bool tang = dzeta != nullptr;
  static thread_local std::vector<Vec3> x, E, dE;
  static thread_local std::vector<Mat3> FJ, dFJ;
  static thread_local std::vector<double> uv;
  x.resize(n);
  for (int k = 0; k < n; ++k) x[k] = zeta[k].head<3>();
  if (tang) {
    static thread_local std::vector<Vec6> zero_src;
    static thread_local std::vector<Vec3> dx_t;
    zero_src.assign(hist.z[level].size(), Vec6::Zero());
    dx_t.resize(n);
    for (int k = 0; k < n; ++k) dx_t[k] = (*dzeta)[k].head<3>();
    field_at_tangent(hist.z[level], w, zero_src, eps, x, dx_t, &E, &FJ, &dE,
                     &dFJ);
  } else {
    field_at(hist.z[level], w, eps, x, &E, &FJ);
  }
  uv.resize(u_ref.N);
  u_ref.values_at(t_mid, uv.data());
  r->dzeta.resize(n);
  r->dR.resize(n);
  if (tang) {
    r->d_dzeta.resize(n);
    r->d_dR.resize(n);
  }
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int k = 0; k < n; ++k) {
    const Vec3 v = zeta[k].tail<3>();
    const Vec3 B = fields.superpose(uv.data(), x[k]);
    const Mat3 GB = fields.superpose_grad(uv.data(), x[k]);
    Mat6 A = Mat6::Zero();
    A.topRightCorner<3, 3>() = Mat3::Identity();
    A.bottomLeftCorner<3, 3>() = FJ[k] + skew(v) * GB;
    A.bottomRightCorner<3, 3>() = -skew(B);
    r->dzeta[k].head<3>() = v;
    r->dzeta[k].tail<3>() = E[k] + v.cross(B);
    r->dR[k] = A * R[k];
    if (tang) {
      const Vec3 dx = (*dzeta)[k].head<3>();
      const Vec3 dv = (*dzeta)[k].tail<3>();
      const Vec3 dB = GB * dx;
      const Mat3 dGB = fields.superpose_grad_dot(uv.data(), x[k], dx);
      Mat6 dA = Mat6::Zero();
      dA.bottomLeftCorner<3, 3>() = dFJ[k] + skew(dv) * GB + skew(v) * dGB;
      dA.bottomRightCorner<3, 3>() = -skew(dB);
      r->d_dzeta[k] = A * (*dzeta)[k];
      r->d_dR[k] = A * (*dR)[k] + dA * R[k];
    }
  }
}

}  // namespace

ReferenceTarget::Pullback ReferenceTarget::trace_back(
    const std::vector<Vec6>& q, const std::vector<Vec6>* dq,
    std::vector<Vec6>* dzeta0, std::vector<Mat6>* dR0) const {
  const int n = static_cast<int>(q.size());
  const bool tang = dq != nullptr;
  const int sweep = history_.levels / 2;  // tracer step = two stored levels
  const double dt = history_.T / sweep;
  std::vector<Vec6> zeta = q;
  std::vector<Mat6> R(n, Mat6::Identity());
  std::vector<Vec6> dz;
  std::vector<Mat6> dR;
  if (tang) {
    dz = *dq;
    dR.assign(n, Mat6::Zero());
  }
  TracerRate k1, k2, k3, k4;
  std::vector<Vec6> tz(n), tdz;
  std::vector<Mat6> tR(n), tdR;
  if (tang) {
    tdz.resize(n);
    tdR.resize(n);
  }
  auto stage = [&](double c, const TracerRate& kr) {
    for (int k = 0; k < n; ++k) {
      tz[k] = zeta[k] - c * dt * kr.dzeta[k];
      tR[k] = R[k] - c * dt * kr.dR[k];
      if (tang) {
        tdz[k] = dz[k] - c * dt * kr.d_dzeta[k];
        tdR[k] = dR[k] - c * dt * kr.d_dR[k];
      }
    }
  };
  for (int m = sweep; m > 0; --m) {
    const int lev = 2 * m;
    const double t_mid = (m - 0.5) * dt;
    tracer_rhs(history_, lev, w_, u_ref_, fields_, eps_, t_mid, zeta, R,
               tang ? &dz : nullptr, tang ? &dR : nullptr, &k1);
    stage(0.5, k1);
    tracer_rhs(history_, lev - 1, w_, u_ref_, fields_, eps_, t_mid, tz, tR,
               tang ? &tdz : nullptr, tang ? &tdR : nullptr, &k2);
    stage(0.5, k2);
    tracer_rhs(history_, lev - 1, w_, u_ref_, fields_, eps_, t_mid, tz, tR,
               tang ? &tdz : nullptr, tang ? &tdR : nullptr, &k3);
    stage(1.0, k3);
    tracer_rhs(history_, lev - 2, w_, u_ref_, fields_, eps_, t_mid, tz, tR,
               tang ? &tdz : nullptr, tang ? &tdR : nullptr, &k4);
    for (int k = 0; k < n; ++k) {
      zeta[k] -= (dt / 6.0) *
                 (k1.dzeta[k] + 2.0 * k2.dzeta[k] + 2.0 * k3.dzeta[k] + k4.dzeta[k]);
      R[k] -= (dt / 6.0) * (k1.dR[k] + 2.0 * k2.dR[k] + 2.0 * k3.dR[k] + k4.dR[k]);
      if (tang) {
        dz[k] -= (dt / 6.0) * (k1.d_dzeta[k] + 2.0 * k2.d_dzeta[k] +
                               2.0 * k3.d_dzeta[k] + k4.d_dzeta[k]);
        dR[k] -= (dt / 6.0) * (k1.d_dR[k] + 2.0 * k2.d_dR[k] +
                               2.0 * k3.d_dR[k] + k4.d_dR[k]);
      }
    }
  }
  if (tang) {
    *dzeta0 = std::move(dz);
    *dR0 = std::move(dR);
  }
  Pullback pb;
  pb.zeta0 = std::move(zeta);
  pb.R0 = std::move(R);
  return pb;
}

const ReferenceTarget::Pullback& ReferenceTarget::cached(
    const std::vector<Vec6>& q) const {
  if (cache_query_.size() == q.size()) {
    bool same = true;
    for (std::size_t k = 0; k < q.size() && same; ++k)
      same = (cache_query_[k] == q[k]);
    if (same) return cache_;
  }
  cache_ = trace_back(q, nullptr, nullptr, nullptr);
  cache_query_ = q;
  return cache_;
}

void ReferenceTarget::values(const std::vector<Vec6>& z,
                             std::vector<double>* fd) const {
  const Pullback& pb = cached(z);
  fd->resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    (*fd)[k] = f0_.value(pb.zeta0[k]);
}

void ReferenceTarget::gradients(const std::vector<Vec6>& z,
                                std::vector<Vec6>* gfd) const {
  const Pullback& pb = cached(z);
  gfd->resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    (*gfd)[k] = pb.R0[k].transpose() * f0_.grad(pb.zeta0[k]);
}

void ReferenceTarget::hessian_dot(const std::vector<Vec6>& z,
                                  const std::vector<Vec6>& dz,
                                  std::vector<Vec6>* out) const {
  if (dz.size() != z.size())
    fail(ErrorKind::invalid_argument, "hessian_dot size mismatch");
  std::vector<Vec6> dzeta0;
  std::vector<Mat6> dR0;
  const Pullback pb = trace_back(z, &dz, &dzeta0, &dR0);
  out->resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const Vec6 gf = f0_.grad(pb.zeta0[k]);
    (*out)[k] = dR0[k].transpose() * gf +
                pb.R0[k].transpose() * (f0_.hess(pb.zeta0[k]) * dzeta0[k]);
  }
}

}  // namespace vpc
