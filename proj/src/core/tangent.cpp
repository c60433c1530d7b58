#include "core/tangent.h"

#include <string>

#include "core/error.h"
#include "core/kernels.h"
#include "core/moments.h"

namespace vpc {

namespace {

void require_same_grid(const ControlGrid& u, const ControlGrid& h) {
  if (u.N != h.N || u.M != h.M || u.T != h.T)
    fail(ErrorKind::invalid_argument,
         "direction control grid does not match the base control grid");
}

struct FwdState {
  std::vector<Vec6> z;
  std::vector<Mat6> J;
  std::vector<Vec6> dz;
  std::vector<Mat6> dJ;
};

struct FwdRate {
  std::vector<Vec6> kz;
  std::vector<Mat6> kJ;
  std::vector<Vec6> kdz;
  std::vector<Mat6> kdJ;
};

void fwd_rhs(const FwdState& s, const std::vector<double>& w,
             const double* uv, const double* hv, const CoilSet& fields,
             double eps, FwdRate* r) {
  const int n = static_cast<int>(s.z.size());
  static thread_local std::vector<Vec3> E, dE;
  static thread_local std::vector<Mat3> FJ, dFJ;
  pair_force_tangent(s.z, w, s.dz, eps, &E, &FJ, &dE, &dFJ);
  r->kz.resize(n);
  r->kJ.resize(n);
  r->kdz.resize(n);
  r->kdJ.resize(n);
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int k = 0; k < n; ++k) {
    const Vec3 x = s.z[k].head<3>();
    const Vec3 v = s.z[k].tail<3>();
    const Vec3 dx = s.dz[k].head<3>();
    const Vec3 dv = s.dz[k].tail<3>();
    Vec3 B = Vec3::Zero(), H = Vec3::Zero();
    Mat3 GB = Mat3::Zero(), GH = Mat3::Zero(), GB2 = Mat3::Zero();
    for (int i = 0; i < fields.count(); ++i) {
      const Vec3 mi = fields.coils[i].field(x);
      const Mat3 gi = fields.coils[i].grad(x);
      B += uv[i] * mi;
      GB += uv[i] * gi;
      H += hv[i] * mi;
      GH += hv[i] * gi;
      GB2 += uv[i] * fields.coils[i].grad_dot(x, dx);
    }
    r->kz[k].head<3>() = v;
    r->kz[k].tail<3>() = E[k] + v.cross(B);
    Mat6 A = Mat6::Zero();
    A.topRightCorner<3, 3>() = Mat3::Identity();
    A.bottomLeftCorner<3, 3>() = FJ[k] + skew(v) * GB;
    A.bottomRightCorner<3, 3>() = -skew(B);
    r->kJ[k] = A * s.J[k];
    const Vec3 dB = GB * dx + H;
    r->kdz[k].head<3>() = dv;
    r->kdz[k].tail<3>() = dE[k] + dv.cross(B) + v.cross(dB);
    Mat6 dA = Mat6::Zero();
    dA.bottomLeftCorner<3, 3>() = dFJ[k] + skew(dv) * GB + skew(v) * (GB2 + GH);
    dA.bottomRightCorner<3, 3>() = -skew(dB);
    r->kdJ[k] = dA * s.J[k] + A * s.dJ[k];
  }
}

void fwd_axpy(const FwdState& base, double c, const FwdRate& r,
              FwdState* out) {
  const int n = static_cast<int>(base.z.size());
  out->z.resize(n);
  out->J.resize(n);
  out->dz.resize(n);
  out->dJ.resize(n);
  for (int k = 0; k < n; ++k) {
    out->z[k] = base.z[k] + c * r.kz[k];
    out->J[k] = base.J[k] + c * r.kJ[k];
    out->dz[k] = base.dz[k] + c * r.kdz[k];
    out->dJ[k] = base.dJ[k] + c * r.kdJ[k];
  }
}

}  // namespace

TangentStateHistory solve_linearized_state(const Ensemble& ens,
                                           const ControlGrid& u,
                                           const ControlGrid& h,
                                           const CoilSet& fields, int M_steps,
                                           double eps) {
  require_same_grid(u, h);
  if (M_steps < 1)
    fail(ErrorKind::invalid_argument, "M_steps must be >= 1");
  TangentStateHistory out;
  StateHistory& hist = out.base;
  hist.T = u.T;
  hist.M_steps = M_steps;
  hist.levels = 4 * M_steps;
  const int n = ens.count();
  const double dt = hist.T / hist.levels;
  FwdState s;
  s.z = ens.z0;
  s.J.assign(n, Mat6::Identity());
  s.dz.assign(n, Vec6::Zero());
  s.dJ.assign(n, Mat6::Zero());
  std::vector<double> uv(u.N), hv(u.N);
  auto record = [&](double t) {
    hist.times.push_back(t);
    hist.z.push_back(s.z);
    hist.J.push_back(s.J);
    out.dz.push_back(s.dz);
    out.dJ.push_back(s.dJ);
    for (const Vec6& p : s.z) {
      hist.R = std::max(hist.R, p.head<3>().norm());
      hist.R_Z = std::max(hist.R_Z, p.norm());
    }
  };
  record(0.0);
  FwdRate k1, k2, k3, k4;
  FwdState tmp;
  for (int l = 0; l < hist.levels; ++l) {
    const double t = l * dt;
    u.values_at(t + 0.5 * dt, uv.data());
    h.values_at(t + 0.5 * dt, hv.data());
    fwd_rhs(s, ens.w, uv.data(), hv.data(), fields, eps, &k1);
    fwd_axpy(s, 0.5 * dt, k1, &tmp);
    fwd_rhs(tmp, ens.w, uv.data(), hv.data(), fields, eps, &k2);
    fwd_axpy(s, 0.5 * dt, k2, &tmp);
    fwd_rhs(tmp, ens.w, uv.data(), hv.data(), fields, eps, &k3);
    fwd_axpy(s, dt, k3, &tmp);
    fwd_rhs(tmp, ens.w, uv.data(), hv.data(), fields, eps, &k4);
    for (int k = 0; k < n; ++k) {
      s.z[k] += (dt / 6.0) * (k1.kz[k] + 2.0 * k2.kz[k] + 2.0 * k3.kz[k] + k4.kz[k]);
      s.J[k] += (dt / 6.0) * (k1.kJ[k] + 2.0 * k2.kJ[k] + 2.0 * k3.kJ[k] + k4.kJ[k]);
      s.dz[k] += (dt / 6.0) * (k1.kdz[k] + 2.0 * k2.kdz[k] + 2.0 * k3.kdz[k] + k4.kdz[k]);
      s.dJ[k] += (dt / 6.0) * (k1.kdJ[k] + 2.0 * k2.kdJ[k] + 2.0 * k3.kdJ[k] + k4.kdJ[k]);
    }
    record((l + 1) * dt);
  }
  return out;
}

namespace {

struct AdjState {
  std::vector<double> g, dg;
  std::vector<Vec6> Gf, dGf, Gt, dGt;
};

struct AdjRate {
  std::vector<double> kg, kdg;
  std::vector<Vec6> kGf, kdGf, kGt, kdGt;
};

// one transporter family: base pair (phi, Gphi) plus tangents, folded with
// the cutoff by the exact product rule
void fold_sources(const std::vector<Vec6>& z, const std::vector<Mat6>& J,
                  const std::vector<Vec6>& dz, const std::vector<Mat6>& dJ,
                  const std::vector<double>& phi,
                  const std::vector<Vec3>& gphi,
                  const std::vector<double>& dphi,
                  const std::vector<Vec3>& dgphi, const CutoffChi& chi,
                  std::vector<double>* kg, std::vector<double>* kdg,
                  std::vector<Vec6>* kG, std::vector<Vec6>* kdG) {
  const int n = static_cast<int>(z.size());
  if (kg) {
    kg->resize(n);
    kdg->resize(n);
  }
  kG->resize(n);
  kdG->resize(n);
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int k = 0; k < n; ++k) {
    const ChiEval ce = chi_eval(z[k], chi);
    const double dchi = ce.grad.dot(dz[k]);
    const Vec6 dgradchi = ce.hess * dz[k];
    if (kg) {
      (*kg)[k] = phi[k] * ce.value;
      (*kdg)[k] = dphi[k] * ce.value + phi[k] * dchi;
    }
    Vec6 src = phi[k] * ce.grad;
    src.head<3>() += ce.value * gphi[k];
    Vec6 dsrc = dphi[k] * ce.grad + phi[k] * dgradchi;
    dsrc.head<3>() += dchi * gphi[k] + ce.value * dgphi[k];
    (*kG)[k] = J[k].transpose() * src;
    (*kdG)[k] = dJ[k].transpose() * src + J[k].transpose() * dsrc;
  }
}

void adj_rhs(const TangentStateHistory& ts, int level, const Ensemble& ens,
             const CutoffChi& chi, double eps, const AdjState& s, AdjRate* r) {
  const std::vector<Vec6>& z = ts.base.z[level];
  const std::vector<Mat6>& J = ts.base.J[level];
  const std::vector<Vec6>& dz = ts.dz[level];
  const std::vector<Mat6>& dJ = ts.dJ[level];
  const int n = static_cast<int>(z.size());
  static thread_local std::vector<Vec3> Cf, dCf, Ct, dCt;
  Cf.resize(n);
  dCf.resize(n);
  Ct.resize(n);
  dCt.resize(n);
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int k = 0; k < n; ++k) {
    const Vec6 yf = solve_transposed(J[k], s.Gf[k]);
    const Vec6 dyf =
        solve_transposed(J[k], s.dGf[k] - dJ[k].transpose() * yf);
    const Vec6 yt = solve_transposed(J[k], s.Gt[k]);
    const Vec6 dyt =
        solve_transposed(J[k], s.dGt[k] - dJ[k].transpose() * yt);
    Cf[k] = ens.w[k] * yf.tail<3>();
    dCf[k] = ens.w[k] * dyf.tail<3>();
    Ct[k] = ens.w[k] * yt.tail<3>();
    dCt[k] = ens.w[k] * dyt.tail<3>();
  }
  static thread_local std::vector<double> phi, dphi;
  static thread_local std::vector<Vec3> gphi, dgphi;
  pair_phi_tangent(z, dz, Cf, dCf, eps, &phi, &gphi, &dphi, &dgphi);
  fold_sources(z, J, dz, dJ, phi, gphi, dphi, dgphi, chi, &r->kg, &r->kdg,
               &r->kGf, &r->kdGf);
  pair_phi_tangent(z, dz, Ct, dCt, eps, &phi, &gphi, &dphi, &dgphi);
  fold_sources(z, J, dz, dJ, phi, gphi, dphi, dgphi, chi, nullptr, nullptr,
               &r->kGt, &r->kdGt);
}

void adj_axpy(const AdjState& base, double c, const AdjRate& r,
              AdjState* out) {
  const int n = static_cast<int>(base.g.size());
  out->g.resize(n);
  out->dg.resize(n);
  out->Gf.resize(n);
  out->dGf.resize(n);
  out->Gt.resize(n);
  out->dGt.resize(n);
  for (int k = 0; k < n; ++k) {
    out->g[k] = base.g[k] + c * r.kg[k];
    out->dg[k] = base.dg[k] + c * r.kdg[k];
    out->Gf[k] = base.Gf[k] + c * r.kGf[k];
    out->dGf[k] = base.dGf[k] + c * r.kdGf[k];
    out->Gt[k] = base.Gt[k] + c * r.kGt[k];
    out->dGt[k] = base.dGt[k] + c * r.kdGt[k];
  }
}

}  // namespace

TangentCostateHistory solve_linearized_costate(const TangentStateHistory& ts,
                                               const Ensemble& ens,
                                               const Target& target,
                                               const CutoffChi& chi,
                                               double eps) {
  const int n = ens.count();
  const StateHistory& hist = ts.base;
  if (hist.particle_count() != n)
    fail(ErrorKind::invalid_argument,
         "state history and ensemble particle counts differ");
  TangentCostateHistory ch;
  ch.T = hist.T;
  ch.M_sweep = 2 * hist.M_steps;
  const int stride = hist.levels / ch.M_sweep;
  const double dt = ch.T / ch.M_sweep;
  const auto grow = [&](auto& field) { field.resize(ch.M_sweep + 1); };
  ch.times.resize(ch.M_sweep + 1);
  grow(ch.g);
  grow(ch.dg);
  grow(ch.G_full);
  grow(ch.dG_full);
  grow(ch.G_track);
  grow(ch.dG_track);

  const std::vector<Vec6>& zT = hist.z.back();
  const std::vector<Vec6>& dzT = ts.dz.back();
  std::vector<double> fd(n);
  std::vector<Vec6> gfd(n), hdot(n);
  target.values(zT, &fd);
  target.gradients(zT, &gfd);
  target.hessian_dot(zT, dzT, &hdot);
  AdjState s;
  s.g.resize(n);
  s.dg.resize(n);
  s.Gf.resize(n);
  s.dGf.resize(n);
  s.Gt.resize(n);
  s.dGt.resize(n);
  for (int k = 0; k < n; ++k) {
    const Mat6& JT = hist.J.back()[k];
    const Mat6& dJT = ts.dJ.back()[k];
    s.g[k] = ens.f0[k] - fd[k];
    s.dg[k] = -gfd[k].dot(dzT[k]);
    const Vec6 carried = JT.transpose() * gfd[k];
    const Vec6 dcarried = dJT.transpose() * gfd[k] + JT.transpose() * hdot[k];
    s.Gf[k] = ens.gradf0[k] - carried;
    s.dGf[k] = -dcarried;
    s.Gt[k] = -carried;
    s.dGt[k] = -dcarried;
  }
  auto record = [&](int m) {
    ch.times[m] = m * dt;
    ch.g[m] = s.g;
    ch.dg[m] = s.dg;
    ch.G_full[m] = s.Gf;
    ch.dG_full[m] = s.dGf;
    ch.G_track[m] = s.Gt;
    ch.dG_track[m] = s.dGt;
  };
  record(ch.M_sweep);

  AdjRate k1, k2, k3, k4;
  AdjState tmp;
  for (int m = ch.M_sweep; m > 0; --m) {
    const int lev = m * stride;
    adj_rhs(ts, lev, ens, chi, eps, s, &k1);
    adj_axpy(s, -0.5 * dt, k1, &tmp);
    adj_rhs(ts, lev - stride / 2, ens, chi, eps, tmp, &k2);
    adj_axpy(s, -0.5 * dt, k2, &tmp);
    adj_rhs(ts, lev - stride / 2, ens, chi, eps, tmp, &k3);
    adj_axpy(s, -dt, k3, &tmp);
    adj_rhs(ts, lev - stride, ens, chi, eps, tmp, &k4);
    for (int k = 0; k < n; ++k) {
      s.g[k] -= (dt / 6.0) * (k1.kg[k] + 2.0 * k2.kg[k] + 2.0 * k3.kg[k] + k4.kg[k]);
      s.dg[k] -= (dt / 6.0) * (k1.kdg[k] + 2.0 * k2.kdg[k] + 2.0 * k3.kdg[k] + k4.kdg[k]);
      s.Gf[k] -= (dt / 6.0) * (k1.kGf[k] + 2.0 * k2.kGf[k] + 2.0 * k3.kGf[k] + k4.kGf[k]);
      s.dGf[k] -= (dt / 6.0) * (k1.kdGf[k] + 2.0 * k2.kdGf[k] + 2.0 * k3.kdGf[k] + k4.kdGf[k]);
      s.Gt[k] -= (dt / 6.0) * (k1.kGt[k] + 2.0 * k2.kGt[k] + 2.0 * k3.kGt[k] + k4.kGt[k]);
      s.dGt[k] -= (dt / 6.0) * (k1.kdGt[k] + 2.0 * k2.kdGt[k] + 2.0 * k3.kdGt[k] + k4.kdGt[k]);
    }
    record(m - 1);
  }
  return ch;
}

MomentTangentSeries moment_series_tangent(const TangentStateHistory& ts,
                                          const TangentCostateHistory& cs,
                                          const CoilSet& fields,
                                          const std::vector<double>& w) {
  const StateHistory& hist = ts.base;
  const int n = hist.particle_count();
  const int N = fields.count();
  const int stride = hist.levels / cs.M_sweep;
  MomentTangentSeries out;
  out.p.assign(N, std::vector<double>(cs.M_sweep + 1, 0.0));
  out.dp.assign(N, std::vector<double>(cs.M_sweep + 1, 0.0));
  std::vector<double> acc_p(static_cast<std::size_t>(n) * N);
  std::vector<double> acc_dp(static_cast<std::size_t>(n) * N);
  for (int m = 0; m <= cs.M_sweep; ++m) {
    const int lev = m * stride;
    const std::vector<Vec6>& z = hist.z[lev];
    const std::vector<Mat6>& J = hist.J[lev];
    const std::vector<Vec6>& dz = ts.dz[lev];
    const std::vector<Mat6>& dJ = ts.dJ[lev];
#pragma omp parallel for schedule(static) num_threads(workers())
    for (int k = 0; k < n; ++k) {
      const Vec6 y = solve_transposed(J[k], cs.G_track[m][k]);
      const Vec6 dy = solve_transposed(
          J[k], cs.dG_track[m][k] - dJ[k].transpose() * y);
      const Vec3 c = y.tail<3>();
      const Vec3 dc = dy.tail<3>();
      const Vec3 x = z[k].head<3>();
      const Vec3 v = z[k].tail<3>();
      const Vec3 dx = dz[k].head<3>();
      const Vec3 dv = dz[k].tail<3>();
      for (int i = 0; i < N; ++i) {
        const Vec3 mi = fields.coils[i].field(x);
        const Mat3 gmi = fields.coils[i].grad(x);
        const Vec3 vxm = v.cross(mi);
        const Vec3 dvxm = dv.cross(mi) + v.cross(gmi * dx);
        acc_p[static_cast<std::size_t>(k) * N + i] = vxm.dot(c);
        acc_dp[static_cast<std::size_t>(k) * N + i] =
            dvxm.dot(c) + vxm.dot(dc);
      }
    }
    for (int i = 0; i < N; ++i) {
      double sp = 0.0, sdp = 0.0;
      for (int k = 0; k < n; ++k) {
        sp += w[k] * acc_p[static_cast<std::size_t>(k) * N + i];
        sdp += w[k] * acc_dp[static_cast<std::size_t>(k) * N + i];
      }
      out.p[i][m] = -sp;
      out.dp[i][m] = -sdp;
    }
  }
  return out;
}

double second_derivative(const Ensemble& ens, const Target& target,
                         const CoilSet& fields, const ControlGrid& u,
                         const std::vector<double>& lambda,
                         const ControlGrid& h_dir, const ControlGrid& h_pair,
                         int M_steps, double eps, const CutoffChi& chi) {
  require_same_grid(u, h_dir);
  require_same_grid(u, h_pair);
  if (static_cast<int>(lambda.size()) != u.N)
    fail(ErrorKind::invalid_argument,
         "regularization weight count differs from coil count");
  const TangentStateHistory ts =
      solve_linearized_state(ens, u, h_dir, fields, M_steps, eps);
  const TangentCostateHistory cs =
      solve_linearized_costate(ts, ens, target, chi, eps);
  const MomentTangentSeries ms =
      moment_series_tangent(ts, cs, fields, ens.w);
  const double cell = u.T / u.M;
  double acc = 0.0;
  for (int i = 0; i < u.N; ++i) {
    const std::vector<double> dpbar = cell_average_simpson(ms.dp[i], u.M);
    for (int m = 0; m < u.M; ++m)
      acc += (lambda[i] * h_dir.at(i, m) - dpbar[m]) * h_pair.at(i, m) * cell;
  }
  return acc;
}

}  // namespace vpc
