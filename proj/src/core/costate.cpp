#include "core/costate.h"

#include "core/error.h"

namespace vpc {

namespace {

struct SweepState {
  std::vector<double> g;
  std::vector<Vec6> Gf;  // full-terminal transported gradient
  std::vector<Vec6> Gt;  // tracking-only transporter
};

struct SweepRate {
  std::vector<double> dg;
  std::vector<Vec6> dGf;
  std::vector<Vec6> dGt;
};

// source terms at one stored level for the current sweep state
void costate_rhs(const StateHistory& hist, int level, const Ensemble& ens,
                 const CutoffChi& chi, double eps, const SweepState& s,
                 SweepRate* r) {
  const std::vector<Vec6>& z = hist.z[level];
  const std::vector<Mat6>& J = hist.J[level];
  const int n = static_cast<int>(z.size());
  static thread_local std::vector<Vec3> Cf, Ct;
  static thread_local std::vector<double> phi_f, phi_t;
  static thread_local std::vector<Vec3> gphi_f, gphi_t;
  Cf.resize(n);
  Ct.resize(n);
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int k = 0; k < n; ++k) {
    Cf[k] = ens.w[k] * eulerian_grad(J[k], s.Gf[k]).tail<3>();
    Ct[k] = ens.w[k] * eulerian_grad(J[k], s.Gt[k]).tail<3>();
  }
  pair_phi(z, Cf, eps, &phi_f, &gphi_f);
  pair_phi(z, Ct, eps, &phi_t, &gphi_t);
  r->dg.resize(n);
  r->dGf.resize(n);
  r->dGt.resize(n);
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int k = 0; k < n; ++k) {
    const ChiEval ce = chi_eval(z[k], chi);
    r->dg[k] = phi_f[k] * ce.value;
    Vec6 src_f = phi_f[k] * ce.grad;
    src_f.head<3>() += ce.value * gphi_f[k];
    r->dGf[k] = J[k].transpose() * src_f;
    Vec6 src_t = phi_t[k] * ce.grad;
    src_t.head<3>() += ce.value * gphi_t[k];
    r->dGt[k] = J[k].transpose() * src_t;
  }
}

void axpy(const SweepState& base, double c, const SweepRate& r,
          SweepState* out) {
  const int n = static_cast<int>(base.g.size());
  out->g.resize(n);
  out->Gf.resize(n);
  out->Gt.resize(n);
  for (int k = 0; k < n; ++k) {
    out->g[k] = base.g[k] + c * r.dg[k];
    out->Gf[k] = base.Gf[k] + c * r.dGf[k];
    out->Gt[k] = base.Gt[k] + c * r.dGt[k];
  }
}

}  // namespace

CutoffChi default_cutoff(const StateHistory& hist) {
  CutoffChi chi;
  chi.plateau = hist.R_Z * 1.25;
  return chi;
}

Vec6 eulerian_grad(const Mat6& J, const Vec6& G) {
  return solve_transposed(J, G);
}

CostateHistory solve_costate(const StateHistory& hist, const Ensemble& ens,
                             const Target& target, const CutoffChi& chi,
                             double eps) {
  const int n = ens.count();
  if (hist.particle_count() != n)
    fail(ErrorKind::invalid_argument,
         "state history and ensemble particle counts differ");
  CostateHistory ch;
  ch.T = hist.T;
  ch.M_sweep = 2 * hist.M_steps;
  const int stride = hist.levels / ch.M_sweep;  // = 2 by construction
  const double dt = ch.T / ch.M_sweep;
  ch.times.resize(ch.M_sweep + 1);
  ch.g.resize(ch.M_sweep + 1);
  ch.G_full.resize(ch.M_sweep + 1);
  ch.G_track.resize(ch.M_sweep + 1);

  const std::vector<Vec6>& zT = hist.z.back();
  std::vector<double> fd(n);
  std::vector<Vec6> gfd(n);
  target.values(zT, &fd);
  target.gradients(zT, &gfd);
  SweepState s;
  s.g.resize(n);
  s.Gf.resize(n);
  s.Gt.resize(n);
  for (int k = 0; k < n; ++k) {
    s.g[k] = ens.f0[k] - fd[k];
    const Vec6 carried = hist.J.back()[k].transpose() * gfd[k];
    s.Gf[k] = ens.gradf0[k] - carried;
    s.Gt[k] = -carried;
  }
  auto record = [&](int m) {
    ch.times[m] = m * dt;
    ch.g[m] = s.g;
    ch.G_full[m] = s.Gf;
    ch.G_track[m] = s.Gt;
  };
  record(ch.M_sweep);

  SweepRate k1, k2, k3, k4;
  SweepState tmp;
  for (int m = ch.M_sweep; m > 0; --m) {
    const int lev = m * stride;
    costate_rhs(hist, lev, ens, chi, eps, s, &k1);
    axpy(s, -0.5 * dt, k1, &tmp);
    costate_rhs(hist, lev - stride / 2, ens, chi, eps, tmp, &k2);
    axpy(s, -0.5 * dt, k2, &tmp);
    costate_rhs(hist, lev - stride / 2, ens, chi, eps, tmp, &k3);
    axpy(s, -dt, k3, &tmp);
    costate_rhs(hist, lev - stride, ens, chi, eps, tmp, &k4);
    for (int k = 0; k < n; ++k) {
      s.g[k] -= (dt / 6.0) * (k1.dg[k] + 2.0 * k2.dg[k] + 2.0 * k3.dg[k] + k4.dg[k]);
      s.Gf[k] -= (dt / 6.0) * (k1.dGf[k] + 2.0 * k2.dGf[k] + 2.0 * k3.dGf[k] + k4.dGf[k]);
      s.Gt[k] -= (dt / 6.0) * (k1.dGt[k] + 2.0 * k2.dGt[k] + 2.0 * k3.dGt[k] + k4.dGt[k]);
    }
    record(m - 1);
  }
  return ch;
}

}  // namespace vpc
