#include "core/kernels.h"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "core/error.h"

namespace vpc {

namespace {

struct Softening {
  double eps2;
};

// shared scalar factors s3 = S^{-3/2}, s5, s7 with S = |d|^2 + eps^2
inline void kernel_scalars(const Vec3& d, double eps2, double* s3, double* s5,
                           double* s7) {
  const double S = d.squaredNorm() + eps2;
  const double inv = 1.0 / S;
  const double r = std::sqrt(S);
  *s3 = inv / r;
  if (s5) *s5 = *s3 * inv;
  if (s7) *s7 = *s3 * inv * inv;
}

}  // namespace

KernelEval coulomb_force_kernel(const Vec3& d, double eps) {
  if (eps == 0.0 && d.squaredNorm() == 0.0)
    fail(ErrorKind::numerical, "singular interaction kernel at zero separation");
  KernelEval out;
  double s3, s5;
  kernel_scalars(d, eps * eps, &s3, &s5, nullptr);
  out.K = s3 * d;
  out.grad = s3 * Mat3::Identity() - 3.0 * s5 * (d * d.transpose());
  return out;
}

Mat3 coulomb_kernel_hess_dot(const Vec3& d, const Vec3& a, double eps) {
  double s3, s5, s7;
  kernel_scalars(d, eps * eps, &s3, &s5, &s7);
  const double da = d.dot(a);
  return -3.0 * s5 *
             (da * Mat3::Identity() + a * d.transpose() + d * a.transpose()) +
         15.0 * s7 * da * (d * d.transpose());
}

ChiEval chi_eval(const Vec6& z, const CutoffChi& chi) {
  if (chi.plateau <= 0.0)
    fail(ErrorKind::invalid_argument, "cutoff plateau radius must be positive");
  ChiEval out;
  const double r = z.norm();
  if (r <= chi.plateau) {
    out.value = 1.0;
    return out;
  }
  if (r >= 2.0 * chi.plateau) {
    out.value = 0.0;
    return out;
  }
  const double s = (r - chi.plateau) / chi.plateau;
  const double q = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  const double dq = -30.0 * s * s * (1.0 - 2.0 * s + s * s);
  const double d2q = -60.0 * s * (1.0 - 3.0 * s + 2.0 * s * s);
  out.value = q;
  const Vec6 zhat = z / r;
  out.grad = (dq / chi.plateau) * zhat;
  out.hess = (d2q / (chi.plateau * chi.plateau)) * (zhat * zhat.transpose()) +
             (dq / (chi.plateau * r)) *
                 (Mat6::Identity() - zhat * zhat.transpose());
  return out;
}

namespace {

int g_workers = 0;  // 0: library default (all available)

inline int resolve_workers() {
#ifdef _OPENMP
  return g_workers > 0 ? g_workers : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

int set_workers(int n) {
  g_workers = n > 0 ? n : 0;
  return resolve_workers();
}

int workers() { return resolve_workers(); }

void pair_force(const std::vector<Vec6>& z, const std::vector<double>& w,
                double eps, std::vector<Vec3>* E, std::vector<Mat3>* FJ) {
  const int n = static_cast<int>(z.size());
  const double eps2 = eps * eps;
  if (E) E->assign(n, Vec3::Zero());
  if (FJ) FJ->assign(n, Mat3::Zero());
#pragma omp parallel for schedule(static) num_threads(resolve_workers())
  for (int k = 0; k < n; ++k) {
    Vec3 e = Vec3::Zero();
    Mat3 fj = Mat3::Zero();
    const Vec3 xk = z[k].head<3>();
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const Vec3 d = xk - z[j].head<3>();
      double s3, s5;
      kernel_scalars(d, eps2, &s3, &s5, nullptr);
      e += (w[j] * s3) * d;
      if (FJ)
        fj += (w[j] * s3) * Mat3::Identity() -
              (3.0 * w[j] * s5) * (d * d.transpose());
    }
    if (E) (*E)[k] = e;
    if (FJ) (*FJ)[k] = fj;
  }
}

void pair_force_tangent(const std::vector<Vec6>& z, const std::vector<double>& w,
                        const std::vector<Vec6>& dz, double eps,
                        std::vector<Vec3>* E, std::vector<Mat3>* FJ,
                        std::vector<Vec3>* dE, std::vector<Mat3>* dFJ) {
  const int n = static_cast<int>(z.size());
  const double eps2 = eps * eps;
  E->assign(n, Vec3::Zero());
  FJ->assign(n, Mat3::Zero());
  dE->assign(n, Vec3::Zero());
  dFJ->assign(n, Mat3::Zero());
#pragma omp parallel for schedule(static) num_threads(resolve_workers())
  for (int k = 0; k < n; ++k) {
    Vec3 e = Vec3::Zero(), de = Vec3::Zero();
    Mat3 fj = Mat3::Zero(), dfj = Mat3::Zero();
    const Vec3 xk = z[k].head<3>();
    const Vec3 dxk = dz[k].head<3>();
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const Vec3 d = xk - z[j].head<3>();
      const Vec3 ed = dxk - dz[j].head<3>();
      double s3, s5, s7;
      kernel_scalars(d, eps2, &s3, &s5, &s7);
      const double dd = d.dot(ed);
      e += (w[j] * s3) * d;
      fj += (w[j] * s3) * Mat3::Identity() -
            (3.0 * w[j] * s5) * (d * d.transpose());
      de += (w[j] * s3) * ed - (3.0 * w[j] * s5 * dd) * d;
      dfj += (-3.0 * w[j] * s5) *
                 (dd * Mat3::Identity() + ed * d.transpose() + d * ed.transpose()) +
             (15.0 * w[j] * s7 * dd) * (d * d.transpose());
    }
    (*E)[k] = e;
    (*FJ)[k] = fj;
    (*dE)[k] = de;
    (*dFJ)[k] = dfj;
  }
}

void pair_phi(const std::vector<Vec6>& z, const std::vector<Vec3>& C, double eps,
              std::vector<double>* phi, std::vector<Vec3>* grad_phi) {
  const int n = static_cast<int>(z.size());
  const double eps2 = eps * eps;
  phi->assign(n, 0.0);
  if (grad_phi) grad_phi->assign(n, Vec3::Zero());
#pragma omp parallel for schedule(static) num_threads(resolve_workers())
  for (int k = 0; k < n; ++k) {
    double p = 0.0;
    Vec3 gp = Vec3::Zero();
    const Vec3 xk = z[k].head<3>();
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const Vec3 d = xk - z[j].head<3>();
      double s3, s5;
      kernel_scalars(d, eps2, &s3, &s5, nullptr);
      const double dc = d.dot(C[j]);
      p += s3 * dc;
      if (grad_phi) gp += s3 * C[j] - (3.0 * s5 * dc) * d;
    }
    (*phi)[k] = p;
    if (grad_phi) (*grad_phi)[k] = gp;
  }
}

void pair_phi_tangent(const std::vector<Vec6>& z, const std::vector<Vec6>& dz,
                      const std::vector<Vec3>& C, const std::vector<Vec3>& dC,
                      double eps, std::vector<double>* phi,
                      std::vector<Vec3>* grad_phi, std::vector<double>* dphi,
                      std::vector<Vec3>* dgrad_phi) {
  const int n = static_cast<int>(z.size());
  const double eps2 = eps * eps;
  phi->assign(n, 0.0);
  grad_phi->assign(n, Vec3::Zero());
  dphi->assign(n, 0.0);
  dgrad_phi->assign(n, Vec3::Zero());
#pragma omp parallel for schedule(static) num_threads(resolve_workers())
  for (int k = 0; k < n; ++k) {
    double p = 0.0, dp = 0.0;
    Vec3 gp = Vec3::Zero(), dgp = Vec3::Zero();
    const Vec3 xk = z[k].head<3>();
    const Vec3 dxk = dz[k].head<3>();
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const Vec3 d = xk - z[j].head<3>();
      const Vec3 ed = dxk - dz[j].head<3>();
      double s3, s5, s7;
      kernel_scalars(d, eps2, &s3, &s5, &s7);
      const double dc = d.dot(C[j]);
      const double dd = d.dot(ed);
      const double ec = ed.dot(C[j]);
      const double ddc = d.dot(dC[j]);
      p += s3 * dc;
      gp += s3 * C[j] - (3.0 * s5 * dc) * d;
      dp += s3 * ec - 3.0 * s5 * dd * dc + s3 * ddc;
      dgp += -3.0 * s5 * (dd * C[j] + ec * d + dc * ed) +
             (15.0 * s7 * dd * dc) * d + s3 * dC[j] - (3.0 * s5 * ddc) * d;
    }
    (*phi)[k] = p;
    (*grad_phi)[k] = gp;
    (*dphi)[k] = dp;
    (*dgrad_phi)[k] = dgp;
  }
}

void field_at(const std::vector<Vec6>& sources, const std::vector<double>& w,
              double eps, const std::vector<Vec3>& targets,
              std::vector<Vec3>* E, std::vector<Mat3>* FJ) {
  const int n = static_cast<int>(targets.size());
  const int m = static_cast<int>(sources.size());
  const double eps2 = eps * eps;
  if (E) E->assign(n, Vec3::Zero());
  if (FJ) FJ->assign(n, Mat3::Zero());
#pragma omp parallel for schedule(static) num_threads(resolve_workers())
  for (int k = 0; k < n; ++k) {
    Vec3 e = Vec3::Zero();
    Mat3 fj = Mat3::Zero();
    for (int j = 0; j < m; ++j) {
      const Vec3 d = targets[k] - sources[j].head<3>();
      double s3, s5;
      kernel_scalars(d, eps2, &s3, &s5, nullptr);
      e += (w[j] * s3) * d;
      if (FJ)
        fj += (w[j] * s3) * Mat3::Identity() -
              (3.0 * w[j] * s5) * (d * d.transpose());
    }
    if (E) (*E)[k] = e;
    if (FJ) (*FJ)[k] = fj;
  }
}

void field_at_tangent(const std::vector<Vec6>& sources,
                      const std::vector<double>& w,
                      const std::vector<Vec6>& dsources, double eps,
                      const std::vector<Vec3>& targets,
                      const std::vector<Vec3>& dtargets, std::vector<Vec3>* E,
                      std::vector<Mat3>* FJ, std::vector<Vec3>* dE,
                      std::vector<Mat3>* dFJ) {
  const int n = static_cast<int>(targets.size());
  const int m = static_cast<int>(sources.size());
  const double eps2 = eps * eps;
  E->assign(n, Vec3::Zero());
  if (FJ) FJ->assign(n, Mat3::Zero());
  dE->assign(n, Vec3::Zero());
  if (dFJ) dFJ->assign(n, Mat3::Zero());
#pragma omp parallel for schedule(static) num_threads(resolve_workers())
  for (int k = 0; k < n; ++k) {
    Vec3 e = Vec3::Zero(), de = Vec3::Zero();
    Mat3 fj = Mat3::Zero(), dfj = Mat3::Zero();
    for (int j = 0; j < m; ++j) {
      const Vec3 d = targets[k] - sources[j].head<3>();
      const Vec3 ed = dtargets[k] - dsources[j].head<3>();
      double s3, s5, s7;
      kernel_scalars(d, eps2, &s3, &s5, &s7);
      const double dd = d.dot(ed);
      e += (w[j] * s3) * d;
      de += (w[j] * s3) * ed - (3.0 * w[j] * s5 * dd) * d;
      if (FJ)
        fj += (w[j] * s3) * Mat3::Identity() -
              (3.0 * w[j] * s5) * (d * d.transpose());
      if (dFJ)
        dfj += (-3.0 * w[j] * s5) * (dd * Mat3::Identity() + ed * d.transpose() +
                                     d * ed.transpose()) +
               (15.0 * w[j] * s7 * dd) * (d * d.transpose());
    }
    (*E)[k] = e;
    (*dE)[k] = de;
    if (FJ) (*FJ)[k] = fj;
    if (dFJ) (*dFJ)[k] = dfj;
  }
}

void self_field(const std::vector<Vec6>& z, const std::vector<double>& w,
                double eps, const Vec3& x, double* psi, Vec3* E, Mat3* hess) {
  const double eps2 = eps * eps;
  double p = 0.0;
  Vec3 e = Vec3::Zero();
  Mat3 h = Mat3::Zero();
  for (std::size_t j = 0; j < z.size(); ++j) {
    const Vec3 d = x - z[j].head<3>();
    const double S = d.squaredNorm() + eps2;
    if (S == 0.0)
      fail(ErrorKind::numerical, "potential evaluated on a particle with eps = 0");
    double s3, s5;
    kernel_scalars(d, eps2, &s3, &s5, nullptr);
    p += w[j] / std::sqrt(S);
    e -= (w[j] * s3) * d;
    h -= (w[j] * s3) * Mat3::Identity() - (3.0 * w[j] * s5) * (d * d.transpose());
  }
  if (psi) *psi = p;
  if (E) *E = e;
  if (hess) *hess = h;
}

double phi_field(const std::vector<Vec6>& z, const std::vector<Vec3>& C,
                 double eps, const Vec3& x) {
  const double eps2 = eps * eps;
  double p = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const Vec3 d = x - z[j].head<3>();
    double s3;
    kernel_scalars(d, eps2, &s3, nullptr, nullptr);
    p += s3 * d.dot(C[j]);
  }
  return p;
}

}  // namespace vpc
