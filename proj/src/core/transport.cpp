#include "core/transport.h"

#include <cmath>
#include <random>
#include <string>

#include "core/error.h"
#include "core/kernels.h"

namespace vpc {

namespace {

// batched right-hand side over all particles at one Runge-Kutta stage;
// J-transport (dJ = A J) is evaluated only when J/dJ are supplied
void rhs_all(const std::vector<Vec6>& z, const std::vector<Mat6>* J,
             const std::vector<double>& w, const double* uv,
             const CoilSet& fields, double eps, std::vector<Vec6>* dz,
             std::vector<Mat6>* dJ) {
  const int n = static_cast<int>(z.size());
  static thread_local std::vector<Vec3> E;
  static thread_local std::vector<Mat3> FJ;
  pair_force(z, w, eps, &E, dJ ? &FJ : nullptr);
  dz->resize(n);
  if (dJ) dJ->resize(n);
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int k = 0; k < n; ++k) {
    const Vec3 x = z[k].head<3>();
    const Vec3 v = z[k].tail<3>();
    const Vec3 B = fields.superpose(uv, x);
    Vec6& out = (*dz)[k];
    out.head<3>() = v;
    out.tail<3>() = E[k] + v.cross(B);
    if (dJ) {
      const Mat3 GB = fields.superpose_grad(uv, x);
      Mat6 A = Mat6::Zero();
      A.topRightCorner<3, 3>() = Mat3::Identity();
      A.bottomLeftCorner<3, 3>() = FJ[k] + skew(v) * GB;
      A.bottomRightCorner<3, 3>() = -skew(B);
      (*dJ)[k] = A * (*J)[k];
    }
  }
}

void check_finite(const std::vector<Vec6>& z, double t) {
  for (const Vec6& p : z)
    if (!p.allFinite())
      fail(ErrorKind::numerical,
           "non-finite particle state at t = " + std::to_string(t));
}

}  // namespace

RhsEval characteristic_rhs(const Vec6& z, int self_index,
                           const std::vector<Vec6>& sources,
                           const std::vector<double>& w, const double* u_now,
                           const CoilSet& fields, double eps) {
  const Vec3 x = z.head<3>();
  const Vec3 v = z.tail<3>();
  Vec3 E = Vec3::Zero();
  Mat3 FJ = Mat3::Zero();
  for (int j = 0; j < static_cast<int>(sources.size()); ++j) {
    if (j == self_index) continue;
    const KernelEval ke = coulomb_force_kernel(x - sources[j].head<3>(), eps);
    E += w[j] * ke.K;
    FJ += w[j] * ke.grad;
  }
  const Vec3 B = fields.superpose(u_now, x);
  const Mat3 GB = fields.superpose_grad(u_now, x);
  RhsEval out;
  out.dz.head<3>() = v;
  out.dz.tail<3>() = E + v.cross(B);
  out.A = Mat6::Zero();
  out.A.topRightCorner<3, 3>() = Mat3::Identity();
  out.A.bottomLeftCorner<3, 3>() = FJ + skew(v) * GB;
  out.A.bottomRightCorner<3, 3>() = -skew(B);
  return out;
}

StateHistory integrate_forward(const Ensemble& ens, const ControlGrid& u,
                               const CoilSet& fields, int M_steps, double eps) {
  if (M_steps < 1)
    fail(ErrorKind::invalid_argument, "M_steps must be >= 1");
  StateHistory h;
  h.T = u.T;
  h.M_steps = M_steps;
  h.levels = 4 * M_steps;
  const int n = ens.count();
  const double dt = h.T / h.levels;
  std::vector<Vec6> z = ens.z0;
  std::vector<Mat6> J(n, Mat6::Identity());
  h.z.reserve(h.levels + 1);
  h.J.reserve(h.levels + 1);
  h.times.reserve(h.levels + 1);
  std::vector<double> uv(u.N);
  std::vector<Vec6> k1z, k2z, k3z, k4z, tz;
  std::vector<Mat6> k1J, k2J, k3J, k4J, tJ;
  auto record = [&](double t) {
    h.times.push_back(t);
    h.z.push_back(z);
    h.J.push_back(J);
    for (const Vec6& p : z) {
      h.R = std::max(h.R, p.head<3>().norm());
      h.R_Z = std::max(h.R_Z, p.norm());
    }
  };
  record(0.0);
  for (int l = 0; l < h.levels; ++l) {
    const double t = l * dt;
    u.values_at(t + 0.5 * dt, uv.data());
    rhs_all(z, &J, ens.w, uv.data(), fields, eps, &k1z, &k1J);
    tz.resize(n);
    tJ.resize(n);
    for (int k = 0; k < n; ++k) { tz[k] = z[k] + 0.5 * dt * k1z[k]; tJ[k] = J[k] + 0.5 * dt * k1J[k]; }
    rhs_all(tz, &tJ, ens.w, uv.data(), fields, eps, &k2z, &k2J);
    for (int k = 0; k < n; ++k) { tz[k] = z[k] + 0.5 * dt * k2z[k]; tJ[k] = J[k] + 0.5 * dt * k2J[k]; }
    rhs_all(tz, &tJ, ens.w, uv.data(), fields, eps, &k3z, &k3J);
    for (int k = 0; k < n; ++k) { tz[k] = z[k] + dt * k3z[k]; tJ[k] = J[k] + dt * k3J[k]; }
    rhs_all(tz, &tJ, ens.w, uv.data(), fields, eps, &k4z, &k4J);
    for (int k = 0; k < n; ++k) {
      z[k] += (dt / 6.0) * (k1z[k] + 2.0 * k2z[k] + 2.0 * k3z[k] + k4z[k]);
      J[k] += (dt / 6.0) * (k1J[k] + 2.0 * k2J[k] + 2.0 * k3J[k] + k4J[k]);
    }
    check_finite(z, t + dt);
    record((l + 1) * dt);
  }
  return h;
}

std::vector<Vec6> integrate_state_endpoint(const Ensemble& ens,
                                           const ControlGrid& u,
                                           const CoilSet& fields, int M_steps,
                                           double eps) {
  const int n = ens.count();
  const int levels = 4 * M_steps;
  const double dt = u.T / levels;
  std::vector<Vec6> z = ens.z0;
  std::vector<double> uv(u.N);
  std::vector<Vec6> k1, k2, k3, k4, tz(n);
  for (int l = 0; l < levels; ++l) {
    const double t = l * dt;
    u.values_at(t + 0.5 * dt, uv.data());
    rhs_all(z, nullptr, ens.w, uv.data(), fields, eps, &k1, nullptr);
    for (int k = 0; k < n; ++k) tz[k] = z[k] + 0.5 * dt * k1[k];
    rhs_all(tz, nullptr, ens.w, uv.data(), fields, eps, &k2, nullptr);
    for (int k = 0; k < n; ++k) tz[k] = z[k] + 0.5 * dt * k2[k];
    rhs_all(tz, nullptr, ens.w, uv.data(), fields, eps, &k3, nullptr);
    for (int k = 0; k < n; ++k) tz[k] = z[k] + dt * k3[k];
    rhs_all(tz, nullptr, ens.w, uv.data(), fields, eps, &k4, nullptr);
    for (int k = 0; k < n; ++k)
      z[k] += (dt / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    check_finite(z, t + dt);
  }
  return z;
}

std::vector<Vec6> integrate_state_backward(const std::vector<Vec6>& zT,
                                           const std::vector<double>& w,
                                           const ControlGrid& u,
                                           const CoilSet& fields, int M_steps,
                                           double eps) {
  const int n = static_cast<int>(zT.size());
  const int levels = 4 * M_steps;
  const double dt = u.T / levels;
  std::vector<Vec6> z = zT;
  std::vector<double> uv(u.N);
  std::vector<Vec6> k1, k2, k3, k4, tz(n);
  // march s = T - t from T to 0; the step that ends at time t covers
  // [t, t + dt] of the forward run, so the control lookup matches it
  for (int l = levels; l > 0; --l) {
    const double t = (l - 1) * dt;
    u.values_at(t + 0.5 * dt, uv.data());
    rhs_all(z, nullptr, w, uv.data(), fields, eps, &k1, nullptr);
    for (int k = 0; k < n; ++k) tz[k] = z[k] - 0.5 * dt * k1[k];
    rhs_all(tz, nullptr, w, uv.data(), fields, eps, &k2, nullptr);
    for (int k = 0; k < n; ++k) tz[k] = z[k] - 0.5 * dt * k2[k];
    rhs_all(tz, nullptr, w, uv.data(), fields, eps, &k3, nullptr);
    for (int k = 0; k < n; ++k) tz[k] = z[k] - dt * k3[k];
    rhs_all(tz, nullptr, w, uv.data(), fields, eps, &k4, nullptr);
    for (int k = 0; k < n; ++k)
      z[k] -= (dt / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
  }
  return z;
}

Vec6 grad_f(const Mat6& J, const Vec6& gradf0) {
  return solve_transposed(J, gradf0);
}

double empirical_lipschitz(const Ensemble& ens, const ControlGrid& base,
                           const CoilSet& fields, int M_steps, double eps,
                           int n_pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> un(0.0, 1.0);
  auto draw = [&] {
    ControlGrid g = base;
    for (std::size_t q = 0; q < g.u.size(); ++q) {
      const double lo = std::max(g.a[q], -1e3);
      const double hi = std::min(g.b[q], 1e3);
      g.u[q] = lo + un(rng) * (hi - lo);
    }
    return g;
  };
  double worst = 0.0;
  for (int p = 0; p < n_pairs; ++p) {
    const ControlGrid u1 = draw(), u2 = draw();
    const double du = u1.dist_l2(u2);
    if (du == 0.0) continue;
    const auto z1 = integrate_state_endpoint(ens, u1, fields, M_steps, eps);
    const auto z2 = integrate_state_endpoint(ens, u2, fields, M_steps, eps);
    double dz = 0.0;
    for (int k = 0; k < ens.count(); ++k)
      dz = std::max(dz, (z1[k] - z2[k]).norm());
    worst = std::max(worst, dz / du);
  }
  return worst;
}

}  // namespace vpc
