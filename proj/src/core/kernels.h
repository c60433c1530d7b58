#pragma once

#include <vector>

#include "core/geom.h"

namespace vpc {

// Softened Coulomb interaction kernel
//   K(d) = d / (|d|^2 + eps^2)^{3/2}
// with exact first derivative and a directional second derivative. K(0) = 0,
// so a particle exerts no force on itself, but grad K(0) = eps^{-3} I does
// not vanish: every pair sum below excludes the self term j == k so that
// force and derivative sums stay consistent with each other.
struct KernelEval {
  Vec3 K;
  Mat3 grad;
};

KernelEval coulomb_force_kernel(const Vec3& d, double eps);

// second derivative contracted with a: M(d, a)_{ij} = sum_k d2K_i/dd_j dd_k a_k
Mat3 coulomb_kernel_hess_dot(const Vec3& d, const Vec3& a, double eps);

// Radial C^2 cutoff: 1 on |z| <= plateau, 0 on |z| >= 2*plateau, quintic
// q(s) = 1 - s^3 (10 - 15 s + 6 s^2) across the shell.
struct CutoffChi {
  double plateau = 0.0;
};

struct ChiEval {
  double value = 0.0;
  Vec6 grad = Vec6::Zero();
  Mat6 hess = Mat6::Zero();
};

ChiEval chi_eval(const Vec6& z, const CutoffChi& chi);

// ---- ensemble pair passes -------------------------------------------------
// All passes accumulate per target over ascending source index (self term
// skipped), so results are bitwise deterministic for any worker count.

// force and its position Jacobian at every particle:
//   E_k  = sum_{j != k} w_j K(x_k - x_j)
//   FJ_k = sum_{j != k} w_j grad K(x_k - x_j)
void pair_force(const std::vector<Vec6>& z, const std::vector<double>& w,
                double eps, std::vector<Vec3>* E, std::vector<Mat3>* FJ);

// additionally the exact tangent of both sums under position variations dx:
//   dE_k  = sum w_j grad K(x_k - x_j) (dx_k - dx_j)
//   dFJ_k = sum w_j M(x_k - x_j, dx_k - dx_j)
void pair_force_tangent(const std::vector<Vec6>& z, const std::vector<double>& w,
                        const std::vector<Vec6>& dz, double eps,
                        std::vector<Vec3>* E, std::vector<Mat3>* FJ,
                        std::vector<Vec3>* dE, std::vector<Mat3>* dFJ);

// costate source sums for per-particle vector charges C_j (= w_j (grad_v g)_j):
//   phi_k      = sum_{j != k} K(x_k - x_j) . C_j
//   grad_phi_k = sum_{j != k} grad K(x_k - x_j) C_j
void pair_phi(const std::vector<Vec6>& z, const std::vector<Vec3>& C, double eps,
              std::vector<double>* phi, std::vector<Vec3>* grad_phi);

// exact tangent of pair_phi under (dx, dC):
//   dphi_k      = sum (grad K e_kj) . C_j + K . dC_j,      e_kj = dx_k - dx_j
//   dgrad_phi_k = sum M(d_kj, e_kj) C_j + grad K dC_j
void pair_phi_tangent(const std::vector<Vec6>& z, const std::vector<Vec6>& dz,
                      const std::vector<Vec3>& C, const std::vector<Vec3>& dC,
                      double eps, std::vector<double>* phi,
                      std::vector<Vec3>* grad_phi, std::vector<double>* dphi,
                      std::vector<Vec3>* dgrad_phi);

// force field of the ensemble at external targets (no self term to skip):
//   E(x) = sum_j w_j K(x - x_j), FJ its Jacobian (either output optional)
void field_at(const std::vector<Vec6>& sources, const std::vector<double>& w,
              double eps, const std::vector<Vec3>& targets,
              std::vector<Vec3>* E, std::vector<Mat3>* FJ);

// tangent of field_at under source and target motion:
//   dE(x_t) = sum w_j grad K(x_t - x_j)(dx_t - dx_j)  (+ dFJ analogously)
void field_at_tangent(const std::vector<Vec6>& sources,
                      const std::vector<double>& w,
                      const std::vector<Vec6>& dsources, double eps,
                      const std::vector<Vec3>& targets,
                      const std::vector<Vec3>& dtargets, std::vector<Vec3>* E,
                      std::vector<Mat3>* FJ, std::vector<Vec3>* dE,
                      std::vector<Mat3>* dFJ);

// potential, field gradient and Hessian of the smoothed potential at one
// arbitrary point: psi(x) = sum_k w_k / sqrt(|x - x_k|^2 + eps^2),
// E = grad psi = -sum w_k K(x - x_k), hess accordingly.
void self_field(const std::vector<Vec6>& z, const std::vector<double>& w,
                double eps, const Vec3& x, double* psi, Vec3* E, Mat3* hess);

// scalar source at one arbitrary point for charges C_j
double phi_field(const std::vector<Vec6>& z, const std::vector<Vec3>& C,
                 double eps, const Vec3& x);

// worker count control (clamped to >= 1); returns the active setting
int set_workers(int n);
int workers();

}  // namespace vpc
