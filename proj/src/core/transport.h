#pragma once

#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/ensemble.h"
#include "core/geom.h"

namespace vpc {

// Stored forward sweep. The marching step is dt/4 with dt = T/M_steps, so
// every coarser sweep (costate at dt/2, its tangent at dt/2, cell averages
// on the dt/2 grid) finds stored data exactly at its Runge-Kutta stage
// times. Level l holds time l*dt/4.
struct StateHistory {
  double T = 0.0;
  int M_steps = 0;             // user-visible step count
  int levels = 0;              // = 4*M_steps
  std::vector<double> times;   // levels+1 entries
  std::vector<std::vector<Vec6>> z;  // [level][particle]
  std::vector<std::vector<Mat6>> J;
  double R = 0.0;    // max over time of max_k |x_k|
  double R_Z = 0.0;  // max over time of max_k |z_k|

  int particle_count() const { return z.empty() ? 0 : (int)z[0].size(); }
  double dt_level() const { return T / levels; }
};

// One-point characteristic right-hand side for inspection and tests:
//   dz = (v, E(x) + v x B(u_now, x)),  A = d(dz)/dz.
// The ensemble provides the interaction sources; self_index >= 0 excludes
// that source particle (the self-force convention), -1 keeps all sources.
struct RhsEval {
  Vec6 dz;
  Mat6 A;  // trace is zero: the characteristic field is divergence-free
};
RhsEval characteristic_rhs(const Vec6& z, int self_index,
                           const std::vector<Vec6>& sources,
                           const std::vector<double>& w, const double* u_now,
                           const CoilSet& fields, double eps);

// Classical RK4 on (z_k, J_k) with dJ/dt = A(t, z) J; control values are
// looked up once per step at the step midpoint (steps never straddle control
// cells because 4*M_steps is a multiple of the control cell count, which
// scenario validation enforces).
StateHistory integrate_forward(const Ensemble& ens, const ControlGrid& u,
                               const CoilSet& fields, int M_steps, double eps);

// state-only endpoint (line searches, finite-difference probes)
std::vector<Vec6> integrate_state_endpoint(const Ensemble& ens,
                                           const ControlGrid& u,
                                           const CoilSet& fields, int M_steps,
                                           double eps);

// state-only backward run from given endpoint values (reversibility checks):
// integrates the same dynamics with time running T -> 0.
std::vector<Vec6> integrate_state_backward(const std::vector<Vec6>& zT,
                                           const std::vector<double>& w,
                                           const ControlGrid& u,
                                           const CoilSet& fields, int M_steps,
                                           double eps);

// chain-rule phase-space gradient of the transported density at particle k:
// grad f(t, z_k(t)) = J_k^{-T} gradf0_k
Vec6 grad_f(const Mat6& J, const Vec6& gradf0);

// largest |z_k(T; u1) - z_k(T; u2)| / ||u1 - u2||_{L^2} over random
// admissible control pairs: an empirical flow-to-control Lipschitz surrogate
double empirical_lipschitz(const Ensemble& ens, const ControlGrid& base,
                           const CoilSet& fields, int M_steps, double eps,
                           int n_pairs, std::uint64_t seed);

}  // namespace vpc
