#pragma once

#include <vector>

#include "core/ensemble.h"
#include "core/geom.h"
#include "core/kernels.h"
#include "core/target.h"
#include "core/transport.h"

namespace vpc {

// Backward adjoint sweep along the stored characteristics.
//
// Two transported gradients are carried per particle:
//   G_full : gradient of the true adjoint variable, terminal
//            grad f0 - J(T)^T grad f_d. Pairs with the values g
//            (terminal f0 - f_d(z(T))) for dumps and diagnostics.
//   G_track: same linear evolution but terminal -J(T)^T grad f_d.
//            The grad f0 part of the terminal integrates to zero in the
//            control pairing in exact arithmetic; dropping it removes its
//            quadrature noise, so the moment/gradient pipeline reads this
//            object exclusively. Gradient-vs-difference-quotient agreement
//            improves from ~1e-3 to ~1e-8 relative with this choice.
//
// The sweep marches at twice the state storage step (dt_c = T / M_sweep,
// M_sweep = 2 * M_steps), so every Runge-Kutta stage lands exactly on a
// stored state level. The nonlocal source is cut off by chi: value source
// phi * chi(z), gradient source J^T (chi * (grad phi, 0) + phi * grad chi).
struct CostateHistory {
  double T = 0.0;
  int M_sweep = 0;
  std::vector<double> times;              // size M_sweep + 1
  std::vector<std::vector<double>> g;     // [m][k] adjoint values
  std::vector<std::vector<Vec6>> G_full;  // [m][k] transported gradient of g
  std::vector<std::vector<Vec6>> G_track; // [m][k] moment-pipeline transporter

  int particle_count() const {
    return g.empty() ? 0 : static_cast<int>(g.front().size());
  }
};

// plateau with 25% margin over the largest phase-space radius the cloud
// reaches, so the cutoff is identically 1 (gradient 0) on every particle
CutoffChi default_cutoff(const StateHistory& hist);

CostateHistory solve_costate(const StateHistory& hist, const Ensemble& ens,
                             const Target& target, const CutoffChi& chi,
                             double eps);

// Eulerian gradient of the adjoint value at a particle: J^{-T} G
Vec6 eulerian_grad(const Mat6& J, const Vec6& G);

}  // namespace vpc
