#pragma once

#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/costate.h"
#include "core/ensemble.h"
#include "core/geom.h"
#include "core/target.h"
#include "core/transport.h"

namespace vpc {

// Linearized sweeps obtained by differentiating the discrete time stepper
// stage by stage, not by discretizing the continuous linearized equations.
// The outputs are therefore exact directional derivatives of the stored
// solver maps, which is what makes difference-quotient checks converge to
// machine-level agreement instead of stalling at scheme-consistency error.

// forward tangent: carries (z, J, dz, dJ) at every storage level, where
// (dz, dJ) = d/d alpha of the forward solve under u + alpha h at alpha = 0
struct TangentStateHistory {
  StateHistory base;
  std::vector<std::vector<Vec6>> dz;
  std::vector<std::vector<Mat6>> dJ;
};

TangentStateHistory solve_linearized_state(const Ensemble& ens,
                                           const ControlGrid& u,
                                           const ControlGrid& h,
                                           const CoilSet& fields, int M_steps,
                                           double eps);

// backward tangent: base adjoint pair (values + both transported gradients)
// together with their exact directional derivatives under the same h
struct TangentCostateHistory {
  double T = 0.0;
  int M_sweep = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> g, dg;
  std::vector<std::vector<Vec6>> G_full, dG_full;
  std::vector<std::vector<Vec6>> G_track, dG_track;
};

TangentCostateHistory solve_linearized_costate(const TangentStateHistory& ts,
                                               const Ensemble& ens,
                                               const Target& target,
                                               const CutoffChi& chi,
                                               double eps);

// moment series p_i(t_m) and its directional derivative dp_i(t_m) on the
// sweep grid, both read through the moment-pipeline transporter
struct MomentTangentSeries {
  std::vector<std::vector<double>> p;
  std::vector<std::vector<double>> dp;
};
MomentTangentSeries moment_series_tangent(const TangentStateHistory& ts,
                                          const TangentCostateHistory& cs,
                                          const CoilSet& fields,
                                          const std::vector<double>& w);

// J''(u)[h_dir, h_pair] assembled from one tangent pipeline run in direction
// h_dir: sum_i <lambda_i h_dir_i - dpbar_i, h_pair_i> over control cells
double second_derivative(const Ensemble& ens, const Target& target,
                         const CoilSet& fields, const ControlGrid& u,
                         const std::vector<double>& lambda,
                         const ControlGrid& h_dir, const ControlGrid& h_pair,
                         int M_steps, double eps, const CutoffChi& chi);

}  // namespace vpc
