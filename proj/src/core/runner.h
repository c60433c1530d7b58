#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/costate.h"
#include "core/optimize.h"
#include "core/scenario.h"
#include "core/target.h"
#include "core/transport.h"

namespace vpc {

// desired-state factory: analytic bump, or a frozen forward run of the
// scenario's stored generating control
std::unique_ptr<Target> make_target(const Scenario& sc, const Ensemble& ens,
                                    double eps);

// control used by forward-run diagnostics: the stored generating control for
// reference targets (the dynamically interesting regime), else the start rows
ControlGrid dynamic_control(const Scenario& sc);

// ---- plot-ready columnar files (space separated, one header line) ----

// `t k x1 x2 x3 v1 v2 v3 detJ f0` at the step times
void write_trajectory(const StateHistory& hist, const Ensemble& ens,
                      const std::string& path);
// `t k g Gz0_1 .. Gz0_6`, the adjoint value and its transported gradient
// with respect to the particle's initial point, on the sweep grid
void write_costate(const CostateHistory& cs, const std::string& path);
// `t R R_Z`: position and phase-space support radii at the step times
void write_radius_series(const StateHistory& hist, const std::string& path);
// `iter J grad_norm step n_backtracks`
void write_opt_log(const std::vector<IterRecord>& history,
                   const std::string& path);
// `i m t_mid u a b p mu_a mu_b` (1-based coil and cell indices)
void write_control_table(const ControlGrid& u, const std::vector<double>& pbar,
                         const KktReport& kkt, const std::string& path);

// Residual triple of the coupled optimality system at a control:
//   state   - transport fidelity: max |det J - 1| over the stored sweep
//   costate - cutoff independence: largest change of any adjoint value when
//             the plateau is widened (the terminal condition is exact by
//             construction, so the nonlocal source is what gets probed)
//   control - per-coil ||u_i - P(pbar_i / lambda_i)||_{L^2}; zero exactly at
//             a projection fixed point
struct OptimalityResidual {
  double state = 0.0;
  double costate = 0.0;
  std::vector<double> control_per_coil;
  double control_total = 0.0;
};
OptimalityResidual optimality_residual(const Ensemble& ens,
                                       const Target& target,
                                       const CoilSet& fields,
                                       const ControlGrid& u,
                                       const std::vector<double>& lambda,
                                       int M_steps, double eps);

// ---- subcommand drivers (return the process exit status) ----

struct FieldsRequest {
  SampleBox box;
  double spacing = 0.5;    // table grid step
  int n_samples = 200;     // divergence / norm sample count
  std::uint64_t seed = 1;
};

// field table + divergence and norm report; fails the run when the
// source-freeness gate (1e-8) is exceeded at any sample
int run_fields(const CoilSet& coils, const FieldsRequest& req,
               const std::string& out_dir);

// forward run of the start control: trajectory, costate, radius series,
// invariants, density reconstruction, empirical flow-to-control Lipschitz
int run_simulate(const Scenario& sc, const std::string& out_dir);

// descent (default) or projection fixed-point solve from the start rows;
// writes the iteration log, the control table with multipliers, and a
// summary with the optimality residual triple
int run_optimize(const Scenario& sc, bool use_fixed_point,
                 const std::string& out_dir);

// full check suite: coil source-freeness, Liouville, norm invariance,
// density reconstruction, adjoint gradient vs difference quotients, cutoff
// independence, and the first-order conditions at a converged solve; exit 0
// only if every gate holds
int run_verify(const Scenario& sc, const std::string& out_dir);

// multistart cross-agreement probe; reports pairwise distances
int run_probe_uniqueness(const Scenario& sc, const std::string& out_dir);

// second-order sampling on the critical cone at a converged solve
int run_ssc(const Scenario& sc, const std::string& out_dir);

}  // namespace vpc
