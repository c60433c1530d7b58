#pragma once

#include <cstdint>
#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/cost.h"
#include "core/ensemble.h"
#include "core/moments.h"
#include "core/target.h"

namespace vpc {

// One objective/gradient evaluation bundle at a control point. The cutoff is
// rebuilt per evaluation from that run's own particle excursions, so it is
// identically 1 on every particle and the assembled gradient is the exact
// derivative of the discrete cost.
struct Evaluation {
  CostBreakdown cost;
  std::vector<double> grad;  // row-major [i*M+m]
  std::vector<double> pbar;
  double R_Z = 0.0;
};
Evaluation evaluate_with_gradient(const Ensemble& ens, const Target& target,
                                  const CoilSet& fields, const ControlGrid& u,
                                  const std::vector<double>& lambda,
                                  int M_steps, double eps);

struct OptimizeOptions {
  int max_iters = 200;
  double tol = 1e-8;  // projected-gradient residual, L2 on [0, T]
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;
  double step0 = 1.0;
};

struct IterRecord {
  int iter = 0;
  double J = 0.0;
  double grad_norm = 0.0;  // projected-gradient residual before the step
  double step = 0.0;
  int backtracks = 0;
};

struct OptimizeResult {
  ControlGrid u;
  std::vector<IterRecord> history;
  double pg_residual = 0.0;
  bool converged = false;
  CostBreakdown cost;
  std::vector<double> grad, pbar;  // at the final iterate
};

// Projected gradient descent with Armijo backtracking on the projection arc:
// accept u_s = P(u - s grad) once J(u_s) <= J(u) - (c/s) ||u_s - u||^2.
// Every accepted step strictly decreases J; stagnation stops the loop.
OptimizeResult projected_gradient_descent(const Ensemble& ens,
                                          const Target& target,
                                          const CoilSet& fields,
                                          const ControlGrid& u0,
                                          const std::vector<double>& lambda,
                                          int M_steps, double eps,
                                          const OptimizeOptions& opt);

struct FixedPointOptions {
  int max_iters = 200;
  double tol = 1e-8;  // L2 distance between consecutive iterates
  double theta = 1.0;  // damping: u+ = (1-theta) u + theta P(pbar/lambda)
};

struct FixedPointResult {
  ControlGrid u;
  std::vector<double> update_norms;  // per iteration
  std::vector<IterRecord> history;   // J and residual per iteration
  double residual = 0.0;
  bool converged = false;
  int iters = 0;
};

// Damped projection fixed-point iteration u+ = (1-theta) u + theta
// P(pbar(u)/lambda); contracts for short horizons or strong regularization.
FixedPointResult fixed_point_sweep(const Ensemble& ens, const Target& target,
                                   const CoilSet& fields,
                                   const ControlGrid& u0,
                                   const std::vector<double>& lambda,
                                   int M_steps, double eps,
                                   const FixedPointOptions& opt);

// ---- first-order optimality bookkeeping ------------------------------------

struct KktReport {
  std::vector<double> mu_a, mu_b;       // multipliers, row-major [i*M+m]
  double stationarity = 0.0;            // max |grad - mu_a + mu_b|
  double complementarity = 0.0;         // max multiplier * distance-to-bound
  double projection_residual = 0.0;     // ||u - P(pbar/lambda)||_L2  (NC2)
  double pg_residual = 0.0;             // ||u - P(u - grad)||_L2
};
KktReport kkt_extract(const ControlGrid& u, const std::vector<double>& lambda,
                      const std::vector<double>& grad,
                      const std::vector<double>& pbar, double tol_active);

// smallest sampled pairing <grad, v - u> over random admissible v (NC1)
double variational_inequality_check(const ControlGrid& u,
                                    const std::vector<double>& grad,
                                    int n_samples, std::uint64_t seed);

// Critical-cone projection: at an exact stationary point the gradient can
// only be nonzero on active bound coordinates, so the cone's "h = 0 where
// the gradient is nonzero" clause bites exactly on the strictly active set.
// Numerically we zero h on active coordinates whose multiplier exceeds
// tol_grad, clamp the sign on the remaining active ones, and leave interior
// coordinates free (their residual gradient is solver noise, not a
// multiplier).
ControlGrid critical_cone_project(const ControlGrid& h, const ControlGrid& u,
                                  const std::vector<double>& grad,
                                  double tol_active, double tol_grad);

struct SscReport {
  double min_quotient = 0.0;  // min over directions of J''[h,h]/||h||^2
  int n_used = 0;             // directions with nonzero cone projection
};
// sampled second-order check on the critical cone at a candidate minimizer
SscReport ssc_sample_check(const Ensemble& ens, const Target& target,
                           const CoilSet& fields, const ControlGrid& u,
                           const std::vector<double>& lambda, int M_steps,
                           double eps, int n_directions, std::uint64_t seed);

struct UniquenessReport {
  std::vector<ControlGrid> solutions;  // fixed-point runs, then the descent run
  double max_pairwise_distance = 0.0;
  bool all_converged = false;
};
// multistart cross-agreement probe: several random admissible starts through
// the fixed-point map plus one descent run, compared pairwise in L2
UniquenessReport uniqueness_probe(const Ensemble& ens, const Target& target,
                                  const CoilSet& fields,
                                  const ControlGrid& u_template,
                                  const std::vector<double>& lambda,
                                  int M_steps, double eps, int n_starts,
                                  std::uint64_t seed,
                                  const FixedPointOptions& fp_opt,
                                  const OptimizeOptions& pgd_opt);

// draw each cell uniformly in its admissible interval (infinite bounds are
// clamped to +-1 around 0 for the draw)
ControlGrid random_admissible(const ControlGrid& u_template,
                              std::uint64_t seed);

}  // namespace vpc
