#pragma once

#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/ensemble.h"
#include "core/target.h"
#include "core/transport.h"

namespace vpc {

// J(u) = 1/2 ||f(T) - f_d||^2 + sum_i (lambda_i / 2) ||u_i||^2
//
// The tracking term expands as ||f(T)||^2 - 2 <f(T), f_d> + ||f_d||^2; the
// first piece equals the flow-invariant quadrature sum h^6 f0^2 and the cross
// term is the transported quadrature sum_k h^6 f0_k f_d(z_k(T)), so only the
// particle endpoints are needed. The regularizer uses the exact rectangle
// value for piecewise-constant controls.
struct CostBreakdown {
  double total = 0.0;
  double tracking = 0.0;        // 1/2 ||f(T) - f_d||^2
  double regularization = 0.0;  // sum_i lambda_i/2 ||u_i||^2
};

// from already-computed particle endpoints
CostBreakdown cost_from_endpoint(const Ensemble& ens, const Target& target,
                                 const std::vector<Vec6>& zT,
                                 const ControlGrid& u,
                                 const std::vector<double>& lambda);

// runs the forward solve internally (endpoint only, no history storage)
CostBreakdown evaluate_cost(const Ensemble& ens, const Target& target,
                            const ControlGrid& u,
                            const std::vector<double>& lambda,
                            const CoilSet& fields, int M_steps, double eps);

void validate_lambda(const std::vector<double>& lambda, int n_coils,
                     bool require_positive);

}  // namespace vpc
