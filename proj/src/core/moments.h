#pragma once

#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/costate.h"
#include "core/ensemble.h"
#include "core/geom.h"
#include "core/transport.h"

namespace vpc {

// Control-pairing moment of the adjoint sweep, sampled on the sweep grid:
//   p_i(t_m) = - sum_k w_k (v_k x m_i(x_k)) . (grad_v g)_k
// The velocity gradient is reconstructed from the moment-pipeline
// transporter (G_track), the choice that makes lambda_i u_i - pbar_i the
// exact derivative of the discrete cost. Row-major [i][m].
std::vector<std::vector<double>> moment_series(const StateHistory& hist,
                                               const CostateHistory& cs,
                                               const CoilSet& fields,
                                               const std::vector<double>& w);

// composite Simpson average of one uniformly sampled series over each of the
// M_cells equal subintervals; series size minus 1 must be an even multiple
// of M_cells
std::vector<double> cell_average_simpson(const std::vector<double>& series,
                                         int M_cells);

// grad J = lambda_i u_im - pbar_im (row-major like ControlGrid::u)
struct GradientResult {
  std::vector<double> grad;
  std::vector<double> pbar;
};
GradientResult cost_gradient(const ControlGrid& u,
                             const std::vector<double>& lambda,
                             const StateHistory& hist,
                             const CostateHistory& cs, const CoilSet& fields,
                             const std::vector<double>& w);

// Self-calibrated kernel-density estimate of ||f(t_level)||_2 from the cloud
// alone. Each source carries an anisotropic Gaussian obtained by pushing a
// lattice-matched kernel (per-block widths c*hx, c*hv) through its own flow
// Jacobian; pair distances are evaluated in pulled-back coordinates
// J_j^{-1} (z_k - z_j) and the unit determinant of the flow keeps the
// normalization. The instrument is calibrated on the t = 0 cloud, where the
// same pair sum is compared against the exact lattice quadrature; the
// calibration cancels smoothing bias and lattice aliasing, so the t = T
// reading degrades only if the transported Jacobians stop describing the
// cloud's actual deformation. That makes the estimate a transport-fidelity
// check rather than a raw density estimate.
double kde_l2_estimate(const StateHistory& hist, int level,
                       const Ensemble& ens, double bandwidth_factor);

}  // namespace vpc
