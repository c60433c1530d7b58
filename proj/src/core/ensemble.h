#pragma once

#include <vector>

#include "core/geom.h"

namespace vpc {

// Phase-space quadrature points for a compactly supported density. Each
// particle carries its initial point, sampled density value, quadrature
// weight w = f0 * h^6, transported flow Jacobian, and the initial-datum
// gradient for chain-rule reconstructions along the flow.
struct Ensemble {
  std::vector<Vec6> z0;
  std::vector<double> f0;
  std::vector<double> w;
  std::vector<Vec6> gradf0;
  double h6 = 0.0;         // phase-space cell volume of the sampling grid
  double spacing = 0.0;    // position-axis grid step (sets the softening scale)
  double spacing_v = 0.0;  // velocity-axis grid step

  int count() const { return static_cast<int>(z0.size()); }

  // exact L^p norm of the sampled density, invariant along the flow
  double lp_norm(double p) const;
  double mass() const;  // sum of weights
};

}  // namespace vpc
