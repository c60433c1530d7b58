#include "core/cost.h"

#include <string>

#include "core/error.h"

namespace vpc {

void validate_lambda(const std::vector<double>& lambda, int n_coils,
                     bool require_positive) {
  if (static_cast<int>(lambda.size()) != n_coils)
    fail(ErrorKind::invalid_argument,
         "regularization weight count differs from coil count");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < 0.0 || (require_positive && lambda[i] == 0.0))
      fail(ErrorKind::invalid_argument,
           "regularization weight " + std::to_string(i) + " must be " +
               (require_positive ? "positive" : "nonnegative"));
  }
}

CostBreakdown cost_from_endpoint(const Ensemble& ens, const Target& target,
                                 const std::vector<Vec6>& zT,
                                 const ControlGrid& u,
                                 const std::vector<double>& lambda) {
  validate_lambda(lambda, u.N, false);
  if (static_cast<int>(zT.size()) != ens.count())
    fail(ErrorKind::invalid_argument, "endpoint size differs from ensemble");
  std::vector<double> fd;
  target.values(zT, &fd);
  double self = 0.0, cross = 0.0;
  for (int k = 0; k < ens.count(); ++k) {
    self += ens.h6 * ens.f0[k] * ens.f0[k];
    cross += ens.h6 * ens.f0[k] * fd[k];
  }
  CostBreakdown c;
  c.tracking = 0.5 * (self - 2.0 * cross + target.l2sq());
  for (int i = 0; i < u.N; ++i)
    c.regularization += 0.5 * lambda[i] * u.l2sq_coil(i);
  c.total = c.tracking + c.regularization;
  return c;
}

CostBreakdown evaluate_cost(const Ensemble& ens, const Target& target,
                            const ControlGrid& u,
                            const std::vector<double>& lambda,
                            const CoilSet& fields, int M_steps, double eps) {
  const std::vector<Vec6> zT =
      integrate_state_endpoint(ens, u, fields, M_steps, eps);
  return cost_from_endpoint(ens, target, zT, u, lambda);
}

}  // namespace vpc
