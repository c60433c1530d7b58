#pragma once

#include <memory>
#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/ensemble.h"
#include "core/geom.h"
#include "core/initial.h"
#include "core/transport.h"

namespace vpc {

// Desired terminal density f_d. The cost, the adjoint terminal data and the
// second-derivative pipeline only ever need point values, gradients and
// directional Hessians at the particle endpoint positions, plus the constant
// ||f_d||^2 entering the tracking term.
class Target {
 public:
  virtual ~Target() = default;
  virtual void values(const std::vector<Vec6>& z,
                      std::vector<double>* fd) const = 0;
  virtual void gradients(const std::vector<Vec6>& z,
                         std::vector<Vec6>* gfd) const = 0;
  // out[k] = Hess f_d(z[k]) * dz[k]
  virtual void hessian_dot(const std::vector<Vec6>& z,
                           const std::vector<Vec6>& dz,
                           std::vector<Vec6>* out) const = 0;
  virtual double l2sq() const = 0;
};

// closed-form bump target
class AnalyticTarget : public Target {
 public:
  explicit AnalyticTarget(const BumpSpec& spec) : spec_(spec) {}
  void values(const std::vector<Vec6>& z,
              std::vector<double>* fd) const override;
  void gradients(const std::vector<Vec6>& z,
                 std::vector<Vec6>* gfd) const override;
  void hessian_dot(const std::vector<Vec6>& z, const std::vector<Vec6>& dz,
                   std::vector<Vec6>* out) const override;
  double l2sq() const override { return spec_.l2sq(); }
  const BumpSpec& spec() const { return spec_; }

 private:
  BumpSpec spec_;
};

// Target synthesized by forward-running a stored reference control from the
// same initial ensemble and freezing that run's fields. Evaluation pulls the
// query point back through the frozen flow with a tracer integrated backward
// in time (tracers are not field sources, so there is no self term):
//   f_d(q)      = f0(zeta(0)),            zeta(T) = q
//   grad f_d(q) = R(0)^T grad f0(zeta(0)), R = d zeta / d q
// Directional Hessians carry first-order tracer variations alongside.
// ||f_d||^2 is the initial cloud's own quadrature value, which makes the
// synthesized inverse problem's residual floor vanish at the stored control.
class ReferenceTarget : public Target {
 public:
  ReferenceTarget(const Ensemble& ens, const BumpSpec& f0,
                  const ControlGrid& u_ref, const CoilSet& fields, int M_steps,
                  double eps);
  void values(const std::vector<Vec6>& z,
              std::vector<double>* fd) const override;
  void gradients(const std::vector<Vec6>& z,
                 std::vector<Vec6>* gfd) const override;
  void hessian_dot(const std::vector<Vec6>& z, const std::vector<Vec6>& dz,
                   std::vector<Vec6>* out) const override;
  double l2sq() const override { return l2sq_; }
  const StateHistory& reference_history() const { return history_; }

 private:
  struct Pullback {
    std::vector<Vec6> zeta0;
    std::vector<Mat6> R0;
  };
  // backward tracer sweep; with directions: also (d zeta, d R) variations
  Pullback trace_back(const std::vector<Vec6>& q,
                      const std::vector<Vec6>* dq, std::vector<Vec6>* dzeta0,
                      std::vector<Mat6>* dR0) const;
  const Pullback& cached(const std::vector<Vec6>& q) const;

  BumpSpec f0_;
  ControlGrid u_ref_;
  CoilSet fields_;
  double eps_;
  double l2sq_;
  std::vector<double> w_;
  StateHistory history_;
  mutable std::vector<Vec6> cache_query_;
  mutable Pullback cache_;
};

}  // namespace vpc
