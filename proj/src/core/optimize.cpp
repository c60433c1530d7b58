#include "core/optimize.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "core/costate.h"
#include "core/error.h"
#include "core/tangent.h"
#include "core/transport.h"

namespace vpc {

namespace {

double l2_norm_cells(const std::vector<double>& v, double cell) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s * cell);
}

ControlGrid apply_projected_step(const ControlGrid& u,
                                 const std::vector<double>& grad, double s) {
  ControlGrid out = u;
  for (std::size_t q = 0; q < out.u.size(); ++q) out.u[q] -= s * grad[q];
  out.project_in_place();
  return out;
}

double pg_residual_norm(const ControlGrid& u, const std::vector<double>& grad) {
  const ControlGrid stepped = apply_projected_step(u, grad, 1.0);
  return u.dist_l2(stepped);
}

}  // namespace

Evaluation evaluate_with_gradient(const Ensemble& ens, const Target& target,
                                  const CoilSet& fields, const ControlGrid& u,
                                  const std::vector<double>& lambda,
                                  int M_steps, double eps) {
  const StateHistory hist = integrate_forward(ens, u, fields, M_steps, eps);
  const CutoffChi chi = default_cutoff(hist);
  const CostateHistory cs = solve_costate(hist, ens, target, chi, eps);
  GradientResult gr = cost_gradient(u, lambda, hist, cs, fields, ens.w);
  Evaluation ev;
  ev.cost = cost_from_endpoint(ens, target, hist.z.back(), u, lambda);
  ev.grad = std::move(gr.grad);
  ev.pbar = std::move(gr.pbar);
  ev.R_Z = hist.R_Z;
  return ev;
}

OptimizeResult projected_gradient_descent(const Ensemble& ens,
                                          const Target& target,
                                          const CoilSet& fields,
                                          const ControlGrid& u0,
                                          const std::vector<double>& lambda,
                                          int M_steps, double eps,
                                          const OptimizeOptions& opt) {
  validate_lambda(lambda, u0.N, false);
  if (opt.max_iters < 1 || opt.step0 <= 0.0 || opt.shrink <= 0.0 ||
      opt.shrink >= 1.0)
    fail(ErrorKind::invalid_argument, "invalid descent options");
  OptimizeResult res;
  res.u = u0;
  res.u.validate_bounds();
  res.u.project_in_place();
  Evaluation ev =
      evaluate_with_gradient(ens, target, fields, res.u, lambda, M_steps, eps);
  for (int it = 0; it < opt.max_iters; ++it) {
    const double pg = pg_residual_norm(res.u, ev.grad);
    if (pg <= opt.tol) {
      res.converged = true;
      break;
    }
    double s = opt.step0;
    int backtracks = 0;
    bool accepted = false;
    ControlGrid cand = res.u;
    CostBreakdown cand_cost;
    while (backtracks <= opt.max_backtracks) {
      cand = apply_projected_step(res.u, ev.grad, s);
      const double move2 = [&] {
        const double d = res.u.dist_l2(cand);
        return d * d;
      }();
      if (move2 == 0.0) break;  // projection fixed point
      cand_cost = evaluate_cost(ens, target, cand, lambda, fields, M_steps, eps);
      // the strict comparison keeps the recorded history strictly
      // decreasing even when the sufficient-decrease margin underflows
      if (cand_cost.total <= ev.cost.total - (opt.armijo_c / s) * move2 &&
          cand_cost.total < ev.cost.total) {
        accepted = true;
        break;
      }
      s *= opt.shrink;
      ++backtracks;
    }
    if (!accepted) break;  // no admissible strict decrease: stationary
    IterRecord rec;
    rec.iter = it;
    rec.J = cand_cost.total;
    rec.grad_norm = pg;
    rec.step = s;
    rec.backtracks = backtracks;
    res.history.push_back(rec);
    res.u = cand;
    ev = evaluate_with_gradient(ens, target, fields, res.u, lambda, M_steps,
                                eps);
  }
  res.pg_residual = pg_residual_norm(res.u, ev.grad);
  res.converged = res.converged || res.pg_residual <= opt.tol;
  res.cost = ev.cost;
  res.grad = std::move(ev.grad);
  res.pbar = std::move(ev.pbar);
  return res;
}

FixedPointResult fixed_point_sweep(const Ensemble& ens, const Target& target,
                                   const CoilSet& fields,
                                   const ControlGrid& u0,
                                   const std::vector<double>& lambda,
                                   int M_steps, double eps,
                                   const FixedPointOptions& opt) {
  validate_lambda(lambda, u0.N, true);
  if (opt.theta <= 0.0 || opt.theta > 1.0)
    fail(ErrorKind::invalid_argument, "fixed-point damping must be in (0, 1]");
  FixedPointResult res;
  res.u = u0;
  res.u.validate_bounds();
  res.u.project_in_place();
  for (int it = 0; it < opt.max_iters; ++it) {
    const Evaluation ev =
        evaluate_with_gradient(ens, target, fields, res.u, lambda, M_steps, eps);
    ControlGrid next = res.u;
    for (int i = 0; i < res.u.N; ++i)
      for (int m = 0; m < res.u.M; ++m) {
        const std::size_t q = static_cast<std::size_t>(i) * res.u.M + m;
        const double target_val = ev.pbar[q] / lambda[i];
        const double projected =
            project_box(target_val, res.u.a[q], res.u.b[q]);
        next.u[q] = (1.0 - opt.theta) * res.u.u[q] + opt.theta * projected;
      }
    const double move = res.u.dist_l2(next);
    res.update_norms.push_back(move);
    IterRecord rec;
    rec.iter = it;
    rec.J = ev.cost.total;
    rec.grad_norm = pg_residual_norm(res.u, ev.grad);
    rec.step = opt.theta;
    rec.backtracks = 0;
    res.history.push_back(rec);
    res.u = next;
    res.iters = it + 1;
    res.residual = move;
    if (move <= opt.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

KktReport kkt_extract(const ControlGrid& u, const std::vector<double>& lambda,
                      const std::vector<double>& grad,
                      const std::vector<double>& pbar, double tol_active) {
  if (grad.size() != u.u.size() || pbar.size() != u.u.size())
    fail(ErrorKind::invalid_argument, "gradient size differs from control");
  if (static_cast<int>(lambda.size()) != u.N)
    fail(ErrorKind::invalid_argument,
         "regularization weight count differs from coil count");
  KktReport rep;
  rep.mu_a.assign(u.u.size(), 0.0);
  rep.mu_b.assign(u.u.size(), 0.0);
  std::vector<double> nc2(u.u.size(), 0.0);
  for (int i = 0; i < u.N; ++i)
    for (int m = 0; m < u.M; ++m) {
      const std::size_t q = static_cast<std::size_t>(i) * u.M + m;
      const bool at_lower =
          std::isfinite(u.a[q]) && u.u[q] - u.a[q] <= tol_active;
      const bool at_upper =
          std::isfinite(u.b[q]) && u.b[q] - u.u[q] <= tol_active;
      if (at_lower) rep.mu_a[q] = std::max(grad[q], 0.0);
      if (at_upper) rep.mu_b[q] = std::max(-grad[q], 0.0);
      const double stat = grad[q] - rep.mu_a[q] + rep.mu_b[q];
      rep.stationarity = std::max(rep.stationarity, std::abs(stat));
      if (std::isfinite(u.a[q]))
        rep.complementarity =
            std::max(rep.complementarity, rep.mu_a[q] * (u.u[q] - u.a[q]));
      if (std::isfinite(u.b[q]))
        rep.complementarity =
            std::max(rep.complementarity, rep.mu_b[q] * (u.b[q] - u.u[q]));
      if (lambda[i] > 0.0)
        nc2[q] = u.u[q] - project_box(pbar[q] / lambda[i], u.a[q], u.b[q]);
    }
  rep.projection_residual = l2_norm_cells(nc2, u.T / u.M);
  rep.pg_residual = pg_residual_norm(u, grad);
  return rep;
}

double variational_inequality_check(const ControlGrid& u,
                                    const std::vector<double>& grad,
                                    int n_samples, std::uint64_t seed) {
  if (grad.size() != u.u.size())
    fail(ErrorKind::invalid_argument, "gradient size differs from control");
  if (n_samples < 1)
    fail(ErrorKind::invalid_argument, "need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> un(0.0, 1.0);
  const double cell = u.T / u.M;
  double worst = HUGE_VAL;
  for (int s = 0; s < n_samples; ++s) {
    double pairing = 0.0;
    for (std::size_t q = 0; q < u.u.size(); ++q) {
      const double lo = std::isfinite(u.a[q]) ? u.a[q] : -1.0;
      const double hi = std::isfinite(u.b[q]) ? u.b[q] : 1.0;
      const double v = lo + un(rng) * (hi - lo);
      pairing += grad[q] * (v - u.u[q]) * cell;
    }
    worst = std::min(worst, pairing);
  }
  return worst;
}

ControlGrid critical_cone_project(const ControlGrid& h, const ControlGrid& u,
                                  const std::vector<double>& grad,
                                  double tol_active, double tol_grad) {
  if (h.N != u.N || h.M != u.M || h.T != u.T)
    fail(ErrorKind::invalid_argument, "direction grid does not match control");
  ControlGrid out = h;
  for (std::size_t q = 0; q < u.u.size(); ++q) {
    const bool at_lower =
        std::isfinite(u.a[q]) && u.u[q] - u.a[q] <= tol_active;
    const bool at_upper =
        std::isfinite(u.b[q]) && u.b[q] - u.u[q] <= tol_active;
    if (at_lower && grad[q] > tol_grad)
      out.u[q] = 0.0;  // strictly active lower bound
    else if (at_upper && grad[q] < -tol_grad)
      out.u[q] = 0.0;  // strictly active upper bound
    else if (at_lower)
      out.u[q] = std::max(out.u[q], 0.0);
    else if (at_upper)
      out.u[q] = std::min(out.u[q], 0.0);
  }
  return out;
}

ControlGrid random_admissible(const ControlGrid& u_template,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> un(0.0, 1.0);
  ControlGrid g = u_template;
  for (std::size_t q = 0; q < g.u.size(); ++q) {
    const double lo = std::isfinite(g.a[q]) ? g.a[q] : -1.0;
    const double hi = std::isfinite(g.b[q]) ? g.b[q] : 1.0;
    g.u[q] = lo + un(rng) * (hi - lo);
  }
  return g;
}

SscReport ssc_sample_check(const Ensemble& ens, const Target& target,
                           const CoilSet& fields, const ControlGrid& u,
                           const std::vector<double>& lambda, int M_steps,
                           double eps, int n_directions, std::uint64_t seed) {
  if (n_directions < 1)
    fail(ErrorKind::invalid_argument, "need at least one direction");
  const Evaluation ev =
      evaluate_with_gradient(ens, target, fields, u, lambda, M_steps, eps);
  CutoffChi chi;
  chi.plateau = ev.R_Z * 1.25;
  // scale-aware activity/gradient cutoffs for the cone projection
  double gmax = 0.0;
  for (double g : ev.grad) gmax = std::max(gmax, std::abs(g));
  const double tol_active = 1e-6 * std::max(1.0, u.sup_norm());
  const double tol_grad = std::max(1e-10, 1e-3 * gmax);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SscReport rep;
  rep.min_quotient = HUGE_VAL;
  const double cell = u.T / u.M;
  for (int d = 0; d < n_directions; ++d) {
    ControlGrid h = u;
    for (double& x : h.u) x = gauss(rng);
    h = critical_cone_project(h, u, ev.grad, tol_active, tol_grad);
    const double n2 = l2_norm_cells(h.u, cell);
    if (n2 <= 1e-14) continue;
    const double j2 = second_derivative(ens, target, fields, u, lambda, h, h,
                                        M_steps, eps, chi);
    rep.min_quotient = std::min(rep.min_quotient, j2 / (n2 * n2));
    ++rep.n_used;
  }
  if (rep.n_used == 0)
    fail(ErrorKind::numerical,
         "every sampled direction projected to zero on the critical cone");
  return rep;
}

UniquenessReport uniqueness_probe(const Ensemble& ens, const Target& target,
                                  const CoilSet& fields,
                                  const ControlGrid& u_template,
                                  const std::vector<double>& lambda,
                                  int M_steps, double eps, int n_starts,
                                  std::uint64_t seed,
                                  const FixedPointOptions& fp_opt,
                                  const OptimizeOptions& pgd_opt) {
  if (n_starts < 1)
    fail(ErrorKind::invalid_argument, "need at least one start");
  UniquenessReport rep;
  rep.all_converged = true;
  for (int s = 0; s < n_starts; ++s) {
    const ControlGrid start = random_admissible(u_template, seed + s);
    FixedPointResult fp = fixed_point_sweep(ens, target, fields, start, lambda,
                                            M_steps, eps, fp_opt);
    rep.all_converged = rep.all_converged && fp.converged;
    rep.solutions.push_back(std::move(fp.u));
  }
  OptimizeResult pg =
      projected_gradient_descent(ens, target, fields,
                                 random_admissible(u_template, seed + n_starts),
                                 lambda, M_steps, eps, pgd_opt);
  rep.all_converged = rep.all_converged && pg.converged;
  rep.solutions.push_back(std::move(pg.u));
  for (std::size_t i = 0; i < rep.solutions.size(); ++i)
    for (std::size_t j = i + 1; j < rep.solutions.size(); ++j)
      rep.max_pairwise_distance =
          std::max(rep.max_pairwise_distance,
                   rep.solutions[i].dist_l2(rep.solutions[j]));
  return rep;
}

}  // namespace vpc
