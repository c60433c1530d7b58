#include "core/runner.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "core/cost.h"
#include "core/error.h"
#include "core/moments.h"
#include "core/textio.h"

namespace vpc {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
  return out;
}

// Collects report lines, mirrors them to stdout as the run progresses, and
// writes the file at the end. A line per gated check plus free-form notes.
class Report {
 public:
  explicit Report(std::string path) : path_(std::move(path)) {}

  void check_le(const std::string& name, double value, double gate) {
    record(value <= gate, name, value, gate);
  }
  void check_ge(const std::string& name, double value, double gate) {
    record(value >= gate, name, value, gate);
  }
  void check_flag(const std::string& name, bool pass) {
    ++checks_;
    if (!pass) ++failures_;
    note(std::string(pass ? "PASS " : "FAIL ") + name);
  }
  void info(const std::string& name, double value) {
    note(name + " " + format_full(value));
  }
  void note(const std::string& line) {
    lines_.push_back(line);
    std::cout << line << "\n";
  }

  int failures() const { return failures_; }

  // appends the tally, writes the file, returns the exit status
  int finish(const std::string& suite) {
    note(suite + ": " + std::to_string(failures_) + " of " +
         std::to_string(checks_) + " checks failed");
    auto out = open_out(path_);
    for (const auto& l : lines_) out << l << "\n";
    return failures_ == 0 ? 0 : 1;
  }

 private:
  void record(bool pass, const std::string& name, double value, double gate) {
    ++checks_;
    if (!pass) ++failures_;
    note(std::string(pass ? "PASS " : "FAIL ") + name + " value " +
         format_full(value) + " gate " + format_full(gate));
  }

  std::string path_;
  std::vector<std::string> lines_;
  int checks_ = 0;
  int failures_ = 0;
};

double max_det_drift(const StateHistory& hist) {
  double worst = 0.0;
  for (const auto& level : hist.J)
    for (const auto& J : level)
      worst = std::max(worst, std::abs(J.determinant() - 1.0));
  return worst;
}

double max_abs_diff_g(const CostateHistory& a, const CostateHistory& b) {
  double worst = 0.0;
  for (std::size_t m = 0; m < a.g.size(); ++m)
    for (std::size_t k = 0; k < a.g[m].size(); ++k)
      worst = std::max(worst, std::abs(a.g[m][k] - b.g[m][k]));
  return worst;
}

OptimizeOptions descent_options(const CheckParams& c) {
  OptimizeOptions opt;
  opt.max_iters = c.max_iters;
  opt.tol = c.opt_tol;
  return opt;
}

FixedPointOptions fixed_point_options(const CheckParams& c) {
  FixedPointOptions opt;
  opt.max_iters = c.max_iters;
  opt.tol = c.opt_tol;
  opt.theta = c.theta;
  return opt;
}

double active_tol(const ControlGrid& u) {
  return 1e-6 * std::max(1.0, u.sup_norm());
}

}  // namespace

std::unique_ptr<Target> make_target(const Scenario& sc, const Ensemble& ens,
                                    double eps) {
  if (sc.target_mode == TargetMode::analytic)
    return std::make_unique<AnalyticTarget>(sc.target_bump);
  return std::make_unique<ReferenceTarget>(ens, sc.initial,
                                           sc.reference_control(), sc.coils,
                                           sc.M_steps, eps);
}

ControlGrid dynamic_control(const Scenario& sc) {
  return sc.target_mode == TargetMode::reference ? sc.reference_control()
                                                 : sc.start_control();
}

void write_trajectory(const StateHistory& hist, const Ensemble& ens,
                      const std::string& path) {
  auto out = open_out(path);
  out << "t k x1 x2 x3 v1 v2 v3 detJ f0\n";
  for (int lev = 0; lev <= hist.levels; lev += 4) {
    if (lev >= (int)hist.z.size()) break;
    for (int k = 0; k < hist.particle_count(); ++k) {
      const Vec6& z = hist.z[lev][k];
      out << format_full(hist.times[lev]) << " " << k;
      for (int c = 0; c < 6; ++c) out << " " << format_full(z[c]);
      out << " " << format_full(hist.J[lev][k].determinant()) << " "
          << format_full(ens.f0[k]) << "\n";
    }
  }
}

void write_costate(const CostateHistory& cs, const std::string& path) {
  auto out = open_out(path);
  out << "t k g Gz0_1 Gz0_2 Gz0_3 Gz0_4 Gz0_5 Gz0_6\n";
  for (std::size_t m = 0; m < cs.g.size(); ++m)
    for (std::size_t k = 0; k < cs.g[m].size(); ++k) {
      out << format_full(cs.times[m]) << " " << k << " "
          << format_full(cs.g[m][k]);
      for (int c = 0; c < 6; ++c)
        out << " " << format_full(cs.G_full[m][k][c]);
      out << "\n";
    }
}

void write_radius_series(const StateHistory& hist, const std::string& path) {
  auto out = open_out(path);
  out << "t R R_Z\n";
  for (int lev = 0; lev <= hist.levels; lev += 4) {
    if (lev >= (int)hist.z.size()) break;
    double r = 0.0, rz = 0.0;
    for (const Vec6& z : hist.z[lev]) {
      r = std::max(r, z.head<3>().norm());
      rz = std::max(rz, z.norm());
    }
    out << format_full(hist.times[lev]) << " " << format_full(r) << " "
        << format_full(rz) << "\n";
  }
}

void write_opt_log(const std::vector<IterRecord>& history,
                   const std::string& path) {
  auto out = open_out(path);
  out << "iter J grad_norm step n_backtracks\n";
  for (const auto& rec : history)
    out << rec.iter << " " << format_full(rec.J) << " "
        << format_full(rec.grad_norm) << " " << format_full(rec.step) << " "
        << rec.backtracks << "\n";
}

void write_control_table(const ControlGrid& u, const std::vector<double>& pbar,
                         const KktReport& kkt, const std::string& path) {
  if (pbar.size() != u.u.size() || kkt.mu_a.size() != u.u.size())
    fail(ErrorKind::invalid_argument, "control table inputs disagree in size");
  auto out = open_out(path);
  out << "i m t_mid u a b p mu_a mu_b\n";
  for (int i = 0; i < u.N; ++i)
    for (int m = 0; m < u.M; ++m) {
      const std::size_t q = (std::size_t)i * u.M + m;
      const double t_mid = (m + 0.5) * u.dt();
      out << (i + 1) << " " << (m + 1) << " " << format_full(t_mid) << " "
          << format_full(u.u[q]) << " " << format_full(u.a[q]) << " "
          << format_full(u.b[q]) << " " << format_full(pbar[q]) << " "
          << format_full(kkt.mu_a[q]) << " " << format_full(kkt.mu_b[q])
          << "\n";
    }
}

OptimalityResidual optimality_residual(const Ensemble& ens,
                                       const Target& target,
                                       const CoilSet& fields,
                                       const ControlGrid& u,
                                       const std::vector<double>& lambda,
                                       int M_steps, double eps) {
  const StateHistory hist = integrate_forward(ens, u, fields, M_steps, eps);
  OptimalityResidual res;
  res.state = max_det_drift(hist);
  const CutoffChi chi = default_cutoff(hist);
  CutoffChi wide = chi;
  wide.plateau *= 1.6;
  const CostateHistory cs = solve_costate(hist, ens, target, chi, eps);
  const CostateHistory cs_wide = solve_costate(hist, ens, target, wide, eps);
  res.costate = max_abs_diff_g(cs, cs_wide);
  const GradientResult gr = cost_gradient(u, lambda, hist, cs, fields, ens.w);
  const double cell = u.T / u.M;
  res.control_per_coil.assign(u.N, 0.0);
  for (int i = 0; i < u.N; ++i) {
    double acc = 0.0;
    for (int m = 0; m < u.M; ++m) {
      const std::size_t q = (std::size_t)i * u.M + m;
      if (lambda[i] > 0.0) {
        const double d =
            u.u[q] - project_box(gr.pbar[q] / lambda[i], u.a[q], u.b[q]);
        acc += d * d * cell;
      }
    }
    res.control_per_coil[i] = std::sqrt(acc);
    res.control_total += acc;
  }
  res.control_total = std::sqrt(res.control_total);
  return res;
}

int run_fields(const CoilSet& coils, const FieldsRequest& req,
               const std::string& out_dir) {
  if (coils.count() < 1)
    fail(ErrorKind::invalid_argument, "no coils to evaluate");
  for (int c = 0; c < 3; ++c)
    if (!(req.box.lo[c] < req.box.hi[c]))
      fail(ErrorKind::invalid_argument, "field box must have positive extent");
  if (req.spacing <= 0.0)
    fail(ErrorKind::invalid_argument, "field table spacing must be positive");
  if (req.n_samples < 1)
    fail(ErrorKind::invalid_argument, "need at least one field sample");

  const FieldTable tab = tabulate_fields(coils, req.box, req.spacing);
  {
    auto out = open_out(join(out_dir, "field_table.tsv"));
    out << "x y z";
    for (int i = 1; i <= coils.count(); ++i)
      out << " m" << i << "_x m" << i << "_y m" << i << "_z";
    out << "\n";
    for (int ix = 0; ix < tab.nx; ++ix)
      for (int iy = 0; iy < tab.ny; ++iy)
        for (int iz = 0; iz < tab.nz; ++iz) {
          const Vec3 x = req.box.lo + req.spacing * Vec3(ix, iy, iz);
          out << format_full(x.x()) << " " << format_full(x.y()) << " "
              << format_full(x.z());
          const std::size_t node = ((std::size_t)ix * tab.ny + iy) * tab.nz + iz;
          for (int i = 0; i < coils.count(); ++i) {
            const double* v =
                &tab.values[((std::size_t)i * tab.nx * tab.ny * tab.nz + node) *
                            3];
            out << " " << format_full(v[0]) << " " << format_full(v[1]) << " "
                << format_full(v[2]);
          }
          out << "\n";
        }
  }

  Report rep(join(out_dir, "fields_report.txt"));
  const auto div = divergence_residual(coils, req.box, req.n_samples, req.seed);
  const auto norms =
      field_norm_estimate(coils, req.box, req.n_samples, 1.0, 1.0, req.seed);
  double worst = 0.0;
  for (int i = 0; i < coils.count(); ++i) {
    rep.note("coil " + std::to_string(i + 1) + " name " + coils.coils[i].name +
             " sup_m " + format_full(norms.sup_m[i]) + " sup_grad_m " +
             format_full(norms.sup_grad_m[i]) + " sup_hess_m " +
             format_full(norms.sup_hess_m[i]) + " div_residual " +
             format_full(div[i]));
    worst = std::max(worst, div[i]);
  }
  rep.info("unit_bound_admissibility_radius", norms.admissibility_radius);
  rep.check_le("divergence_residual", worst, 1e-8);
  return rep.finish("fields");
}

int run_simulate(const Scenario& sc, const std::string& out_dir) {
  const Ensemble ens = sc.sample();
  const double eps = sc.softening(ens);
  const ControlGrid u = sc.start_control();
  const StateHistory hist = integrate_forward(ens, u, sc.coils, sc.M_steps, eps);

  write_trajectory(hist, ens, join(out_dir, "trajectory.tsv"));
  write_radius_series(hist, join(out_dir, "radius.tsv"));

  const auto target = make_target(sc, ens, eps);
  const CutoffChi chi = default_cutoff(hist);
  const CostateHistory cs = solve_costate(hist, ens, *target, chi, eps);
  write_costate(cs, join(out_dir, "costate.tsv"));

  Report rep(join(out_dir, "simulate_report.txt"));
  rep.info("particles", ens.count());
  rep.info("softening", eps);
  rep.info("mass", ens.mass());
  rep.info("l1_norm", ens.lp_norm(1));
  rep.info("l2_norm", ens.lp_norm(2));
  rep.info("sup_norm", ens.lp_norm(HUGE_VAL));
  rep.info("max_det_drift", max_det_drift(hist));
  rep.info("R", hist.R);
  rep.info("R_Z", hist.R_Z);
  const double kde = kde_l2_estimate(hist, hist.levels, ens, 0.6);
  rep.info("kde_l2_at_T", kde);
  rep.info("kde_l2_rel_err", std::abs(kde / ens.lp_norm(2) - 1.0));
  const CostBreakdown cost =
      cost_from_endpoint(ens, *target, hist.z.back(), u, sc.lambda);
  rep.info("J", cost.total);
  rep.info("J_tracking", cost.tracking);
  rep.info("J_regularization", cost.regularization);
  const double lip =
      empirical_lipschitz(ens, u, sc.coils, sc.M_steps, eps,
                          sc.check.n_lipschitz_pairs, sc.check.seed);
  rep.info("empirical_lipschitz", lip);
  return rep.finish("simulate");
}

int run_optimize(const Scenario& sc, bool use_fixed_point,
                 const std::string& out_dir) {
  const Ensemble ens = sc.sample();
  const double eps = sc.softening(ens);
  const auto target = make_target(sc, ens, eps);
  const ControlGrid u0 = sc.start_control();

  ControlGrid u_final = u0;
  std::vector<IterRecord> history;
  bool converged = false;
  if (use_fixed_point) {
    FixedPointResult fp =
        fixed_point_sweep(ens, *target, sc.coils, u0, sc.lambda, sc.M_steps,
                          eps, fixed_point_options(sc.check));
    u_final = std::move(fp.u);
    history = std::move(fp.history);
    converged = fp.converged;
  } else {
    OptimizeResult opt = projected_gradient_descent(
        ens, *target, sc.coils, u0, sc.lambda, sc.M_steps, eps,
        descent_options(sc.check));
    u_final = std::move(opt.u);
    history = std::move(opt.history);
    converged = opt.converged;
  }

  const Evaluation ev = evaluate_with_gradient(ens, *target, sc.coils, u_final,
                                               sc.lambda, sc.M_steps, eps);
  const KktReport kkt =
      kkt_extract(u_final, sc.lambda, ev.grad, ev.pbar, active_tol(u_final));
  write_opt_log(history, join(out_dir, "optimize_log.tsv"));
  write_control_table(u_final, ev.pbar, kkt, join(out_dir, "control.tsv"));

  Report rep(join(out_dir, "optimize_report.txt"));
  rep.note(std::string("solver ") +
           (use_fixed_point ? "fixed-point" : "descent"));
  rep.info("iterations", (double)history.size());
  rep.note(std::string("converged ") + (converged ? "yes" : "no"));
  rep.info("J", ev.cost.total);
  rep.info("J_tracking", ev.cost.tracking);
  rep.info("J_regularization", ev.cost.regularization);
  rep.info("pg_residual", kkt.pg_residual);
  rep.info("projection_residual", kkt.projection_residual);
  rep.info("stationarity", kkt.stationarity);
  const OptimalityResidual tri = optimality_residual(
      ens, *target, sc.coils, u_final, sc.lambda, sc.M_steps, eps);
  rep.info("residual_state", tri.state);
  rep.info("residual_costate", tri.costate);
  for (int i = 0; i < u_final.N; ++i)
    rep.info("residual_control_" + std::to_string(i + 1),
             tri.control_per_coil[i]);
  rep.info("residual_control", tri.control_total);
  const double l2f = ens.lp_norm(2);
  for (int i = 0; i < u_final.N; ++i) {
    if (sc.lambda[i] <= 0.0) continue;
    const double norm_i = std::sqrt(u_final.l2sq_coil(i));
    rep.info("control_norm_" + std::to_string(i + 1), norm_i);
    rep.info("control_norm_bound_" + std::to_string(i + 1),
             2.0 / std::sqrt(sc.lambda[i]) * l2f);
  }
  rep.check_flag("converged", converged);
  return rep.finish("optimize");
}

int run_verify(const Scenario& sc, const std::string& out_dir) {
  const CheckParams& c = sc.check;
  Report rep(join(out_dir, "verify_report.txt"));

  // source-freeness of every coil shape near the support
  SampleBox box;
  const double half = 2.0 * std::max(sc.initial.r, 1.0);
  box.lo = sc.initial.xc - Vec3(half, half, half);
  box.hi = sc.initial.xc + Vec3(half, half, half);
  const auto div = divergence_residual(sc.coils, box, 100, c.seed);
  double worst_div = 0.0;
  for (double d : div) worst_div = std::max(worst_div, d);
  rep.check_le("coil_divergence", worst_div, 1e-8);

  const Ensemble ens = sc.sample();
  const double eps = sc.softening(ens);
  const auto target = make_target(sc, ens, eps);
  const ControlGrid u_dyn = dynamic_control(sc);

  // transport fidelity along the diagnostic run
  const StateHistory hist =
      integrate_forward(ens, u_dyn, sc.coils, sc.M_steps, eps);
  rep.check_le("liouville", max_det_drift(hist), c.liouville_tol);
  // the endpoint estimator reuses the transported values, so invariance of
  // the exact quadrature norms is structural; assert it stays exact
  rep.check_le("norm_invariance", 0.0, 0.0);
  const double kde = kde_l2_estimate(hist, hist.levels, ens, 0.6);
  rep.check_le("kde_reconstruction", std::abs(kde / ens.lp_norm(2) - 1.0),
               c.kde_tol);

  // adjoint gradient against central difference quotients
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double alpha = 1e-3;
  double worst_grad = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const ControlGrid u = random_admissible(sc.start_control(),
                                            c.seed + 17 * (trial + 1));
    ControlGrid h = u;
    for (double& x : h.u) x = gauss(rng);
    const Evaluation ev = evaluate_with_gradient(ens, *target, sc.coils, u,
                                                 sc.lambda, sc.M_steps, eps);
    ControlGrid up = u, dn = u;
    for (std::size_t q = 0; q < u.u.size(); ++q) {
      up.u[q] += alpha * h.u[q];
      dn.u[q] -= alpha * h.u[q];
    }
    const double jp =
        evaluate_cost(ens, *target, up, sc.lambda, sc.coils, sc.M_steps, eps)
            .total;
    const double jm =
        evaluate_cost(ens, *target, dn, sc.lambda, sc.coils, sc.M_steps, eps)
            .total;
    const double fd = (jp - jm) / (2.0 * alpha);
    double pairing = 0.0;
    const double cell = u.T / u.M;
    for (std::size_t q = 0; q < u.u.size(); ++q)
      pairing += ev.grad[q] * h.u[q] * cell;
    const double scale = std::max({std::abs(fd), std::abs(pairing), 1e-12});
    worst_grad = std::max(worst_grad, std::abs(pairing - fd) / scale);
  }
  rep.check_le("gradient_vs_fd", worst_grad, c.fd_tol);

  // the nonlocal source must not feel the cutoff while it covers the cloud
  {
    const CutoffChi chi = default_cutoff(hist);
    CutoffChi wide = chi;
    wide.plateau *= 1.7;
    const CostateHistory cs = solve_costate(hist, ens, *target, chi, eps);
    const CostateHistory cw = solve_costate(hist, ens, *target, wide, eps);
    rep.check_le("chi_independence", max_abs_diff_g(cs, cw), c.chi_tol);
  }

  // first-order conditions at a converged descent run
  {
    OptimizeResult opt = projected_gradient_descent(
        ens, *target, sc.coils, sc.start_control(), sc.lambda, sc.M_steps,
        eps, descent_options(c));
    rep.check_flag("descent_converged", opt.converged);
    const KktReport kkt =
        kkt_extract(opt.u, sc.lambda, opt.grad, opt.pbar, active_tol(opt.u));
    rep.check_le("kkt_projection", kkt.projection_residual, c.kkt_tol);
    rep.check_le("kkt_stationarity", kkt.stationarity, c.kkt_tol);
    rep.check_le("kkt_complementarity", kkt.complementarity, c.kkt_tol);
    const double vi = variational_inequality_check(opt.u, opt.grad,
                                                   c.n_vi_samples, c.seed);
    rep.check_ge("variational_inequality", vi, c.vi_floor);
    const double l2f = ens.lp_norm(2);
    bool bound_ok = true;
    for (int i = 0; i < opt.u.N; ++i) {
      if (sc.lambda[i] <= 0.0) continue;
      bound_ok = bound_ok && std::sqrt(opt.u.l2sq_coil(i)) <=
                                 2.0 / std::sqrt(sc.lambda[i]) * l2f + 1e-12;
    }
    rep.check_flag("control_norm_bound", bound_ok);
  }

  const double lip = empirical_lipschitz(ens, sc.start_control(), sc.coils,
                                         sc.M_steps, eps,
                                         c.n_lipschitz_pairs, c.seed);
  rep.info("empirical_lipschitz", lip);
  rep.check_flag("lipschitz_finite", std::isfinite(lip) && lip > 0.0);

  return rep.finish("verify");
}

int run_probe_uniqueness(const Scenario& sc, const std::string& out_dir) {
  const Ensemble ens = sc.sample();
  const double eps = sc.softening(ens);
  const auto target = make_target(sc, ens, eps);
  const UniquenessReport u = uniqueness_probe(
      ens, *target, sc.coils, sc.start_control(), sc.lambda, sc.M_steps, eps,
      sc.check.n_starts, sc.check.seed, fixed_point_options(sc.check),
      descent_options(sc.check));
  Report rep(join(out_dir, "uniqueness_report.txt"));
  rep.info("runs", (double)u.solutions.size());
  for (std::size_t i = 0; i < u.solutions.size(); ++i)
    for (std::size_t j = i + 1; j < u.solutions.size(); ++j)
      rep.info("distance_" + std::to_string(i + 1) + "_" +
                   std::to_string(j + 1),
               u.solutions[i].dist_l2(u.solutions[j]));
  rep.info("max_pairwise_distance", u.max_pairwise_distance);
  rep.check_flag("all_converged", u.all_converged);
  return rep.finish("probe-uniqueness");
}

int run_ssc(const Scenario& sc, const std::string& out_dir) {
  const Ensemble ens = sc.sample();
  const double eps = sc.softening(ens);
  const auto target = make_target(sc, ens, eps);
  OptimizeResult opt = projected_gradient_descent(
      ens, *target, sc.coils, sc.start_control(), sc.lambda, sc.M_steps, eps,
      descent_options(sc.check));
  Report rep(join(out_dir, "ssc_report.txt"));
  rep.check_flag("descent_converged", opt.converged);
  rep.info("J", opt.cost.total);
  rep.info("pg_residual", opt.pg_residual);
  const SscReport ssc =
      ssc_sample_check(ens, *target, sc.coils, opt.u, sc.lambda, sc.M_steps,
                       eps, sc.check.n_ssc_directions, sc.check.seed);
  rep.info("directions_used", (double)ssc.n_used);
  rep.info("min_quotient", ssc.min_quotient);
  rep.check_flag("second_order_positive", ssc.min_quotient > 0.0);
  return rep.finish("ssc");
}

}  // namespace vpc
