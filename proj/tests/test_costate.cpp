#include <cmath>
#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/costate.h"
#include "core/error.h"
#include "core/initial.h"
#include "core/moments.h"
#include "core/target.h"
#include "core/transport.h"
#include "doctest.h"

using namespace vpc;

namespace {

CoilSet one_loop(double amplitude = 1.0) {
  CoilSet set;
  set.coils.push_back(make_loop(3.0, Vec3(0.0, 0.0, -2.0), 16, amplitude, "loop"));
  return set;
}

struct Setup {
  Ensemble ens;
  CoilSet fields;
  ControlGrid u;
  StateHistory hist;
  double eps;
};

Setup forward_run(double control_value, int M_steps = 4, double T = 0.4) {
  Setup s;
  BumpSpec spec;
  s.ens = sample_initial(spec, 2, 1.05, 0);
  s.fields = one_loop();
  s.u = ControlGrid::zeros(1, 2, T);
  for (double& x : s.u.u) x = control_value;
  s.eps = s.ens.spacing;
  s.hist = integrate_forward(s.ens, s.u, s.fields, M_steps, s.eps);
  return s;
}

}  // namespace

TEST_CASE("default cutoff plateau clears the cloud radius by a quarter") {
  const Setup s = forward_run(0.8);
  const CutoffChi chi = default_cutoff(s.hist);
  CHECK(chi.plateau == s.hist.R_Z * 1.25);
}

TEST_CASE("terminal sweep data match the analytic endpoint formulas") {
  const Setup s = forward_run(0.9);
  BumpSpec other;
  other.amplitude = 0.7;
  other.r = 1.3;
  other.xc = Vec3(0.2, 0.0, -0.1);
  const AnalyticTarget target(other);
  const CostateHistory cs =
      solve_costate(s.hist, s.ens, target, default_cutoff(s.hist), s.eps);

  REQUIRE(cs.M_sweep == 2 * s.hist.M_steps);
  REQUIRE((int)cs.g.size() == cs.M_sweep + 1);
  REQUIRE(cs.particle_count() == s.ens.count());
  CHECK(cs.times.back() == doctest::Approx(s.hist.T).epsilon(1e-15));

  const auto& zT = s.hist.z.back();
  const auto& JT = s.hist.J.back();
  std::vector<double> fd;
  std::vector<Vec6> gfd;
  target.values(zT, &fd);
  target.gradients(zT, &gfd);
  for (int k = 0; k < s.ens.count(); ++k) {
    CHECK(cs.g.back()[k] == doctest::Approx(s.ens.f0[k] - fd[k]).epsilon(1e-14));
    const Vec6 full = s.ens.gradf0[k] - JT[k].transpose() * gfd[k];
    const Vec6 track = -JT[k].transpose() * gfd[k];
    CHECK((cs.G_full.back()[k] - full).norm() < 1e-13 * (1.0 + full.norm()));
    CHECK((cs.G_track.back()[k] - track).norm() < 1e-13 * (1.0 + track.norm()));
  }
}

TEST_CASE("a synthesized target at its own control gives a vanishing adjoint") {
  const Setup s = forward_run(1.1);
  BumpSpec spec;
  const ReferenceTarget target(s.ens, spec, s.u, s.fields, s.hist.M_steps,
                               s.eps);
  const CostateHistory cs =
      solve_costate(s.hist, s.ens, target, default_cutoff(s.hist), s.eps);

  double gmax = 0.0, full_max = 0.0;
  for (const auto& level : cs.g)
    for (double v : level) gmax = std::max(gmax, std::abs(v));
  for (const auto& level : cs.G_full)
    for (const auto& G : level) full_max = std::max(full_max, G.norm());
  CHECK(gmax < 1e-6);
  CHECK(full_max < 1e-6);

  // the moment transporter keeps only the target part of the terminal data,
  // which here cancels the initial gradient
  const auto& track_T = cs.G_track.back();
  for (int k = 0; k < s.ens.count(); ++k)
    CHECK((track_T[k] + s.ens.gradf0[k]).norm() <
          1e-6 * (1.0 + s.ens.gradf0[k].norm()));
}

TEST_CASE("any cutoff that covers the cloud yields the same sweep") {
  const Setup s = forward_run(1.0);
  BumpSpec other;
  other.amplitude = 0.8;
  other.xc = Vec3(0.1, -0.1, 0.0);
  const AnalyticTarget target(other);
  const CutoffChi chi1 = default_cutoff(s.hist);
  CutoffChi chi2;
  chi2.plateau = chi1.plateau * 1.9;
  const CostateHistory a = solve_costate(s.hist, s.ens, target, chi1, s.eps);
  const CostateHistory b = solve_costate(s.hist, s.ens, target, chi2, s.eps);
  for (int m = 0; m <= a.M_sweep; ++m)
    for (int k = 0; k < a.particle_count(); ++k) {
      CHECK(a.g[m][k] == b.g[m][k]);
      CHECK((a.G_full[m][k] - b.G_full[m][k]).norm() == 0.0);
      CHECK((a.G_track[m][k] - b.G_track[m][k]).norm() == 0.0);
    }
}

TEST_CASE("eulerian gradients invert the transported representation") {
  Vec6 G;
  G << 0.3, -0.7, 0.2, 0.9, -0.1, 0.4;
  CHECK((eulerian_grad(Mat6::Identity(), G) - G).norm() == 0.0);
  Mat6 J = Mat6::Identity();
  J(1, 4) = 0.6;
  J(3, 2) = -0.4;
  J(5, 5) = 1.0;
  const Vec6 out = eulerian_grad(J, G);
  CHECK((J.transpose() * out - G).norm() < 1e-12);
}

TEST_CASE("moments vanish when the coils carry no field") {
  const Setup s = forward_run(0.7);
  CoilSet dead = one_loop(0.0);
  BumpSpec other;
  other.amplitude = 0.6;
  const AnalyticTarget target(other);
  const CostateHistory cs =
      solve_costate(s.hist, s.ens, target, default_cutoff(s.hist), s.eps);
  const auto p = moment_series(s.hist, cs, dead, s.ens.w);
  REQUIRE(p.size() == 1);
  for (double v : p[0]) CHECK(v == 0.0);
}

TEST_CASE("moment rows reproduce the pairing formula at every sample") {
  const Setup s = forward_run(1.2);
  BumpSpec other;
  other.amplitude = 0.9;
  other.vc = Vec3(0.1, 0.0, -0.1);
  const AnalyticTarget target(other);
  const CostateHistory cs =
      solve_costate(s.hist, s.ens, target, default_cutoff(s.hist), s.eps);
  const auto p = moment_series(s.hist, cs, s.fields, s.ens.w);
  REQUIRE((int)p[0].size() == cs.M_sweep + 1);

  const int stride = s.hist.levels / cs.M_sweep;
  for (int m = 0; m <= cs.M_sweep; m += 3) {
    double expect = 0.0;
    for (int k = 0; k < s.ens.count(); ++k) {
      const Vec6& z = s.hist.z[m * stride][k];
      const Vec3 dvg =
          eulerian_grad(s.hist.J[m * stride][k], cs.G_track[m][k]).tail<3>();
      const Vec3 mi = s.fields.coils[0].field(z.head<3>());
      expect -= s.ens.w[k] * z.tail<3>().cross(mi).dot(dvg);
    }
    CHECK(p[0][m] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("cell averaging is exact for cubic samples") {
  // t^3 sampled on nine uniform points over [0, 1], averaged over two cells
  std::vector<double> series(9);
  for (int i = 0; i < 9; ++i) {
    const double t = i / 8.0;
    series[i] = t * t * t;
  }
  const auto avg = cell_average_simpson(series, 2);
  REQUIRE(avg.size() == 2);
  CHECK(avg[0] == doctest::Approx(0.03125).epsilon(1e-14));
  CHECK(avg[1] == doctest::Approx(0.46875).epsilon(1e-14));
}

TEST_CASE("cell averaging rejects grids that do not split evenly") {
  std::vector<double> series(9, 1.0);
  CHECK_THROWS_AS(cell_average_simpson(series, 3), Error);   // 8 / 3 not integral
  std::vector<double> odd(10, 1.0);
  CHECK_THROWS_AS(cell_average_simpson(odd, 3), Error);      // 3 per cell, odd
  CHECK_NOTHROW(cell_average_simpson(series, 4));
}

TEST_CASE("the density-norm instrument is exact on the calibration cloud") {
  const Setup s = forward_run(0.8);
  const double est = kde_l2_estimate(s.hist, 0, s.ens, 0.6);
  CHECK(est == doctest::Approx(s.ens.lp_norm(2.0)).epsilon(1e-13));
}

TEST_CASE("the density-norm instrument tracks the transported cloud") {
  const Setup s = forward_run(1.0, 8, 0.5);
  const double est = kde_l2_estimate(s.hist, s.hist.levels, s.ens, 0.6);
  const double expect = s.ens.lp_norm(2.0);
  CHECK(std::abs(est - expect) < 0.08 * expect);
}
