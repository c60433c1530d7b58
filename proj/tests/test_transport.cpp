#include <cmath>
#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/initial.h"
#include "core/kernels.h"
#include "core/transport.h"
#include "doctest.h"

using namespace vpc;

namespace {

CoilSet one_loop(double amplitude = 1.0) {
  CoilSet set;
  set.coils.push_back(make_loop(3.0, Vec3(0.0, 0.0, -2.0), 24, amplitude, "loop"));
  return set;
}

Ensemble single_particle(const Vec6& z) {
  Ensemble e;
  e.z0 = {z};
  e.f0 = {1.0};
  e.w = {1.0};
  e.gradf0 = {Vec6::Zero()};
  e.h6 = 1.0;
  e.spacing = 0.5;
  e.spacing_v = 0.5;
  return e;
}

Ensemble small_bump(int res = 2) {
  BumpSpec spec;
  spec.amplitude = 1.0;
  return sample_initial(spec, res, 1.05, 0);
}

ControlGrid constant_control(int N, int M, double T, double value) {
  ControlGrid g = ControlGrid::zeros(N, M, T);
  for (double& x : g.u) x = value;
  return g;
}

}  // namespace

TEST_CASE("characteristic field is divergence free and matches its Jacobian") {
  const CoilSet fields = one_loop();
  const auto ens = small_bump();
  const double eps = ens.spacing;
  const double u_now[1] = {0.8};
  Vec6 z;
  z << 0.4, -0.2, 0.3, 0.6, -0.5, 0.1;

  const RhsEval ev = characteristic_rhs(z, -1, ens.z0, ens.w, u_now, fields, eps);
  CHECK((ev.dz.head<3>() - z.tail<3>()).norm() == 0.0);
  CHECK(std::abs(ev.A.trace()) < 1e-12);

  const double h = 1e-6;
  for (int c = 0; c < 6; ++c) {
    Vec6 zp = z, zm = z;
    zp[c] += h;
    zm[c] -= h;
    const Vec6 fd =
        (characteristic_rhs(zp, -1, ens.z0, ens.w, u_now, fields, eps).dz -
         characteristic_rhs(zm, -1, ens.z0, ens.w, u_now, fields, eps).dz) /
        (2.0 * h);
    CHECK((ev.A.col(c) - fd).norm() < 1e-6);
  }
}

TEST_CASE("characteristic velocity derivative reduces to the pair force") {
  const auto ens = small_bump();
  const CoilSet fields = one_loop();
  const double eps = ens.spacing;
  const double u_zero[1] = {0.0};
  std::vector<Vec3> E;
  pair_force(ens.z0, ens.w, eps, &E, nullptr);
  for (int k = 0; k < ens.count(); k += 7) {
    const RhsEval ev =
        characteristic_rhs(ens.z0[k], k, ens.z0, ens.w, u_zero, fields, eps);
    CHECK((ev.dz.tail<3>() - E[k]).norm() < 1e-14 * (1.0 + E[k].norm()));
  }
}

TEST_CASE("a lone particle with zero control streams freely") {
  Vec6 z;
  z << 0.3, -0.1, 0.2, 0.7, -0.4, 0.5;
  const Ensemble ens = single_particle(z);
  const CoilSet fields = one_loop();
  const double T = 0.8;
  const ControlGrid u = ControlGrid::zeros(1, 2, T);

  const StateHistory hist = integrate_forward(ens, u, fields, 4, ens.spacing);
  REQUIRE(hist.levels == 16);
  REQUIRE((int)hist.z.size() == hist.levels + 1);
  Vec6 expect = z;
  expect.head<3>() += T * z.tail<3>();
  CHECK((hist.z.back()[0] - expect).norm() < 1e-13);
  CHECK((hist.z.back()[0].tail<3>() - z.tail<3>()).norm() == 0.0);

  Mat6 J_expect = Mat6::Identity();
  J_expect.topRightCorner<3, 3>() = T * Mat3::Identity();
  CHECK((hist.J.back()[0] - J_expect).norm() < 1e-12);
}

TEST_CASE("magnetic force alone preserves particle speed") {
  Vec6 z;
  z << 2.0, 0.5, -1.0, 0.6, -0.3, 0.4;
  const Ensemble ens = single_particle(z);
  const CoilSet fields = one_loop();
  const ControlGrid u = constant_control(1, 2, 1.0, 1.5);
  const StateHistory hist = integrate_forward(ens, u, fields, 16, ens.spacing);
  const double v0 = z.tail<3>().norm();
  for (const auto& level : hist.z)
    CHECK(std::abs(level[0].tail<3>().norm() - v0) < 1e-8 * v0);
}

TEST_CASE("the stepper converges at fourth order") {
  Vec6 z;
  z << 2.5, 0.0, -1.0, 0.4, 0.8, 0.2;
  const Ensemble ens = single_particle(z);
  const CoilSet fields = one_loop();
  const double T = 1.0;
  auto endpoint = [&](int M) {
    const ControlGrid u = constant_control(1, 1, T, 1.5);
    return integrate_state_endpoint(ens, u, fields, M, ens.spacing)[0];
  };
  const Vec6 ref = endpoint(256);
  const double e4 = (endpoint(4) - ref).norm();
  const double e8 = (endpoint(8) - ref).norm();
  REQUIRE(e8 > 1e-13);  // stay above roundoff so the ratio is meaningful
  const double order = std::log2(e4 / e8);
  CHECK(order > 3.5);
  CHECK(order < 4.5);
}

TEST_CASE("interaction forces conserve weighted momentum exactly") {
  auto ens = small_bump();
  // push the weights apart so the balance is not an artifact of symmetry
  for (int k = 0; k < ens.count(); ++k) ens.w[k] *= 1.0 + 0.1 * (k % 5);
  const CoilSet fields = one_loop();
  const ControlGrid u = ControlGrid::zeros(1, 2, 0.5);  // no magnetic force
  const StateHistory hist = integrate_forward(ens, u, fields, 4, ens.spacing);
  Vec3 p0 = Vec3::Zero(), pT = Vec3::Zero();
  for (int k = 0; k < ens.count(); ++k) {
    p0 += ens.w[k] * hist.z.front()[k].tail<3>();
    pT += ens.w[k] * hist.z.back()[k].tail<3>();
  }
  CHECK((pT - p0).norm() < 1e-13 * (1.0 + p0.norm()));
}

TEST_CASE("endpoint-only integration agrees with the stored sweep") {
  const auto ens = small_bump();
  const CoilSet fields = one_loop();
  const ControlGrid u = constant_control(1, 2, 0.5, 0.9);
  const StateHistory hist = integrate_forward(ens, u, fields, 4, ens.spacing);
  const auto zT = integrate_state_endpoint(ens, u, fields, 4, ens.spacing);
  REQUIRE((int)zT.size() == ens.count());
  for (int k = 0; k < ens.count(); ++k)
    CHECK((zT[k] - hist.z.back()[k]).norm() == 0.0);
}

TEST_CASE("integration composes exactly across control cells") {
  // running [0, T] in one go must equal running [0, T/2] then restarting,
  // because steps never straddle control cells
  const auto ens = small_bump();
  const CoilSet fields = one_loop();
  const double T = 0.5;
  ControlGrid u = ControlGrid::zeros(1, 2, T);
  u.at(0, 0) = 1.2;
  u.at(0, 1) = -0.7;

  const auto z_full = integrate_state_endpoint(ens, u, fields, 4, ens.spacing);

  const ControlGrid u1 = constant_control(1, 1, T / 2, 1.2);
  const ControlGrid u2 = constant_control(1, 1, T / 2, -0.7);
  const auto z_half = integrate_state_endpoint(ens, u1, fields, 2, ens.spacing);
  Ensemble restart = ens;
  restart.z0 = z_half;
  const auto z_two =
      integrate_state_endpoint(restart, u2, fields, 2, ens.spacing);
  for (int k = 0; k < ens.count(); ++k)
    CHECK((z_two[k] - z_full[k]).norm() == 0.0);
}

TEST_CASE("backward integration returns to the initial states") {
  const auto ens = small_bump();
  const CoilSet fields = one_loop();
  const ControlGrid u = constant_control(1, 2, 0.5, 1.1);
  const auto zT = integrate_state_endpoint(ens, u, fields, 8, ens.spacing);
  const auto z0 =
      integrate_state_backward(zT, ens.w, u, fields, 8, ens.spacing);
  REQUIRE((int)z0.size() == ens.count());
  double worst = 0.0;
  for (int k = 0; k < ens.count(); ++k)
    worst = std::max(worst, (z0[k] - ens.z0[k]).norm());
  CHECK(worst < 1e-7);
}

TEST_CASE("the flow Jacobians stay volume preserving") {
  const auto ens = small_bump();
  const CoilSet fields = one_loop();
  const ControlGrid u = constant_control(1, 2, 0.5, 1.0);
  const StateHistory hist = integrate_forward(ens, u, fields, 8, ens.spacing);
  double worst = 0.0;
  for (const auto& level : hist.J)
    for (const auto& J : level)
      worst = std::max(worst, std::abs(J.determinant() - 1.0));
  CHECK(worst < 1e-7);
}

TEST_CASE("stored radii are the maxima over the stored levels") {
  const auto ens = small_bump();
  const CoilSet fields = one_loop();
  const ControlGrid u = constant_control(1, 2, 0.5, 1.0);
  const StateHistory hist = integrate_forward(ens, u, fields, 4, ens.spacing);
  double R = 0.0, R_Z = 0.0;
  for (const auto& level : hist.z)
    for (const auto& z : level) {
      R = std::max(R, z.head<3>().norm());
      R_Z = std::max(R_Z, z.norm());
    }
  CHECK(hist.R == R);
  CHECK(hist.R_Z == R_Z);
  CHECK(hist.R_Z >= hist.R);
}

TEST_CASE("density gradients transport through the inverse Jacobian") {
  Vec6 g;
  g << 0.4, -0.2, 0.7, 0.1, -0.5, 0.3;
  CHECK((grad_f(Mat6::Identity(), g) - g).norm() == 0.0);

  Mat6 J = Mat6::Identity();
  J(0, 3) = 0.5;
  J(2, 1) = -0.3;
  J(4, 4) = 1.0;
  J(5, 0) = 0.2;
  const Vec6 out = grad_f(J, g);
  CHECK((J.transpose() * out - g).norm() < 1e-12);
}

TEST_CASE("the sampled control-to-state sensitivity is reproducible") {
  const auto ens = small_bump();
  const CoilSet fields = one_loop();
  ControlGrid base = constant_control(1, 2, 0.5, 0.4);
  for (double& x : base.a) x = -2.0;
  for (double& x : base.b) x = 2.0;
  const double l1 = empirical_lipschitz(ens, base, fields, 4, ens.spacing, 3, 7);
  const double l2 = empirical_lipschitz(ens, base, fields, 4, ens.spacing, 3, 7);
  CHECK(l1 == l2);
  CHECK(std::isfinite(l1));
  CHECK(l1 > 0.0);
  const double l3 = empirical_lipschitz(ens, base, fields, 4, ens.spacing, 3, 8);
  CHECK(l3 != l1);
}
