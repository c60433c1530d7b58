#include <cmath>
#include <vector>

#include "core/control.h"
#include "core/error.h"
#include "core/optimize.h"
#include "doctest.h"

using namespace vpc;

namespace {

ControlGrid boxed_grid(int N, int M, double T, double lo, double hi) {
  ControlGrid g = ControlGrid::zeros(N, M, T);
  for (double& x : g.a) x = lo;
  for (double& x : g.b) x = hi;
  return g;
}

}  // namespace

TEST_CASE("box projection clamps and breaks ties toward the lower bound") {
  CHECK(project_box(0.3, -1.0, 1.0) == 0.3);
  CHECK(project_box(-5.0, -1.0, 1.0) == -1.0);
  CHECK(project_box(7.0, -1.0, 1.0) == 1.0);
  CHECK(project_box(0.4, 2.0, 2.0) == 2.0);
  CHECK(project_box(3.0, -HUGE_VAL, HUGE_VAL) == 3.0);
  CHECK_THROWS_AS(project_box(0.0, 1.0, -1.0), Error);
}

TEST_CASE("control cells are left closed and clamped at the ends") {
  const ControlGrid g = ControlGrid::zeros(2, 4, 1.0);
  CHECK(g.dt() == 0.25);
  CHECK(g.cell(0.0) == 0);
  CHECK(g.cell(0.1) == 0);
  CHECK(g.cell(0.25) == 1);   // boundaries open the next cell
  CHECK(g.cell(0.999) == 3);
  CHECK(g.cell(1.0) == 3);    // endpoint folds into the last cell
  CHECK(g.cell(-0.5) == 0);
  CHECK(g.cell(9.0) == 3);
}

TEST_CASE("value lookup returns the row of the containing cell") {
  ControlGrid g = ControlGrid::zeros(2, 3, 0.6);
  g.at(0, 0) = 1.0;
  g.at(0, 1) = 2.0;
  g.at(0, 2) = 3.0;
  g.at(1, 0) = -1.0;
  g.at(1, 1) = -2.0;
  g.at(1, 2) = -3.0;
  double out[2];
  g.values_at(0.3, out);
  CHECK(out[0] == 2.0);
  CHECK(out[1] == -2.0);
  g.values_at(0.6, out);
  CHECK(out[0] == 3.0);
  CHECK(out[1] == -3.0);
}

TEST_CASE("bound validation requires zero to stay feasible") {
  ControlGrid g = boxed_grid(1, 2, 1.0, -1.0, 1.0);
  CHECK_NOTHROW(g.validate_bounds());
  g.a[1] = 0.5;
  CHECK_THROWS_AS(g.validate_bounds(), Error);
  g.a[1] = -1.0;
  g.b[0] = -0.2;
  CHECK_THROWS_AS(g.validate_bounds(), Error);
}

TEST_CASE("in-place projection restores admissibility") {
  ControlGrid g = boxed_grid(1, 3, 1.0, -1.0, 2.0);
  g.u = {5.0, -7.0, 0.5};
  CHECK(!g.admissible());
  g.project_in_place();
  CHECK(g.admissible());
  CHECK(g.u[0] == 2.0);
  CHECK(g.u[1] == -1.0);
  CHECK(g.u[2] == 0.5);
  g.u[2] = 2.0 + 1e-9;
  CHECK(!g.admissible());
  CHECK(g.admissible(1e-8));
}

TEST_CASE("grid norms follow the piecewise-constant quadrature") {
  ControlGrid g = ControlGrid::zeros(2, 2, 2.0);  // dt = 1
  g.u = {1.0, 2.0, 3.0, -4.0};
  CHECK(g.l2sq() == doctest::Approx(30.0).epsilon(1e-15));
  CHECK(g.l2sq_coil(0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(g.l2sq_coil(1) == doctest::Approx(25.0).epsilon(1e-15));
  CHECK(g.sup_norm() == 4.0);

  ControlGrid h = g;
  h.u = {0.0, 2.0, 3.0, -2.0};
  CHECK(g.inner(h) == doctest::Approx(0.0 + 4.0 + 9.0 + 8.0).epsilon(1e-15));
  CHECK(g.dist_l2(h) == doctest::Approx(std::sqrt(1.0 + 4.0)).epsilon(1e-15));
}

TEST_CASE("multiplier extraction splits the gradient at the bounds") {
  ControlGrid g = boxed_grid(1, 4, 1.0, -1.0, 1.0);
  g.u = {-1.0, 1.0 - 1e-7, 0.0, 0.5};
  const std::vector<double> lambda = {2.0};
  const std::vector<double> grad = {2.0, -3.0, 0.5, -0.25};
  const std::vector<double> pbar = {-4.0, 4.0, 1.0, 1.0};
  const KktReport rep = kkt_extract(g, lambda, grad, pbar, 1e-6);

  CHECK(rep.mu_a[0] == 2.0);
  CHECK(rep.mu_b[0] == 0.0);
  CHECK(rep.mu_b[1] == 3.0);
  CHECK(rep.mu_a[1] == 0.0);
  CHECK(rep.mu_a[2] == 0.0);
  CHECK(rep.mu_b[2] == 0.0);
  // interior rows leave the raw gradient as the stationarity defect
  CHECK(rep.stationarity == doctest::Approx(0.5).epsilon(1e-12));
  // the nearly-active upper row pays its gap times its multiplier
  CHECK(rep.complementarity == doctest::Approx(3e-7).epsilon(1e-9));

  // projection residual: u - P(pbar / lambda) is (0, -1e-7, -0.5, 0) with
  // cell weight 0.25
  CHECK(rep.projection_residual ==
        doctest::Approx(std::sqrt(0.25 * (1e-14 + 0.25))).epsilon(1e-12));
  // projected-gradient residual: u - P(u - grad) = (0, -1e-7, 0.5, -0.25)
  CHECK(rep.pg_residual ==
        doctest::Approx(std::sqrt(0.25 * (1e-14 + 0.25 + 0.0625)))
            .epsilon(1e-12));
}

TEST_CASE("a zero regularization weight removes its projection row") {
  ControlGrid g = boxed_grid(1, 2, 1.0, -1.0, 1.0);
  g.u = {0.3, -0.2};
  const KktReport rep =
      kkt_extract(g, {0.0}, {0.0, 0.0}, {123.0, -77.0}, 1e-6);
  CHECK(rep.projection_residual == 0.0);
}

TEST_CASE("multiplier extraction validates its input sizes") {
  ControlGrid g = boxed_grid(1, 2, 1.0, -1.0, 1.0);
  CHECK_THROWS_AS(kkt_extract(g, {1.0}, {0.0}, {0.0, 0.0}, 1e-6), Error);
  CHECK_THROWS_AS(kkt_extract(g, {1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}, 1e-6),
                  Error);
}

TEST_CASE("the sampled inequality pairing is zero at a flat gradient") {
  ControlGrid g = boxed_grid(2, 3, 1.0, -2.0, 2.0);
  const std::vector<double> grad(6, 0.0);
  CHECK(variational_inequality_check(g, grad, 16, 5) == 0.0);
}

TEST_CASE("the sampled inequality pairing is nonnegative at a bound minimum") {
  // u pinned at the lower bound with an inward-pushing gradient: every
  // admissible comparison point lies above, so all pairings are >= 0
  ControlGrid g = boxed_grid(1, 2, 1.0, -1.0, 1.0);
  g.u = {-1.0, -1.0};
  const std::vector<double> grad = {0.7, 0.3};
  const double worst = variational_inequality_check(g, grad, 32, 9);
  CHECK(worst >= 0.0);
  const double again = variational_inequality_check(g, grad, 32, 9);
  CHECK(worst == again);
}

TEST_CASE("the sampled inequality pairing validates its inputs") {
  ControlGrid g = boxed_grid(1, 2, 1.0, -1.0, 1.0);
  CHECK_THROWS_AS(variational_inequality_check(g, {0.0}, 8, 1), Error);
  CHECK_THROWS_AS(variational_inequality_check(g, {0.0, 0.0}, 0, 1), Error);
}

TEST_CASE("cone projection frees interior rows and pins strictly active ones") {
  ControlGrid u = boxed_grid(1, 4, 1.0, -1.0, 1.0);
  u.u = {-1.0, 1.0, 0.2, -1.0};
  ControlGrid h = u;
  h.u = {-0.6, 0.4, 0.9, 0.5};
  // strictly active lower (grad > tol), strictly active upper (grad < -tol),
  // interior with noise-level gradient, weakly active lower (tiny grad)
  const std::vector<double> grad = {0.8, -0.5, 1e-9, 1e-12};
  const ControlGrid out = critical_cone_project(h, u, grad, 1e-6, 1e-7);
  CHECK(out.u[0] == 0.0);
  CHECK(out.u[1] == 0.0);
  CHECK(out.u[2] == 0.9);
  CHECK(out.u[3] == 0.5);  // sign already feasible, kept

  ControlGrid h2 = u;
  h2.u = {0.3, -0.2, -0.4, -0.7};
  const ControlGrid out2 = critical_cone_project(h2, u, grad, 1e-6, 1e-7);
  CHECK(out2.u[0] == 0.0);   // still strictly active
  CHECK(out2.u[1] == 0.0);
  CHECK(out2.u[2] == -0.4);  // interior stays free
  CHECK(out2.u[3] == 0.0);   // weakly active lower clamps negative parts
}

TEST_CASE("cone projection rejects mismatched grids") {
  ControlGrid u = boxed_grid(1, 4, 1.0, -1.0, 1.0);
  ControlGrid h = boxed_grid(1, 3, 1.0, -1.0, 1.0);
  CHECK_THROWS_AS(
      critical_cone_project(h, u, std::vector<double>(4, 0.0), 1e-6, 1e-7),
      Error);
}

TEST_CASE("random admissible draws respect bounds and their seed") {
  ControlGrid tpl = boxed_grid(2, 5, 1.0, -0.5, 1.5);
  const ControlGrid a = random_admissible(tpl, 42);
  const ControlGrid b = random_admissible(tpl, 42);
  const ControlGrid c = random_admissible(tpl, 43);
  CHECK(a.admissible());
  for (std::size_t q = 0; q < a.u.size(); ++q) CHECK(a.u[q] == b.u[q]);
  bool any_diff = false;
  for (std::size_t q = 0; q < a.u.size(); ++q)
    any_diff = any_diff || (a.u[q] != c.u[q]);
  CHECK(any_diff);

  // unbounded rows fall back to the unit interval
  ControlGrid open = ControlGrid::zeros(1, 4, 1.0);
  const ControlGrid d = random_admissible(open, 7);
  for (double v : d.u) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}
