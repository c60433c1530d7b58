#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "core/error.h"

namespace vpc {

inline double project_box(double xi, double lo, double hi) {
  if (lo > hi) fail(ErrorKind::invalid_argument, "box bounds with lo > hi");
  // ties at lo == hi resolve to lo for determinism
  return std::min(std::max(xi, lo), hi);
}

// Piecewise-constant coil currents on a uniform grid over [0, T] with
// per-cell box bounds a <= 0 <= b (so the zero control is always feasible).
struct ControlGrid {
  int N = 0;  // coils
  int M = 0;  // time cells
  double T = 0.0;
  std::vector<double> u;  // [i*M + m]
  std::vector<double> a;
  std::vector<double> b;

  static ControlGrid zeros(int N, int M, double T) {
    ControlGrid g;
    g.N = N;
    g.M = M;
    g.T = T;
    g.u.assign(static_cast<std::size_t>(N) * M, 0.0);
    g.a.assign(g.u.size(), -HUGE_VAL);
    g.b.assign(g.u.size(), HUGE_VAL);
    return g;
  }

  double dt() const { return T / M; }

  int cell(double t) const {
    // left-closed uniform intervals, clamped at the ends
    const int c = static_cast<int>(std::floor(t / dt()));
    return std::min(std::max(c, 0), M - 1);
  }

  double& at(int i, int m) { return u[static_cast<std::size_t>(i) * M + m]; }
  double at(int i, int m) const { return u[static_cast<std::size_t>(i) * M + m]; }

  void values_at(double t, double* out) const {
    const int m = cell(t);
    for (int i = 0; i < N; ++i) out[i] = at(i, m);
  }

  void validate_bounds() const {
    for (std::size_t q = 0; q < u.size(); ++q) {
      if (!(a[q] <= 0.0 && 0.0 <= b[q]))
        fail(ErrorKind::invalid_argument,
             "control bounds must satisfy a <= 0 <= b in every cell");
    }
  }

  void project_in_place() {
    for (std::size_t q = 0; q < u.size(); ++q)
      u[q] = project_box(u[q], a[q], b[q]);
  }

  bool admissible(double slack = 0.0) const {
    for (std::size_t q = 0; q < u.size(); ++q)
      if (u[q] < a[q] - slack || u[q] > b[q] + slack) return false;
    return true;
  }

  // L^2([0,T]) inner product of the piecewise-constant representations
  double inner(const ControlGrid& other) const {
    double acc = 0.0;
    for (std::size_t q = 0; q < u.size(); ++q) acc += u[q] * other.u[q];
    return acc * dt();
  }

  double l2sq() const { return inner(*this); }
  double l2sq_coil(int i) const {
    double acc = 0.0;
    for (int m = 0; m < M; ++m) acc += at(i, m) * at(i, m);
    return acc * dt();
  }

  double dist_l2(const ControlGrid& other) const {
    double acc = 0.0;
    for (std::size_t q = 0; q < u.size(); ++q) {
      const double d = u[q] - other.u[q];
      acc += d * d;
    }
    return std::sqrt(acc * dt());
  }

  double sup_norm() const {
    double m = 0.0;
    for (double x : u) m = std::max(m, std::abs(x));
    return m;
  }
};

}  // namespace vpc
