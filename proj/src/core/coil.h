#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/geom.h"

namespace vpc {

// Closed polyline current loop. The induced field shape is the line integral
//   m(x) = amplitude * sum_s int_s t(y) x (x - y) / (|x - y|^2 + reg^2)^{3/2} dy
// evaluated in closed form per segment; the spatial Jacobian uses a 4-point
// Gauss rule per segment. reg defaults to 1e-6 times the coil's bounding-box
// diagonal, so fields stay finite near (never on) the curve.
struct Coil {
  std::string name;
  double amplitude = 1.0;
  std::vector<Vec3> vertices;  // closed; an equal first/last point is merged

  // derived segment data (finalize() fills these)
  std::vector<Vec3> p1;    // segment starts
  std::vector<Vec3> seg;   // p2 - p1
  std::vector<double> len;
  double reg = 0.0;

  void finalize();
  Vec3 field(const Vec3& x) const;
  Mat3 grad(const Vec3& x) const;
  // directional derivative of the Jacobian: d/de grad(x + e dx) at e = 0
  Mat3 grad_dot(const Vec3& x, const Vec3& dx) const;
};

// Per-coil shapes plus superposition B(u)(x) = sum_i u_i m_i(x).
struct CoilSet {
  std::vector<Coil> coils;

  int count() const { return static_cast<int>(coils.size()); }
  Vec3 superpose(const double* u, const Vec3& x) const;
  Mat3 superpose_grad(const double* u, const Vec3& x) const;
  Mat3 superpose_grad_dot(const double* u, const Vec3& x, const Vec3& dx) const;
};

struct SampleBox {
  Vec3 lo{-1, -1, -1};
  Vec3 hi{1, 1, 1};
};

// Sampled sup-norm surrogates for the field shapes and their first two
// derivatives, plus the admissibility radius K = 2 M sqrt(N) (|a| + |b|)
// with M the largest sampled shape norm.
struct FieldNormEstimate {
  std::vector<double> sup_m;
  std::vector<double> sup_grad_m;
  std::vector<double> sup_hess_m;
  double admissibility_radius = 0.0;
};

FieldNormEstimate field_norm_estimate(const CoilSet& fields, const SampleBox& box,
                                      int n_samples, double bound_norm_a,
                                      double bound_norm_b, std::uint64_t seed);

// max over samples of |div m_i| per coil, using the analytic Jacobian.
// Samples closer than 10*reg to a coil segment are redrawn.
std::vector<double> divergence_residual(const CoilSet& fields, const SampleBox& box,
                                        int n_samples, std::uint64_t seed);

// Trilinear-interpolable tabulation of the field shapes on a uniform grid.
struct FieldTable {
  SampleBox box;
  double spacing = 0.0;
  int nx = 0, ny = 0, nz = 0;     // node counts per axis
  int n_coils = 0;
  std::vector<double> values;     // [coil][node][3], node index x-major

  Vec3 eval(int coil, const Vec3& x) const;  // throws outside the box
};

FieldTable tabulate_fields(const CoilSet& fields, const SampleBox& box, double spacing);

CoilSet load_coils(const std::string& path);
void save_coils(const CoilSet& fields, const std::string& path);

// regular polygon loop in a plane normal to ez, for tests and examples
Coil make_loop(double radius, const Vec3& center, int n_segments,
               double amplitude = 1.0, const std::string& name = "loop");

}  // namespace vpc
