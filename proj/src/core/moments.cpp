#include "core/moments.h"

#include <cmath>
#include <string>

#include "core/error.h"
#include "core/kernels.h"

namespace vpc {

std::vector<std::vector<double>> moment_series(const StateHistory& hist,
                                               const CostateHistory& cs,
                                               const CoilSet& fields,
                                               const std::vector<double>& w) {
  const int n = hist.particle_count();
  const int N = fields.count();
  const int stride = hist.levels / cs.M_sweep;
  std::vector<std::vector<double>> p(N,
                                     std::vector<double>(cs.M_sweep + 1, 0.0));
  std::vector<double> acc(static_cast<std::size_t>(n) * N);
  for (int m = 0; m <= cs.M_sweep; ++m) {
    const int lev = m * stride;
    const std::vector<Vec6>& z = hist.z[lev];
    const std::vector<Mat6>& J = hist.J[lev];
#pragma omp parallel for schedule(static) num_threads(workers())
    for (int k = 0; k < n; ++k) {
      const Vec3 dvg = eulerian_grad(J[k], cs.G_track[m][k]).tail<3>();
      const Vec3 x = z[k].head<3>();
      const Vec3 v = z[k].tail<3>();
      for (int i = 0; i < N; ++i) {
        const Vec3 mi = fields.coils[i].field(x);
        acc[static_cast<std::size_t>(k) * N + i] = v.cross(mi).dot(dvg);
      }
    }
    for (int i = 0; i < N; ++i) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += w[k] * acc[static_cast<std::size_t>(k) * N + i];
      p[i][m] = -s;
    }
  }
  return p;
}

std::vector<double> cell_average_simpson(const std::vector<double>& series,
                                         int M_cells) {
  const int M_sweep = static_cast<int>(series.size()) - 1;
  if (M_cells < 1 || M_sweep < 2)
    fail(ErrorKind::invalid_argument, "simpson average needs >= 2 samples");
  const int r = M_sweep / M_cells;
  if (r * M_cells != M_sweep || r % 2 != 0)
    fail(ErrorKind::invalid_argument,
         "sweep grid does not subdivide control cells evenly: " +
             std::to_string(M_sweep) + " samples over " +
             std::to_string(M_cells) + " cells");
  std::vector<double> out(M_cells);
  for (int c = 0; c < M_cells; ++c) {
    double s = series[c * r] + series[(c + 1) * r];
    for (int q = 1; q < r; q += 2) s += 4.0 * series[c * r + q];
    for (int q = 2; q < r; q += 2) s += 2.0 * series[c * r + q];
    out[c] = s / (3.0 * r);
  }
  return out;
}

GradientResult cost_gradient(const ControlGrid& u,
                             const std::vector<double>& lambda,
                             const StateHistory& hist,
                             const CostateHistory& cs, const CoilSet& fields,
                             const std::vector<double>& w) {
  if (static_cast<int>(lambda.size()) != u.N)
    fail(ErrorKind::invalid_argument,
         "regularization weight count differs from coil count");
  const auto p = moment_series(hist, cs, fields, w);
  GradientResult r;
  r.grad.resize(static_cast<std::size_t>(u.N) * u.M);
  r.pbar.resize(static_cast<std::size_t>(u.N) * u.M);
  for (int i = 0; i < u.N; ++i) {
    const std::vector<double> avg = cell_average_simpson(p[i], u.M);
    for (int m = 0; m < u.M; ++m) {
      r.pbar[static_cast<std::size_t>(i) * u.M + m] = avg[m];
      r.grad[static_cast<std::size_t>(i) * u.M + m] =
          lambda[i] * u.at(i, m) - avg[m];
    }
  }
  return r;
}

namespace {

double pullback_pair_sum(const std::vector<Vec6>& z,
                         const std::vector<Mat6>& J,
                         const std::vector<double>& w, double sx, double sv) {
  const int n = static_cast<int>(z.size());
  const double norm =
      1.0 / std::pow(2.0 * M_PI * sx * sv, 3.0);
  std::vector<Mat6> Jinv(n);
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int j = 0; j < n; ++j) Jinv[j] = J[j].partialPivLu().inverse();
  std::vector<double> row(n);
#pragma omp parallel for schedule(static) num_threads(workers())
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const Vec6 d = Jinv[j] * (z[k] - z[j]);
      const double q = d.head<3>().squaredNorm() / (sx * sx) +
                       d.tail<3>().squaredNorm() / (sv * sv);
      acc += w[j] * std::exp(-0.5 * q);
    }
    row[k] = w[k] * norm * acc;
  }
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += row[k];
  return total;
}

}  // namespace

double kde_l2_estimate(const StateHistory& hist, int level,
                       const Ensemble& ens, double bandwidth_factor) {
  if (level < 0 || level > hist.levels)
    fail(ErrorKind::invalid_argument, "kde level out of range");
  if (bandwidth_factor <= 0.0)
    fail(ErrorKind::invalid_argument, "kde bandwidth factor must be positive");
  const double sx = bandwidth_factor * ens.spacing;
  const double sv = bandwidth_factor * ens.spacing_v;
  const double lattice =
      pullback_pair_sum(hist.z[0], hist.J[0], ens.w, sx, sv);
  if (lattice <= 0.0)
    fail(ErrorKind::numerical, "kde calibration sum is not positive");
  const double l2 = ens.lp_norm(2.0);
  const double kappa = (l2 * l2) / lattice;
  const double raw =
      pullback_pair_sum(hist.z[level], hist.J[level], ens.w, sx, sv);
  return std::sqrt(kappa * raw);
}

}  // namespace vpc
