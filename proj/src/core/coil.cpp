#include "core/coil.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "core/error.h"
#include "core/textio.h"

namespace vpc {

namespace {

// 4-point Gauss-Legendre nodes/weights on [0,1]
constexpr double kGaussX[4] = {0.06943184420297371, 0.33000947820757187,
                               0.66999052179242813, 0.93056815579702629};
constexpr double kGaussW[4] = {0.17392742256872693, 0.32607257743127307,
                               0.32607257743127307, 0.17392742256872693};

}  // namespace

void Coil::finalize() {
  if (vertices.size() >= 2 &&
      (vertices.front() - vertices.back()).norm() == 0.0) {
    vertices.pop_back();
  }
  if (vertices.size() < 3)
    fail(ErrorKind::invalid_argument,
         "coil '" + name + "': a closed polyline needs at least 3 vertices");
  p1.clear();
  seg.clear();
  len.clear();
  Vec3 lo = vertices.front(), hi = vertices.front();
  for (std::size_t s = 0; s < vertices.size(); ++s) {
    const Vec3& a = vertices[s];
    const Vec3& b = vertices[(s + 1) % vertices.size()];
    const double l = (b - a).norm();
    if (l == 0.0)
      fail(ErrorKind::invalid_argument,
           "coil '" + name + "': consecutive vertices coincide");
    p1.push_back(a);
    seg.push_back(b - a);
    len.push_back(l);
    lo = lo.cwiseMin(a);
    hi = hi.cwiseMax(a);
  }
  reg = 1e-6 * (hi - lo).norm();
  if (reg == 0.0)
    fail(ErrorKind::invalid_argument, "coil '" + name + "': degenerate geometry");
}

Vec3 Coil::field(const Vec3& x) const {
  // per segment with r1 = x - p1, u = seg/len, b = u.r1:
  //   m += (u x r1) * [ (len - b)/sqrt(|x-p2|^2 + reg^2) + b/sqrt(|r1|^2 + reg^2) ]
  //        / (|u x r1|^2 + reg^2)
  Vec3 m = Vec3::Zero();
  const double r2s = reg * reg;
  for (std::size_t s = 0; s < p1.size(); ++s) {
    const Vec3 r1 = x - p1[s];
    const Vec3 r2 = r1 - seg[s];
    const Vec3 u = seg[s] / len[s];
    const double b = u.dot(r1);
    const Vec3 uxr = u.cross(r1);
    const double denom = uxr.squaredNorm() + r2s;
    const double i1 = (len[s] - b) / std::sqrt(r2.squaredNorm() + r2s);
    const double i2 = b / std::sqrt(r1.squaredNorm() + r2s);
    m += uxr * ((i1 + i2) / denom);
  }
  return amplitude * m;
}

Mat3 Coil::grad(const Vec3& x) const {
  Mat3 g = Mat3::Zero();
  const double r2s = reg * reg;
  for (std::size_t s = 0; s < p1.size(); ++s) {
    const Mat3 sk = skew(seg[s]);
    for (int q = 0; q < 4; ++q) {
      const Vec3 d = x - (p1[s] + kGaussX[q] * seg[s]);
      const double S = d.squaredNorm() + r2s;
      const double s3 = 1.0 / (S * std::sqrt(S));
      const double s5 = s3 / S;
      const Vec3 txd = seg[s].cross(d);
      g += kGaussW[q] * (s3 * sk - 3.0 * s5 * (txd * d.transpose()));
    }
  }
  return amplitude * g;
}

Mat3 Coil::grad_dot(const Vec3& x, const Vec3& dx) const {
  // d/de grad(x + e dx):  -3 s5 [ (d.dx) [t]_x + (t x dx) d^T + (t x d) dx^T ]
  //                       + 15 s7 (d.dx) (t x d) d^T
  Mat3 g = Mat3::Zero();
  const double r2s = reg * reg;
  for (std::size_t s = 0; s < p1.size(); ++s) {
    const Mat3 sk = skew(seg[s]);
    for (int q = 0; q < 4; ++q) {
      const Vec3 d = x - (p1[s] + kGaussX[q] * seg[s]);
      const double S = d.squaredNorm() + r2s;
      const double s3 = 1.0 / (S * std::sqrt(S));
      const double s5 = s3 / S;
      const double s7 = s5 / S;
      const Vec3 txd = seg[s].cross(d);
      const Vec3 txdx = seg[s].cross(dx);
      const double ddx = d.dot(dx);
      g += kGaussW[q] *
           (-3.0 * s5 *
                (ddx * sk + txdx * d.transpose() + txd * dx.transpose()) +
            15.0 * s7 * ddx * (txd * d.transpose()));
    }
  }
  return amplitude * g;
}

Vec3 CoilSet::superpose(const double* u, const Vec3& x) const {
  Vec3 b = Vec3::Zero();
  for (int i = 0; i < count(); ++i) b += u[i] * coils[i].field(x);
  return b;
}

Mat3 CoilSet::superpose_grad(const double* u, const Vec3& x) const {
  Mat3 g = Mat3::Zero();
  for (int i = 0; i < count(); ++i) g += u[i] * coils[i].grad(x);
  return g;
}

Mat3 CoilSet::superpose_grad_dot(const double* u, const Vec3& x,
                                 const Vec3& dx) const {
  Mat3 g = Mat3::Zero();
  for (int i = 0; i < count(); ++i) g += u[i] * coils[i].grad_dot(x, dx);
  return g;
}

namespace {

Vec3 sample_in_box(std::mt19937_64& rng, const SampleBox& box) {
  std::uniform_real_distribution<double> un(0.0, 1.0);
  Vec3 x;
  for (int c = 0; c < 3; ++c) x[c] = box.lo[c] + un(rng) * (box.hi[c] - box.lo[c]);
  return x;
}

double distance_to_coil(const Coil& coil, const Vec3& x) {
  double best = std::numeric_limits<double>::max();
  for (std::size_t s = 0; s < coil.p1.size(); ++s) {
    const Vec3 r1 = x - coil.p1[s];
    const double t = std::clamp(r1.dot(coil.seg[s]) / coil.seg[s].squaredNorm(), 0.0, 1.0);
    best = std::min(best, (r1 - t * coil.seg[s]).norm());
  }
  return best;
}

}  // namespace

FieldNormEstimate field_norm_estimate(const CoilSet& fields, const SampleBox& box,
                                      int n_samples, double bound_norm_a,
                                      double bound_norm_b, std::uint64_t seed) {
  FieldNormEstimate est;
  const int n = fields.count();
  est.sup_m.assign(n, 0.0);
  est.sup_grad_m.assign(n, 0.0);
  est.sup_hess_m.assign(n, 0.0);
  std::mt19937_64 rng(seed);
  double m_max = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Vec3 x = sample_in_box(rng, box);
    for (int i = 0; i < n; ++i) {
      const Coil& c = fields.coils[i];
      est.sup_m[i] = std::max(est.sup_m[i], c.field(x).norm());
      est.sup_grad_m[i] = std::max(est.sup_grad_m[i], c.grad(x).norm());
      double h = 0.0;
      for (int a = 0; a < 3; ++a)
        h = std::max(h, c.grad_dot(x, Vec3::Unit(a)).norm());
      est.sup_hess_m[i] = std::max(est.sup_hess_m[i], h);
      m_max = std::max(m_max, est.sup_m[i]);
    }
  }
  est.admissibility_radius =
      2.0 * m_max * std::sqrt(double(n)) * (bound_norm_a + bound_norm_b);
  return est;
}

std::vector<double> divergence_residual(const CoilSet& fields, const SampleBox& box,
                                        int n_samples, std::uint64_t seed) {
  std::vector<double> res(fields.count(), 0.0);
  std::mt19937_64 rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    Vec3 x = sample_in_box(rng, box);
    // keep samples off the curves so the softened kernel identity is clean
    for (int tries = 0; tries < 64; ++tries) {
      bool ok = true;
      for (const Coil& c : fields.coils)
        if (distance_to_coil(c, x) < 10.0 * c.reg) { ok = false; break; }
      if (ok) break;
      x = sample_in_box(rng, box);
    }
    for (int i = 0; i < fields.count(); ++i)
      res[i] = std::max(res[i], std::abs(fields.coils[i].grad(x).trace()));
  }
  return res;
}

Vec3 FieldTable::eval(int coil, const Vec3& x) const {
  const Vec3 rel = (x - box.lo) / spacing;
  const int ix = static_cast<int>(std::floor(rel.x()));
  const int iy = static_cast<int>(std::floor(rel.y()));
  const int iz = static_cast<int>(std::floor(rel.z()));
  if (coil < 0 || coil >= n_coils || ix < 0 || iy < 0 || iz < 0 ||
      ix >= nx - 1 || iy >= ny - 1 || iz >= nz - 1)
    fail(ErrorKind::invalid_argument, "field table query outside tabulated box");
  const double fx = rel.x() - ix, fy = rel.y() - iy, fz = rel.z() - iz;
  Vec3 out = Vec3::Zero();
  for (int cx = 0; cx < 2; ++cx)
    for (int cy = 0; cy < 2; ++cy)
      for (int cz = 0; cz < 2; ++cz) {
        const double wgt = (cx ? fx : 1 - fx) * (cy ? fy : 1 - fy) * (cz ? fz : 1 - fz);
        const std::size_t node =
            (static_cast<std::size_t>(ix + cx) * ny + (iy + cy)) * nz + (iz + cz);
        const double* v = &values[(static_cast<std::size_t>(coil) *
                                       static_cast<std::size_t>(nx) * ny * nz +
                                   node) * 3];
        out += wgt * Vec3(v[0], v[1], v[2]);
      }
  return out;
}

FieldTable tabulate_fields(const CoilSet& fields, const SampleBox& box,
                           double spacing) {
  if (spacing <= 0.0)
    fail(ErrorKind::invalid_argument, "field table spacing must be positive");
  FieldTable t;
  t.box = box;
  t.spacing = spacing;
  t.nx = static_cast<int>(std::floor((box.hi.x() - box.lo.x()) / spacing)) + 2;
  t.ny = static_cast<int>(std::floor((box.hi.y() - box.lo.y()) / spacing)) + 2;
  t.nz = static_cast<int>(std::floor((box.hi.z() - box.lo.z()) / spacing)) + 2;
  t.n_coils = fields.count();
  t.values.resize(static_cast<std::size_t>(t.n_coils) * t.nx * t.ny * t.nz * 3);
  for (int i = 0; i < t.n_coils; ++i)
    for (int ix = 0; ix < t.nx; ++ix)
      for (int iy = 0; iy < t.ny; ++iy)
        for (int iz = 0; iz < t.nz; ++iz) {
          const Vec3 x = box.lo + spacing * Vec3(ix, iy, iz);
          const Vec3 m = fields.coils[i].field(x);
          const std::size_t node = (static_cast<std::size_t>(ix) * t.ny + iy) * t.nz + iz;
          double* v = &t.values[(static_cast<std::size_t>(i) * t.nx * t.ny * t.nz + node) * 3];
          v[0] = m.x();
          v[1] = m.y();
          v[2] = m.z();
        }
  return t;
}

CoilSet load_coils(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open coil file: " + path);
  CoilSet set;
  Coil cur;
  bool open = false;
  std::string line;
  int lineno = 0;
  auto flush = [&] {
    if (open) {
      cur.finalize();
      set.coils.push_back(cur);
      cur = Coil{};
      open = false;
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(strip_comment(line));
    std::string tok;
    if (!(ss >> tok)) continue;
    if (tok == "coil") {
      flush();
      std::string kw;
      if (!(ss >> cur.name >> kw >> cur.amplitude) || kw != "amplitude")
        fail(ErrorKind::io, path + ":" + std::to_string(lineno) +
                                ": expected 'coil <name> amplitude <real>'");
      open = true;
    } else if (tok == "v") {
      if (!open)
        fail(ErrorKind::io, path + ":" + std::to_string(lineno) +
                                ": vertex before any 'coil' header");
      Vec3 x;
      if (!(ss >> x.x() >> x.y() >> x.z()))
        fail(ErrorKind::io, path + ":" + std::to_string(lineno) +
                                ": expected 'v x y z'");
      cur.vertices.push_back(x);
    } else {
      fail(ErrorKind::io, path + ":" + std::to_string(lineno) +
                              ": unknown directive '" + tok + "'");
    }
  }
  flush();
  if (set.coils.empty()) fail(ErrorKind::io, path + ": no coils defined");
  return set;
}

void save_coils(const CoilSet& fields, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write coil file: " + path);
  for (const Coil& c : fields.coils) {
    out << "coil " << c.name << " amplitude " << format_full(c.amplitude) << "\n";
    for (const Vec3& v : c.vertices)
      out << "v " << format_full(v.x()) << " " << format_full(v.y()) << " "
          << format_full(v.z()) << "\n";
  }
}

Coil make_loop(double radius, const Vec3& center, int n_segments,
               double amplitude, const std::string& name) {
  Coil c;
  c.name = name;
  c.amplitude = amplitude;
  for (int s = 0; s < n_segments; ++s) {
    const double a = 2.0 * M_PI * s / n_segments;
    c.vertices.push_back(center + radius * Vec3(std::cos(a), std::sin(a), 0.0));
  }
  c.finalize();
  return c;
}

}  // namespace vpc
