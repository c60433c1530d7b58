#include "core/scenario.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "core/error.h"
#include "core/textio.h"

namespace vpc {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

// (section, key) -> raw value; duplicates are rejected at insert
class ConfigMap {
 public:
  explicit ConfigMap(std::string origin) : origin_(std::move(origin)) {}

  void insert(const std::string& section, const std::string& key,
              const std::string& value, int line) {
    auto [it, fresh] = map_.try_emplace({section, key}, Entry{value, line});
    if (!fresh)
      fail(ErrorKind::io, where(line) + "duplicate key '" + key +
                              "' in [" + section + "] (first at line " +
                              std::to_string(it->second.line) + ")");
  }

  const Entry* find(const std::string& section, const std::string& key) {
    auto it = map_.find({section, key});
    if (it == map_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  // every key must have been consumed by a find(); leftovers are misspellings
  void reject_unused() const {
    for (const auto& [sk, entry] : map_)
      if (!entry.used)
        fail(ErrorKind::io, where(entry.line) + "unknown key '" + sk.second +
                                "' in section [" + sk.first + "]");
  }

  std::string where(int line) const {
    return origin_ + ":" + std::to_string(line) + ": ";
  }
  const std::string& origin() const { return origin_; }

  // keys of one section, for pattern-matched rows like u1, u2, ...
  std::vector<std::pair<std::string, int>> section_keys(
      const std::string& section) const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& [sk, entry] : map_)
      if (sk.first == section) out.push_back({sk.second, entry.line});
    return out;
  }

 private:
  std::string origin_;
  std::map<std::pair<std::string, std::string>, Entry> map_;
};

const std::set<std::string> kSections = {"coils",   "initial",
                                         "target",  "control",
                                         "discretization", "tolerances"};

ConfigMap tokenize(const std::string& text, const std::string& origin) {
  ConfigMap cfg(origin);
  std::istringstream ss(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(ErrorKind::io, cfg.where(line_no) + "malformed section header '" +
                                line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(section))
        fail(ErrorKind::io,
             cfg.where(line_no) + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::io,
           cfg.where(line_no) + "expected 'key = value', got '" + line + "'");
    if (section.empty())
      fail(ErrorKind::io,
           cfg.where(line_no) + "key before any section header");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      fail(ErrorKind::io, cfg.where(line_no) + "empty key");
    cfg.insert(section, key, trim(line.substr(eq + 1)), line_no);
  }
  return cfg;
}

// ---- typed getters (all defaulted; absence keeps the fallback) ----

double get_double(ConfigMap& cfg, const std::string& sec,
                  const std::string& key, double fallback, bool* seen = nullptr) {
  const Entry* e = cfg.find(sec, key);
  if (seen) *seen = e != nullptr;
  if (!e) return fallback;
  return parse_double(e->value, cfg.where(e->line) + key);
}

long long get_int(ConfigMap& cfg, const std::string& sec,
                  const std::string& key, long long fallback) {
  const Entry* e = cfg.find(sec, key);
  if (!e) return fallback;
  return parse_int(e->value, cfg.where(e->line) + key);
}

std::vector<double> get_vector(ConfigMap& cfg, const std::string& sec,
                               const std::string& key,
                               std::vector<double> fallback) {
  const Entry* e = cfg.find(sec, key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& tok : split_ws(e->value))
    out.push_back(parse_double(tok, cfg.where(e->line) + key));
  if (out.empty())
    fail(ErrorKind::io, cfg.where(e->line) + key + ": empty value");
  return out;
}

Vec3 get_vec3(ConfigMap& cfg, const std::string& sec, const std::string& key,
              const Vec3& fallback) {
  const Entry* e = cfg.find(sec, key);
  if (!e) return fallback;
  const auto toks = split_ws(e->value);
  if (toks.size() != 3)
    fail(ErrorKind::io, cfg.where(e->line) + key + ": expected 3 components");
  Vec3 v;
  for (int i = 0; i < 3; ++i)
    v[i] = parse_double(toks[i], cfg.where(e->line) + key);
  return v;
}

std::string get_string(ConfigMap& cfg, const std::string& sec,
                       const std::string& key, const std::string& fallback) {
  const Entry* e = cfg.find(sec, key);
  return e ? e->value : fallback;
}

// 1 value broadcasts over coils; otherwise exactly one value per coil
std::vector<double> per_coil(std::vector<double> v, int n,
                             const std::string& what) {
  if ((int)v.size() == 1) return std::vector<double>(n, v[0]);
  if ((int)v.size() != n)
    fail(ErrorKind::invalid_argument,
         what + ": expected 1 or " + std::to_string(n) + " values, got " +
             std::to_string(v.size()));
  return v;
}

// rows u1 = <M_u reals>, u2 = ... assembled row-major; missing rows stay zero
std::vector<double> control_rows(ConfigMap& cfg, const std::string& sec,
                                 int n_coils, int m_u) {
  std::vector<double> flat((std::size_t)n_coils * m_u, 0.0);
  for (const auto& [key, line] : cfg.section_keys(sec)) {
    if (key.size() < 2 || key[0] != 'u') continue;
    bool digits = true;
    for (std::size_t i = 1; i < key.size(); ++i)
      digits = digits && std::isdigit((unsigned char)key[i]);
    if (!digits) continue;
    const long long idx = parse_int(key.substr(1), cfg.where(line) + key);
    if (idx < 1 || idx > n_coils)
      fail(ErrorKind::invalid_argument,
           cfg.where(line) + key + ": coil index out of range 1.." +
               std::to_string(n_coils));
    const Entry* e = cfg.find(sec, key);
    const auto toks = split_ws(e->value);
    if ((int)toks.size() != m_u)
      fail(ErrorKind::invalid_argument,
           cfg.where(line) + key + ": expected " + std::to_string(m_u) +
               " cell values, got " + std::to_string(toks.size()));
    for (int m = 0; m < m_u; ++m)
      flat[(std::size_t)(idx - 1) * m_u + m] =
          parse_double(toks[m], cfg.where(line) + key);
  }
  return flat;
}

double dist_point_segment(const Vec3& p, const Vec3& a, const Vec3& ab) {
  const double den = ab.squaredNorm();
  double t = den > 0.0 ? (p - a).dot(ab) / den : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  return (a + t * ab - p).norm();
}

std::string join_path(const std::string& dir, const std::string& rel) {
  if (rel.empty() || rel.front() == '/' || dir.empty()) return rel;
  return dir.back() == '/' ? dir + rel : dir + "/" + rel;
}

void emit_vector(std::ostringstream& os, const std::string& key,
                 const std::vector<double>& v) {
  os << key << " =";
  for (double x : v) os << " " << format_full(x);
  os << "\n";
}

void emit_vec3(std::ostringstream& os, const std::string& key, const Vec3& v) {
  os << key << " = " << format_full(v.x()) << " " << format_full(v.y()) << " "
     << format_full(v.z()) << "\n";
}

void emit_bump(std::ostringstream& os, const BumpSpec& b) {
  os << "amplitude = " << format_full(b.amplitude) << "\n";
  os << "radius_x = " << format_full(b.r) << "\n";
  os << "radius_v = " << format_full(b.s) << "\n";
  emit_vec3(os, "center_x", b.xc);
  emit_vec3(os, "center_v", b.vc);
}

}  // namespace

ControlGrid Scenario::make_control(const std::vector<double>& values) const {
  ControlGrid g = ControlGrid::zeros(n_coils(), M_u, T);
  for (int i = 0; i < n_coils(); ++i)
    for (int m = 0; m < M_u; ++m) {
      g.a[(std::size_t)i * M_u + m] = lower[i];
      g.b[(std::size_t)i * M_u + m] = upper[i];
    }
  if (!values.empty()) {
    if (values.size() != g.u.size())
      fail(ErrorKind::invalid_argument, "control values: expected " +
                                            std::to_string(g.u.size()) +
                                            " entries");
    g.u = values;
  }
  g.validate_bounds();
  return g;
}

Ensemble Scenario::sample() const {
  return sample_initial(initial, resolution, pad, particle_cap);
}

void validate_scenario(const Scenario& sc) {
  auto req = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::invalid_argument, "scenario: " + msg);
  };
  const int n = sc.n_coils();
  req(n >= 1, "at least one coil is required");
  req(sc.T > 0.0, "T > 0 is required");
  req(sc.M_steps >= 1, "M_steps >= 1 is required");
  req(sc.M_u >= 1, "M_u >= 1 is required");
  req(sc.M_steps % sc.M_u == 0,
      "M_steps must be a multiple of M_u so no step straddles a control cell");
  req(sc.resolution >= 2, "resolution >= 2 is required");
  req(sc.pad > 0.0, "pad > 0 is required");
  req(sc.particle_cap >= 1, "particle_cap >= 1 is required");
  req(sc.eps >= 0.0, "eps >= 0 is required");
  req(sc.initial.amplitude > 0.0, "initial amplitude must be positive");
  req(sc.initial.r > 0.0 && sc.initial.s > 0.0,
      "initial support radii must be positive");
  if (sc.target_mode == TargetMode::analytic) {
    req(sc.target_bump.amplitude > 0.0, "target amplitude must be positive");
    req(sc.target_bump.r > 0.0 && sc.target_bump.s > 0.0,
        "target support radii must be positive");
    req(sc.target_u.empty(), "target u rows require mode = reference");
  } else {
    req((int)sc.target_u.size() == n * sc.M_u,
        "reference control must hold one row of M_u values per coil");
  }
  req((int)sc.lambda.size() == n, "lambda must hold one value per coil");
  req((int)sc.lower.size() == n && (int)sc.upper.size() == n,
      "bounds must hold one value per coil");
  for (int i = 0; i < n; ++i) {
    req(sc.lambda[i] >= 0.0, "lambda_" + std::to_string(i + 1) + " >= 0");
    req(sc.lower[i] <= 0.0 && 0.0 <= sc.upper[i],
        "bounds must satisfy a_i <= 0 <= b_i (coil " + std::to_string(i + 1) +
            ")");
  }
  if (!sc.start_u.empty()) {
    req((int)sc.start_u.size() == n * sc.M_u,
        "start control must hold one row of M_u values per coil");
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < sc.M_u; ++m) {
        const double v = sc.start_u[(std::size_t)i * sc.M_u + m];
        req(sc.lower[i] <= v && v <= sc.upper[i],
            "start control leaves the admissible box (coil " +
                std::to_string(i + 1) + ", cell " + std::to_string(m + 1) +
                ")");
      }
  }
  // the sampled support must stay off every coil curve (fields are finite
  // near but singular on the polyline as reg -> 0)
  const double guard = sc.initial.r * sc.pad;
  for (const auto& coil : sc.coils.coils)
    for (std::size_t s = 0; s < coil.p1.size(); ++s)
      req(dist_point_segment(sc.initial.xc, coil.p1[s], coil.seg[s]) > guard,
          "coil '" + coil.name + "' passes through the initial support");
  // the verification knobs
  const CheckParams& c = sc.check;
  req(c.opt_tol > 0.0 && c.fd_tol > 0.0 && c.liouville_tol > 0.0 &&
          c.kde_tol > 0.0 && c.chi_tol > 0.0 && c.kkt_tol > 0.0 &&
          c.uniq_tol > 0.0,
      "tolerances must be positive");
  req(c.vi_floor <= 0.0, "vi_floor must not be positive");
  req(c.max_iters >= 1 && c.n_vi_samples >= 1 && c.n_ssc_directions >= 1 &&
          c.n_starts >= 1 && c.n_lipschitz_pairs >= 1,
      "sample counts must be >= 1");
  req(c.theta > 0.0 && c.theta <= 1.0, "theta must lie in (0, 1]");
  // surfaces sampling-cap violations at load time
  sample_initial(sc.initial, sc.resolution, sc.pad, sc.particle_cap);
}

Scenario parse_scenario(const std::string& text, const std::string& dir,
                        const std::string& origin) {
  ConfigMap cfg = tokenize(text, origin);
  Scenario sc;

  const std::string file = get_string(cfg, "coils", "file", "");
  if (file.empty())
    fail(ErrorKind::io, origin + ": [coils] file is required");
  sc.coil_file = join_path(dir, file);
  sc.coils = load_coils(sc.coil_file);
  const int n = sc.coils.count();

  sc.initial.amplitude = get_double(cfg, "initial", "amplitude", 1.0);
  sc.initial.r = get_double(cfg, "initial", "radius_x", 1.0);
  sc.initial.s = get_double(cfg, "initial", "radius_v", 1.0);
  sc.initial.xc = get_vec3(cfg, "initial", "center_x", Vec3::Zero());
  sc.initial.vc = get_vec3(cfg, "initial", "center_v", Vec3::Zero());

  bool t_seen = false;
  sc.T = get_double(cfg, "discretization", "T", 0.0, &t_seen);
  if (!t_seen)
    fail(ErrorKind::invalid_argument,
         origin + ": [discretization] T is required");
  sc.M_steps = (int)get_int(cfg, "discretization", "M_steps", 8);
  sc.resolution = (int)get_int(cfg, "discretization", "resolution", 3);
  sc.pad = get_double(cfg, "discretization", "pad", 1.05);
  sc.particle_cap = (int)get_int(cfg, "discretization", "particle_cap", 4096);
  sc.eps = get_double(cfg, "discretization", "eps", 0.0);

  sc.M_u = (int)get_int(cfg, "control", "M_u", 4);
  if (sc.M_u < 1)
    fail(ErrorKind::invalid_argument,
         origin + ": [control] M_u must be >= 1");
  sc.lambda = per_coil(get_vector(cfg, "control", "lambda", {0.0}), n,
                       origin + ": lambda");
  sc.lower = per_coil(get_vector(cfg, "control", "lower",
                                 {-std::numeric_limits<double>::infinity()}),
                      n, origin + ": lower");
  sc.upper = per_coil(get_vector(cfg, "control", "upper",
                                 {std::numeric_limits<double>::infinity()}),
                      n, origin + ": upper");
  sc.start_u = control_rows(cfg, "control", n, sc.M_u);

  const std::string mode = get_string(cfg, "target", "mode", "analytic");
  if (mode == "analytic") {
    sc.target_mode = TargetMode::analytic;
    sc.target_bump = sc.initial;  // steer back to the start by default
    sc.target_bump.amplitude =
        get_double(cfg, "target", "amplitude", sc.initial.amplitude);
    sc.target_bump.r = get_double(cfg, "target", "radius_x", sc.initial.r);
    sc.target_bump.s = get_double(cfg, "target", "radius_v", sc.initial.s);
    sc.target_bump.xc = get_vec3(cfg, "target", "center_x", sc.initial.xc);
    sc.target_bump.vc = get_vec3(cfg, "target", "center_v", sc.initial.vc);
  } else if (mode == "reference") {
    sc.target_mode = TargetMode::reference;
    sc.target_u = control_rows(cfg, "target", n, sc.M_u);
  } else {
    fail(ErrorKind::invalid_argument,
         origin + ": [target] mode must be 'analytic' or 'reference'");
  }

  CheckParams& c = sc.check;
  c.opt_tol = get_double(cfg, "tolerances", "opt_tol", c.opt_tol);
  c.max_iters = (int)get_int(cfg, "tolerances", "max_iters", c.max_iters);
  c.theta = get_double(cfg, "tolerances", "theta", c.theta);
  c.fd_tol = get_double(cfg, "tolerances", "fd_tol", c.fd_tol);
  c.liouville_tol =
      get_double(cfg, "tolerances", "liouville_tol", c.liouville_tol);
  c.kde_tol = get_double(cfg, "tolerances", "kde_tol", c.kde_tol);
  c.chi_tol = get_double(cfg, "tolerances", "chi_tol", c.chi_tol);
  c.kkt_tol = get_double(cfg, "tolerances", "kkt_tol", c.kkt_tol);
  c.vi_floor = get_double(cfg, "tolerances", "vi_floor", c.vi_floor);
  c.uniq_tol = get_double(cfg, "tolerances", "uniq_tol", c.uniq_tol);
  c.n_vi_samples =
      (int)get_int(cfg, "tolerances", "n_vi_samples", c.n_vi_samples);
  c.n_ssc_directions =
      (int)get_int(cfg, "tolerances", "n_ssc_directions", c.n_ssc_directions);
  c.n_starts = (int)get_int(cfg, "tolerances", "n_starts", c.n_starts);
  c.n_lipschitz_pairs = (int)get_int(cfg, "tolerances", "n_lipschitz_pairs",
                                     c.n_lipschitz_pairs);
  c.seed = (std::uint64_t)get_int(cfg, "tolerances", "seed", (long long)c.seed);

  cfg.reject_unused();
  validate_scenario(sc);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string dir;
  const auto slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_scenario(buf.str(), dir, path);
}

std::string serialize_scenario(const Scenario& sc) {
  std::ostringstream os;
  os << "[coils]\n";
  os << "file = " << sc.coil_file << "\n\n";

  os << "[initial]\n";
  emit_bump(os, sc.initial);
  os << "\n[target]\n";
  if (sc.target_mode == TargetMode::analytic) {
    os << "mode = analytic\n";
    emit_bump(os, sc.target_bump);
  } else {
    os << "mode = reference\n";
    for (int i = 0; i < sc.n_coils(); ++i)
      emit_vector(os, "u" + std::to_string(i + 1),
                  std::vector<double>(
                      sc.target_u.begin() + (std::size_t)i * sc.M_u,
                      sc.target_u.begin() + (std::size_t)(i + 1) * sc.M_u));
  }

  os << "\n[control]\n";
  os << "M_u = " << sc.M_u << "\n";
  emit_vector(os, "lambda", sc.lambda);
  emit_vector(os, "lower", sc.lower);
  emit_vector(os, "upper", sc.upper);
  if (!sc.start_u.empty())
    for (int i = 0; i < sc.n_coils(); ++i)
      emit_vector(os, "u" + std::to_string(i + 1),
                  std::vector<double>(
                      sc.start_u.begin() + (std::size_t)i * sc.M_u,
                      sc.start_u.begin() + (std::size_t)(i + 1) * sc.M_u));

  os << "\n[discretization]\n";
  os << "T = " << format_full(sc.T) << "\n";
  os << "M_steps = " << sc.M_steps << "\n";
  os << "resolution = " << sc.resolution << "\n";
  os << "pad = " << format_full(sc.pad) << "\n";
  os << "particle_cap = " << sc.particle_cap << "\n";
  os << "eps = " << format_full(sc.eps) << "\n";

  const CheckParams& c = sc.check;
  os << "\n[tolerances]\n";
  os << "opt_tol = " << format_full(c.opt_tol) << "\n";
  os << "max_iters = " << c.max_iters << "\n";
  os << "theta = " << format_full(c.theta) << "\n";
  os << "fd_tol = " << format_full(c.fd_tol) << "\n";
  os << "liouville_tol = " << format_full(c.liouville_tol) << "\n";
  os << "kde_tol = " << format_full(c.kde_tol) << "\n";
  os << "chi_tol = " << format_full(c.chi_tol) << "\n";
  os << "kkt_tol = " << format_full(c.kkt_tol) << "\n";
  os << "vi_floor = " << format_full(c.vi_floor) << "\n";
  os << "uniq_tol = " << format_full(c.uniq_tol) << "\n";
  os << "n_vi_samples = " << c.n_vi_samples << "\n";
  os << "n_ssc_directions = " << c.n_ssc_directions << "\n";
  os << "n_starts = " << c.n_starts << "\n";
  os << "n_lipschitz_pairs = " << c.n_lipschitz_pairs << "\n";
  os << "seed = " << c.seed << "\n";
  return os.str();
}

void save_scenario(const Scenario& sc, const std::string& path) {
  if (sc.coil_file.empty())
    fail(ErrorKind::state,
         "scenario has built-in coils; save them first and set coil_file");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write scenario file '" + path + "'");
  out << serialize_scenario(sc);
  if (!out) fail(ErrorKind::io, "short write to '" + path + "'");
}

Scenario default_scenario() {
  Scenario sc;
  sc.coils.coils.push_back(
      make_loop(4.0, Vec3(0, 0, -2), 64, 1.0, "lower_loop"));
  sc.coils.coils.push_back(
      make_loop(4.0, Vec3(0, 0, 2), 64, 1.0, "upper_loop"));
  sc.initial = BumpSpec{};
  sc.target_mode = TargetMode::reference;
  sc.M_u = 4;
  // a stored generating control makes the inverse problem's best residual
  // (near) zero, so every optimality check has a clean optimum to find
  sc.target_u = {0.8, -0.4, 0.5, 0.1, -0.6, 0.7, -0.2, 0.3};
  sc.lambda = {0.1, 0.1};
  sc.lower = {-2.0, -2.0};
  sc.upper = {2.0, 2.0};
  sc.start_u.assign(8, 0.0);
  sc.T = 0.5;
  sc.M_steps = 8;
  sc.resolution = 3;
  sc.pad = 1.05;
  sc.particle_cap = 4096;
  sc.eps = 0.0;
  validate_scenario(sc);
  return sc;
}

}  // namespace vpc
