#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/coil.h"
#include "core/control.h"
#include "core/ensemble.h"
#include "core/initial.h"

namespace vpc {

// Knobs for the verification suites and the solvers' stopping rules.
// Everything here is optional in the config; the defaults are the values the
// shipped checks are tuned for.
struct CheckParams {
  double opt_tol = 1e-8;       // projected-gradient residual stop
  int max_iters = 200;
  double theta = 1.0;          // fixed-point damping in (0, 1]
  double fd_tol = 1e-3;        // adjoint gradient vs difference quotient
  double liouville_tol = 1e-6; // max |det J - 1|
  double kde_tol = 0.05;       // relative ||f(T)||_2 reconstruction error
  double chi_tol = 1e-6;       // cutoff-independence of adjoint values
  double kkt_tol = 1e-5;       // stationarity / projection residuals
  double vi_floor = -1e-6;     // smallest admissible sampled pairing
  double uniq_tol = 1e-4;      // multistart max pairwise distance
  int n_vi_samples = 64;
  int n_ssc_directions = 8;
  int n_starts = 4;
  int n_lipschitz_pairs = 10;
  std::uint64_t seed = 1;
};

enum class TargetMode { analytic, reference };

// One fully validated problem instance: coil geometry, initial datum,
// desired state, control space with bounds and regularization weights, and
// the discretization. Loaded from line-oriented `key = value` text with
// sections [coils] [initial] [target] [control] [discretization]
// [tolerances]; unknown sections or keys are errors, so misspelled knobs can
// never fall back to silent defaults.
struct Scenario {
  std::string coil_file;  // as resolved at load; empty for built-in coils
  CoilSet coils;          // loaded and finalized

  BumpSpec initial;

  TargetMode target_mode = TargetMode::analytic;
  BumpSpec target_bump;          // analytic mode: desired density parameters
  std::vector<double> target_u;  // reference mode: generating control,
                                 // row-major [i*M_u + m], zeros = free flow

  int M_u = 4;                  // control cells
  std::vector<double> lambda;   // per coil, >= 0
  std::vector<double> lower;    // per coil box bounds, lower <= 0 <= upper
  std::vector<double> upper;
  std::vector<double> start_u;  // simulate / optimizer start, row-major

  double T = 1.0;
  int M_steps = 8;    // forward steps; multiple of M_u (no straddled cells)
  int resolution = 3; // sample points per phase-space axis
  double pad = 1.05;  // sampling box half-width as a multiple of the support
  int particle_cap = 4096;
  double eps = 0.0;   // Plummer softening; 0 = use the sampling spacing

  CheckParams check;

  int n_coils() const { return coils.count(); }

  // control grid with the scenario bounds replicated over cells and the
  // given row-major values (defaults to start_u)
  ControlGrid make_control(const std::vector<double>& values) const;
  ControlGrid start_control() const { return make_control(start_u); }
  ControlGrid reference_control() const { return make_control(target_u); }

  Ensemble sample() const;
  double softening(const Ensemble& ens) const {
    return eps > 0.0 ? eps : ens.spacing;
  }
};

// Built-in instance used when no config is given: a mirror pair of circular
// loops about a centered unit bump, short horizon, reference-mode target
// produced by a stored nonzero control. Small enough that every check in the
// verification suite runs in seconds.
Scenario default_scenario();

// strict parse + full validation; `dir` anchors relative coil paths and
// `origin` names the source in error messages
Scenario parse_scenario(const std::string& text, const std::string& dir,
                        const std::string& origin);
Scenario load_scenario(const std::string& path);

// canonical re-emission: every key explicit, doubles at round-trip
// precision; load(serialize(sc)) reproduces sc exactly
std::string serialize_scenario(const Scenario& sc);
void save_scenario(const Scenario& sc, const std::string& path);

// run every cross-field validation rule (also called by the parsers)
void validate_scenario(const Scenario& sc);

}  // namespace vpc
