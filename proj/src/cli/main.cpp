#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vpcoil/vpcoil.h"

namespace {

// owning wrapper so every exit path releases the handle
struct ScenarioGuard {
  vp_scenario* ptr = nullptr;
  ~ScenarioGuard() { vp_scenario_free(ptr); }
};

int report_failure(const char* action) {
  std::fprintf(stderr, "vpcoil: %s failed: %s\n", action, vp_last_error());
  return 1;
}

// scenario path ("" = built-in) + optional seed override -> handle
int acquire_scenario(const std::string& path, bool have_seed, uint64_t seed,
                     ScenarioGuard& guard) {
  const vp_status st = path.empty()
                           ? vp_scenario_default(&guard.ptr)
                           : vp_scenario_load(path.c_str(), &guard.ptr);
  if (st != VP_OK) return report_failure("loading scenario");
  if (have_seed && vp_scenario_set_seed(guard.ptr, seed) != VP_OK)
    return report_failure("setting seed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimal bounded coil-current schedules for a steered "
               "collisionless charge cloud"};
  app.require_subcommand(1);

  int workers = 0;
  bool have_workers = false;
  app.add_option("-w,--workers", workers, "worker thread bound (0 = cores)")
      ->each([&](const std::string&) { have_workers = true; });

  uint64_t seed = 0;
  bool have_seed = false;
  app.add_option("--seed", seed, "seed for every randomized check")
      ->each([&](const std::string&) { have_seed = true; });

  std::string scenario_path;
  std::string out_dir = "out";
  std::string coil_file;
  std::vector<double> box = {-5, -5, -5, 5, 5, 5};
  double spacing = 0.5;
  int n_samples = 200;
  std::string solver = "descent";

  CLI::App* fields = app.add_subcommand(
      "fields", "tabulate coil field shapes and check source-freeness");
  fields->fallthrough();  // --seed / --workers may follow the subcommand
  fields->add_option("--coils", coil_file, "coil geometry file")->required();
  fields->add_option("--box", box, "table box: x0 y0 z0 x1 y1 z1")
      ->expected(6);
  fields->add_option("--spacing", spacing, "table grid step");
  fields->add_option("--samples", n_samples, "divergence sample count");
  fields->add_option("--out", out_dir, "output directory");

  auto add_scenario_run = [&](const char* name, const char* help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->fallthrough();
    cmd->add_option("--scenario", scenario_path,
                    "scenario config (omit for the built-in instance)");
    cmd->add_option("--out", out_dir, "output directory");
    return cmd;
  };
  CLI::App* simulate = add_scenario_run(
      "simulate", "forward run of the start control with diagnostics");
  CLI::App* optimize = add_scenario_run(
      "optimize", "solve for the optimal current schedules");
  optimize->add_option("--solver", solver, "descent | fixed-point")
      ->check(CLI::IsMember({"descent", "fixed-point"}));
  CLI::App* verify = add_scenario_run(
      "verify", "run the full verification suite");
  CLI::App* probe = add_scenario_run(
      "probe-uniqueness", "multistart agreement probe for the optimum");
  CLI::App* ssc = add_scenario_run(
      "ssc", "sampled second-order check at the optimum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // help/version requests exit cleanly; anything else is a usage error
    return code == 0 ? 0 : 2;
  }

  if (!have_workers) {
    if (const char* env = std::getenv("VPCOIL_WORKERS")) {
      workers = std::atoi(env);
      have_workers = true;
    }
  }
  if (have_workers) vp_set_workers(workers);

  int exit_code = 1;
  if (app.got_subcommand(fields)) {
    const double lo[3] = {box[0], box[1], box[2]};
    const double hi[3] = {box[3], box[4], box[5]};
    const vp_status st =
        vp_run_fields(coil_file.c_str(), lo, hi, spacing, n_samples,
                      have_seed ? seed : 1, out_dir.c_str(), &exit_code);
    if (st != VP_OK) return report_failure("fields");
    return exit_code;
  }

  ScenarioGuard guard;
  const int rc = acquire_scenario(scenario_path, have_seed, seed, guard);
  if (rc != 0) return rc;

  vp_status st = VP_OK;
  const char* action = "run";
  if (app.got_subcommand(simulate)) {
    action = "simulate";
    st = vp_run_simulate(guard.ptr, out_dir.c_str(), &exit_code);
  } else if (app.got_subcommand(optimize)) {
    action = "optimize";
    st = vp_run_optimize(guard.ptr, solver == "fixed-point" ? 1 : 0,
                         out_dir.c_str(), &exit_code);
  } else if (app.got_subcommand(verify)) {
    action = "verify";
    st = vp_run_verify(guard.ptr, out_dir.c_str(), &exit_code);
  } else if (app.got_subcommand(probe)) {
    action = "probe-uniqueness";
    st = vp_run_probe_uniqueness(guard.ptr, out_dir.c_str(), &exit_code);
  } else if (app.got_subcommand(ssc)) {
    action = "ssc";
    st = vp_run_ssc(guard.ptr, out_dir.c_str(), &exit_code);
  }
  if (st != VP_OK) return report_failure(action);
  return exit_code;
}
