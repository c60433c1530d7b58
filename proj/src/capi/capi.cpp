#include "vpcoil/vpcoil.h"

#include <exception>
#include <string>

#include "core/error.h"
#include "core/kernels.h"
#include "core/runner.h"
#include "core/scenario.h"

struct vp_scenario {
  vpc::Scenario sc;
};

namespace {

thread_local std::string t_error = "no error";

vp_status code_for(vpc::ErrorKind kind) {
  switch (kind) {
    case vpc::ErrorKind::invalid_argument:
      return VP_ERR_INVALID;
    case vpc::ErrorKind::io:
      return VP_ERR_IO;
    case vpc::ErrorKind::numerical:
      return VP_ERR_NUMERICAL;
    case vpc::ErrorKind::state:
      return VP_ERR_STATE;
  }
  return VP_ERR_INTERNAL;
}

template <typename F>
vp_status guarded(F&& body) {
  try {
    return body();
  } catch (const vpc::Error& e) {
    t_error = e.what();
    return code_for(e.kind());
  } catch (const std::exception& e) {
    t_error = e.what();
    return VP_ERR_INTERNAL;
  } catch (...) {
    t_error = "unidentified failure";
    return VP_ERR_INTERNAL;
  }
}

vp_status require(bool ok, const char* msg) {
  if (ok) return VP_OK;
  t_error = msg;
  return VP_ERR_INVALID;
}

void put_exit(int* exit_code, int value) {
  if (exit_code) *exit_code = value;
}

}  // namespace

extern "C" {

const char* vp_last_error(void) { return t_error.c_str(); }

const char* vp_version(void) { return "1.0.0"; }

int vp_set_workers(int n) { return vpc::set_workers(n); }

vp_status vp_scenario_load(const char* path, vp_scenario** out) {
  if (require(path && out, "vp_scenario_load: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  *out = nullptr;
  return guarded([&] {
    auto* handle = new vp_scenario{vpc::load_scenario(path)};
    *out = handle;
    return VP_OK;
  });
}

vp_status vp_scenario_default(vp_scenario** out) {
  if (require(out != nullptr, "vp_scenario_default: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  *out = nullptr;
  return guarded([&] {
    auto* handle = new vp_scenario{vpc::default_scenario()};
    *out = handle;
    return VP_OK;
  });
}

vp_status vp_scenario_save(const vp_scenario* sc, const char* path) {
  if (require(sc && path, "vp_scenario_save: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  return guarded([&] {
    vpc::save_scenario(sc->sc, path);
    return VP_OK;
  });
}

vp_status vp_scenario_set_seed(vp_scenario* sc, uint64_t seed) {
  if (require(sc != nullptr, "vp_scenario_set_seed: NULL handle") != VP_OK)
    return VP_ERR_INVALID;
  sc->sc.check.seed = seed;
  return VP_OK;
}

void vp_scenario_free(vp_scenario* sc) { delete sc; }

vp_status vp_run_fields(const char* coil_file, const double box_lo[3],
                        const double box_hi[3], double spacing, int n_samples,
                        uint64_t seed, const char* out_dir, int* exit_code) {
  if (require(coil_file && box_lo && box_hi && out_dir,
              "vp_run_fields: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  put_exit(exit_code, 1);
  return guarded([&] {
    vpc::FieldsRequest req;
    for (int c = 0; c < 3; ++c) {
      req.box.lo[c] = box_lo[c];
      req.box.hi[c] = box_hi[c];
    }
    req.spacing = spacing;
    req.n_samples = n_samples;
    req.seed = seed;
    const vpc::CoilSet coils = vpc::load_coils(coil_file);
    put_exit(exit_code, vpc::run_fields(coils, req, out_dir));
    return VP_OK;
  });
}

vp_status vp_run_simulate(const vp_scenario* sc, const char* out_dir,
                          int* exit_code) {
  if (require(sc && out_dir, "vp_run_simulate: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  put_exit(exit_code, 1);
  return guarded([&] {
    put_exit(exit_code, vpc::run_simulate(sc->sc, out_dir));
    return VP_OK;
  });
}

vp_status vp_run_optimize(const vp_scenario* sc, int use_fixed_point,
                          const char* out_dir, int* exit_code) {
  if (require(sc && out_dir, "vp_run_optimize: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  put_exit(exit_code, 1);
  return guarded([&] {
    put_exit(exit_code,
             vpc::run_optimize(sc->sc, use_fixed_point != 0, out_dir));
    return VP_OK;
  });
}

vp_status vp_run_verify(const vp_scenario* sc, const char* out_dir,
                        int* exit_code) {
  if (require(sc && out_dir, "vp_run_verify: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  put_exit(exit_code, 1);
  return guarded([&] {
    put_exit(exit_code, vpc::run_verify(sc->sc, out_dir));
    return VP_OK;
  });
}

vp_status vp_run_probe_uniqueness(const vp_scenario* sc, const char* out_dir,
                                  int* exit_code) {
  if (require(sc && out_dir,
              "vp_run_probe_uniqueness: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  put_exit(exit_code, 1);
  return guarded([&] {
    put_exit(exit_code, vpc::run_probe_uniqueness(sc->sc, out_dir));
    return VP_OK;
  });
}

vp_status vp_run_ssc(const vp_scenario* sc, const char* out_dir,
                     int* exit_code) {
  if (require(sc && out_dir, "vp_run_ssc: NULL argument") != VP_OK)
    return VP_ERR_INVALID;
  put_exit(exit_code, 1);
  return guarded([&] {
    put_exit(exit_code, vpc::run_ssc(sc->sc, out_dir));
    return VP_OK;
  });
}

}  // extern "C"
