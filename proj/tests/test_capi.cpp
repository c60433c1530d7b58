#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "core/coil.h"
#include "core/scenario.h"
#include "doctest.h"
#include "vpcoil/vpcoil.h"

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("capi_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// frees the handle even when a CHECK aborts the case early
struct Handle {
  vp_scenario* h = nullptr;
  ~Handle() { vp_scenario_free(h); }
  vp_scenario** out() { return &h; }
};

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

// one small loop well clear of the unit bump, plus a short horizon: cheap
// enough that every driver smoke-tested here finishes in well under a second
std::string write_tiny_scenario(const TempDir& tmp) {
  vpc::CoilSet coils;
  coils.coils.push_back(vpc::make_loop(3.0, vpc::Vec3(0, 0, -2), 24, 1.0,
                                       "probe"));
  vpc::save_coils(coils, tmp.file("probe.coils"));
  const std::string cfg = tmp.file("tiny.cfg");
  write_text(cfg,
             "[coils]\n"
             "file = probe.coils\n"
             "[control]\n"
             "M_u = 1\n"
             "lambda = 0.5\n"
             "lower = -2\n"
             "upper = 2\n"
             "[discretization]\n"
             "T = 0.1\n"
             "M_steps = 2\n"
             "resolution = 2\n");
  return cfg;
}

}  // namespace

TEST_CASE("version, workers and the error slot have sane defaults") {
  REQUIRE(vp_version() != nullptr);
  CHECK(std::strcmp(vp_version(), "1.0.0") == 0);
  REQUIRE(vp_last_error() != nullptr);
  CHECK(std::strcmp(vp_last_error(), "no error") == 0);
  CHECK(vp_set_workers(2) == 2);
  CHECK(vp_set_workers(0) >= 1);
}

TEST_CASE("NULL arguments are rejected without touching the exit code") {
  Handle h;
  CHECK(vp_scenario_load(nullptr, h.out()) == VP_ERR_INVALID);
  CHECK(std::string(vp_last_error()).find("NULL") != std::string::npos);
  CHECK(vp_scenario_load("x.cfg", nullptr) == VP_ERR_INVALID);
  CHECK(vp_scenario_default(nullptr) == VP_ERR_INVALID);
  CHECK(vp_scenario_save(nullptr, "x.cfg") == VP_ERR_INVALID);
  CHECK(vp_scenario_set_seed(nullptr, 7) == VP_ERR_INVALID);

  int code = 42;
  CHECK(vp_run_simulate(nullptr, "out", &code) == VP_ERR_INVALID);
  CHECK(code == 42);
  const double lo[3] = {0, 0, 0}, hi[3] = {1, 1, 1};
  CHECK(vp_run_fields(nullptr, lo, hi, 0.5, 8, 1, "out", &code) ==
        VP_ERR_INVALID);
  CHECK(code == 42);
  CHECK(vp_run_optimize(nullptr, 0, "out", &code) == VP_ERR_INVALID);
  CHECK(vp_run_verify(nullptr, "out", &code) == VP_ERR_INVALID);
  CHECK(vp_run_probe_uniqueness(nullptr, "out", &code) == VP_ERR_INVALID);
  CHECK(vp_run_ssc(nullptr, "out", &code) == VP_ERR_INVALID);
  CHECK(code == 42);

  vp_scenario_free(nullptr);  // must be a no-op
}

TEST_CASE("status codes mirror the error taxonomy") {
  TempDir tmp;
  Handle h;

  // missing file -> io
  CHECK(vp_scenario_load(tmp.file("absent.cfg").c_str(), h.out()) ==
        VP_ERR_IO);
  CHECK(std::string(vp_last_error()).find("absent.cfg") != std::string::npos);
  CHECK(h.h == nullptr);

  // unknown key -> io, with the offending line in the message
  vpc::CoilSet coils;
  coils.coils.push_back(vpc::make_loop(3.0, vpc::Vec3(0, 0, -2), 24, 1.0,
                                       "probe"));
  vpc::save_coils(coils, tmp.file("probe.coils"));
  write_text(tmp.file("typo.cfg"),
             "[coils]\nfile = probe.coils\n[discretization]\nT = 0.5\n"
             "M_stepz = 1\n");
  CHECK(vp_scenario_load(tmp.file("typo.cfg").c_str(), h.out()) == VP_ERR_IO);
  CHECK(std::string(vp_last_error()).find("M_stepz") != std::string::npos);

  // missing mandatory key -> invalid
  write_text(tmp.file("no_t.cfg"),
             "[coils]\nfile = probe.coils\n[discretization]\nM_steps = 4\n");
  CHECK(vp_scenario_load(tmp.file("no_t.cfg").c_str(), h.out()) ==
        VP_ERR_INVALID);

  // built-in coils cannot be re-referenced from a file -> state
  REQUIRE(vp_scenario_default(h.out()) == VP_OK);
  REQUIRE(h.h != nullptr);
  CHECK(vp_scenario_save(h.h, tmp.file("default.cfg").c_str()) ==
        VP_ERR_STATE);
  CHECK(std::string(vp_last_error()).find("coil") != std::string::npos);

  // argument validation inside a run driver -> invalid, exit preset to 1
  const double lo[3] = {-1, -1, -1}, hi[3] = {1, 1, 1};
  int code = 0;
  CHECK(vp_run_fields(tmp.file("probe.coils").c_str(), lo, hi, -0.5, 8, 1,
                      tmp.file("out").c_str(), &code) == VP_ERR_INVALID);
  CHECK(code == 1);
  CHECK(std::string(vp_last_error()).find("spacing") != std::string::npos);
  CHECK(vp_run_fields(tmp.file("probe.coils").c_str(), hi, hi, 0.5, 8, 1,
                      tmp.file("out").c_str(), &code) == VP_ERR_INVALID);
  CHECK(code == 1);
}

TEST_CASE("scenarios flow through files and handles") {
  TempDir tmp;
  const std::string cfg = write_tiny_scenario(tmp);

  Handle h;
  REQUIRE(vp_scenario_load(cfg.c_str(), h.out()) == VP_OK);
  REQUIRE(h.h != nullptr);

  // save -> load -> save is byte stable
  const std::string cfg2 = tmp.file("copy.cfg");
  REQUIRE(vp_scenario_save(h.h, cfg2.c_str()) == VP_OK);
  Handle h2;
  REQUIRE(vp_scenario_load(cfg2.c_str(), h2.out()) == VP_OK);
  const std::string cfg3 = tmp.file("copy2.cfg");
  REQUIRE(vp_scenario_save(h2.h, cfg3.c_str()) == VP_OK);
  CHECK(read_bytes(cfg2) == read_bytes(cfg3));

  // a reseeded handle serializes differently, carrying the new seed
  REQUIRE(vp_scenario_set_seed(h2.h, 123) == VP_OK);
  const std::string cfg4 = tmp.file("copy3.cfg");
  REQUIRE(vp_scenario_save(h2.h, cfg4.c_str()) == VP_OK);
  CHECK(read_bytes(cfg4) != read_bytes(cfg3));
  CHECK(read_bytes(cfg4).find("seed = 123") != std::string::npos);
}

TEST_CASE("field runs write a table and a report") {
  TempDir tmp;
  vpc::CoilSet coils;
  coils.coils.push_back(vpc::make_loop(2.0, vpc::Vec3(0, 0, 0), 32, 1.0,
                                       "probe"));
  vpc::save_coils(coils, tmp.file("probe.coils"));

  const double lo[3] = {-1, -1, -1}, hi[3] = {1, 1, 1};
  int code = -1;
  REQUIRE(vp_run_fields(tmp.file("probe.coils").c_str(), lo, hi, 1.0, 16, 3,
                        tmp.file("out").c_str(), &code) == VP_OK);
  CHECK(code == 0);

  const std::string table = read_bytes(tmp.file("out/field_table.tsv"));
  CHECK(table.substr(0, table.find('\n')) == "x y z m1_x m1_y m1_z");
  const std::string report = read_bytes(tmp.file("out/fields_report.txt"));
  CHECK(report.find("PASS divergence_residual") != std::string::npos);
}

TEST_CASE("simulation runs are reproducible byte for byte") {
  TempDir tmp;
  const std::string cfg = write_tiny_scenario(tmp);
  Handle h;
  REQUIRE(vp_scenario_load(cfg.c_str(), h.out()) == VP_OK);

  int code_a = -1, code_b = -1;
  REQUIRE(vp_run_simulate(h.h, tmp.file("a").c_str(), &code_a) == VP_OK);
  REQUIRE(vp_run_simulate(h.h, tmp.file("b").c_str(), &code_b) == VP_OK);
  CHECK(code_a == 0);
  CHECK(code_b == 0);
  for (const char* name :
       {"trajectory.tsv", "costate.tsv", "radius.tsv", "simulate_report.txt"})
    CHECK(read_bytes(tmp.file(std::string("a/") + name)) ==
          read_bytes(tmp.file(std::string("b/") + name)));
}

TEST_CASE("the optimizer driver runs through the public surface") {
  TempDir tmp;
  const std::string cfg = write_tiny_scenario(tmp);
  Handle h;
  REQUIRE(vp_scenario_load(cfg.c_str(), h.out()) == VP_OK);

  int code = -1;
  REQUIRE(vp_run_optimize(h.h, 0, tmp.file("opt").c_str(), &code) == VP_OK);
  CHECK(code == 0);
  const std::string report = read_bytes(tmp.file("opt/optimize_report.txt"));
  CHECK(report.find("PASS converged") != std::string::npos);
  CHECK(read_bytes(tmp.file("opt/control.tsv")).size() > 0);
  CHECK(read_bytes(tmp.file("opt/optimize_log.tsv")).size() > 0);

  // the fixed-point variant lands on the same schedule to solver tolerance
  int code_fp = -1;
  REQUIRE(vp_run_optimize(h.h, 1, tmp.file("fp").c_str(), &code_fp) == VP_OK);
  CHECK(code_fp == 0);
}
