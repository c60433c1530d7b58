#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "core/coil.h"
#include "core/error.h"
#include "core/scenario.h"
#include "doctest.h"

using namespace vpc;

namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("scenario_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

// shared directory holding one coil file for all parse tests
const std::string& rig_dir() {
  static TempDir dir;
  static bool seeded = [] {
    save_coils(default_scenario().coils, (dir.path / "rig.coils").string());
    return true;
  }();
  (void)seeded;
  static const std::string s = dir.path.string();
  return s;
}

// parsed configs always need a coil file; appending the reference to the
// rig keeps the line numbers of the text under test unchanged
Scenario parse(const std::string& text) {
  return parse_scenario(text + "\n[coils]\nfile = rig.coils\n", rig_dir(),
                        "test");
}

const char* kMinimal =
    "[discretization]\n"
    "T = 0.5\n";

}  // namespace

TEST_CASE("the built-in scenario is valid and self-describing") {
  const Scenario sc = default_scenario();
  CHECK_NOTHROW(validate_scenario(sc));
  CHECK(sc.n_coils() == 2);
  CHECK(sc.target_mode == TargetMode::reference);
  CHECK(sc.T == 0.5);
  CHECK(sc.M_steps % sc.M_u == 0);
  CHECK((int)sc.target_u.size() == sc.n_coils() * sc.M_u);
  CHECK(sc.coil_file.empty());
  const Ensemble ens = sc.sample();
  CHECK(ens.count() > 0);
  CHECK(ens.count() <= sc.particle_cap);
  CHECK(sc.softening(ens) == ens.spacing);
}

TEST_CASE("serialization round-trips a materialized scenario exactly") {
  Scenario sc = default_scenario();
  sc.coil_file = rig_dir() + "/rig.coils";  // absolute: parse dir is ignored
  sc.coils = load_coils(sc.coil_file);
  const std::string text = serialize_scenario(sc);
  const Scenario back = parse_scenario(text, ".", "test");
  CHECK(serialize_scenario(back) == text);
  CHECK(back.T == sc.T);
  CHECK(back.M_u == sc.M_u);
  CHECK(back.M_steps == sc.M_steps);
  CHECK(back.resolution == sc.resolution);
  CHECK(back.target_mode == sc.target_mode);
  CHECK(back.target_u == sc.target_u);
  CHECK(back.lambda == sc.lambda);
  CHECK(back.lower == sc.lower);
  CHECK(back.upper == sc.upper);
  CHECK(back.start_u == sc.start_u);
  CHECK(back.check.seed == sc.check.seed);
  CHECK(back.check.kde_tol == sc.check.kde_tol);
}

TEST_CASE("a minimal config inherits every default") {
  const Scenario sc = parse(kMinimal);
  CHECK(sc.T == 0.5);
  CHECK(sc.M_steps == 8);
  CHECK(sc.M_u == 4);
  CHECK(sc.resolution == 3);
  CHECK(sc.n_coils() == 2);  // the rig's mirror loops
  CHECK(sc.target_mode == TargetMode::analytic);
  CHECK(sc.lambda == std::vector<double>{0.0, 0.0});
  for (double v : sc.start_u) CHECK(v == 0.0);
}

TEST_CASE("the horizon is the one mandatory key") {
  const std::string msg =
      message_of([] { parse("[discretization]\nM_steps = 8\n"); });
  CHECK(msg.find("T") != std::string::npos);
  CHECK_THROWS_AS(parse(""), Error);
}

TEST_CASE("comments, blank lines and spacing are tolerated") {
  const Scenario sc = parse(
      "# leading comment\n"
      "\n"
      "[discretization]   # trailing note\n"
      "  T   =   0.25     # unit horizon quarter\n"
      "\n"
      "[control]\n"
      "M_u = 2\n");
  CHECK(sc.T == 0.25);
  CHECK(sc.M_u == 2);
}

TEST_CASE("unknown sections and keys are rejected with their line number") {
  const std::string bad_section =
      "[discretization]\nT = 0.5\n[turbulence]\nfoo = 1\n";
  std::string msg = message_of([&] { parse(bad_section); });
  CHECK(msg.find("3") != std::string::npos);
  CHECK(msg.find("turbulence") != std::string::npos);

  const std::string bad_key = "[discretization]\nT = 0.5\nM_stepz = 8\n";
  msg = message_of([&] { parse(bad_key); });
  CHECK(msg.find("M_stepz") != std::string::npos);
  CHECK(msg.find("3") != std::string::npos);
}

TEST_CASE("duplicate keys are rejected citing the first definition") {
  const std::string text =
      "[discretization]\nT = 0.5\nT = 0.7\n";
  const std::string msg = message_of([&] { parse(text); });
  CHECK(msg.find("2") != std::string::npos);
  CHECK_THROWS_AS(parse(text), Error);
}

TEST_CASE("keys before any section are rejected") {
  CHECK_THROWS_AS(parse("T = 0.5\n"), Error);
}

TEST_CASE("malformed numbers and vectors are rejected") {
  CHECK_THROWS_AS(parse("[discretization]\nT = fast\n"), Error);
  CHECK_THROWS_AS(parse("[discretization]\nT = 0.5\nM_steps = 2.5\n"), Error);
  CHECK_THROWS_AS(
      parse("[discretization]\nT = 0.5\n[initial]\ncenter_x = 1 2\n"), Error);
}

TEST_CASE("per-coil values broadcast from one or match the coil count") {
  const Scenario one = parse(
      "[discretization]\nT = 0.5\n[control]\nlambda = 0.3\n");
  CHECK(one.lambda == std::vector<double>{0.3, 0.3});
  const Scenario two = parse(
      "[discretization]\nT = 0.5\n[control]\nlambda = 0.3 0.4\n");
  CHECK(two.lambda == std::vector<double>{0.3, 0.4});
  CHECK_THROWS_AS(
      parse("[discretization]\nT = 0.5\n[control]\nlambda = 1 2 3\n"), Error);
}

TEST_CASE("control rows must match the cell count and the coil index range") {
  CHECK_NOTHROW(parse(
      "[discretization]\nT = 0.5\n[control]\nM_u = 2\nu1 = 0.1 -0.2\n"));
  std::string msg = message_of([] {
    parse("[discretization]\nT = 0.5\n[control]\nM_u = 2\nu1 = 0.1\n");
  });
  CHECK(msg.find("expected 2 cell values") != std::string::npos);
  // index past the two coils on file
  msg = message_of([] {
    parse("[discretization]\nT = 0.5\n[control]\nM_u = 2\nu3 = 0.1 0.1\n");
  });
  CHECK(msg.find("out of range") != std::string::npos);
  CHECK_THROWS_AS(
      parse("[discretization]\nT = 0.5\n[control]\nM_u = 2\nu0 = 0.1 0.1\n"),
      Error);
}

TEST_CASE("reference targets take generating rows and default to free flow") {
  const Scenario sc = parse(
      "[discretization]\nT = 0.5\n"
      "[target]\nmode = reference\nu1 = 0.5 0 0 0\n");
  CHECK(sc.target_mode == TargetMode::reference);
  REQUIRE((int)sc.target_u.size() == 2 * sc.M_u);
  CHECK(sc.target_u[0] == 0.5);
  for (std::size_t q = 1; q < sc.target_u.size(); ++q)
    CHECK(sc.target_u[q] == 0.0);

  CHECK_THROWS_AS(parse("[discretization]\nT = 0.5\n[target]\nmode = vortex\n"),
                  Error);
  // generating rows are meaningless for an analytic target
  CHECK_THROWS_AS(
      parse("[discretization]\nT = 0.5\n[target]\nu1 = 0.5 0 0 0\n"), Error);
}

TEST_CASE("cross-field validation catches inconsistent setups") {
  // step count not divisible by the control cells
  CHECK_THROWS_AS(
      parse("[discretization]\nT = 0.5\nM_steps = 6\n[control]\nM_u = 4\n"),
      Error);
  // bounds that exclude zero
  CHECK_THROWS_AS(
      parse("[discretization]\nT = 0.5\n[control]\nlower = 0.5\n"), Error);
  CHECK_THROWS_AS(
      parse("[discretization]\nT = 0.5\n[control]\nupper = -0.5\n"), Error);
  // start control outside the box
  CHECK_THROWS_AS(parse("[discretization]\nT = 0.5\n[control]\nM_u = 2\n"
                        "lower = -1\nupper = 1\nu1 = 3 0\n"),
                  Error);
  // nonpositive horizon
  CHECK_THROWS_AS(parse("[discretization]\nT = -1\n"), Error);
  CHECK_THROWS_AS(parse("[discretization]\nT = 0.5\nresolution = 1\n"), Error);
  // damping outside (0, 1]
  CHECK_THROWS_AS(
      parse("[discretization]\nT = 0.5\n[tolerances]\ntheta = 1.5\n"), Error);
}

TEST_CASE("initial support may not engulf a coil") {
  // the built-in loops sit 2 away from the origin at radius 4; a huge bump
  // swallows them
  const std::string text =
      "[discretization]\nT = 0.5\n[initial]\nradius_x = 5.5\n";
  CHECK_THROWS_AS(parse(text), Error);
}

TEST_CASE("scenarios save and load through files with a coil file alongside") {
  TempDir tmp;
  Scenario sc = default_scenario();
  const std::string coil_path = (tmp.path / "rig.coils").string();
  save_coils(sc.coils, coil_path);
  sc.coil_file = coil_path;
  sc.check.seed = 77;
  sc.T = 0.25;
  sc.M_steps = 4;

  const std::string path = (tmp.path / "case.cfg").string();
  save_scenario(sc, path);
  const Scenario back = load_scenario(path);
  CHECK(back.T == 0.25);
  CHECK(back.M_steps == 4);
  CHECK(back.check.seed == 77);
  CHECK(back.n_coils() == 2);
  CHECK(back.coils.coils[0].name == sc.coils.coils[0].name);

  // a coil path relative to the scenario file resolves against its directory
  Scenario rel = sc;
  rel.coil_file = "rig.coils";
  save_scenario(rel, path);
  const Scenario back2 = load_scenario(path);
  CHECK(back2.n_coils() == 2);

  CHECK_THROWS_AS(load_scenario((tmp.path / "missing.cfg").string()), Error);
}

TEST_CASE("saving with built-in coils requires materializing them first") {
  TempDir tmp;
  Scenario sc = default_scenario();
  REQUIRE(sc.coil_file.empty());
  CHECK_THROWS_AS(save_scenario(sc, (tmp.path / "x.cfg").string()), Error);
}

TEST_CASE("softening defaults to the grid spacing and accepts overrides") {
  Scenario sc = default_scenario();
  const Ensemble ens = sc.sample();
  CHECK(sc.softening(ens) == ens.spacing);
  sc.eps = 0.123;
  CHECK(sc.softening(ens) == 0.123);
}
