#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fecoh/errors.hpp"
#include "fecoh/scenario.hpp"
#include "json.hpp"

using namespace fecoh;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("fecoh_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) out.insert(e.path().filename().string());
  return out;
}

// Small but complete scenario used for run and sweep tests.
Scenario small(std::string_view outputs = "populations, coherences") {
  auto s = parse_scenario(
      "name = small\n"
      "beam.kinetic_energy_kev = 2\n"
      "beam.r_perp_nm = 2\n"
      "emitter.wavelength_nm = 560\n"
      "emitter.d_x_debye = 30\n"
      "emitter.d_z_debye = 30\n"
      "emitter.a = 0.7071067811865476\n"
      "emitter.b = 0.7071067811865476\n"
      "grid.time.start_fs = 0\n"
      "grid.time.stop_fs = 4\n"
      "grid.time.points = 9\n"
      "grid.energy.min_ev = -3\n"
      "grid.energy.max_ev = 3\n"
      "grid.energy.points = 61\n"
      "grid.map.z_points = 11\n"
      "grid.map.time_points = 3\n");
  s.set("outputs", outputs);
  return s;
}

void check_manifest_complete(const fs::path& dir) {
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : j["files"]) {
    const std::string path = f["path"];
    listed.insert(path);
    CHECK(f["sha256"] == sha256_file(dir / path));
    CHECK(f["bytes"].get<std::uintmax_t>() == fs::file_size(dir / path));
  }
  auto on_disk = listing(dir);
  on_disk.erase("manifest.json");
  CHECK(on_disk == listed);
}

}  // namespace

TEST_CASE("numbers: decimal literals with an optional pi factor") {
  const double pi = std::acos(-1.0);
  CHECK(parse_number("0.25") == 0.25);
  CHECK(parse_number(" -3e-2 ") == -0.03);
  CHECK(parse_number("+2") == 2.0);
  CHECK(parse_number("pi") == pi);
  CHECK(parse_number("-pi/2") == -pi / 2.0);
  CHECK(parse_number("3pi/2") == 3.0 * pi / 2.0);
  CHECK(parse_number("1.5*pi") == 1.5 * pi);
  for (const char* bad : {"", "pi/0", "--1", "1e", "nan", "inf", "2pi3", "pi*2", "*pi", "0x10",
                          "1,5", "two"})
    CHECK_MESSAGE(!parse_number(bad), bad);
}

TEST_CASE("doubles are written in shortest round-trip form") {
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(1e-300) == "1e-300");
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::ldexp(mant(rng), expo(rng));
    CHECK(parse_number(format_double(x)) == x);
  }
}

TEST_CASE("scenario text: comments, blanks and dotted keys") {
  const auto s = parse_scenario(
      "# leading comment\n"
      "\n"
      "beam.kinetic_energy_kev = 10   # trailing comment\n"
      "  beam.r_perp_nm=1.5\n"
      "emitter.wavelength_nm = 700\r\n"
      "emitter.phi_r = pi/2\n"
      "outputs = spectrum, gamma_net\n"
      "sweep.axis = phi_r\n"
      "sweep.values = 0, pi\n",
      "text");
  CHECK(s.name == "text");
  CHECK(s.kinetic_energy_kev == 10.0);
  CHECK(s.r_perp_nm == 1.5);
  CHECK(s.wavelength_nm == 700.0);
  CHECK(s.phi_r == std::acos(-1.0) / 2.0);
  CHECK(s.outputs == std::vector<Product>{Product::spectrum, Product::gamma_net});
  REQUIRE(s.sweep_axis);
  CHECK(*s.sweep_axis == "phi_r");
  CHECK(s.sweep_values.size() == 2);
  CHECK_NOTHROW(s.validate());
  CHECK(parse_scenario("outputs = all\n").outputs == all_products());
}

TEST_CASE("parse errors carry line and column") {
  const auto expect = [](std::string_view text, std::size_t line, std::size_t column) {
    try {
      parse_scenario(text);
      FAIL("expected a parse error for: " << text);
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CAPTURE(msg);
      CHECK(e.line() == line);
      CHECK(e.column() == column);
    }
  };
  expect("beam.r_perp_nm = 2\nbeam.colour = 3\n", 2, 1);      // unknown key
  expect("beam.r_perp_nm 2\n", 1, 1);                          // missing '='
  expect("# c\nbeam.r_perp_nm = 2x\n", 2, 18);                 // bad number
  expect("beam.r_perp_nm = 2\n  beam.r_perp_nm = 3\n", 2, 3);  // duplicate
  expect("Beam.r_perp_nm = 2\n", 1, 1);                        // invalid key character
  expect("beam..r = 2\n", 1, 6);
  expect("beam.r_perp_nm =\n", 1, 17);                         // missing value
  expect("outputs = populations, pictures\n", 1, 24);          // unknown product
  expect("grid.time.points = -4\n", 1, 20);                    // not a count
  expect("sweep.values = 0, x\n", 1, 19);
  expect("= 3\n", 1, 1);
}

TEST_CASE("validation names the offending field") {
  const auto field_of = [](const Scenario& s) -> std::string {
    try {
      s.validate();
    } catch (const ValidationError& e) {
      return e.field();
    }
    return "";
  };
  auto base = small();
  CHECK(field_of(base) == "");

  auto s = base;
  s.sigma_t_fs = 5.0;
  s.sigma_z_nm = 50.0;
  CHECK(field_of(s) == "beam.sigma_t_fs");
  s = base;
  s.r_perp_nm = -1.0;
  CHECK(field_of(s) == "beam.r_perp_nm");
  s = base;
  s.kinetic_energy_kev = 0.0;
  CHECK(field_of(s) == "beam.kinetic_energy_kev");
  s = base;
  s.wavelength_nm = 0.0;
  CHECK(field_of(s) == "emitter.wavelength_nm");
  s = base;
  s.sigma_z_nm = -3.0;
  CHECK(field_of(s) == "beam.sigma_z_nm");
  s = base;
  s.a = 0.9;
  CHECK(field_of(s) == "emitter.a");
  s = base;
  s.time.stop = -1.0;
  CHECK(field_of(s) == "grid.time.stop_fs");
  s = base;
  s.energy.points = 1;
  CHECK(field_of(s) == "grid.energy.points");
  s = base;
  s.z_grid.span_sigmas = 5.0;
  CHECK(field_of(s) == "grid.z.span_sigmas");
  s = base;
  s.quadrature.rel_tol = 0.0;
  CHECK(field_of(s) == "quadrature");
  s = base;
  s.outputs = {Product::spectrum, Product::spectrum};
  CHECK(field_of(s) == "outputs");
  s = base;
  s.sweep_axis = "colour";
  s.sweep_values = {1.0};
  CHECK(field_of(s) == "sweep.axis");
  s = base;
  s.sweep_axis = "phi_r";
  CHECK(field_of(s) == "sweep.values");
  s = base;
  s.sweep_values = {1.0};
  CHECK(field_of(s) == "sweep.values");

  const auto both = parse_scenario(
      "beam.kinetic_energy_kev = 1\nbeam.sigma_t_fs = 2\nbeam.sigma_z_nm = 3\n"
      "beam.r_perp_nm = 1\nemitter.wavelength_nm = 500\n");
  CHECK_THROWS_AS(both.resolved(), ValidationError);
}

TEST_CASE("builtin scenarios") {
  CHECK(builtin_names().size() == 14);
  CHECK_THROWS_AS(builtin_scenario("fig9z"), ValidationError);

  const auto f1 = builtin_scenario("fig1b").resolved();
  CHECK(f1.kinetic_energy_kev == 0.5);
  CHECK(f1.r_perp_nm == 2.0);
  CHECK(f1.wavelength_nm == 560.0);
  CHECK(f1.d_x_debye == 30.0);
  CHECK(f1.d_z_debye == 30.0);
  CHECK(f1.a == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(f1.b == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(f1.phi_r == 0.0);
  // Default duration: four optical periods, recorded as a default.
  const auto e = f1.emitter();
  CHECK(f1.beam().sigma_t == doctest::Approx(4.0 * 2.0 * std::acos(-1.0) / e.omega0));
  CHECK(std::count(f1.defaults_applied.begin(), f1.defaults_applied.end(), "beam.sigma_t_fs") == 1);
  CHECK(f1.times().size() == 600);
  CHECK(f1.times().front() == doctest::Approx(-3.0 * f1.beam().sigma_t));
  CHECK(f1.times().back() == doctest::Approx(6.0 * f1.beam().sigma_t));

  const auto f2 = builtin_scenario("fig2d").resolved();
  CHECK(std::abs(f2.beam().beta - 0.578) < 1e-3);
  CHECK(f2.r_perp_nm == 2.0);
  CHECK(f2.wavelength_nm == 1000.0);
  CHECK(f2.times().front() == 0.0);
  CHECK(f2.times().back() == 8.0);

  const auto f3 = builtin_scenario("fig3b");
  CHECK(f3.r_perp_nm == 1.0);
  REQUIRE(f3.sweep_axis);
  CHECK(*f3.sweep_axis == "phi_r");

  for (const auto& n : builtin_names()) {
    CAPTURE(n);
    const auto s = builtin_scenario(n);
    CHECK(s.name == n);
    CHECK_NOTHROW(s.resolved());
    CHECK(is_builtin(n));
    if (s.sweep_axis)
      for (double v : s.sweep_values) CHECK_NOTHROW(with_axis_value(s, *s.sweep_axis, v).resolved());
  }
}

TEST_CASE("resolved text reproduces the scenario exactly") {
  for (const auto& n : {"fig1b", "fig2e", "fig3c"}) {
    const auto r = builtin_scenario(n).resolved();
    const auto back = parse_scenario(r.to_text(), "other").resolved();
    CHECK(back.name == r.name);
    CHECK(back.to_text() == r.to_text());
    CHECK(back.times() == r.times());
    CHECK(back.beam().sigma_z == r.beam().sigma_z);
    CHECK(back.emitter().omega0 == r.emitter().omega0);
    CHECK(back.defaults_applied.empty());
  }
  auto z = small();
  z.sigma_z_nm = 40.0;
  const auto r = z.resolved();
  CHECK(!r.sigma_t_fs);
  CHECK(parse_scenario(r.to_text()).resolved().beam().sigma_z == 40.0);
}

TEST_CASE("axis substitution") {
  const auto s = small();
  CHECK(with_axis_value(s, "kinetic_energy", 30.0).kinetic_energy_kev == 30.0);
  CHECK(with_axis_value(s, "r_perp", 1.0).r_perp_nm == 1.0);
  CHECK(with_axis_value(s, "wavelength", 1000.0).wavelength_nm == 1000.0);
  CHECK(with_axis_value(s, "phi_r", 0.5).phi_r == 0.5);
  auto z = s;
  z.sigma_z_nm = 40.0;
  const auto t = with_axis_value(z, "sigma_t", 3.0);
  CHECK(t.sigma_t_fs == 3.0);
  CHECK(!t.sigma_z_nm);
  CHECK_THROWS_AS(with_axis_value(s, "d_x", 1.0), ValidationError);
}

TEST_CASE("sha256 of known content") {
  TempDir d;
  fs::create_directories(d.path());
  std::ofstream(d.path() / "abc", std::ios::binary) << "abc";
  CHECK(sha256_file(d.path() / "abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run: schemas, determinism and manifest completeness") {
  TempDir a, b;
  const auto s = small("all");
  const auto ma = run(s, a.path());
  const auto mb = run(s, b.path());
  CHECK(ma.files.size() == 6);

  const std::map<std::string, std::string> headers{
      {"populations.csv", "t_fs,rho_gg,rho_ee,re_rho_ge,im_rho_ge"},
      {"coherences.csv", "t_fs,re_rho_ge,im_rho_ge,abs_rho_ge"},
      {"spectrum.csv", "t_fs,E_offset_eV,dPdE,loss,gain"},
      {"gamma_net.csv", "t_fs,E_offset_eV,gamma_net"},
      {"coupling_map.csv", "z_nm,t_fs,re_g,im_g,abs_g,phase_g"}};
  const std::map<std::string, std::size_t> rows{{"populations.csv", 9},
                                                {"coherences.csv", 9},
                                                {"spectrum.csv", 9 * 61},
                                                {"gamma_net.csv", 9 * 61},
                                                {"coupling_map.csv", 11 * 3}};
  for (const auto& [file, header] : headers) {
    CAPTURE(file);
    const auto text = slurp(a.path() / file);
    CHECK(text.substr(0, text.find('\n')) == header);
    CHECK(text.find('\r') == std::string::npos);
    CHECK(text.back() == '\n');
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == rows.at(file) + 1);
    CHECK(text == slurp(b.path() / file));
  }
  CHECK(slurp(a.path() / "scenario.resolved") == slurp(b.path() / "scenario.resolved"));
  for (std::size_t i = 0; i < ma.files.size(); ++i) CHECK(ma.files[i].sha256 == mb.files[i].sha256);
  check_manifest_complete(a.path());

  const auto j = nlohmann::json::parse(slurp(a.path() / "manifest.json"));
  CHECK(j["version"] == FECOH_VERSION);
  CHECK(j["runs"].size() == 1);
  CHECK(j["runs"][0]["parameters"]["beam"]["kinetic_energy_kev"] == 2.0);
  CHECK(j["runs"][0]["tolerances"].contains("quadrature_rel_tol"));
  CHECK(!j["timings"].empty());
  CHECK(std::find(j["runs"][0]["defaults_applied"].begin(), j["runs"][0]["defaults_applied"].end(),
                  "beam.sigma_t_fs") != j["runs"][0]["defaults_applied"].end());

  // Spectrum and gamma_net columns are consistent.
  std::istringstream spec(slurp(a.path() / "spectrum.csv"));
  std::istringstream gn(slurp(a.path() / "gamma_net.csv"));
  std::string ls, lg;
  std::getline(spec, ls);
  std::getline(gn, lg);
  while (std::getline(spec, ls) && std::getline(gn, lg)) {
    std::vector<double> v, w;
    std::stringstream ss(ls), sg(lg);
    for (std::string c; std::getline(ss, c, ',');) v.push_back(*parse_number(c));
    for (std::string c; std::getline(sg, c, ',');) w.push_back(*parse_number(c));
    REQUIRE(v.size() == 5);
    REQUIRE(w.size() == 3);
    CHECK(v[2] == v[3] + v[4]);
    CHECK(w[2] == v[3] - v[4]);
  }
}

TEST_CASE("the resolved file reproduces the run byte for byte") {
  TempDir a, b;
  run(small("populations, gamma_net"), a.path());
  const auto back = load_scenario(a.path() / "scenario.resolved");
  CHECK(back.name == "small");
  run(back, b.path());
  for (const auto* f : {"populations.csv", "gamma_net.csv", "scenario.resolved"})
    CHECK(slurp(a.path() / f) == slurp(b.path() / f));
}

TEST_CASE("sweep composes single runs") {
  TempDir sw;
  const auto s = small("populations, gamma_net");
  const std::vector<double> phis{0.0, *parse_number("pi/2"), *parse_number("pi"),
                                 *parse_number("3pi/2")};
  const auto m = sweep(s, "phi_r", phis, sw.path());
  CHECK(m.files.size() == 4 * 3);
  check_manifest_complete(sw.path());
  const auto j = nlohmann::json::parse(slurp(sw.path() / "manifest.json"));
  CHECK(j["sweep"]["axis"] == "phi_r");
  CHECK(j["runs"].size() == 4);

  for (double v : phis) {
    TempDir single;
    run(with_axis_value(s, "phi_r", v), single.path());
    const std::string tag = "phi_r=" + format_double(v);
    CAPTURE(tag);
    CHECK(slurp(sw.path() / ("populations__" + tag + ".csv")) ==
          slurp(single.path() / "populations.csv"));
    CHECK(slurp(sw.path() / ("gamma_net__" + tag + ".csv")) ==
          slurp(single.path() / "gamma_net.csv"));
  }

  // A scenario with a sweep section runs as that sweep.
  TempDir viaRun;
  auto with = s;
  with.sweep_axis = "r_perp";
  with.sweep_values = {2.0, 1.0};
  with.outputs = {Product::populations};
  const auto mr = run(with, viaRun.path());
  CHECK(listing(viaRun.path()) ==
        std::set<std::string>{"manifest.json", "populations__r_perp=1.csv",
                              "populations__r_perp=2.csv", "scenario__r_perp=1.resolved",
                              "scenario__r_perp=2.resolved"});

  TempDir bad;
  CHECK_THROWS_AS(sweep(s, "phi_r", {}, bad.path()), ValidationError);
  CHECK_THROWS_AS(sweep(s, "colour", {1.0}, bad.path()), ValidationError);
  CHECK_THROWS_AS(sweep(s, "phi_r", {1.0, 1.0}, bad.path()), ValidationError);
  CHECK_THROWS_AS(sweep(s, "r_perp", {1.0, -1.0}, bad.path()), ValidationError);
  CHECK(listing(bad.path()).empty());
}

TEST_CASE("a failing stage is named and its partial output removed") {
  TempDir d;
  fs::create_directories(d.path());
  std::ofstream(d.path() / "manifest.json") << "{\"stale\": true}";
  std::ofstream(d.path() / "unrelated.txt") << "kept";
  auto s = small("populations, spectrum");
  s.z_grid.max_panel_width = 400.0;
  try {
    run(s, d.path());
    FAIL("expected a RunError");
  } catch (const RunError& e) {
    CHECK(e.stage() == "spectrum");
    CHECK_THROWS_AS(std::rethrow_exception(e.cause()), ResolutionError);
  }
  CHECK(listing(d.path()) == std::set<std::string>{"unrelated.txt"});

  TempDir sw;
  try {
    sweep(s, "phi_r", {0.0, 1.0}, sw.path());
    FAIL("expected a RunError");
  } catch (const RunError& e) {
    CHECK(e.stage() == "phi_r=0/spectrum");
  }
  CHECK(listing(sw.path()).empty());
}

TEST_CASE("load_scenario reads files and reports missing ones") {
  TempDir d;
  fs::create_directories(d.path());
  std::ofstream(d.path() / "mine.cfg") << small().to_text() << "# end\n";
  const auto s = load_scenario(d.path() / "mine.cfg");
  CHECK(s.name == "small");
  CHECK(load_scenario_or_builtin("fig2b").name == "fig2b");
  CHECK_THROWS_AS(load_scenario(d.path() / "missing.cfg"), ValidationError);
  std::ofstream(d.path() / "anon.cfg") << "beam.r_perp_nm = 1\n";
  CHECK(load_scenario(d.path() / "anon.cfg").name == "anon");
}
