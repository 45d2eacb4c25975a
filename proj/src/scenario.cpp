#include "fecoh/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "fecoh/coupling.hpp"
#include "fecoh/errors.hpp"
#include "json.hpp"

#ifndef FECOH_VERSION
#define FECOH_VERSION "0.0.0"
#endif

namespace fecoh {

namespace fs = std::filesystem;
using constants::kPi;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- products

namespace {

constexpr std::array<std::pair<Product, std::string_view>, 5> kProductNames{{
    {Product::populations, "populations"},
    {Product::coherences, "coherences"},
    {Product::spectrum, "spectrum"},
    {Product::gamma_net, "gamma_net"},
    {Product::coupling_map, "coupling_map"},
}};

std::string_view trim(std::string_view s) {
  const auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && blank(s.front())) s.remove_prefix(1);
  while (!s.empty() && blank(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::optional<double> plain_number(std::string_view s) {
  if (s.empty() || s.front() == '+' || s.front() == '-') return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string_view product_name(Product p) {
  for (const auto& [prod, name] : kProductNames)
    if (prod == p) return name;
  return "unknown";
}

Product parse_product(std::string_view name) {
  for (const auto& [prod, n] : kProductNames)
    if (n == name) return prod;
  throw ValidationError("outputs", "unknown product '" + std::string(name) + "'");
}

const std::vector<Product>& all_products() {
  static const std::vector<Product> v{Product::populations, Product::coherences,
                                      Product::spectrum, Product::gamma_net,
                                      Product::coupling_map};
  return v;
}

const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> v{"kinetic_energy", "phi_r", "r_perp", "wavelength",
                                          "sigma_t"};
  return v;
}

std::optional<double> parse_number(std::string_view text) {
  auto t = trim(text);
  if (t.empty()) return std::nullopt;
  double sign = 1.0;
  if (t.front() == '+' || t.front() == '-') {
    if (t.front() == '-') sign = -1.0;
    t.remove_prefix(1);
  }
  const auto pos = t.find("pi");
  if (pos == std::string_view::npos) {
    const auto v = plain_number(t);
    if (!v) return std::nullopt;
    return sign * *v;
  }
  auto pre = t.substr(0, pos);
  auto post = t.substr(pos + 2);
  double factor = 1.0;
  if (!pre.empty()) {
    if (pre.back() == '*') pre.remove_suffix(1);
    const auto v = plain_number(pre);
    if (!v) return std::nullopt;
    factor = *v;
  }
  double divisor = 1.0;
  if (!post.empty()) {
    if (post.front() != '/') return std::nullopt;
    const auto v = plain_number(post.substr(1));
    if (!v || *v == 0.0) return std::nullopt;
    divisor = *v;
  }
  return sign * factor * kPi / divisor;
}

std::string format_double(double x) {
  if (x == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw DomainError("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

// ---------------------------------------------------------------- scenario

namespace {

double number_or_throw(std::string_view value, std::size_t line, std::size_t col,
                       std::string_view key) {
  const auto v = parse_number(value);
  if (!v)
    throw ParseError(line, col,
                     "'" + std::string(key) + "' expects a number, got '" + std::string(value) +
                         "'");
  return *v;
}

std::size_t count_or_throw(std::string_view value, std::size_t line, std::size_t col,
                           std::string_view key) {
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ParseError(line, col,
                     "'" + std::string(key) + "' expects a non-negative integer, got '" +
                         std::string(value) + "'");
  return n;
}

void require(bool ok, const char* field, const char* constraint) {
  if (!ok) throw ValidationError(field, constraint);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

double default_sigma_t(double wavelength_nm) {
  return 4.0 * 2.0 * kPi / omega_from_wavelength(wavelength_nm).omega0;
}

}  // namespace

void Scenario::set(std::string_view key, std::string_view value, std::size_t line,
                   std::size_t col, std::size_t key_col) {
  value = trim(value);
  const auto num = [&] { return number_or_throw(value, line, col, key); };
  const auto count = [&] { return count_or_throw(value, line, col, key); };

  if (key == "name") {
    if (value.empty()) throw ParseError(line, col, "'name' must not be empty");
    name = std::string(value);
  } else if (key == "beam.kinetic_energy_kev") {
    kinetic_energy_kev = num();
  } else if (key == "beam.sigma_t_fs") {
    sigma_t_fs = num();
  } else if (key == "beam.sigma_z_nm") {
    sigma_z_nm = num();
  } else if (key == "beam.r_perp_nm") {
    r_perp_nm = num();
  } else if (key == "emitter.wavelength_nm") {
    wavelength_nm = num();
  } else if (key == "emitter.d_x_debye") {
    d_x_debye = num();
  } else if (key == "emitter.d_y_debye") {
    d_y_debye = num();
  } else if (key == "emitter.d_z_debye") {
    d_z_debye = num();
  } else if (key == "emitter.a") {
    a = num();
  } else if (key == "emitter.b") {
    b = num();
  } else if (key == "emitter.phi_r") {
    phi_r = num();
  } else if (key == "grid.time.start_fs") {
    time.start = num();
  } else if (key == "grid.time.stop_fs") {
    time.stop = num();
  } else if (key == "grid.time.points") {
    time.points = count();
  } else if (key == "grid.energy.min_ev") {
    energy.start = num();
  } else if (key == "grid.energy.max_ev") {
    energy.stop = num();
  } else if (key == "grid.energy.points") {
    energy.points = count();
  } else if (key == "grid.z.span_sigmas") {
    z_grid.span_sigmas = num();
  } else if (key == "grid.z.max_panel_width_nm") {
    z_grid.max_panel_width = num();
  } else if (key == "grid.map.z_span_sigmas") {
    map.z_span_sigmas = num();
  } else if (key == "grid.map.z_points") {
    map.z_points = count();
  } else if (key == "grid.map.time_points") {
    map.time_points = count();
  } else if (key == "quadrature.rel_tol") {
    quadrature.rel_tol = num();
  } else if (key == "quadrature.abs_tol") {
    quadrature.abs_tol = num();
  } else if (key == "quadrature.max_subdivisions") {
    quadrature.max_subdivisions = count();
  } else if (key == "quadrature.oscillation_panel_fraction") {
    quadrature.oscillation_panel_fraction = num();
  } else if (key == "quadrature.tail_decay_threshold") {
    quadrature.tail_decay_threshold = num();
  } else if (key == "outputs") {
    std::vector<Product> out;
    for (const auto item : split_list(value)) {
      if (item == "all") {
        out = all_products();
      } else {
        try {
          out.push_back(parse_product(item));
        } catch (const ValidationError&) {
          throw ParseError(line, col + static_cast<std::size_t>(item.data() - value.data()),
                           "unknown product '" + std::string(item) + "'");
        }
      }
    }
    outputs = std::move(out);
  } else if (key == "sweep.axis") {
    sweep_axis = std::string(value);
  } else if (key == "sweep.values") {
    std::vector<double> vals;
    if (!value.empty()) {
      for (const auto item : split_list(value)) {
        const auto v = parse_number(item);
        if (!v)
          throw ParseError(line, col + static_cast<std::size_t>(item.data() - value.data()),
                           "'sweep.values' expects numbers, got '" + std::string(item) + "'");
        vals.push_back(*v);
      }
    }
    sweep_values = std::move(vals);
  } else {
    throw ParseError(line, key_col, "unknown key '" + std::string(key) + "'");
  }
}

void Scenario::validate() const {
  require(!name.empty(), "name", "must not be empty");
  require(positive(kinetic_energy_kev), "beam.kinetic_energy_kev", "must be a finite value > 0");
  require(!(sigma_t_fs && sigma_z_nm), "beam.sigma_t_fs",
          "exactly one of beam.sigma_t_fs and beam.sigma_z_nm may be given");
  if (sigma_t_fs) require(positive(*sigma_t_fs), "beam.sigma_t_fs", "must be a finite value > 0");
  if (sigma_z_nm) require(positive(*sigma_z_nm), "beam.sigma_z_nm", "must be a finite value > 0");
  require(positive(r_perp_nm), "beam.r_perp_nm", "must be a finite value > 0");
  require(positive(wavelength_nm), "emitter.wavelength_nm", "must be a finite value > 0");
  require(std::isfinite(d_x_debye), "emitter.d_x_debye", "must be finite");
  require(std::isfinite(d_y_debye), "emitter.d_y_debye", "must be finite");
  require(std::isfinite(d_z_debye), "emitter.d_z_debye", "must be finite");
  require(std::isfinite(a) && std::isfinite(b), "emitter.a",
          "initial amplitudes must be finite");
  require(std::abs(a * a + b * b - 1.0) <= 1e-9, "emitter.a",
          "a^2 + b^2 must equal 1 (within 1e-9)");
  require(std::isfinite(phi_r), "emitter.phi_r", "must be finite");

  if (time.start) require(std::isfinite(*time.start), "grid.time.start_fs", "must be finite");
  if (time.stop) require(std::isfinite(*time.stop), "grid.time.stop_fs", "must be finite");
  if (time.start && time.stop)
    require(*time.start < *time.stop, "grid.time.stop_fs", "must exceed grid.time.start_fs");
  if (time.points) require(*time.points >= 2, "grid.time.points", "must be >= 2");

  if (energy.start) require(std::isfinite(*energy.start), "grid.energy.min_ev", "must be finite");
  if (energy.stop) require(std::isfinite(*energy.stop), "grid.energy.max_ev", "must be finite");
  if (energy.start && energy.stop)
    require(*energy.start < *energy.stop, "grid.energy.max_ev", "must exceed grid.energy.min_ev");
  if (energy.points) require(*energy.points >= 2, "grid.energy.points", "must be >= 2");

  require(std::isfinite(z_grid.span_sigmas) && z_grid.span_sigmas >= 6.0, "grid.z.span_sigmas",
          "must be >= 6");
  require(std::isfinite(z_grid.max_panel_width) && z_grid.max_panel_width >= 0.0,
          "grid.z.max_panel_width_nm", "must be >= 0 (0 selects the automatic width)");
  require(positive(map.z_span_sigmas), "grid.map.z_span_sigmas", "must be a finite value > 0");
  require(map.z_points >= 2, "grid.map.z_points", "must be >= 2");
  require(map.time_points >= 1, "grid.map.time_points", "must be >= 1");

  try {
    quadrature.validate();
  } catch (const DomainError& e) {
    throw ValidationError("quadrature", e.what());
  }

  require(!outputs.empty(), "outputs", "at least one product is required");
  std::set<Product> seen;
  for (auto p : outputs) require(seen.insert(p).second, "outputs", "products must not repeat");

  if (sweep_axis) {
    require(std::find(sweep_axes().begin(), sweep_axes().end(), *sweep_axis) != sweep_axes().end(),
            "sweep.axis", "must be one of kinetic_energy, phi_r, r_perp, wavelength, sigma_t");
    require(!sweep_values.empty(), "sweep.values", "must not be empty");
  } else {
    require(sweep_values.empty(), "sweep.values", "requires sweep.axis");
  }
}

Scenario Scenario::resolved() const {
  validate();
  Scenario r = *this;
  r.defaults_applied.clear();
  if (!r.sigma_t_fs && !r.sigma_z_nm) {
    r.sigma_t_fs = default_sigma_t(r.wavelength_nm);
    r.defaults_applied.emplace_back("beam.sigma_t_fs");
  }
  const double st = r.beam().sigma_t;
  if (!r.time.start) {
    r.time.start = -3.0 * st;
    r.defaults_applied.emplace_back("grid.time.start_fs");
  }
  if (!r.time.stop) {
    r.time.stop = 6.0 * st;
    r.defaults_applied.emplace_back("grid.time.stop_fs");
  }
  if (!r.time.points) {
    r.time.points = 600;
    r.defaults_applied.emplace_back("grid.time.points");
  }
  const double quantum = omega_from_wavelength(r.wavelength_nm).hbar_omega0;
  if (!r.energy.start) {
    r.energy.start = -2.5 * quantum;
    r.defaults_applied.emplace_back("grid.energy.min_ev");
  }
  if (!r.energy.stop) {
    r.energy.stop = 2.5 * quantum;
    r.defaults_applied.emplace_back("grid.energy.max_ev");
  }
  if (!r.energy.points) {
    r.energy.points = 801;
    r.defaults_applied.emplace_back("grid.energy.points");
  }
  require(*r.time.start < *r.time.stop, "grid.time.stop_fs", "must exceed grid.time.start_fs");
  require(*r.energy.start < *r.energy.stop, "grid.energy.max_ev",
          "must exceed grid.energy.min_ev");
  return r;
}

BeamParams Scenario::beam() const {
  if (sigma_z_nm) return BeamParams::from_sigma_z(kinetic_energy_kev, *sigma_z_nm, r_perp_nm);
  if (!sigma_t_fs) throw ValidationError("beam.sigma_t_fs", "scenario is not resolved");
  return BeamParams::from_sigma_t(kinetic_energy_kev, *sigma_t_fs, r_perp_nm);
}

EmitterParams Scenario::emitter() const {
  // Amplitudes given in decimal may miss unit norm by a few ulps.
  const double norm = std::hypot(a, b);
  return EmitterParams::from_wavelength(d_x_debye, d_y_debye, d_z_debye, wavelength_nm, a / norm,
                                        b / norm, phi_r);
}

std::vector<double> Scenario::times() const {
  if (!time.complete()) throw ValidationError("grid.time", "scenario is not resolved");
  std::vector<double> v(*time.points);
  const double h = (*time.stop - *time.start) / static_cast<double>(*time.points - 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = *time.start + h * static_cast<double>(i);
  v.back() = *time.stop;
  return v;
}

EnergyGrid Scenario::energy_grid() const {
  if (!energy.complete()) throw ValidationError("grid.energy", "scenario is not resolved");
  return EnergyGrid{*energy.start, *energy.stop, *energy.points};
}

std::string Scenario::to_text() const {
  std::ostringstream o;
  const auto kv = [&](std::string_view k, const std::string& v) { o << k << " = " << v << '\n'; };
  const auto num = [&](std::string_view k, double v) { kv(k, format_double(v)); };
  const auto cnt = [&](std::string_view k, std::size_t v) { kv(k, std::to_string(v)); };
  kv("name", name);
  num("beam.kinetic_energy_kev", kinetic_energy_kev);
  if (sigma_t_fs) num("beam.sigma_t_fs", *sigma_t_fs);
  if (sigma_z_nm) num("beam.sigma_z_nm", *sigma_z_nm);
  num("beam.r_perp_nm", r_perp_nm);
  num("emitter.wavelength_nm", wavelength_nm);
  num("emitter.d_x_debye", d_x_debye);
  num("emitter.d_y_debye", d_y_debye);
  num("emitter.d_z_debye", d_z_debye);
  num("emitter.a", a);
  num("emitter.b", b);
  num("emitter.phi_r", phi_r);
  if (time.start) num("grid.time.start_fs", *time.start);
  if (time.stop) num("grid.time.stop_fs", *time.stop);
  if (time.points) cnt("grid.time.points", *time.points);
  if (energy.start) num("grid.energy.min_ev", *energy.start);
  if (energy.stop) num("grid.energy.max_ev", *energy.stop);
  if (energy.points) cnt("grid.energy.points", *energy.points);
  num("grid.z.span_sigmas", z_grid.span_sigmas);
  num("grid.z.max_panel_width_nm", z_grid.max_panel_width);
  num("grid.map.z_span_sigmas", map.z_span_sigmas);
  cnt("grid.map.z_points", map.z_points);
  cnt("grid.map.time_points", map.time_points);
  num("quadrature.rel_tol", quadrature.rel_tol);
  num("quadrature.abs_tol", quadrature.abs_tol);
  cnt("quadrature.max_subdivisions", quadrature.max_subdivisions);
  num("quadrature.oscillation_panel_fraction", quadrature.oscillation_panel_fraction);
  num("quadrature.tail_decay_threshold", quadrature.tail_decay_threshold);
  std::string outs;
  for (auto p : outputs) {
    if (!outs.empty()) outs += ", ";
    outs += product_name(p);
  }
  kv("outputs", outs);
  if (sweep_axis) {
    kv("sweep.axis", *sweep_axis);
    std::string vals;
    for (double v : sweep_values) {
      if (!vals.empty()) vals += ", ";
      vals += format_double(v);
    }
    kv("sweep.values", vals);
  }
  return o.str();
}

Scenario parse_scenario(std::string_view text, std::string name) {
  Scenario s;
  s.name = std::move(name);
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty() || line_no == 0) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    const char* base = line.data();
    const auto column = [&](std::string_view part) {
      return static_cast<std::size_t>(part.data() - base) + 1;
    };
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    const auto body = trim(line);
    if (body.empty()) {
      if (text.empty()) break;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(line_no, column(body), "expected 'key = value'");
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, column(body), "missing key before '='");
    bool segment_start = true;
    for (std::size_t i = 0; i < key.size(); ++i) {
      const char c = key[i];
      const bool lower = (c >= 'a' && c <= 'z') || c == '_';
      const bool digit = c >= '0' && c <= '9';
      const bool ok = c == '.' ? !segment_start && i + 1 < key.size()
                               : (lower || (digit && !segment_start));
      if (!ok) throw ParseError(line_no, column(key) + i, "invalid character in key");
      segment_start = c == '.';
    }
    const std::size_t value_col =
        value.empty() ? column(body) + eq + 1 : column(value);
    if (value.empty()) throw ParseError(line_no, value_col, "missing value for '" +
                                                              std::string(key) + "'");
    if (!seen.emplace(key).second)
      throw ParseError(line_no, column(key), "duplicate key '" + std::string(key) + "'");
    s.set(key, value, line_no, value_col, column(key));
    if (text.empty()) break;
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("scenario", "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.stem().string());
}

// ---------------------------------------------------------------- builtins

namespace {

constexpr std::string_view kFig1Common =
    "beam.kinetic_energy_kev = 0.5\n"
    "beam.r_perp_nm = 2\n"
    "emitter.d_x_debye = 30\n"
    "emitter.d_z_debye = 30\n"
    "emitter.a = 0.7071067811865476\n"
    "emitter.b = 0.7071067811865476\n"
    "emitter.phi_r = 0\n";

// v0 = 0.578 c; spectra and Gamma_net are shown after the crossing, t in [0, 8] fs.
constexpr std::string_view kFig2Common =
    "beam.kinetic_energy_kev = 115\n"
    "emitter.d_x_debye = 30\n"
    "emitter.d_z_debye = 30\n"
    "emitter.a = 0.7071067811865476\n"
    "emitter.b = 0.7071067811865476\n"
    "emitter.phi_r = 0\n"
    "grid.time.start_fs = 0\n"
    "grid.time.stop_fs = 8\n"
    "grid.time.points = 161\n";

struct Builtin {
  std::string_view name;
  std::string_view common;
  std::string_view extra;
};

const std::array<Builtin, 14> kBuiltins{{
    {"fig1b", kFig1Common, "emitter.wavelength_nm = 560\noutputs = populations\n"},
    {"fig1c", kFig1Common, "emitter.wavelength_nm = 1000\noutputs = populations\n"},
    {"fig1d", kFig1Common, "emitter.wavelength_nm = 560\noutputs = coherences\n"},
    {"fig1e", kFig1Common, "emitter.wavelength_nm = 1000\noutputs = coherences\n"},
    {"fig1f", kFig1Common,
     "emitter.wavelength_nm = 560\noutputs = populations\n"
     "sweep.axis = kinetic_energy\nsweep.values = 0.5, 2, 10, 30\n"},
    {"fig1g", kFig1Common,
     "emitter.wavelength_nm = 1000\noutputs = populations\n"
     "sweep.axis = phi_r\nsweep.values = 0, pi\n"},
    {"fig2a", kFig2Common, "beam.r_perp_nm = 2\nemitter.wavelength_nm = 560\noutputs = spectrum\n"},
    {"fig2b", kFig2Common, "beam.r_perp_nm = 2\nemitter.wavelength_nm = 560\noutputs = gamma_net\n"},
    {"fig2d", kFig2Common, "beam.r_perp_nm = 2\nemitter.wavelength_nm = 1000\noutputs = spectrum\n"},
    {"fig2e", kFig2Common,
     "beam.r_perp_nm = 2\nemitter.wavelength_nm = 1000\noutputs = gamma_net\n"},
    {"fig3a", kFig2Common,
     "beam.r_perp_nm = 2\nemitter.wavelength_nm = 560\noutputs = gamma_net\n"
     "grid.energy.min_ev = -0.5\ngrid.energy.max_ev = 0.5\ngrid.energy.points = 101\n"
     "sweep.axis = phi_r\nsweep.values = 0, pi/2, pi, 3pi/2\n"},
    {"fig3b", kFig2Common,
     "beam.r_perp_nm = 1\nemitter.wavelength_nm = 560\noutputs = gamma_net\n"
     "grid.energy.min_ev = -0.5\ngrid.energy.max_ev = 0.5\ngrid.energy.points = 101\n"
     "sweep.axis = phi_r\nsweep.values = 0, pi/2, pi, 3pi/2\n"},
    {"fig3c", kFig2Common,
     "beam.r_perp_nm = 2\nemitter.wavelength_nm = 1000\noutputs = gamma_net\n"
     "grid.energy.min_ev = -0.5\ngrid.energy.max_ev = 0.5\ngrid.energy.points = 101\n"
     "sweep.axis = phi_r\nsweep.values = 0, pi/2, pi, 3pi/2\n"},
    {"fig3d", kFig2Common,
     "beam.r_perp_nm = 1\nemitter.wavelength_nm = 1000\noutputs = gamma_net\n"
     "grid.energy.min_ev = -0.5\ngrid.energy.max_ev = 0.5\ngrid.energy.points = 101\n"
     "sweep.axis = phi_r\nsweep.values = 0, pi/2, pi, 3pi/2\n"},
}};

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> out;
    for (const auto& b : kBuiltins) out.emplace_back(b.name);
    return out;
  }();
  return v;
}

bool is_builtin(std::string_view name) {
  return std::any_of(kBuiltins.begin(), kBuiltins.end(),
                     [&](const Builtin& b) { return b.name == name; });
}

Scenario builtin_scenario(std::string_view name) {
  for (const auto& b : kBuiltins)
    if (b.name == name)
      return parse_scenario(std::string(b.common) + std::string(b.extra), std::string(b.name));
  throw ValidationError("scenario", "unknown builtin '" + std::string(name) + "'");
}

Scenario load_scenario_or_builtin(std::string_view spec) {
  if (is_builtin(spec)) return builtin_scenario(spec);
  return load_scenario(fs::path(std::string(spec)));
}

Scenario with_axis_value(const Scenario& s, std::string_view axis, double value) {
  Scenario r = s;
  r.sweep_axis.reset();
  r.sweep_values.clear();
  if (axis == "kinetic_energy") {
    r.kinetic_energy_kev = value;
  } else if (axis == "phi_r") {
    r.phi_r = value;
  } else if (axis == "r_perp") {
    r.r_perp_nm = value;
  } else if (axis == "wavelength") {
    r.wavelength_nm = value;
  } else if (axis == "sigma_t") {
    r.sigma_t_fs = value;
    r.sigma_z_nm.reset();
  } else {
    throw ValidationError("sweep.axis", "unknown axis '" + std::string(axis) +
                                            "'; expected one of kinetic_energy, phi_r, r_perp, "
                                            "wavelength, sigma_t");
  }
  return r;
}

// ---------------------------------------------------------------- output

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256: cannot open '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

namespace {

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) text_ += ',';
      text_ += h;
      first = false;
    }
    text_ += '\n';
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      if (!first) text_ += ',';
      text_ += format_double(v);
      first = false;
    }
    text_ += '\n';
    ++rows_;
  }
  const std::string& text() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  std::string text_;
  std::size_t rows_ = 0;
};

using Clock = std::chrono::steady_clock;

class Runner {
 public:
  explicit Runner(fs::path out) : out_(std::move(out)) {}

  void run_one(const Scenario& scenario, const std::string& tag) {
    std::string stage = "resolve";
    try {
      auto t0 = Clock::now();
      const Scenario r = scenario.resolved();
      const BeamParams beam = r.beam();
      const EmitterParams emitter = r.emitter();
      emitter.validate();
      const auto times = r.times();
      lap(tag, stage, t0);

      const auto wants = [&](Product p) {
        return std::find(r.outputs.begin(), r.outputs.end(), p) != r.outputs.end();
      };
      std::vector<std::string> run_files;

      if (wants(Product::populations) || wants(Product::coherences)) {
        stage = "density_matrix";
        t0 = Clock::now();
        const auto dm = density_matrix_series(times, beam, emitter, r.z_grid, r.quadrature);
        lap(tag, stage, t0);
        stage = "write";
        if (wants(Product::populations)) {
          Csv csv({"t_fs", "rho_gg", "rho_ee", "re_rho_ge", "im_rho_ge"});
          for (const auto& d : dm)
            csv.row({d.t, d.rho_gg, d.rho_ee, d.rho_ge.real(), d.rho_ge.imag()});
          run_files.push_back(emit(Product::populations, tag, csv));
        }
        if (wants(Product::coherences)) {
          Csv csv({"t_fs", "re_rho_ge", "im_rho_ge", "abs_rho_ge"});
          for (const auto& d : dm)
            csv.row({d.t, d.rho_ge.real(), d.rho_ge.imag(), std::abs(d.rho_ge)});
          run_files.push_back(emit(Product::coherences, tag, csv));
        }
      }

      if (wants(Product::spectrum) || wants(Product::gamma_net)) {
        stage = "spectrum";
        t0 = Clock::now();
        const auto energies = r.energy_grid().values();
        const auto spectra =
            spectrum_series(energies, times, beam, emitter, r.z_grid, r.quadrature);
        lap(tag, stage, t0);
        stage = "write";
        if (wants(Product::spectrum)) {
          Csv csv({"t_fs", "E_offset_eV", "dPdE", "loss", "gain"});
          for (const auto& s : spectra)
            for (std::size_t i = 0; i < energies.size(); ++i)
              csv.row({s.t, energies[i], s.dPdE[i], s.loss[i], s.gain[i]});
          run_files.push_back(emit(Product::spectrum, tag, csv));
        }
        if (wants(Product::gamma_net)) {
          Csv csv({"t_fs", "E_offset_eV", "gamma_net"});
          for (const auto& s : spectra)
            for (std::size_t i = 0; i < energies.size(); ++i)
              csv.row({s.t, energies[i], s.loss[i] - s.gain[i]});
          run_files.push_back(emit(Product::gamma_net, tag, csv));
        }
      }

      if (wants(Product::coupling_map)) {
        stage = "coupling_map";
        t0 = Clock::now();
        const double zmax = r.map.z_span_sigmas * beam.sigma_z;
        std::vector<double> mt(r.map.time_points, times.front());
        if (mt.size() > 1)
          for (std::size_t j = 0; j < mt.size(); ++j)
            mt[j] = times.front() + (times.back() - times.front()) * static_cast<double>(j) /
                                        static_cast<double>(mt.size() - 1);
        const auto profile = make_coupling_profile(beam, emitter, mt.front(), mt.back(),
                                                   r.z_grid, r.quadrature);
        Csv csv({"z_nm", "t_fs", "re_g", "im_g", "abs_g", "phase_g"});
        for (std::size_t i = 0; i < r.map.z_points; ++i) {
          const double z = -zmax + 2.0 * zmax * static_cast<double>(i) /
                                       static_cast<double>(r.map.z_points - 1);
          for (double t : mt) {
            const auto v = profile.value(z, t);
            csv.row({z, t, v.g.real(), v.g.imag(), v.magnitude, v.phase});
          }
        }
        lap(tag, stage, t0);
        stage = "write";
        run_files.push_back(emit(Product::coupling_map, tag, csv));
      }

      stage = "write";
      Scenario echo = r;
      echo.defaults_applied.clear();
      const std::string resolved_name = tagged("scenario", tag, ".resolved");
      write_file(resolved_name, echo.to_text(), "resolved_scenario", tag, 0);

      json entry;
      entry["tag"] = tag;
      entry["resolved_file"] = resolved_name;
      entry["defaults_applied"] = r.defaults_applied;
      entry["parameters"] = parameters(r, beam, emitter);
      entry["tolerances"] = tolerances(r);
      entry["files"] = run_files;
      runs_.push_back(std::move(entry));
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& e) {
      throw RunError(tag.empty() ? stage : tag + "/" + stage, std::current_exception(), e.what());
    }
  }

  RunManifest finish(const Scenario& scenario, const json& sweep_info) {
    RunManifest m;
    m.scenario = scenario.name;
    m.version = FECOH_VERSION;
    m.files = files_;
    m.stage_seconds = timings_;

    json j;
    j["tool"] = "fecoh";
    j["version"] = m.version;
    j["scenario"] = scenario.name;
    j["sweep"] = sweep_info;
    j["runs"] = runs_;
    json files = json::array();
    for (const auto& f : files_) {
      files.push_back({{"path", f.path},
                       {"product", f.product},
                       {"tag", f.tag},
                       {"sha256", f.sha256},
                       {"bytes", f.bytes},
                       {"rows", f.rows}});
    }
    j["files"] = std::move(files);
    json timing = json::array();
    for (const auto& [stage, secs] : timings_) timing.push_back({{"stage", stage}, {"seconds", secs}});
    j["timings"] = std::move(timing);
    m.json = j.dump(2) + "\n";
    try {
      std::ofstream out(out_ / "manifest.json", std::ios::binary | std::ios::trunc);
      out << m.json;
      out.close();
      if (!out) throw std::runtime_error("cannot write manifest.json");
    } catch (const std::exception& e) {
      throw RunError("manifest", std::current_exception(), e.what());
    }
    return m;
  }

  void cleanup() noexcept {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(out_ / f.path, ec);
    fs::remove(out_ / "manifest.json", ec);
  }

 private:
  static std::string tagged(std::string_view stem, const std::string& tag, std::string_view ext) {
    std::string s(stem);
    if (!tag.empty()) s += "__" + tag;
    s += ext;
    return s;
  }

  void lap(const std::string& tag, const std::string& stage, Clock::time_point t0) {
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    timings_.emplace_back(tag.empty() ? stage : tag + "/" + stage, secs);
  }

  std::string emit(Product p, const std::string& tag, const Csv& csv) {
    const auto name = tagged(product_name(p), tag, ".csv");
    write_file(name, csv.text(), std::string(product_name(p)), tag, csv.rows());
    return name;
  }

  void write_file(const std::string& name, const std::string& text, const std::string& product,
                  const std::string& tag, std::size_t rows) {
    const fs::path path = out_ / name;
    ManifestFile f{name, product, tag, "", 0, rows};
    files_.push_back(f);  // registered first so a failed write is cleaned up too
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    files_.back().sha256 = sha256_file(path);
    files_.back().bytes = fs::file_size(path);
  }

  static json parameters(const Scenario& r, const BeamParams& beam, const EmitterParams& emitter) {
    const auto ginf = g_infinity(beam, emitter);
    const auto eg = r.energy_grid();
    return {
        {"beam",
         {{"kinetic_energy_kev", beam.kinetic_energy},
          {"beta", beam.beta},
          {"gamma", beam.gamma},
          {"velocity_nm_per_fs", beam.velocity()},
          {"sigma_t_fs", beam.sigma_t},
          {"sigma_z_nm", beam.sigma_z},
          {"sigma_given", r.sigma_z_nm ? "sigma_z_nm" : "sigma_t_fs"},
          {"r_perp_nm", beam.r_perp},
          {"k0_per_nm", beam.k0}}},
        {"emitter",
         {{"wavelength_nm", r.wavelength_nm},
          {"omega0_rad_per_fs", emitter.omega0},
          {"hbar_omega0_ev", emitter.hbar_omega0},
          {"period_fs", 2.0 * kPi / emitter.omega0},
          {"d_x_debye", r.d_x_debye},
          {"d_y_debye", r.d_y_debye},
          {"d_z_debye", r.d_z_debye},
          {"d_x_e_nm", emitter.d_x},
          {"d_z_e_nm", emitter.d_z},
          {"a", emitter.a},
          {"b", emitter.b},
          {"phi_r_rad", emitter.phi_r}}},
        {"coupling",
         {{"g_infinity_re", ginf.real()},
          {"g_infinity_im", ginf.imag()},
          {"g_infinity_abs", std::abs(ginf)}}},
        {"grids",
         {{"time_start_fs", *r.time.start},
          {"time_stop_fs", *r.time.stop},
          {"time_points", *r.time.points},
          {"energy_min_ev", eg.min_ev},
          {"energy_max_ev", eg.max_ev},
          {"energy_points", eg.points},
          {"energy_step_ev", eg.step()},
          {"z_span_sigmas", r.z_grid.span_sigmas},
          {"z_max_panel_width_nm", r.z_grid.max_panel_width},
          {"map_z_span_sigmas", r.map.z_span_sigmas},
          {"map_z_points", r.map.z_points},
          {"map_time_points", r.map.time_points}}},
        {"outputs", [&] {
           json o = json::array();
           for (auto p : r.outputs) o.push_back(std::string(product_name(p)));
           return o;
         }()}};
  }

  static json tolerances(const Scenario& r) {
    return {{"quadrature_rel_tol", r.quadrature.rel_tol},
            {"quadrature_abs_tol", r.quadrature.abs_tol},
            {"quadrature_max_subdivisions", r.quadrature.max_subdivisions},
            {"oscillation_panel_fraction", r.quadrature.oscillation_panel_fraction},
            {"tail_decay_threshold", r.quadrature.tail_decay_threshold},
            {"spectral_exclusion_relative", kSpectralExclusion},
            {"z_span_sigmas", r.z_grid.span_sigmas}};
  }

  fs::path out_;
  std::vector<ManifestFile> files_;
  std::vector<std::pair<std::string, double>> timings_;
  json runs_ = json::array();
};

void prepare_output(const fs::path& out) {
  try {
    fs::create_directories(out);
    std::error_code ec;
    fs::remove(out / "manifest.json", ec);  // a stale manifest must not describe a failed run
    if (ec) throw std::runtime_error("cannot remove stale manifest: " + ec.message());
  } catch (const std::exception& e) {
    throw RunError("prepare", std::current_exception(), e.what());
  }
}

}  // namespace

RunManifest run(const Scenario& scenario, const fs::path& out_dir) {
  if (scenario.sweep_axis) return sweep(scenario, *scenario.sweep_axis, scenario.sweep_values, out_dir);
  scenario.validate();
  prepare_output(out_dir);
  Runner runner(out_dir);
  try {
    runner.run_one(scenario, "");
    return runner.finish(scenario, nullptr);
  } catch (...) {
    runner.cleanup();
    throw;
  }
}

RunManifest sweep(const Scenario& scenario, std::string_view axis,
                  const std::vector<double>& values, const fs::path& out_dir) {
  if (std::find(sweep_axes().begin(), sweep_axes().end(), axis) == sweep_axes().end())
    throw ValidationError("sweep.axis", "unknown axis '" + std::string(axis) +
                                            "'; expected one of kinetic_energy, phi_r, r_perp, "
                                            "wavelength, sigma_t");
  if (values.empty()) throw ValidationError("sweep.values", "must not be empty");
  std::vector<Scenario> members;
  std::set<std::string> tags;
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("sweep.values", "must be finite");
    if (!tags.insert(format_double(v)).second)
      throw ValidationError("sweep.values", "values must not repeat");
    members.push_back(with_axis_value(scenario, axis, v));
    members.back().validate();
  }
  prepare_output(out_dir);
  Runner runner(out_dir);
  try {
    for (std::size_t i = 0; i < values.size(); ++i)
      runner.run_one(members[i], std::string(axis) + "=" + format_double(values[i]));
    json info = {{"axis", std::string(axis)}, {"values", values}};
    return runner.finish(scenario, info);
  } catch (...) {
    runner.cleanup();
    throw;
  }
}

// ---------------------------------------------------------------- selftest

std::vector<SelftestLine> selftest() {
  struct Key {
    double ke, r, lambda;
    bool operator<(const Key& o) const {
      return std::tie(ke, r, lambda) < std::tie(o.ke, o.r, o.lambda);
    }
  };
  std::map<Key, Scenario> distinct;
  for (const auto& n : builtin_names()) {
    const auto s = builtin_scenario(n);
    if (s.sweep_axis) {
      for (double v : s.sweep_values) {
        const auto m = with_axis_value(s, *s.sweep_axis, v).resolved();
        distinct.emplace(Key{m.kinetic_energy_kev, m.r_perp_nm, m.wavelength_nm}, m);
      }
    } else {
      const auto m = s.resolved();
      distinct.emplace(Key{m.kinetic_energy_kev, m.r_perp_nm, m.wavelength_nm}, m);
    }
  }

  std::vector<SelftestLine> out;
  for (const auto& [key, s] : distinct) {
    const auto beam = s.beam();
    const auto emitter = s.emitter();
    const double wavelength_beta = s.wavelength_nm * beam.beta;
    const double zmax = std::max(25.0 * beam.r_perp, 2.0 * wavelength_beta);
    const double tmax = zmax / beam.velocity();
    std::vector<double> zs, ts;
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 21; ++j) {
        zs.push_back(-zmax + 2.0 * zmax * i / 20.0);
        ts.push_back(-tmax + 2.0 * tmax * j / 20.0);
      }
    const auto direct = g_direct_many(zs, ts, beam, emitter, 0.0, s.quadrature);
    double max_diff = 0.0, max_g = 0.0;
    for (std::size_t n = 0; n < zs.size(); ++n) {
      const auto semi = g_semianalytic(zs[n], ts[n], beam, emitter, s.quadrature);
      max_diff = std::max(max_diff, std::abs(semi.g - direct[n].g));
      max_g = std::max(max_g, std::abs(direct[n].g));
    }
    const double rel = max_g > 0.0 ? max_diff / max_g : max_diff;
    std::ostringstream name;
    name << "coupling oracle equivalence " << format_double(key.ke) << " keV, r="
         << format_double(key.r) << " nm, " << format_double(key.lambda) << " nm";
    out.push_back({name.str(), rel <= 1e-6, "max relative difference " + format_double(rel)});

    const auto ginf = g_infinity(beam, emitter);
    const auto parts = coupling_semianalytic_parts(1e3 * beam.r_perp, beam, emitter, s.quadrature);
    const double lim = std::abs(parts.g0 + parts.g1 - ginf) / std::abs(ginf);
    std::ostringstream n2;
    n2 << "long-time limit " << format_double(key.ke) << " keV, r=" << format_double(key.r)
       << " nm, " << format_double(key.lambda) << " nm";
    out.push_back({n2.str(), lim <= 1e-4, "relative deviation " + format_double(lim)});
  }
  return out;
}

}  // namespace fecoh
