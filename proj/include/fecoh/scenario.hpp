#pragma once

// Scenario files, built-in figure scenarios, runs, sweeps and the run manifest.
//
// Scenario file grammar (UTF-8, one entry per line):
//
//   line    := blank | comment | entry
//   comment := '#' anything
//   entry   := key '=' value [comment]
//   key     := [a-z_][a-z0-9_]* ('.' [a-z_][a-z0-9_]*)*
//   value   := text up to '#' or end of line, surrounding blanks trimmed
//
// Numbers are decimal literals optionally scaled by pi: "0.25", "pi", "-pi/2",
// "3pi/2", "1.5*pi". Lists are comma separated. Keys and defaults:
//
//   name                        scenario label               (file stem)
//   beam.kinetic_energy_kev     electron kinetic energy      required
//   beam.sigma_t_fs             wavepacket duration          4 optical periods
//   beam.sigma_z_nm             wavepacket length            (exclusive with sigma_t)
//   beam.r_perp_nm              impact parameter             required
//   emitter.wavelength_nm       transition wavelength        required
//   emitter.d_x_debye, .d_y_debye, .d_z_debye               0
//   emitter.a, emitter.b        initial amplitudes           1, 0
//   emitter.phi_r               relative phase (rad)         0
//   grid.time.start_fs, .stop_fs, .points                    -3 sigma_t, 6 sigma_t, 600
//   grid.energy.min_ev, .max_ev, .points                     -/+2.5 hbar w0, 801
//   grid.z.span_sigmas, grid.z.max_panel_width_nm            8, 0 (automatic)
//   grid.map.z_span_sigmas, grid.map.z_points, grid.map.time_points   4, 201, 41
//   quadrature.rel_tol, .abs_tol, .max_subdivisions,
//   quadrature.oscillation_panel_fraction, .tail_decay_threshold
//   outputs                     product list                 populations
//   sweep.axis, sweep.values    optional parameter sweep

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fecoh/eels.hpp"
#include "fecoh/emitter.hpp"
#include "fecoh/quadrature.hpp"
#include "fecoh/units.hpp"

namespace fecoh {

enum class Product { populations, coherences, spectrum, gamma_net, coupling_map };

std::string_view product_name(Product p);
/// Throws ValidationError for an unknown name.
Product parse_product(std::string_view name);
const std::vector<Product>& all_products();

/// Axes accepted by sweeps, mapped onto scenario keys.
const std::vector<std::string>& sweep_axes();

/// Parses a real number with an optional pi factor. Returns std::nullopt when
/// the text is not a number.
std::optional<double> parse_number(std::string_view text);

/// Shortest decimal text that reads back to exactly `x`.
std::string format_double(double x);

/// Uniform grid with optionally unset bounds and size (filled by resolve()).
struct GridOverrides {
  std::optional<double> start;
  std::optional<double> stop;
  std::optional<std::size_t> points;
  bool complete() const { return start && stop && points; }
};

struct CouplingMapSpec {
  double z_span_sigmas = 4.0;
  std::size_t z_points = 201;
  std::size_t time_points = 41;
};

struct Scenario {
  std::string name = "scenario";

  double kinetic_energy_kev = 0.0;
  std::optional<double> sigma_t_fs;
  std::optional<double> sigma_z_nm;
  double r_perp_nm = 0.0;

  double wavelength_nm = 0.0;
  double d_x_debye = 0.0;
  double d_y_debye = 0.0;
  double d_z_debye = 0.0;
  double a = 1.0;
  double b = 0.0;
  double phi_r = 0.0;

  GridOverrides time;    // fs
  GridOverrides energy;  // eV offset from the incident energy
  ZGridSpec z_grid;
  CouplingMapSpec map;
  QuadratureConfig quadrature;

  std::vector<Product> outputs{Product::populations};

  std::optional<std::string> sweep_axis;
  std::vector<double> sweep_values;

  /// Keys whose values were filled in by defaults during resolve().
  std::vector<std::string> defaults_applied;

  /// Applies a single key=value assignment with the file grammar. Throws
  /// ParseError (line/column as given) for unknown keys or malformed values.
  void set(std::string_view key, std::string_view value, std::size_t line = 0,
           std::size_t value_column = 0, std::size_t key_column = 0);

  /// Enforces every invariant. Throws ValidationError naming the field.
  void validate() const;

  /// Validates and fills sigma_t, the time grid and the energy grid with
  /// their defaults, recording which ones were applied.
  Scenario resolved() const;

  /// Requires a resolved scenario.
  BeamParams beam() const;
  EmitterParams emitter() const;
  std::vector<double> times() const;
  EnergyGrid energy_grid() const;

  /// Canonical key=value text of every field; loading it reproduces the
  /// scenario (and therefore the run) exactly.
  std::string to_text() const;
};

/// Parses scenario text. Throws ParseError with line and column.
Scenario parse_scenario(std::string_view text, std::string name = "scenario");

/// Reads a scenario file; the default name is the file stem.
Scenario load_scenario(const std::filesystem::path& path);

const std::vector<std::string>& builtin_names();
bool is_builtin(std::string_view name);
/// Throws ValidationError for an unknown name.
Scenario builtin_scenario(std::string_view name);

/// A builtin name or a path to a scenario file.
Scenario load_scenario_or_builtin(std::string_view spec);

/// Returns a copy with `axis` set to `value` (sigma_t replaces sigma_z).
Scenario with_axis_value(const Scenario& s, std::string_view axis, double value);

struct ManifestFile {
  std::string path;  // relative to the output directory
  std::string product;
  std::string tag;  // empty for single runs, "<axis>=<value>" in sweeps
  std::string sha256;
  std::uintmax_t bytes = 0;
  std::size_t rows = 0;
};

struct RunManifest {
  std::string scenario;
  std::string version;
  std::vector<ManifestFile> files;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::string json;  // text written to manifest.json
};

/// Failure inside a run: carries the stage and the original exception.
class RunError : public std::runtime_error {
 public:
  RunError(std::string stage, std::exception_ptr cause, const std::string& what)
      : std::runtime_error("stage '" + stage + "': " + what),
        stage_(std::move(stage)),
        cause_(std::move(cause)) {}
  const std::string& stage() const noexcept { return stage_; }
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  std::string stage_;
  std::exception_ptr cause_;
};

/// Runs every requested product into out_dir, then writes manifest.json.
/// A scenario with a sweep section is run as that sweep. On failure every
/// file written by this call is removed and RunError is thrown.
RunManifest run(const Scenario& scenario, const std::filesystem::path& out_dir);

/// Runs `scenario` once per value with files tagged "<product>__<axis>=<value>.csv"
/// and one shared manifest. Throws ValidationError for an unknown axis or an
/// empty value list.
RunManifest sweep(const Scenario& scenario, std::string_view axis,
                  const std::vector<double>& values, const std::filesystem::path& out_dir);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct SelftestLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Semi-analytic vs direct coupling on a 21x21 (z, t) grid for every distinct
/// builtin parameter set, plus the long-time limit of the semi-analytic form.
std::vector<SelftestLine> selftest();

}  // namespace fecoh
