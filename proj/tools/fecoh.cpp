// Command-line front end: run scenarios and sweeps, list builtins, self-test.
//
// Exit codes: 0 success, 1 parse or validation error, 2 numerical failure
// (convergence or resolution), 3 anything else (I/O and the like).

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fecoh/errors.hpp"
#include "fecoh/scenario.hpp"

namespace {

int exit_code_for(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const fecoh::RunError& e) {
    return e.cause() ? exit_code_for(e.cause()) : 3;
  } catch (const fecoh::ParseError&) {
    return 1;
  } catch (const fecoh::ValidationError&) {
    return 1;
  } catch (const fecoh::DomainError&) {
    return 1;
  } catch (const fecoh::ConvergenceError&) {
    return 2;
  } catch (const fecoh::ResolutionError&) {
    return 2;
  } catch (...) {
    return 3;
  }
}

int report(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    std::cerr << "fecoh: error: " << e.what() << '\n';
  } catch (...) {
    std::cerr << "fecoh: unknown error\n";
  }
  return exit_code_for(error);
}

void apply_sets(fecoh::Scenario& s, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw fecoh::ParseError(0, 0, "--set expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    s.set(key, kv.substr(eq + 1), 0, eq + 2, 1);
  }
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  if (csv.find_first_not_of(" \t") == std::string::npos) return out;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    const auto item = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto v = fecoh::parse_number(item);
    if (!v) throw fecoh::ValidationError("--values", "not a number: '" + item + "'");
    out.push_back(*v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void print_manifest_summary(const fecoh::RunManifest& m, const std::string& out) {
  std::cout << "wrote " << m.files.size() << " files and manifest.json to " << out << '\n';
  for (const auto& f : m.files) std::cout << "  " << f.path << "  " << f.sha256 << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electron-driven two-level emitter dynamics and time-resolved EELS"};
  app.set_version_flag("--version", std::string(FECOH_VERSION));
  app.require_subcommand(1);

  std::string run_spec, run_out, run_products;
  std::vector<std::string> run_sets;
  auto* run = app.add_subcommand("run", "Run a scenario file or builtin");
  run->add_option("scenario", run_spec, "Scenario file or builtin name")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--products", run_products, "Comma-separated products (overrides 'outputs')");
  run->add_option("--set", run_sets, "Override a scenario key: key=value (repeatable)");

  std::string sw_spec, sw_axis, sw_values, sw_out;
  std::vector<std::string> sw_sets;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter of a scenario");
  sweep->add_option("scenario", sw_spec, "Scenario file or builtin name")->required();
  sweep->add_option("--axis", sw_axis,
                    "kinetic_energy | phi_r | r_perp | wavelength | sigma_t")
      ->required();
  sweep->add_option("--values", sw_values, "Comma-separated values (pi allowed)")->required();
  sweep->add_option("--out", sw_out, "Output directory")->required();
  sweep->add_option("--set", sw_sets, "Override a scenario key: key=value (repeatable)");

  app.add_subcommand("list-builtins", "List builtin scenarios");
  app.add_subcommand("selftest", "Check the coupling evaluators against each other");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("list-builtins")) {
      for (const auto& name : fecoh::builtin_names()) {
        const auto s = fecoh::builtin_scenario(name);
        std::cout << name << "  " << fecoh::format_double(s.kinetic_energy_kev) << " keV, r="
                  << fecoh::format_double(s.r_perp_nm) << " nm, "
                  << fecoh::format_double(s.wavelength_nm) << " nm";
        if (s.sweep_axis) std::cout << ", sweep " << *s.sweep_axis;
        std::cout << '\n';
      }
      return 0;
    }
    if (app.got_subcommand("selftest")) {
      bool ok = true;
      for (const auto& line : fecoh::selftest()) {
        std::cout << (line.pass ? "PASS " : "FAIL ") << line.name << ": " << line.detail << '\n';
        ok = ok && line.pass;
      }
      return ok ? 0 : 2;
    }
    if (app.got_subcommand("run")) {
      auto s = fecoh::load_scenario_or_builtin(run_spec);
      apply_sets(s, run_sets);
      if (!run_products.empty()) s.set("outputs", run_products, 0, 0);
      const auto m = fecoh::run(s, run_out);
      print_manifest_summary(m, run_out);
      return 0;
    }
    auto s = fecoh::load_scenario_or_builtin(sw_spec);
    apply_sets(s, sw_sets);
    s.sweep_axis.reset();
    s.sweep_values.clear();
    const auto m = fecoh::sweep(s, sw_axis, parse_values(sw_values), sw_out);
    print_manifest_summary(m, sw_out);
    return 0;
  } catch (...) {
    return report(std::current_exception());
  }
}
