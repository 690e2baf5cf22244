// gyrorotor: prepare a cogwheel state, scan the pump-probe delay, extract the
// precession frequency and g-factor, and dump angular densities.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gyrorotor/gyrorotor.hpp"

namespace fs = std::filesystem;
using namespace gyrorotor;

namespace {

enum ExitCode { ok = 0, io_error = 1, config_error = 2, strict_warning = 3, estimation_failed = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out;
  bool strict = false;
};

RunConfig load(const Common& c) {
  // no config: NO2+ preset and built-in defaults
  if (c.config.empty()) return RunConfig{};
  return load_config(c.config);
}

fs::path out_dir(const Common& c, const RunConfig& cfg) {
  const fs::path dir = c.out.empty() ? fs::path(cfg.output_directory) : fs::path(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot write '" + p.string() + "'");
  return os;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot read '" + p.string() + "'");
  return is;
}

int finish(const std::vector<std::string>& warnings, bool strict) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return (strict && !warnings.empty()) ? strict_warning : ok;
}

int run_prepare(const Common& c, bool analytic) {
  const RunConfig cfg = load(c);
  const fs::path dir = out_dir(c, cfg);
  const PreparedRun run = prepare_from_config(cfg, analytic);
  {
    auto os = open_out(dir / "state.txt");
    write_state(os, run.result.state);
  }
  {
    auto os = open_out(dir / "prepare_report.txt");
    write_key_values(os, preparation_report(run));
  }
  std::cout << "rabi_MHz = " << fmt9(run.rabi_formula_hz * 1e-6)
            << "\nduration_ns = " << fmt9(run.pulse.duration_s * 1e9)
            << "\nfidelity = " << fmt9(run.result.fidelity)
            << "\nleakage = " << fmt9(run.result.leakage) << '\n';
  return finish(run.result.warnings, c.strict);
}

int run_scan(const Common& c, std::string state_path, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load(c);
  if (seed) cfg.scan.seed = *seed;
  const fs::path dir = out_dir(c, cfg);
  if (state_path.empty()) state_path = (dir / "state.txt").string();
  auto is = open_in(state_path);
  const RotorState raw = read_state(is, cfg.state.j_max);
  std::vector<std::string> warnings;
  if (std::abs(raw.norm() - 1.0) > 1e-6)
    warnings.push_back("state norm " + fmt9(raw.norm()) + " differs from 1; renormalized");
  const RotorState state = raw.normalized();
  if (state.edge_population() > truncation_warning_threshold)
    warnings.push_back("population in the top two J shells exceeds 1e-8; raise j_max");
  const ScanSeries series = scan_from_config(cfg, state);
  auto os = open_out(dir / "scan.txt");
  write_scan(os, series);
  std::cout << "wrote " << series.points.size() << " delays to " << (dir / "scan.txt").string()
            << '\n';
  return finish(warnings, c.strict);
}

int run_extract(const Common& c, std::string scan_path, const std::string& model_name) {
  const RunConfig cfg = load(c);
  const fs::path dir = out_dir(c, cfg);
  if (scan_path.empty()) scan_path = (dir / "scan.txt").string();
  auto is = open_in(scan_path);
  const ScanSeries series = read_scan(is, cfg.scan.shots);
  PrecessionModel model = default_model(series);
  if (model_name == "jvec") model = PrecessionModel::jvec;
  if (model_name == "detector") model = PrecessionModel::detector;
  const PrecessionEstimate p = extract_precession(series, model, cfg.field.axis);
  const GFactorEstimate g = estimate_g_factor(p, cfg.field);
  auto os = open_out(dir / "estimate.txt");
  write_key_values(os, estimate_document(g, model));
  std::cout << "omega_p_MHz = " << fmt9(g.omega_p_mhz) << "\ng_r_abs = " << fmt9(g.g_r_abs)
            << "\nsense = " << g.sense << "\nmodel = " << to_string(model) << '\n';
  return ok;
}

int run_density(const Common& c, std::string state_path, double time_us,
                const std::string& evolve, std::string frame) {
  const RunConfig cfg = load(c);
  const fs::path dir = out_dir(c, cfg);
  if (state_path.empty()) state_path = (dir / "state.txt").string();
  auto is = open_in(state_path);
  RotorState s = read_state(is).normalized();
  const double t = time_us * 1e-6;
  if (frame.empty()) frame = evolve == "magnetic" ? "rotor" : "lab";
  if (evolve == "free") {
    s = free_propagate(s, cfg.molecule, t);
  } else if (evolve == "magnetic") {
    if (cfg.field.along_y()) {
      s = magnetic_propagate_closed(s, cfg.molecule, cfg.field, t);
    } else if (t != 0.0) {
      const Operator h = magnetic_hamiltonian(cfg.molecule, cfg.field, s.basis());
      s = generic_propagate(s, [&](double) { return h; }, 0.0, t, t).state;
    }
  }
  // rotor frame: remove the free-rotation phases accumulated over t
  if (frame == "rotor" && evolve != "none") s = free_propagate(s, cfg.molecule, -t);
  auto os = open_out(dir / "density.txt");
  write_density(os, angular_density(s));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cogwheel rotor simulator: preparation, pump-probe scan, g-factor extraction"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "INI configuration file");
    sub->add_option("--out", common.out, "output directory (overrides output.directory)");
    sub->add_flag("--strict", common.strict, "exit 3 when a physics warning is raised");
  };

  bool analytic = false;
  auto* prepare = app.add_subcommand("prepare", "prepare |J,J> + |J+2,J+2> by a Raman pulse");
  add_common(prepare);
  prepare->add_flag("--analytic", analytic, "write the ideal superposition, skip propagation");

  std::string state_path;
  std::optional<std::uint64_t> seed;
  auto* scan = app.add_subcommand("scan", "pump-probe delay scan under the magnetic field");
  add_common(scan);
  scan->add_option("--state", state_path, "state file (default <out>/state.txt)");
  scan->add_option("--seed", seed, "RNG seed (overrides scan.seed)");

  std::string scan_path, model;
  auto* extract = app.add_subcommand("extract", "fit the precession frequency and g-factor");
  add_common(extract);
  extract->add_option("--scan", scan_path, "scan table (default <out>/scan.txt)");
  extract->add_option("--model", model, "jvec or detector (default: jvec if present)")
      ->check(CLI::IsMember({"jvec", "detector"}));

  double time_us = 0.0;
  std::string evolve = "none", frame;
  auto* density = app.add_subcommand("density", "dump the angular density of a state");
  add_common(density);
  density->add_option("--state", state_path, "state file (default <out>/state.txt)");
  density->add_option("--time-us", time_us, "evolution time in microseconds");
  density->add_option("--evolve", evolve, "none, free or magnetic")
      ->check(CLI::IsMember({"none", "free", "magnetic"}));
  density->add_option("--frame", frame, "lab or rotor (default: rotor for magnetic, else lab)")
      ->check(CLI::IsMember({"lab", "rotor"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }

  try {
    if (*prepare) return run_prepare(common, analytic);
    if (*scan) return run_scan(common, state_path, seed);
    if (*extract) return run_extract(common, scan_path, model);
    if (*density) return run_density(common, state_path, time_us, evolve, frame);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const EstimationFailed& e) {
    std::cerr << "estimation failed: " << e.what() << "\n  " << e.diagnostics() << '\n';
    return estimation_failed;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return io_error;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return config_error;
  }
  return ok;
}
