#pragma once

#include <string>
#include <vector>

#include "gyrorotor/config.hpp"
#include "gyrorotor/dynamics.hpp"
#include "gyrorotor/explosion.hpp"
#include "gyrorotor/io.hpp"
#include "gyrorotor/preparation.hpp"

// Glue between a RunConfig and the library: what each CLI subcommand does,
// minus the file handling.

namespace gyrorotor {

struct PreparedRun {
  PulseParams pulse;
  RamanTwoLevel two_level;
  double rabi_formula_hz = 0.0;  // (1/4) delta_alpha E0^2 <J+2,J|cos^2|J,J> / h
  bool analytic = false;
  PreparationResult result;
};

/// Pulse from the config: quarter-Rabi-cycle design, then the optional
/// detuning and duration overrides. A sin^2 ramp is lengthened so the pulse
/// area (integral of the intensity) matches the rectangular design.
inline PulseParams pulse_from_config(const RunConfig& cfg) {
  PulseParams p = design_pulse(cfg.molecule, cfg.state.initial_J, cfg.laser.intensity_w_cm2,
                               cfg.laser.phi_rad);
  p.envelope = cfg.laser.envelope;
  if (p.envelope.shape == Envelope::Shape::sin2_ramp)
    p.duration_s /= 1.0 - 1.25 * p.envelope.ramp_fraction;
  p.omega0_hz += cfg.laser.detuning_mhz * 1e6;
  if (cfg.laser.duration_ns) p.duration_s = *cfg.laser.duration_ns * 1e-9;
  return p;
}

inline PreparedRun prepare_from_config(const RunConfig& cfg, bool analytic) {
  const int J = cfg.state.initial_J;
  const RotorBasis basis(cfg.state.j_max);
  const PulseParams pulse = pulse_from_config(cfg);
  auto result = [&] {
    if (!analytic)
      return prepare_via_raman(RotorState::eigenstate(basis, J, J), cfg.molecule, pulse, J);
    PreparationResult r{cogwheel_state({J, 2, cfg.laser.phi_rad}, basis)};
    r.fidelity = 1.0;
    r.azimuth = std::fmod(std::fmod(cfg.laser.phi_rad, pi) + pi, pi);
    r.excited_population = r.state.population(J + 2, J + 2);
    r.edge_population = r.state.edge_population();
    return r;
  };
  return PreparedRun{pulse, raman_two_level(cfg.molecule, cfg.laser.intensity_w_cm2, J),
                     rabi_frequency(cfg.molecule, pulse, J), analytic, result()};
}

inline KeyValues preparation_report(const PreparedRun& r) {
  KeyValues kv{
      {"mode", r.analytic ? "analytic" : "propagated"},
      {"rabi_MHz", fmt9(r.rabi_formula_hz * 1e-6)},
      {"rabi_effective_MHz", fmt9(r.two_level.rabi_hz * 1e-6)},
      {"light_shift_MHz", fmt9(r.two_level.light_shift_hz * 1e-6)},
      {"omega0_GHz", fmt9(r.pulse.omega0_hz * 1e-9)},
      {"duration_ns", fmt9(r.pulse.duration_s * 1e9)},
      {"fidelity", fmt9(r.result.fidelity)},
      {"leakage", fmt9(r.result.leakage)},
      {"excited_population", fmt9(r.result.excited_population)},
      {"azimuth_rad", fmt9(r.result.azimuth)},
      {"azimuth_offset_rad", fmt9(r.result.azimuth_offset)},
      {"edge_population", fmt9(r.result.edge_population)},
  };
  for (const auto& w : r.result.warnings) kv.emplace_back("warning", w);
  return kv;
}

inline ScanSeries scan_from_config(const RunConfig& cfg, const RotorState& state) {
  return pump_probe_scan(state, cfg.molecule, cfg.field, cfg.scan_config(), cfg.detectors());
}

/// Model used by extract when none is requested: jvec if the table carries
/// a varying <J>, otherwise the detector counts.
inline PrecessionModel default_model(const ScanSeries& s) {
  return scan_has_jvec(s) ? PrecessionModel::jvec : PrecessionModel::detector;
}

}  // namespace gyrorotor
