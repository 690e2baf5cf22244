#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gyrorotor/basis.hpp"
#include "gyrorotor/dynamics.hpp"

namespace gyrorotor {

/// w |J,J> + sqrt(1 - w^2) e^{-i n phi} |J+n,J+n>. Only n = 2 can be reached
/// by a Raman pulse; other n are for dynamics studies.
struct CogwheelSpec {
  int J = 0;
  int n = 2;
  double phi = 0.0;
  double weight = 1.0 / std::sqrt(2.0);

  void validate(const RotorBasis& basis) const {
    if (J < 0) throw InvalidArgument("CogwheelSpec: J must be >= 0");
    if (n < 1) throw InvalidArgument("CogwheelSpec: n must be >= 1");
    if (weight < 0.0 || weight > 1.0)
      throw InvalidArgument("CogwheelSpec: weight must lie in [0, 1]");
    if (J + n > basis.j_max()) {
      throw InvalidArgument("CogwheelSpec: J+n = " + std::to_string(J + n) +
                            " exceeds basis j_max = " + std::to_string(basis.j_max()));
    }
  }
};

inline RotorState cogwheel_state(const CogwheelSpec& spec, const RotorBasis& basis) {
  spec.validate(basis);
  ComplexVector c = ComplexVector::Zero(static_cast<Eigen::Index>(basis.dim()));
  const double w2 = std::sqrt(std::max(0.0, 1.0 - spec.weight * spec.weight));
  c(static_cast<Eigen::Index>(basis.index(spec.J, spec.J))) = spec.weight;
  c(static_cast<Eigen::Index>(basis.index(spec.J + spec.n, spec.J + spec.n))) =
      w2 * std::polar(1.0, -spec.n * spec.phi);
  return RotorState(basis, std::move(c));
}

/// Quarter-Rabi-cycle pulse for |J,J> -> equal superposition with |J+2,J+2>.
/// The beat frequency includes the differential light shift so the pulse is
/// resonant at the chosen intensity, and the duration comes from the
/// effective coupling of the rotating polarization.
inline PulseParams design_pulse(const MoleculeParams& mol, int J, double intensity_w_cm2,
                                double phi = 0.0) {
  mol.validate();
  if (!(intensity_w_cm2 > 0.0)) throw InvalidArgument("design_pulse: intensity must be > 0");
  const RamanTwoLevel tl = raman_two_level(mol, intensity_w_cm2, J);
  PulseParams p;
  p.intensity_w_cm2 = intensity_w_cm2;
  p.omega0_hz = tl.resonance_omega0_hz;
  p.phi = phi;
  p.duration_s = 1.0 / (4.0 * tl.rabi_hz);
  return p;
}

struct PreparationResult {
  RotorState state;
  double fidelity = 0.0;        // against the equal-weight n = 2 cogwheel
  double azimuth = 0.0;         // phi of the best-matching cogwheel, in [0, pi)
  double azimuth_offset = 0.0;  // azimuth minus pulse phi, in [0, pi)
  double leakage = 0.0;         // population outside {|J,J>, |J+2,J+2>}
  double excited_population = 0.0;
  double edge_population = 0.0;
  std::vector<std::string> warnings;
};

/// Fidelity with w|J,J> + v e^{-2i phi}|J+2,J+2>, maximized over phi
/// (a global azimuthal offset). Returns (fidelity, best phi in [0, pi)).
inline std::pair<double, double> cogwheel_fidelity(const RotorState& s, int J,
                                                    double weight = 1.0 / std::sqrt(2.0)) {
  const complex c0 = s.amplitude(J, J);
  const complex c2 = s.amplitude(J + 2, J + 2);
  const double v = std::sqrt(std::max(0.0, 1.0 - weight * weight));
  const double amp = weight * std::abs(c0) + v * std::abs(c2);
  double phi = 0.0;
  if (std::abs(c0) > 0.0 && std::abs(c2) > 0.0) {
    phi = 0.5 * (std::arg(c0) - std::arg(c2));
    phi = std::fmod(phi, pi);
    if (phi < 0.0) phi += pi;
  }
  return {amp * amp, phi};
}

/// Simulates the Raman pulse acting on |J,J>.
inline PreparationResult prepare_via_raman(const RotorState& initial, const MoleculeParams& mol,
                                           const PulseParams& pulse, int J, double dt = 0.0) {
  mol.validate();
  pulse.validate();
  const RotorBasis& basis = initial.basis();
  if (J + 2 > basis.j_max())
    throw InvalidArgument("prepare_via_raman: basis too small for |J+2,J+2>");
  if (std::abs(initial.population(J, J) - 1.0) > 1e-9)
    throw InvalidArgument("prepare_via_raman: initial state must be |J,J>");

  const Evolution ev = raman_propagate(initial, mol, pulse, dt);
  PreparationResult out{ev.state};
  const auto [fid, phi] = cogwheel_fidelity(ev.state, J);
  out.fidelity = fid;
  out.azimuth = phi;
  out.azimuth_offset = std::fmod(std::fmod(phi - pulse.phi, pi) + pi, pi);
  out.excited_population = ev.state.population(J + 2, J + 2);
  out.leakage = std::max(0.0, 1.0 - ev.state.population(J, J) - out.excited_population);
  out.edge_population = ev.edge_population;

  if (pulse.intensity_w_cm2 > 0.0) {
    const RamanTwoLevel tl = raman_two_level(mol, pulse.intensity_w_cm2, J);
    const double mismatch = std::abs(pulse.omega0_hz - mol.b_rot_hz * (4.0 * J + 6.0));
    if (mismatch > 10.0 * tl.rabi_hz) {
      out.warnings.push_back("pulse beat frequency is off the J=" + std::to_string(J) +
                             " resonance by more than 10 Rabi frequencies");
    }
  }
  if (ev.truncation_warning()) {
    out.warnings.push_back("population in the top two J shells exceeds 1e-8; raise j_max");
  }
  return out;
}

}  // namespace gyrorotor
