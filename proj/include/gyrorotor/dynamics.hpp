#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "gyrorotor/angular.hpp"
#include "gyrorotor/basis.hpp"
#include "gyrorotor/constants.hpp"
#include "gyrorotor/errors.hpp"
#include "gyrorotor/rotation.hpp"

// Units: times in seconds, frequencies quoted as cyclic frequencies (Hz).
// Hamiltonians are angular frequencies (rad/s) with hbar = 1.

namespace gyrorotor {

struct MoleculeParams {
  std::string name;
  double b_rot_hz = 0.0;        // rotational constant B
  double delta_alpha_a3 = 0.0;  // polarizability anisotropy, angstrom^3
  double g_r = 0.0;             // rotational g factor (signed)

  void validate() const {
    if (!(b_rot_hz > 0.0)) throw InvalidArgument("MoleculeParams: B_rot must be > 0");
  }

  static MoleculeParams no2_plus() { return {"NO2+", 12.5e9, 2.16, -0.0367}; }
};

struct MagneticField {
  double magnitude_tesla = 0.0;
  Vector3 axis = Vector3::UnitY();

  void validate() const {
    if (magnitude_tesla < 0.0) throw InvalidArgument("MagneticField: magnitude must be >= 0");
    if (std::abs(axis.norm() - 1.0) > 1e-12)
      throw InvalidArgument("MagneticField: axis must be a unit vector");
  }

  bool along_y() const { return (axis - Vector3::UnitY()).norm() < 1e-12; }
};

struct Envelope {
  enum class Shape { rectangular, sin2_ramp };
  Shape shape = Shape::rectangular;
  double ramp_fraction = 0.1;  // fraction of the duration spent on each ramp

  /// Field amplitude factor f(t) for 0 <= t <= duration.
  double amplitude(double t, double duration) const {
    if (t < 0.0 || t > duration) return 0.0;
    if (shape == Shape::rectangular) return 1.0;
    const double ramp = ramp_fraction * duration;
    if (ramp <= 0.0) return 1.0;
    const double edge = std::min(t, duration - t);
    if (edge >= ramp) return 1.0;
    const double s = std::sin(0.5 * pi * edge / ramp);
    return s * s;
  }
};

struct PulseParams {
  double intensity_w_cm2 = 0.0;
  double omega0_hz = 0.0;  // frequency difference of the two beams
  double phi = 0.0;        // initial polarization angle in the x-y plane
  double duration_s = 0.0;
  Envelope envelope;

  void validate() const {
    if (intensity_w_cm2 < 0.0) throw InvalidArgument("PulseParams: intensity must be >= 0");
    if (!(duration_s > 0.0)) throw InvalidArgument("PulseParams: duration must be > 0");
  }

  /// Polarization angle in the x-y plane; rotates at half the beat frequency.
  double polarization_angle(double t) const { return pi * omega0_hz * t + phi; }
};

inline Operator free_hamiltonian(const MoleculeParams& mol, const RotorBasis& basis) {
  const Operator j2 = op_angular(AngularKind::J2, basis);
  return Operator(basis, two_pi * mol.b_rot_hz * j2.matrix(), {.hermitian = true});
}

/// exp(-i H_0 t) with H_0 = B J^2: a phase per shell. Negative t runs the
/// free rotation backwards (used to move into the rotor frame).
inline RotorState free_propagate(const RotorState& state, const MoleculeParams& mol, double t) {
  const RotorBasis& b = state.basis();
  ComplexVector c = state.amplitudes();
  for (int J = 0; J <= b.j_max(); ++J) {
    // reduce the phase in cycles before scaling to keep precision at long t
    const double cycles = std::fmod(mol.b_rot_hz * double(J) * (J + 1) * t, 1.0);
    const complex phase = std::polar(1.0, -two_pi * cycles);
    for (int M = -J; M <= J; ++M) c(static_cast<Eigen::Index>(b.index(J, M))) *= phase;
  }
  return RotorState(b, std::move(c));
}

/// Signed precession frequency omega_p = (mu_N/h) g_r |B| in Hz.
inline double precession_frequency(const MoleculeParams& mol, const MagneticField& field) {
  return PhysicalConstants::nuclear_magneton_mhz_per_tesla * 1e6 * mol.g_r *
         field.magnitude_tesla;
}

/// H = 2 pi (B J^2 - omega_p  b.J) for a field along unit vector b.
inline Operator magnetic_hamiltonian(const MoleculeParams& mol, const MagneticField& field,
                                     const RotorBasis& basis) {
  const double wp = precession_frequency(mol, field);
  ComplexMatrix h = free_hamiltonian(mol, basis).matrix();
  const AngularKind kinds[3] = {AngularKind::Jx, AngularKind::Jy, AngularKind::Jz};
  for (int a = 0; a < 3; ++a) {
    if (field.axis(a) == 0.0) continue;
    h -= (two_pi * wp * field.axis(a)) * op_angular(kinds[a], basis).matrix();
  }
  h = 0.5 * (h + h.adjoint()).eval();
  return Operator(basis, std::move(h), {.hermitian = true});
}

/// Rigid rotation accumulated by the precession after time t: angle
/// -2 pi omega_p t about the field axis, so g_r < 0 turns right-handed about B.
inline Rotation precession_rotation(const MoleculeParams& mol, const MagneticField& field,
                                    double t) {
  const double turns = std::fmod(precession_frequency(mol, field) * t, 1.0);
  return Rotation::axis_angle(field.axis, -two_pi * turns);
}

/// Closed-form evolution under B J^2 - mu_N g_r |B| J_y. The two terms commute,
/// so exp(-iHt) = exp(-i B J^2 t) exp(+i 2 pi omega_p t J_y).
inline RotorState magnetic_propagate_closed(const RotorState& state, const MoleculeParams& mol,
                                            const MagneticField& field, double t) {
  if (!field.along_y()) {
    throw InvalidArgument(
        "magnetic_propagate_closed: only defined for a field along y; use generic_propagate "
        "with magnetic_hamiltonian for other axes");
  }
  if (t < 0.0) throw InvalidArgument("magnetic_propagate_closed: t must be >= 0");
  const Operator rot = wigner_rotation(precession_rotation(mol, field, t), state.basis());
  return free_propagate(rot.apply(state), mol, t);
}

/// kappa = (1/4) delta_alpha E0^2 / h in Hz, with E0^2 = 2 I / (c eps0).
inline double raman_coupling_hz(const MoleculeParams& mol, double intensity_w_cm2) {
  using C = PhysicalConstants;
  const double e0_sq = 2.0 * intensity_w_cm2 * 1e4 / (C::speed_of_light * C::vacuum_permittivity);
  const double alpha_si = mol.delta_alpha_a3 * C::polarizability_volume_to_si;
  return 0.25 * alpha_si * e0_sq / C::planck;
}

/// Pulse Hamiltonians with the angular tensors precomputed for one basis.
class RamanModel {
 public:
  RamanModel(MoleculeParams mol, PulseParams pulse, const RotorBasis& basis)
      : mol_(std::move(mol)),
        pulse_(pulse),
        basis_(basis),
        ops_(basis),
        h0_(free_hamiltonian(mol_, basis).matrix()),
        jz_(op_angular(AngularKind::Jz, basis).matrix()),
        kappa_(raman_coupling_hz(mol_, pulse.intensity_w_cm2)) {}

  /// Lab frame (carrier cycle-averaged):
  /// H(t) = 2 pi [B J^2 - kappa f(t)^2 (p(t).n)^2], p(t) the rotating polarization.
  Operator lab(double t) const {
    const double a = pulse_.polarization_angle(t);
    const double f = pulse_.envelope.amplitude(t, pulse_.duration_s);
    ComplexMatrix h = h0_;
    if (kappa_ * f != 0.0) {
      h -= (two_pi * kappa_ * f * f) *
           ops_.projected_square(Vector3(std::cos(a), std::sin(a), 0.0));
    }
    h = 0.5 * (h + h.adjoint()).eval();
    return Operator(basis_, std::move(h), {.hermitian = true});
  }

  /// Frame co-rotating with the polarization, psi_rot = exp(+i a(t) J_z) psi_lab.
  /// Time dependent only through the envelope.
  Operator rotating(double t) const {
    const double f = pulse_.envelope.amplitude(t, pulse_.duration_s);
    ComplexMatrix h = h0_ - (two_pi * kappa_ * f * f) * ops_.xx().matrix() -
                      (pi * pulse_.omega0_hz) * jz_;
    h = 0.5 * (h + h.adjoint()).eval();
    return Operator(basis_, std::move(h), {.hermitian = true});
  }

  const PulseParams& pulse() const noexcept { return pulse_; }

 private:
  MoleculeParams mol_;
  PulseParams pulse_;
  RotorBasis basis_;
  SymmetricTensorOps ops_;
  ComplexMatrix h0_;
  ComplexMatrix jz_;
  double kappa_;
};

/// Lab-frame pulse Hamiltonian at time t. Builds the tensors on every call;
/// use RamanModel inside integration loops.
inline Operator raman_hamiltonian(double t, const MoleculeParams& mol, const PulseParams& pulse,
                                  const RotorBasis& basis) {
  return RamanModel(mol, pulse, basis).lab(t);
}

/// Raman Rabi frequency in the form (1/4) delta_alpha E0^2 <J+2,J|cos^2|J,J> / h.
/// Reproduces the 1 MHz NO2+ design point; see raman_two_level() for the
/// coupling that actually drives |J,J> -> |J+2,J+2>.
inline double rabi_frequency(const MoleculeParams& mol, const PulseParams& pulse, int J) {
  if (J < 0) throw InvalidArgument("rabi_frequency: J must be >= 0");
  const RotorBasis basis(J + 2);
  const SymmetricTensorOps ops(basis);
  const double elem = ops.zz().element(J + 2, J, J, J).real();
  return raman_coupling_hz(mol, pulse.intensity_w_cm2) * elem;
}

/// Effective two-level description of |J,J> <-> |J+2,J+2> under the rotating
/// polarization, from the exact matrix elements of (p.n)^2.
struct RamanTwoLevel {
  double rabi_hz = 0.0;         // population oscillates as sin^2(pi rabi t)
  double light_shift_hz = 0.0;  // differential AC Stark shift, excited minus ground
  double resonance_omega0_hz = 0.0;

  /// Detuning of the excited level in the rotating frame for a given beat
  /// frequency; zero at resonance_omega0_hz.
  double detuning_hz(double omega0_hz) const { return resonance_omega0_hz - omega0_hz; }
};

inline RamanTwoLevel raman_two_level(const MoleculeParams& mol, double intensity_w_cm2, int J) {
  if (J < 0) throw InvalidArgument("raman_two_level: J must be >= 0");
  const RotorBasis basis(J + 2);
  const SymmetricTensorOps ops(basis);
  const Operator nxx = ops.xx();
  const double kappa = raman_coupling_hz(mol, intensity_w_cm2);
  const double off = std::abs(nxx.element(J + 2, J + 2, J, J));
  const double shift_g = -kappa * nxx.element(J, J, J, J).real();
  const double shift_e = -kappa * nxx.element(J + 2, J + 2, J + 2, J + 2).real();
  RamanTwoLevel out;
  out.rabi_hz = 2.0 * kappa * off;
  out.light_shift_hz = shift_e - shift_g;
  out.resonance_omega0_hz = mol.b_rot_hz * (4.0 * J + 6.0) + out.light_shift_hz;
  return out;
}

/// Step guidance for lab-frame integration: resolves the polarization
/// rotation and the fastest retained rotational phase.
inline double default_time_step(const MoleculeParams& mol, const PulseParams& pulse,
                                const RotorBasis& basis) {
  const double jm = basis.j_max();
  const double fastest = std::max(pulse.omega0_hz, mol.b_rot_hz * jm * (jm + 1.0));
  return 1.0 / (200.0 * fastest);
}

/// exp(-i H dt) for Hermitian H.
inline ComplexMatrix hermitian_exponential(const ComplexMatrix& h, double dt) {
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const ComplexVector phases =
      es.eigenvalues().unaryExpr([dt](double e) { return std::polar(1.0, -e * dt); });
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

struct Evolution {
  RotorState state;
  double edge_population = 0.0;  // maximum seen in the top two J shells
  std::size_t steps = 0;

  bool truncation_warning() const { return edge_population > truncation_warning_threshold; }
};

using HamiltonianFn = std::function<Operator(double)>;

/// Unitary stepping with the exponential of the midpoint Hamiltonian.
/// Second order in dt; the step is shrunk so that it divides [t0, t1].
inline Evolution generic_propagate(const RotorState& state, const HamiltonianFn& hamiltonian,
                                   double t0, double t1, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("generic_propagate: dt must be > 0");
  if (t1 < t0) throw InvalidArgument("generic_propagate: t1 < t0");
  const double span = t1 - t0;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / dt - 1e-9)));
  const double h = span / static_cast<double>(steps);
  ComplexVector c = state.amplitudes();
  double edge = state.edge_population();
  if (span > 0.0) {
    for (std::size_t k = 0; k < steps; ++k) {
      const double tm = t0 + (static_cast<double>(k) + 0.5) * h;
      const Operator op = hamiltonian(tm);
      if (!(op.basis() == state.basis()))
        throw InvalidArgument("generic_propagate: Hamiltonian basis mismatch");
      const double scale = std::max(1.0, op.matrix().cwiseAbs().maxCoeff());
      if (op.hermiticity_error() > 1e-12 * scale) {
        throw InvalidArgument("generic_propagate: Hamiltonian sample at t=" +
                              std::to_string(tm) + " is not Hermitian");
      }
      c = hermitian_exponential(op.matrix(), h) * c;
      edge = std::max(edge, RotorState(state.basis(), c).edge_population());
    }
  }
  return {RotorState(state.basis(), std::move(c)), edge, span > 0.0 ? steps : 0};
}

/// Propagates through the whole pulse in the co-rotating frame and maps back
/// to the lab frame. A rectangular envelope is a single exact step.
inline Evolution raman_propagate(const RotorState& state, const MoleculeParams& mol,
                                 const PulseParams& pulse, double dt = 0.0) {
  pulse.validate();
  const RotorBasis& basis = state.basis();
  if (dt <= 0.0) {
    dt = pulse.envelope.shape == Envelope::Shape::rectangular ? pulse.duration_s
                                                              : pulse.duration_s / 4000.0;
  }
  const RotorState start = rotate_about_z(state, -pulse.polarization_angle(0.0));
  const RamanModel model(mol, pulse, basis);
  Evolution ev = generic_propagate(
      start, [&](double t) { return model.rotating(t); }, 0.0, pulse.duration_s, dt);
  // the polarization angle at the end can be ~1e5 rad; reduce before rotating
  const double a_end = std::remainder(pulse.polarization_angle(pulse.duration_s), two_pi);
  ev.state = rotate_about_z(ev.state, a_end);
  return ev;
}

/// Two-level amplitudes (ground, excited).
struct TwoLevelAmplitudes {
  complex ground;
  complex excited;

  double excited_population() const { return std::norm(excited); }
  double ground_population() const { return std::norm(ground); }
};

/// Exact solution of H = 2 pi [[-delta/2, rabi/2], [rabi/2, delta/2]].
/// On resonance the excited population from the ground state is sin^2(pi rabi t).
inline TwoLevelAmplitudes rwa_evolution(TwoLevelAmplitudes initial, double rabi_hz,
                                        double detuning_hz, double t) {
  const double w = std::hypot(rabi_hz, detuning_hz);
  if (w == 0.0) return initial;
  const double c = std::cos(pi * w * t);
  const double s = std::sin(pi * w * t);
  const complex i(0.0, 1.0);
  const double nx = rabi_hz / w;
  const double nz = -detuning_hz / w;
  // exp(-i theta n.sigma) = cos - i sin n.sigma, with sigma_z diag(1, -1)
  const complex u00 = c - i * s * nz;
  const complex u11 = c + i * s * nz;
  const complex u01 = -i * s * nx;
  return {u00 * initial.ground + u01 * initial.excited,
          u01 * initial.ground + u11 * initial.excited};
}

}  // namespace gyrorotor
