#pragma once

#include <numbers>

namespace gyrorotor {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018 values, SI units.
struct PhysicalConstants {
  static constexpr double planck = 6.62607015e-34;          // J s
  static constexpr double hbar = planck / two_pi;           // J s
  static constexpr double nuclear_magneton = 5.0507837461e-27;  // J/T
  static constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
  static constexpr double speed_of_light = 299792458.0;     // m/s

  // mu_N / h in MHz per tesla (7.6225932...).
  static constexpr double nuclear_magneton_mhz_per_tesla =
      nuclear_magneton / planck * 1e-6;

  // Polarizability volume (angstrom^3) to SI polarizability (C m^2 / V).
  static constexpr double polarizability_volume_to_si =
      4.0 * std::numbers::pi * vacuum_permittivity * 1e-30;
};

}  // namespace gyrorotor
