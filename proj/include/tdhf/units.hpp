#pragma once

#include <numbers>

namespace tdhf {

/// Everything inside the library runs in Hartree atomic units
/// (hbar = m0 = e = 4*pi*eps0 = 1). Laboratory units (nm, eV, fs, V/m)
/// appear only at the configuration and report boundary.
struct PhysicalConstants {
  static constexpr double hbar = 1.0;
  static constexpr double electron_mass = 1.0;
  static constexpr double elementary_charge = 1.0;
  static constexpr double eps0 = 1.0 / (4.0 * std::numbers::pi);
  /// Coulomb prefactor e^2 / (4 pi eps0).
  static constexpr double coulomb = 1.0;
  static constexpr double speed_of_light = 137.035999084;
};

// CODATA 2018 conversion factors.
namespace units {

inline constexpr double bohr_nm = 0.0529177210903;
inline constexpr double hartree_eV = 27.211386245988;
inline constexpr double au_time_fs = 0.024188843265857;
inline constexpr double au_field_V_per_m = 5.14220674763e11;

constexpr double nm_to_bohr(double nm) { return nm / bohr_nm; }
constexpr double bohr_to_nm(double bohr) { return bohr * bohr_nm; }
constexpr double eV_to_hartree(double ev) { return ev / hartree_eV; }
constexpr double hartree_to_eV(double ha) { return ha * hartree_eV; }
constexpr double fs_to_au(double fs) { return fs / au_time_fs; }
constexpr double au_to_fs(double t) { return t * au_time_fs; }
constexpr double V_per_m_to_au(double f) { return f / au_field_V_per_m; }
constexpr double au_to_V_per_m(double f) { return f * au_field_V_per_m; }

/// Angular frequency of light with the given vacuum wavelength (both a.u.).
constexpr double photon_omega(double wavelength) {
  return 2.0 * std::numbers::pi * PhysicalConstants::speed_of_light / wavelength;
}

/// Nonrelativistic speed of an electron with the given kinetic energy.
double electron_speed(double kinetic_energy);

}  // namespace units
}  // namespace tdhf
